"""pfaffsys: exact connection matrices and verified Pfaffian systems for
families of hyperplane-arrangement integrals."""

__version__ = "0.1.0"

from .errors import PfaffsysError  # noqa: F401
