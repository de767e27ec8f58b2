"""Error hierarchy.

Every failure mode that callers are expected to branch on carries a stable
string ``code`` so CLI output and logs stay machine readable.  Extra context
goes into ``details`` (a plain dict, JSON-serializable by construction).
"""

from __future__ import annotations

from typing import Any


class PfaffsysError(Exception):
    code = "PFAFFSYS_ERROR"

    def __init__(self, message: str, **details: Any):
        super().__init__(message)
        self.message = message
        self.details = details

    def record(self) -> dict:
        return {"code": self.code, "message": self.message, "details": self.details}


class ZeroDenominatorError(PfaffsysError):
    code = "ZERO_DENOMINATOR"


class MixedPoolError(PfaffsysError):
    code = "MIXED_POOL_ERROR"


class InconsistentSystemError(PfaffsysError):
    code = "INCONSISTENT_SYSTEM"


class UndeclaredFactorError(PfaffsysError):
    code = "UNDECLARED_FACTOR"


class SingularBasepointError(PfaffsysError):
    code = "SINGULAR_BASEPOINT"


class NbcDimMismatchError(PfaffsysError):
    code = "NBC_DIM_MISMATCH"


class NonTerminationGuardError(PfaffsysError):
    code = "NON_TERMINATION_GUARD"


class UnsupportedDimensionError(PfaffsysError):
    code = "UNSUPPORTED_DIMENSION"


class NotBetaNbcError(PfaffsysError):
    code = "NOT_BETANBC"


class ResonantWeightsError(PfaffsysError):
    code = "RESONANT_WEIGHTS"


class NotFlatError(PfaffsysError):
    code = "NOT_FLAT"


class NTooSmallError(PfaffsysError):
    code = "N_TOO_SMALL"


class SingularPointError(PfaffsysError):
    code = "SINGULAR_POINT"


class DegenerateGaugeError(PfaffsysError):
    code = "DEGENERATE_GAUGE"


class NonconvergentExponentError(PfaffsysError):
    code = "NONCONVERGENT_EXPONENT"


class ToleranceNotMetError(PfaffsysError):
    code = "TOLERANCE_NOT_MET"


class PathHitsSingularityError(PfaffsysError):
    code = "PATH_HITS_SINGULARITY"
