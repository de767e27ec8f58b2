# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Hot loop of the triangle quadrature.

Same contract as the numpy fallback in pfaffsys.quadrature: one call
evaluates every requested form pair on the full tensor grid of one
triangle.  The interpolation uses the complements eu = 1-u, ev = 1-v
passed in explicitly so that nodes crowding an edge keep full relative
precision even when u rounds to 1.0.

The weight product is accumulated in log space.  Forms sharing an
exponent are multiplied together first, splitting off binary exponents
with frexp so the running product cannot underflow, which leaves one
log() per distinct exponent and one exp() per node.
"""

import numpy as np

from libc.math cimport M_LN2, exp, fabs, frexp, log


def pairs_level(const double[:, ::1] corner_vals, const double[::1] exps,
                const Py_ssize_t[:, ::1] pairs,
                const double[::1] u, const double[::1] eu, const double[::1] w,
                double jac):
    cdef Py_ssize_t nf = corner_vals.shape[0]
    cdef Py_ssize_t npairs = pairs.shape[0]
    cdef Py_ssize_t nn = u.shape[0]
    out_arr = np.zeros(npairs, dtype=np.float64)
    scratch = np.empty(nf, dtype=np.float64)
    # mix[iv, i] = ev * corner_vals[i, 1] + v * corner_vals[i, 2]
    mix_arr = np.empty((nn, nf), dtype=np.float64)

    # forms grouped by exponent; zero exponents drop out of the product
    # but their values are still needed for the pair denominators
    exps_arr = np.asarray(exps)
    nz = np.flatnonzero(exps_arr)
    gexp_arr, inverse = np.unique(exps_arr[nz], return_inverse=True)
    order = np.argsort(inverse, kind="stable")
    gidx_arr = nz[order].astype(np.intp)
    bounds = np.zeros(len(gexp_arr) + 1, dtype=np.intp)
    np.cumsum(np.bincount(inverse, minlength=len(gexp_arr)), out=bounds[1:])

    cdef double[::1] out = out_arr
    cdef double[::1] lv = scratch
    cdef double[:, ::1] mix = mix_arr
    cdef double[::1] gexp = gexp_arr
    cdef Py_ssize_t[::1] gidx = gidx_arr
    cdef Py_ssize_t[::1] gstart = bounds
    cdef Py_ssize_t ng = gexp_arr.shape[0]
    cdef double uu, cu, wu, s, m, base, den
    cdef Py_ssize_t iu, iv, i, p, gi, t
    cdef int ex, etot
    for iv in range(nn):
        for i in range(nf):
            mix[iv, i] = eu[iv] * corner_vals[i, 1] + u[iv] * corner_vals[i, 2]
    for iu in range(nn):
        uu = u[iu]
        cu = eu[iu]
        wu = w[iu] * uu * jac
        for iv in range(nn):
            for i in range(nf):
                lv[i] = fabs(cu * corner_vals[i, 0] + uu * mix[iv, i])
            s = 0.0
            for gi in range(ng):
                m = 1.0
                etot = 0
                for t in range(gstart[gi], gstart[gi + 1]):
                    m *= frexp(lv[gidx[t]], &ex)
                    etot += ex
                # a zero form value makes m == 0 and s == -inf here
                s += gexp[gi] * (log(m) + etot * M_LN2)
            base = wu * w[iv] * exp(s)
            if base == 0.0:
                continue
            for p in range(npairs):
                den = lv[pairs[p, 0]] * lv[pairs[p, 1]]
                # deep-tail nodes can underflow the denominator; their true
                # contribution is below double precision
                if den > 0.0:
                    out[p] += base / den
    return out_arr
