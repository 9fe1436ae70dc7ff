# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels for the solver hot path.

Signatures mirror ``_numpy_backend``; all loops run with fixed order so
results are deterministic for fixed inputs.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

# Cone codes shared with the NumPy backend (see _kernels/__init__.py).
cdef int _ZERO = 0
cdef int _NONNEG = 1
cdef int _NONPOS = 2
cdef int _FREE = 3


cdef inline double _clip(double v, double lo, double hi) nogil:
    if v < lo:
        return lo
    if v > hi:
        return hi
    return v


def csr_matvec(const long long[::1] indptr, const long long[::1] indices,
               const double[::1] data, const double[::1] x, Py_ssize_t nrows):
    """y = A @ x for a CSR matrix given by (indptr, indices, data)."""
    out_arr = np.zeros(nrows, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, k
    cdef double acc
    with nogil:
        for i in range(nrows):
            acc = 0.0
            for k in range(indptr[i], indptr[i + 1]):
                acc += data[k] * x[indices[k]]
            out[i] = acc
    return out_arr


def csr_matvec_t(const long long[::1] indptr, const long long[::1] indices,
                 const double[::1] data, const double[::1] x, Py_ssize_t ncols):
    """y = A.T @ x for a CSR matrix with nrows = len(x)."""
    out_arr = np.zeros(ncols, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t nrows = indptr.shape[0] - 1
    cdef Py_ssize_t i, k
    cdef double xi
    with nogil:
        for i in range(nrows):
            xi = x[i]
            if xi != 0.0:
                for k in range(indptr[i], indptr[i + 1]):
                    out[indices[k]] += data[k] * xi
    return out_arr


def sym_matvec(const long long[::1] indptr, const long long[::1] indices,
               const double[::1] data, const double[::1] diag, const double[::1] x):
    """y = S @ x where only the upper triangle of symmetric S is stored."""
    cdef Py_ssize_t n = x.shape[0]
    out_arr = np.zeros(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, k, j
    cdef double acc, v
    with nogil:
        for i in range(n):
            acc = 0.0
            for k in range(indptr[i], indptr[i + 1]):
                j = indices[k]
                v = data[k]
                acc += v * x[j]
                if j != i:
                    out[j] += v * x[i]
            out[i] += acc
    return out_arr


def clamp(const double[::1] x, const double[::1] lo, const double[::1] hi):
    """Componentwise projection onto the box [lo, hi]."""
    cdef Py_ssize_t n = x.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i
    with nogil:
        for i in range(n):
            out[i] = _clip(x[i], lo[i], hi[i])
    return out_arr


def cone_project(const double[::1] z, const signed char[::1] codes):
    """Componentwise projection onto sign cones encoded as int8 codes."""
    cdef Py_ssize_t n = z.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i
    cdef signed char c
    cdef double v
    with nogil:
        for i in range(n):
            c = codes[i]
            v = z[i]
            if c == _ZERO:
                out[i] = 0.0
            elif c == _NONNEG:
                out[i] = v if v > 0.0 else 0.0
            elif c == _NONPOS:
                out[i] = v if v < 0.0 else 0.0
            else:
                out[i] = v
    return out_arr


def diag_prox_step(const double[::1] xk, const double[::1] q, const double[::1] linear,
                   double tau, const double[::1] lo, const double[::1] hi):
    """Closed-form box-constrained prox step for a diagonal quadratic."""
    cdef Py_ssize_t n = xk.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i
    with nogil:
        for i in range(n):
            out[i] = _clip((xk[i] - tau * linear[i]) / (1.0 + tau * q[i]), lo[i], hi[i])
    return out_arr


def natural_res_sq(const double[::1] x, const double[::1] g,
                   const double[::1] lo, const double[::1] hi):
    """Squared norm of x - proj_box(x - g), the fixed-point residual."""
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t i
    cdef double acc = 0.0
    cdef double d
    with nogil:
        for i in range(n):
            d = x[i] - _clip(x[i] - g[i], lo[i], hi[i])
            acc += d * d
    return acc


def dual_step(const double[::1] y, const double[::1] ax, double sigma,
              const double[::1] lo, const double[::1] hi):
    """y+ = sigma * (w - proj_box(w)) with w = y/sigma + ax."""
    cdef Py_ssize_t m = y.shape[0]
    out_arr = np.empty(m, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i
    cdef double w
    with nogil:
        for i in range(m):
            w = y[i] / sigma + ax[i]
            out[i] = sigma * (w - _clip(w, lo[i], hi[i]))
    return out_arr


def lincomb3(double a, const double[::1] x, double b, const double[::1] y,
             double c, const double[::1] z):
    """a*x + b*y + c*z."""
    cdef Py_ssize_t n = x.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i
    with nogil:
        for i in range(n):
            out[i] = a * x[i] + b * y[i] + c * z[i]
    return out_arr


def axpby(double a, const double[::1] x, double b, const double[::1] y):
    """a*x + b*y."""
    cdef Py_ssize_t n = x.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i
    with nogil:
        for i in range(n):
            out[i] = a * x[i] + b * y[i]
    return out_arr
