"""NumPy fallback for the hot kernels.

Mirrors the signatures of the compiled extension ``_core`` exactly; selected
at import time when the extension is unavailable (or forced via the
``ANCHORQP_PURE_PYTHON`` environment variable).
"""

import numpy as np

# Cone codes shared with the compiled backend (see _kernels/__init__.py).
_ZERO, _NONNEG, _NONPOS, _FREE = 0, 1, 2, 3


def csr_matvec(indptr, indices, data, x, nrows):
    """y = A @ x for a CSR matrix given by (indptr, indices, data)."""
    row_ids = np.repeat(np.arange(nrows, dtype=np.int64), np.diff(indptr))
    return np.bincount(row_ids, weights=data * x[indices], minlength=nrows).astype(np.float64)


def csr_matvec_t(indptr, indices, data, x, ncols):
    """y = A.T @ x for a CSR matrix with nrows = len(x)."""
    nrows = len(indptr) - 1
    row_ids = np.repeat(np.arange(nrows, dtype=np.int64), np.diff(indptr))
    return np.bincount(indices, weights=data * x[row_ids], minlength=ncols).astype(np.float64)


def sym_matvec(indptr, indices, data, diag, x):
    """y = S @ x where only the upper triangle of symmetric S is stored.

    ``diag`` holds the diagonal of S (zeros where absent), used to undo the
    double count of diagonal entries.
    """
    n = len(x)
    return (
        csr_matvec(indptr, indices, data, x, n)
        + csr_matvec_t(indptr, indices, data, x, n)
        - diag * x
    )


def clamp(x, lo, hi):
    """Componentwise projection onto the box [lo, hi]."""
    return np.minimum(np.maximum(x, lo), hi)


def cone_project(z, codes):
    """Componentwise projection onto sign cones encoded as int8 codes."""
    out = np.where(codes == _NONNEG, np.maximum(z, 0.0), z)
    out = np.where(codes == _NONPOS, np.minimum(z, 0.0), out)
    return np.where(codes == _ZERO, 0.0, out)


def diag_prox_step(xk, q, linear, tau, lo, hi):
    """Closed-form box-constrained prox step for a diagonal quadratic."""
    return clamp((xk - tau * linear) / (1.0 + tau * q), lo, hi)


def natural_res_sq(x, g, lo, hi):
    """Squared norm of x - proj_box(x - g), the fixed-point residual."""
    d = x - clamp(x - g, lo, hi)
    return float(d @ d)


def dual_step(y, ax, sigma, lo, hi):
    """y+ = sigma * (w - proj_box(w)) with w = y/sigma + ax."""
    w = y / sigma + ax
    return sigma * (w - clamp(w, lo, hi))


def lincomb3(a, x, b, y, c, z):
    """a*x + b*y + c*z."""
    return a * x + b * y + c * z


def axpby(a, x, b, y):
    """a*x + b*y."""
    return a * x + b * y
