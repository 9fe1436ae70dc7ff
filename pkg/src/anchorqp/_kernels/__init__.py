"""Kernel backend selection.

The compiled Cython core (``_core``) is preferred when importable; the
NumPy fallback is used otherwise, or when ``ANCHORQP_PURE_PYTHON`` is set.
``select_backend`` rebinds the module-level functions so tests and the
kernel benchmark can switch implementations at runtime.
"""

import os

from . import _numpy_backend

# Componentwise cone codes used by cone_project; must match both backends.
ZERO, NONNEG, NONPOS, FREE = 0, 1, 2, 3

_KERNEL_NAMES = (
    "csr_matvec",
    "csr_matvec_t",
    "sym_matvec",
    "clamp",
    "cone_project",
    "diag_prox_step",
    "natural_res_sq",
    "dual_step",
    "lincomb3",
    "axpby",
)

_BACKENDS = {"numpy": _numpy_backend}
try:
    from . import _core
except ImportError:
    _core = None
else:
    _BACKENDS["cython"] = _core

_active = None


def select_backend(name):
    """Activate the named backend ('numpy' or 'cython')."""
    global _active
    module = _BACKENDS[name]
    for fn in _KERNEL_NAMES:
        globals()[fn] = getattr(module, fn)
    _active = name


def active_backend():
    return _active


def available_backends():
    return sorted(_BACKENDS)


def default_backend():
    if os.environ.get("ANCHORQP_PURE_PYTHON") or "cython" not in _BACKENDS:
        return "numpy"
    return "cython"


select_backend(default_backend())
