"""Kernel backend selection.

The compiled Cython core (`outgraph.kernels._core`) is preferred when it
built successfully; otherwise the pure-numpy reference backend is used.
Set ``OUTGRAPH_BACKEND=python`` or ``=compiled`` to force a choice, or call
:func:`use_backend` at runtime (the benchmark and the parity tests do).
"""

import os

from . import _ref

_FUNCTIONS = [
    "hard_threshold",
    "soft_threshold",
    "smooth_threshold",
    "whittle_terms",
    "whiten_columns",
    "curve_grad",
    "link_psi",
    "theta_rows",
    "kappa_chain",
]

_BACKENDS = {"python": _ref}
try:
    from . import _core  # compiled extension, may be absent

    if all(hasattr(_core, fn) for fn in _FUNCTIONS):
        _BACKENDS["compiled"] = _core
    else:
        _core = None
except ImportError:
    _core = None

_active = None


def available_backends():
    return sorted(_BACKENDS)

def backend_name() -> str:
    return _active

def use_backend(name: str) -> str:
    """Switch the active backend; returns the previously active name."""
    global _active
    if name not in _BACKENDS:
        raise ValueError(f"unknown backend {name!r}; have {available_backends()}")
    previous = _active
    impl = _BACKENDS[name]
    for fn in _FUNCTIONS:
        globals()[fn] = getattr(impl, fn)
    _active = name
    return previous


_requested = os.environ.get("OUTGRAPH_BACKEND", "").strip().lower()
if _requested:
    if _requested in ("c", "cython", "compiled"):
        _requested = "compiled"
    elif _requested in ("py", "ref", "python", "numpy"):
        _requested = "python"
    use_backend(_requested)  # unknown names raise, deliberately
else:
    use_backend("compiled" if _core is not None else "python")

__all__ = _FUNCTIONS + ["available_backends", "backend_name", "use_backend"]
