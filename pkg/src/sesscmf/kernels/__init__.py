"""Kernel backend selection.

The compiled extension is preferred when importable; the pure-NumPy
fallback is used otherwise. Set SESSCMF_KERNELS=pure|native to force one.
"""

import os

from . import pure as _pure

_BACKENDS = {"pure": _pure}
try:
    from . import _native as _native_mod

    _BACKENDS["native"] = _native_mod
except ImportError:
    _native_mod = None

_forced = os.environ.get("SESSCMF_KERNELS")
if _forced:
    if _forced not in _BACKENDS:
        raise ImportError(
            f"SESSCMF_KERNELS={_forced!r} requested but that backend is "
            f"unavailable (have: {sorted(_BACKENDS)})"
        )
    _active = _BACKENDS[_forced]
else:
    _active = _BACKENDS.get("native", _pure)


def active_backend() -> str:
    """Name of the backend used by the training routines."""
    return _active.BACKEND_NAME


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_BACKENDS))


def get_backend(name: str):
    """Return a backend module by name ('pure' or 'native')."""
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(
            f"unknown kernel backend {name!r} (have: {sorted(_BACKENDS)})"
        ) from None


solve_rows_joint = _active.solve_rows_joint
solve_rows_wmf = _active.solve_rows_wmf
