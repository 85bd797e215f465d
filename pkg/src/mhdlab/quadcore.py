"""
Backend selector for the free-space quadrature kernels.

The compiled extension is used when present; the NumPy implementation
is the always-available fallback.  Both expose identical signatures and
agree to rounding; `benchmarks/bench_quadcore.py` times one against the
other.
"""

from __future__ import annotations

from . import _quadcore_np

try:  # compiled core is optional
    from . import _quadcore_cy

    _DEFAULT = _quadcore_cy
except ImportError:  # pragma: no cover - depends on build environment
    _quadcore_cy = None
    _DEFAULT = _quadcore_np

_active = _DEFAULT


def available_backends() -> dict:
    out = {"numpy": _quadcore_np}
    if _quadcore_cy is not None:
        out["cython"] = _quadcore_cy
    return out


def backend_name() -> str:
    return _active.BACKEND_NAME


def use_backend(name: str) -> None:
    """Force a backend ('numpy' or 'cython'); mainly for benchmarks/tests."""
    global _active
    backends = available_backends()
    if name not in backends:
        raise ValueError(f"backend {name!r} not available (have {sorted(backends)})")
    _active = backends[name]


def potential_points(px, py, cx, cy, half, frac, s_min=1e-4, split_factor=6.0):
    return _active.potential_points(px, py, cx, cy, half, frac, s_min, split_factor)


def velocity_points(px, py, cx, cy, half, frac, s_min=1e-4, split_factor=6.0):
    return _active.velocity_points(px, py, cx, cy, half, frac, s_min, split_factor)


def hessian_points(px, py, cx, cy, half, frac, s_min=1e-4, split_factor=6.0):
    return _active.hessian_points(px, py, cx, cy, half, frac, s_min, split_factor)
