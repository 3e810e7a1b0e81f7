"""Integration backend selection: compiled core if built, numpy fallback otherwise."""

from . import fallback

try:
    from . import _core
except ImportError:  # extension not built
    _core = None

_active = _core if _core is not None else fallback

BACKEND = _active.BACKEND_NAME
STATUS_OK = fallback.STATUS_OK
STATUS_NONFINITE = fallback.STATUS_NONFINITE
STATUS_DT_UNDERFLOW = fallback.STATUS_DT_UNDERFLOW

run_fixed_rk4 = _active.run_fixed_rk4
run_adaptive = _active.run_adaptive


def get_backend(name: str):
    """Explicit backend module by name ('compiled' or 'python'); for benchmarks
    and cross-validation tests."""
    if name == "python":
        return fallback
    if name == "compiled":
        if _core is None:
            raise RuntimeError("compiled kernel is not available")
        return _core
    raise ValueError(f"unknown backend {name!r}")


def available_backends():
    out = ["python"]
    if _core is not None:
        out.insert(0, "compiled")
    return out
