"""Backend selection for the hot kernels.

The compiled extension (`sleepmdp._core`, built from Cython) is preferred
when importable; otherwise the pure-numpy fallback in `_kernels_py` is used.
Set SLEEPMDP_BACKEND=python to force the fallback even when the extension is
built (the benchmark and the backend-agreement tests do this).  Both backends
implement the same functions with the same floating-point semantics.
"""

from __future__ import annotations

import os

from . import _kernels_py

try:
    from . import _core
except ImportError:  # extension not built; the package still works
    _core = None

HAVE_COMPILED = _core is not None

_forced = os.environ.get("SLEEPMDP_BACKEND", "").strip().lower()
if _forced not in ("", "python", "compiled"):
    raise RuntimeError(
        f"SLEEPMDP_BACKEND={_forced!r} not understood (use 'python' or 'compiled')"
    )
if _forced == "compiled" and not HAVE_COMPILED:
    raise RuntimeError("SLEEPMDP_BACKEND=compiled but the extension is not built")

if _forced == "python" or not HAVE_COMPILED:
    _impl = _kernels_py
    ACTIVE = "python"
else:
    _impl = _core
    ACTIVE = "compiled"


def get_impl(name: str):
    """Explicit access to one backend (used by the benchmark)."""
    if name == "python":
        return _kernels_py
    if name == "compiled":
        if not HAVE_COMPILED:
            raise RuntimeError("compiled backend requested but the extension is not built")
        return _core
    raise ValueError(f"unknown backend {name!r}")


vi_sweep = _impl.vi_sweep
qfactor_fill = _impl.qfactor_fill
policy_sweep = _impl.policy_sweep
run_episodes = _impl.run_episodes
