"""Integration kernel backends.

The hot loop (adaptive Dormand-Prince stepping with wall-event localization)
exists twice: a compiled Cython extension and a pure-Python twin.  The
compiled one is preferred when importable; set ``POLYSHOOT_PURE_PYTHON=1`` to
force the fallback.  Both expose the same ``integrate_core`` contract and are
cross-checked in the test suite and the benchmark.
"""

import os

from . import _rk45_py

if os.environ.get("POLYSHOOT_PURE_PYTHON"):
    _backend = _rk45_py
else:
    try:
        from . import _rk45_cy as _backend  # type: ignore[no-redef]
    except ImportError:
        _backend = _rk45_py

BACKEND_NAME = _backend.NAME
integrate_core = _backend.integrate_core

# terminal statuses shared by both kernels
WALL_HIT = _rk45_py.WALL_HIT
DECAYED = _rk45_py.DECAYED
TRUNCATED = _rk45_py.TRUNCATED
STEP_LIMIT = _rk45_py.STEP_LIMIT
STEP_UNDERFLOW = _rk45_py.STEP_UNDERFLOW
MONOTONE_FAIL = _rk45_py.MONOTONE_FAIL


def available_backends() -> dict:
    """Map backend name -> integrate_core callable for everything importable."""
    out = {"python": _rk45_py.integrate_core}
    try:
        from . import _rk45_cy

        out["cython"] = _rk45_cy.integrate_core
    except ImportError:
        pass
    return out
