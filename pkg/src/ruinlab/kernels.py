"""Backend selection for the hot loops.

The compiled extension is used when it imports; setting
``RUINLAB_PURE_PYTHON=1`` forces the numpy fallback.
"""

import os

from . import _kernels_py

BACKEND = "python"
bellman_rows = _kernels_py.bellman_rows
simulate_rows = _kernels_py.simulate_rows

if os.environ.get("RUINLAB_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        pass
    else:
        BACKEND = "compiled"
        bellman_rows = _compiled.bellman_rows
        simulate_rows = _compiled.simulate_rows


def worker_count() -> int:
    """Worker cap from ``RUINLAB_THREADS``, defaulting to the CPU count."""
    raw = os.environ.get("RUINLAB_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return os.cpu_count() or 1
