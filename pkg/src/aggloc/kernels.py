"""Backend selection for the greedy assignment kernels.

The compiled extension is preferred when it was built; `AGGLOC_PURE_PYTHON=1`
forces the numpy fallback (used by the benchmark and the equivalence tests).
"""

import os

if os.environ.get("AGGLOC_PURE_PYTHON") == "1":
    from . import _kernels_py as _impl

    BACKEND = "python"
else:
    try:
        from . import _kernels_cy as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        from . import _kernels_py as _impl

        BACKEND = "python"

top_k_fill = _impl.top_k_fill
capacity_fill = _impl.capacity_fill
