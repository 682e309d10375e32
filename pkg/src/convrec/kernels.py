"""Backend dispatch for the scoring kernels.

The compiled extension is preferred when it imported cleanly; the numpy
module is the fallback and the reference. Set ``CONVREC_PURE_PYTHON=1``
to force the fallback (used by the equivalence tests and the benchmark).
"""

import os

_forced = os.environ.get("CONVREC_PURE_PYTHON", "").strip().lower() not in ("", "0", "false")

if _forced:
    from . import _kernels_py as _impl

    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        from . import _kernels_py as _impl

        BACKEND = "python"

cond_entropy = _impl.cond_entropy


def backend_name() -> str:
    """Which kernel implementation is active: 'compiled' or 'python'."""
    return BACKEND
