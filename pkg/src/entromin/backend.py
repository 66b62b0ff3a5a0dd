"""Backend selection: compiled kernels when available, NumPy otherwise.

Set ENTROMIN_BACKEND=python or ENTROMIN_BACKEND=cython to force a choice;
forcing cython raises if the extension was not built.
"""

import os

_requested = os.environ.get("ENTROMIN_BACKEND", "auto").strip().lower()

if _requested in ("", "auto"):
    try:
        from . import _kernels as kernels
    except ImportError:
        from . import _kernels_py as kernels
elif _requested == "cython":
    from . import _kernels as kernels
elif _requested in ("python", "numpy"):
    from . import _kernels_py as kernels
else:
    raise ValueError(
        f"ENTROMIN_BACKEND={_requested!r} not recognized; "
        "use 'auto', 'cython', or 'python'"
    )

BACKEND = kernels.BACKEND_NAME


def get_kernels():
    return kernels
