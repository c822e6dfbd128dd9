"""Select the jet-product kernel at import time.

The compiled extension is used when it was built; set
``CFOLIATION_BACKEND=python`` to force the numpy fallback.
"""

import os

from . import _kernels_py

_requested = os.environ.get("CFOLIATION_BACKEND", "auto").lower()

if _requested == "python":
    kernels = _kernels_py
else:
    try:
        from . import _jetkernels as kernels
    except ImportError:
        if _requested == "cython":
            raise
        kernels = _kernels_py

BACKEND = kernels.NAME
