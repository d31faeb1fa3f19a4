"""Select the kernel implementation at import time.

The compiled extension is preferred.  Set ``V2ICPD_PURE_PYTHON=1`` to force
the fallback (used by the backend benchmark and the equivalence tests).
"""

import os

from . import _pykernels

kernels = _pykernels
BACKEND = "python"

if os.environ.get("V2ICPD_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels
    except ImportError:  # extension not built
        pass
    else:
        kernels = _ckernels
        BACKEND = "cython"
