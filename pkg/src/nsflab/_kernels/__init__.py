"""Hot stencil kernels with a compiled core and a numpy fallback.

The compiled extension is used when it imports; set ``NSFLAB_BACKEND=python``
to force the fallback.  ``BACKEND`` names the active choice.
"""

import os

from . import _fallback

fallback = _fallback
compiled = None

if os.environ.get("NSFLAB_BACKEND", "").lower() != "python":
    try:
        from . import _ckernels as compiled
    except ImportError:  # extension not built
        compiled = None

_active = compiled if compiled is not None else _fallback
BACKEND = "cython" if compiled is not None else "python"

tension_f = _active.tension_f
rhs = _active.rhs
