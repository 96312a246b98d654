"""Hot per-step kernels with backend selection at import time.

The compiled Cython extension (_fast) is preferred when importable; the
numpy fallback (pyfallback) is used otherwise. Set OPSTEER_KERNELS=python
to force the fallback, OPSTEER_KERNELS=compiled to require the extension.
"""

import os

from . import pyfallback

_requested = os.environ.get("OPSTEER_KERNELS", "").strip().lower()

if _requested in ("python", "py"):
    _impl = pyfallback
    BACKEND = "python"
else:
    try:
        from . import _fast as _impl

        BACKEND = "compiled"
    except ImportError:
        if _requested == "compiled":
            raise ImportError(
                "OPSTEER_KERNELS=compiled but the C extension is not built; "
                "run `python setup.py build_ext --inplace` or reinstall"
            ) from None
        _impl = pyfallback
        BACKEND = "python"

mix_step = _impl.mix_step
predict_opinion = _impl.predict_opinion
regressor_correction = _impl.regressor_correction
schedule_rollout = _impl.schedule_rollout


def backend_name() -> str:
    """Name of the kernel backend selected at import ('compiled' or 'python')."""
    return BACKEND
