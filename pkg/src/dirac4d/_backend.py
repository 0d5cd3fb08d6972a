"""Import-time selection between the compiled and the numpy core.

The hot assembly loops ship twice with identical signatures: a Cython
extension (:mod:`dirac4d._corex`, built by ``setup.py`` when a C
toolchain is present) and a vectorized numpy fallback
(:mod:`dirac4d._core_py`).  Whichever imported wins; set the
environment variable ``DIRAC4D_NO_EXT=1`` before import to force the
fallback (used by the backend benchmark and the equivalence tests).

``BACKEND`` records the choice ("compiled" or "python") and is echoed
into experiment reports.
"""
import os

from . import _core_py

_impl = _core_py
BACKEND = "python"
if os.environ.get("DIRAC4D_NO_EXT") != "1":
    try:
        from . import _corex as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        pass

dirac_blocks = _impl.dirac_blocks
profile_blocks = _impl.profile_blocks
branch_difference_sweep = _impl.branch_difference_sweep

__all__ = [
    "BACKEND",
    "dirac_blocks",
    "profile_blocks",
    "branch_difference_sweep",
]
