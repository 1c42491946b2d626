"""Switch between numba-compiled kernels and their numpy fallbacks.

Set ``QWHIT_NUMBA=0`` to force the pure-numpy code paths; the default is to
use numba when it imports cleanly.
"""

import logging
import os

logger = logging.getLogger(__name__)

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False


def numba_requested():
    return os.environ.get("QWHIT_NUMBA", "1").strip().lower() not in ("0", "false", "no", "off")


USE_NUMBA = HAVE_NUMBA and numba_requested()
if numba_requested() and not HAVE_NUMBA:  # pragma: no cover
    logger.warning("numba not importable; falling back to numpy kernels")


def njit(*args, **kwargs):
    """``numba.njit`` when available, otherwise an identity decorator."""
    if HAVE_NUMBA:
        kwargs.setdefault("cache", True)
        return numba.njit(*args, **kwargs)

    def wrap(fn):
        return fn

    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return wrap


def thread_count():
    raw = os.environ.get("QWHIT_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        n = os.cpu_count() or 1
    return max(1, n)
