import functools
import time

from pyefc.logging_utility.logger import timer_logger
from pyefc.logging_utility.logging_messages import TIMED_CALL


def timer_decorator(f):
    """Log the wall time of each call to `f` on the Timer logger, also when the call raises."""
    @functools.wraps(f)
    def wrapper(*args, **kwargs):
        start = time.perf_counter()
        try:
            return f(*args, **kwargs)
        finally:
            timer_logger.info(TIMED_CALL.format(f.__qualname__, time.perf_counter() - start))

    return wrapper
