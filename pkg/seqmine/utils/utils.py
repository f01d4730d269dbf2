import functools
from typing import Callable

from loguru import logger


def task_wrapper(task_func: Callable) -> Callable:
    """Optional decorator that controls the failure behavior when executing a task.

    It makes sure the exception is logged with its traceback and that the
    output directory is reported whether or not the task succeeded.

    Example:
    ```
    @utils.task_wrapper
    def run_train(spec: RunSpec) -> dict:
        ...
    ```
    """

    @functools.wraps(task_func)
    def wrap(spec, *args, **kwargs):
        try:
            return task_func(spec, *args, **kwargs)

        except Exception:
            logger.exception(f"Task <{task_func.__name__}> failed")
            raise

        finally:
            out = getattr(spec, "out", None)
            if out is not None:
                logger.info(f"Output dir: {out}")

    return wrap
