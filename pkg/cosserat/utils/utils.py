import warnings
from typing import Any, Callable, Dict, Optional, Tuple

from omegaconf import DictConfig

from cosserat.utils import pylogger, rich_utils

log = pylogger.get_pylogger(__name__)


def extras(cfg: DictConfig) -> None:
    """Applies optional utilities before the run is started.

    Utilities:
        - Ignoring python warnings
        - Rich config printing

    :param cfg: A DictConfig object containing the config tree.
    """
    if not cfg.get("extras"):
        log.warning("Extras config not found! <cfg.extras=null>")
        return

    if cfg.extras.get("ignore_warnings"):
        log.info("Disabling python warnings! <cfg.extras.ignore_warnings=True>")
        warnings.filterwarnings("ignore")

    if cfg.extras.get("print_config"):
        log.info("Printing config tree with Rich! <cfg.extras.print_config=True>")
        rich_utils.print_config_tree(cfg, resolve=True, save_to_file=True)


def task_wrapper(task_func: Callable) -> Callable:
    """Decorator that controls the failure behavior of a benchmark task.

    The wrapped task logs any exception with its traceback into the job log file, always reports where
    the outputs went and re-raises.

    Example:
    ```
    @utils.task_wrapper
    def run(cfg: DictConfig) -> Tuple[Dict[str, Any], Dict[str, Any]]:
        ...
        return summary, object_dict
    ```

    :param task_func: The task function to be wrapped.

    :return: The wrapped task function.
    """

    def wrap(cfg: DictConfig) -> Tuple[Dict[str, Any], Dict[str, Any]]:
        try:
            summary, object_dict = task_func(cfg=cfg)

        except Exception as ex:
            log.exception("")
            raise ex

        finally:
            log.info(f"Output dir: {cfg.paths.output_dir}")

        return summary, object_dict

    return wrap


def get_summary_value(summary: Dict[str, Any], key: Optional[str]) -> Optional[float]:
    """Safely retrieves a scalar from a run summary, e.g. the normalized plateau of a footing run.

    :param summary: The summary dict returned by a benchmark task.
    :param key: Name of the entry to retrieve.
    :return: The value, or ``None`` when no key is requested.
    """
    if not key:
        log.info("Summary key is None! Skipping value retrieval...")
        return None

    if key not in summary:
        raise KeyError(f"Summary value not found! <key={key}>\nAvailable keys: {sorted(summary)}")

    value = summary[key]
    log.info(f"Retrieved summary value! <{key}={value}>")

    return value
