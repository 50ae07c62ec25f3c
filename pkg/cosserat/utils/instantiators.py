from typing import Any, List

import hydra
from omegaconf import DictConfig

from cosserat.utils import pylogger

log = pylogger.get_pylogger(__name__)


def instantiate_writers(output_cfg: DictConfig) -> List[Any]:
    """Instantiates result writers from config.

    :param output_cfg: A DictConfig whose ``_target_`` entries are writer classes.
    :return: A list of instantiated writers.
    """
    writers: List[Any] = []

    if not output_cfg:
        log.warning("No output configs found! Skipping...")
        return writers

    if not isinstance(output_cfg, DictConfig):
        raise TypeError("Output config must be a DictConfig!")

    for _, writer_conf in output_cfg.items():
        if isinstance(writer_conf, DictConfig) and "_target_" in writer_conf:
            log.info(f"Instantiating writer <{writer_conf._target_}>")  # pylint: disable=protected-access
            writers.append(hydra.utils.instantiate(writer_conf))

    return writers
