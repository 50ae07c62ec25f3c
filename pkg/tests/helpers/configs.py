from pathlib import Path
from typing import Sequence

import rootutils
from hydra import compose, initialize
from hydra.core.global_hydra import GlobalHydra
from omegaconf import DictConfig, open_dict


def compose_run(tmp_path: Path, overrides: Sequence[str] = ()) -> DictConfig:
    """Composes ``configs/run.yaml`` with ``overrides``, without progress bars and writing into ``tmp_path``."""
    GlobalHydra.instance().clear()
    with initialize(version_base="1.3", config_path="../../configs"):
        cfg = compose(config_name="run.yaml", return_hydra_config=True, overrides=list(overrides))
        with open_dict(cfg):
            cfg.paths.root_dir = str(rootutils.find_root(indicator=".project-root"))
            cfg.paths.output_dir = str(tmp_path)
            cfg.paths.log_dir = str(tmp_path)
            cfg.solver.progress = False
            cfg.solver.snapshot_stride = 0
            cfg.extras.print_config = False
    GlobalHydra.instance().clear()
    return cfg
