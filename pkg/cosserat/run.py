from typing import Any, Dict, Optional, Tuple

import hydra
import rootutils
from omegaconf import DictConfig

from cosserat import utils
from cosserat.bench.outputs import emit_outputs, write_refinement
from cosserat.bench.scenarios import refine, run_scenario, validate_config

rootutils.setup_root(__file__, indicator=".project-root", pythonpath=True)
# ------------------------------------------------------------------------------------ #
# the setup_root above is equivalent to:
# - adding project root dir to PYTHONPATH
# - setting up PROJECT_ROOT environment variable
#       (which is used as a base for paths in "configs/paths/default.yaml")
# - loading environment variables from ".env" in root dir
#
# more info: https://github.com/ashleve/rootutils
# ------------------------------------------------------------------------------------ #


log = utils.get_pylogger(__name__)


@utils.task_wrapper
def run(cfg: DictConfig) -> Tuple[Dict[str, Any], Dict[str, Any]]:
    """Runs one benchmark scenario, or a mesh-refinement sweep when ``cfg.refine_levels`` is set, and writes the
    configured outputs.

    This method is wrapped in the @task_wrapper decorator, which logs failures and reports the output directory.

    :param cfg: A DictConfig configuration composed by Hydra.
    :return: A tuple with the run summary and a dict with all instantiated objects.
    """
    validate_config(cfg)

    log.info("Instantiating writers...")
    writers = utils.instantiate_writers(cfg.get("output"))

    object_dict: Dict[str, Any] = {"cfg": cfg, "writers": writers}

    levels = cfg.get("refine_levels")
    if levels:
        log.info(f"Starting refinement sweep over mesh levels {list(levels)}")
        sweep = refine(cfg, list(levels))
        write_refinement(sweep, writers, cfg.paths.output_dir)
        object_dict["sweep"] = sweep
        return sweep["summary"], object_dict

    log.info("Starting run!")
    result = run_scenario(cfg)
    emit_outputs(result, writers, cfg.paths.output_dir)
    object_dict["result"] = result
    return result.summary, object_dict


@hydra.main(version_base="1.3", config_path="../configs", config_name="run.yaml")
def main(cfg: DictConfig) -> Optional[float]:
    """Main entry point for benchmark runs.

    :param cfg: DictConfig configuration composed by Hydra.
    :return: Optional[float] with the summary value named by ``cfg.reported_value``.
    """
    # apply extra utilities
    # (e.g. ignore python warnings, print cfg tree, etc.)
    utils.extras(cfg)

    summary, _ = run(cfg)

    # safely retrieve a scalar for hydra sweeps
    return utils.get_summary_value(summary, cfg.get("reported_value"))


if __name__ == "__main__":
    main()  # pylint: disable=no-value-for-parameter
