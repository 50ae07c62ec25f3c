import argparse
import logging
import os
from pathlib import Path
from typing import List

import rootutils
from hydra import compose, initialize
from omegaconf import OmegaConf

from cosserat.bench.scenarios import SCENARIOS
from cosserat.fem.quadrature import CONTINUA

# scenario -> matching mesh group
MESHES = {"biaxial": "biaxial", "footing": "footing", "custom": "file"}


def validate_args(args):
    if args.mesh_level is not None:
        assert args.mesh_level >= 1, "Mesh level must be a positive integer"
    if args.max_steps is not None:
        assert args.max_steps > 0, "Number of load steps must be greater than 0"
    if args.tol is not None:
        assert args.tol > 0, "Newton tolerance must be positive"
    if getattr(args, "levels", None):
        assert all(level >= 1 for level in args.levels), "Mesh levels must be positive integers"
    return args


def build_overrides(args) -> List[str]:
    """Translates CLI flags into Hydra overrides; ``--config`` naming an experiment becomes ``experiment=<name>``."""
    overrides = []
    if args.config and not Path(args.config).is_file():
        overrides.append(f"experiment={Path(args.config).stem}")
    if args.scenario:
        overrides += [f"scenario={args.scenario}", f"mesh={MESHES[args.scenario]}"]
    if args.continuum:
        overrides.append(f"continuum={args.continuum}")
    if args.mesh_level is not None:
        overrides.append(f"mesh.level={args.mesh_level}")
    if args.max_steps is not None:
        overrides.append(f"solver.schedule.n_steps={args.max_steps}")
    if args.tol is not None:
        overrides.append(f"solver.newton.rtol={args.tol}")
    if getattr(args, "levels", None):
        overrides.append(f"refine_levels=[{','.join(str(level) for level in args.levels)}]")
    overrides.append(f"paths.output_dir={Path(args.out_dir).resolve()}")
    overrides += args.overrides
    return overrides


def compose_config(args):
    """Composes ``configs/run.yaml`` with the CLI overrides; a ``--config`` yaml file is merged on top."""
    try:
        root = rootutils.find_root(search_from=__file__, indicator=".project-root")
    except FileNotFoundError:
        root = Path.cwd()
    os.environ.setdefault("PROJECT_ROOT", str(root))

    with initialize(version_base="1.3", config_path="../configs"):
        cfg = compose(config_name="run.yaml", overrides=build_overrides(args))

    if args.config and Path(args.config).is_file():
        OmegaConf.set_struct(cfg, False)
        cfg = OmegaConf.merge(cfg, OmegaConf.load(args.config))
        OmegaConf.set_struct(cfg, True)
    return cfg


def print_config(args):
    print("[!] Configurations: ")
    print(f"\t- Command: {args.command}")
    print(f"\t- Config: {args.config}")
    print(f"\t- Scenario: {args.scenario}")
    print(f"\t- Continuum: {args.continuum}")
    print(f"\t- Mesh level: {args.mesh_level if args.command == 'run' else args.levels}")
    print(f"\t- Output folder: {args.out_dir}")


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--config",
        type=str,
        default=None,
        help="Experiment name under configs/experiment or a yaml file merged on top of the run config",
    )
    parser.add_argument("--scenario", type=str, default=None, choices=SCENARIOS, help="Scenario to run")
    parser.add_argument("--continuum", type=str, default=None, choices=CONTINUA, help="Continuum model")
    parser.add_argument("--out-dir", type=str, default=os.getcwd(), help="Output folder (default: current dir)")
    parser.add_argument("--max-steps", type=int, default=None, help="Number of load steps")
    parser.add_argument("--tol", type=float, default=None, help="Relative Newton tolerance")
    parser.add_argument("overrides", nargs="*", default=[], help="Extra Hydra overrides, e.g. material.moduli.G=1e5")


def cli():
    parser = argparse.ArgumentParser(description="Cosserat elastoplastic benchmarks: biaxial test and strip footing")
    commands = parser.add_subparsers(dest="command", required=True)

    run_parser = commands.add_parser("run", help="Run one scenario")
    _add_common(run_parser)
    run_parser.add_argument("--mesh-level", type=int, default=None, help="Mesh density level")

    refine_parser = commands.add_parser("refine", help="Run a scenario over several mesh levels and compare")
    _add_common(refine_parser)
    refine_parser.add_argument("--levels", type=int, nargs="+", default=[1, 2, 3], help="Mesh levels to sweep")
    refine_parser.set_defaults(mesh_level=None)

    args = parser.parse_args()
    args = validate_args(args)
    print_config(args)

    logging.basicConfig(level=logging.INFO, format="[%(asctime)s][%(name)s][%(levelname)s] - %(message)s")
    cfg = compose_config(args)

    # imported late: the run module sets up the project root on import
    from cosserat import run as run_module  # pylint: disable=import-outside-toplevel
    from cosserat import utils  # pylint: disable=import-outside-toplevel

    utils.extras(cfg)
    summary, _ = run_module.run(cfg)
    print(f"[+] Done! Outputs in {cfg.paths.output_dir}")
    for key in ("peak", "plateau", "peak_spread", "post_peak_difference", "completed"):
        if key in summary:
            print(f"\t- {key}: {summary[key]}")


if __name__ == "__main__":
    cli()
