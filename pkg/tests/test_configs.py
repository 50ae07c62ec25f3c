import argparse
from pathlib import Path

import hydra
import pytest
from hydra.core.hydra_config import HydraConfig
from omegaconf import DictConfig, OmegaConf, open_dict

from cosserat.bench.scenarios import build_materials, reference_stress, validate_config
from cosserat.cli import build_overrides
from cosserat.errors import ConfigError
from cosserat.models.material import MaterialModel
from cosserat.utils import instantiate_writers
from tests.helpers.configs import compose_run

EXPERIMENTS = sorted(p.stem for p in (Path(__file__).parents[1] / "configs" / "experiment").glob("*.yaml"))
MATERIALS = sorted(p.stem for p in (Path(__file__).parents[1] / "configs" / "material").glob("*.yaml"))


def test_run_config(cfg_run: DictConfig) -> None:
    """Tests the default run configuration by instantiating its material and writers.

    :param cfg_run: A DictConfig containing a valid run configuration.
    """
    assert cfg_run
    assert cfg_run.scenario
    assert cfg_run.material
    assert cfg_run.mesh

    HydraConfig().set_config(cfg_run)

    validate_config(cfg_run)
    model = hydra.utils.instantiate(cfg_run.material)
    assert isinstance(model, MaterialModel)
    assert len(instantiate_writers(cfg_run.output)) == 3


@pytest.mark.parametrize("experiment", EXPERIMENTS)
def test_experiment_configs(experiment, tmp_path):
    cfg = compose_run(tmp_path, [f"experiment={experiment}", "continuum=cauchy"])
    validate_config(cfg)
    assert cfg.continuum == "cauchy"
    materials = build_materials(cfg)
    assert reference_stress(cfg, materials[0]) > 0.0
    if cfg.scenario.get("weak_zone"):
        assert materials[1].M < materials[0].M


@pytest.mark.parametrize("material", MATERIALS)
def test_material_configs_instantiate(material, tmp_path):
    cfg = compose_run(tmp_path, [f"material={material}"])
    model = hydra.utils.instantiate(cfg.material)
    assert model.name == material
    assert model.moduli.K_c == model.moduli.B


def test_inherited_material_overrides(tmp_path):
    cfg = compose_run(tmp_path, ["material=ngamma_mc"])
    assert cfg.material.potential_criterion.phi == 0.5
    assert cfg.material.hardening.c_i == 0.0
    assert cfg.material.yield_criterion.phi == 25.0


@pytest.mark.parametrize("material", ["tresca", "von_mises"])
def test_weak_zone_of_a_frictionless_material(material, tmp_path):
    cfg = compose_run(tmp_path, ["scenario=biaxial", f"material={material}"])
    assert cfg.scenario.weak_zone
    materials = build_materials(cfg)
    assert materials[1].name == f"{material}_weak"
    assert materials[1].M == materials[0].M == 0.0
    assert materials[1].sigma0(0.0) == materials[0].sigma0(0.0)


@pytest.mark.parametrize(
    "path,value,message",
    [
        ("scenario.kind", "triaxial", "unknown scenario"),
        ("continuum", "micropolar", "unknown continuum"),
        ("mesh.level", 9, "not defined"),
        ("mesh.level", 0, "positive integer"),
        ("mesh.kind", "gmsh", "unknown mesh kind"),
        ("solver.schedule.n_steps", 0, "at least one step"),
        ("solver.newton.rtol", 0.0, "must be positive"),
        ("scenario.normalization", "peak", "unknown normalization"),
    ],
)
def test_invalid_configs(path, value, message, tmp_path):
    cfg = compose_run(tmp_path)
    with open_dict(cfg):
        parent, _, key = path.rpartition(".")
        (OmegaConf.select(cfg, parent) if parent else cfg)[key] = value
    with pytest.raises(ConfigError, match=message):
        validate_config(cfg)


def test_reference_normalization_needs_a_value(tmp_path):
    cfg = compose_run(tmp_path, ["scenario.normalization=reference"])
    with pytest.raises(ConfigError, match="reference_stress"):
        validate_config(cfg)


def test_cli_overrides():
    args = argparse.Namespace(
        config="footing_prandtl",
        scenario="biaxial",
        continuum="cauchy",
        mesh_level=2,
        max_steps=5,
        tol=1e-6,
        levels=[1, 2],
        out_dir="results",
        overrides=["material.moduli.G=1e5"],
    )
    overrides = build_overrides(args)
    assert overrides[:4] == ["experiment=footing_prandtl", "scenario=biaxial", "mesh=biaxial", "continuum=cauchy"]
    assert "mesh.level=2" in overrides
    assert "solver.schedule.n_steps=5" in overrides
    assert "solver.newton.rtol=1e-06" in overrides
    assert "refine_levels=[1,2]" in overrides
    assert overrides[-2] == f"paths.output_dir={Path('results').resolve()}"
    assert overrides[-1] == "material.moduli.G=1e5"
