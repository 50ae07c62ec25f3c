"""This file prepares config fixtures and shared material models for the tests."""
from pathlib import Path

import numpy as np
import pytest
import rootutils
from hydra import compose, initialize
from hydra.core.global_hydra import GlobalHydra
from omegaconf import DictConfig, open_dict

from cosserat.models.components.criteria import drucker_prager, mohr_coulomb, tresca, von_mises
from cosserat.models.components.hardening import CohesionLaw, ExponentialHardening, LinearHardening
from cosserat.models.material import MaterialModel, build_material
from tests.helpers.materials import BIAXIAL_MODULI, FOOTING_MODULI


@pytest.fixture(scope="package")
def cfg_run_global() -> DictConfig:
    """A pytest fixture for setting up a default Hydra DictConfig for runs.

    :return: A DictConfig object containing a default Hydra configuration for runs.
    """
    with initialize(version_base="1.3", config_path="../configs"):
        cfg = compose(config_name="run.yaml", return_hydra_config=True, overrides=[])

        # set defaults for all tests
        with open_dict(cfg):
            cfg.paths.root_dir = str(rootutils.find_root(indicator=".project-root"))
            cfg.solver.progress = False
            cfg.solver.snapshot_stride = 0
            cfg.extras.print_config = False
            cfg.extras.ignore_warnings = False

    return cfg


@pytest.fixture(scope="function")
def cfg_run(cfg_run_global: DictConfig, tmp_path: Path) -> DictConfig:
    """A pytest fixture built on top of the `cfg_run_global()` fixture, which accepts a temporary logging path
    `tmp_path` for generating a temporary logging path.

    This is called by each test which uses the `cfg_run` arg. Each test generates its own temporary logging path.

    :param cfg_run_global: The input DictConfig object to be modified.
    :param tmp_path: The temporary logging path.

    :return: A DictConfig with updated output and log directories corresponding to `tmp_path`.
    """
    cfg = cfg_run_global.copy()

    with open_dict(cfg):
        cfg.paths.output_dir = str(tmp_path)
        cfg.paths.log_dir = str(tmp_path)

    yield cfg

    GlobalHydra.instance().clear()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240607)


@pytest.fixture
def biaxial_mc() -> MaterialModel:
    """Non-associated rounded Mohr-Coulomb with a small cohesion so that the elastic domain is not empty."""
    return build_material(BIAXIAL_MODULI, mohr_coulomb(30.0), CohesionLaw(20.0), mohr_coulomb(20.0))


@pytest.fixture
def softening_mc() -> MaterialModel:
    return build_material(BIAXIAL_MODULI, mohr_coulomb(30.0), CohesionLaw(50.0, 10.0, 20.0), mohr_coulomb(10.0))


@pytest.fixture
def tresca_clay() -> MaterialModel:
    return build_material(FOOTING_MODULI, tresca(), CohesionLaw(490.0))


@pytest.fixture
def dp_linear() -> MaterialModel:
    """Non-associated Drucker-Prager cone with linear hardening: radial and apex returns in closed form."""
    return build_material(BIAXIAL_MODULI, drucker_prager(0.8), LinearHardening(60.0, 2000.0), drucker_prager(0.3))


@pytest.fixture
def dp_exponential() -> MaterialModel:
    return build_material(
        BIAXIAL_MODULI, drucker_prager(0.8), ExponentialHardening(80.0, 20.0, 50.0), drucker_prager(0.3)
    )


@pytest.fixture
def vm_linear() -> MaterialModel:
    return build_material(BIAXIAL_MODULI, von_mises(), LinearHardening(100.0, 5000.0))
