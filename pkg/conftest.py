"""
Fixtures compartidas: configuracion reducida en directorios temporales,
secuencia sintetica pequena y cascadas de juguete
"""

import sys
from pathlib import Path

import numpy as np
import pytest
import torch
import yaml

# Agregar el directorio principal al path
sys.path.append(str(Path(__file__).parent))

from human_motion_transfer.data.parsing import LabelSet
from human_motion_transfer.data.pose_conditioning import LimbMap
from human_motion_transfer.data.synthetic import SyntheticSceneSpec, generate_synthetic_sequence
from human_motion_transfer.models.generators import CascadeConfig, build_cascade
from human_motion_transfer.utils.config import CACHE_DIR_ENV, apply_overrides, load_config
from human_motion_transfer.utils.io import write_sequence

TINY_GENERATORS = {"base_width": 4, "num_residual_blocks": 1, "downsampling_steps": 1}


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: entrenamiento de extremo a extremo (minutos)")


@pytest.fixture
def config(tmp_path, monkeypatch):
    """Configuracion del proyecto con rutas temporales y redes diminutas"""
    monkeypatch.delenv(CACHE_DIR_ENV, raising=False)
    base = load_config()
    overrides = {
        "paths.data_dir": str(tmp_path / "data"),
        "paths.cache_dir": str(tmp_path / "cache"),
        "paths.checkpoint_dir": str(tmp_path / "checkpoints"),
        "paths.logs_dir": str(tmp_path / "logs"),
        "paths.results_dir": str(tmp_path / "results"),
        "training.epochs": 1,
        "synthetic.resolution": [32, 32],
        "synthetic.frames": 4,
    }
    overrides.update({f"generators.{key}": value for key, value in TINY_GENERATORS.items()})
    return apply_overrides(base, overrides)


@pytest.fixture
def config_file(tmp_path, config):
    path = tmp_path / "config.yaml"
    path.write_text(yaml.safe_dump(config), encoding="utf-8")
    return path


@pytest.fixture(scope="session")
def limbs():
    return LimbMap.from_yaml("configs/limb_map.yaml")


@pytest.fixture(scope="session")
def labels():
    return LabelSet.from_yaml("configs/atr_labels.yaml")


@pytest.fixture(scope="session")
def small_spec():
    return SyntheticSceneSpec(resolution=(32, 32), frames=4)


@pytest.fixture(scope="session")
def small_sequence(small_spec):
    return generate_synthetic_sequence(small_spec)


@pytest.fixture
def sequence_dir(tmp_path, small_sequence, labels):
    return write_sequence(
        tmp_path / "sequence",
        small_sequence.frames,
        small_sequence.keypoints,
        small_sequence.labels,
        small_sequence.background,
        label_set=labels,
    )


@pytest.fixture
def make_cascade():
    """Fabrica de cascadas diminutas con semilla fija"""

    def factory(variant="PSS", seed=0, **kwargs):
        torch.manual_seed(seed)
        params = {**TINY_GENERATORS, **kwargs}
        return build_cascade(CascadeConfig(variant=variant, **params))

    return factory


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
