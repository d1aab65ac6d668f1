"""Fixtures compartidas: modelos y datasets diminutos, configuración aislada"""

import sys
from pathlib import Path

import pytest
import torch
import yaml

PROJECT_ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(PROJECT_ROOT))

from src.config.config_manager import ConfigManager, ModelConfig, TrainingConfig  # noqa: E402
from src.harness.tasks import gen_task  # noqa: E402
from src.training.model import build_model  # noqa: E402


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False,
                     help="ejecuta también las corridas de entrenamiento largas")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: corrida larga, solo con --runslow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="necesita --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def gen():
    return torch.Generator().manual_seed(1234)


@pytest.fixture
def tiny_model_cfg():
    return ModelConfig(
        arch="sru-dgp",
        layers=3,
        hidden_width=3,
        inducing=6,
        n_features=16,
        kernel="arccos1",
        kernel_bias=1.0,
        max_iters=6,
        seed=0,
    )


@pytest.fixture
def quiet_training():
    return TrainingConfig(checkpoint_every=0, validation_every=0, log_every=0, progress_bar=False)


@pytest.fixture
def tiny_dataset():
    return gen_task("lagged-copy", seed=0, U=4, T=6, D_in=2, D_out=1, noise_sd=0.05)


@pytest.fixture
def make_model(tiny_model_cfg):
    """Fábrica: build_model con la configuración diminuta y overrides puntuales"""
    def _make(input_dim=2, output_dim=1, n_train_frames=24, topology=None, **overrides):
        cfg = ModelConfig(**{**tiny_model_cfg.__dict__, **overrides})
        return build_model(cfg, input_dim, output_dim, n_train_frames, topology=topology)
    return _make


@pytest.fixture
def config_file(tmp_path):
    """Escribe un config.yaml diminuto en tmp_path y devuelve su ruta"""
    def _write(**sections):
        payload = {
            "model": {
                "arch": "sru-dgp", "layers": 3, "hidden_width": 3, "inducing": 6, "n_features": 16,
                "max_iters": 4, "seed": 0,
            },
            "training": {"checkpoint_every": 2, "validation_every": 0, "log_every": 0, "progress_bar": False},
            "data": {
                "generator": "lagged-copy", "seed": 0, "input_dim": 2, "output_dim": 1, "frames": 5,
                "train_utterances": 3, "dev_utterances": 2, "test_utterances": 2,
                "data_dir": str(tmp_path / "data"),
            },
            "bench": {"trials": 2, "layers": [3], "frames": 8},
            "output": {"dir": str(tmp_path / "run")},
        }
        for section, values in sections.items():
            payload.setdefault(section, {}).update(values)
        path = tmp_path / "config.yaml"
        path.write_text(yaml.safe_dump(payload), encoding="utf-8")
        return path
    return _write


@pytest.fixture
def run_config(config_file):
    """ConfigManager aislado del entorno y del config.yaml del proyecto"""
    def _load(**sections):
        return ConfigManager(yaml_path=config_file(**sections), use_env=False)
    return _load
