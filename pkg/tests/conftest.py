"""
Configuración de pytest para tests
"""

import json

import numpy as np
import pytest

from hierfuse.models.enums import Modality
from hierfuse.schemas.config import ModelConfig, SynthSpec, TrainConfig
from hierfuse.services.dataset_io import dataset_repository

# Anchos pequeños para que las diferencias finitas sean rápidas
TINY_DIMS = {"d_T": 6, "d_A": 5, "d_V": 4, "ctx_T": 5, "ctx_A": 5, "ctx_V": 5, "ctx_early": 5}

ALL_SUBSETS = ["T", "A", "V", "TA", "TV", "AV", "TAV"]
ALL_VARIANTS = ["early", "hfusion", "chfusion"]


def make_config(variant: str = "chfusion", modalities: str = "TAV", **overrides) -> ModelConfig:
    """ModelConfig pequeña para tests"""
    values = {
        "variant": variant,
        "modalities": modalities,
        **TINY_DIMS,
        "D": 8,
        "D2": 10,
        "D3": 12,
        "C": 2,
        "N_max": 20,
        "seed": 0,
    }
    values.update(overrides)
    return ModelConfig(**values)


def random_features(rng: np.random.Generator, cfg: ModelConfig, n: int) -> dict[Modality, np.ndarray]:
    """Características aleatorias N × d_m para las modalidades de cfg"""
    return {m: rng.normal(size=(n, cfg.input_dim(m))) for m in cfg.modalities}


@pytest.fixture
def rng():
    """Generador con semilla fija"""
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_config():
    """Configuración chfusion trimodal pequeña"""
    return make_config()


@pytest.fixture
def tiny_synth_spec():
    """Especificación sintética pequeña y separable"""
    return SynthSpec(
        n_train=12,
        n_test=6,
        N=4,
        dims={"T": 4, "A": 5, "V": 3},
        strength={"T": 3.0, "A": 3.0, "V": 3.0},
        noise_std=0.5,
        n_speakers=4,
        seed=7,
    )


@pytest.fixture
def tiny_datasets(tiny_synth_spec):
    """Datasets sintéticos (train, test) pequeños"""
    return dataset_repository.synth_generate(tiny_synth_spec)


@pytest.fixture
def quick_train_config():
    """Entrenamiento corto para tests"""
    return TrainConfig(max_epochs=3, patience=2, batch_size=4, lr=0.01, seed=0)


@pytest.fixture
def run_config_file(tmp_path, tiny_synth_spec):
    """RunConfig en disco con datos sintéticos y salida relativa"""
    document = {
        "model": {"variant": "chfusion", "modalities": "TAV", "ctx_T": 4, "ctx_A": 4, "ctx_V": 4,
                  "D": 5, "D2": 6, "D3": 7, "N_max": 10},
        "train": {"max_epochs": 2, "patience": 2, "batch_size": 4, "lr": 0.01},
        "data": {"synth": tiny_synth_spec.model_dump(mode="json")},
        "output_dir": "out",
    }
    path = tmp_path / "run.json"
    path.write_text(json.dumps(document), encoding="utf-8")
    return path


@pytest.fixture
def gradcheck_config_file(tmp_path):
    """GradcheckConfig en disco para chfusion trimodal"""
    document = {
        "model": make_config().model_dump(mode="json"),
        "n_utterances": 3,
        "n_padding": 1,
    }
    path = tmp_path / "gradcheck.json"
    path.write_text(json.dumps(document), encoding="utf-8")
    return path
