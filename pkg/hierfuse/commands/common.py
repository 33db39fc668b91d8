"""
Utilidades compartidas por los subcomandos: lectura de configuraciones,
preparación de datos y escritura de artefactos
"""

import json
import logging
from pathlib import Path
from typing import TypeVar

from pydantic import BaseModel, ValidationError

from hierfuse.errors import ConfigError, DimensionError, MissingPathError
from hierfuse.models.dataset import Dataset
from hierfuse.schemas.config import DataConfig, ModelConfig
from hierfuse.services.dataset_io import dataset_repository

logger = logging.getLogger(__name__)

ConfigT = TypeVar("ConfigT", bound=BaseModel)


def load_config(path: Path, schema: type[ConfigT]) -> ConfigT:
    """
    Leer y validar un documento JSON de configuración

    Raises:
        MissingPathError: Si el archivo no existe
        ConfigError: JSON inválido o campos que no validan
    """
    path = Path(path)
    if not path.is_file():
        raise MissingPathError(path)
    try:
        return schema.model_validate_json(path.read_text(encoding="utf-8"))
    except ValidationError as e:
        first = e.errors()[0]
        location = ".".join(str(p) for p in first.get("loc", ()))
        raise ConfigError(f"{path}: {location + ': ' if location else ''}{first.get('msg')}") from e


def write_json(path: Path, payload) -> Path:
    """JSON UTF-8 con claves ordenadas, para salidas reproducibles byte a byte"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n", encoding="utf-8")
    return path


def prepare_data(data: DataConfig) -> tuple[Dataset, Dataset]:
    """
    Obtener los datasets de entrenamiento y prueba

    Sintéticos si hay `synth`; si solo hay train_path, la prueba se separa
    por hablantes.
    """
    if data.synth is not None:
        return dataset_repository.synth_generate(data.synth)
    train = dataset_repository.load_dataset(data.train_path)
    if data.test_path is not None:
        return train, dataset_repository.load_dataset(data.test_path)
    return dataset_repository.split_speaker_disjoint(train, data.test_fraction, data.split_seed)


def align_model_config(cfg: ModelConfig, *datasets: Dataset) -> ModelConfig:
    """
    Tomar anchos y número de clases de los datos

    Raises:
        ConfigError: Modalidad sin datos, C distinto entre datasets o N_max menor
            que el video más largo
    """
    reference = datasets[0]
    missing = [m.value for m in cfg.modalities if m not in reference.dims]
    if missing:
        raise ConfigError(f"El dataset no tiene las modalidades {''.join(missing)}")
    for other in datasets[1:]:
        if other.C != reference.C:
            raise ConfigError(f"Los datasets declaran C={reference.C} y C={other.C}")
        for m in cfg.modalities:
            if other.dims.get(m) != reference.dims[m]:
                raise DimensionError(
                    f"Ancho de {m.value} distinto entre datasets: {reference.dims[m]} y {other.dims.get(m)}"
                )

    update = {f"d_{m.value}": reference.dims[m] for m in cfg.modalities}
    update["C"] = reference.C
    changed = {k: v for k, v in update.items() if getattr(cfg, k) != v}
    if changed:
        logger.info("Configuración ajustada a los datos: %s", json.dumps(changed, sort_keys=True))

    longest = max(d.max_utterances for d in datasets)
    if longest > cfg.N_max:
        raise ConfigError(f"N_max={cfg.N_max} es menor que el video más largo ({longest} utterances)")
    return cfg.model_copy(update=update)


def format_counts(name: str, dataset: Dataset) -> str:
    """Línea con videos, utterances y utterances por clase de un split"""
    counts = " ".join(f"{c}:{n}" for c, n in enumerate(dataset.class_counts()))
    return f"{name:<6} videos={len(dataset):<5} utterances={dataset.n_utterances:<6} clases {counts}"
