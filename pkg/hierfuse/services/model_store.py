"""
Persistencia de modelos entrenados como documento JSON
"""

import logging
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from hierfuse.errors import ModelFileError, MissingPathError
from hierfuse.models.fusion import ModelParams
from hierfuse.schemas.records import MatrixRecord, ModelDocument

logger = logging.getLogger(__name__)


class ModelStore:
    """Clase para guardar y cargar parámetros de modelos"""

    def save_model(self, params: ModelParams, path: Path) -> Path:
        """
        Guardar configuración y tensores

        Args:
            params: Modelo a guardar
            path: Ruta del archivo .json

        Returns:
            Ruta escrita
        """
        document = ModelDocument(
            config=params.config,
            params={
                name: MatrixRecord(
                    rows=value.shape[0], cols=value.shape[1], data=value.reshape(-1).tolist()
                )
                for name, value in sorted(params.tensors.items())
            },
        )
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(document.model_dump_json(indent=2) + "\n", encoding="utf-8")
        logger.info("Modelo guardado en %s (%d escalares)", path, params.scalar_count)
        return path

    def load_model(self, path: Path) -> ModelParams:
        """
        Cargar un modelo y verificar que sus tensores correspondan a su configuración

        Raises:
            MissingPathError: Si el archivo no existe
            ModelFileError: JSON inválido, tensores faltantes, sobrantes o con otra forma
        """
        path = Path(path)
        if not path.is_file():
            raise MissingPathError(path)
        try:
            document = ModelDocument.model_validate_json(path.read_text(encoding="utf-8"))
        except ValidationError as e:
            raise ModelFileError(f"{path}: documento de modelo inválido: {e.errors()[0]['msg']}") from e

        tensors = {
            name: np.asarray(record.data, dtype=np.float64).reshape(record.rows, record.cols)
            for name, record in document.params.items()
        }
        params = ModelParams(config=document.config, tensors=tensors)
        expected = params.expected_shapes()

        missing = sorted(set(expected) - set(tensors))
        extra = sorted(set(tensors) - set(expected))
        if missing:
            raise ModelFileError(f"{path}: faltan tensores {missing}")
        if extra:
            raise ModelFileError(f"{path}: tensores que la configuración no usa {extra}")
        for name, shape in expected.items():
            if tensors[name].shape != tuple(shape):
                raise ModelFileError(
                    f"{path}: '{name}' tiene forma {tensors[name].shape}, se esperaba {tuple(shape)}"
                )

        logger.info("Modelo cargado de %s: %r", path, params)
        return params


# Instancia global del almacén de modelos
model_store = ModelStore()
