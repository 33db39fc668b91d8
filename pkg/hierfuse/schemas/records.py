"""
Schemas Pydantic para los archivos que lee y escribe hierfuse: líneas de
dataset, manifiesto, documento de modelo e historial de entrenamiento
"""

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from hierfuse.models.enums import MODALITY_ORDER, Modality
from hierfuse.schemas.config import ModelConfig


class UtteranceRecord(BaseModel):
    """Una utterance etiquetada con sus vectores por modalidad"""
    model_config = ConfigDict(extra="forbid")

    label: int = Field(..., ge=0, description="Clase de la utterance")
    features: dict[Modality, list[float]] = Field(..., description="Vector por modalidad")

    @field_validator("features")
    @classmethod
    def validate_features(cls, v):
        """Al menos una modalidad y vectores no vacíos"""
        if not v:
            raise ValueError("La utterance no tiene características")
        for modality, vector in v.items():
            if not vector:
                raise ValueError(f"Vector vacío para la modalidad {modality.value}")
        return {m: v[m] for m in MODALITY_ORDER if m in v}


class VideoRecord(BaseModel):
    """Una línea del archivo JSONL: un video con sus utterances"""
    model_config = ConfigDict(extra="forbid")

    video_id: str = Field(..., min_length=1)
    speaker_id: str = Field(..., min_length=1)
    utterances: list[UtteranceRecord] = Field(..., min_length=1)


class DatasetManifest(BaseModel):
    """Manifiesto lateral: anchos autoritativos y número de clases"""
    model_config = ConfigDict(extra="forbid")

    C: int = Field(..., ge=1)
    dims: dict[Modality, int]
    n_videos: int = Field(..., ge=1)

    @field_validator("dims")
    @classmethod
    def validate_dims(cls, v):
        """Anchos positivos en orden canónico"""
        if not v:
            raise ValueError("El manifiesto no declara modalidades")
        for modality, width in v.items():
            if width < 1:
                raise ValueError(f"Ancho inválido para {modality.value}: {width}")
        return {m: v[m] for m in MODALITY_ORDER if m in v}


class MatrixRecord(BaseModel):
    """Matriz serializada en orden por filas"""
    rows: int = Field(..., ge=1)
    cols: int = Field(..., ge=1)
    data: list[float]

    @model_validator(mode="after")
    def validate_length(self):
        """len(data) = rows × cols"""
        if len(self.data) != self.rows * self.cols:
            raise ValueError(
                f"data tiene {len(self.data)} valores, se esperaban {self.rows}×{self.cols}"
            )
        return self


class ModelDocument(BaseModel):
    """Documento JSON de un modelo entrenado"""
    config: ModelConfig
    params: dict[str, MatrixRecord]


class HistoryEntry(BaseModel):
    """Una línea del historial de entrenamiento"""
    epoch: int = Field(..., ge=1)
    train_loss: float
    val_loss: float
    val_acc: float = Field(..., ge=0, le=1)
