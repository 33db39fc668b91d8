"""
Schemas Pydantic para las configuraciones de modelo, entrenamiento, datos
sintéticos y ejecuciones de la CLI
"""

from pathlib import Path
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from hierfuse.models.enums import MODALITY_ORDER, Modality, Variant


def _normalize_modalities(value):
    """Aceptar 'TAV' o ['T', 'A', 'V'] y devolver el orden canónico T, A, V"""
    if isinstance(value, str):
        value = list(value)
    if not value:
        raise ValueError("Se requiere al menos una modalidad")
    items = [Modality(v) for v in value]
    if len(set(items)) != len(items):
        raise ValueError(f"Modalidades repetidas: {value}")
    return [m for m in MODALITY_ORDER if m in items]


class ModelConfig(BaseModel):
    """Hiperparámetros de arquitectura"""
    model_config = ConfigDict(extra="forbid")

    variant: Variant = Field(default=Variant.CHFUSION, description="Variante de arquitectura")
    modalities: list[Modality] = Field(
        default_factory=lambda: list(MODALITY_ORDER), description="Subconjunto no vacío de T, A, V"
    )
    d_T: int = Field(default=500, ge=1, description="Ancho de las características de texto")
    d_A: int = Field(default=6392, ge=1, description="Ancho de las características de audio")
    d_V: int = Field(default=300, ge=1, description="Ancho de las características de video")
    ctx_T: int = Field(default=300, ge=1, description="Salida de la GRU unimodal de texto")
    ctx_A: int = Field(default=300, ge=1, description="Salida de la GRU unimodal de audio")
    ctx_V: int = Field(default=300, ge=1, description="Salida de la GRU unimodal de video")
    early_context: bool = Field(default=False, description="GRU tras la concatenación (solo early)")
    ctx_early: int = Field(default=300, ge=1, description="Salida de la GRU de early fusion")
    D: int = Field(default=400, ge=1, description="Dimensión común tras la igualación")
    D2: int = Field(default=500, ge=1, description="Salida de las GRU bimodales")
    D3: int = Field(default=550, ge=1, description="Salida de la GRU trimodal")
    C: int = Field(default=2, ge=1, description="Número de clases")
    N_max: int = Field(default=100, ge=1, description="Máximo de utterances por video")
    seed: int = Field(default=0, description="Semilla de inicialización")

    @field_validator("modalities", mode="before")
    @classmethod
    def validate_modalities(cls, v):
        """Normalizar y validar el subconjunto de modalidades"""
        return _normalize_modalities(v)

    def input_dim(self, modality: Modality) -> int:
        """Ancho de entrada de una modalidad"""
        return getattr(self, f"d_{Modality(modality).value}")

    def context_dim(self, modality: Modality) -> int:
        """Ancho de salida de la GRU unimodal de una modalidad"""
        return getattr(self, f"ctx_{Modality(modality).value}")

    @property
    def modality_key(self) -> str:
        """Subconjunto como texto compacto, p. ej. 'TAV'"""
        return "".join(m.value for m in self.modalities)

    @property
    def is_plain_baseline(self) -> bool:
        """Variantes unimodales que se reducen a softmax sobre características crudas"""
        if self.variant is Variant.EARLY:
            return len(self.modalities) == 1 and not self.early_context
        return self.variant is Variant.HFUSION and len(self.modalities) == 1


class TrainConfig(BaseModel):
    """Parámetros del ciclo de entrenamiento"""
    model_config = ConfigDict(extra="forbid")

    max_epochs: int = Field(default=200, ge=1, description="Máximo de épocas")
    patience: int = Field(default=10, ge=1, description="Épocas sin mejora antes de detenerse")
    val_fraction: float = Field(default=0.2, gt=0, lt=1, description="Fracción de videos de validación")
    batch_size: int = Field(default=16, ge=1, description="Videos por lote")
    lr: float = Field(default=1e-3, ge=0, description="Tasa de aprendizaje de Adam")
    beta1: float = Field(default=0.9, ge=0, lt=1)
    beta2: float = Field(default=0.999, ge=0, lt=1)
    epsilon: float = Field(default=1e-8, gt=0)
    seed: int = Field(default=0, description="Semilla de partición y barajado")


class SynthSpec(BaseModel):
    """Especificación del generador sintético multimodal"""
    model_config = ConfigDict(extra="forbid")

    n_train: int = Field(default=200, ge=1, description="Videos de entrenamiento")
    n_test: int = Field(default=60, ge=1, description="Videos de prueba")
    N: int = Field(default=10, ge=1, description="Utterances por video")
    min_utterances: Optional[int] = Field(
        default=None, ge=1, description="Si se define, la longitud se sortea en [min_utterances, N]"
    )
    dims: dict[Modality, int] = Field(
        default_factory=lambda: {Modality.TEXT: 50, Modality.AUDIO: 64, Modality.VIDEO: 30}
    )
    C: int = Field(default=2, ge=2, description="Número de clases")
    strength: dict[Modality, float] = Field(
        default_factory=lambda: {m: 2.0 for m in MODALITY_ORDER},
        description="Intensidad de la señal de clase por modalidad",
    )
    noise_std: float = Field(default=1.0, gt=0)
    conflict_fraction: float = Field(default=0.0, ge=0, le=1)
    label_persistence: float = Field(
        default=0.0, ge=0, le=1, description="Probabilidad de repetir la etiqueta anterior"
    )
    n_speakers: int = Field(default=10, ge=1, description="Hablantes del split de entrenamiento")
    seed: int = Field(default=0)

    @field_validator("dims")
    @classmethod
    def validate_dims(cls, v):
        """Validar anchos positivos y al menos una modalidad"""
        if not v:
            raise ValueError("Se requiere al menos una modalidad")
        for modality, width in v.items():
            if width < 1:
                raise ValueError(f"Ancho inválido para {modality.value}: {width}")
        return {m: v[m] for m in MODALITY_ORDER if m in v}

    @model_validator(mode="after")
    def validate_strengths(self):
        """Cada modalidad necesita una intensidad >= 0"""
        for modality in self.dims:
            value = self.strength.get(modality)
            if value is None:
                raise ValueError(f"Falta la intensidad de la modalidad {modality.value}")
            if value < 0:
                raise ValueError(f"La intensidad de {modality.value} no puede ser negativa")
        if self.min_utterances is not None and self.min_utterances > self.N:
            raise ValueError("min_utterances no puede superar N")
        return self


class DataConfig(BaseModel):
    """Origen de los datos de una ejecución: sintético o archivos JSONL"""
    model_config = ConfigDict(extra="forbid")

    synth: Optional[SynthSpec] = None
    train_path: Optional[Path] = None
    test_path: Optional[Path] = None
    test_fraction: float = Field(
        default=0.3, gt=0, lt=1, description="Fracción de prueba si solo hay train_path"
    )
    split_seed: int = Field(default=0)

    @model_validator(mode="after")
    def validate_source(self):
        """Exactamente un origen: synth o train_path"""
        if self.synth is None and self.train_path is None:
            self.synth = SynthSpec()
        if self.synth is not None and self.train_path is not None:
            raise ValueError("Use 'synth' o 'train_path', no ambos")
        if self.test_path is not None and self.train_path is None:
            raise ValueError("test_path requiere train_path")
        return self

    def resolve(self, base_dir: Path) -> "DataConfig":
        """Rutas relativas resueltas contra el directorio del archivo de configuración"""
        update = {}
        for key in ("train_path", "test_path"):
            path = getattr(self, key)
            if path is not None and not path.is_absolute():
                update[key] = base_dir / path
        return self.model_copy(update=update)


class RunConfig(BaseModel):
    """Documento de configuración del subcomando run"""
    model_config = ConfigDict(extra="forbid")

    model: ModelConfig = Field(default_factory=ModelConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)
    data: DataConfig = Field(default_factory=DataConfig)
    output_dir: Path = Field(default=Path("runs/default"))


class GradcheckConfig(BaseModel):
    """Documento de configuración del subcomando gradcheck"""
    model_config = ConfigDict(extra="forbid")

    model: ModelConfig
    n_utterances: int = Field(default=4, ge=1, description="Utterances reales del video de prueba")
    n_padding: int = Field(default=0, ge=0, description="Utterances de relleno añadidas")
    epsilon: float = Field(default=1e-5, gt=0)
    tolerance: float = Field(default=1e-4, gt=0)
    seed: int = Field(default=0, ge=0, description="Semilla del primer sorteo del punto de verificación")
