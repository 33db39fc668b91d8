"""
Schemas Pydantic para los reportes: métricas de clasificación y
verificación de gradientes
"""

from typing import Optional

from pydantic import BaseModel, Field, model_validator


class Metrics(BaseModel):
    """Exactitud, precisión/recall/F1 por clase, F1 ponderado y matriz de confusión"""
    accuracy: float = Field(..., ge=0, le=1)
    precision: list[float]
    recall: list[float]
    f1_per_class: list[float]
    f1_weighted: float = Field(..., ge=0, le=1)
    confusion: list[list[int]]
    n_utterances: int = Field(..., ge=0)

    @model_validator(mode="after")
    def validate_confusion(self):
        """La matriz de confusión suma el número de utterances evaluadas"""
        total = sum(sum(r) for r in self.confusion)
        if total != self.n_utterances:
            raise ValueError(f"La confusión suma {total}, se esperaban {self.n_utterances}")
        return self

    @property
    def error_rate(self) -> float:
        return 1.0 - self.accuracy


class TensorCheck(BaseModel):
    """Resultado de la verificación de un tensor de parámetros"""
    name: str
    shape: tuple[int, int]
    max_rel_error: float
    passed: bool


class GradcheckReport(BaseModel):
    """Reporte de backward() contra diferencias finitas"""
    variant: str
    modalities: str
    epsilon: float
    tolerance: float
    tensors: list[TensorCheck]

    @property
    def passed(self) -> bool:
        return all(t.passed for t in self.tensors)

    @property
    def worst(self) -> TensorCheck | None:
        if not self.tensors:
            return None
        return max(self.tensors, key=lambda t: t.max_rel_error)


class RunMetrics(Metrics):
    """Métricas de prueba de una ejecución con la identidad del modelo"""
    variant: str
    modalities: str
    param_count: int = Field(..., ge=0)
    best_epoch: int = Field(..., ge=0)
    stopped_epoch: int = Field(..., ge=0)
    plain_baseline: bool = False


class SweepRow(BaseModel):
    """Una celda variante × modalidades de la comparación"""
    variant: str
    modalities: str
    accuracy: float
    f1_weighted: float
    error_rate_reduction: Optional[float] = Field(
        default=None, description="(err_early - err) / err_early frente a early del mismo subconjunto"
    )
    plain_baseline: bool = False
