"""
Entrenamiento y evaluación: entropía cruzada con máscara, Adam, ciclo con
early stopping y métricas de clasificación
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike
from sklearn.metrics import confusion_matrix, precision_recall_fscore_support

from hierfuse.config import get_worker_count
from hierfuse.errors import ContractError
from hierfuse.models.dataset import Dataset, PaddedBatch
from hierfuse.models.fusion import ModelParams, forward, predict
from hierfuse.models.tensor import (
    LOG_CLAMP,
    GradientStore,
    Matrix,
    Tape,
    backward,
    check_targets,
    masked_nll,
)
from hierfuse.schemas.config import TrainConfig
from hierfuse.schemas.records import HistoryEntry
from hierfuse.schemas.reports import Metrics
from hierfuse.services.dataset_io import dataset_repository

logger = logging.getLogger(__name__)


def cross_entropy(probs: ArrayLike, labels: Sequence[int], mask: Sequence[bool]) -> float:
    """
    -(1/M) Σ log probs[t][label_t] sobre las M utterances activas

    Raises:
        ContractError: Si M = 0 o hay etiquetas fuera de [0, C)
    """
    probs_arr = np.asarray(probs, dtype=np.float64)
    labels_arr, mask_arr = check_targets(probs_arr, labels, mask)
    active = np.flatnonzero(mask_arr)
    picked = probs_arr[active, labels_arr[active]]
    return float(-np.log(np.maximum(picked, LOG_CLAMP)).sum() / active.size)


@dataclass
class AdamState:
    """
    Estado del optimizador Adam

    Campos:
    - m, v: primer y segundo momento por parámetro
    - t: pasos dados
    """
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    t: int = 0
    m: dict[str, Matrix] = field(default_factory=dict)
    v: dict[str, Matrix] = field(default_factory=dict)

    @classmethod
    def from_config(cls, tc: TrainConfig) -> AdamState:
        return cls(lr=tc.lr, beta1=tc.beta1, beta2=tc.beta2, epsilon=tc.epsilon)


def adam_step(
    params: dict[str, Matrix], grads: GradientStore, state: AdamState
) -> tuple[dict[str, Matrix], AdamState]:
    """
    Un paso de Adam con corrección de sesgo

    Args:
        params: Tensores por nombre (no se modifican)
        grads: Gradientes con las mismas formas
        state: Momentos y contador; se actualiza en el lugar

    Returns:
        Nuevos tensores y el estado

    Raises:
        ContractError: Nombres o formas que no coinciden
    """
    if set(params) != set(grads):
        missing = sorted(set(params) ^ set(grads))
        raise ContractError(f"Parámetros y gradientes no coinciden: {missing}")
    state.t += 1
    bc1 = 1.0 - state.beta1 ** state.t
    bc2 = 1.0 - state.beta2 ** state.t

    updated: dict[str, Matrix] = {}
    for name, value in params.items():
        g = grads[name]
        if g.shape != value.shape:
            raise ContractError(f"Gradiente de '{name}' con forma {g.shape}, se esperaba {value.shape}")
        if name not in state.m:
            state.m[name] = np.zeros_like(value)
            state.v[name] = np.zeros_like(value)
        state.m[name] = state.beta1 * state.m[name] + (1.0 - state.beta1) * g
        state.v[name] = state.beta2 * state.v[name] + (1.0 - state.beta2) * (g * g)
        m_hat = state.m[name] / bc1
        v_hat = state.v[name] / bc2
        updated[name] = value - state.lr * m_hat / (np.sqrt(v_hat) + state.epsilon)
    return updated, state


@dataclass
class VideoResult:
    """Pérdida, utterances activas y gradientes de un video"""
    loss: float
    n_active: int
    grads: GradientStore | None = None


@dataclass
class TrainResult:
    """Modelo de la mejor época de validación y el historial completo"""
    model: ModelParams
    history: list[HistoryEntry]
    best_epoch: int
    stopped_epoch: int


def video_loss(model: ModelParams, batch: PaddedBatch, with_grads: bool = True) -> VideoResult:
    """Pérdida de un video en su propia cinta y, opcionalmente, sus gradientes"""
    n_active = batch.n_real
    if n_active == 0:
        return VideoResult(loss=0.0, n_active=0)
    tape = Tape()
    out = forward(model, batch.features, batch.mask, tape=tape)
    loss = masked_nll(out.probs_node, batch.labels, batch.mask)
    grads = backward(tape, loss) if with_grads else None
    return VideoResult(loss=float(loss.value[0, 0]), n_active=n_active, grads=grads)


class Trainer:
    """Clase para entrenar y evaluar modelos de fusión"""

    def __init__(self, max_workers: int | None = None):
        self.max_workers = max_workers

    def _workers(self) -> int:
        return self.max_workers if self.max_workers is not None else get_worker_count()

    def _map(self, fn, items: list) -> list:
        """Aplicar fn preservando el orden de los videos"""
        workers = min(self._workers(), len(items))
        if workers <= 1:
            return [fn(item) for item in items]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))

    def batch_gradients(self, model: ModelParams, batches: list[PaddedBatch]) -> tuple[float, int, GradientStore | None]:
        """
        Gradiente de un lote como media ponderada por utterances activas

        Returns:
            Pérdida media del lote, utterances activas y gradientes
        """
        results = [r for r in self._map(lambda b: video_loss(model, b), batches) if r.n_active]
        if not results:
            return 0.0, 0, None
        total = sum(r.n_active for r in results)
        weights = [r.n_active / total for r in results]
        loss = sum(w * r.loss for w, r in zip(weights, results))
        return loss, total, GradientStore.weighted_sum([r.grads for r in results], weights)

    def dataset_loss(self, model: ModelParams, batches: list[PaddedBatch]) -> float:
        """Entropía cruzada sobre todas las utterances activas de los videos"""
        results = self._map(lambda b: video_loss(model, b, with_grads=False), batches)
        total = sum(r.n_active for r in results)
        if total == 0:
            raise ContractError("No hay utterances activas para calcular la pérdida")
        return sum(r.loss * r.n_active for r in results) / total

    def train(self, model: ModelParams, dataset: Dataset, tc: TrainConfig) -> TrainResult:
        """
        Entrenar con Adam y early stopping sobre la pérdida de validación

        Args:
            model: Parámetros iniciales (no se modifican)
            dataset: Videos de entrenamiento; se separa validación por videos
            tc: Configuración del entrenamiento

        Returns:
            Parámetros de la mejor época e historial por época

        Raises:
            ContractError: Si el dataset está vacío
        """
        if len(dataset) == 0:
            raise ContractError("El dataset de entrenamiento está vacío")
        batches = dataset_repository.pad_dataset(dataset)
        train_set, val_set = self.split_validation(batches, tc.val_fraction, tc.seed)

        rng = np.random.default_rng(tc.seed)
        state = AdamState.from_config(tc)
        current = model.copy()
        best = current.copy()
        best_loss = np.inf
        best_epoch = 0
        stale = 0
        history: list[HistoryEntry] = []
        epoch = 0

        for epoch in range(1, tc.max_epochs + 1):
            order = rng.permutation(len(train_set))
            epoch_loss, epoch_count = 0.0, 0
            for start in range(0, len(order), tc.batch_size):
                chunk = [train_set[i] for i in order[start:start + tc.batch_size]]
                loss, count, grads = self.batch_gradients(current, chunk)
                if grads is None:
                    continue
                tensors, state = adam_step(current.tensors, grads, state)
                current = current.with_tensors(tensors)
                epoch_loss += loss * count
                epoch_count += count
                logger.debug("Época %d, lote %d: pérdida %.6f", epoch, start // tc.batch_size, loss)

            train_loss = epoch_loss / epoch_count if epoch_count else 0.0
            val_loss = self.dataset_loss(current, val_set)
            val_acc = self.evaluate_batches(current, val_set).accuracy
            history.append(HistoryEntry(epoch=epoch, train_loss=train_loss, val_loss=val_loss, val_acc=val_acc))
            logger.info(
                "Época %d: train_loss=%.6f val_loss=%.6f val_acc=%.4f",
                epoch, train_loss, val_loss, val_acc,
            )

            if val_loss < best_loss:
                best_loss, best_epoch, best, stale = val_loss, epoch, current.copy(), 0
            else:
                stale += 1
                if stale >= tc.patience:
                    logger.info("Early stopping en la época %d (mejor: %d)", epoch, best_epoch)
                    break

        return TrainResult(model=best, history=history, best_epoch=best_epoch, stopped_epoch=epoch)

    def split_validation(
        self, batches: list[PaddedBatch], val_fraction: float, seed: int
    ) -> tuple[list[PaddedBatch], list[PaddedBatch]]:
        """Separar videos completos para validación, de forma determinista"""
        if len(batches) < 2:
            logger.warning("Un solo video de entrenamiento: se valida sobre el mismo video")
            return list(batches), list(batches)
        n_val = min(len(batches) - 1, max(1, int(round(val_fraction * len(batches)))))
        order = np.random.default_rng(seed).permutation(len(batches))
        val_idx = set(order[:n_val].tolist())
        train = [b for i, b in enumerate(batches) if i not in val_idx]
        val = [b for i, b in enumerate(batches) if i in val_idx]
        return train, val

    def evaluate(self, model: ModelParams, dataset: Dataset) -> Metrics:
        """
        Métricas por utterance sobre un dataset

        Raises:
            ContractError: Si el dataset está vacío
        """
        if len(dataset) == 0:
            raise ContractError("El dataset de evaluación está vacío")
        return self.evaluate_batches(model, dataset_repository.pad_dataset(dataset))

    def evaluate_batches(self, model: ModelParams, batches: list[PaddedBatch]) -> Metrics:
        """Métricas sobre videos ya rellenados; el relleno se ignora por la máscara"""
        def predict_video(batch: PaddedBatch):
            if batch.n_real == 0:
                return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
            out = forward(model, batch.features, batch.mask)
            return batch.labels[batch.mask], predict(out)[batch.mask]

        pairs = self._map(predict_video, batches)
        y_true = np.concatenate([p[0] for p in pairs]) if pairs else np.empty(0, dtype=np.int64)
        y_pred = np.concatenate([p[1] for p in pairs]) if pairs else np.empty(0, dtype=np.int64)
        return compute_metrics(y_true, y_pred, model.config.C)


def compute_metrics(y_true: ArrayLike, y_pred: ArrayLike, C: int) -> Metrics:
    """
    Exactitud, precisión/recall/F1 por clase (0 cuando P+R=0), F1 ponderado
    por soporte y matriz de confusión C × C
    """
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    labels = list(range(C))
    n = int(y_true.size)
    if n == 0:
        zeros = [0.0] * C
        return Metrics(
            accuracy=0.0, precision=zeros, recall=zeros, f1_per_class=zeros,
            f1_weighted=0.0, confusion=[[0] * C for _ in labels], n_utterances=0,
        )
    precision, recall, f1, support = precision_recall_fscore_support(
        y_true, y_pred, labels=labels, zero_division=0
    )
    weighted = float(np.dot(f1, support) / support.sum()) if support.sum() else 0.0
    confusion = confusion_matrix(y_true, y_pred, labels=labels)
    return Metrics(
        accuracy=float(np.mean(y_true == y_pred)),
        precision=[float(x) for x in precision],
        recall=[float(x) for x in recall],
        f1_per_class=[float(x) for x in f1],
        f1_weighted=weighted,
        confusion=confusion.astype(int).tolist(),
        n_utterances=n,
    )


# Instancia global del entrenador
trainer = Trainer()
