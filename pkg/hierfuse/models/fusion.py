"""
Modelo de fusión jerárquica: early fusion, HFusion y CHFusion para cualquier
subconjunto de modalidades
"""

from __future__ import annotations

import logging
from collections.abc import Mapping, Sequence
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from hierfuse.errors import ConfigError, ContractError, DimensionError
from hierfuse.models.enums import PAIRS, Activation, LayerKind, Modality, Variant, pair_name
from hierfuse.models.layers import (
    LayerSpec,
    bimodal_fuse,
    dense_forward,
    gru_forward,
    trimodal_fuse,
)
from hierfuse.models.tensor import Matrix, Node, Tape, concat_cols, softmax_row
from hierfuse.schemas.config import ModelConfig

logger = logging.getLogger(__name__)

HEAD = "softmax"


def active_pairs(modalities: Sequence[Modality]) -> list[tuple[Modality, Modality]]:
    """Pares bimodales presentes en el subconjunto, en el orden VA, AT, VT"""
    present = set(modalities)
    return [pair for pair in PAIRS if set(pair) <= present]


def model_layout(cfg: ModelConfig) -> list[LayerSpec]:
    """
    Capas que requiere una variante y un subconjunto de modalidades

    Anchos por variante:
    - chfusion: d_m -> ctx_m (GRU_m) -> D (mapa) -> D (par) -> D2 (GRU par)
      -> D2 (trimodal) -> D3 (GRU_AVT) -> C
    - hfusion: d_m -> D (mapa) -> D (par) -> D (trimodal) -> C
    - early: Σ d_m -> [ctx_early con GRU] -> C
    """
    mods = cfg.modalities
    if not mods:
        raise ConfigError("Se requiere al menos una modalidad")
    layers: list[LayerSpec] = []

    if cfg.variant is Variant.EARLY:
        width = sum(cfg.input_dim(m) for m in mods)
        if cfg.early_context:
            layers.append(LayerSpec(LayerKind.GRU, "gru_early", width, cfg.ctx_early))
            width = cfg.ctx_early
        layers.append(LayerSpec(LayerKind.DENSE, HEAD, width, cfg.C, Activation.NONE))
        return layers

    context = cfg.variant is Variant.CHFUSION
    uni_width = {}
    for m in mods:
        if context:
            layers.append(LayerSpec(LayerKind.GRU, f"gru_{m.value}", cfg.input_dim(m), cfg.context_dim(m)))
            uni_width[m] = cfg.context_dim(m)
        else:
            uni_width[m] = cfg.input_dim(m)

    if len(mods) == 1:
        width = uni_width[mods[0]]
    else:
        for m in mods:
            layers.append(LayerSpec(LayerKind.DENSE, f"map_{m.value}", uni_width[m], cfg.D))
        pairs = active_pairs(mods)
        for pair in pairs:
            layers.append(LayerSpec(LayerKind.PAIR_FUSION, f"fuse_{pair_name(pair)}", cfg.D, cfg.D))
        width = cfg.D
        if context:
            for pair in pairs:
                layers.append(LayerSpec(LayerKind.GRU, f"gru_{pair_name(pair)}", cfg.D, cfg.D2))
            width = cfg.D2
        if len(pairs) == 3:
            layers.append(LayerSpec(LayerKind.TRIPLE_FUSION, "fuse_AVT", width, width))
            if context:
                layers.append(LayerSpec(LayerKind.GRU, "gru_AVT", cfg.D2, cfg.D3))
                width = cfg.D3
    layers.append(LayerSpec(LayerKind.DENSE, HEAD, width, cfg.C, Activation.NONE))
    return layers


@dataclass
class ModelParams:
    """
    Conjunto entrenable θ de un modelo

    Campos:
    - config: configuración que define la arquitectura
    - tensors: tensores por nombre completo ('gru_T.U_z', 'softmax.W', ...)
    """
    config: ModelConfig
    tensors: dict[str, Matrix]

    def __repr__(self) -> str:
        return (
            f"<ModelParams(variant='{self.config.variant.value}', "
            f"modalities='{self.config.modality_key}', scalars={self.scalar_count})>"
        )

    @property
    def layers(self) -> list[LayerSpec]:
        return model_layout(self.config)

    @property
    def scalar_count(self) -> int:
        return int(sum(t.size for t in self.tensors.values()))

    def expected_shapes(self) -> dict[str, tuple[int, int]]:
        """Forma que la configuración exige para cada tensor"""
        shapes: dict[str, tuple[int, int]] = {}
        for spec in self.layers:
            shapes.update(spec.shapes())
        return shapes

    def bind(self, tape: Tape) -> dict[str, Node]:
        """Registrar todos los tensores como parámetros de la cinta"""
        return {name: tape.param(name, value) for name, value in self.tensors.items()}

    def with_tensors(self, tensors: Mapping[str, ArrayLike]) -> ModelParams:
        """Mismo modelo con otros valores de parámetros"""
        return ModelParams(config=self.config, tensors=dict(tensors))

    def copy(self) -> ModelParams:
        return ModelParams(
            config=self.config, tensors={k: np.array(v, copy=True) for k, v in self.tensors.items()}
        )


@dataclass
class ForwardOutput:
    """Probabilidades por utterance y la característica final que consume el clasificador"""
    probs_node: Node
    features_node: Node
    mask: NDArray[np.bool_]

    @property
    def probs(self) -> Matrix:
        return self.probs_node.value

    @property
    def features(self) -> Matrix:
        return self.features_node.value

    @property
    def tape(self) -> Tape:
        return self.probs_node.tape


def build_model(cfg: ModelConfig) -> ModelParams:
    """
    Reservar e inicializar exactamente los parámetros de la variante

    Args:
        cfg: Configuración del modelo

    Returns:
        Parámetros deterministas dada la semilla

    Raises:
        ConfigError: Si el subconjunto de modalidades está vacío
    """
    rng = np.random.default_rng(cfg.seed)
    tensors: dict[str, Matrix] = {}
    for spec in model_layout(cfg):
        tensors.update(spec.initialize(rng))
    params = ModelParams(config=cfg, tensors=tensors)
    logger.debug("Modelo construido: %r", params)
    return params


def param_count(cfg: ModelConfig) -> int:
    """Número de escalares de θ en forma cerrada"""
    return sum(spec.count() for spec in model_layout(cfg))


def forward(
    params: ModelParams,
    features: Mapping[Modality | str, ArrayLike],
    mask: Sequence[bool],
    tape: Tape | None = None,
) -> ForwardOutput:
    """
    Pasada hacia adelante sobre un video

    Args:
        params: Parámetros del modelo (incluyen su configuración)
        features: Matriz N × d_m por modalidad incluida
        mask: N booleanos; el relleno fluye por la red pero no se evalúa
        tape: Cinta donde registrar; se crea una nueva si se omite

    Returns:
        Probabilidades N × C y características finales

    Raises:
        DimensionError: Anchos o longitudes incompatibles con la configuración
    """
    cfg = params.config
    tape = tape if tape is not None else Tape()
    mask_arr = np.asarray(mask, dtype=bool)
    n = mask_arr.shape[0]
    if n == 0:
        raise ContractError("El video no tiene utterances")
    if n > cfg.N_max:
        raise DimensionError(f"El video tiene {n} utterances y N_max es {cfg.N_max}")

    by_modality = {Modality(k): v for k, v in features.items()}
    inputs: dict[Modality, Node] = {}
    for m in cfg.modalities:
        if m not in by_modality:
            raise DimensionError(f"Faltan características de la modalidad {m.value}")
        node = tape.constant(by_modality[m])
        if node.shape != (n, cfg.input_dim(m)):
            raise DimensionError(
                f"Modalidad {m.value}: forma {node.shape}, se esperaba ({n}, {cfg.input_dim(m)})"
            )
        inputs[m] = node

    nodes = params.bind(tape)
    layers = {spec.name: spec.bind(nodes) for spec in params.layers}
    if cfg.variant is Variant.EARLY:
        final = _early_features(cfg, layers, inputs)
    else:
        final = _hierarchical_features(cfg, layers, inputs)
    probs = softmax_row(dense_forward(final, layers[HEAD]))
    return ForwardOutput(probs_node=probs, features_node=final, mask=mask_arr)


def _early_features(cfg: ModelConfig, layers: dict, inputs: dict[Modality, Node]) -> Node:
    joined = concat_cols([inputs[m] for m in cfg.modalities])
    if cfg.early_context:
        return gru_forward(joined, layers["gru_early"])
    return joined


def _hierarchical_features(cfg: ModelConfig, layers: dict, inputs: dict[Modality, Node]) -> Node:
    context = cfg.variant is Variant.CHFUSION
    mods = cfg.modalities
    uni = {m: gru_forward(inputs[m], layers[f"gru_{m.value}"]) if context else inputs[m] for m in mods}
    if len(mods) == 1:
        return uni[mods[0]]

    # Igualación de dimensión
    g = {m: dense_forward(uni[m], layers[f"map_{m.value}"]) for m in mods}

    fused = {}
    for pair in active_pairs(mods):
        name = pair_name(pair)
        out = bimodal_fuse(g[pair[0]], g[pair[1]], layers[f"fuse_{name}"])
        fused[name] = gru_forward(out, layers[f"gru_{name}"]) if context else out
    if len(fused) == 1:
        return next(iter(fused.values()))

    tri = trimodal_fuse(fused["VA"], fused["AT"], fused["VT"], layers["fuse_AVT"])
    return gru_forward(tri, layers["gru_AVT"]) if context else tri


def predict(out: ForwardOutput | ArrayLike) -> NDArray[np.int64]:
    """Argmax por fila; los empates van a la clase de menor índice"""
    probs = out.probs if isinstance(out, ForwardOutput) else np.asarray(out, dtype=np.float64)
    return np.argmax(probs, axis=1).astype(np.int64)
