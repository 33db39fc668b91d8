"""
Vocabulario de capas: densa, GRU con proyección de salida y fusiones
bimodal/trimodal por dimensión
"""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, fields

import numpy as np

from hierfuse.errors import DimensionError
from hierfuse.models.enums import Activation, LayerKind
from hierfuse.models.tensor import (
    Matrix,
    Node,
    add,
    hadamard,
    matmul,
    one_minus,
    row,
    sigmoid_op,
    stack_rows,
    tanh_op,
    tile_rows,
)

Shape = tuple[int, int]


@dataclass(frozen=True)
class DenseParams:
    """Capa densa x·W + b con activación fija"""
    W: Node
    b: Node
    activation: Activation = Activation.TANH


@dataclass(frozen=True)
class ContextGRUParams:
    """
    GRU de contexto con proyección de salida

    Campos:
    - U_z, U_r, U_h: entrada -> compuertas y candidato (d × D)
    - W_z, W_r, W_h: estado -> compuertas y candidato (D × D)
    - U_x, u_x: proyección de salida (D × D) y su sesgo (1 × D)
    """
    U_z: Node
    U_r: Node
    U_h: Node
    W_z: Node
    W_r: Node
    W_h: Node
    U_x: Node
    u_x: Node


@dataclass(frozen=True)
class PairFusionParams:
    """Pesos por dimensión de la fusión bimodal, guardados por columna"""
    w1: Node
    w2: Node
    b: Node


@dataclass(frozen=True)
class TripleFusionParams:
    """Pesos por dimensión de la fusión trimodal, guardados por columna"""
    w1: Node
    w2: Node
    w3: Node
    b: Node


_PARAM_CLASSES = {
    LayerKind.DENSE: DenseParams,
    LayerKind.GRU: ContextGRUParams,
    LayerKind.PAIR_FUSION: PairFusionParams,
    LayerKind.TRIPLE_FUSION: TripleFusionParams,
}


def glorot_uniform(rng: np.random.Generator, fan_in: int, fan_out: int, shape: Shape) -> Matrix:
    """Muestra U(-l, l) con l = sqrt(6 / (fan_in + fan_out))"""
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


@dataclass(frozen=True)
class LayerSpec:
    """
    Descripción de una capa del modelo

    Campos:
    - kind: tipo de capa
    - name: prefijo de sus tensores (p. ej. 'gru_T' -> 'gru_T.U_z')
    - in_dim: ancho de entrada (densa, GRU) o ancho D de la fusión
    - out_dim: ancho de salida
    - activation: solo para capas densas
    """
    kind: LayerKind
    name: str
    in_dim: int
    out_dim: int
    activation: Activation = Activation.TANH

    def shapes(self) -> dict[str, Shape]:
        """Forma de cada tensor, con el nombre completo"""
        d, D = self.in_dim, self.out_dim
        if self.kind is LayerKind.DENSE:
            local = {"W": (d, D), "b": (1, D)}
        elif self.kind is LayerKind.GRU:
            local = {
                "U_z": (d, D), "U_r": (d, D), "U_h": (d, D),
                "W_z": (D, D), "W_r": (D, D), "W_h": (D, D),
                "U_x": (D, D), "u_x": (1, D),
            }
        elif self.kind is LayerKind.PAIR_FUSION:
            local = {"w1": (1, D), "w2": (1, D), "b": (1, D)}
        else:
            local = {"w1": (1, D), "w2": (1, D), "w3": (1, D), "b": (1, D)}
        return {f"{self.name}.{key}": shape for key, shape in local.items()}

    def count(self) -> int:
        """Número de escalares en forma cerrada"""
        d, D = self.in_dim, self.out_dim
        if self.kind is LayerKind.DENSE:
            return d * D + D
        if self.kind is LayerKind.GRU:
            return 3 * d * D + 4 * D * D + D
        if self.kind is LayerKind.PAIR_FUSION:
            return 3 * D
        return 4 * D

    def initialize(self, rng: np.random.Generator) -> dict[str, Matrix]:
        """
        Inicializar los tensores de la capa

        Glorot uniforme para matrices; ceros para sesgos y u_x. Los pesos de
        fusión usan fan_in = número de entradas fusionadas y fan_out = 1.
        """
        tensors: dict[str, Matrix] = {}
        fused_inputs = 2 if self.kind is LayerKind.PAIR_FUSION else 3
        for full_name, shape in self.shapes().items():
            key = full_name.rsplit(".", 1)[1]
            if key in ("b", "u_x"):
                tensors[full_name] = np.zeros(shape)
            elif self.kind in (LayerKind.PAIR_FUSION, LayerKind.TRIPLE_FUSION):
                tensors[full_name] = glorot_uniform(rng, fused_inputs, 1, shape)
            else:
                tensors[full_name] = glorot_uniform(rng, shape[0], shape[1], shape)
        return tensors

    def bind(self, nodes: Mapping[str, Node]):
        """Construir el dataclass de parámetros a partir de los nodos de la cinta"""
        cls = _PARAM_CLASSES[self.kind]
        kwargs = {
            f.name: nodes[f"{self.name}.{f.name}"]
            for f in fields(cls)
            if f.name != "activation"
        }
        if self.kind is LayerKind.DENSE:
            kwargs["activation"] = self.activation
        return cls(**kwargs)


def dense_forward(x: Node, p: DenseParams) -> Node:
    """
    activation(x·W + b), fila por fila

    Raises:
        DimensionError: Si x.cols != W.rows
    """
    if x.cols != p.W.rows:
        raise DimensionError(f"dense_forward: entrada {x.shape} incompatible con W {p.W.shape}")
    out = add(matmul(x, p.W), p.b)
    if p.activation is Activation.TANH:
        return tanh_op(out)
    return out


def gru_forward(f: Node, p: ContextGRUParams, s0: Node | None = None) -> Node:
    """
    GRU unidireccional que devuelve la secuencia de salidas proyectadas F_t

    Por cada t en orden:
        z = σ(f_t U_z + s_{t-1} W_z)
        r = σ(f_t U_r + s_{t-1} W_r)
        h_t = tanh(f_t U_h + (s_{t-1} ⊙ r) W_h)
        F_t = tanh(h_t U_x + u_x)
        s_t = (1 - z) ⊙ F_t + z ⊙ s_{t-1}

    Args:
        f: Secuencia de entrada N × d
        p: Parámetros de la GRU
        s0: Estado inicial 1 × D (ceros si se omite)

    Returns:
        Matriz N × D con F_1..F_N (no los estados s_t)
    """
    if f.cols != p.U_z.rows:
        raise DimensionError(f"gru_forward: entrada {f.shape} incompatible con U_z {p.U_z.shape}")
    width = p.W_z.rows
    tape = f.tape
    if s0 is None:
        s0 = tape.constant(np.zeros((1, width)))
    elif s0.shape != (1, width):
        raise DimensionError(f"gru_forward: estado inicial {s0.shape}, se esperaba (1, {width})")

    # Proyecciones de entrada para toda la secuencia; la fila t solo depende de f_t
    xz, xr, xh = matmul(f, p.U_z), matmul(f, p.U_r), matmul(f, p.U_h)
    state = s0
    outputs = []
    for t in range(f.rows):
        z = sigmoid_op(add(row(xz, t), matmul(state, p.W_z)))
        r = sigmoid_op(add(row(xr, t), matmul(state, p.W_r)))
        h = tanh_op(add(row(xh, t), matmul(hadamard(state, r), p.W_h)))
        out = tanh_op(add(matmul(h, p.U_x), p.u_x))
        state = add(hadamard(one_minus(z), out), hadamard(z, state))
        outputs.append(out)
    return stack_rows(outputs)


def _check_fusion_inputs(op: str, inputs: list[Node], b: Node) -> None:
    first = inputs[0]
    for x in inputs:
        if x.shape != first.shape:
            raise DimensionError(f"{op}: formas incompatibles {first.shape} y {x.shape}")
    if first.cols != b.cols:
        raise DimensionError(f"{op}: entrada {first.shape} incompatible con pesos de ancho {b.cols}")


def bimodal_fuse(g1: Node, g2: Node, p: PairFusionParams) -> Node:
    """out[t][l] = tanh(w1[l]·g1[t][l] + w2[l]·g2[t][l] + b[l])"""
    _check_fusion_inputs("bimodal_fuse", [g1, g2], p.b)
    n = g1.rows
    mixed = add(hadamard(g1, tile_rows(p.w1, n)), hadamard(g2, tile_rows(p.w2, n)))
    return tanh_op(add(mixed, p.b))


def trimodal_fuse(F1: Node, F2: Node, F3: Node, p: TripleFusionParams) -> Node:
    """out[t][l] = tanh(w1[l]·F1[t][l] + w2[l]·F2[t][l] + w3[l]·F3[t][l] + b[l])"""
    _check_fusion_inputs("trimodal_fuse", [F1, F2, F3], p.b)
    n = F1.rows
    mixed = add(
        add(hadamard(F1, tile_rows(p.w1, n)), hadamard(F2, tile_rows(p.w2, n))),
        hadamard(F3, tile_rows(p.w3, n)),
    )
    return tanh_op(add(mixed, p.b))
