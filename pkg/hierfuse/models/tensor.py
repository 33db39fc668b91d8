"""
Núcleo tensorial: matrices densas en doble precisión, diferenciación
automática en modo reverso sobre una cinta y oráculo de diferencias finitas

Cada operación calcula su valor con numpy y, al registrarse en la cinta,
guarda lo necesario para que su regla de retropropagación (registrada en
VJP_RULES) produzca los gradientes de sus entradas.
"""

from __future__ import annotations

import logging
from collections.abc import Callable, Iterator, Mapping, Sequence
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray

from hierfuse.errors import ContractError, DimensionError

logger = logging.getLogger(__name__)

Matrix = NDArray[np.float64]

# Cota inferior de probabilidad antes del logaritmo
LOG_CLAMP = 1e-12


class OpKind(str, Enum):
    """Etiqueta de la operación que produjo un nodo"""
    PARAM = "param"
    CONST = "const"
    MATMUL = "matmul"
    ADD = "add"
    HADAMARD = "hadamard"
    ONE_MINUS = "one_minus"
    TANH = "tanh"
    SIGMOID = "sigmoid"
    CONCAT_COLS = "concat_cols"
    SOFTMAX_ROW = "softmax_row"
    ROW = "row"
    STACK_ROWS = "stack_rows"
    SUM = "sum"
    MASKED_NLL = "masked_nll"


def as_matrix(values: ArrayLike) -> Matrix:
    """
    Convertir a matriz 2-D float64 (copia)

    Un escalar se vuelve 1x1 y un vector se vuelve fila.

    Raises:
        DimensionError: Si el arreglo tiene más de dos dimensiones
    """
    arr = np.array(values, dtype=np.float64, order="C")
    if arr.ndim == 0:
        return arr.reshape(1, 1)
    if arr.ndim == 1:
        return arr.reshape(1, -1)
    if arr.ndim != 2:
        raise DimensionError(f"Se esperaba una matriz 2-D, se recibió forma {arr.shape}")
    return arr


@dataclass(eq=False)
class Node:
    """
    Valor registrado en una cinta

    Campos:
    - value: matriz de solo lectura
    - tape_id: posición en la cinta
    - op: operación que lo produjo
    - parents: tape_id de las entradas (siempre anteriores)
    - ctx: valores guardados para la regla de retropropagación
    - name: nombre del parámetro (solo nodos PARAM)
    """
    value: Matrix
    tape_id: int
    op: OpKind
    parents: tuple[int, ...]
    tape: Tape = field(repr=False)
    ctx: dict[str, Any] = field(default_factory=dict, repr=False)
    name: str | None = None

    @property
    def shape(self) -> tuple[int, int]:
        return self.value.shape  # type: ignore[return-value]

    @property
    def rows(self) -> int:
        return self.value.shape[0]

    @property
    def cols(self) -> int:
        return self.value.shape[1]


class Tape:
    """Registro ordenado de las operaciones de una pasada hacia adelante"""

    def __init__(self) -> None:
        self.nodes: list[Node] = []
        self._params: dict[str, Node] = {}

    def __len__(self) -> int:
        return len(self.nodes)

    def record(
        self,
        op: OpKind,
        value: Matrix,
        parents: Sequence[Node] = (),
        name: str | None = None,
        **ctx: Any,
    ) -> Node:
        """Agregar un nodo; sus padres ya deben estar en esta cinta"""
        for parent in parents:
            if parent.tape is not self:
                raise ContractError(f"{op.value}: la entrada pertenece a otra cinta")
        value.flags.writeable = False
        node = Node(
            value=value,
            tape_id=len(self.nodes),
            op=op,
            parents=tuple(p.tape_id for p in parents),
            tape=self,
            ctx=ctx,
            name=name,
        )
        self.nodes.append(node)
        return node

    def param(self, name: str, value: ArrayLike) -> Node:
        """Registrar un parámetro entrenable (hoja con gradiente)"""
        if name in self._params:
            raise ContractError(f"El parámetro '{name}' ya está en la cinta")
        node = self.record(OpKind.PARAM, as_matrix(value), name=name)
        self._params[name] = node
        return node

    def constant(self, value: ArrayLike) -> Node:
        """Registrar una constante (hoja sin gradiente)"""
        return self.record(OpKind.CONST, as_matrix(value))

    @property
    def params(self) -> dict[str, Node]:
        return dict(self._params)


class GradientStore(Mapping[str, Matrix]):
    """Gradientes por nombre de parámetro, con la misma forma que el parámetro"""

    def __init__(self, grads: Mapping[str, Matrix]):
        self._grads = dict(grads)

    def __getitem__(self, name: str) -> Matrix:
        return self._grads[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self._grads)

    def __len__(self) -> int:
        return len(self._grads)

    def __repr__(self) -> str:
        shapes = ", ".join(f"{k}: {v.shape}" for k, v in self._grads.items())
        return f"<GradientStore({shapes})>"

    @classmethod
    def weighted_sum(
        cls, stores: Sequence[GradientStore], weights: Sequence[float]
    ) -> GradientStore:
        """Suma ponderada en el orden dado (determinista)"""
        if not stores:
            raise ContractError("weighted_sum requiere al menos un GradientStore")
        total = {name: np.zeros_like(g) for name, g in stores[0].items()}
        for store, weight in zip(stores, weights):
            for name, g in store.items():
                total[name] += weight * g
        return cls(total)


# ---------------------------------------------------------------------------
# Operaciones
# ---------------------------------------------------------------------------

def _same_shape(op: str, a: Node, b: Node) -> None:
    if a.shape != b.shape:
        raise DimensionError(f"{op}: formas incompatibles {a.shape} y {b.shape}")


def matmul(a: Node, b: Node) -> Node:
    """Producto matricial a·b"""
    if a.cols != b.rows:
        raise DimensionError(f"matmul: formas incompatibles {a.shape} × {b.shape}")
    return a.tape.record(OpKind.MATMUL, a.value @ b.value, (a, b))


def add(a: Node, b: Node) -> Node:
    """Suma elemento a elemento; b puede ser una fila 1×cols que se suma a cada fila de a"""
    broadcast = b.rows == 1 and a.rows != 1 and a.cols == b.cols
    if not broadcast:
        _same_shape("add", a, b)
    return a.tape.record(OpKind.ADD, a.value + b.value, (a, b), broadcast=broadcast)


def hadamard(a: Node, b: Node) -> Node:
    """Producto elemento a elemento"""
    _same_shape("hadamard", a, b)
    return a.tape.record(OpKind.HADAMARD, a.value * b.value, (a, b))


def one_minus(a: Node) -> Node:
    """1 - a elemento a elemento"""
    return a.tape.record(OpKind.ONE_MINUS, 1.0 - a.value, (a,))


def tanh_op(a: Node) -> Node:
    """Tangente hiperbólica elemento a elemento"""
    return a.tape.record(OpKind.TANH, np.tanh(a.value), (a,))


def sigmoid_op(a: Node) -> Node:
    """Sigmoide logística 1/(1+e^{-x}) en forma estable"""
    value = np.exp(-np.logaddexp(0.0, -a.value))
    return a.tape.record(OpKind.SIGMOID, value, (a,))


def concat_cols(parts: Sequence[Node]) -> Node:
    """Concatenar columnas en el orden de los argumentos"""
    if not parts:
        raise ContractError("concat_cols requiere al menos una matriz")
    rows = parts[0].rows
    for part in parts[1:]:
        if part.rows != rows:
            raise DimensionError(
                f"concat_cols: número de filas incompatible {parts[0].shape} y {part.shape}"
            )
    widths = [p.cols for p in parts]
    value = np.concatenate([p.value for p in parts], axis=1)
    return parts[0].tape.record(OpKind.CONCAT_COLS, value, parts, widths=widths)


def softmax_row(a: Node) -> Node:
    """Softmax por fila con resta del máximo"""
    shifted = a.value - a.value.max(axis=1, keepdims=True)
    exps = np.exp(shifted)
    return a.tape.record(OpKind.SOFTMAX_ROW, exps / exps.sum(axis=1, keepdims=True), (a,))


def row(a: Node, index: int) -> Node:
    """Fila `index` de a como matriz 1×cols"""
    if not 0 <= index < a.rows:
        raise DimensionError(f"row: índice {index} fuera de rango para forma {a.shape}")
    return a.tape.record(OpKind.ROW, a.value[index:index + 1, :].copy(), (a,), index=index)


def stack_rows(parts: Sequence[Node]) -> Node:
    """Apilar filas 1×cols en una matriz len(parts)×cols"""
    if not parts:
        raise ContractError("stack_rows requiere al menos una fila")
    cols = parts[0].cols
    for part in parts:
        if part.rows != 1 or part.cols != cols:
            raise DimensionError(f"stack_rows: se esperaba 1×{cols}, se recibió {part.shape}")
    value = np.vstack([p.value for p in parts])
    return parts[0].tape.record(OpKind.STACK_ROWS, value, parts)


def sum_all(a: Node) -> Node:
    """Suma de todas las entradas como 1×1"""
    return a.tape.record(OpKind.SUM, np.array([[a.value.sum()]]), (a,))


def tile_rows(a: Node, n: int) -> Node:
    """Repetir una fila 1×cols n veces (producto con una columna de unos)"""
    if a.rows != 1:
        raise DimensionError(f"tile_rows: se esperaba una fila, se recibió {a.shape}")
    return matmul(a.tape.constant(np.ones((n, 1))), a)


def masked_nll(probs: Node, labels: Sequence[int], mask: Sequence[bool]) -> Node:
    """
    Log-verosimilitud negativa media sobre las filas con máscara verdadera

    Las probabilidades se acotan por debajo en LOG_CLAMP antes del logaritmo.

    Raises:
        ContractError: Si no hay filas activas o las etiquetas no son válidas
    """
    labels_arr, mask_arr = check_targets(probs.value, labels, mask)
    active = np.flatnonzero(mask_arr)
    picked = probs.value[active, labels_arr[active]]
    value = -np.log(np.maximum(picked, LOG_CLAMP)).sum() / active.size
    return probs.tape.record(
        OpKind.MASKED_NLL,
        np.array([[value]]),
        (probs,),
        active=active,
        labels=labels_arr[active],
    )


def check_targets(
    probs: Matrix, labels: Sequence[int], mask: Sequence[bool]
) -> tuple[NDArray[np.int64], NDArray[np.bool_]]:
    labels_arr = np.asarray(labels, dtype=np.int64)
    mask_arr = np.asarray(mask, dtype=bool)
    n, classes = probs.shape
    if labels_arr.shape != (n,) or mask_arr.shape != (n,):
        raise DimensionError(
            f"Se esperaban {n} etiquetas y máscara, se recibieron "
            f"{labels_arr.shape} y {mask_arr.shape}"
        )
    if not mask_arr.any():
        raise ContractError("No hay utterances activas en la máscara (M = 0)")
    active_labels = labels_arr[mask_arr]
    if active_labels.min() < 0 or active_labels.max() >= classes:
        raise ContractError(f"Etiquetas fuera de [0, {classes})")
    return labels_arr, mask_arr


# ---------------------------------------------------------------------------
# Reglas de retropropagación
# ---------------------------------------------------------------------------

VjpRule = Callable[[Node, Matrix, list[Node]], tuple[Matrix | None, ...]]


def _vjp_matmul(node: Node, g: Matrix, parents: list[Node]) -> tuple[Matrix, Matrix]:
    a, b = parents
    return g @ b.value.T, a.value.T @ g


def _vjp_add(node: Node, g: Matrix, parents: list[Node]) -> tuple[Matrix, Matrix]:
    if node.ctx["broadcast"]:
        return g, g.sum(axis=0, keepdims=True)
    return g, g


def _vjp_concat(node: Node, g: Matrix, parents: list[Node]) -> tuple[Matrix, ...]:
    bounds = np.cumsum(node.ctx["widths"])[:-1]
    return tuple(np.split(g, bounds, axis=1))


def _vjp_softmax(node: Node, g: Matrix, parents: list[Node]) -> tuple[Matrix]:
    y = node.value
    return (y * (g - (g * y).sum(axis=1, keepdims=True)),)


def _vjp_row(node: Node, g: Matrix, parents: list[Node]) -> tuple[Matrix]:
    grad = np.zeros(parents[0].shape)
    grad[node.ctx["index"]] = g[0]
    return (grad,)


def _vjp_masked_nll(node: Node, g: Matrix, parents: list[Node]) -> tuple[Matrix]:
    probs = parents[0].value
    active, labels = node.ctx["active"], node.ctx["labels"]
    picked = probs[active, labels]
    grad = np.zeros(probs.shape)
    # La cota anula el gradiente de las probabilidades acotadas
    live = picked > LOG_CLAMP
    grad[active[live], labels[live]] = -g[0, 0] / (active.size * picked[live])
    return (grad,)


VJP_RULES: dict[OpKind, VjpRule] = {
    OpKind.MATMUL: _vjp_matmul,
    OpKind.ADD: _vjp_add,
    OpKind.HADAMARD: lambda node, g, parents: (g * parents[1].value, g * parents[0].value),
    OpKind.ONE_MINUS: lambda node, g, parents: (-g,),
    OpKind.TANH: lambda node, g, parents: (g * (1.0 - node.value ** 2),),
    OpKind.SIGMOID: lambda node, g, parents: (g * node.value * (1.0 - node.value),),
    OpKind.CONCAT_COLS: _vjp_concat,
    OpKind.SOFTMAX_ROW: _vjp_softmax,
    OpKind.ROW: _vjp_row,
    OpKind.STACK_ROWS: lambda node, g, parents: tuple(np.vsplit(g, g.shape[0])),
    OpKind.SUM: lambda node, g, parents: (np.full(parents[0].shape, g[0, 0]),),
    OpKind.MASKED_NLL: _vjp_masked_nll,
}


def backward(tape: Tape, loss: Node) -> GradientStore:
    """
    Acumulación reversa sobre la cinta

    Args:
        tape: Cinta que contiene la pasada hacia adelante
        loss: Nodo escalar 1×1 de la pérdida

    Returns:
        Gradiente de cada parámetro de la cinta; ceros para los que no
        participan en la pérdida

    Raises:
        ContractError: Si la pérdida no es 1×1 o no pertenece a la cinta
    """
    if loss.tape is not tape:
        raise ContractError("La pérdida no pertenece a la cinta")
    if loss.shape != (1, 1):
        raise ContractError(f"La pérdida debe ser 1×1, se recibió {loss.shape}")

    adjoints: dict[int, Matrix] = {loss.tape_id: np.ones((1, 1))}
    grads: dict[str, Matrix] = {}
    for node in reversed(tape.nodes[: loss.tape_id + 1]):
        g = adjoints.pop(node.tape_id, None)
        if node.op is OpKind.PARAM:
            grads[node.name] = g if g is not None else np.zeros(node.shape)
            continue
        if g is None or not node.parents:
            continue
        parents = [tape.nodes[i] for i in node.parents]
        for parent, pg in zip(parents, VJP_RULES[node.op](node, g, parents)):
            if pg is None or parent.op is OpKind.CONST:
                continue
            if parent.tape_id in adjoints:
                adjoints[parent.tape_id] = adjoints[parent.tape_id] + pg
            else:
                adjoints[parent.tape_id] = pg

    # Parámetros registrados después de la pérdida tampoco participan
    for name, node in tape.params.items():
        grads.setdefault(name, np.zeros(node.shape))
    return GradientStore({name: grads[name] for name in tape.params})


def finite_diff_grad(
    f: Callable[[Mapping[str, Matrix]], float],
    params: Mapping[str, ArrayLike],
    epsilon: float = 1e-5,
) -> GradientStore:
    """
    Gradiente por diferencias centrales (f(θ+εe) - f(θ-εe)) / 2ε

    Args:
        f: Función escalar de un diccionario de parámetros
        params: Punto de evaluación (no se modifica)
        epsilon: Paso de la perturbación

    Returns:
        Gradiente numérico por parámetro
    """
    if epsilon <= 0:
        raise ContractError(f"epsilon debe ser > 0, se recibió {epsilon}")
    shifted = {name: as_matrix(value) for name, value in params.items()}
    grads: dict[str, Matrix] = {}
    for name, arr in shifted.items():
        grad = np.zeros(arr.shape)
        for idx in np.ndindex(arr.shape):
            old = arr[idx]
            arr[idx] = old + epsilon
            f_plus = f(shifted)
            arr[idx] = old - epsilon
            f_minus = f(shifted)
            arr[idx] = old
            grad[idx] = (f_plus - f_minus) / (2.0 * epsilon)
        grads[name] = grad
        logger.debug("Diferencias finitas de '%s' (%d escalares)", name, arr.size)
    return GradientStore(grads)


def relative_error(a: ArrayLike, b: ArrayLike) -> Matrix:
    """|a-b| / max(|a|, |b|, 1e-8) elemento a elemento"""
    a_arr = np.asarray(a, dtype=np.float64)
    b_arr = np.asarray(b, dtype=np.float64)
    denom = np.maximum(np.maximum(np.abs(a_arr), np.abs(b_arr)), 1e-8)
    return np.abs(a_arr - b_arr) / denom
