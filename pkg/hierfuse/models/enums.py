"""
Enumeraciones del dominio: modalidades, variantes de arquitectura y capas
"""

from enum import Enum


class Modality(str, Enum):
    """Flujos de entrada por utterance"""
    TEXT = "T"
    AUDIO = "A"
    VIDEO = "V"


# Orden canónico de las modalidades en configuraciones y concatenaciones
MODALITY_ORDER: tuple[Modality, ...] = (Modality.TEXT, Modality.AUDIO, Modality.VIDEO)

# Pares bimodales en el orden de la fusión trimodal: VA, AT, VT
PAIRS: tuple[tuple[Modality, Modality], ...] = (
    (Modality.VIDEO, Modality.AUDIO),
    (Modality.AUDIO, Modality.TEXT),
    (Modality.VIDEO, Modality.TEXT),
)


def pair_name(pair: tuple[Modality, Modality]) -> str:
    """Nombre de un par bimodal, p. ej. (V, A) -> 'VA'"""
    return pair[0].value + pair[1].value


class Variant(str, Enum):
    """Variantes de arquitectura"""
    EARLY = "early"
    HFUSION = "hfusion"
    CHFUSION = "chfusion"


class Activation(str, Enum):
    """Activación de una capa densa"""
    TANH = "tanh"
    NONE = "none"


class LayerKind(str, Enum):
    """Tipos de capa con parámetros entrenables"""
    DENSE = "dense"
    GRU = "gru"
    PAIR_FUSION = "pair_fusion"
    TRIPLE_FUSION = "triple_fusion"
