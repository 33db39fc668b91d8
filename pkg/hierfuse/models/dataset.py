"""
Entidades de datos: videos, datasets y lotes con relleno
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from hierfuse.errors import DatasetSchemaError
from hierfuse.models.enums import MODALITY_ORDER, Modality
from hierfuse.models.tensor import Matrix


@dataclass
class Utterance:
    """Una utterance: etiqueta y vector de características por modalidad"""
    label: int
    features: dict[Modality, NDArray[np.float64]]


@dataclass
class VideoSample:
    """
    Un video como secuencia ordenada de utterances

    Campos:
    - video_id: identificador único del video
    - speaker_id: hablante del video (para particiones disjuntas)
    - utterances: utterances en orden temporal
    """
    video_id: str
    speaker_id: str
    utterances: list[Utterance]

    def __len__(self) -> int:
        return len(self.utterances)

    def __repr__(self) -> str:
        return f"<VideoSample(video_id='{self.video_id}', speaker_id='{self.speaker_id}', n={len(self)})>"

    def matrix(self, modality: Modality) -> Matrix:
        """Características de una modalidad como matriz len × d"""
        return np.vstack([u.features[modality] for u in self.utterances])

    @property
    def labels(self) -> list[int]:
        return [u.label for u in self.utterances]


@dataclass
class Dataset:
    """Colección de videos con anchos por modalidad y número de clases"""
    videos: list[VideoSample]
    dims: dict[Modality, int]
    C: int

    def __len__(self) -> int:
        return len(self.videos)

    @property
    def modalities(self) -> list[Modality]:
        return [m for m in MODALITY_ORDER if m in self.dims]

    @property
    def max_utterances(self) -> int:
        return max((len(v) for v in self.videos), default=0)

    @property
    def n_utterances(self) -> int:
        return sum(len(v) for v in self.videos)

    def speakers(self) -> list[str]:
        """Hablantes distintos en orden de primera aparición"""
        return list(dict.fromkeys(v.speaker_id for v in self.videos))

    def class_counts(self) -> list[int]:
        """Utterances por clase"""
        counts = Counter(u.label for v in self.videos for u in v.utterances)
        return [counts.get(c, 0) for c in range(self.C)]

    def subset(self, videos: list[VideoSample]) -> Dataset:
        """Dataset con los mismos anchos y clases pero otros videos"""
        return Dataset(videos=videos, dims=dict(self.dims), C=self.C)

    def validate(self) -> None:
        """
        Verificar las invariantes del dataset

        Raises:
            DatasetSchemaError: Dataset vacío, modalidades o anchos inconsistentes,
                etiquetas fuera de [0, C)
        """
        if not self.videos:
            raise DatasetSchemaError(None, "El dataset no tiene videos")
        if self.C < 1:
            raise DatasetSchemaError(None, f"C debe ser >= 1, se recibió {self.C}")
        expected = set(self.dims)
        for video in self.videos:
            if not video.utterances:
                raise DatasetSchemaError(video.video_id, "El video no tiene utterances")
            for index, utt in enumerate(video.utterances):
                if set(utt.features) != expected:
                    found = "".join(m.value for m in MODALITY_ORDER if m in utt.features)
                    raise DatasetSchemaError(
                        video.video_id,
                        f"utterance {index}: modalidades {found or '-'}, se esperaban "
                        f"{''.join(m.value for m in self.modalities)}",
                    )
                for modality, width in self.dims.items():
                    vector = utt.features[modality]
                    if vector.shape != (width,):
                        raise DatasetSchemaError(
                            video.video_id,
                            f"utterance {index}: ancho {vector.shape[-1]} en {modality.value}, "
                            f"se esperaba {width}",
                        )
                if not 0 <= utt.label < self.C:
                    raise DatasetSchemaError(
                        video.video_id, f"utterance {index}: etiqueta {utt.label} fuera de [0, {self.C})"
                    )


@dataclass
class PaddedBatch:
    """
    Un video rellenado a N utterances

    Las filas de relleno son ceros, su etiqueta es 0 y su máscara es False;
    la máscara es un prefijo de True seguido de un sufijo de False.
    """
    video_id: str
    features: dict[Modality, Matrix]
    labels: NDArray[np.int64]
    mask: NDArray[np.bool_]
    speaker_id: str = field(default="")

    @property
    def N(self) -> int:
        return int(self.mask.shape[0])

    @property
    def n_real(self) -> int:
        return int(self.mask.sum())

    def unpad(self) -> dict[Modality, Matrix]:
        """Características de las filas reales"""
        return {m: x[self.mask] for m, x in self.features.items()}
