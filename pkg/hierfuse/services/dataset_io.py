"""
Operaciones sobre datasets: carga/guardado JSONL, relleno con máscara,
partición disjunta por hablante y generador sintético multimodal
"""

import json
import logging
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from hierfuse.errors import ContractError, DatasetParseError, DatasetSchemaError, MissingPathError
from hierfuse.models.dataset import Dataset, PaddedBatch, Utterance, VideoSample
from hierfuse.models.enums import MODALITY_ORDER, Modality
from hierfuse.schemas.config import SynthSpec
from hierfuse.schemas.records import DatasetManifest, UtteranceRecord, VideoRecord

logger = logging.getLogger(__name__)


def manifest_path(path: Path) -> Path:
    """Ruta del manifiesto lateral: datos.jsonl -> datos.manifest.json"""
    path = Path(path)
    return path.with_name(f"{path.stem}.manifest.json")


class DatasetRepository:
    """Clase para operaciones de datasets"""

    def load_dataset(self, path: Path) -> Dataset:
        """
        Cargar un dataset JSONL (un video por línea)

        Args:
            path: Ruta del archivo .jsonl

        Returns:
            Dataset validado

        Raises:
            MissingPathError: Si el archivo no existe
            DatasetParseError: Línea mal formada (con número de línea)
            DatasetSchemaError: Anchos, modalidades o etiquetas inconsistentes
        """
        path = Path(path)
        if not path.is_file():
            raise MissingPathError(path)

        manifest = self._load_manifest(path)
        videos: list[VideoSample] = []
        with path.open("r", encoding="utf-8") as handle:
            for line_number, line in enumerate(handle, start=1):
                if not line.strip():
                    continue
                try:
                    record = VideoRecord.model_validate_json(line)
                except ValidationError as e:
                    raise DatasetParseError(path, line_number, _first_error(e)) from e
                videos.append(self._to_sample(record))

        if not videos:
            raise DatasetSchemaError(None, f"{path} no contiene videos")

        if manifest is not None:
            dims, classes = dict(manifest.dims), manifest.C
            if manifest.n_videos != len(videos):
                raise DatasetSchemaError(
                    None, f"El manifiesto declara {manifest.n_videos} videos y el archivo tiene {len(videos)}"
                )
        else:
            first = videos[0].utterances[0]
            dims = {m: int(v.shape[0]) for m, v in first.features.items()}
            classes = max(u.label for v in videos for u in v.utterances) + 1
            logger.warning(
                "No se encontró %s; anchos inferidos %s y C=%d",
                manifest_path(path), _dims_text(dims), classes,
            )

        dataset = Dataset(videos=videos, dims=dims, C=classes)
        dataset.validate()
        logger.info(
            "Dataset %s: %d videos, %d utterances, anchos %s, C=%d",
            path, len(dataset), dataset.n_utterances, _dims_text(dims), classes,
        )
        return dataset

    def save_dataset(self, dataset: Dataset, path: Path) -> Path:
        """
        Guardar un dataset como JSONL más su manifiesto lateral

        Returns:
            Ruta del manifiesto escrito
        """
        dataset.validate()
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8") as handle:
            for video in dataset.videos:
                record = VideoRecord(
                    video_id=video.video_id,
                    speaker_id=video.speaker_id,
                    utterances=[
                        UtteranceRecord(
                            label=u.label,
                            features={m: u.features[m].tolist() for m in dataset.modalities},
                        )
                        for u in video.utterances
                    ],
                )
                handle.write(record.model_dump_json() + "\n")
        manifest = DatasetManifest(C=dataset.C, dims=dataset.dims, n_videos=len(dataset))
        target = manifest_path(path)
        target.write_text(manifest.model_dump_json(indent=2) + "\n", encoding="utf-8")
        return target

    def pad_video(self, video: VideoSample, N: int) -> PaddedBatch:
        """
        Rellenar un video con utterances nulas hasta N

        Raises:
            ContractError: Video vacío o más largo que N
        """
        n_real = len(video)
        if n_real == 0:
            raise ContractError(f"El video '{video.video_id}' no tiene utterances")
        if n_real > N:
            raise ContractError(f"El video '{video.video_id}' tiene {n_real} utterances y N es {N}")
        mask = np.zeros(N, dtype=bool)
        mask[:n_real] = True
        labels = np.zeros(N, dtype=np.int64)
        labels[:n_real] = video.labels
        features = {}
        for modality in video.utterances[0].features:
            padded = np.zeros((N, video.utterances[0].features[modality].shape[0]))
            padded[:n_real] = video.matrix(modality)
            features[modality] = padded
        return PaddedBatch(
            video_id=video.video_id,
            features=features,
            labels=labels,
            mask=mask,
            speaker_id=video.speaker_id,
        )

    def pad_dataset(self, dataset: Dataset, N: int | None = None) -> list[PaddedBatch]:
        """Rellenar todos los videos a N (por defecto, el video más largo)"""
        target = N if N is not None else dataset.max_utterances
        return [self.pad_video(v, target) for v in dataset.videos]

    def split_speaker_disjoint(
        self, dataset: Dataset, test_fraction: float, seed: int
    ) -> tuple[Dataset, Dataset]:
        """
        Partir por hablantes para que ninguno quede en ambos lados

        Los hablantes se barajan con la semilla y se pasan a prueba hasta
        cubrir test_fraction de los videos, dejando al menos uno en
        entrenamiento.

        Raises:
            ContractError: Menos de dos hablantes o fracción fuera de (0, 1)
        """
        if not 0 < test_fraction < 1:
            raise ContractError(f"test_fraction debe estar en (0, 1), se recibió {test_fraction}")
        speakers = sorted(dataset.speakers())
        if len(speakers) < 2:
            raise ContractError("Se requieren al menos dos hablantes distintos")
        per_speaker = {s: 0 for s in speakers}
        for video in dataset.videos:
            per_speaker[video.speaker_id] += 1

        rng = np.random.default_rng(seed)
        order = [speakers[i] for i in rng.permutation(len(speakers))]
        target = test_fraction * len(dataset)
        test_speakers: set[str] = set()
        covered = 0
        for speaker in order[:-1]:
            if covered >= target:
                break
            test_speakers.add(speaker)
            covered += per_speaker[speaker]

        train = [v for v in dataset.videos if v.speaker_id not in test_speakers]
        test = [v for v in dataset.videos if v.speaker_id in test_speakers]
        logger.info(
            "Partición por hablante: %d/%d videos (%d/%d hablantes)",
            len(train), len(test), len(speakers) - len(test_speakers), len(test_speakers),
        )
        return dataset.subset(train), dataset.subset(test)

    def synth_generate(self, spec: SynthSpec) -> tuple[Dataset, Dataset]:
        """
        Generar datasets sintéticos de entrenamiento y prueba

        Cada modalidad de una utterance es prototipo(clase) × intensidad más
        ruido gaussiano; con probabilidad conflict_fraction una modalidad
        elegida al azar usa el prototipo de otra clase.
        """
        rng = np.random.default_rng(spec.seed)
        prototypes = {m: _prototypes(rng, width, spec.C) for m, width in spec.dims.items()}
        train = [
            self._synth_video(rng, spec, prototypes, f"train-{i:04d}", f"S{i % spec.n_speakers:03d}")
            for i in range(spec.n_train)
        ]
        test_pool = max(1, spec.n_speakers // 3)
        test = [
            self._synth_video(
                rng, spec, prototypes, f"test-{i:04d}", f"S{spec.n_speakers + i % test_pool:03d}"
            )
            for i in range(spec.n_test)
        ]
        dims = dict(spec.dims)
        return Dataset(videos=train, dims=dims, C=spec.C), Dataset(videos=test, dims=dict(dims), C=spec.C)

    def _synth_video(self, rng, spec: SynthSpec, prototypes, video_id: str, speaker_id: str) -> VideoSample:
        length = spec.N
        if spec.min_utterances is not None:
            length = int(rng.integers(spec.min_utterances, spec.N + 1))
        modalities = list(spec.dims)
        utterances = []
        label = None
        for _ in range(length):
            if label is None or rng.random() >= spec.label_persistence:
                label = int(rng.integers(spec.C))
            sources = {m: label for m in modalities}
            if rng.random() < spec.conflict_fraction:
                victim = modalities[int(rng.integers(len(modalities)))]
                others = [c for c in range(spec.C) if c != label]
                sources[victim] = others[int(rng.integers(len(others)))]
            features = {
                m: prototypes[m][sources[m]] * spec.strength[m]
                + rng.normal(0.0, spec.noise_std, size=spec.dims[m])
                for m in modalities
            }
            utterances.append(Utterance(label=label, features=features))
        return VideoSample(video_id=video_id, speaker_id=speaker_id, utterances=utterances)

    def _load_manifest(self, path: Path) -> DatasetManifest | None:
        target = manifest_path(path)
        if not target.is_file():
            return None
        try:
            return DatasetManifest.model_validate_json(target.read_text(encoding="utf-8"))
        except ValidationError as e:
            raise DatasetParseError(target, 1, _first_error(e)) from e

    def _to_sample(self, record: VideoRecord) -> VideoSample:
        return VideoSample(
            video_id=record.video_id,
            speaker_id=record.speaker_id,
            utterances=[
                Utterance(
                    label=u.label,
                    features={m: np.asarray(v, dtype=np.float64) for m, v in u.features.items()},
                )
                for u in record.utterances
            ],
        )


def _prototypes(rng: np.random.Generator, width: int, classes: int) -> np.ndarray:
    """Vectores unitarios por clase; ortogonales cuando width >= classes"""
    raw = rng.normal(size=(width, classes))
    if width >= classes:
        q, _ = np.linalg.qr(raw)
        return q.T
    return (raw / np.linalg.norm(raw, axis=0, keepdims=True)).T


def _first_error(error: ValidationError) -> str:
    first = error.errors()[0]
    location = ".".join(str(p) for p in first.get("loc", ()))
    return f"{location}: {first.get('msg')}" if location else str(first.get("msg"))


def _dims_text(dims: dict[Modality, int]) -> str:
    return json.dumps({m.value: dims[m] for m in MODALITY_ORDER if m in dims})


# Instancia global del repositorio
dataset_repository = DatasetRepository()
