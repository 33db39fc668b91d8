"""
Tests de datasets: carga JSONL, relleno, partición por hablante y generador sintético
"""

import json

import numpy as np
import pytest
from sklearn.linear_model import LogisticRegression

from hierfuse.errors import ContractError, DatasetParseError, DatasetSchemaError, MissingPathError
from hierfuse.models.dataset import Dataset, Utterance, VideoSample
from hierfuse.models.enums import Modality
from hierfuse.schemas.config import SynthSpec
from hierfuse.services.dataset_io import dataset_repository, manifest_path


def write_lines(path, records):
    path.write_text("\n".join(json.dumps(r) for r in records) + "\n", encoding="utf-8")
    return path


def video_record(video_id, speaker_id, widths, labels):
    return {
        "video_id": video_id,
        "speaker_id": speaker_id,
        "utterances": [
            {"label": label, "features": {m: [0.1 * (i + 1)] * w for m, w in widths.items()}}
            for i, label in enumerate(labels)
        ],
    }


def make_video(video_id, speaker_id, n, width=2, label=0):
    utterances = [
        Utterance(label=label, features={Modality.TEXT: np.full(width, float(i))}) for i in range(n)
    ]
    return VideoSample(video_id=video_id, speaker_id=speaker_id, utterances=utterances)


class TestCarga:
    """Tests de carga de archivos JSONL"""

    def test_video_minimo(self, tmp_path):
        """Test: Un video de 2 utterances con T=3 da un dataset con T=3"""
        path = write_lines(tmp_path / "d.jsonl", [video_record("v1", "s1", {"T": 3}, [0, 1])])
        dataset = dataset_repository.load_dataset(path)
        assert len(dataset) == 1
        assert dataset.dims == {Modality.TEXT: 3}
        assert dataset.C == 2
        assert dataset.videos[0].labels == [0, 1]

    def test_anchos_inconsistentes(self, tmp_path):
        """Test: Anchos distintos entre videos fallan nombrando el video"""
        path = write_lines(tmp_path / "d.jsonl", [
            video_record("v1", "s1", {"T": 3}, [0]),
            video_record("v2", "s1", {"T": 4}, [1]),
        ])
        with pytest.raises(DatasetSchemaError, match="v2"):
            dataset_repository.load_dataset(path)

    def test_modalidades_inconsistentes(self, tmp_path):
        """Test: Un video sin una modalidad falla nombrando el video"""
        path = write_lines(tmp_path / "d.jsonl", [
            video_record("v1", "s1", {"T": 2, "A": 2}, [0]),
            video_record("v2", "s1", {"T": 2}, [0]),
        ])
        with pytest.raises(DatasetSchemaError, match="v2"):
            dataset_repository.load_dataset(path)

    def test_linea_mal_formada(self, tmp_path):
        """Test: Una línea que no es JSON falla con su número de línea"""
        path = tmp_path / "d.jsonl"
        path.write_text(json.dumps(video_record("v1", "s1", {"T": 2}, [0])) + "\n{no es json\n", encoding="utf-8")
        with pytest.raises(DatasetParseError) as excinfo:
            dataset_repository.load_dataset(path)
        assert excinfo.value.line_number == 2

    def test_archivo_inexistente(self, tmp_path):
        """Test: Un archivo que no existe falla nombrando la ruta"""
        with pytest.raises(MissingPathError, match="nada.jsonl"):
            dataset_repository.load_dataset(tmp_path / "nada.jsonl")

    def test_manifiesto_define_anchos_y_clases(self, tmp_path):
        """Test: El manifiesto lateral fija C aunque falten clases en los datos"""
        path = write_lines(tmp_path / "d.jsonl", [video_record("v1", "s1", {"T": 2}, [0, 0])])
        manifest_path(path).write_text(json.dumps({"C": 3, "dims": {"T": 2}, "n_videos": 1}), encoding="utf-8")
        dataset = dataset_repository.load_dataset(path)
        assert dataset.C == 3
        assert dataset.class_counts() == [2, 0, 0]

    def test_etiqueta_fuera_del_manifiesto(self, tmp_path):
        """Test: Una etiqueta >= C del manifiesto falla"""
        path = write_lines(tmp_path / "d.jsonl", [video_record("v1", "s1", {"T": 2}, [0, 2])])
        manifest_path(path).write_text(json.dumps({"C": 2, "dims": {"T": 2}, "n_videos": 1}), encoding="utf-8")
        with pytest.raises(DatasetSchemaError, match="v1"):
            dataset_repository.load_dataset(path)

    def test_guardar_escribe_manifiesto(self, tmp_path, tiny_datasets):
        """Test: save_dataset escribe el JSONL y su manifiesto y se puede volver a cargar"""
        train, _ = tiny_datasets
        path = tmp_path / "train.jsonl"
        written = dataset_repository.save_dataset(train, path)
        assert written == tmp_path / "train.manifest.json"
        loaded = dataset_repository.load_dataset(path)
        assert loaded.dims == train.dims
        assert [v.video_id for v in loaded.videos] == [v.video_id for v in train.videos]
        np.testing.assert_array_equal(
            loaded.videos[0].matrix(Modality.AUDIO), train.videos[0].matrix(Modality.AUDIO)
        )


class TestRelleno:
    """Tests del relleno con máscara"""

    def test_video_completo(self):
        """Test: Un video de N utterances queda con máscara completa"""
        video = make_video("v", "s", 4)
        batch = dataset_repository.pad_video(video, 4)
        assert batch.mask.tolist() == [True] * 4
        np.testing.assert_array_equal(batch.features[Modality.TEXT], video.matrix(Modality.TEXT))

    def test_video_corto(self):
        """Test: 3 de N=5 deja las filas 4 y 5 en cero y máscara [1,1,1,0,0]"""
        batch = dataset_repository.pad_video(make_video("v", "s", 3, label=1), 5)
        assert batch.mask.tolist() == [True, True, True, False, False]
        np.testing.assert_array_equal(batch.features[Modality.TEXT][3:], np.zeros((2, 2)))
        assert batch.labels.tolist() == [1, 1, 1, 0, 0]
        assert batch.n_real == 3
        assert batch.unpad()[Modality.TEXT].shape == (3, 2)

    def test_video_vacio(self):
        """Test: Un video sin utterances debe fallar"""
        with pytest.raises(ContractError):
            dataset_repository.pad_video(VideoSample("v", "s", []), 3)

    def test_video_mas_largo_que_n(self):
        """Test: Un video más largo que N debe fallar"""
        with pytest.raises(ContractError):
            dataset_repository.pad_video(make_video("v", "s", 4), 3)

    def test_relleno_al_video_mas_largo(self):
        """Test: pad_dataset usa la longitud del video más largo"""
        dataset = Dataset(
            videos=[make_video("a", "s", 2), make_video("b", "s", 5)],
            dims={Modality.TEXT: 2},
            C=1,
        )
        assert [b.N for b in dataset_repository.pad_dataset(dataset)] == [5, 5]


class TestParticion:
    """Tests de la partición disjunta por hablante"""

    def test_dos_hablantes(self):
        """Test: 2 hablantes con fracción 0.5 dejan uno de cada lado"""
        dataset = Dataset(
            videos=[make_video("a", "s1", 2), make_video("b", "s2", 2)], dims={Modality.TEXT: 2}, C=1
        )
        train, test = dataset_repository.split_speaker_disjoint(dataset, 0.5, seed=0)
        assert len(train.speakers()) == 1 and len(test.speakers()) == 1
        assert set(train.speakers()).isdisjoint(test.speakers())

    def test_determinista_y_disjunta(self):
        """Test: 10 hablantes y 100 videos con fracción 0.3 dan la misma partición con la misma semilla"""
        dataset = Dataset(
            videos=[make_video(f"v{i}", f"s{i % 10}", 2) for i in range(100)], dims={Modality.TEXT: 2}, C=1
        )
        a_train, a_test = dataset_repository.split_speaker_disjoint(dataset, 0.3, seed=42)
        b_train, b_test = dataset_repository.split_speaker_disjoint(dataset, 0.3, seed=42)
        assert [v.video_id for v in a_test.videos] == [v.video_id for v in b_test.videos]
        assert set(a_train.speakers()).isdisjoint(a_test.speakers())
        assert len(a_train) + len(a_test) == 100
        assert len(a_test) == 30

    def test_un_solo_hablante(self):
        """Test: Un único hablante debe fallar"""
        dataset = Dataset(videos=[make_video("a", "s1", 2), make_video("b", "s1", 2)], dims={Modality.TEXT: 2}, C=1)
        with pytest.raises(ContractError):
            dataset_repository.split_speaker_disjoint(dataset, 0.5, seed=0)


class TestSintetico:
    """Tests del generador sintético"""

    def test_tamanos_y_anchos(self, tiny_synth_spec, tiny_datasets):
        """Test: El generador respeta cantidades, longitudes y anchos"""
        train, test = tiny_datasets
        assert len(train) == tiny_synth_spec.n_train and len(test) == tiny_synth_spec.n_test
        assert all(len(v) == tiny_synth_spec.N for v in train.videos)
        assert train.dims == {Modality.TEXT: 4, Modality.AUDIO: 5, Modality.VIDEO: 3}
        train.validate()
        test.validate()

    def test_hablantes_disjuntos(self, tiny_datasets):
        """Test: Ningún hablante aparece en entrenamiento y prueba"""
        train, test = tiny_datasets
        assert set(train.speakers()).isdisjoint(test.speakers())
        assert len(train.speakers()) == 4

    def test_semilla_reproducible(self, tiny_synth_spec):
        """Test: La misma especificación genera los mismos datos"""
        a, _ = dataset_repository.synth_generate(tiny_synth_spec)
        b, _ = dataset_repository.synth_generate(tiny_synth_spec)
        np.testing.assert_array_equal(a.videos[3].matrix(Modality.TEXT), b.videos[3].matrix(Modality.TEXT))
        assert a.videos[3].labels == b.videos[3].labels

    def test_longitud_variable(self):
        """Test: Con min_utterances las longitudes quedan en [min_utterances, N]"""
        spec = SynthSpec(n_train=30, n_test=5, N=6, min_utterances=2, dims={"T": 3}, strength={"T": 1.0})
        train, _ = dataset_repository.synth_generate(spec)
        lengths = {len(v) for v in train.videos}
        assert min(lengths) >= 2 and max(lengths) <= 6
        assert len(lengths) > 1

    def test_persistencia_de_etiquetas(self):
        """Test: label_persistence=1 repite la primera etiqueta en todo el video"""
        spec = SynthSpec(n_train=10, n_test=2, N=8, label_persistence=1.0, dims={"T": 3}, strength={"T": 1.0})
        train, _ = dataset_repository.synth_generate(spec)
        assert all(len(set(v.labels)) == 1 for v in train.videos)

    def test_conteo_por_clase(self, tiny_datasets):
        """Test: class_counts suma todas las utterances"""
        train, _ = tiny_datasets
        assert sum(train.class_counts()) == train.n_utterances

    def test_intensidad_faltante(self):
        """Test: Una modalidad sin intensidad es una especificación inválida"""
        with pytest.raises(ValueError):
            SynthSpec(dims={"T": 3}, strength={"A": 1.0})

    @staticmethod
    def text_features(dataset: Dataset) -> tuple[np.ndarray, np.ndarray]:
        x = np.vstack([v.matrix(Modality.TEXT) for v in dataset.videos])
        y = np.concatenate([v.labels for v in dataset.videos])
        return x, y

    def test_sin_senal_queda_en_azar(self):
        """Test: Con intensidad 0 un clasificador lineal no supera el azar (1/C)"""
        spec = SynthSpec(n_train=100, n_test=60, N=10, dims={"T": 10}, strength={"T": 0.0}, seed=5)
        train, test = dataset_repository.synth_generate(spec)
        clf = LogisticRegression(max_iter=1000).fit(*self.text_features(train))
        x, y = self.text_features(test)
        assert 0.4 <= clf.score(x, y) <= 0.6

    def test_senal_fuerte_es_separable(self):
        """Test: Sin conflicto y con intensidad >> ruido una sola modalidad separa las clases"""
        spec = SynthSpec(
            n_train=50, n_test=5, N=10, dims={"T": 20}, strength={"T": 5.0},
            noise_std=0.5, conflict_fraction=0.0, seed=2,
        )
        train, _ = dataset_repository.synth_generate(spec)
        x, y = self.text_features(train)
        assert LogisticRegression(max_iter=1000).fit(x, y).score(x, y) >= 0.99
