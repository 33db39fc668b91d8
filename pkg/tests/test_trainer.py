"""
Tests del entrenamiento: pérdida, Adam, ciclo con early stopping y métricas
"""

import math
import statistics

import numpy as np
import pytest

from hierfuse.errors import ContractError
from hierfuse.models.dataset import PaddedBatch
from hierfuse.models.enums import Modality
from hierfuse.models.fusion import build_model, forward
from hierfuse.models.tensor import GradientStore
from hierfuse.schemas.config import ModelConfig, SynthSpec, TrainConfig
from hierfuse.services.dataset_io import dataset_repository
from hierfuse.services.trainer import (
    AdamState,
    Trainer,
    adam_step,
    compute_metrics,
    cross_entropy,
)


def small_model_config(variant: str, spec: SynthSpec, seed: int = 0, **overrides) -> ModelConfig:
    """Modelo con los anchos del dataset sintético y capas ocultas pequeñas"""
    values = {
        "variant": variant,
        "modalities": "TAV",
        "d_T": spec.dims[Modality.TEXT],
        "d_A": spec.dims[Modality.AUDIO],
        "d_V": spec.dims[Modality.VIDEO],
        "ctx_T": 16, "ctx_A": 16, "ctx_V": 16,
        "D": 16, "D2": 16, "D3": 16,
        "C": spec.C,
        "seed": seed,
    }
    values.update(overrides)
    return ModelConfig(**values)


class TestEntropiaCruzada:
    """Tests de la entropía cruzada con máscara"""

    def test_uniforme(self):
        """Test: Probabilidades uniformes con C=2 dan ln 2"""
        probs = np.full((3, 2), 0.5)
        assert cross_entropy(probs, [0, 1, 1], [True] * 3) == pytest.approx(0.6931471805599453, abs=1e-15)

    def test_uno_caliente(self):
        """Test: Probabilidad 1 en la etiqueta correcta da pérdida 0"""
        probs = np.array([[1.0, 0.0], [0.0, 1.0]])
        assert cross_entropy(probs, [0, 1], [True, True]) == pytest.approx(0.0, abs=1e-12)

    def test_valor_directo(self):
        """Test: [0.75, 0.25] con etiqueta 0 da -ln 0.75"""
        assert cross_entropy([[0.75, 0.25]], [0], [True]) == pytest.approx(0.2876820724517809, abs=1e-15)

    def test_sin_utterances_activas(self):
        """Test: M = 0 debe fallar"""
        with pytest.raises(ContractError):
            cross_entropy([[0.5, 0.5]], [0], [False])

    def test_probabilidad_cero_acotada(self):
        """Test: Probabilidad 0 en la etiqueta da una pérdida finita"""
        assert math.isfinite(cross_entropy([[1.0, 0.0]], [1], [True]))


class TestAdam:
    """Tests del paso de Adam"""

    def test_primer_paso(self):
        """Test: w=0, g=1, lr=1e-3 da w ≈ -0.001"""
        params = {"w": np.array([[0.0]])}
        new, state = adam_step(params, GradientStore({"w": np.array([[1.0]])}), AdamState())
        assert new["w"][0, 0] == pytest.approx(-0.001, abs=1e-10)
        assert state.t == 1

    def test_gradiente_nulo(self):
        """Test: Gradiente cero deja los parámetros iguales e incrementa t"""
        params = {"w": np.array([[1.5, -2.0]])}
        state = AdamState()
        new, state = adam_step(params, GradientStore({"w": np.zeros((1, 2))}), state)
        np.testing.assert_array_equal(new["w"], params["w"])
        assert state.t == 1

    def test_tasa_cero(self, rng):
        """Test: Con lr=0 los parámetros no cambian"""
        params = {"w": rng.normal(size=(3, 3))}
        new, _ = adam_step(params, GradientStore({"w": rng.normal(size=(3, 3))}), AdamState(lr=0.0))
        assert np.abs(new["w"] - params["w"]).max() < 1e-15

    def test_formas_distintas(self):
        """Test: Gradiente con otra forma debe fallar"""
        with pytest.raises(ContractError):
            adam_step({"w": np.zeros((2, 2))}, GradientStore({"w": np.zeros((1, 2))}), AdamState())

    def test_nombres_distintos(self):
        """Test: Gradientes de otros parámetros deben fallar"""
        with pytest.raises(ContractError):
            adam_step({"w": np.zeros((1, 1))}, GradientStore({"v": np.zeros((1, 1))}), AdamState())


class TestMetricas:
    """Tests de las métricas de clasificación"""

    def test_predicciones_perfectas(self):
        """Test: Predicciones iguales a las etiquetas dan exactitud y F1 de 1"""
        metrics = compute_metrics([0, 1, 1, 0], [0, 1, 1, 0], 2)
        assert metrics.accuracy == 1.0
        assert metrics.f1_per_class == [1.0, 1.0]
        assert metrics.f1_weighted == 1.0

    def test_todo_clase_cero(self):
        """Test: Todo clase 0 con etiquetas mitad y mitad da F1 de 2/3 y 0"""
        metrics = compute_metrics([0, 0, 1, 1], [0, 0, 0, 0], 2)
        assert metrics.accuracy == 0.5
        assert metrics.f1_per_class[0] == pytest.approx(2 / 3)
        assert metrics.f1_per_class[1] == 0.0
        assert metrics.f1_weighted == pytest.approx(1 / 3)
        assert metrics.confusion == [[2, 0], [2, 0]]
        assert metrics.error_rate == 0.5


class TestTrainer:
    """Tests del ciclo de entrenamiento y la evaluación"""

    def test_lote_ponderado_por_utterances(self, tiny_datasets, tiny_synth_spec):
        """Test: La pérdida del lote es la entropía cruzada sobre todas sus utterances"""
        train, _ = tiny_datasets
        model = build_model(small_model_config("chfusion", tiny_synth_spec, D=4, D2=4, D3=4))
        batches = dataset_repository.pad_dataset(train)[:4]
        engine = Trainer(max_workers=1)
        loss, count, grads = engine.batch_gradients(model, batches)
        assert count == sum(b.n_real for b in batches)
        assert loss == pytest.approx(engine.dataset_loss(model, batches), abs=1e-12)
        assert set(grads) == set(model.tensors)

    def test_video_de_solo_relleno_no_cuenta(self, tiny_datasets, tiny_synth_spec):
        """Test: Un video sin utterances reales no cambia pérdida ni gradientes"""
        train, _ = tiny_datasets
        model = build_model(small_model_config("hfusion", tiny_synth_spec))
        batches = dataset_repository.pad_dataset(train)[:3]
        empty = PaddedBatch(
            video_id="vacio",
            features={m: np.zeros_like(x) for m, x in batches[0].features.items()},
            labels=np.zeros(batches[0].N, dtype=np.int64),
            mask=np.zeros(batches[0].N, dtype=bool),
        )
        engine = Trainer(max_workers=1)
        loss_a, _, grads_a = engine.batch_gradients(model, batches)
        loss_b, _, grads_b = engine.batch_gradients(model, batches + [empty])
        assert loss_a == pytest.approx(loss_b, abs=1e-12)
        for name in grads_a:
            np.testing.assert_allclose(grads_a[name], grads_b[name], rtol=0, atol=1e-12)

    def test_early_stopping(self, tiny_datasets, tiny_synth_spec):
        """Test: Sin mejora y patience=1 se detiene en la época 2 con los pesos de la época 1"""
        train, _ = tiny_datasets
        model = build_model(small_model_config("hfusion", tiny_synth_spec))
        result = Trainer(max_workers=1).train(model, train, TrainConfig(max_epochs=10, patience=1, lr=0.0))
        assert result.stopped_epoch == 2
        assert result.best_epoch == 1
        assert len(result.history) == 2
        for name in model.tensors:
            np.testing.assert_array_equal(result.model.tensors[name], model.tensors[name])

    def test_historial_determinista(self, tiny_datasets, tiny_synth_spec, quick_train_config):
        """Test: Misma semilla y datos dan el mismo historial, con uno o varios hilos"""
        train, _ = tiny_datasets
        model = build_model(small_model_config("chfusion", tiny_synth_spec, D=4, D2=4, D3=4))
        a = Trainer(max_workers=1).train(model, train, quick_train_config)
        b = Trainer(max_workers=3).train(model, train, quick_train_config)
        assert [h.model_dump() for h in a.history] == [h.model_dump() for h in b.history]

    def test_no_modifica_el_modelo_inicial(self, tiny_datasets, tiny_synth_spec, quick_train_config):
        """Test: train devuelve parámetros nuevos y deja intactos los iniciales"""
        train, _ = tiny_datasets
        model = build_model(small_model_config("hfusion", tiny_synth_spec))
        before = {k: v.copy() for k, v in model.tensors.items()}
        Trainer(max_workers=1).train(model, train, quick_train_config)
        for name, value in before.items():
            np.testing.assert_array_equal(model.tensors[name], value)

    def test_perdida_de_validacion_baja(self, tiny_datasets, tiny_synth_spec):
        """Test: En datos separables la pérdida de validación baja de ln C en 10 épocas"""
        train, _ = tiny_datasets
        model = build_model(small_model_config("chfusion", tiny_synth_spec, D=8, D2=8, D3=8))
        result = Trainer().train(model, train, TrainConfig(max_epochs=10, patience=10, batch_size=4, lr=0.01))
        assert min(h.val_loss for h in result.history) < math.log(2)

    def test_un_paso_pequeno_baja_la_perdida(self, tiny_datasets, tiny_synth_spec):
        """Test: Un paso de Adam con lr=1e-4 sobre un lote fijo baja la entropía cruzada"""
        train, _ = tiny_datasets
        model = build_model(small_model_config("chfusion", tiny_synth_spec, D=8, D2=8, D3=8))
        batches = dataset_repository.pad_dataset(train)[:4]
        engine = Trainer(max_workers=1)
        before, _, grads = engine.batch_gradients(model, batches)
        tensors, _ = adam_step(model.tensors, grads, AdamState(lr=1e-4))
        assert engine.dataset_loss(model.with_tensors(tensors), batches) < before

    def test_gradiente_no_nulo_con_salida_uniforme(self, tiny_datasets, tiny_synth_spec):
        """Test: Con la cabeza en cero (probabilidades uniformes) el gradiente no es nulo"""
        train, _ = tiny_datasets
        model = build_model(small_model_config("hfusion", tiny_synth_spec))
        tensors = dict(model.tensors)
        tensors["softmax.W"] = np.zeros_like(tensors["softmax.W"])
        tensors["softmax.b"] = np.zeros_like(tensors["softmax.b"])
        uniform = model.with_tensors(tensors)
        batches = dataset_repository.pad_dataset(train)[:4]
        for batch in batches:
            probs = forward(uniform, batch.features, batch.mask).probs
            np.testing.assert_allclose(probs, 0.5, atol=1e-15)
        loss, _, grads = Trainer(max_workers=1).batch_gradients(uniform, batches)
        assert loss == pytest.approx(math.log(2), abs=1e-12)
        assert np.abs(grads["softmax.W"]).max() > 1e-6

    def test_evaluacion_independiente_del_orden(self, tiny_datasets, tiny_synth_spec):
        """Test: Permutar los videos no cambia las métricas"""
        _, test = tiny_datasets
        model = build_model(small_model_config("chfusion", tiny_synth_spec))
        engine = Trainer(max_workers=2)
        a = engine.evaluate(model, test)
        b = engine.evaluate(model, test.subset(list(reversed(test.videos))))
        assert a == b

    def test_dataset_vacio(self, tiny_datasets, tiny_synth_spec, quick_train_config):
        """Test: Entrenar o evaluar sin videos debe fallar"""
        train, _ = tiny_datasets
        model = build_model(small_model_config("early", tiny_synth_spec))
        with pytest.raises(ContractError):
            Trainer().train(model, train.subset([]), quick_train_config)
        with pytest.raises(ContractError):
            Trainer().evaluate(model, train.subset([]))

    def test_un_solo_video(self, tiny_datasets, tiny_synth_spec, quick_train_config):
        """Test: Con un solo video se valida sobre el mismo video"""
        train, _ = tiny_datasets
        model = build_model(small_model_config("early", tiny_synth_spec))
        result = Trainer().train(model, train.subset(train.videos[:1]), quick_train_config)
        assert len(result.history) >= 1


@pytest.mark.slow
class TestAprendizaje:
    """Tests de aprendizaje sobre datos sintéticos"""

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_chfusion_aprende_datos_separables(self, seed):
        """Test: chfusion trimodal supera 95% de exactitud en prueba"""
        spec = SynthSpec(seed=seed)
        train, test = dataset_repository.synth_generate(spec)
        model = build_model(small_model_config("chfusion", spec, seed=seed))
        tc = TrainConfig(max_epochs=50, patience=10, lr=0.005, seed=seed)
        engine = Trainer()
        result = engine.train(model, train, tc)
        assert engine.evaluate(result.model, test).accuracy >= 0.95

    def test_orden_de_las_variantes_con_conflicto(self):
        """Test: Con modalidades en conflicto, mediana de 5 semillas: hfusion >= early y chfusion >= hfusion"""
        accuracy = {"early": [], "hfusion": [], "chfusion": []}
        for seed in range(5):
            spec = SynthSpec(
                n_train=100, n_test=40, conflict_fraction=0.3, label_persistence=0.8, seed=seed
            )
            train, test = dataset_repository.synth_generate(spec)
            tc = TrainConfig(max_epochs=30, patience=8, lr=0.005, seed=seed)
            engine = Trainer()
            for variant in accuracy:
                model = build_model(small_model_config(variant, spec, seed=seed))
                result = engine.train(model, train, tc)
                accuracy[variant].append(engine.evaluate(result.model, test).accuracy)
        median = {k: statistics.median(v) for k, v in accuracy.items()}
        assert median["hfusion"] >= median["early"]
        assert median["chfusion"] >= median["hfusion"]
