"""
Tests del almacén de modelos
"""

import json

import numpy as np
import pytest

from hierfuse.errors import MissingPathError, ModelFileError
from hierfuse.models.fusion import build_model, forward
from hierfuse.services.model_store import model_store
from tests.conftest import make_config, random_features


class TestModelStore:
    """Tests para guardar y cargar modelos"""

    def test_guardar_y_cargar(self, tmp_path, rng):
        """Test: Un modelo cargado predice igual que el original"""
        cfg = make_config("chfusion", "TV")
        model = build_model(cfg)
        path = model_store.save_model(model, tmp_path / "model.json")
        loaded = model_store.load_model(path)

        assert loaded.config == cfg
        features = random_features(rng, cfg, 3)
        np.testing.assert_array_equal(
            forward(model, features, [True] * 3).probs, forward(loaded, features, [True] * 3).probs
        )

    def test_documento_con_configuracion_y_tensores(self, tmp_path):
        """Test: El documento tiene config y params con filas, columnas y datos"""
        path = model_store.save_model(build_model(make_config("hfusion", "TA")), tmp_path / "m.json")
        document = json.loads(path.read_text(encoding="utf-8"))
        assert document["config"]["variant"] == "hfusion"
        record = document["params"]["softmax.W"]
        assert record["rows"] * record["cols"] == len(record["data"])

    def test_archivo_inexistente(self, tmp_path):
        """Test: Cargar un archivo que no existe debe fallar con la ruta"""
        with pytest.raises(MissingPathError, match="nada.json"):
            model_store.load_model(tmp_path / "nada.json")

    def test_forma_incorrecta(self, tmp_path):
        """Test: Un tensor con otra forma debe fallar nombrando el tensor"""
        path = model_store.save_model(build_model(make_config("hfusion", "TA")), tmp_path / "m.json")
        document = json.loads(path.read_text(encoding="utf-8"))
        document["params"]["softmax.W"] = {"rows": 1, "cols": 2, "data": [0.0, 0.0]}
        path.write_text(json.dumps(document), encoding="utf-8")
        with pytest.raises(ModelFileError, match="softmax.W"):
            model_store.load_model(path)

    def test_tensor_faltante(self, tmp_path):
        """Test: Un tensor ausente debe fallar"""
        path = model_store.save_model(build_model(make_config("early", "T")), tmp_path / "m.json")
        document = json.loads(path.read_text(encoding="utf-8"))
        del document["params"]["softmax.b"]
        path.write_text(json.dumps(document), encoding="utf-8")
        with pytest.raises(ModelFileError, match="softmax.b"):
            model_store.load_model(path)

    def test_json_invalido(self, tmp_path):
        """Test: Un archivo que no es un documento de modelo debe fallar"""
        path = tmp_path / "m.json"
        path.write_text("{\"config\": 3}", encoding="utf-8")
        with pytest.raises(ModelFileError):
            model_store.load_model(path)
