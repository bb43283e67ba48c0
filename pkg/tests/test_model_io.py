import json

import numpy as np
import pytest

from hategraph.models import (FORMAT_VERSION, load_model, pack_array,
                              save_model, unpack_array)
from hategraph.models.boosting import train_adaboost, train_gbt


def test_pack_unpack_roundtrip(rng):
    for shape in [(3,), (2, 4), (1, 1), (0,)]:
        arr = rng.normal(size=shape)
        back = unpack_array(pack_array(arr))
        assert back.shape == arr.shape
        assert np.array_equal(back, arr)


def _training_data(rng):
    X = rng.normal(size=(80, 3))
    y = (X[:, 0] > 0).astype(int)
    return X, y


def test_adaboost_roundtrip_exact(rng, tmp_path):
    X, y = _training_data(rng)
    model = train_adaboost(X, y, rounds=15)
    path = tmp_path / "ada.json"
    save_model(path, model)
    back = load_model(path)
    assert np.array_equal(back.predict(X), model.predict(X))
    assert back.class_weight == model.class_weight
    assert [(s.feature, s.threshold, s.polarity) for s in back.stumps] == \
           [(s.feature, s.threshold, s.polarity) for s in model.stumps]


def test_gbt_roundtrip_exact(rng, tmp_path):
    X, y = _training_data(rng)
    model = train_gbt(X, y, n_trees=12)
    path = tmp_path / "gbt.json"
    save_model(path, model)
    back = load_model(path)
    assert np.array_equal(back.decision(X), model.decision(X))
    assert back.base_score == model.base_score
    assert len(back.trees) == len(model.trees)


def test_save_is_byte_deterministic(rng, tmp_path):
    X, y = _training_data(rng)
    model = train_gbt(X, y, n_trees=5)
    p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
    save_model(p1, model)
    save_model(p2, model)
    assert p1.read_bytes() == p2.read_bytes()


def test_load_rejects_future_version(rng, tmp_path):
    X, y = _training_data(rng)
    path = tmp_path / "m.json"
    save_model(path, train_adaboost(X, y, rounds=2))
    obj = json.loads(path.read_text())
    obj["format_version"] = FORMAT_VERSION + 1
    path.write_text(json.dumps(obj))
    with pytest.raises(ValueError, match=f"version {FORMAT_VERSION}"):
        load_model(path)


def test_load_rejects_unknown_type(tmp_path):
    path = tmp_path / "m.json"
    path.write_text(json.dumps({"format_version": FORMAT_VERSION,
                                "model_type": "mystery"}))
    with pytest.raises(ValueError, match="unknown model type"):
        load_model(path)
