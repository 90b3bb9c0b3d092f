import json

import numpy as np
import pytest
from deepdiff import DeepDiff

from hdrvqa.errors import (
    MissingFeatureError,
    ModelFormatError,
    ModelVersionError,
    RegistryError,
    SingularSystemError,
)
from hdrvqa.fusion import (
    BUILTIN_SPECS,
    get_spec,
    list_specs,
    load_model,
    predict,
    predict_many,
    save_model,
    train,
)
from hdrvqa.models import AmbientCondition, HdrmaxVariant, ModelSpec

TWO_FEATURES = ModelSpec(name="pair", features=["Y-MAD", "Y-Edge"])


@pytest.fixture
def linear_data(rng):
    X = rng.uniform(size=(30, 3))
    y = 40.0 + X @ np.array([10.0, -20.0, 5.0])
    return X, y


class TestCatalogue:

    @pytest.mark.parametrize(
        "name,count",
        [
            ("Y-FUNQUE+", 3),
            ("3C-FUNQUE+", 7),
            ("Y-FUNQUE+ +HDRMAX1", 8),
            ("Y-FUNQUE+ +HDRMAX2", 13),
            ("3C-FUNQUE+ +HDRMAX1", 12),
            ("3C-FUNQUE+ +HDRMAX2", 17),
            ("PU21-PSNR", 1),
        ],
    )
    def test_feature_counts(self, name, count):
        assert len(get_spec(name).all_features) == count

    def test_loose_names(self):
        assert get_spec("3c-funque+ +hdrmax2").name == "3C-FUNQUE+ +HDRMAX2"
        assert get_spec("3C-FUNQUE++HDRMAX-2").name == "3C-FUNQUE+ +HDRMAX2"

    def test_hdrmax_argument(self):
        spec = get_spec("Y-FUNQUE+", hdrmax=[HdrmaxVariant.H1, "H2"])
        assert spec.hdrmax_variants == [HdrmaxVariant.H1, HdrmaxVariant.H2]
        assert len(spec.all_features) == 18

    def test_with_hdrmax_is_idempotent(self):
        spec = get_spec("Y-FUNQUE+ +HDRMAX1")
        assert spec.with_hdrmax(HdrmaxVariant.H1) is spec

    def test_declared_order_kept(self):
        spec = get_spec("3C-FUNQUE+ +HDRMAX1")
        assert spec.all_features[:7] == list(BUILTIN_SPECS["3C-FUNQUE+"].features)
        assert spec.all_features[7] == "HDRMAX1-VIF-1"

    def test_unknown(self):
        with pytest.raises(RegistryError):
            get_spec("FUNQUE-9000")

    def test_invalid_specs(self):
        with pytest.raises(RegistryError):
            ModelSpec(name="bad", features=["Y-NOPE"])
        with pytest.raises(ValueError):
            ModelSpec(name="dup", features=["Y-MAD", "Y-MAD"])

    def test_list(self):
        assert len(list_specs()) == 8


class TestTraining:

    def test_exact_fit_without_penalty(self, linear_data):
        X, y = linear_data
        model = train(get_spec("Y-FUNQUE+"), X, y, lam=0.0, seed=7)
        names = model.spec.all_features
        assert np.allclose(predict_many(model, X, names), y, atol=1e-9)
        row = dict(zip(names, X[4]))
        assert predict(model, row) == pytest.approx(y[4], abs=1e-9)
        assert model.metadata.n_train == 30
        assert model.metadata.seed == 7

    def test_penalty_shrinks_weights(self, linear_data):
        X, y = linear_data
        spec = get_spec("Y-FUNQUE+")
        small = np.abs(train(spec, X, y, 1e-3).weights).sum()
        large = np.abs(train(spec, X, y, 1e3).weights).sum()
        assert large < small

    def test_intercept_is_mean_mos(self, linear_data):
        X, y = linear_data
        assert train(get_spec("Y-FUNQUE+"), X, y, 10.0).intercept == pytest.approx(np.mean(y))

    def test_constant_feature_dropped(self, rng):
        X = np.column_stack([rng.uniform(size=12), np.full(12, 0.3)])
        y = 3.0 * X[:, 0]
        model = train(TWO_FEATURES, X, y, 0.0)
        assert model.features == ["Y-MAD"]
        assert model.metadata.dropped_features == ["Y-Edge"]
        assert predict(model, {"Y-MAD": 0.5}) == pytest.approx(1.5)

    def test_singular_without_penalty(self, rng):
        col = rng.uniform(size=10)
        X = np.column_stack([col, 2.0 * col])
        with pytest.raises(SingularSystemError):
            train(TWO_FEATURES, X, col, 0.0)
        assert train(TWO_FEATURES, X, col, 1.0).lambda_ == 1.0

    def test_shape_checks(self, rng):
        with pytest.raises(ModelFormatError):
            train(TWO_FEATURES, rng.uniform(size=(5, 3)), np.zeros(5), 1.0)
        with pytest.raises(ModelFormatError):
            train(TWO_FEATURES, [[0.1, np.nan], [0.2, 0.3]], [1.0, 2.0], 1.0)

    def test_negative_lambda(self, linear_data):
        X, y = linear_data
        with pytest.raises(SingularSystemError):
            train(get_spec("Y-FUNQUE+"), X, y, -1.0)

    def test_missing_feature(self, linear_data):
        X, y = linear_data
        model = train(get_spec("Y-FUNQUE+"), X, y, 1.0)
        with pytest.raises(MissingFeatureError) as err:
            predict(model, {"Y-MS-ESSIM": 0.9, "Y-DLM-S": 0.8})
        assert err.value.name == "Y-MAD-Ref"

    @pytest.mark.parametrize("c", [1e-3, 7.5, 1e4])
    def test_column_scaling_rescales_weight(self, linear_data, c):
        X, y = linear_data
        spec = get_spec("Y-FUNQUE+")
        scaled = X.copy()
        scaled[:, 1] *= c
        base, other = train(spec, X, y, 0.5), train(spec, scaled, y, 0.5)
        raw = np.asarray(base.weights) / np.asarray(base.standardization.stds)
        raw_scaled = np.asarray(other.weights) / np.asarray(other.standardization.stds)
        assert raw_scaled[1] == pytest.approx(raw[1] / c, rel=1e-9)
        assert raw_scaled[[0, 2]] == pytest.approx(raw[[0, 2]], rel=1e-9)
        names = spec.all_features
        assert np.allclose(predict_many(other, scaled, names), predict_many(base, X, names), rtol=0, atol=1e-9)

    def test_query_order_does_not_matter(self, linear_data):
        X, y = linear_data
        model = train(get_spec("Y-FUNQUE+"), X, y, 1.0)
        names = model.spec.all_features
        row = dict(zip(names, X[2]))
        assert predict(model, dict(reversed(list(row.items())))) == predict(model, row)
        perm = [2, 0, 1]
        permuted = predict_many(model, X[:, perm], [names[i] for i in perm])
        assert np.array_equal(permuted, predict_many(model, X, names))

    def test_extra_features_ignored(self, linear_data):
        X, y = linear_data
        model = train(get_spec("Y-FUNQUE+"), X, y, 1.0)
        row = dict(zip(model.features, X[0]))
        assert predict(model, {**row, "Cb-Edge": 123.0}) == predict(model, row)


class TestModelFiles:

    @pytest.fixture
    def model(self, linear_data):
        X, y = linear_data
        spec = get_spec("Y-FUNQUE+").for_condition(AmbientCondition.BRIGHT)
        return train(spec, X, y, 0.1, seed=3)

    def test_round_trip(self, model):
        loaded = load_model(save_model(model))
        assert DeepDiff(model.model_dump(), loaded.model_dump()) == {}
        assert loaded.spec.target_condition == AmbientCondition.BRIGHT

    def test_deterministic_bytes(self, model):
        assert save_model(model) == save_model(load_model(save_model(model)))

    def test_lambda_key(self, model):
        doc = json.loads(save_model(model))
        assert doc["lambda"] == 0.1
        assert doc["version"] == 1

    def test_version_mismatch(self, model):
        doc = json.loads(save_model(model))
        doc["version"] = 2
        with pytest.raises(ModelVersionError):
            load_model(json.dumps(doc))

    def test_truncated(self, model):
        data = save_model(model)
        with pytest.raises(ModelFormatError):
            load_model(data[: len(data) // 2])

    def test_unknown_feature(self, model):
        doc = json.loads(save_model(model))
        doc["features"][0] = "Y-NOPE"
        with pytest.raises(RegistryError):
            load_model(json.dumps(doc))

    def test_schema_violation(self, model):
        doc = json.loads(save_model(model))
        doc["weights"] = doc["weights"][:1]
        with pytest.raises(ModelFormatError):
            load_model(json.dumps(doc))
