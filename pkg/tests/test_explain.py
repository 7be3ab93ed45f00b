import json
import math

import numpy as np
import pytest

from filread.explain import (
    BoundaryCondition,
    Discretizer,
    ExplainConfig,
    assign_bin,
    explain_instance,
    explanation_to_json,
    explanation_to_text,
    fit_discretizer,
    render_boundary,
    sample_neighborhood,
    weighted_ridge,
)
from filread.features import FeatureVector, StandardizationStats
from filread.models import TrainConfig, train_logreg, train_rf


def disc_with_cuts(cuts, lo=-2.0, hi=2.0):
    return Discretizer(("f",), np.array([cuts], dtype=float), np.array([lo]), np.array([hi]))


class TestDiscretizer:
    def test_quartiles(self):
        d = fit_discretizer(np.array([[1.0], [2.0], [3.0], [4.0]]), ["f"])
        np.testing.assert_allclose(d.cuts[0], [1.75, 2.5, 3.25])

    def test_constant_single_bin(self):
        d = fit_discretizer(np.full((6, 1), 3.0), ["f"])
        assert d.is_constant("f") and d.nonempty_bins(0) == [0]
        assert render_boundary(d, "f", assign_bin(d, "f", 3.0)).rendered == "x <= 3.00"

    def test_eight_values_four_bins(self):
        d = fit_discretizer(np.arange(8.0)[:, None], ["f"])
        bins = [assign_bin(d, "f", v) for v in range(8)]
        assert [bins.count(b) for b in range(4)] == [2, 2, 2, 2]

    def test_too_few_rows(self):
        with pytest.raises(ValueError):
            fit_discretizer(np.zeros((3, 2)))

    def test_assign_bin(self):
        d = disc_with_cuts([-0.49, -0.01, 0.55])
        assert assign_bin(d, "f", -0.49) == 0
        assert assign_bin(d, "f", -3) == 0
        assert assign_bin(d, "f", 0.1) == 2
        assert assign_bin(d, "f", 9) == 3
        with pytest.raises(KeyError):
            assign_bin(d, "g", 0)

    def test_render(self):
        d = disc_with_cuts([-0.49, -0.01, 0.50])
        assert render_boundary(d, "f", 1).rendered == "-0.49 < x <= -0.01"
        assert render_boundary(disc_with_cuts([-0.43, 0, 1]), "f", 0).rendered == "x <= -0.43"
        assert render_boundary(d, "f", 3).rendered == "x > 0.50"
        with pytest.raises(ValueError):
            render_boundary(d, "f", 4)

    def test_chained_bounds(self):
        d = disc_with_cuts([-1.0, 0.0, 1.0])
        conds = [render_boundary(d, "f", b) for b in range(4)]
        for a, b in zip(conds, conds[1:]):
            assert a.upper == b.lower

    def test_roundtrip(self):
        d = fit_discretizer(np.random.default_rng(0).normal(size=(10, 3)), list("abc"))
        e = Discretizer.from_dict(json.loads(json.dumps(d.to_dict())))
        np.testing.assert_array_equal(e.cuts, d.cuts)
        assert e.feature_names == d.feature_names

    def test_empty_interval_rejected(self):
        with pytest.raises(ValueError):
            BoundaryCondition("f", 1.0, 1.0)


class TestRidge:
    def test_one_feature(self):
        beta, b0 = weighted_ridge([[1.0], [0.0]], [1.0, 0.0], [1.0, 1.0], 1.0, fit_intercept=False)
        assert beta[0] == pytest.approx(0.5) and b0 == 0.0

    def test_exact_interpolation(self):
        Z = np.array([[1.0, 2.0], [3.0, 1.0]])
        beta, _ = weighted_ridge(Z, [5.0, 6.0], [1.0, 1.0], 0.0, fit_intercept=False)
        np.testing.assert_allclose(Z @ beta, [5.0, 6.0])

    def test_single_weighted_point(self):
        beta, _ = weighted_ridge([[2.0], [1.0], [5.0]], [4.0, 9.0, 1.0], [1.0, 0.0, 0.0], 0.0, fit_intercept=False)
        assert 2.0 * beta[0] == pytest.approx(4.0)

    def test_singular(self):
        with pytest.raises(np.linalg.LinAlgError):
            weighted_ridge([[1.0, 1.0], [2.0, 2.0]], [1.0, 2.0], [1.0, 1.0], 0.0, fit_intercept=False)

    def test_negative_lambda(self):
        with pytest.raises(ValueError):
            weighted_ridge([[1.0]], [1.0], [1.0], -1.0)

    def test_shrinkage_monotone(self):
        rng = np.random.default_rng(1)
        Z = rng.integers(0, 2, size=(50, 4)).astype(float)
        y = rng.normal(size=50)
        w = rng.random(50)
        norms = [np.linalg.norm(weighted_ridge(Z, y, w, lam)[0]) for lam in (0.1, 1, 10, 100)]
        assert all(a >= b - 1e-12 for a, b in zip(norms, norms[1:]))


@pytest.fixture(scope="module")
def toy():
    rng = np.random.default_rng(0)
    a = np.repeat([-1.5, 0.0, 1.5], 30) + rng.normal(0, 0.1, 90)
    X = np.column_stack([a, rng.normal(size=90), rng.normal(size=90)])
    y = np.repeat([1, 2, 3], 30)
    names = ["A", "B", "C"]
    model = train_rf(X, y, TrainConfig(n_trees=20, features_per_split="all"), feature_names=names)
    return model, fit_discretizer(X, names), X


class TestExplainInstance:
    def test_dominant_feature_first(self, toy):
        model, d, X = toy
        exp = explain_instance(model, X[0], d, 1, ExplainConfig(n_samples=500, k=3))
        assert exp.entries[0][0].feature == "A"
        assert abs(exp.entries[0][1]) > 3 * max(abs(w) for _, w in exp.entries[1:])

    def test_conditions_hold_for_instance(self, toy):
        model, d, X = toy
        for i in range(0, 90, 7):
            exp = explain_instance(model, X[i], d, 2, ExplainConfig(n_samples=200))
            for bc, _ in exp.entries:
                assert bc.contains(X[i, d.index(bc.feature)])

    def test_deterministic(self, toy):
        model, d, X = toy
        cfg = ExplainConfig(n_samples=300, seed=5)
        a = explanation_to_json(explain_instance(model, X[3], d, 3, cfg, doc_id="x"))
        b = explanation_to_json(explain_instance(model, X[3], d, 3, cfg, doc_id="x"))
        assert a == b

    def test_errors(self, toy):
        model, d, X = toy
        with pytest.raises(ValueError):
            explain_instance(model, X[0], d, 1, ExplainConfig(n_samples=5))
        with pytest.raises(ValueError):
            explain_instance(model, X[0], d, 4)
        other = fit_discretizer(X, ["A", "B", "Z"])
        with pytest.raises(ValueError):
            explain_instance(model, X[0], other, 1)

    def test_neighborhood_instance_row(self, toy):
        _, d, X = toy
        hood = sample_neighborhood(X[0], d, ExplainConfig(n_samples=100))
        assert np.all(hood.binary[0] == 1)
        assert hood.weights[0] == hood.weights.max() == 1.0
        assert hood.kernel_width == pytest.approx(0.75 * math.sqrt(3))
        for j in range(3):
            assert np.all(hood.values[:, j] >= d.mins[j]) and np.all(hood.values[:, j] <= d.maxs[j])

    def test_raw_feature_vector_input(self):
        rng = np.random.default_rng(3)
        X = rng.normal(10, 3, size=(60, 2))
        y = np.repeat([1, 2, 3], 20)
        st = StandardizationStats(X.mean(0), X.std(0))
        Z = st.apply(X)
        model = train_logreg(Z, y, TrainConfig("logreg", epochs=30), feature_names=["p", "q"], stats=st)
        d = fit_discretizer(Z, ["p", "q"])
        cfg = ExplainConfig(n_samples=100)
        e1 = explain_instance(model, FeatureVector("doc", {"p": X[0, 0], "q": X[0, 1]}), d, 1, cfg)
        e2 = explain_instance(model, Z[0], d, 1, cfg, doc_id="doc")
        assert e1 == e2

    def test_exports(self, toy):
        model, d, X = toy
        exp = explain_instance(model, X[0], d, 1, ExplainConfig(n_samples=200), doc_id="doc1")
        payload = json.loads(explanation_to_json(exp))
        assert payload["doc_id"] == "doc1" and len(payload["proba"]) == 3
        assert payload["conditions"][0]["condition"].startswith("A") or "A" in payload["conditions"][0]["condition"]
        text = explanation_to_text(exp)
        assert "prediction probabilities" in text and "level 3" in text
        assert ("[green]" in text) or ("[red]" in text)
