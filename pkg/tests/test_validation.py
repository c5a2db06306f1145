import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from codeadapt.errors import ConfigError, LengthMismatch
from codeadapt.model.features import labels_of
from codeadapt.validation import baselines as bl
from codeadapt.validation.dsmg import (
    IN_SCOPE, OUT_OF_SCOPE, SubModel, SubModelBundle, ValidityReport, build_submodels,
    default_threshold, head_accuracy, score_inputs, validate, validate_one,
)
from codeadapt.validation.scores import (
    final_score, final_scores, layer_weight, validity_score_k, validity_scores,
)

probs_strategy = st.lists(st.floats(0.0, 1.0), min_size=2, max_size=6).filter(
    lambda v: sum(v) > 1e-6).map(lambda v: [x / sum(v) for x in v])


def test_hand_fixtures():
    assert abs(validity_score_k(0, [0.8, 0.2]) - 1.4) < 1e-12
    assert abs(validity_score_k(0, [0.3, 0.7]) - (-0.1)) < 1e-12
    assert abs(validity_score_k(0, [0.5, 0.5]) - 0.5) < 1e-12
    assert abs(final_score([1.4, -0.1], [1, 2]) - 0.4) < 1e-12


def test_final_score_degenerate_cases():
    assert abs(final_score([0.7], [3.0]) - 0.7) < 1e-12
    assert abs(final_score([0.3, 0.3, 0.3], [1, 5, 9]) - 0.3) < 1e-12
    with pytest.raises(LengthMismatch):
        final_score([1.0, 2.0], [1.0])
    with pytest.raises(LengthMismatch):
        final_score([], [])


@settings(max_examples=200, deadline=None)
@given(probs_strategy, st.data())
def test_validity_range_and_closed_form(probs, data):
    lx = data.draw(st.integers(0, len(probs) - 1))
    v = validity_score_k(lx, probs)
    assert -1 - 1e-12 <= v <= 2 + 1e-12
    p = np.array(probs)
    order = np.argsort(-p, kind="stable")
    others = np.delete(p, lx)
    if p[lx] >= others.max():
        expected = 2 * p[lx] - others.max()
    else:
        expected = 2 * p[lx] - p[order[0]]
    assert abs(v - expected) < 1e-12
    vec = validity_scores(np.array([lx]), p[None, :])[0]
    assert abs(vec - v) < 1e-12


@settings(max_examples=100, deadline=None)
@given(probs_strategy, st.floats(0.0, 0.5))
def test_agreement_monotone(probs, bump):
    p = np.array(probs)
    lx = int(np.argmax(p))
    q = p.copy()
    q[lx] += bump
    assert validity_score_k(lx, q) >= validity_score_k(lx, p) - 1e-12


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-1, 2), min_size=1, max_size=8), st.floats(1e-3, 1e3), st.data())
def test_final_score_scale_invariant(scores, factor, data):
    w = data.draw(st.lists(st.floats(0.1, 10), min_size=len(scores), max_size=len(scores)))
    a = final_score(scores, w)
    b = final_score(scores, [x * factor for x in w])
    assert abs(a - b) < 1e-9
    assert abs(final_scores(np.array([scores]), w)[0] - a) < 1e-9


def test_weight_schemes_positive_and_monotone():
    for scheme in ("linear", "logarithmic", "exponential"):
        ws = [layer_weight(scheme, k, 4) for k in range(1, 5)]
        assert all(w > 0 for w in ws) and ws == sorted(ws)
    assert layer_weight("logarithmic", 1, 4) == math.log(2)
    assert layer_weight("exponential", 4, 4) == math.e
    with pytest.raises(ConfigError):
        layer_weight("cubic", 1, 4)


def test_bundle_shape_and_determinism(small_model, small_splits, small_bundle):
    assert len(small_bundle.submodels) == 12
    assert small_bundle.layers == [1, 2, 3, 4]
    for sub in small_bundle.submodels:
        assert sub.dropout_mask.any()
        assert sub.weights.shape == (sub.dropout_mask.sum(), 4)
    w = small_bundle.weights
    assert np.all(w > 0)
    ks = [s.layer_k for s in small_bundle.submodels]
    assert all(w[i] <= w[j] for i in range(len(ks)) for j in range(len(ks)) if ks[i] <= ks[j])
    again = build_submodels(small_model, small_splits[1])
    for a, b in zip(small_bundle.submodels, again.submodels):
        assert np.array_equal(a.weights, b.weights) and np.array_equal(a.dropout_mask, b.dropout_mask)


def test_no_dropout_keeps_all_units(small_model, small_splits):
    b = build_submodels(small_model, small_splits[1][:100], layers=[2], samples_per_layer=1,
                        dropout_rate=0.0)
    assert len(b.submodels) == 1 and b.submodels[0].dropout_mask.all()


def test_build_rejects_bad_config(small_model, small_splits):
    units = small_splits[1][:20]
    with pytest.raises(ConfigError):
        build_submodels(small_model, units, dropout_rate=1.0)
    with pytest.raises(ConfigError):
        build_submodels(small_model, units, layers=[])
    with pytest.raises(ConfigError):
        build_submodels(small_model, units, layers=[5])


def test_heads_beat_chance(small_model, small_bundle, small_splits):
    test = small_splits[2]
    X = small_model.encode(test)
    y = labels_of(test)
    for sub in small_bundle.submodels:
        assert head_accuracy(small_model, sub, X, y) > 0.25


def test_bundle_round_trip(tmp_path, small_model, small_bundle, small_splits):
    path = tmp_path / "b.json"
    small_bundle.save(path)
    loaded = SubModelBundle.load(path)
    X = small_model.encode(small_splits[2][:30])
    assert np.array_equal(score_inputs(small_model, loaded, X)[2],
                          score_inputs(small_model, small_bundle, X)[2])
    assert loaded.weight_scheme == "linear"


def test_reports_are_consistent(small_model, small_bundle, small_splits):
    units = small_splits[2][:40]
    reports = validate(small_model, small_bundle, units, 0.2)
    for r in reports:
        assert -1 <= r.final_score <= 2
        assert abs(final_score(r.per_submodel_scores, small_bundle.weights) - r.final_score) < 1e-9
        assert (r.verdict == OUT_OF_SCOPE) == (r.final_score <= 0.2)
    high = validate(small_model, small_bundle, units, 0.6)
    for lo, hi in zip(reports, high):
        if lo.verdict == OUT_OF_SCOPE:
            assert hi.verdict == OUT_OF_SCOPE
    one = validate_one(small_model, small_bundle, units[0], 0.2)
    assert one.verdict == reports[0].verdict
    assert np.allclose(one.per_submodel_scores, reports[0].per_submodel_scores, atol=1e-12)


def test_extreme_agreement_scores_two():
    class Fixed:
        num_layers, num_classes = 1, 2

        def predict(self, X):
            return np.tile([1.0, 0.0], (len(X), 1))

        def hidden(self, X, k):
            return np.ones((len(X), 1))

    sub = SubModel(1, np.array([True]), np.array([[0.0, 0.0]]), np.array([50.0, -50.0]))
    bundle = SubModelBundle([sub], num_layers=1)
    _, _, final = score_inputs(Fixed(), bundle, np.zeros((1, 1)))
    assert abs(final[0] - 2.0) < 1e-12
    assert ValidityReport("x", 0, (2.0,), 2.0, 2.0).verdict == OUT_OF_SCOPE
    assert ValidityReport("x", 0, (2.0,), 2.0, 1.99).verdict == IN_SCOPE


def test_default_thresholds_and_verdicts():
    assert default_threshold(2) == 0.3 and default_threshold(4) == 0.2
    assert ValidityReport("x", 0, (), 0.0221, 0.2).verdict == OUT_OF_SCOPE
    assert ValidityReport("x", 0, (), 0.7377, 0.2).verdict == IN_SCOPE


# baselines

P3 = np.array([[0.7, 0.2, 0.1]])


def test_definitional_baselines():
    assert bl.margin(P3)[0] == pytest.approx(0.5)
    assert bl.ratio(P3)[0] == pytest.approx(0.2 / 0.7)
    assert bl.least_confidence(P3)[0] == pytest.approx(0.3)
    uniform = np.full((1, 4), 0.25)
    assert bl.entropy(uniform)[0] == pytest.approx(math.log(4))


class FixedProbs:
    """Minimal model whose predictions are the input rows."""

    num_classes, num_layers = 3, 1

    def predict(self, X):
        return np.asarray(X)

    def logits(self, X):
        return np.log(np.asarray(X))


def test_baseline_orientation():
    X = np.array([[0.7, 0.2, 0.1], [0.34, 0.33, 0.33], [0.98, 0.01, 0.01]])
    for method in ("vanilla", "least_conf", "margin_conf", "ratio_conf", "entropy"):
        s = bl.baseline_scores(method, FixedProbs(), X)
        assert list(np.argsort(s)) == [1, 0, 2], method
    assert bl.baseline_scores("vanilla", FixedProbs(), X)[0] == pytest.approx(0.7)


def test_unknown_method_and_missing_validation_set():
    with pytest.raises(ConfigError):
        bl.baseline_scores("oracle", FixedProbs(), P3)
    with pytest.raises(ConfigError):
        bl.baseline_scores("temp_scale", FixedProbs(), P3)


def test_temperature_scaling_reduces_nll():
    rng = np.random.default_rng(0)
    y = rng.integers(0, 4, 500)
    clean = rng.normal(size=(500, 4))
    clean[np.arange(500), y] += 1.0
    overconfident = clean * 6.0
    T = bl.fit_temperature(overconfident, y)
    assert T > 1.0
    assert bl.nll(overconfident, y, T) < bl.nll(overconfident, y, 1.0)
    # brute-force check that the optimum was found
    grid = np.exp(np.linspace(-3, 3, 2001))
    best = min(bl.nll(overconfident, y, t) for t in grid)
    assert bl.nll(overconfident, y, T) <= best + 1e-6


def test_mc_dropout_at_zero_and_single_member_ensemble_match_vanilla(small_model, small_splits):
    X = small_model.encode(small_splits[2])
    vanilla = bl.baseline_scores("vanilla", small_model, X)
    ctx = bl.BaselineContext(mc_dropout=0.0, mc_samples=3)
    for method in ("mc_dropout", "deep_ensemble"):
        s = bl.baseline_scores(method, small_model, X, ctx)
        assert np.array_equal(np.argsort(s, kind="stable"), np.argsort(vanilla, kind="stable"))
    assert np.allclose(bl.baseline_scores("mutual_info", small_model, X, ctx), 0.0)


def test_sampling_baselines_are_seeded(small_model, small_splits):
    X = small_model.encode(small_splits[2][:50])
    ctx = bl.BaselineContext(mc_samples=4, seed=3)
    for method in ("mc_dropout", "pred_entropy", "mutual_info", "hidden_direct"):
        a = bl.baseline_scores(method, small_model, X, ctx)
        b = bl.baseline_scores(method, small_model, X, ctx)
        assert np.array_equal(a, b)
        assert a.shape == (50,)


def test_hidden_direct_in_score_range(small_model, small_splits):
    X = small_model.encode(small_splits[2][:50])
    s = bl.hidden_direct(small_model, X)
    assert np.all((s >= -1) & (s <= 2))
