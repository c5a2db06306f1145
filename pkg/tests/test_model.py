import json

import numpy as np
import pytest

from codeadapt.errors import ConfigError, DimensionError, FormatError
from codeadapt.interp import RUNTIME_ERROR, STEP_LIMIT, TERMINATED, execute
from codeadapt.model.base import LayeredModel, cross_entropy, softmax
from codeadapt.model.corpus import (
    ENTRY, NO_DEFECT, TIMEOUT, WRONG_OUTPUT, GeneratorConfig,
    augment, generate_corpus,
)
from codeadapt.model.features import featurize, featurize_text, labels_of
from codeadapt.model.mlp import MLP, TrainConfig, train
from codeadapt.model.precomputed import PrecomputedModel
from codeadapt.transforms import apply
from codeadapt.units import SourceUnit

from conftest import VECTORS


def tiny_model(seed=3):
    return MLP(vocab_dim=6, widths=(5, 4, 3), num_classes=3, seed=seed)


def test_softmax_normalized():
    rng = np.random.default_rng(0)
    P = softmax(rng.normal(size=(50, 4)) * 30)
    assert np.allclose(P.sum(axis=1), 1.0, atol=1e-9)
    assert np.allclose(softmax(np.zeros((1, 4))), 0.25)


def test_forward_matches_hand_arithmetic():
    m = tiny_model()
    m.input_mean = np.linspace(0, 0.5, 6)
    m.input_scale = np.linspace(1, 2, 6)
    x = np.array([[0.2, -1.0, 0.5, 0.0, 1.5, 0.3]])
    h = (x[0] - m.input_mean) / m.input_scale
    for W, b in zip(m.weights[:-1], m.biases[:-1]):
        h = np.array([max(0.0, sum(h[i] * W[i, j] for i in range(len(h))) + b[j])
                      for j in range(W.shape[1])])
    z = np.array([sum(h[i] * m.weights[-1][i, j] for i in range(len(h))) + m.biases[-1][j]
                  for j in range(3)])
    expected = np.exp(z - z.max()) / np.exp(z - z.max()).sum()
    assert np.allclose(m.predict(x)[0], expected, atol=1e-9)
    assert np.allclose(m.hidden(x, 3)[0], h, atol=1e-12)
    assert np.allclose(softmax(m.head(m.hidden(x, 3))), m.predict(x))


def test_uniform_logits_give_uniform_probs():
    m = tiny_model()
    m.weights[-1][:] = 0.0
    m.biases[-1][:] = 0.0
    assert np.allclose(m.predict(np.ones((2, 6))), 1 / 3)


def test_zero_input_zero_bias_gives_zero_hidden():
    m = tiny_model()
    assert np.all(m.hidden(np.zeros((1, 6)), 1) == 0.0)


def test_hidden_index_and_width_errors():
    m = tiny_model()
    with pytest.raises(IndexError):
        m.hidden(np.zeros((1, 6)), 0)
    with pytest.raises(IndexError):
        m.hidden(np.zeros((1, 6)), 4)
    with pytest.raises(DimensionError):
        m.predict(np.zeros((1, 7)))
    assert m.hidden(np.zeros((2, 6)), 2).shape == (2, 4)


def finite_difference_errors(model, X, y, coords=100, eps=1e-6, seed=0):
    _, gW, gb = model.loss_and_grads(X, y)
    params = model.parameters()
    grads = [*gW, *gb]
    rng = np.random.default_rng(seed)
    errors = []
    for _ in range(coords):
        p = rng.integers(len(params))
        idx = tuple(rng.integers(s) for s in params[p].shape)
        old = params[p][idx]
        params[p][idx] = old + eps
        up = cross_entropy(model.logits(X), y)
        params[p][idx] = old - eps
        down = cross_entropy(model.logits(X), y)
        params[p][idx] = old
        numeric = (up - down) / (2 * eps)
        analytic = grads[p][idx]
        errors.append(abs(numeric - analytic) / max(abs(numeric) + abs(analytic), 1e-7))
    return np.array(errors)


def test_gradients_match_finite_differences():
    rng = np.random.default_rng(1)
    m = MLP(vocab_dim=20, widths=(8, 8, 6), num_classes=4, seed=2)
    m.input_mean = rng.normal(size=20) * 0.1
    m.input_scale = rng.uniform(0.5, 2.0, 20)
    X = rng.normal(size=(16, 20))
    y = rng.integers(0, 4, 16)
    assert finite_difference_errors(m, X, y).max() < 1e-4


def test_training_is_deterministic_and_epochs_zero_is_init(small_splits):
    units = small_splits[0][:120]
    a = train(units, TrainConfig(epochs=2, rng_seed=5), 4)
    b = train(units, TrainConfig(epochs=2, rng_seed=5), 4)
    for wa, wb in zip(a.parameters(), b.parameters()):
        assert np.array_equal(wa, wb)
    z = train(units, TrainConfig(epochs=0, rng_seed=5), 4)
    init = MLP(num_classes=4, seed=5)
    for wa, wb in zip(z.parameters(), init.parameters()):
        assert np.array_equal(wa, wb)


def test_separable_toy_set_learned():
    rng = np.random.default_rng(0)
    X = np.abs(rng.normal(size=(200, 30)))
    y = (X[:, 0] > X[:, 1]).astype(int)
    X[:, 2] = y * 2.0
    m = MLP(vocab_dim=30, num_classes=2, seed=0).fit(X, y, TrainConfig(epochs=30))
    assert (m.predict(X).argmax(axis=1) == y).mean() >= 0.95
    assert m.history[-1] < m.history[0]


def test_single_class_rejected():
    units = [SourceUnit.from_code(f"u{i}", "int f() { return 1; }", 0) for i in range(4)]
    with pytest.raises(ConfigError):
        train(units, TrainConfig(epochs=1))


def test_bad_train_config():
    for kwargs in ({"dropout_rate": 1.0}, {"learning_rate": 0}, {"epochs": -1}, {"batch_size": 0}):
        with pytest.raises(ConfigError):
            TrainConfig(**kwargs)


def test_checkpoint_round_trip(tmp_path, small_model):
    path = tmp_path / "m.json"
    small_model.save(path)
    loaded = MLP.load(path)
    assert loaded.header() == small_model.header()
    X = np.random.default_rng(0).random((3, small_model.vocab_dim))
    assert np.array_equal(loaded.predict(X), small_model.predict(X))
    header = json.loads(path.read_text())["header"]
    assert set(header) == {"version", "n", "L", "widths", "vocab_dim", "seed"}
    bad = json.loads(path.read_text())
    bad["header"]["version"] = 99
    with pytest.raises(FormatError):
        MLP.from_dict(bad)


def test_reference_model_satisfies_contract(small_model):
    assert isinstance(small_model, LayeredModel)
    assert small_model.num_layers == 4 and small_model.layer_widths == (64,) * 4


def test_features_deterministic_normalized_and_rename_sensitive():
    src = "int f(int a) { int b = a + 1; return b; }"
    u = SourceUnit.from_code("x", src)
    v = np.asarray(featurize(u))
    assert np.array_equal(v, featurize(SourceUnit.from_code("y", src)))
    assert abs(np.linalg.norm(v) - 1.0) < 1e-12
    renamed = u.with_ast(apply(u.ast, 1)[0])
    assert not np.array_equal(v, featurize(renamed))
    assert not featurize_text("").any()


def test_corpus_labels_and_determinism():
    four = generate_corpus(GeneratorConfig(4, 1000, seed=3))
    assert set(labels_of(four)) == {0, 1, 2, 3}
    assert len({u.id for u in four}) == 1000
    again = generate_corpus(GeneratorConfig(4, 1000, seed=3))
    assert [u.code for u in four] == [u.code for u in again]
    two = generate_corpus(GeneratorConfig(2, 200, seed=3))
    assert set(labels_of(two)) == {0, 1}
    with pytest.raises(ConfigError):
        GeneratorConfig(3, 10)


def test_defect_labels_match_behaviour():
    """Run every generated program: the label predicts what the interpreter sees."""
    grid = [(n, m) for n in range(-2, 10) for m in range(-2, 10)]
    units = generate_corpus(GeneratorConfig(4, 160, seed=8))
    for u in units:
        if u.label in (NO_DEFECT, WRONG_OUTPUT):
            assert {execute(u.ast, ENTRY, v, 5000).halted for v in VECTORS} == {TERMINATED}
        else:
            want = STEP_LIMIT if u.label == TIMEOUT else RUNTIME_ERROR
            assert any(execute(u.ast, ENTRY, v, 3000).halted == want for v in grid), u.code


def test_augment_appends_labelled_variants():
    units = generate_corpus(GeneratorConfig(4, 20, seed=1))
    out = augment(units, copies=2, seed=0)
    assert len(out) == 60 and out[:20] == units
    assert {u.id for u in out[20:]} == {f"{u.id}~{c}" for u in units for c in range(2)}
    by_id = {u.id: u for u in units}
    for v in out[20:]:
        assert v.label == by_id[v.id.split("~")[0]].label


def dump_rows(model, units):
    X = model.encode(units)
    rows = []
    for i, u in enumerate(units):
        row = {"id": u.id, "softmax": model.predict(X[i:i + 1])[0].tolist()}
        for k in range(1, model.num_layers + 1):
            row[f"layer_{k}_repr"] = model.hidden(X[i:i + 1], k)[0].tolist()
        rows.append(row)
    return rows


def test_precomputed_adapter_reproduces_live_model(tmp_path, small_model, small_splits):
    units = small_splits[2][:25]
    path = tmp_path / "dump.jsonl"
    path.write_text("".join(json.dumps(r) + "\n" for r in dump_rows(small_model, units)))
    pre = PrecomputedModel.load(path)
    assert isinstance(pre, LayeredModel)
    assert pre.num_layers == 4 and pre.num_classes == 4 and pre.layer_widths == (64,) * 4
    Xp, Xl = pre.encode(units[::-1]), small_model.encode(units[::-1])
    assert np.allclose(pre.predict(Xp), small_model.predict(Xl))
    assert np.allclose(pre.hidden(Xp, 2), small_model.hidden(Xl, 2))
    with pytest.raises(DimensionError):
        pre.encode([SourceUnit.from_code("unknown", "int f() { return 0; }")])
    with pytest.raises(IndexError):
        pre.hidden(Xp, 5)


def test_precomputed_adapter_rejects_bad_rows():
    with pytest.raises(FormatError):
        PrecomputedModel.from_rows([{"id": "a", "softmax": [1.0]}])
    with pytest.raises(FormatError):
        PrecomputedModel.from_rows([{"id": "a", "softmax": [1.0], "layer_2_repr": [0.0]}])
