import json
import random
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from codeadapt.cli import main
from codeadapt.errors import ConfigError, DegenerateError, FormatError, LengthMismatch
from codeadapt.harness.corpus_io import dump_jsonl, load_units, parse_records, read_jsonl
from codeadapt.harness.experiment import resolve_config, run_experiment
from codeadapt.harness.metrics import (
    MetricsReport, classification_metrics, compute_auc, correction_metrics, measure_tps,
)
from codeadapt.lang import Opaque
from codeadapt.model.corpus import GeneratorConfig, generate_corpus

TINY = {
    "corpus": {"train": {"samples": 150}, "validation": {"samples": 150}, "test": {"samples": 100}},
    "model": {"epochs": 4, "widths": [16, 16, 16]},
    "validation": {"baselines": ["vanilla", "entropy"], "head_epochs": 5},
    "adaptation": {"strategies": ["none", "aes"], "max_iter": 1},
}


# corpus io

def test_parse_records_errors():
    good = json.dumps({"id": "a", "code": "int f();", "label": 1})
    assert parse_records([good], 4)[0].label == 1
    cases = [
        ["{not json"],
        ["[1, 2]"],
        [json.dumps({"id": "a", "label": 0})],
        [json.dumps({"id": "a", "code": "x", "label": "1"})],
        [json.dumps({"id": "a", "code": "x", "label": 4})],
        [good, good],
    ]
    for lines in cases:
        with pytest.raises(FormatError) as err:
            parse_records(lines, 4)
        assert err.value.line == len(lines)
    with pytest.raises(FormatError):
        parse_records([json.dumps({"id": "a", "code": "x"})], 4)
    assert parse_records([json.dumps({"id": "a", "code": "x"})], 4, require_label=False)[0].label is None


def test_unparseable_code_becomes_opaque(tmp_path):
    path = tmp_path / "c.jsonl"
    dump_jsonl([{"id": "x", "code": "int f( {", "label": 0}], path)
    unit = load_units(path, 4)[0]
    assert isinstance(unit.ast.root.items[0], Opaque)
    assert unit.code == "int f( {"
    assert read_jsonl(path) == [{"code": "int f( {", "id": "x", "label": 0}]


# metrics

def brute_auc(scores, labels):
    pos = [s for s, y in zip(scores, labels) if y]
    neg = [s for s, y in zip(scores, labels) if not y]
    wins = sum(1.0 if p > n else 0.5 if p == n else 0.0 for p, n in product(pos, neg))
    return wins / (len(pos) * len(neg))


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 5), st.booleans()), min_size=2, max_size=40))
def test_auc_matches_pairwise_count(pairs):
    scores = [s / 5 for s, _ in pairs]
    labels = [int(y) for _, y in pairs]
    if len(set(labels)) < 2:
        with pytest.raises(DegenerateError):
            compute_auc(scores, labels)
        return
    assert abs(compute_auc(scores, labels) - brute_auc(scores, labels)) < 1e-12


def test_auc_edges():
    assert compute_auc([0.9, 0.8, 0.1, 0.2], [1, 1, 0, 0]) == 1.0
    assert compute_auc([0.1, 0.2, 0.9, 0.8], [1, 1, 0, 0]) == 0.0
    assert compute_auc([0.5] * 4, [1, 0, 1, 0]) == 0.5
    with pytest.raises(LengthMismatch):
        compute_auc([0.1], [1, 0])


def metric_fixture():
    rng = random.Random(20)
    truth = [rng.randrange(4) for _ in range(20)]
    before = [t if rng.random() < 0.6 else rng.randrange(4) for t in truth]
    flagged = [rng.random() < 0.5 for _ in range(20)]
    after = [t if f and rng.random() < 0.5 else (b if rng.random() < 0.9 else rng.randrange(4))
             for t, b, f in zip(truth, before, flagged)]
    return before, after, truth, flagged


def test_correction_metrics_against_enumeration():
    before, after, truth, flagged = metric_fixture()
    corrected = miscorrected = fw = fr = nw = nr = 0
    for b, a, t, f in zip(before, after, truth, flagged):
        if b != t:
            nw += 1
            fw += f
            corrected += f and a == t
        else:
            nr += 1
            fr += f
            miscorrected += a != t
    acc_b = nr / 20
    acc_a = sum(a == t for a, t in zip(after, truth)) / 20
    m = correction_metrics(before, after, truth, flagged, train_accuracy=0.9)
    assert m["csr"] == corrected / fw
    assert m["mcr"] == miscorrected / nr
    assert m["cvr"] == fw / nw
    assert m["mvr"] == fr / nr
    assert abs(m["ri"] - (acc_a - acc_b) / (0.9 - acc_b)) < 1e-12
    assert m["tallies"]["total"] == 20


def test_classification_metrics_against_enumeration():
    before, _, truth, _ = metric_fixture()
    m = classification_metrics(before, truth, 4)
    assert m["accuracy"] == sum(b == t for b, t in zip(before, truth)) / 20
    ps, rs, fs = [], [], []
    for c in range(4):
        tp = sum(b == c and t == c for b, t in zip(before, truth))
        pp = sum(b == c for b in before)
        ap = sum(t == c for t in truth)
        p = tp / pp if pp else 0.0
        r = tp / ap if ap else 0.0
        ps.append(p)
        rs.append(r)
        fs.append(2 * p * r / (p + r) if p + r else 0.0)
        assert m["counts"][str(c)]["tp"] == tp
    assert abs(m["precision"] - np.mean(ps)) < 1e-12
    assert abs(m["recall"] - np.mean(rs)) < 1e-12
    assert abs(m["f1"] - np.mean(fs)) < 1e-12
    binary = classification_metrics([1, 1, 0, 0], [1, 0, 1, 0], 2)
    assert binary["precision"] == 0.5 and binary["recall"] == 0.5


def test_no_change_means_no_correction():
    before, _, truth, flagged = metric_fixture()
    m = correction_metrics(before, before, truth, flagged, train_accuracy=0.95)
    assert m["mcr"] == 0 and m["ri"] == 0 and m["csr"] == 0
    empty = correction_metrics([0, 1], [0, 1], [0, 1], [False, False])
    assert empty["csr"] is None and empty["ri"] is None
    with pytest.raises(LengthMismatch):
        correction_metrics([0], [0, 1], [0], [True])


def test_tps():
    assert measure_tps([100], [50.0]) == 2.0
    assert measure_tps([60, 40], [20.0, 30.0]) == 2.0
    assert measure_tps([], []) is None
    assert measure_tps([3], [0.0]) is None


def test_metrics_report_round_trip():
    r = MetricsReport(accuracy=0.5, csr=None, tps=3.0, counts={"a": 1})
    assert MetricsReport.from_dict(json.loads(json.dumps(r.to_dict()))) == r
    assert "tps" not in r.to_dict(with_timing=False)


# experiment

def test_config_errors_name_the_field():
    cases = {
        "num_classes": {"num_classes": 3},
        "model.epochs": {"model": {"epochs": -1}},
        "model.widths.1": {"model": {"widths": [4, 0]}},
        "adaptation.strategies.0": {"adaptation": {"strategies": ["magic"]}},
        "validation.baselines": {"validation": {"baselines": ["oracle"]}},
        "corpus.test.samples": {"corpus": {"test": {"samples": 0}}},
        "model.depth": {"model": {"depth": 3}},
    }
    for path, user in cases.items():
        with pytest.raises(ConfigError) as err:
            resolve_config(user)
        assert err.value.path == path
    with pytest.raises(ConfigError) as err:
        resolve_config({}, ["adaptation.max_iter=0"])
    assert err.value.path == "adaptation.max_iter"
    assert resolve_config({}, ["seed=3"])["adaptation"]["seeds"] == [3]


@pytest.fixture(scope="module")
def tiny_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("tiny")
    return run_experiment(TINY, output_dir=out), out


def test_strategy_none_leaves_predictions(tiny_run):
    result, _ = tiny_run
    none = result.outcomes[0]
    assert none.strategy == "none"
    m = none.metrics
    assert m.accuracy_after == m.accuracy and m.f1_after == m.f1
    assert m.mcr == 0 and m.ri in (0, None) and m.tps is None
    assert all(a is b for a, b in zip(none.units, result.prepared.test_units))


def test_experiment_outputs(tiny_run):
    result, out = tiny_run
    report = json.loads((out / "report.json").read_text())
    assert report == json.loads(json.dumps(result.report))
    assert set(report["auc"]) == {"dsmg", "vanilla", "entropy"}
    assert "tps" not in report["metrics"]
    assert (out / "timing.json").exists() and (out / "report.txt").exists()
    aes = result.outcomes[1]
    lineage = read_jsonl(out / "runs" / "aes-seed0" / "lineage.jsonl")
    assert len(lineage) == report["flagged"] == len(aes.results)
    assert report["runs"][1]["metrics"]["counts"]["adapted"] == sum(r["adapted"] for r in lineage)


# CLI

def test_cli_exit_codes(tmp_path, capsys):
    assert main(["transform", str(tmp_path / "missing.c"), "--op", "1"]) == 2
    bad = tmp_path / "bad.jsonl"
    bad.write_text("{oops\n")
    assert main(["train", str(bad), "-o", str(tmp_path / "m.json")]) == 2
    cfg = tmp_path / "c.yaml"
    cfg.write_text("num_classes: 5\n")
    assert main(["run-experiment", str(cfg)]) == 1
    with pytest.raises(SystemExit) as exit_:
        main(["transform"])
    assert exit_.value.code == 1
    capsys.readouterr()


def test_cli_transform(tmp_path, capsys):
    src = tmp_path / "a.c"
    src.write_text("int main() { int a = 1; a++; return a; }\n")
    assert main(["transform", str(src), "--op", "changeUnary"]) == 0
    assert "a = a + 1;" in capsys.readouterr().out
    assert main(["transform", str(src), "--op", "12"]) == 0
    assert "int a;\n    a = 1;" in capsys.readouterr().out
    assert main(["transform", str(src), "--op", "changeNothing"]) == 1


def test_precomputed_model_through_validate(tmp_path, small_model, small_splits, capsys):
    units = small_splits[2][:40]
    X = small_model.encode(units)
    rows = []
    probs = small_model.predict(X)
    for i, u in enumerate(units):
        row = {"id": u.id, "softmax": probs[i].tolist()}
        for k in range(1, small_model.num_layers + 1):
            row[f"layer_{k}_repr"] = small_model.hidden(X[i:i + 1], k)[0].tolist()
        rows.append(row)
    model_path = tmp_path / "pre.jsonl"
    dump_jsonl(rows, model_path)
    corpus = tmp_path / "c.jsonl"
    dump_jsonl([{"id": u.id, "code": u.code, "label": u.label} for u in units], corpus)
    out = tmp_path / "v.jsonl"
    assert main(["validate", str(corpus), "--model", str(model_path), "--method", "vanilla",
                 "-o", str(out)]) == 0
    got = read_jsonl(out)
    assert [r["l_x"] for r in got] == probs.argmax(axis=1).tolist()
    assert np.allclose([r["score"] for r in got], probs.max(axis=1))
    bundle = tmp_path / "b.json"
    assert main(["gen-submodels", str(corpus), "--model", str(model_path), "--epochs", "3",
                 "-o", str(bundle)]) == 0
    assert main(["validate", str(corpus), "--model", str(model_path), "--bundle", str(bundle),
                 "-o", str(out)]) == 0
    assert len(read_jsonl(out)) == 40
    stranger = tmp_path / "s.jsonl"
    dump_jsonl([{"id": "unknown", "code": "int f();", "label": 0}], stranger)
    assert main(["validate", str(stranger), "--model", str(model_path), "--method", "vanilla"]) == 2
    capsys.readouterr()


def test_cli_pipeline_round_trip(tmp_path, capsys):
    d = tmp_path
    assert main(["gen-corpus", "--samples", "120", "--seed", "1", "--compact-fraction", "0.05",
                 "-o", str(d / "train.jsonl")]) == 0
    assert main(["gen-corpus", "--samples", "80", "--seed", "2", "--id-prefix", "t",
                 "-o", str(d / "test.jsonl")]) == 0
    assert len(generate_corpus(GeneratorConfig(4, 120, seed=1, compact_fraction=0.05))) == \
        len(read_jsonl(d / "train.jsonl"))
    assert main(["train", str(d / "train.jsonl"), "--epochs", "3", "--widths", "16,16,16",
                 "-o", str(d / "m.json")]) == 0
    assert main(["gen-submodels", str(d / "train.jsonl"), "--model", str(d / "m.json"),
                 "--epochs", "3", "-o", str(d / "b.json")]) == 0
    assert main(["validate", str(d / "test.jsonl"), "--model", str(d / "m.json"),
                 "--bundle", str(d / "b.json"), "-o", str(d / "v.jsonl")]) == 0
    oos = [r["id"] for r in read_jsonl(d / "v.jsonl") if r["verdict"] == "out-of-scope"][:5]
    (d / "oos.json").write_text(json.dumps(oos))
    assert main(["adapt", str(d / "test.jsonl"), "--model", str(d / "m.json"),
                 "--bundle", str(d / "b.json"), "--oos", str(d / "oos.json"),
                 "--max-iter", "1", "--lineage", str(d / "l.jsonl"), "-o", str(d / "a.jsonl")]) == 0
    assert len(read_jsonl(d / "l.jsonl")) == len(oos)
    assert main(["evaluate", "--model", str(d / "m.json"), "--test", str(d / "test.jsonl"),
                 "--adapted", str(d / "a.jsonl"), "--oos", str(d / "oos.json"),
                 "--validation", str(d / "v.jsonl"), "--lineage", str(d / "l.jsonl"),
                 "-o", str(d / "r.json")]) == 0
    report = json.loads((d / "r.json").read_text())
    assert 0 <= report["accuracy"] <= 1
    (d / "oos.json").write_text(json.dumps(["nope"]))
    assert main(["adapt", str(d / "test.jsonl"), "--model", str(d / "m.json"),
                 "--bundle", str(d / "b.json"), "--oos", str(d / "oos.json"),
                 "-o", str(d / "a2.jsonl")]) == 1
    capsys.readouterr()
