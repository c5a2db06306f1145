"""End-to-end experiment: train, validate, adapt, re-predict, report.

A run is described by one nested key-value config (YAML or JSON). Every
leaf has a default, so an empty config is a valid (generated-corpus) run.
Outputs are split in two: ``report.json`` / ``report.txt`` hold only
quantities that are a pure function of the config, so repeated runs produce
identical bytes, while wall-clock figures (TPS, stage durations) go to
``timing.json``.
"""
from __future__ import annotations

import copy
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np
import yaml

from ..adapt import AdaptResult, AesConfig, Evaluator, adapt_unit, derive_seed
from ..errors import ConfigError
from ..model.corpus import GeneratorConfig, augment, generate_corpus
from ..model.features import labels_of
from ..model.mlp import MLP, TrainConfig, train
from ..model.precomputed import PrecomputedModel
from ..units import SourceUnit
from ..validation.baselines import METHODS, BaselineContext, baseline_scores
from ..validation.dsmg import (
    IN_SCOPE, OUT_OF_SCOPE, SubModelBundle, build_submodels, default_threshold, score_inputs,
)
from ..validation.scores import WEIGHT_SCHEMES
from .corpus_io import dump_jsonl, ensure_dir, load_units
from .metrics import MetricsReport, classification_metrics, compute_auc, correction_metrics, measure_tps
from .search import DEFAULT_BUDGET, hill_climb, random_search

log = logging.getLogger(__name__)

STRATEGIES = ("aes", "random", "hillclimb", "none")
REPORT_VERSION = 1

DEFAULTS: dict[str, Any] = {
    "seed": 0,
    "num_classes": 4,
    "output_dir": "experiment-out",
    "corpus": {
        "train": {"path": None, "samples": 1000, "compact_fraction": 0.02, "augment": 1},
        "validation": {"path": None, "samples": 2000, "compact_fraction": 0.5, "augment": 0},
        "test": {"path": None, "samples": 2000, "compact_fraction": 0.5, "augment": 0},
    },
    "model": {
        "checkpoint": None,
        "epochs": 30,
        "learning_rate": 0.05,
        "batch_size": 32,
        "dropout_rate": 0.0,
        "widths": [64, 64, 64, 64],
        "vocab_dim": 1024,
    },
    "validation": {
        "method": "dsmg",
        "threshold": None,
        "bundle": None,
        "layers": None,
        "samples_per_layer": 3,
        "dropout_rate": 0.1,
        "head_epochs": 20,
        "weight_scheme": "linear",
        "baselines": list(METHODS),
        "mc_samples": 20,
        "mc_dropout": 0.1,
        "ensemble_size": 3,
    },
    "adaptation": {
        "strategies": ["aes"],
        "seeds": None,
        "fitness_threshold": None,
        "max_iter": 3,
        "mutation_rate": 0.1,
        "crossover_n": 15,
        "budget": DEFAULT_BUDGET,
    },
}


# config handling

def load_config(path) -> dict:
    """Read a YAML or JSON config file (JSON is valid YAML)."""
    try:
        data = yaml.safe_load(Path(path).read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config: {exc}") from exc
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("config must be a key-value mapping")
    return data


def _merge(base: dict, extra: dict, prefix: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in extra.items():
        where = f"{prefix}{key}"
        if key not in base:
            raise ConfigError("unknown field", where)
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError("expected a mapping", where)
            out[key] = _merge(base[key], value, where + ".")
        else:
            out[key] = copy.deepcopy(value)
    return out


def apply_override(cfg: dict, assignment: str) -> dict:
    """Apply one ``dotted.key=value`` override; the value is parsed as YAML."""
    if "=" not in assignment:
        raise ConfigError(f"override {assignment!r} is not key=value")
    key, raw = assignment.split("=", 1)
    value = yaml.safe_load(raw) if raw else None
    tree: dict = value
    for part in reversed(key.strip().split(".")):
        tree = {part: tree}
    return _merge(cfg, tree)


def _number(value, path: str, lo=None, hi=None, integer=False, allow_none=False):
    if value is None and allow_none:
        return None
    ok = isinstance(value, int) if integer else isinstance(value, (int, float))
    if not ok or isinstance(value, bool):
        raise ConfigError(f"expected {'an integer' if integer else 'a number'}, got {value!r}", path)
    if lo is not None and value < lo:
        raise ConfigError(f"must be >= {lo}", path)
    if hi is not None and value > hi:
        raise ConfigError(f"must be <= {hi}", path)
    return value


def resolve_config(user: Optional[dict] = None, overrides: Sequence[str] = ()) -> dict:
    """Defaults merged with ``user`` and the overrides, then validated."""
    cfg = _merge(DEFAULTS, user or {})
    for assignment in overrides:
        cfg = apply_override(cfg, assignment)

    _number(cfg["seed"], "seed", lo=0, integer=True)
    if cfg["num_classes"] not in (2, 4):
        raise ConfigError("must be 2 or 4", "num_classes")
    for split, spec in cfg["corpus"].items():
        where = f"corpus.{split}"
        if spec["path"] is None:
            _number(spec["samples"], where + ".samples", lo=1, integer=True)
            _number(spec["compact_fraction"], where + ".compact_fraction", lo=0, hi=1)
        elif not isinstance(spec["path"], str):
            raise ConfigError("expected a file path", where + ".path")
        _number(spec["augment"], where + ".augment", lo=0, integer=True)
    m = cfg["model"]
    _number(m["epochs"], "model.epochs", lo=0, integer=True)
    _number(m["learning_rate"], "model.learning_rate", lo=0)
    _number(m["batch_size"], "model.batch_size", lo=1, integer=True)
    _number(m["dropout_rate"], "model.dropout_rate", lo=0, hi=0.99)
    _number(m["vocab_dim"], "model.vocab_dim", lo=1, integer=True)
    if not isinstance(m["widths"], list) or len(m["widths"]) < 2:
        raise ConfigError("need a list of at least two layer widths", "model.widths")
    for i, w in enumerate(m["widths"]):
        _number(w, f"model.widths.{i}", lo=1, integer=True)
    v = cfg["validation"]
    if v["method"] != "dsmg" and v["method"] not in METHODS:
        raise ConfigError(f"unknown method {v['method']!r}", "validation.method")
    _number(v["threshold"], "validation.threshold", allow_none=True)
    _number(v["samples_per_layer"], "validation.samples_per_layer", lo=1, integer=True)
    _number(v["dropout_rate"], "validation.dropout_rate", lo=0, hi=0.99)
    _number(v["head_epochs"], "validation.head_epochs", lo=0, integer=True)
    _number(v["mc_samples"], "validation.mc_samples", lo=1, integer=True)
    _number(v["mc_dropout"], "validation.mc_dropout", lo=0, hi=0.99)
    _number(v["ensemble_size"], "validation.ensemble_size", lo=1, integer=True)
    if v["weight_scheme"] not in WEIGHT_SCHEMES:
        raise ConfigError(f"must be one of {', '.join(WEIGHT_SCHEMES)}", "validation.weight_scheme")
    if not isinstance(v["baselines"], list) or any(b not in METHODS for b in v["baselines"]):
        raise ConfigError(f"entries must be among {', '.join(METHODS)}", "validation.baselines")
    if v["layers"] is not None:
        if not isinstance(v["layers"], list) or not v["layers"]:
            raise ConfigError("expected a non-empty list", "validation.layers")
        for i, k in enumerate(v["layers"]):
            _number(k, f"validation.layers.{i}", lo=1, hi=len(m["widths"]), integer=True)
    a = cfg["adaptation"]
    strategies = a["strategies"]
    if isinstance(strategies, str):
        strategies = a["strategies"] = [strategies]
    if not isinstance(strategies, list) or not strategies:
        raise ConfigError("expected a non-empty list", "adaptation.strategies")
    for i, s in enumerate(strategies):
        if s not in STRATEGIES:
            raise ConfigError(f"must be one of {', '.join(STRATEGIES)}", f"adaptation.strategies.{i}")
    if a["seeds"] is None:
        a["seeds"] = [cfg["seed"]]
    if not isinstance(a["seeds"], list) or not a["seeds"]:
        raise ConfigError("expected a non-empty list", "adaptation.seeds")
    for i, s in enumerate(a["seeds"]):
        _number(s, f"adaptation.seeds.{i}", lo=0, integer=True)
    _number(a["fitness_threshold"], "adaptation.fitness_threshold", allow_none=True)
    _number(a["max_iter"], "adaptation.max_iter", lo=1, integer=True)
    _number(a["mutation_rate"], "adaptation.mutation_rate", lo=0, hi=1)
    _number(a["crossover_n"], "adaptation.crossover_n", lo=1, hi=15, integer=True)
    _number(a["budget"], "adaptation.budget", lo=1, integer=True)
    return cfg


# pipeline stages

def _split_seed(seed: int, name: str) -> int:
    return derive_seed(seed, name) % (2 ** 32)


def load_split(cfg: dict, name: str) -> list[SourceUnit]:
    spec = cfg["corpus"][name]
    n = cfg["num_classes"]
    if spec["path"] is not None:
        units = load_units(spec["path"], n)
    else:
        units = generate_corpus(GeneratorConfig(n, spec["samples"], _split_seed(cfg["seed"], name),
                                                spec["compact_fraction"], name[:2] + "-"))
    if spec["augment"]:
        units = augment(units, spec["augment"], _split_seed(cfg["seed"], name + "/augment"))
    return units


def train_config(cfg: dict, seed: Optional[int] = None) -> TrainConfig:
    m = cfg["model"]
    return TrainConfig(m["epochs"], m["learning_rate"], m["batch_size"], m["dropout_rate"],
                       cfg["seed"] if seed is None else seed)


def load_model(path):
    """A checkpointed MLP, or a precomputed-representation dump for ``.jsonl`` files."""
    if str(path).endswith(".jsonl"):
        return PrecomputedModel.load(path)
    return MLP.load(path)


def fit_model(cfg: dict, units: Sequence[SourceUnit], seed: Optional[int] = None) -> MLP:
    m = cfg["model"]
    return train(units, train_config(cfg, seed), cfg["num_classes"], m["widths"], m["vocab_dim"])


def build_bundle(cfg: dict, model, units: Sequence[SourceUnit], X=None) -> SubModelBundle:
    v = cfg["validation"]
    head_cfg = TrainConfig(epochs=v["head_epochs"], rng_seed=cfg["seed"])
    return build_submodels(model, units, v["layers"], v["samples_per_layer"], v["dropout_rate"],
                           head_cfg, v["weight_scheme"], X=X)


def flag_threshold(cfg: dict) -> float:
    v = cfg["validation"]["threshold"]
    return default_threshold(cfg["num_classes"]) if v is None else float(v)


def fitness_threshold(cfg: dict) -> float:
    a = cfg["adaptation"]["fitness_threshold"]
    if a is not None:
        return float(a)
    if cfg["validation"]["method"] == "dsmg":
        return flag_threshold(cfg)
    return default_threshold(cfg["num_classes"])


def run_strategy(strategy: str, unit: SourceUnit, evaluator: Evaluator, cfg: dict,
                 seed: int) -> AdaptResult:
    a = cfg["adaptation"]
    threshold = fitness_threshold(cfg)
    if strategy == "aes":
        aes = AesConfig(a["max_iter"], threshold, a["mutation_rate"], a["crossover_n"], seed)
        return adapt_unit(unit, evaluator, aes)
    if strategy == "random":
        return random_search(unit, evaluator, threshold, seed, a["budget"])
    if strategy == "hillclimb":
        return hill_climb(unit, evaluator, threshold, seed, a["budget"])
    raise ConfigError(f"unknown strategy {strategy!r}", "adaptation.strategies")


@dataclass
class Prepared:
    """Everything that does not depend on the adaptation strategy."""

    cfg: dict
    train_units: list[SourceUnit]
    test_units: list[SourceUnit]
    model: Any
    bundle: SubModelBundle
    train_accuracy: float
    before: np.ndarray
    scores: np.ndarray
    flagged: np.ndarray
    aucs: dict
    timing: dict = field(default_factory=dict)


def _auc_or_none(scores: np.ndarray, correct: np.ndarray) -> Optional[float]:
    if correct.all() or not correct.any():
        return None
    return compute_auc(scores, correct.astype(int))


def prepare(cfg: dict) -> Prepared:
    timing = {}
    t0 = time.perf_counter()
    train_units = load_split(cfg, "train")
    val_units = load_split(cfg, "validation")
    test_units = load_split(cfg, "test")
    timing["load_seconds"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    m = cfg["model"]
    model = load_model(m["checkpoint"]) if m["checkpoint"] else fit_model(cfg, train_units)
    if model.num_classes != cfg["num_classes"]:
        raise ConfigError(f"model has {model.num_classes} classes", "model.checkpoint")
    X_train = model.encode(train_units)
    train_accuracy = float((model.predict(X_train).argmax(axis=1) == labels_of(train_units)).mean())
    timing["train_seconds"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    v = cfg["validation"]
    X_val = model.encode(val_units)
    bundle = SubModelBundle.load(v["bundle"]) if v["bundle"] else build_bundle(cfg, model, val_units, X_val)
    timing["bundle_seconds"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    X_test = model.encode(test_units)
    y_test = labels_of(test_units)
    before, _, dsmg = score_inputs(model, bundle, X_test)
    correct = before == y_test
    ctx = BaselineContext(val_X=X_val, val_y=labels_of(val_units), mc_samples=v["mc_samples"],
                          mc_dropout=v["mc_dropout"], seed=cfg["seed"],
                          hidden_layers=v["layers"], weight_scheme=v["weight_scheme"])
    method_scores = {"dsmg": dsmg}
    wanted = list(v["baselines"])
    if v["method"] != "dsmg" and v["method"] not in wanted:
        wanted.append(v["method"])
    for method in wanted:
        if method == "deep_ensemble" and not ctx.ensemble:
            ctx.ensemble = [model] + [fit_model(cfg, train_units, cfg["seed"] + i)
                                      for i in range(1, v["ensemble_size"])]
        method_scores[method] = baseline_scores(method, model, X_test, ctx)
    aucs = {name: _auc_or_none(s, correct) for name, s in method_scores.items()}
    scores = method_scores[v["method"]]
    flagged = scores <= flag_threshold(cfg)
    timing["validation_seconds"] = time.perf_counter() - t0
    return Prepared(cfg, train_units, test_units, model, bundle, train_accuracy,
                    before, scores, flagged, aucs, timing)


@dataclass
class RunOutcome:
    strategy: str
    seed: int
    metrics: MetricsReport
    after: np.ndarray
    units: list[SourceUnit]
    results: list[AdaptResult]


def adapt_and_measure(prep: Prepared, strategy: str, seed: int,
                      evaluator: Optional[Evaluator] = None) -> RunOutcome:
    cfg = prep.cfg
    units = list(prep.test_units)
    results = []
    if strategy != "none":
        evaluator = evaluator or Evaluator(prep.model, prep.bundle)
        for i in np.flatnonzero(prep.flagged):
            res = run_strategy(strategy, units[i], evaluator, cfg, seed)
            results.append(res)
            units[i] = res.unit
    changed = [i for i, u in enumerate(units) if u is not prep.test_units[i]]
    after = prep.before.copy()
    if changed:
        X = prep.model.encode([units[i] for i in changed])
        after[changed] = prep.model.predict(X).argmax(axis=1)
    y = labels_of(prep.test_units)
    n = cfg["num_classes"]
    cls_before = classification_metrics(prep.before, y, n)
    cls_after = classification_metrics(after, y, n)
    corr = correction_metrics(prep.before, after, y, prep.flagged, prep.train_accuracy)
    report = MetricsReport(
        accuracy=cls_before["accuracy"], precision=cls_before["precision"],
        recall=cls_before["recall"], f1=cls_before["f1"],
        accuracy_after=cls_after["accuracy"], precision_after=cls_after["precision"],
        recall_after=cls_after["recall"], f1_after=cls_after["f1"],
        ri=corr["ri"], csr=corr["csr"], mcr=corr["mcr"], cvr=corr["cvr"], mvr=corr["mvr"],
        auc=prep.aucs[cfg["validation"]["method"]],
        tps=measure_tps([r.transformations for r in results], [r.elapsed for r in results]),
        counts={"before": cls_before["counts"], "after": cls_after["counts"],
                **corr["tallies"], "flagged": int(prep.flagged.sum()),
                "adapted": sum(r.adapted for r in results)},
    )
    return RunOutcome(strategy, seed, report, after, units, results)


# reporting

SUMMARY_FIELDS = ("accuracy", "accuracy_after", "f1", "f1_after", "csr", "mcr", "cvr", "mvr", "ri")


def _fmt(value) -> str:
    return "n/a" if value is None else f"{value:.4f}"


def _mean(values: list) -> Optional[float]:
    present = [v for v in values if v is not None]
    return float(np.mean(present)) if present else None


def summarize(runs: list[dict]) -> dict:
    """Per-strategy means of the headline metrics over seeds."""
    out = {}
    for strategy in dict.fromkeys(r["strategy"] for r in runs):
        mine = [r["metrics"] for r in runs if r["strategy"] == strategy]
        out[strategy] = {f: _mean([m[f] for m in mine]) for f in SUMMARY_FIELDS}
        out[strategy]["seeds"] = len(mine)
    return out


def format_report(report: dict, tps: Optional[dict] = None) -> str:
    """Plain-text tables: validation AUCs, then per-strategy means."""
    lines = [f"num_classes {report['num_classes']}  test {report['test_size']}  "
             f"flagged {report['flagged']}  train_accuracy {_fmt(report['train_accuracy'])}",
             "", "validation method      AUC"]
    for name, auc in report["auc"].items():
        marker = " *" if name == report["validation_method"] else ""
        lines.append(f"  {name:<20} {_fmt(auc)}{marker}")
    header = "strategy    " + " ".join(f"{f:>14}" for f in SUMMARY_FIELDS)
    if tps is not None:
        header += f" {'tps':>10}"
    lines += ["", header]
    for strategy, row in report["summary"].items():
        line = f"{strategy:<11} " + " ".join(f"{_fmt(row[f]):>14}" for f in SUMMARY_FIELDS)
        if tps is not None:
            line += f" {_fmt(tps.get(strategy)):>10}"
        lines.append(line)
    return "\n".join(lines) + "\n"


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


@dataclass
class ExperimentResult:
    report: dict
    timing: dict
    outcomes: list[RunOutcome]
    prepared: Prepared

    @property
    def metrics(self) -> MetricsReport:
        return self.outcomes[0].metrics


def run_experiment(config, overrides: Sequence[str] = (), output_dir=None,
                   write: bool = True) -> ExperimentResult:
    """Run the whole pipeline for a config dict or config file path."""
    user = load_config(config) if isinstance(config, (str, Path)) else dict(config or {})
    cfg = resolve_config(user, overrides)
    if output_dir is not None:
        cfg["output_dir"] = str(output_dir)
    prep = prepare(cfg)
    evaluator = Evaluator(prep.model, prep.bundle)
    outcomes, runs, tps = [], [], {}
    for strategy in cfg["adaptation"]["strategies"]:
        start = time.perf_counter()
        for seed in cfg["adaptation"]["seeds"]:
            outcome = adapt_and_measure(prep, strategy, seed, evaluator)
            outcomes.append(outcome)
            runs.append({"strategy": strategy, "seed": seed,
                         "metrics": outcome.metrics.to_dict(with_timing=False)})
        mine = [r for o in outcomes if o.strategy == strategy for r in o.results]
        tps[strategy] = measure_tps([r.transformations for r in mine], [r.elapsed for r in mine])
        prep.timing[f"adapt_{strategy}_seconds"] = time.perf_counter() - start

    cfg_echo = {k: v for k, v in cfg.items() if k != "output_dir"}
    report = {
        "version": REPORT_VERSION,
        "config": cfg_echo,
        "num_classes": cfg["num_classes"],
        "train_size": len(prep.train_units),
        "test_size": len(prep.test_units),
        "train_accuracy": prep.train_accuracy,
        "validation_method": cfg["validation"]["method"],
        "threshold": flag_threshold(cfg),
        "flagged": int(prep.flagged.sum()),
        "auc": prep.aucs,
        "metrics": runs[0]["metrics"],
        "runs": runs,
        "summary": summarize(runs),
    }
    timing = {"tps": tps, "stages": prep.timing, "tps_first_run": outcomes[0].metrics.tps}
    if write:
        write_outputs(cfg["output_dir"], prep, outcomes, report, timing)
    return ExperimentResult(report, timing, outcomes, prep)


def write_outputs(out_dir, prep: Prepared, outcomes: list[RunOutcome], report: dict,
                  timing: dict) -> None:
    out = ensure_dir(out_dir)
    if isinstance(prep.model, MLP):
        prep.model.save(out / "model.json")
    prep.bundle.save(out / "bundle.json")
    dump_jsonl(({"id": u.id, "l_x": int(prep.before[i]), "score": float(prep.scores[i]),
                 "verdict": OUT_OF_SCOPE if prep.flagged[i] else IN_SCOPE}
                for i, u in enumerate(prep.test_units)), out / "validation.jsonl")
    dump_jsonl(({"id": u.id, "code": u.code, "label": u.label} for u in prep.test_units),
               out / "test.jsonl")
    for o in outcomes:
        run_dir = ensure_dir(out / "runs" / f"{o.strategy}-seed{o.seed}")
        dump_jsonl((r.log() for r in o.results), run_dir / "lineage.jsonl")
        dump_jsonl(({"id": u.id, "code": u.code, "label": u.label} for u in o.units),
                   run_dir / "adapted.jsonl")
        dump_jsonl(({"id": u.id, "before": int(prep.before[i]), "after": int(o.after[i]),
                     "label": u.label} for i, u in enumerate(prep.test_units)),
                   run_dir / "predictions.jsonl")
    _write_json(out / "report.json", report)
    (out / "report.txt").write_text(format_report(report))
    _write_json(out / "timing.json", timing)
