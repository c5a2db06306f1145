"""Command-line entry point: ``codeadapt <subcommand> ...``.

Exit codes: 0 success, 1 usage or configuration error, 2 data error
(unreadable or malformed input files).
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .adapt import AesConfig, Evaluator, adapt_unit
from .errors import ConfigError, DegenerateError, DimensionError, FormatError, LengthMismatch
from .harness import experiment as exp
from .harness.corpus_io import dump_jsonl, load_units, read_jsonl, save_units
from .harness.metrics import MetricsReport, classification_metrics, compute_auc, correction_metrics, measure_tps
from .harness.search import DEFAULT_BUDGET, hill_climb, random_search
from .lang import LexError, ParseError, parse_source, print_ast
from .model.corpus import GeneratorConfig, augment, generate_corpus
from .model.features import labels_of
from .model.mlp import DEFAULT_WIDTHS, TrainConfig, train
from .transforms import TransformOp, apply, apply_sequence
from .validation.baselines import METHODS, BaselineContext, baseline_scores
from .validation.dsmg import IN_SCOPE, OUT_OF_SCOPE, SubModelBundle, build_submodels, default_threshold, score_inputs
from .validation.scores import WEIGHT_SCHEMES

USAGE_ERROR, DATA_ERROR = 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE_ERROR, f"{self.prog}: error: {message}\n")


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _write_text(text: str, path: Optional[str]) -> None:
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _emit_jsonl(rows, path: Optional[str]) -> None:
    if path:
        dump_jsonl(rows, path)
    else:
        for row in rows:
            sys.stdout.write(json.dumps(row, sort_keys=True) + "\n")


def _threshold(args, num_classes: int) -> float:
    return args.threshold if args.threshold is not None else default_threshold(num_classes)


# subcommands

def cmd_gen_corpus(args) -> int:
    units = generate_corpus(GeneratorConfig(args.classes, args.samples, args.seed,
                                            args.compact_fraction, args.id_prefix))
    if args.augment:
        units = augment(units, args.augment, args.seed)
    save_units(units, args.output)
    print(f"wrote {len(units)} programs to {args.output}")
    return 0


def cmd_train(args) -> int:
    units = load_units(args.corpus, args.classes)
    cfg = TrainConfig(args.epochs, args.lr, args.batch_size, args.dropout, args.seed)
    model = train(units, cfg, args.classes, args.widths, args.vocab_dim)
    model.save(args.output)
    acc = float((model.predict(model.encode(units)).argmax(axis=1) == labels_of(units)).mean())
    print(f"trained on {len(units)} programs, training accuracy {acc:.4f}; saved {args.output}")
    return 0


def cmd_gen_submodels(args) -> int:
    model = exp.load_model(args.model)
    units = load_units(args.corpus, model.num_classes)
    cfg = TrainConfig(epochs=args.epochs, rng_seed=args.seed)
    bundle = build_submodels(model, units, args.layers, args.samples_per_layer,
                             args.dropout_rate, cfg, args.weight_scheme)
    bundle.save(args.output)
    print(f"built {len(bundle.submodels)} sub-models over layers {bundle.layers}; saved {args.output}")
    return 0


def cmd_validate(args) -> int:
    model = exp.load_model(args.model)
    units = load_units(args.corpus, model.num_classes, require_label=False)
    X = model.encode(units)
    threshold = _threshold(args, model.num_classes)
    l_x = model.predict(X).argmax(axis=1)
    if args.method == "dsmg":
        if not args.bundle:
            raise ConfigError("dsmg needs --bundle", "bundle")
        _, _, scores = score_inputs(model, SubModelBundle.load(args.bundle), X)
    else:
        ctx = BaselineContext(seed=args.seed)
        if args.val:
            val = load_units(args.val, model.num_classes)
            ctx.val_X, ctx.val_y = model.encode(val), labels_of(val)
        scores = baseline_scores(args.method, model, X, ctx)
    rows = [{"id": u.id, "l_x": int(l_x[i]), "score": float(scores[i]),
             "verdict": OUT_OF_SCOPE if scores[i] <= threshold else IN_SCOPE}
            for i, u in enumerate(units)]
    _emit_jsonl(rows, args.output)
    return 0


def cmd_adapt(args) -> int:
    model = exp.load_model(args.model)
    bundle = SubModelBundle.load(args.bundle)
    units = load_units(args.corpus, model.num_classes, require_label=False)
    try:
        oos = json.loads(Path(args.oos).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{args.oos}: {exc.msg}", exc.lineno) from exc
    if not isinstance(oos, list):
        raise FormatError(f"{args.oos}: expected a JSON list of ids")
    known = {u.id for u in units}
    unknown = [i for i in oos if i not in known]
    if unknown:
        raise ConfigError(f"ids not in the corpus: {unknown[:5]}", "oos")
    wanted = set(oos)
    threshold = _threshold(args, model.num_classes)
    evaluator = Evaluator(model, bundle)
    aes = AesConfig(args.max_iter, threshold, args.mutation_rate, args.crossover_n, args.seed)
    out, logs, results = [], [], []
    for unit in units:
        if unit.id not in wanted:
            out.append(unit)
            continue
        if args.strategy == "aes":
            res = adapt_unit(unit, evaluator, aes)
        elif args.strategy == "random":
            res = random_search(unit, evaluator, threshold, args.seed, args.budget)
        else:
            res = hill_climb(unit, evaluator, threshold, args.seed, args.budget)
        results.append(res)
        logs.append(res.log(with_timing=True))
        out.append(res.unit)
    save_units(out, args.output)
    if args.lineage:
        dump_jsonl(logs, args.lineage)
    tps = measure_tps([r.transformations for r in results], [r.elapsed for r in results])
    adapted = sum(r.adapted for r in results)
    print(f"adapted {adapted} of {len(results)} flagged programs; "
          f"TPS {'n/a' if tps is None else f'{tps:.1f}'}; wrote {args.output}")
    return 0


def cmd_evaluate(args) -> int:
    model = exp.load_model(args.model)
    n = model.num_classes
    test = load_units(args.test, n)
    y = labels_of(test)
    before = model.predict(model.encode(test)).argmax(axis=1)
    after = before
    flagged = np.zeros(len(test), dtype=bool)
    if args.adapted:
        adapted = {u.id: u for u in load_units(args.adapted, n, require_label=False)}
        missing = [u.id for u in test if u.id not in adapted]
        if missing:
            raise FormatError(f"adapted corpus lacks id(s) {missing[:5]}")
        after = model.predict(model.encode([adapted[u.id] for u in test])).argmax(axis=1)
    if args.oos:
        ids = set(json.loads(Path(args.oos).read_text()))
        flagged = np.array([u.id in ids for u in test])
    train_acc = None
    if args.train:
        tr = load_units(args.train, n)
        train_acc = float((model.predict(model.encode(tr)).argmax(axis=1) == labels_of(tr)).mean())
    auc = None
    if args.validation:
        scores = {r["id"]: r["score"] for r in read_jsonl(args.validation)}
        correct = (before == y).astype(int)
        try:
            auc = compute_auc([scores[u.id] for u in test], correct)
        except DegenerateError:
            auc = None
    tps = None
    if args.lineage:
        logs = [r for r in read_jsonl(args.lineage) if "elapsed" in r]
        tps = measure_tps([r["transformations"] for r in logs], [r["elapsed"] for r in logs])
    cb = classification_metrics(before, y, n)
    ca = classification_metrics(after, y, n)
    corr = correction_metrics(before, after, y, flagged, train_acc)
    report = MetricsReport(cb["accuracy"], cb["precision"], cb["recall"], cb["f1"],
                           ca["accuracy"], ca["precision"], ca["recall"], ca["f1"],
                           corr["ri"], corr["csr"], corr["mcr"], corr["cvr"], corr["mvr"], auc, tps,
                           {"before": cb["counts"], "after": ca["counts"], **corr["tallies"]})
    _write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n", args.output)
    return 0


def cmd_transform(args) -> int:
    try:
        source = Path(args.file).read_text()
    except OSError as exc:
        raise FormatError(str(exc)) from exc
    ast = parse_source(source)
    if args.all:
        ast, _ = apply_sequence(ast, [TransformOp(i, args.seed) for i in range(1, 16)])
    else:
        if args.op is None:
            raise ConfigError("give --op or --all", "op")
        spec = int(args.op) if args.op.isdigit() else args.op
        try:
            op = TransformOp.of(spec, args.seed)
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"unknown operator {args.op!r}", "op") from exc
        ast, _ = apply(ast, op)
    sys.stdout.write(print_ast(ast))
    return 0


def cmd_report(args) -> int:
    try:
        report = json.loads(Path(args.report).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{args.report}: {exc.msg}", exc.lineno) from exc
    if "summary" in report:
        timing_path = Path(args.report).with_name("timing.json")
        tps = json.loads(timing_path.read_text())["tps"] if timing_path.exists() else None
        sys.stdout.write(exp.format_report(report, tps))
    else:
        for key, value in sorted(report.items()):
            if key != "counts":
                sys.stdout.write(f"{key:<16} {exp._fmt(value)}\n")
    return 0


def cmd_run_experiment(args) -> int:
    overrides = list(args.set or [])
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    if args.strategy:
        overrides.append(f"adaptation.strategies=[{args.strategy}]")
    result = exp.run_experiment(args.config or {}, overrides, args.out)
    sys.stdout.write(exp.format_report(result.report, result.timing["tps"]))
    return 0


# parser

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="codeadapt", description="Input validation and adaptation for code classifiers.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen-corpus", help="generate a labeled synthetic corpus")
    g.add_argument("--classes", type=int, choices=(2, 4), default=4)
    g.add_argument("--samples", type=int, default=1000)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--compact-fraction", type=float, default=0.5)
    g.add_argument("--augment", type=int, default=0, help="refactored copies per program")
    g.add_argument("--id-prefix", default="p")
    g.add_argument("-o", "--output", required=True)
    g.set_defaults(fn=cmd_gen_corpus)

    t = sub.add_parser("train", help="train the reference classifier")
    t.add_argument("corpus")
    t.add_argument("--classes", type=int, default=None)
    t.add_argument("--epochs", type=int, default=30)
    t.add_argument("--lr", type=float, default=0.05)
    t.add_argument("--batch-size", type=int, default=32)
    t.add_argument("--dropout", type=float, default=0.0)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--widths", type=_int_list, default=list(DEFAULT_WIDTHS))
    t.add_argument("--vocab-dim", type=int, default=1024)
    t.add_argument("-o", "--output", required=True)
    t.set_defaults(fn=cmd_train)

    s = sub.add_parser("gen-submodels", help="build the dropout sub-model bundle")
    s.add_argument("corpus")
    s.add_argument("--model", required=True)
    s.add_argument("--layers", type=_int_list, default=None)
    s.add_argument("--samples-per-layer", type=int, default=3)
    s.add_argument("--dropout-rate", type=float, default=0.1)
    s.add_argument("--epochs", type=int, default=20)
    s.add_argument("--weight-scheme", choices=WEIGHT_SCHEMES, default="linear")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(fn=cmd_gen_submodels)

    v = sub.add_parser("validate", help="score inputs and give in/out-of-scope verdicts")
    v.add_argument("corpus")
    v.add_argument("--model", required=True)
    v.add_argument("--bundle")
    v.add_argument("--threshold", type=float, default=None)
    v.add_argument("--method", choices=("dsmg",) + METHODS, default="dsmg")
    v.add_argument("--val", help="labeled corpus for temperature fitting")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("-o", "--output")
    v.set_defaults(fn=cmd_validate)

    a = sub.add_parser("adapt", help="rewrite out-of-scope inputs")
    a.add_argument("corpus")
    a.add_argument("--model", required=True)
    a.add_argument("--bundle", required=True)
    a.add_argument("--oos", required=True, help="JSON list of ids to adapt")
    a.add_argument("--threshold", type=float, default=None)
    a.add_argument("--strategy", choices=("aes", "random", "hillclimb"), default="aes")
    a.add_argument("--max-iter", type=int, default=3)
    a.add_argument("--crossover-n", type=int, default=15)
    a.add_argument("--mutation-rate", type=float, default=0.1)
    a.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--lineage", help="lineage log JSONL")
    a.add_argument("-o", "--output", required=True)
    a.set_defaults(fn=cmd_adapt)

    e = sub.add_parser("evaluate", help="compute the metric report")
    e.add_argument("--model", required=True)
    e.add_argument("--test", required=True)
    e.add_argument("--adapted")
    e.add_argument("--oos")
    e.add_argument("--train", help="training corpus, for relative improvement")
    e.add_argument("--validation", help="validate output JSONL, for AUC")
    e.add_argument("--lineage", help="lineage log from adapt, for TPS")
    e.add_argument("-o", "--output")
    e.set_defaults(fn=cmd_evaluate)

    x = sub.add_parser("transform", help="apply transformation operators to a C file")
    x.add_argument("file")
    x.add_argument("--op", help="operator id 1..15 or name, e.g. changeName")
    x.add_argument("--seed", type=int, default=0)
    x.add_argument("--all", action="store_true", help="apply operators 1..15 in order")
    x.set_defaults(fn=cmd_transform)

    r = sub.add_parser("report", help="print a JSON report as a table")
    r.add_argument("report")
    r.set_defaults(fn=cmd_report)

    ex = sub.add_parser("run-experiment", help="run the full pipeline from a config file")
    ex.add_argument("config", nargs="?")
    ex.add_argument("--out", default=None)
    ex.add_argument("--seed", type=int, default=None)
    ex.add_argument("--strategy", choices=exp.STRATEGIES, default=None)
    ex.add_argument("--set", action="append", metavar="KEY=VALUE",
                    help="override any config field, e.g. adaptation.max_iter=5")
    ex.set_defaults(fn=cmd_run_experiment)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except (FormatError, DimensionError, LengthMismatch, LexError, ParseError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return DATA_ERROR


if __name__ == "__main__":
    sys.exit(main())
