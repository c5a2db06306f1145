"""Synthetic labeled C-subset programs.

Every program defines ``int solve(int n, int m)``. A defect pattern may be
injected; the label records which one, following a four-way scheme: no
defect, wrong output, timeout, runtime error. The two-class variant merges
the three defect kinds into label 1.

Programs are written in one of two surface styles. The *compact* style uses
for/do loops, ``++``, compound assignment, initialized declarations, switch
statements, comments and debug prints; the *verbose* style spells the same
constructs out with while loops, explicit assignments and if-chains. Mixing
the styles differently in the training and test splits gives a controlled
source of inputs that look unlike the training data.

Decoys keep the task from being solvable by a single token: correct programs
also use ``<=`` bounds, descending inner loops and divisions, just arranged
so that nothing goes wrong.

:func:`augment` adds refactored copies of programs (random operator
subsets). Training on those makes renaming, constant spelling and dead code
familiar to the model, so the style idioms remain the main thing it has not
seen.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Optional

from ..errors import ConfigError
from ..units import SourceUnit

NO_DEFECT, WRONG_OUTPUT, TIMEOUT, RUNTIME_ERROR = 0, 1, 2, 3
LABEL_NAMES = {NO_DEFECT: "no defect", WRONG_OUTPUT: "wrong output",
               TIMEOUT: "timeout", RUNTIME_ERROR: "runtime error"}
ENTRY = "solve"

_ACC = ["total", "sum", "acc", "result", "score", "value", "out", "agg"]
_OUTER = ["i", "k", "idx", "p", "pos"]
_INNER = ["j", "q", "t", "r", "s"]
_TMP = ["tmp", "x", "delta", "w", "cur", "part"]
_HELPERS = ["mix", "scale", "combine", "adjust", "blend", "weigh"]
_COMMENTS = ["// accumulate the running total", "// walk the input range",
             "// TODO: check the bounds", "// inner pass", "/* main loop */",
             "// adjust for the remainder"]
_DEBUG = ['printf("checkpoint\\n");', 'printf("entering loop\\n");',
          'printf("debug: here\\n");', 'printf("done\\n");']


@dataclass(frozen=True)
class GeneratorConfig:
    num_classes: int = 4
    samples: int = 1000
    seed: int = 0
    compact_fraction: float = 0.5
    id_prefix: str = "p"

    def __post_init__(self):
        if self.num_classes not in (2, 4):
            raise ConfigError("must be 2 or 4", "num_classes")
        if self.samples < 0:
            raise ConfigError("must be non-negative", "samples")
        if not 0.0 <= self.compact_fraction <= 1.0:
            raise ConfigError("must be in [0, 1]", "compact_fraction")


class _Writer:
    def __init__(self, rng: random.Random, compact: bool):
        self.rng = rng
        self.compact = compact
        self.lines: list[str] = []
        self.depth = 0

    def emit(self, line: str) -> None:
        self.lines.append("    " * self.depth + line)

    def open(self, header: str) -> None:
        self.emit(header + " {")
        self.depth += 1

    def reopen(self, header: str) -> None:
        self.depth -= 1
        self.emit("} " + header + " {")
        self.depth += 1

    def close(self, tail: str = "}") -> None:
        self.depth -= 1
        self.emit(tail)

    def maybe(self, p: float) -> bool:
        return self.rng.random() < p

    # style-dependent primitives

    def declare(self, name: str, init: str) -> None:
        if self.compact:
            self.emit(f"int {name} = {init};")
        else:
            self.emit(f"int {name};")
            self.emit(f"{name} = {init};")

    def bump(self, name: str, op: str, amount: str) -> None:
        if self.compact:
            if amount == "1" and op in "+-":
                self.emit(f"{name}{op}{op};" if self.maybe(0.7) else f"{op}{op}{name};")
            else:
                self.emit(f"{name} {op}= {amount};")
        else:
            self.emit(f"{name} = {name} {op} {amount};")

    def noise(self) -> None:
        if self.compact and self.maybe(0.3):
            self.emit(self.rng.choice(_COMMENTS))
        if self.compact and self.maybe(0.15):
            self.emit(self.rng.choice(_DEBUG))


def _branch(w: _Writer, var: str, acc: str, tmp: str) -> None:
    """Three-way dispatch on ``var % 3``."""
    c = [w.rng.randint(1, 5) for _ in range(3)]
    if w.compact:
        w.open(f"switch ({var} % 3)")
        w.emit("case 0:")
        w.depth += 1
        w.bump(acc, "+", f"{var} * {c[0]}")
        w.emit("break;")
        w.depth -= 1
        w.emit("case 1:")
        w.depth += 1
        w.bump(tmp, "+", str(c[1]))
        w.emit("break;")
        w.depth -= 1
        w.emit("default:")
        w.depth += 1
        w.bump(acc, "-", str(c[2]))
        w.depth -= 1
        w.close()
    else:
        w.open(f"if ({var} % 3 == 0)")
        w.bump(acc, "+", f"{var} * {c[0]}")
        w.reopen(f"else if ({var} % 3 == 1)")
        w.bump(tmp, "+", str(c[1]))
        w.reopen("else")
        w.bump(acc, "-", str(c[2]))
        w.close()


def _inner_loop(w: _Writer, j: str, acc: str, defect: int) -> None:
    """A loop over ``j`` bounded by ``m``; the timeout defect breaks its update."""
    descending = defect != TIMEOUT and w.maybe(0.4)
    c = w.rng.randint(1, 4)
    if descending:
        start, cond, op = "m", f"{j} > 0", "-"
    else:
        start, cond = "0", f"{j} < m"
        op = "-" if defect == TIMEOUT else "+"
    missing = defect == TIMEOUT and not w.compact and w.maybe(0.5)
    if w.compact:
        step = f"{j}{op}{op}" if w.maybe(0.7) else f"{j} {op}= 1"
        w.open(f"for ({j} = {start}; {cond}; {step})")
        w.bump(acc, "+", f"{j} % {c + 1}")
        w.close()
    else:
        w.emit(f"{j} = {start};")
        w.open(f"while ({cond})")
        w.bump(acc, "+", f"{j} % {c + 1}")
        if not missing:
            w.bump(j, op, "1")
        w.close()


def _division(w: _Writer, i: str, acc: str, defect: int, skip: Optional[int] = None) -> None:
    """``skip`` is an iteration the loop jumps over; the defect must not hide there."""
    c = w.rng.randint(2, 4)
    if defect == RUNTIME_ERROR and c == skip:
        c = 3 if skip == 2 else 2
    if defect == RUNTIME_ERROR:
        denom = f"{i} - {c}" if w.maybe(0.7) else f"{c} - {i}"
    else:
        denom = f"{i} + {c}" if w.maybe(0.7) else str(c)
    w.bump(acc, "+", f"{c * 10} / ({denom})")


def _program(rng: random.Random, label: int, compact: bool) -> str:
    w = _Writer(rng, compact)
    acc, i, j, tmp = rng.choice(_ACC), rng.choice(_OUTER), rng.choice(_INNER), rng.choice(_TMP)
    helper = rng.choice(_HELPERS) if rng.random() < 0.5 else None
    if helper:
        hk = rng.randint(2, 5)
        w.open(f"int {helper}(int a, int b)")
        w.declare("r", f"a * {hk}")
        w.open("if (b > 2)")
        w.bump("r", "-", "b")
        w.close()
        w.emit("return r;")
        w.close()
        w.emit("")

    w.open(f"int {ENTRY}(int n, int m)")
    w.declare(acc, "0")
    w.declare(tmp, str(rng.randint(0, 3)))
    w.emit(f"int {i}, {j};")
    w.noise()

    # bound style: (start, comparison, limit); off-by-one pairs are defects
    if label == WRONG_OUTPUT:
        start, cmp_, limit = rng.choice([("0", "<=", "n"), ("1", "<", "n")])
    else:
        start, cmp_, limit = rng.choice([("0", "<", "n"), ("1", "<=", "n"), ("0", "<=", "n - 1")])
    cond = f"{i} {cmp_} {limit}"
    use_do = compact and rng.random() < 0.25
    use_continue = compact and not use_do and rng.random() < 0.3

    if compact and use_do:
        w.emit(f"{i} = {start};")
        w.open(f"if ({cond})")
        w.open("do")
    elif compact:
        w.open(f"for ({i} = {start}; {cond}; {i}++)")
    else:
        w.emit(f"{i} = {start};")
        w.open(f"while ({cond})")

    skip = None
    if use_continue:
        skip = rng.randint(2, 6)
        w.open(f"if ({i} == {skip})")
        w.emit("continue;")
        w.close()
    parts = ["branch", "inner", "div", "helper"]
    rng.shuffle(parts)
    for part in parts:
        if part == "branch" and rng.random() < 0.6:
            _branch(w, i, acc, tmp)
        elif part == "inner" and (label == TIMEOUT or rng.random() < 0.5):
            _inner_loop(w, j, acc, label)
        elif part == "div" and (label == RUNTIME_ERROR or rng.random() < 0.5):
            _division(w, i, acc, label, skip)
        elif part == "helper" and helper:
            w.bump(acc, "+", f"{helper}({i}, m)")
    w.bump(acc, "+", tmp if rng.random() < 0.5 else i)
    w.noise()

    if compact and use_do:
        w.bump(i, "+", "1")
        w.close(f"}} while ({cond});")
        w.close()
    elif compact:
        w.close()
    else:
        w.bump(i, "+", "1")
        w.close()

    if rng.random() < 0.5:
        w.emit(f'printf("%d\\n", {acc});')
    w.emit(f"return {acc};")
    w.close()
    return "\n".join(w.lines) + "\n"


def generate_program(rng: random.Random, label: int, compact: bool) -> str:
    return _program(rng, label, compact)


def generate_corpus(cfg: GeneratorConfig) -> list[SourceUnit]:
    """``cfg.samples`` programs with labels spread evenly over the defect kinds."""
    rng = random.Random(cfg.seed)
    units = []
    width = len(str(max(cfg.samples - 1, 0)))
    for idx in range(cfg.samples):
        kind = idx % 4 if cfg.num_classes == 4 else (0 if idx % 2 == 0 else rng.choice([1, 2, 3]))
        compact = rng.random() < cfg.compact_fraction
        code = _program(rng, kind, compact)
        label = kind if cfg.num_classes == 4 else int(kind != NO_DEFECT)
        units.append(SourceUnit.from_code(f"{cfg.id_prefix}{idx:0{width}d}", code, label))
    rng.shuffle(units)
    return units


def augment(units: list[SourceUnit], copies: int = 1, seed: int = 0) -> list[SourceUnit]:
    """``units`` followed by ``copies`` refactored variants of each.

    Every variant applies a random non-empty subset of the operators in
    random order. Labels carry over since the operators preserve behaviour.
    """
    from ..transforms import TransformOp, apply_sequence

    rng = random.Random(seed)
    extra = []
    for unit in units:
        for c in range(copies):
            ops = rng.sample(range(1, 16), rng.randint(1, 15))
            ast, _ = apply_sequence(unit.ast, [TransformOp(o, rng.getrandbits(32)) for o in ops],
                                    with_hashes=False)
            extra.append(SourceUnit(f"{unit.id}~{c}", ast, unit.label))
    return list(units) + extra
