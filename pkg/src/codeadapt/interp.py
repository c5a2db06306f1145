"""Reference interpreter for the C subset.

The tree is compiled once into nested Python closures; each run then only
pays for closure calls. Integers are 64-bit two's complement. Errors never
escape :func:`execute`: they end up in :attr:`ExecResult.halted`, which keeps
differential comparison total.
"""
from __future__ import annotations

import sys
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from .lang.nodes import (
    Assign, Ast, Binary, Break, Call, Comment, Compound, Conditional,
    Continue, Declaration, DoWhile, Expr, ExprStmt, For, FunctionDef, Ident,
    If, IntLit, Opaque, Postfix, Return, StrLit, Stmt, Switch, Unary, While,
    string_literal_value,
)

DEFAULT_STEP_LIMIT = 100_000
MAX_CALL_DEPTH = 100

TERMINATED = "terminated"
STEP_LIMIT = "step-limit-hit"
RUNTIME_ERROR = "runtime-error"

_MASK = (1 << 64) - 1
_SIGN = 1 << 63
_BREAK, _CONTINUE, _RETURN = 1, 2, 3


def wrap(v: int) -> int:
    v &= _MASK
    return v - (1 << 64) if v & _SIGN else v


@dataclass(frozen=True)
class ExecResult:
    stdout: str
    return_value: Optional[int]
    steps: int
    halted: str
    error: Optional[str] = None

    def observable(self, with_stdout: bool = True) -> tuple:
        return (self.stdout if with_stdout else None, self.return_value, self.halted)


class Fault(Exception):
    """A runtime error inside the interpreted program."""


class _StepLimit(Exception):
    pass


class _Ctx:
    __slots__ = ("steps", "limit", "out", "depth", "globals", "retval")

    def __init__(self, limit: int, nglobals: int):
        self.steps = 0
        self.limit = limit
        self.out: list[str] = []
        self.depth = 0
        self.globals: list = [0] * nglobals
        self.retval = None


def _tick(ctx: _Ctx) -> None:
    ctx.steps += 1
    if ctx.steps > ctx.limit:
        ctx.steps = ctx.limit
        raise _StepLimit()


def _div(a: int, b: int) -> int:
    if b == 0:
        raise Fault("division by zero")
    q = abs(a) // abs(b)
    return wrap(q if (a < 0) == (b < 0) else -q)


def _mod(a: int, b: int) -> int:
    if b == 0:
        raise Fault("division by zero")
    q = abs(a) // abs(b)
    q = q if (a < 0) == (b < 0) else -q
    return wrap(a - b * q)


def _shl(a: int, b: int) -> int:
    if not 0 <= b < 64:
        raise Fault("shift count out of range")
    return wrap(a << b)


def _shr(a: int, b: int) -> int:
    if not 0 <= b < 64:
        raise Fault("shift count out of range")
    return a >> b


_ARITH = {
    "+": lambda a, b: wrap(a + b),
    "-": lambda a, b: wrap(a - b),
    "*": lambda a, b: wrap(a * b),
    "/": _div,
    "%": _mod,
    "<<": _shl,
    ">>": _shr,
    "&": lambda a, b: a & b,
    "|": lambda a, b: a | b,
    "^": lambda a, b: a ^ b,
    "<": lambda a, b: int(a < b),
    ">": lambda a, b: int(a > b),
    "<=": lambda a, b: int(a <= b),
    ">=": lambda a, b: int(a >= b),
    "==": lambda a, b: int(a == b),
    "!=": lambda a, b: int(a != b),
}


def format_printf(fmt: str, args: Sequence) -> str:
    """Render a printf call supporting %d %i %u %x %o %c %s and %%."""
    out = []
    i = 0
    argi = 0
    n = len(fmt)
    while i < n:
        ch = fmt[i]
        if ch != "%":
            out.append(ch)
            i += 1
            continue
        j = i + 1
        while j < n and fmt[j] in "-+ 0#":
            j += 1
        while j < n and fmt[j].isdigit():
            j += 1
        if j < n and fmt[j] == ".":
            j += 1
            while j < n and fmt[j].isdigit():
                j += 1
        spec_head = fmt[i:j]
        while j < n and fmt[j] in "hlz":
            j += 1
        if j >= n:
            raise Fault("truncated format directive")
        conv = fmt[j]
        length = fmt[len(spec_head) + i:j]
        i = j + 1
        if conv == "%":
            out.append("%")
            continue
        if argi >= len(args):
            raise Fault("too few printf arguments")
        arg = args[argi]
        argi += 1
        if conv == "s":
            if not isinstance(arg, str):
                raise Fault("%s expects a string literal")
            out.append((spec_head + "s") % arg)
            continue
        if isinstance(arg, str):
            raise Fault(f"%{conv} expects an integer")
        if conv in "di":
            out.append((spec_head + "d") % arg)
        elif conv in "uxXo":
            bits = 64 if "l" in length or "z" in length else 32
            out.append((spec_head + conv.replace("u", "d")) % (arg & ((1 << bits) - 1)))
        elif conv == "c":
            out.append(chr(arg & 0xFF))
        else:
            raise Fault(f"unsupported conversion %{conv}")
    return "".join(out)


class _Function:
    __slots__ = ("name", "nparams", "nslots", "body", "returns_value", "is_main")

    def __init__(self, fdef: FunctionDef):
        self.name = fdef.name
        self.nparams = len(fdef.params)
        self.nslots = 0
        self.body = None
        self.returns_value = fdef.ret_type != "void"
        self.is_main = fdef.name == "main"


class Program:
    """A compiled translation unit, reusable across many runs."""

    def __init__(self, ast: Ast):
        self.functions: dict[str, _Function] = {}
        self.global_slots: dict[str, int] = {}
        self.global_inits: list[tuple[int, Optional[Callable]]] = []
        self.compile_error: Optional[str] = None
        items = ast.root.items
        for item in items:
            if isinstance(item, FunctionDef):
                self.functions.setdefault(item.name, _Function(item))
        try:
            for item in items:
                if isinstance(item, Declaration):
                    for d in item.declarators:
                        slot = len(self.global_slots)
                        self.global_slots[d.name] = slot
                        init = None if d.init is None else _Compiler(self, None).expr(d.init)
                        self.global_inits.append((slot, init))
                elif isinstance(item, FunctionDef):
                    fn = self.functions[item.name]
                    if fn.body is None:
                        comp = _Compiler(self, fn)
                        comp.push()
                        for p in item.params:
                            comp.declare(p.name)
                        fn.body = comp.block(item.body.items, new_scope=False)
                        fn.nslots = comp.nslots
        except RecursionError:
            self.compile_error = "program too deeply nested"

    def run(self, entry: str, args: Sequence[int], step_limit: int = DEFAULT_STEP_LIMIT) -> ExecResult:
        ctx = _Ctx(step_limit, len(self.global_slots))
        old_limit = sys.getrecursionlimit()
        if old_limit < 20000:
            sys.setrecursionlimit(20000)
        try:
            if self.compile_error:
                raise Fault(self.compile_error)
            for slot, init in self.global_inits:
                if init is not None:
                    ctx.globals[slot] = init(None, ctx)
            fn = self.functions.get(entry)
            if fn is None:
                raise Fault(f"no function named {entry!r}")
            if len(args) != fn.nparams:
                raise Fault(f"{entry} expects {fn.nparams} arguments")
            value = _invoke(fn, [wrap(int(a)) for a in args], ctx)
            if fn.returns_value and value is None:
                if fn.is_main:
                    value = 0
                else:
                    raise Fault(f"{entry} finished without returning a value")
            return ExecResult("".join(ctx.out), value if fn.returns_value else None, ctx.steps, TERMINATED)
        except _StepLimit:
            return ExecResult("".join(ctx.out), None, ctx.steps, STEP_LIMIT)
        except Fault as exc:
            return ExecResult("".join(ctx.out), None, ctx.steps, RUNTIME_ERROR, str(exc))
        except RecursionError:
            return ExecResult("".join(ctx.out), None, ctx.steps, RUNTIME_ERROR, "recursion too deep")
        finally:
            if old_limit < 20000:
                sys.setrecursionlimit(old_limit)


def _invoke(fn: _Function, args: list, ctx: _Ctx):
    if fn.body is None:
        raise Fault(f"function {fn.name} has no body")
    _tick(ctx)
    if ctx.depth >= MAX_CALL_DEPTH:
        raise Fault("call depth exceeded")
    frame = [None] * fn.nslots
    frame[:len(args)] = args
    ctx.depth += 1
    ctx.retval = None
    signal = fn.body(frame, ctx)
    ctx.depth -= 1
    if signal == _RETURN:
        value = ctx.retval
        ctx.retval = None
        return value
    if signal in (_BREAK, _CONTINUE):
        raise Fault("break or continue outside a loop")
    return None


class _Compiler:
    def __init__(self, program: Program, fn: Optional[_Function]):
        self.program = program
        self.fn = fn
        self.scopes: list[dict[str, int]] = []
        self.nslots = 0

    # -- scopes ---------------------------------------------------------

    def push(self) -> None:
        self.scopes.append({})

    def pop(self) -> None:
        self.scopes.pop()

    def declare(self, name: str) -> int:
        slot = self.nslots
        self.nslots += 1
        self.scopes[-1][name] = slot
        return slot

    def lookup(self, name: str):
        for scope in reversed(self.scopes):
            if name in scope:
                return ("L", scope[name])
        if name in self.program.global_slots:
            return ("G", self.program.global_slots[name])
        return None

    # -- statements -----------------------------------------------------

    def block(self, items: Sequence[Stmt], new_scope: bool = True):
        if new_scope:
            self.push()
        parts = [self.stmt(s) for s in items if not isinstance(s, Comment)]
        if new_scope:
            self.pop()
        parts = tuple(p for p in parts if p is not None)
        if len(parts) == 1:
            return parts[0]

        def run_block(frame, ctx, parts=parts):
            for part in parts:
                sig = part(frame, ctx)
                if sig:
                    return sig
            return None
        return run_block

    def stmt(self, s: Stmt):
        if isinstance(s, Compound):
            return self.block(s.items)
        if isinstance(s, ExprStmt):
            if s.expr is None:
                def empty(frame, ctx):
                    _tick(ctx)
                return empty
            ev = self.expr(s.expr, discard=True)

            def run_expr(frame, ctx):
                _tick(ctx)
                ev(frame, ctx)
            return run_expr
        if isinstance(s, Declaration):
            return self.declaration(s)
        if isinstance(s, If):
            return self.if_stmt(s)
        if isinstance(s, While):
            return self.while_stmt(s)
        if isinstance(s, DoWhile):
            return self.do_stmt(s)
        if isinstance(s, For):
            return self.for_stmt(s)
        if isinstance(s, Switch):
            return self.switch_stmt(s)
        if isinstance(s, Return):
            return self.return_stmt(s)
        if isinstance(s, Break):
            def run_break(frame, ctx):
                _tick(ctx)
                return _BREAK
            return run_break
        if isinstance(s, Continue):
            def run_continue(frame, ctx):
                _tick(ctx)
                return _CONTINUE
            return run_continue
        if isinstance(s, Opaque):
            text = s.text

            def run_opaque(frame, ctx):
                raise Fault(f"cannot execute unsupported code: {text[:40]!r}")
            return run_opaque
        raise TypeError(f"unknown statement {s!r}")

    def declaration(self, d: Declaration):
        steps = []
        for decl in d.declarators:
            # C puts the name in scope before its own initializer
            slot = self.declare(decl.name)
            init = None if decl.init is None else self.expr(decl.init)
            steps.append((slot, init))
        steps = tuple(steps)

        def run_decl(frame, ctx):
            _tick(ctx)
            for slot, init in steps:
                frame[slot] = None
                if init is not None:
                    frame[slot] = init(frame, ctx)
        return run_decl

    def if_stmt(self, s: If):
        cond = self.expr(s.cond)
        then = self.scoped(s.then)
        orelse = self.scoped(s.orelse) if s.orelse is not None else None

        def run_if(frame, ctx):
            _tick(ctx)
            if cond(frame, ctx):
                return then(frame, ctx)
            if orelse is not None:
                return orelse(frame, ctx)
            return None
        return run_if

    def scoped(self, s: Stmt):
        # a lone sub-statement is its own scope in C
        self.push()
        out = self.stmt(s)
        self.pop()
        return out if out is not None else (lambda frame, ctx: None)

    def while_stmt(self, s: While):
        cond = self.expr(s.cond)
        body = self.scoped(s.body)

        def run_while(frame, ctx):
            while True:
                _tick(ctx)
                if not cond(frame, ctx):
                    return None
                sig = body(frame, ctx)
                if sig == _BREAK:
                    return None
                if sig == _RETURN:
                    return sig
        return run_while

    def do_stmt(self, s: DoWhile):
        cond = self.expr(s.cond)
        body = self.scoped(s.body)

        def run_do(frame, ctx):
            while True:
                _tick(ctx)
                sig = body(frame, ctx)
                if sig == _BREAK:
                    return None
                if sig == _RETURN:
                    return sig
                if not cond(frame, ctx):
                    return None
        return run_do

    def for_stmt(self, s: For):
        self.push()
        if isinstance(s.init, Declaration):
            init = self.declaration(s.init)
        elif s.init is not None:
            ev = self.expr(s.init, discard=True)

            def init(frame, ctx):
                ev(frame, ctx)
        else:
            init = None
        cond = self.expr(s.cond) if s.cond is not None else None
        step = self.expr(s.step, discard=True) if s.step is not None else None
        body = self.scoped(s.body)
        self.pop()

        def run_for(frame, ctx):
            if init is not None:
                init(frame, ctx)
            while True:
                _tick(ctx)
                if cond is not None and not cond(frame, ctx):
                    return None
                sig = body(frame, ctx)
                if sig == _BREAK:
                    return None
                if sig == _RETURN:
                    return sig
                if step is not None:
                    step(frame, ctx)
        return run_for

    def switch_stmt(self, s: Switch):
        subject = self.expr(s.expr)
        self.push()
        labels = []
        bodies = []
        default_index = None
        for case in s.cases:
            for label in case.labels:
                if label is None:
                    default_index = len(bodies)
                else:
                    labels.append((self.expr(label), len(bodies)))
            bodies.append(tuple(p for p in (self.stmt(b) for b in case.body if not isinstance(b, Comment)) if p is not None))
        self.pop()
        flat = []
        starts = []
        for parts in bodies:
            starts.append(len(flat))
            flat.extend(parts)
        flat = tuple(flat)
        labels = tuple(labels)

        def run_switch(frame, ctx):
            _tick(ctx)
            value = subject(frame, ctx)
            start = None
            for label, idx in labels:
                if label(frame, ctx) == value:
                    start = starts[idx]
                    break
            if start is None:
                if default_index is None:
                    return None
                start = starts[default_index]
            for part in flat[start:]:
                sig = part(frame, ctx)
                if sig == _BREAK:
                    return None
                if sig:
                    return sig
            return None
        return run_switch

    def return_stmt(self, s: Return):
        value = self.expr(s.value) if s.value is not None else None

        def run_return(frame, ctx):
            _tick(ctx)
            ctx.retval = value(frame, ctx) if value is not None else None
            return _RETURN
        return run_return

    # -- expressions ----------------------------------------------------

    def expr(self, e: Expr, discard: bool = False):
        if isinstance(e, IntLit):
            v = wrap(e.value)
            return lambda frame, ctx: v
        if isinstance(e, Ident):
            return self.read(e.name)
        if isinstance(e, StrLit):
            def bad_string(frame, ctx):
                raise Fault("string literal used as a value")
            return bad_string
        if isinstance(e, Binary):
            return self.binary(e)
        if isinstance(e, Unary):
            return self.unary(e)
        if isinstance(e, Postfix):
            return self.incdec(e.operand.name, e.op, prefix=False)
        if isinstance(e, Assign):
            return self.assign(e)
        if isinstance(e, Conditional):
            cond, then, orelse = self.expr(e.cond), self.expr(e.then), self.expr(e.orelse)
            return lambda frame, ctx: then(frame, ctx) if cond(frame, ctx) else orelse(frame, ctx)
        if isinstance(e, Call):
            return self.call(e, discard)
        raise TypeError(f"unknown expression {e!r}")

    def read(self, name: str):
        where = self.lookup(name)
        if where is None:
            def unbound(frame, ctx):
                raise Fault(f"undeclared variable {name}")
            return unbound
        kind, slot = where
        if kind == "L":
            def read_local(frame, ctx):
                v = frame[slot]
                if v is None:
                    raise Fault(f"read of uninitialized variable {name}")
                return v
            return read_local

        def read_global(frame, ctx):
            return ctx.globals[slot]
        return read_global

    def writer(self, name: str):
        where = self.lookup(name)
        if where is None:
            def unbound(frame, ctx, v):
                raise Fault(f"undeclared variable {name}")
            return unbound
        kind, slot = where
        if kind == "L":
            def write_local(frame, ctx, v):
                frame[slot] = v
            return write_local

        def write_global(frame, ctx, v):
            ctx.globals[slot] = v
        return write_global

    def binary(self, e: Binary):
        left, right = self.expr(e.left), self.expr(e.right)
        op = e.op
        if op == "&&":
            return lambda frame, ctx: 1 if left(frame, ctx) and right(frame, ctx) else 0
        if op == "||":
            return lambda frame, ctx: 1 if left(frame, ctx) or right(frame, ctx) else 0
        if op == ",":
            def comma(frame, ctx):
                left(frame, ctx)
                return right(frame, ctx)
            return comma
        fn = _ARITH[op]

        def run_binary(frame, ctx):
            a = left(frame, ctx)
            return fn(a, right(frame, ctx))
        return run_binary

    def unary(self, e: Unary):
        if e.op in ("++", "--"):
            return self.incdec(e.operand.name, e.op, prefix=True)
        operand = self.expr(e.operand)
        if e.op == "-":
            return lambda frame, ctx: wrap(-operand(frame, ctx))
        if e.op == "+":
            return operand
        if e.op == "!":
            return lambda frame, ctx: 0 if operand(frame, ctx) else 1
        if e.op == "~":
            return lambda frame, ctx: ~operand(frame, ctx)
        raise TypeError(e.op)

    def incdec(self, name: str, op: str, prefix: bool):
        read, write = self.read(name), self.writer(name)
        delta = 1 if op == "++" else -1

        def run_incdec(frame, ctx):
            old = read(frame, ctx)
            new = wrap(old + delta)
            write(frame, ctx, new)
            return new if prefix else old
        return run_incdec

    def assign(self, e: Assign):
        name = e.target.name
        value = self.expr(e.value)
        write = self.writer(name)
        if e.op == "=":
            def run_assign(frame, ctx):
                v = value(frame, ctx)
                write(frame, ctx, v)
                return v
            return run_assign
        read = self.read(name)
        fn = _ARITH[e.op[:-1]]

        def run_compound(frame, ctx):
            old = read(frame, ctx)
            v = fn(old, value(frame, ctx))
            write(frame, ctx, v)
            return v
        return run_compound

    def call(self, e: Call, discard: bool):
        name = e.name
        if name in ("printf", "putchar", "puts") and self.lookup(name) is None and name not in self.program.functions:
            return self.builtin(e)
        args = tuple(self.expr(a) for a in e.args)
        program = self.program

        def run_call(frame, ctx):
            fn = program.functions.get(name)
            if fn is None:
                raise Fault(f"call to unknown function {name}")
            values = [a(frame, ctx) for a in args]
            if len(values) != fn.nparams:
                raise Fault(f"{name} expects {fn.nparams} arguments")
            result = _invoke(fn, values, ctx)
            if result is None and not discard:
                raise Fault(f"value of {name}() used but none returned")
            return result
        return run_call

    def builtin(self, e: Call):
        name = e.name
        args = []
        for a in e.args:
            if isinstance(a, StrLit):
                text = string_literal_value(a.text)
                args.append(lambda frame, ctx, text=text: text)
            else:
                args.append(self.expr(a))
        args = tuple(args)

        def run_builtin(frame, ctx):
            values = [a(frame, ctx) for a in args]
            if name == "printf":
                if not values or not isinstance(values[0], str):
                    raise Fault("printf needs a literal format string")
                text = format_printf(values[0], values[1:])
            elif name == "putchar":
                if len(values) != 1 or isinstance(values[0], str):
                    raise Fault("putchar expects one integer")
                text = chr(values[0] & 0xFF)
            else:
                if len(values) != 1 or not isinstance(values[0], str):
                    raise Fault("puts expects one string literal")
                text = values[0] + "\n"
            ctx.out.append(text)
            return len(text)
        return run_builtin


def compile_program(ast: Ast) -> Program:
    return Program(ast)


def execute(ast: Ast, entry: str = "main", args: Sequence[int] = (),
            step_limit: int = DEFAULT_STEP_LIMIT) -> ExecResult:
    return compile_program(ast).run(entry, args, step_limit)


@dataclass(frozen=True)
class Equivalence:
    equal: bool
    witness: Optional[tuple] = None
    left: Optional[ExecResult] = None
    right: Optional[ExecResult] = None

    def __bool__(self) -> bool:
        return self.equal


def same_behaviour(a: ExecResult, b: ExecResult, compare_stdout: bool = True) -> bool:
    if a.halted != b.halted:
        return False
    if a.halted == STEP_LIMIT:
        if not compare_stdout:
            return True
        # runs cut off by the limit only need a consistent output prefix
        return a.stdout.startswith(b.stdout) or b.stdout.startswith(a.stdout)
    if compare_stdout and a.stdout != b.stdout:
        return False
    return a.return_value == b.return_value


def equivalent(a: Ast, b: Ast, test_vectors: Sequence[Sequence[int]], entry: str = "main",
               step_limit: int = DEFAULT_STEP_LIMIT, compare_stdout: bool = True) -> Equivalence:
    """Differential check of two programs over ``test_vectors``.

    Returns a falsy :class:`Equivalence` carrying the first distinguishing
    vector when the observable behaviour differs.
    """
    pa = compile_program(a)
    pb = pa if b is a else compile_program(b)
    ra = rb = None
    for vec in test_vectors:
        ra = pa.run(entry, vec, step_limit)
        rb = pb.run(entry, vec, step_limit)
        if not same_behaviour(ra, rb, compare_stdout):
            return Equivalence(False, tuple(vec), ra, rb)
    return Equivalence(True, None, ra, rb)
