import random
import shutil
import subprocess

import pytest

from codeadapt.interp import RUNTIME_ERROR, STEP_LIMIT, TERMINATED, equivalent, execute
from codeadapt.lang import parse_source
from codeadapt.model.corpus import generate_program

from conftest import SAMPLE, VECTORS


def run(src, entry="main", args=(), limit=100_000):
    return execute(parse_source(src), entry, args, limit)


def test_sum_loop():
    r = run("int main() { int s = 0; for (int i = 0; i < 5; i++) { s += i; } return s; }")
    assert (r.stdout, r.return_value, r.halted) == ("", 10, TERMINATED)


def test_infinite_loop_hits_limit():
    r = run("int main() { while (1) { } return 0; }", limit=1000)
    assert r.halted == STEP_LIMIT
    assert r.steps <= 1000


def test_printf_d():
    assert run('int main() { printf("%d", 7); return 0; }').stdout == "7"


def test_printf_formats():
    r = run('int main() { printf("%ld|%s|%c|%%\\n", 5, "ab", 65); return 0; }')
    assert r.stdout == "5|ab|A|%\n"


def test_division_by_zero_is_runtime_error():
    r = run("int main() { int z = 0; return 4 / z; }")
    assert r.halted == RUNTIME_ERROR and r.return_value is None


def test_uninitialized_read_is_runtime_error():
    assert run("int main() { int x; return x + 1; }").halted == RUNTIME_ERROR


def test_opaque_on_executed_path_is_runtime_error():
    assert run("int main() { int y[3]; return 0; }").halted == RUNTIME_ERROR


def test_wraps_to_64_bits():
    r = run("int main() { long x = 9223372036854775807; x = x + 1; return x < 0; }")
    assert r.return_value == 1


def test_c_division_truncates_toward_zero():
    r = run("int main() { return (-7 / 2) * 10 + (-7 % 2); }")
    assert r.return_value == -31


def test_entry_arguments_and_determinism():
    ast = parse_source(SAMPLE)
    a = execute(ast, "solve", (4, 5))
    assert a == execute(ast, "solve", (4, 5))
    assert a.halted == TERMINATED and a.stdout.endswith("0 3\n") and a.return_value == 3


def test_equivalent_reflexive_and_unary_rewrite():
    a = parse_source("int f(int n, int m) { int s = 0; int i = 0; while (i < n) { s += m; i++; } return s; }")
    b = parse_source("int f(int n, int m) { int s = 0; int i = 0; while (i < n) { s += m; i = i + 1; } return s; }")
    vectors = [(random.Random(k).randint(-5, 20), k) for k in range(50)]
    assert equivalent(a, a, vectors, "f")
    assert equivalent(a, b, vectors, "f")
    assert equivalent(b, a, vectors, "f")


def test_not_equivalent_gives_witness():
    a = parse_source("int f(int x) { return x; }")
    b = parse_source("int f(int x) { return x + 1; }")
    res = equivalent(a, b, [(3,), (4,)], "f")
    assert not res and res.witness == (3,)


def test_stdout_exemption():
    a = parse_source('int f(int x) { printf("hi\\n"); return x; }')
    b = parse_source("int f(int x) { return x; }")
    assert not equivalent(a, b, [(1,)], "f")
    assert equivalent(a, b, [(1,)], "f", compare_stdout=False)


def test_both_at_step_limit_count_as_equal():
    a = parse_source("int f(int x) { while (1) { x++; } return x; }")
    b = parse_source("int f(int x) { for (;;) { x = x + 1; } return x; }")
    c = parse_source("int f(int x) { return x; }")
    assert equivalent(a, b, [(0,)], "f", step_limit=500)
    assert not equivalent(a, c, [(0,)], "f", step_limit=500)


GCC = shutil.which("gcc") or shutil.which("cc")


@pytest.mark.skipif(GCC is None, reason="no C compiler available")
def test_agrees_with_a_c_compiler(tmp_path):
    """Generated programs (the defect-free and wrong-output kinds, which
    always terminate without faults) behave identically when compiled."""
    rng = random.Random(2024)
    vectors = VECTORS[:8]
    for idx in range(6):
        src = generate_program(rng, idx % 2, idx % 3 == 0)
        calls = "".join(f'    printf("=%d\\n", solve({n}, {m}));\n' for n, m in vectors)
        c_src = "#include <stdio.h>\n" + src + "\nint main(void) {\n" + calls + "    return 0;\n}\n"
        path = tmp_path / f"p{idx}.c"
        path.write_text(c_src)
        exe = tmp_path / f"p{idx}"
        subprocess.run([GCC, "-w", "-O0", "-o", str(exe), str(path)], check=True)
        native = subprocess.run([str(exe)], capture_output=True, text=True, check=True).stdout
        ast = parse_source(src)
        ours = ""
        for n, m in vectors:
            r = execute(ast, "solve", (n, m))
            assert r.halted == TERMINATED
            ours += r.stdout + f"={r.return_value}\n"
        assert ours == native
