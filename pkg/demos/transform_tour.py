"""Walk one C program through every transformation operator.

For each operator the script prints how many sites it found, a unified diff
of the rewrite, and whether the interpreter sees the same behaviour on a grid
of inputs.

    python3 demos/transform_tour.py
"""
import difflib

from codeadapt.interp import equivalent
from codeadapt.lang import parse_source, print_ast
from codeadapt.transforms import TransformOp, apply

SOURCE = """\
int solve(int n, int m) {
    // count multiples, skipping one value
    int total = 0;
    int k = 3;
    for (int i = 0; i < n; i++) {
        if (i == 2) continue;
        if (i % k == 0) total += m;
        else if (i > m) total--;
        else total = total + 1;
    }
    switch (m) {
    case 1:
        total++;
    case 2:
        total += 2;
        break;
    default:
        printf("debug\\n");
    }
    while (total > 100) total -= 7;
    do total++; while (total < 0);
    printf("%d\\n", total);
    return total;
}
"""

VECTORS = [(n, m) for n in range(-1, 9) for m in range(-1, 6)]


def main():
    ast = parse_source(SOURCE)
    original = print_ast(ast)
    for op in range(1, 16):
        new, rec = apply(ast, TransformOp(op, rng_seed=1))
        same = equivalent(ast, new, VECTORS, "solve", compare_stdout=op != 15)
        print(f"== op {op:>2} {rec.op.name}: {rec.sites_found} site(s), "
              f"{'equivalent' if same else 'DIFFERENT'} on {len(VECTORS)} inputs")
        diff = difflib.unified_diff(original.splitlines(), print_ast(new).splitlines(),
                                    lineterm="", n=0)
        for line in list(diff)[2:]:
            print("   " + line)
    print()
    print("op 15 drops debug prints, so stdout is excluded from its comparison.")


if __name__ == "__main__":
    main()
