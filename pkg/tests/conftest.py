import random

import pytest

from codeadapt.model.corpus import GeneratorConfig, augment, generate_corpus
from codeadapt.model.mlp import TrainConfig, train
from codeadapt.validation.dsmg import build_submodels

SAMPLE = """\
int helper(int a, int b) {
    int r = a * 2;
    if (b > 2) {
        r -= b;
    } else if (b == 1) {
        r += 1;
    } else {
        r = r + 3;
    }
    return r;
}

int solve(int n, int m) {
    int total = 0;
    int c = 0;
    int k = 3;
    // main loop
    for (int i = 0; i < n; i++) {
        total += helper(i, m);
        if (i == 2) {
            continue;
        }
        c++;
    }
    int j = m;
    while (j > 0) {
        total = total + j % 3;
        j--;
    }
    do {
        k -= 1;
        printf("tick\\n");
    } while (k > 0);
    switch (m % 3) {
        case 0:
            total += 4;
            break;
        case 1:
            total -= 1;
        default:
            total += 2;
    }
    printf("%d %d\\n", total, c);
    return total + c;
}
"""

VECTORS = [(n, m) for n in range(-2, 8) for m in range(-2, 8)][::3]


def random_vectors(count, seed, lo=-3, hi=9):
    rng = random.Random(seed)
    return [(rng.randint(lo, hi), rng.randint(lo, hi)) for _ in range(count)]


@pytest.fixture(scope="session")
def small_splits():
    train_units = augment(generate_corpus(GeneratorConfig(4, 300, seed=11, compact_fraction=0.05)),
                          1, seed=5)
    val = generate_corpus(GeneratorConfig(4, 300, seed=12, id_prefix="v"))
    test = generate_corpus(GeneratorConfig(4, 200, seed=13, id_prefix="t"))
    return train_units, val, test


@pytest.fixture(scope="session")
def small_model(small_splits):
    return train(small_splits[0], TrainConfig(epochs=10), num_classes=4)


@pytest.fixture(scope="session")
def small_bundle(small_model, small_splits):
    return build_submodels(small_model, small_splits[1])


# acceptance criteria register here; the summary hook prints one line each
CRITERIA: dict[int, tuple[str, bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(CRITERIA):
        name, ok, detail = CRITERIA[num]
        line = f"criterion {num:>2} {'PASS' if ok else 'FAIL'}  {name}"
        terminalreporter.write_line(line + (f"  ({detail})" if detail else ""))
