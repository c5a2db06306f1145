"""Train a small classifier, flag risky inputs and rewrite them.

The training set is written almost entirely in one formatting style, the test
set mixes two, so the model meets unfamiliar surface forms at test time. The
sub-model validity score flags inputs it is likely to get wrong, and the
evolutionary search rewrites those with semantics-preserving operators until
the score clears the threshold.

    python3 demos/validate_and_adapt.py
"""
import numpy as np

from codeadapt.adapt import AesConfig, adapt_corpus
from codeadapt.harness.metrics import compute_auc, correction_metrics
from codeadapt.model.corpus import GeneratorConfig, augment, generate_corpus
from codeadapt.model.features import labels_of
from codeadapt.model.mlp import TrainConfig, train
from codeadapt.validation.dsmg import build_submodels, default_threshold, score_inputs

LABELS = ["no defect", "wrong output", "timeout", "runtime error"]


def main():
    train_units = augment(generate_corpus(GeneratorConfig(4, 600, seed=1, compact_fraction=0.02,
                                                          id_prefix="tr-")), copies=1)
    val_units = generate_corpus(GeneratorConfig(4, 600, seed=2, id_prefix="va-"))
    test_units = generate_corpus(GeneratorConfig(4, 600, seed=3, id_prefix="te-"))

    model = train(train_units, TrainConfig(epochs=20), num_classes=4)
    bundle = build_submodels(model, val_units)
    print(f"model: {model.num_layers} hidden layers; bundle: {len(bundle.submodels)} sub-models")

    X = model.encode(test_units)
    y = labels_of(test_units)
    pred, _, score = score_inputs(model, bundle, X)
    softmax_max = model.predict(X).max(axis=1)
    correct = (pred == y).astype(int)
    print(f"test accuracy {correct.mean():.3f}")
    print(f"AUC validity score {compute_auc(score, correct):.3f}, "
          f"max softmax {compute_auc(softmax_max, correct):.3f}")

    threshold = default_threshold(4)
    flagged = score <= threshold
    print(f"{flagged.sum()} of {len(test_units)} inputs flagged at threshold {threshold}")

    oos = [u.id for u, f in zip(test_units, flagged) if f]
    adapted, results = adapt_corpus(test_units, oos, model, bundle, AesConfig())
    after = model.predict(model.encode(adapted)).argmax(axis=1)
    m = correction_metrics(pred, after, y, flagged)
    print(f"accuracy {correct.mean():.3f} -> {(after == y).mean():.3f}, "
          f"CSR {m['csr']:.3f}, MCR {m['mcr']:.3f}")

    index = {u.id: i for i, u in enumerate(test_units)}
    fixed = [r for r in results if r.adapted and pred[index[r.unit.id]] != y[index[r.unit.id]]
             and after[index[r.unit.id]] == y[index[r.unit.id]]]
    if not fixed:
        return
    shown = fixed[0]
    i = index[shown.unit.id]
    print()
    print(f"example {shown.unit.id}: true label '{LABELS[y[i]]}', "
          f"predicted '{LABELS[pred[i]]}' before, '{LABELS[after[i]]}' after")
    print(f"fitness {shown.history[0]:.3f} -> {shown.best.fitness:.3f} via operators {shown.best.ops}")
    print("--- original")
    print(test_units[i].code)
    print("--- adapted")
    print(shown.unit.code)


if __name__ == "__main__":
    np.set_printoptions(precision=3)
    main()
