"""End-to-end walkthrough on the synthetic parity task.

The task: 1000 points uniform on [0,1]^10, labelled by XOR of the rounded
first two coordinates. No single feature carries marginal signal, so flat
tree induction collapses to the majority class, while a trained network
solves the task easily. Clause-wise extraction recovers the network's
knowledge as a compact rule set.

Run:  python demos/xor_walkthrough.py
"""
import numpy as np

from nnrex import data, evaluation, extract, mlp, rules

SEED = 7

# ----------------------------------------------------------------------
# 1. Data and a train/test split
# ----------------------------------------------------------------------
ds = data.gen_xor(1000, 10, seed=SEED)
folds = data.stratified_kfold(ds, 5, seed=SEED)
fold = folds[0]
train_idx, test_idx = list(fold.train_indices), list(fold.test_indices)
X_train, y_train = ds.features[train_idx], ds.labels[train_idx]
X_test, y_test = ds.features[test_idx], ds.labels[test_idx]
print(f"dataset: {ds.num_samples} samples, {ds.num_features} features, "
      f"majority class {100 * max(np.bincount(ds.labels)) / ds.num_samples:.1f}%")

# ----------------------------------------------------------------------
# 2. Train the reference network: hidden sizes {64, 32, 16}, tanh
# ----------------------------------------------------------------------
preset = evaluation.NET_PRESETS["xor"]
train_ds = data.Dataset(X_train, y_train, ds.feature_names, ds.class_names)
net = mlp.train(
    train_ds, preset.hidden_sizes, preset.activation,
    mlp.TrainConfig(epochs=preset.epochs, batch_size=preset.batch_size, seed=SEED),
)
net_acc = 100 * np.mean(mlp.predict_labels(net, X_test) == y_test)
print(f"network test accuracy: {net_acc:.1f}%\n")

# ----------------------------------------------------------------------
# 3. Extract rules with each method and compare
# ----------------------------------------------------------------------
print(f"{'method':14} {'acc %':>7} {'fid %':>7} {'rules':>7} {'avg len':>8}")
for method in ("eclaire", "eclaire_star", "pedc5", "c5", "remd"):
    cfg = extract.ExtractionConfig(min_samples=2 if method not in ("remd",) else 30, seed=SEED)
    try:
        rs, seconds, _ = evaluation.measure(
            lambda: extract.run_method(method, X_train, y_train, net, cfg,
                                       feature_names=ds.feature_names, num_classes=2)
        )
    except extract.ExplosionGuard as exc:
        print(f"{method:14} aborted by the explosion guard ({exc.rule_count:,} rules)")
        continue
    acc = evaluation.accuracy(rs, X_test, y_test)
    fid = evaluation.fidelity(rs, X_test, net)
    count, avg_len = rules.rule_stats(rs)
    print(f"{method:14} {acc:7.1f} {fid:7.1f} {count:7d} {avg_len:8.2f}   ({seconds:.1f}s)")

# ----------------------------------------------------------------------
# 4. Look at a few extracted rules: they should talk about x1 and x2
# ----------------------------------------------------------------------
cfg = extract.ExtractionConfig(min_samples=4, seed=SEED)
rs = extract.eclaire(net, X_train, cfg, ds.feature_names)
print("\nhighest-confidence rules:")
for r in sorted(rs.rules, key=lambda r: -r.confidence)[:5]:
    named = " AND ".join(
        f"{ds.feature_names[t.feature]} {t.op} {t.threshold:.2f}" for t in r.sorted_terms()
    ) or "TRUE"
    print(f"  IF {named} THEN {ds.class_names[r.conclusion]}  (confidence {r.confidence:.2f})")

usage = rules.feature_usage(rs, ds.num_features)
print("\nfraction of rules mentioning each feature:")
for name, frac in zip(ds.feature_names, usage):
    print(f"  {name:4} {'#' * int(50 * frac):50} {frac:.2f}")
