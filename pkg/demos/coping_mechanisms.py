"""The four growth-coping mechanisms, measured on the parity task.

Extraction cost grows with the training set, the number of hidden layers,
and the size of intermediate rule sets. Four knobs trade a little fidelity
for a lot of runtime: raising the minimum split size, striding over hidden
layers, subsampling the extraction set, and dropping the lowest-confidence
intermediate rules before substitution.

Run:  python demos/coping_mechanisms.py
"""

from nnrex import data, evaluation, extract, mlp, rules

SEED = 7

ds = data.gen_xor(1000, 10, seed=SEED)
fold = data.stratified_kfold(ds, 5, seed=SEED)[0]
train_idx, test_idx = list(fold.train_indices), list(fold.test_indices)
X_train = ds.features[train_idx]
X_test = ds.features[test_idx]

train_ds = data.Dataset(X_train, ds.labels[train_idx], ds.feature_names, ds.class_names)
net = mlp.train(train_ds, (64, 32, 16), "tanh",
                mlp.TrainConfig(epochs=150, batch_size=16, seed=SEED))

configs = [
    ("baseline (mu=2)", extract.ExtractionConfig(min_samples=2, seed=SEED)),
    ("mu=8 (intermediate pruning)", extract.ExtractionConfig(min_samples=8, seed=SEED)),
    ("layer stride 2", extract.ExtractionConfig(min_samples=2, layer_stride=2, seed=SEED)),
    ("half the training set", extract.ExtractionConfig(min_samples=2, sample_fraction=0.5, seed=SEED)),
    ("drop lowest 25% intermediates", extract.ExtractionConfig(min_samples=2, rule_drop_pct=25, seed=SEED)),
]

print(f"{'configuration':32} {'fidelity %':>10} {'rules':>7} {'time s':>8}")
baseline_time = None
for name, cfg in configs:
    rs, seconds, _ = evaluation.measure(lambda: extract.eclaire(net, X_train, cfg))
    fid = evaluation.fidelity(rs, X_test, net)
    count, _ = rules.rule_stats(rs)
    if baseline_time is None:
        baseline_time = seconds
        rel = ""
    else:
        rel = f"  ({100 * (baseline_time - seconds) / baseline_time:+.0f}% time)"
    print(f"{name:32} {fid:10.1f} {count:7d} {seconds:8.2f}{rel}")
