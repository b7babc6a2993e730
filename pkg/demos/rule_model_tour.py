"""Tour of the symbolic rule-set model: building rules by hand, inference,
canonicalization, pruning, and the JSON round trip.

Run:  python demos/rule_model_tour.py
"""
import tempfile
from pathlib import Path

import numpy as np

from nnrex import rules
from nnrex.rules import OP_GT, OP_LE, Rule, RuleSet, Term

# a hand-built model for a toy 2-feature, 2-class problem
rs = RuleSet(
    rules=(
        Rule(frozenset({Term(0, OP_GT, 0.5), Term(1, OP_GT, 0.5)}), 0, 0.95),
        Rule(frozenset({Term(0, OP_LE, 0.5), Term(1, OP_LE, 0.5)}), 0, 0.90),
        Rule(frozenset({Term(0, OP_GT, 0.5), Term(1, OP_LE, 0.5)}), 1, 0.92),
        Rule(frozenset({Term(0, OP_LE, 0.5), Term(1, OP_GT, 0.5)}), 1, 0.88),
        # a sloppy duplicate with redundant bounds, to be canonicalized away
        Rule(frozenset({Term(0, OP_GT, 0.2), Term(0, OP_GT, 0.5), Term(1, OP_LE, 0.5)}), 1, 0.40),
    ),
    default_label=0,
    num_classes=2,
    feature_names=("x1", "x2"),
)

print("rules as written:")
for r in rs.rules:
    print(f"  {r}")

canonical = rules.canonicalize(rs)
print(f"\nafter canonicalization: {len(canonical.rules)} rules "
      f"(tightened bounds, duplicates merged)")
for r in canonical.rules:
    print(f"  {r}")

# inference: vote of the fired rules, default when nothing fires
points = np.array([[0.9, 0.2], [0.1, 0.8], [0.7, 0.9], [0.2, 0.3]])
print("\npredictions:")
for x in points:
    klass = rules.predict(canonical, x)
    scores = rules.score(canonical, x)
    print(f"  x={x} -> class {klass}, scores {np.round(scores, 3)}")

count, avg_len = rules.rule_stats(canonical)
print(f"\nmodel size: {count} rules, average premise length {avg_len:.2f}")
print(f"feature usage: {rules.feature_usage(canonical, 2)}")

# confidence-ranked pruning keeps the strongest half
pruned = rules.drop_low_confidence(canonical, 50)
print(f"after dropping the lowest 50% by confidence: {len(pruned.rules)} rules")

# serialization round trip
with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "model.json"
    rules.serialize(canonical, path)
    loaded = rules.deserialize(path)
    print(f"\nJSON round trip exact: {loaded == canonical}")
    print(f"on-disk form starts with: {path.read_text()[:80]!r}")
