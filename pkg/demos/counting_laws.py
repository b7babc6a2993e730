"""Additive versus multiplicative rule growth, on fixtures with known counts.

Substituting an intermediate rule set whose premises have N1 and N2
input-space approximations costs N1 + N2 rules clause-wise, but a single
two-term premise whose terms substitute into N1 and N2 rules costs
N1 * N2 term-wise. The gap is what makes clause-wise extraction tractable
on deep networks.

Run:  python demos/counting_laws.py
"""
import numpy as np

from nnrex import extract
from nnrex.rules import OP_GT, Rule, Term

# Truth patterns over a 1-D input whose substitution trees are forced to
# produce exactly one TRUE leaf per interval: candidate thresholds exist
# only where the class changes, so the tree cuts exactly at the interval
# boundaries.
IV3 = ((0.10, 0.20), (0.40, 0.50), (0.70, 0.80))          # N1 = 3
IV4 = ((0.05, 0.15), (0.30, 0.40), (0.55, 0.65), (0.85, 0.95))  # N2 = 4


def interval_truth(intervals, n=400):
    x = (np.arange(n) / (n - 1))[:, None]
    truth = np.zeros(n, dtype=bool)
    for a, b in intervals:
        truth |= (x[:, 0] >= a) & (x[:, 0] <= b)
    return x, truth


X, truth3 = interval_truth(IV3)
_, truth4 = interval_truth(IV4)

sub3 = extract.substitute_clause(Rule(frozenset(), 0, 1.0), X, truth3, 2, winnow=False)
sub4 = extract.substitute_clause(Rule(frozenset(), 0, 1.0), X, truth4, 2, winnow=False)
print(f"substitution tree for the 3-interval truth: {len(sub3)} TRUE premises")
print(f"substitution tree for the 4-interval truth: {len(sub4)} TRUE premises\n")

# clause-wise: two intermediate rules, one premise each -> N1 + N2 rules
t1, t2 = Term(0, OP_GT, 0.5), Term(1, OP_GT, 0.5)
H = np.column_stack([truth3.astype(float), truth4.astype(float)])
clause_rules = extract.clausewise_substitute(
    [Rule(frozenset({t1}), 1, 0.9), Rule(frozenset({t2}), 1, 0.8)],
    H, X, 2, winnow=False,
)
print(f"clause-wise substitution of two premises: {len(clause_rules)} rules "
      f"(N1 + N2 = {len(sub3)} + {len(sub4)})")

# term-wise: one rule with both terms -> N1 * N2 rules before cleanup
term_rules = {t1: sub3, t2: sub4}
product_rules = extract.termwise_substitute(Rule(frozenset({t1, t2}), 1, 0.9), term_rules)
print(f"term-wise substitution of one two-term premise: {len(product_rules)} rules "
      f"(N1 * N2 = {len(sub3)} * {len(sub4)})\n")

# the gap compounds per layer: k-term premises cost the product of all k
for k in range(1, 6):
    print(f"  a {k}-term premise with 4 options per term: "
          f"clause-wise contributes ~4 rules, term-wise {4 ** k}")
