"""Rule-extraction algorithms over a trained network.

Four extraction families share one configuration:

* clause-wise decompositional extraction (``eclaire``): each hidden layer
  independently yields intermediate rules mapping its activations to the
  network's predicted labels; every intermediate premise is then replaced,
  as a whole clause, by the input-space rules that approximate its truth
  value. Rule growth is additive in the number of substituted premises.
* term-wise decompositional baselines (``remd``, ``deepred_star``): rules
  are rewritten backwards layer by layer, replacing each term separately
  and recombining the replacements as a Cartesian product, which grows
  multiplicatively and is protected by an explosion guard.
* pedagogical baseline (``pedc5``): one tree from inputs to the network's
  predicted labels.
* direct baseline (``c5_direct``): one tree from inputs to true labels.
"""
from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .data import class_weights_from_labels, stratified_sample_indices
from .mlp import Mlp, activations, predict_labels
from .rules import (
    OP_GT,
    Rule,
    RuleSet,
    canonicalize,
    drop_low_confidence,
    normalize_premise,
    premise_mask,
)
from .tree import induce, to_ruleset

METHOD_NAMES = ("eclaire", "eclaire_star", "remd", "deepred_star", "pedc5", "c5")

DEFAULT_RULE_CAP = 1_000_000


class ExtractError(ValueError):
    """Raised for incompatible inputs or configurations."""


class ExplosionGuard(RuntimeError):
    """Term-wise substitution exceeded the configured rule cap."""

    def __init__(self, rule_count: int, cap: int, layer: int):
        super().__init__(
            f"term-wise substitution at layer {layer} needs {rule_count} rules, "
            f"exceeding the cap of {cap}"
        )
        self.rule_count = rule_count
        self.cap = cap
        self.layer = layer


@dataclass(frozen=True)
class ExtractionConfig:
    """Shared extraction knobs.

    ``min_samples`` is the minimum node size a tree split requires, the
    principal complexity control. ``layer_stride``, ``sample_fraction`` and
    ``rule_drop_pct`` are the growth-coping mechanisms: hidden-layer
    subsampling, training-set subsampling, and confidence-ranked pruning of
    intermediate rules before substitution.
    """

    min_samples: int = 2
    n_threads: int = 1
    include_input_layer: bool = False
    layer_stride: int = 1
    sample_fraction: float = 1.0
    rule_drop_pct: float = 0.0
    winnow: bool = True
    class_weighted: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.min_samples < 2:
            raise ExtractError("min_samples must be >= 2")
        if self.n_threads < 1:
            raise ExtractError("n_threads must be >= 1")
        if self.layer_stride < 1:
            raise ExtractError("layer_stride must be >= 1")
        if not 0.0 < self.sample_fraction <= 1.0:
            raise ExtractError("sample_fraction must be in (0, 1]")
        if not 0.0 <= self.rule_drop_pct <= 100.0:
            raise ExtractError("rule_drop_pct must be in [0, 100]")


def _majority(labels: np.ndarray, num_classes: int) -> int:
    return int(np.argmax(np.bincount(labels, minlength=num_classes)))


def _maybe_subsample(X: np.ndarray, labels: np.ndarray, cfg: ExtractionConfig):
    if cfg.sample_fraction >= 1.0:
        return X, labels
    rng = np.random.default_rng(cfg.seed)
    idx = stratified_sample_indices(labels, cfg.sample_fraction, rng)
    return X[idx], labels[idx]


def _binary_weights(truth: np.ndarray, enabled: bool) -> np.ndarray | None:
    if not enabled:
        return None
    return class_weights_from_labels(truth.astype(int), 2)


def substitute_clause(
    rule: Rule,
    X: np.ndarray,
    premise_truth: np.ndarray,
    min_samples: int,
    class_weight: np.ndarray | None = None,
    winnow: bool = True,
) -> list[Rule]:
    """Replace one intermediate rule by input-space rules approximating the
    truth of its whole premise.

    Induces a tree from X to the premise-truth labels and keeps the premises
    of leaves concluding TRUE, each mapped to the original rule's conclusion
    with confidence = original confidence x leaf confidence. An empty list
    means the premise could not be approximated as true anywhere and the
    intermediate rule is dropped.
    """
    truth = np.asarray(premise_truth).astype(int)
    if truth.shape != (X.shape[0],):
        raise ExtractError("premise_truth length must match X")
    tree = induce(X, truth, min_samples, class_weight, winnow, num_classes=2)
    substituted = []
    for leaf_rule in to_ruleset(tree, 0).rules:
        if leaf_rule.conclusion == 1:
            substituted.append(
                Rule(leaf_rule.premise, rule.conclusion, rule.confidence * leaf_rule.confidence)
            )
    return substituted


def clausewise_substitute(
    intermediate_rules,
    H: np.ndarray,
    X: np.ndarray,
    min_samples: int,
    class_weighted: bool = False,
    winnow: bool = True,
) -> list[Rule]:
    """Clause-wise substitution of a whole intermediate rule set, returned
    raw (pre-deduplication): exactly the concatenation of each rule's
    substitution, so the output size is the sum of TRUE-premise counts."""
    out: list[Rule] = []
    for rule in intermediate_rules:
        truth = premise_mask(rule.premise, H)
        weights = _binary_weights(truth, class_weighted)
        out.extend(substitute_clause(rule, X, truth, min_samples, weights, winnow))
    return out


def _selected_layers(net: Mlp, cfg: ExtractionConfig) -> list[int]:
    layers = list(range(1, net.num_hidden + 1, cfg.layer_stride))
    if cfg.include_input_layer:
        layers = [0] + layers
    if not layers:
        raise ExtractError("no layers selected for extraction")
    return layers


def eclaire_layer_rules(
    net: Mlp,
    X: np.ndarray,
    cfg: ExtractionConfig = ExtractionConfig(),
) -> list[tuple[int, list[Rule]]]:
    """Per-layer clause-wise extraction, before merging.

    Each selected layer is processed independently of the others: induce an
    intermediate tree from its activations to the network's predicted
    labels, optionally drop the lowest-confidence intermediate rules, then
    substitute every surviving premise with input-space rules. Work is
    distributed over ``cfg.n_threads`` and results are merged in a fixed
    (layer, rule, leaf) order, so the output does not depend on the thread
    count.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != net.input_width:
        raise ExtractError(f"data width {X.shape[1]} does not match network input {net.input_width}")
    yhat = predict_labels(net, X)
    X, yhat = _maybe_subsample(X, yhat, cfg)
    num_classes = net.num_classes
    default = _majority(yhat, num_classes)
    selected = _selected_layers(net, cfg)
    label_weights = class_weights_from_labels(yhat, num_classes) if cfg.class_weighted else None

    def intermediate_for(layer: int) -> tuple[np.ndarray, list[Rule]]:
        H = activations(net, X, layer)
        tree = induce(H, yhat, cfg.min_samples, label_weights, cfg.winnow, num_classes)
        rs = to_ruleset(tree, default)
        rs = drop_low_confidence(rs, cfg.rule_drop_pct)
        return H, list(rs.rules)

    def substitution_for(args) -> list[Rule]:
        H, rule = args
        truth = premise_mask(rule.premise, H)
        weights = _binary_weights(truth, cfg.class_weighted)
        return substitute_clause(rule, X, truth, cfg.min_samples, weights, cfg.winnow)

    if cfg.n_threads == 1:
        intermediates = [intermediate_for(i) for i in selected]
        tasks = [(H, r) for H, rule_list in intermediates for r in rule_list]
        substituted = [substitution_for(t) for t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=cfg.n_threads) as pool:
            intermediates = list(pool.map(intermediate_for, selected))
            tasks = [(H, r) for H, rule_list in intermediates for r in rule_list]
            substituted = list(pool.map(substitution_for, tasks))

    out: list[tuple[int, list[Rule]]] = []
    pos = 0
    for layer, (_, rule_list) in zip(selected, intermediates):
        contributed: list[Rule] = []
        for _ in rule_list:
            contributed.extend(substituted[pos])
            pos += 1
        out.append((layer, contributed))
    return out


def eclaire(
    net: Mlp,
    X: np.ndarray,
    cfg: ExtractionConfig = ExtractionConfig(),
    feature_names: tuple[str, ...] | None = None,
) -> RuleSet:
    """Clause-wise decompositional extraction; see :func:`eclaire_layer_rules`.

    Contributions of all selected layers are unioned and canonicalized. The
    default label is the majority predicted label of the extraction set.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    per_layer = eclaire_layer_rules(net, X, cfg)
    yhat = predict_labels(net, X)
    _, yhat_sub = _maybe_subsample(X, yhat, cfg)
    default = _majority(yhat_sub, net.num_classes)
    all_rules = [r for _, contributed in per_layer for r in contributed]
    return canonicalize(RuleSet(tuple(all_rules), default, net.num_classes, feature_names))


def eclaire_star(
    net: Mlp,
    X: np.ndarray,
    cfg: ExtractionConfig = ExtractionConfig(),
    feature_names: tuple[str, ...] | None = None,
) -> RuleSet:
    """Eclectic variant: the input layer joins the hidden representations."""
    return eclaire(net, X, replace(cfg, include_input_layer=True), feature_names)


def termwise_substitute(
    rule: Rule,
    term_rules: dict,
) -> list[Rule]:
    """Cartesian recombination of per-term replacements for one rule.

    ``term_rules`` maps each premise term to the list of TRUE-premise rules
    substituting it. The raw (pre-deduplication) output size is the product
    of the per-term list sizes; a term with no TRUE premises annihilates the
    rule.
    """
    per_term = [term_rules[t] for t in sorted(rule.premise)]
    out = []
    for combo in itertools.product(*per_term):
        terms = frozenset().union(*(r.premise for r in combo)) if combo else frozenset()
        conf = rule.confidence
        for r in combo:
            conf *= r.confidence
        out.append(Rule(terms, rule.conclusion, conf))
    return out


def _termwise_extract(
    net: Mlp,
    X: np.ndarray,
    cfg: ExtractionConfig,
    feature_names,
    rule_cap: int,
    keep_history: bool,
    stats: dict | None = None,
) -> RuleSet:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != net.input_width:
        raise ExtractError(f"data width {X.shape[1]} does not match network input {net.input_width}")
    d = net.num_hidden
    if d == 0:
        raise ExtractError("term-wise extraction needs at least one hidden layer")
    yhat = predict_labels(net, X)
    X, yhat = _maybe_subsample(X, yhat, cfg)
    num_classes = net.num_classes
    default = _majority(yhat, num_classes)
    label_weights = class_weights_from_labels(yhat, num_classes) if cfg.class_weighted else None

    layer_acts = [activations(net, X, i) for i in range(d + 1)]
    top_tree = induce(layer_acts[d], yhat, cfg.min_samples, label_weights, cfg.winnow, num_classes)
    current = list(to_ruleset(top_tree, default).rules)
    history: list[list[Rule]] = [list(current)] if keep_history else []

    # live-rule accounting: how many rule objects the strategy keeps alive
    # at once, the footprint difference between eager rewriting and full
    # materialization
    retained = len(current) if keep_history else 0
    peak_live = len(current) + retained

    for layer in range(d, 0, -1):
        prev_acts = layer_acts[layer - 1]
        cur_acts = layer_acts[layer]
        term_cache: dict = {}
        step_rules: list[Rule] = []
        seen: dict = {}
        expanded = 0
        for rule in current:
            for t in sorted(rule.premise):
                if t not in term_cache:
                    col = cur_acts[:, t.feature]
                    truth = (col > t.threshold) if t.op == OP_GT else (col <= t.threshold)
                    weights = _binary_weights(truth, cfg.class_weighted)
                    probe = Rule(frozenset([t]), 0, 1.0)
                    term_cache[t] = substitute_clause(
                        probe, prev_acts, truth, cfg.min_samples, weights, cfg.winnow
                    )
            combos = 1
            for t in rule.premise:
                combos *= len(term_cache[t])
            expanded += combos
            # the guard counts the pre-deduplication expansion: that product
            # is what grows multiplicatively and must stay bounded
            if expanded > rule_cap:
                raise ExplosionGuard(expanded, rule_cap, layer)
            # vacuous and duplicate combinations are discarded as soon as
            # they appear; only the surviving set carries to the next layer
            for new_rule in termwise_substitute(rule, term_cache):
                premise = normalize_premise(new_rule.premise)
                if premise is None:
                    continue
                key = (premise, new_rule.conclusion)
                if key in seen:
                    i = seen[key]
                    if new_rule.confidence > step_rules[i].confidence:
                        step_rules[i] = Rule(premise, new_rule.conclusion, new_rule.confidence)
                else:
                    seen[key] = len(step_rules)
                    step_rules.append(Rule(premise, new_rule.conclusion, new_rule.confidence))
            cached = sum(len(v) for v in term_cache.values())
            peak_live = max(peak_live, retained + len(current) + len(step_rules) + cached)
        current = step_rules
        if keep_history:
            history.append(list(current))
            retained += len(current)

    # `history` stays referenced so the materialized per-layer sets remain
    # alive until extraction finishes (the memory profile that separates
    # deepred_star from remd)
    if stats is not None:
        stats["peak_live_rules"] = peak_live
    result = RuleSet(tuple(current), default, num_classes, feature_names)
    del history
    return result


def remd(
    net: Mlp,
    X: np.ndarray,
    cfg: ExtractionConfig = ExtractionConfig(),
    feature_names: tuple[str, ...] | None = None,
    rule_cap: int = DEFAULT_RULE_CAP,
    stats: dict | None = None,
) -> RuleSet:
    """Term-wise backward substitution with eager per-step rewriting: only
    the current rule set is kept in memory between layer steps."""
    return _termwise_extract(net, X, cfg, feature_names, rule_cap, keep_history=False, stats=stats)


def deepred_star(
    net: Mlp,
    X: np.ndarray,
    cfg: ExtractionConfig = ExtractionConfig(),
    feature_names: tuple[str, ...] | None = None,
    rule_cap: int = DEFAULT_RULE_CAP,
    stats: dict | None = None,
) -> RuleSet:
    """Term-wise backward substitution that materializes and retains every
    per-layer intermediate rule set, trading memory for inspectability; the
    final rule set matches :func:`remd` up to deduplication ordering."""
    return _termwise_extract(net, X, cfg, feature_names, rule_cap, keep_history=True, stats=stats)


def pedc5(
    net: Mlp,
    X: np.ndarray,
    cfg: ExtractionConfig = ExtractionConfig(),
    feature_names: tuple[str, ...] | None = None,
) -> RuleSet:
    """Pedagogical baseline: a single tree from inputs to predicted labels."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != net.input_width:
        raise ExtractError(f"data width {X.shape[1]} does not match network input {net.input_width}")
    yhat = predict_labels(net, X)
    X, yhat = _maybe_subsample(X, yhat, cfg)
    num_classes = net.num_classes
    weights = class_weights_from_labels(yhat, num_classes) if cfg.class_weighted else None
    tree = induce(X, yhat, cfg.min_samples, weights, cfg.winnow, num_classes)
    default = _majority(yhat, num_classes)
    return canonicalize(to_ruleset(tree, default, feature_names))


def c5_direct(
    X: np.ndarray,
    y: np.ndarray,
    cfg: ExtractionConfig = ExtractionConfig(),
    num_classes: int | None = None,
    feature_names: tuple[str, ...] | None = None,
) -> RuleSet:
    """Direct baseline: a single tree from inputs to true labels."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=int)
    if num_classes is None:
        num_classes = int(y.max()) + 1
    num_classes = max(num_classes, 2)
    X, y = _maybe_subsample(X, y, cfg)
    weights = class_weights_from_labels(y, num_classes) if cfg.class_weighted else None
    tree = induce(X, y, cfg.min_samples, weights, cfg.winnow, num_classes)
    default = _majority(y, num_classes)
    return canonicalize(to_ruleset(tree, default, feature_names))


def run_method(
    method: str,
    X: np.ndarray,
    y: np.ndarray | None = None,
    net: Mlp | None = None,
    cfg: ExtractionConfig = ExtractionConfig(),
    feature_names: tuple[str, ...] | None = None,
    num_classes: int | None = None,
    rule_cap: int = DEFAULT_RULE_CAP,
) -> RuleSet:
    """Dispatch by method name: eclaire | eclaire_star | remd | deepred_star
    | pedc5 | c5."""
    if method not in METHOD_NAMES:
        raise ExtractError(f"unknown method {method!r}; choose one of {', '.join(METHOD_NAMES)}")
    if method == "c5":
        if y is None:
            raise ExtractError("method c5 requires true labels")
        return c5_direct(X, y, cfg, num_classes, feature_names)
    if net is None:
        raise ExtractError(f"method {method} requires a network")
    if method == "eclaire":
        return eclaire(net, X, cfg, feature_names)
    if method == "eclaire_star":
        return eclaire_star(net, X, cfg, feature_names)
    if method == "remd":
        return remd(net, X, cfg, feature_names, rule_cap)
    if method == "deepred_star":
        return deepred_star(net, X, cfg, feature_names, rule_cap)
    return pedc5(net, X, cfg, feature_names)
