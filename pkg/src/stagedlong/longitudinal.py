"""Longitudinal workflows: the full staged tree, staged trees under Markov
assumptions encoded by a DAG, and sequences of marginal staged trees."""
from __future__ import annotations

import graphlib
import re
from dataclasses import dataclass
from itertools import combinations
from math import comb
from typing import NamedTuple, Optional, Sequence

from .ceg import Ceg, build_ceg
from .data import Dataset, project_margin
from .errors import ArgumentError
from .scoring import assign_mass_conserving_prior
from .selection import (
    SelectionTrace,
    ahc_select,
    apply_zero_sample_rule,
    default_hyperstage,
    initial_zero_sample_staging,
)
from .staged import StagedTree
from .staging import Staging
from .tree import EventTree, build_event_tree

TEMPLATES = (
    "full",
    "time-dependence",
    "time-lag",
    "exogenous",
    "markov-covariates",
    "markov-outcome",
    "combined",
)


@dataclass(frozen=True)
class DagAssumptions:
    vertices: tuple[str, ...]
    edges: frozenset

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(self.vertices))
        object.__setattr__(self, "edges", frozenset(tuple(e) for e in self.edges))
        known = set(self.vertices)
        if len(known) != len(self.vertices):
            raise ArgumentError("DAG has duplicate vertices")
        for u, v in self.edges:
            if u not in known or v not in known:
                raise ArgumentError(f"edge {u} -> {v} uses an unknown vertex")
            if u == v:
                raise ArgumentError(f"self-loop on {u}")
        sorter = graphlib.TopologicalSorter({v: set() for v in self.vertices})
        for u, v in self.edges:
            sorter.add(v, u)
        try:
            tuple(sorter.static_order())
        except graphlib.CycleError as exc:
            raise ArgumentError(f"graph is not acyclic: {exc.args[1]}") from None

    def parents(self, v: str) -> list[str]:
        return [u for u in self.vertices if (u, v) in self.edges]

    def sorted_edges(self) -> list[tuple[str, str]]:
        pos = {v: i for i, v in enumerate(self.vertices)}
        return sorted(self.edges, key=lambda e: (pos[e[0]], pos[e[1]]))

    def to_text(self) -> str:
        lines = [f"{u} -> {v}" for u, v in self.sorted_edges()]
        linked = {x for e in self.edges for x in e}
        lines += [v for v in self.vertices if v not in linked]
        return "\n".join(lines) + "\n"


_EDGE = re.compile(r"^\s*(\S+)\s*->\s*(\S+)\s*$")


def parse_edge_list(text: str, vertices: Optional[Sequence[str]] = None) -> DagAssumptions:
    """Parse ``parent -> child`` lines. A line holding a single name declares
    an isolated vertex; ``#`` starts a comment."""
    found, edges = [], []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _EDGE.match(line)
        if m:
            u, v = m.groups()
            edges.append((u, v))
            names = (u, v)
        elif len(line.split()) == 1:
            names = (line,)
        else:
            raise ArgumentError(f"DAG line {lineno}: cannot parse {raw!r}")
        for n in names:
            if n not in found:
                found.append(n)
    if vertices is not None:
        extra = set(found) - set(vertices)
        if extra:
            raise ArgumentError(f"DAG names unknown variables: {sorted(extra)}")
        found = list(vertices)
    return DagAssumptions(tuple(found), frozenset(edges))


def dag_template(
    kind: str,
    T: int,
    covariates: Optional[Sequence[str]] = None,
    outcomes: Optional[Sequence[str]] = None,
    invariant: Sequence[str] = (),
    invariant_links: str = "all",
) -> DagAssumptions:
    """Markov-assumption DAG over ``(Z, X1, Y1, ..., XT, YT)``.

    Every template starts from the complete DAG in temporal order and drops
    the edges its independence statement rules out:

    ``time-dependence``  Y_t depends on covariates only through X_t;
    ``time-lag``         Y_t depends on covariates only through X_{t-1};
    ``exogenous``        no edges from past outcomes into covariates;
    ``markov-covariates`` covariate-covariate edges only between t-1 and t;
    ``markov-outcome``   outcome-outcome edges only between t-1 and t;
    ``combined``         time-dependence, exogenous and both Markov rules.

    ``covariates`` and ``outcomes`` default to ``X1..XT`` and ``Y1..YT``;
    pass an empty ``covariates`` list for data without timed covariates.
    Time-invariant covariates ``invariant`` precede everything, form a
    complete DAG among themselves and point into every timed variable
    (``invariant_links="all"``) or only into the first time point
    (``"first"``).
    """
    if kind not in TEMPLATES:
        raise ArgumentError(f"unknown template {kind!r}; choose from {TEMPLATES}")
    if T < 2:
        raise ArgumentError("templates need at least two time points")
    if covariates is None:
        covariates = [f"X{t}" for t in range(1, T + 1)]
    if outcomes is None:
        outcomes = [f"Y{t}" for t in range(1, T + 1)]
    covariates, outcomes, invariant = list(covariates), list(outcomes), list(invariant)
    if len(outcomes) != T or (covariates and len(covariates) != T):
        raise ArgumentError(f"need {T} outcome names and 0 or {T} covariate names")
    if invariant_links not in ("all", "first"):
        raise ArgumentError("invariant_links must be 'all' or 'first'")

    timed = []  # (name, kind, time) in temporal order
    for t in range(T):
        if covariates:
            timed.append((covariates[t], "X", t + 1))
        timed.append((outcomes[t], "Y", t + 1))

    def dropped(src, dst) -> bool:
        (_, ks, s), (_, kd, t) = src, dst
        rules = {
            "time-dependence": ks == "X" and kd == "Y" and s < t,
            "time-lag": ks == "X" and kd == "Y" and s != t - 1,
            "exogenous": ks == "Y" and kd == "X",
            "markov-covariates": ks == "X" and kd == "X" and s < t - 1,
            "markov-outcome": ks == "Y" and kd == "Y" and s < t - 1,
        }
        if kind == "full":
            return False
        if kind == "combined":
            return any(
                rules[r]
                for r in ("time-dependence", "exogenous", "markov-covariates", "markov-outcome")
            )
        return rules[kind]

    edges = set(combinations(invariant, 2))
    for z in invariant:
        for name, _, t in timed:
            if invariant_links == "all" or t == 1:
                edges.add((z, name))
    for src, dst in combinations(timed, 2):
        if not dropped(src, dst):
            edges.add((src[0], dst[0]))
    return DagAssumptions(tuple(invariant) + tuple(n for n, _, _ in timed), frozenset(edges))


def dag_to_initial_staging(dag: DagAssumptions, tree: EventTree) -> Staging:
    """Stage together the situations of each level whose paths agree on the
    parents of that level's variable."""
    order = tree.variable_names
    if set(dag.vertices) != set(order):
        raise ArgumentError(
            f"DAG vertices {sorted(dag.vertices)} differ from tree variables {sorted(order)}"
        )
    pos = {v: i for i, v in enumerate(order)}
    for u, v in dag.edges:
        if pos[u] >= pos[v]:
            raise ArgumentError(f"edge {u} -> {v} runs against the variable order")
    stages = []
    for d, name in enumerate(order):
        parent_depths = [pos[p] for p in dag.parents(name)]
        blocks: dict = {}
        for s in tree.level(d):
            idx = tree.path_indices(s)
            blocks.setdefault(tuple(idx[i] for i in parent_depths), []).append(s)
        stages.extend(blocks.values())
    return Staging(tuple(stages))


class FitResult(NamedTuple):
    staged_tree: StagedTree
    ceg: Ceg
    trace: SelectionTrace
    initial: Staging


def _fit(tree, initial_fn, alpha_bar, estimator, policy) -> FitResult:
    prior = assign_mass_conserving_prior(tree, alpha_bar)
    hyper = default_hyperstage(tree, policy)
    initial = initial_fn(hyper)
    st, trace = ahc_select(tree, prior, initial, hyper, estimator)
    return FitResult(st, build_ceg(st), trace, initial)


def fit_full(
    data: Dataset,
    order: Sequence[str],
    alpha_bar=None,
    estimator: str = "mean",
    policy: str = "same-labels",
    complete_case: bool = False,
) -> FitResult:
    """Full longitudinal staged tree: zero-sample staging, then AHC."""
    tree = build_event_tree(data, order, complete_case)
    return _fit(
        tree, lambda h: initial_zero_sample_staging(tree, h), alpha_bar, estimator, policy
    )


def markov_initial_staging(tree: EventTree, dag: DagAssumptions, hyperstage) -> Staging:
    """DAG staging with the zero-sample rule applied on top.

    Blocks with observations stay whole, even when some members are
    unobserved; only wholly unobserved blocks are collected into the
    forbidden zero-sample stage of their hyperstage class.
    """
    return apply_zero_sample_rule(tree, dag_to_initial_staging(dag, tree), hyperstage)


def fit_with_markov_assumptions(
    data: Dataset,
    order: Sequence[str],
    dag: DagAssumptions,
    alpha_bar=None,
    estimator: str = "mean",
    policy: str = "same-labels",
    complete_case: bool = False,
) -> FitResult:
    tree = build_event_tree(data, order, complete_case)
    return _fit(
        tree, lambda h: markov_initial_staging(tree, dag, h), alpha_bar, estimator, policy
    )


def fit_marginal_sequence(
    data: Dataset,
    margins: Sequence[Sequence[str]],
    alpha_bar=None,
    estimator: str = "mean",
    policy: str = "same-labels",
    complete_case: bool = False,
) -> list[FitResult]:
    """Fit one staged tree per margin; results follow the order of ``margins``."""
    results = []
    for margin in margins:
        projected = project_margin(data, margin)
        results.append(
            fit_full(projected, list(margin), alpha_bar, estimator, policy, complete_case)
        )
    return results


def _pair_counts(labels_a: Sequence[int], labels_b: Sequence[int]):
    joint: dict = {}
    ca: dict = {}
    cb: dict = {}
    for a, b in zip(labels_a, labels_b):
        joint[a, b] = joint.get((a, b), 0) + 1
        ca[a] = ca.get(a, 0) + 1
        cb[b] = cb.get(b, 0) + 1
    same_both = sum(comb(n, 2) for n in joint.values())
    same_a = sum(comb(n, 2) for n in ca.values())
    same_b = sum(comb(n, 2) for n in cb.values())
    return same_both, same_a, same_b, comb(len(labels_a), 2)


def rand_index(labels_a: Sequence[int], labels_b: Sequence[int]) -> float:
    both, sa, sb, total = _pair_counts(labels_a, labels_b)
    if total == 0:
        return 1.0
    agree = both + (total - sa - sb + both)
    return agree / total


def adjusted_rand_index(labels_a: Sequence[int], labels_b: Sequence[int]) -> float:
    """Hubert-Arabie adjusted Rand index. Degenerate cases where both
    partitions are trivial in the same way score 1."""
    both, sa, sb, total = _pair_counts(labels_a, labels_b)
    if total == 0:
        return 1.0
    expected = sa * sb / total
    maximum = (sa + sb) / 2
    if maximum == expected:
        return 1.0
    return (both - expected) / (maximum - expected)


@dataclass(frozen=True)
class StagingDiff:
    """Stage-by-stage comparison of two stagings of one tree topology.

    ``only_first[d]`` and ``only_second[d]`` list the stages, restricted to
    level ``d``, that the other staging lacks.
    """

    only_first: tuple[tuple[tuple[int, ...], ...], ...]
    only_second: tuple[tuple[tuple[int, ...], ...], ...]
    rand: float
    adjusted_rand: float

    @property
    def score(self) -> float:
        """Adjusted Rand index floored at 0."""
        return max(0.0, self.adjusted_rand)

    @property
    def is_empty(self) -> bool:
        return not any(self.only_first) and not any(self.only_second)

    def to_dict(self) -> dict:
        return {
            "levels": [
                {"depth": d, "only_first": [list(b) for b in a], "only_second": [list(b) for b in b_]}
                for d, (a, b_) in enumerate(zip(self.only_first, self.only_second))
            ],
            "rand": self.rand,
            "adjusted_rand": self.adjusted_rand,
            "score": self.score,
        }


def compare_stagings(a: StagedTree, b: StagedTree) -> StagingDiff:
    if not a.tree.same_topology(b.tree):
        raise ArgumentError("stagings belong to trees with different topologies")
    tree = a.tree
    only_a, only_b = [], []
    for d in range(tree.n_levels):
        level = set(tree.level(d))

        def blocks(st):
            return {tuple(x for x in stage if x in level) for stage in st.staging.stages} - {()}

        ba, bb = blocks(a), blocks(b)
        only_a.append(tuple(sorted(ba - bb)))
        only_b.append(tuple(sorted(bb - ba)))
    sits = list(tree.situations)
    la = [a.staging.stage_index(s) for s in sits]
    lb = [b.staging.stage_index(s) for s in sits]
    return StagingDiff(tuple(only_a), tuple(only_b), rand_index(la, lb), adjusted_rand_index(la, lb))


def event_probability(st: StagedTree, event: dict) -> float:
    """Probability that every variable in ``event`` takes its given label."""
    probs = st.require_probabilities().probs
    tree = st.tree
    names = tree.variable_names
    for name, label in event.items():
        if name not in names:
            raise ArgumentError(f"unknown variable {name!r}")
        if label not in tree.variables[names.index(name)].categories:
            raise ArgumentError(f"{label!r} is not a category of {name!r}")
    depth_of = {n: i for i, n in enumerate(names)}
    last = max((depth_of[n] for n in event), default=-1)
    wanted = {depth_of[n]: lab for n, lab in event.items()}

    def walk(s: int, d: int, acc: float) -> float:
        if d > last:
            return acc
        total = 0.0
        for k, label in enumerate(tree.labels(s)):
            if d in wanted and wanted[d] != label:
                continue
            child = tree.child(s, k)
            p = acc * probs[s][k]
            total += p if d == last else walk(child, d + 1, p)
        return total

    return walk(0, 0, 1.0)


def conditional_probability(st: StagedTree, target: dict, given: dict) -> float:
    return event_probability(st, {**given, **target}) / event_probability(st, given)
