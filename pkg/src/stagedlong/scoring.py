"""Dirichlet priors, Dirichlet-multinomial marginal likelihoods, merge
Bayes factors and posterior transition probabilities."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from math import lgamma
from numbers import Real
from typing import Optional, Sequence, Union

from .errors import ArgumentError
from .staging import Staging
from .tree import EventTree

logger = logging.getLogger(__name__)

ESTIMATORS = ("map", "mean")


def _fraction(x: Union[Real, str, Fraction]) -> Fraction:
    try:
        if isinstance(x, float):
            return Fraction(repr(x))
        return Fraction(x)
    except (ValueError, TypeError, ZeroDivisionError):
        raise ArgumentError(f"not a number: {x!r}") from None


@dataclass(frozen=True)
class PriorSpec:
    """Dirichlet hyperparameters, one tuple per situation in category order.

    ``alphas`` are exact fractions so mass conservation holds exactly.
    """

    alpha_bar: Fraction
    alphas: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        if self.alpha_bar <= 0:
            raise ArgumentError("equivalent sample size must be positive")
        if any(a <= 0 for row in self.alphas for a in row):
            raise ArgumentError("every Dirichlet parameter must be positive")

    def floats(self, s: int) -> tuple[float, ...]:
        return tuple(float(a) for a in self.alphas[s])


def default_alpha_bar(tree: EventTree) -> int:
    """Largest out-degree in the tree."""
    return max(len(v.categories) for v in tree.variables)


def assign_mass_conserving_prior(
    tree: EventTree, alpha_bar: Optional[Union[Real, str]] = None
) -> PriorSpec:
    """Spread ``alpha_bar`` from the root, splitting each situation's incoming
    mass equally over its outgoing edges."""
    if alpha_bar is None:
        alpha_bar = default_alpha_bar(tree)
    total = _fraction(alpha_bar)
    if total <= 0:
        raise ArgumentError(f"equivalent sample size must be positive, got {alpha_bar}")
    mass = total
    alphas = []
    for d, var in enumerate(tree.variables):
        mass = mass / len(var.categories)
        alphas.extend([(mass,) * len(var.categories)] * len(tree.level(d)))
    return PriorSpec(total, tuple(alphas))


def stage_log_ml(n: Sequence[int], alpha: Sequence[float]) -> float:
    """Log marginal likelihood of counts ``n`` under a Dirichlet(``alpha``) prior.

    Only the ordered-sequence likelihood is returned; the multinomial
    coefficient cancels in every comparison.
    """
    if len(n) != len(alpha):
        raise ArgumentError(f"count and alpha vectors differ in length ({len(n)} vs {len(alpha)})")
    if len(n) < 2:
        raise ArgumentError("a stage needs at least two categories")
    if not any(n):
        return 0.0
    a_sum = float(sum(alpha))
    out = lgamma(a_sum) - lgamma(a_sum + sum(n))
    for nk, ak in zip(n, alpha):
        if nk:
            out += lgamma(ak + nk) - lgamma(ak)
    return out


@dataclass(frozen=True)
class StageData:
    members: tuple[int, ...]
    labels: tuple[str, ...]
    counts: tuple[int, ...]
    alpha: tuple[float, ...]

    @property
    def sample_size(self) -> int:
        return sum(self.counts)

    def log_ml(self) -> float:
        return stage_log_ml(self.counts, self.alpha)

    def merge(self, other: "StageData") -> "StageData":
        _check_labels(self, other)
        return StageData(
            tuple(sorted(self.members + other.members)),
            self.labels,
            tuple(a + b for a, b in zip(self.counts, other.counts)),
            tuple(a + b for a, b in zip(self.alpha, other.alpha)),
        )


def _check_labels(u: StageData, v: StageData) -> None:
    if u.labels != v.labels:
        raise ArgumentError(f"cannot merge stages with labels {u.labels} and {v.labels}")


def stage_data(tree: EventTree, prior: PriorSpec, members: Sequence[int]) -> StageData:
    members = tuple(sorted(members))
    labels = tree.labels(members[0])
    counts = [0] * len(labels)
    alpha = [Fraction(0)] * len(labels)
    for s in members:
        if tree.labels(s) != labels:
            raise ArgumentError(f"situation {s} does not share labels with {members[0]}")
        counts = [c + x for c, x in zip(counts, tree.counts[s])]
        alpha = [a + x for a, x in zip(alpha, prior.alphas[s])]
    return StageData(members, labels, tuple(counts), tuple(float(a) for a in alpha))


def staging_log_score(tree: EventTree, staging: Staging, prior: PriorSpec) -> float:
    """Log marginal likelihood of the data under ``staging`` (uniform model prior)."""
    staging.validate(tree)
    if len(prior.alphas) != tree.n_situations:
        raise ArgumentError("prior does not match tree")
    return sum(stage_data(tree, prior, st).log_ml() for st in staging.stages)


def merge_log_bayes_factor(u: StageData, v: StageData) -> float:
    """Log Bayes factor of the model with ``u`` and ``v`` merged against the
    model that keeps them apart."""
    _check_labels(u, v)
    return u.merge(v).log_ml() - u.log_ml() - v.log_ml()


@dataclass(frozen=True)
class EdgeProbabilities:
    """Per-situation transition probabilities in category order.

    ``prior_only`` holds the stages with no observations, whose estimates
    come from the prior alone.
    """

    estimator: str
    probs: tuple[tuple[float, ...], ...]
    prior_only: frozenset
    warnings: tuple[str, ...] = ()

    def edge(self, s: int, k: int) -> float:
        return self.probs[s][k]


def stage_probabilities(data: StageData, estimator: str) -> tuple[tuple[float, ...], Optional[str]]:
    post = [a + n for a, n in zip(data.alpha, data.counts)]
    total = sum(post)
    if estimator == "map":
        if all(p > 1 for p in post):
            denom = total - len(post)
            return tuple((p - 1) / denom for p in post), None
        warning = (
            f"stage {list(data.members)}: posterior mode undefined "
            "(a parameter <= 1), using posterior mean"
        )
        return tuple(p / total for p in post), warning
    if estimator == "mean":
        return tuple(p / total for p in post), None
    raise ArgumentError(f"unknown estimator {estimator!r}; choose from {ESTIMATORS}")


def estimate_probabilities(
    tree: EventTree, staging: Staging, prior: PriorSpec, estimator: str = "mean"
) -> EdgeProbabilities:
    if estimator not in ESTIMATORS:
        raise ArgumentError(f"unknown estimator {estimator!r}; choose from {ESTIMATORS}")
    staging.validate(tree)
    probs: list = [None] * tree.n_situations
    prior_only = set()
    warnings = []
    for stage in staging.stages:
        data = stage_data(tree, prior, stage)
        vec, warning = stage_probabilities(data, estimator)
        if warning:
            logger.warning(warning)
            warnings.append(warning)
        if data.sample_size == 0:
            prior_only.add(stage)
        for s in stage:
            probs[s] = vec
    return EdgeProbabilities(estimator, tuple(probs), frozenset(prior_only), tuple(warnings))
