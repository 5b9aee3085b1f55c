"""Model selection over stagings: agglomerative hierarchical clustering
(AHC) under hyperstage constraints, the zero-sample stage rule, and an
exhaustive search used as an oracle on small trees."""
from __future__ import annotations

import heapq
import itertools
import logging
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

from .errors import ArgumentError, SizeError
from .scoring import PriorSpec, merge_log_bayes_factor, stage_data, staging_log_score
from .staged import StagedTree
from .staging import Hyperstage, Staging
from .tree import EventTree

logger = logging.getLogger(__name__)

POLICIES = ("same-labels", "same-variable")


def default_hyperstage(tree: EventTree, policy: str = "same-labels") -> Hyperstage:
    """Group situations that may share a stage.

    ``same-labels`` pools every situation with the same outgoing label
    sequence, whatever its depth; ``same-variable`` also requires equal depth.
    """
    if policy not in POLICIES:
        raise ArgumentError(f"unknown hyperstage policy {policy!r}; choose from {POLICIES}")
    groups: dict = {}
    for s in tree.situations:
        key = tree.labels(s) if policy == "same-labels" else (tree.depth(s), tree.labels(s))
        groups.setdefault(key, []).append(s)
    return Hyperstage(tuple(groups.values()))


def apply_zero_sample_rule(
    tree: EventTree, staging: Staging, hyperstage: Hyperstage
) -> Staging:
    """Collect the unobserved stages of each hyperstage class into one
    forbidden stage. Stages with any observation are left as they are."""
    if not hyperstage.respected_by(staging):
        raise ArgumentError("staging crosses hyperstage classes")
    zero: dict = {}
    kept = []
    for stage in staging.stages:
        if sum(tree.sample_size(s) for s in stage) == 0:
            zero.setdefault(hyperstage.class_index(stage[0]), []).extend(stage)
        else:
            kept.append(stage)
    forbidden = [tuple(sorted(m)) for m in zero.values()]
    return Staging(tuple(kept) + tuple(forbidden), frozenset(forbidden))


def initial_zero_sample_staging(tree: EventTree, hyperstage: Hyperstage) -> Staging:
    return apply_zero_sample_rule(tree, Staging.singletons(tree.situations), hyperstage)


@dataclass(frozen=True)
class TraceStep:
    first: tuple[int, ...]
    second: tuple[int, ...]
    log_bayes_factor: float
    log_score: float


@dataclass(frozen=True)
class SelectionTrace:
    initial_log_score: float
    steps: tuple[TraceStep, ...]

    @property
    def final_log_score(self) -> float:
        return self.steps[-1].log_score if self.steps else self.initial_log_score

    def lines(self) -> list[str]:
        out = [f"initial\tlog_score={self.initial_log_score:.10f}"]
        for i, st in enumerate(self.steps, start=1):
            out.append(
                f"merge {i}\t{list(st.first)}+{list(st.second)}"
                f"\tlog_bf={st.log_bayes_factor:.10f}\tlog_score={st.log_score:.10f}"
            )
        return out


def _prepare(tree, prior, initial, hyperstage):
    if hyperstage is None:
        hyperstage = default_hyperstage(tree)
    if initial is None:
        initial = initial_zero_sample_staging(tree, hyperstage)
    initial.validate(tree)
    if not hyperstage.respected_by(initial):
        raise ArgumentError("initial staging crosses hyperstage classes")
    if len(prior.alphas) != tree.n_situations:
        raise ArgumentError("prior does not match tree")
    return initial, hyperstage


def ahc_select(
    tree: EventTree,
    prior: PriorSpec,
    initial: Optional[Staging] = None,
    hyperstage: Optional[Hyperstage] = None,
    estimator: Optional[str] = "mean",
) -> tuple[StagedTree, SelectionTrace]:
    """Greedy agglomerative search.

    Repeatedly merges the eligible pair of stages with the largest log Bayes
    factor while it is positive. Ties go to the pair whose smallest members
    sort first. Forbidden stages never take part in a merge.
    """
    initial, hyperstage = _prepare(tree, prior, initial, hyperstage)
    score = staging_log_score(tree, initial, prior)
    initial_score = score

    # Stage ids are never reused, so stale heap entries are detectable.
    alive: dict[int, object] = {}
    by_class: dict[int, set[int]] = {}
    fixed = []
    ids = itertools.count()
    for stage in initial.stages:
        if initial.is_forbidden(stage):
            fixed.append(stage)
            continue
        sid = next(ids)
        alive[sid] = stage_data(tree, prior, stage)
        by_class.setdefault(hyperstage.class_index(stage[0]), set()).add(sid)

    heap: list = []

    def push(a: int, b: int) -> None:
        u, v = alive[a], alive[b]
        bf = merge_log_bayes_factor(u, v)
        if bf > 0:
            if u.members[0] > v.members[0]:
                a, b, u, v = b, a, v, u
            heapq.heappush(heap, (-bf, u.members[0], v.members[0], a, b))

    for members in by_class.values():
        for a, b in itertools.combinations(sorted(members), 2):
            push(a, b)

    steps = []
    while heap:
        neg_bf, _, _, a, b = heapq.heappop(heap)
        if a not in alive or b not in alive:
            continue
        u, v = alive.pop(a), alive.pop(b)
        cls = by_class[hyperstage.class_index(u.members[0])]
        cls.discard(a)
        cls.discard(b)
        score += -neg_bf
        steps.append(TraceStep(u.members, v.members, -neg_bf, score))
        logger.debug("merged %s + %s (log BF %.6f)", u.members, v.members, -neg_bf)
        new = next(ids)
        alive[new] = u.merge(v)
        for other in sorted(cls):
            push(new, other)
        cls.add(new)

    staging = Staging(
        tuple(d.members for d in alive.values()) + tuple(fixed), initial.forbidden
    )
    st = StagedTree(tree, staging, prior)
    if estimator is not None:
        st = st.estimated(estimator)
    return st, SelectionTrace(initial_score, tuple(steps))


def set_partitions(items: Sequence) -> Iterator[list[list]]:
    """Every partition of ``items`` into non-empty blocks, each exactly once."""
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        yield [[first]] + part
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]


def _better(score, blocks, best_score, best_blocks) -> bool:
    if score != best_score:
        return score > best_score
    if len(blocks) != len(best_blocks):
        return len(blocks) > len(best_blocks)
    return blocks < best_blocks


def exhaustive_select(
    tree: EventTree,
    prior: PriorSpec,
    hyperstage: Optional[Hyperstage] = None,
    max_situations_per_class: int = 8,
    initial: Optional[Staging] = None,
    estimator: Optional[str] = "mean",
) -> StagedTree:
    """Highest-scoring staging coarsening ``initial`` within each hyperstage
    class, found by enumerating set partitions.

    The score is a sum over classes, so each class is optimised on its own.
    Among equal scores the partition with more stages wins, then the
    lexicographically smallest.
    """
    initial, hyperstage = _prepare(tree, prior, initial, hyperstage)
    for cls in hyperstage.classes:
        if len(cls) > max_situations_per_class:
            raise SizeError(
                f"hyperstage class of {len(cls)} situations exceeds the "
                f"exhaustive cap of {max_situations_per_class}"
            )
    atoms_by_class: dict = {}
    stages = []
    for stage in initial.stages:
        if initial.is_forbidden(stage):
            stages.append(stage)
        else:
            atoms_by_class.setdefault(hyperstage.class_index(stage[0]), []).append(stage)
    for atoms in atoms_by_class.values():
        data = {a: stage_data(tree, prior, a) for a in atoms}
        best = None
        for part in set_partitions(atoms):
            blocks = []
            score = 0.0
            for block in part:
                merged = data[block[0]]
                for other in block[1:]:
                    merged = merged.merge(data[other])
                score += merged.log_ml()
                blocks.append(merged.members)
            blocks = tuple(sorted(blocks))
            if best is None or _better(score, blocks, *best):
                best = (score, blocks)
        stages.extend(best[1])
    staging = Staging(tuple(stages), initial.forbidden)
    st = StagedTree(tree, staging, prior)
    if estimator is not None:
        st = st.estimated(estimator)
    return st
