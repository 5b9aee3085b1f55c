"""Stagings (partitions of situations) and hyperstage constraints."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import ArgumentError


def _canonical(blocks: Iterable[Iterable[int]]) -> tuple[tuple[int, ...], ...]:
    out = [tuple(sorted(b)) for b in blocks]
    if any(not b for b in out):
        raise ArgumentError("stages must be non-empty")
    return tuple(sorted(out))


@dataclass(frozen=True)
class Staging:
    """A partition of situations into stages.

    ``stages`` is canonical: members sorted, stages ordered by their
    smallest member. ``forbidden`` lists the zero-sample stages, which no
    selection routine may merge.
    """

    stages: tuple[tuple[int, ...], ...]
    forbidden: frozenset = frozenset()
    _lookup: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        stages = _canonical(self.stages)
        object.__setattr__(self, "stages", stages)
        forbidden = frozenset(tuple(sorted(b)) for b in self.forbidden)
        object.__setattr__(self, "forbidden", forbidden)
        lookup = {}
        for i, stage in enumerate(stages):
            for s in stage:
                if s in lookup:
                    raise ArgumentError(f"situation {s} appears in two stages")
                lookup[s] = i
        object.__setattr__(self, "_lookup", lookup)
        if not forbidden <= set(stages):
            raise ArgumentError("forbidden blocks must be stages of the staging")

    @classmethod
    def singletons(cls, situations: Iterable[int]) -> "Staging":
        return cls(tuple((s,) for s in situations))

    def stage_index(self, s: int) -> int:
        return self._lookup[s]

    def stage_of(self, s: int) -> tuple[int, ...]:
        return self.stages[self._lookup[s]]

    def is_forbidden(self, stage: Sequence[int]) -> bool:
        return tuple(stage) in self.forbidden

    def situations(self) -> list[int]:
        return sorted(self._lookup)

    def validate(self, tree) -> None:
        if sorted(self._lookup) != list(tree.situations):
            raise ArgumentError("staging does not cover exactly the tree's situations")
        for stage in self.stages:
            labels = tree.labels(stage[0])
            if any(tree.labels(s) != labels for s in stage[1:]):
                raise ArgumentError(
                    f"stage {stage} mixes situations with different edge labels"
                )

    def refines(self, other: "Staging") -> bool:
        """True when every stage of ``self`` lies inside a stage of ``other``."""
        return all(
            len({other.stage_index(s) for s in stage}) == 1 for stage in self.stages
        )

    def merged(self, a: Sequence[int], b: Sequence[int]) -> "Staging":
        a, b = tuple(a), tuple(b)
        stages = [st for st in self.stages if st not in (a, b)] + [a + b]
        return Staging(stages, self.forbidden)


@dataclass(frozen=True)
class Hyperstage:
    """Merge-eligibility classes: only situations in one class may share a stage."""

    classes: tuple[tuple[int, ...], ...]
    _lookup: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        classes = _canonical(self.classes)
        object.__setattr__(self, "classes", classes)
        lookup = {}
        for i, cls in enumerate(classes):
            for s in cls:
                if s in lookup:
                    raise ArgumentError(f"situation {s} appears in two hyperstage classes")
                lookup[s] = i
        object.__setattr__(self, "_lookup", lookup)

    def class_index(self, s: int) -> int:
        return self._lookup[s]

    def respected_by(self, staging: Staging) -> bool:
        return all(
            len({self._lookup[s] for s in stage}) == 1 for stage in staging.stages
        )
