"""Stratified event trees with observed edge counts.

Vertices are numbered breadth-first: the root is 0, then the situations of
depth 1 in category order, and so on down to the leaves. Depth ``d`` holds
the situations that resolve variable ``d`` of the ordering. Because the tree
is the full product of the category lists, children are located by
arithmetic instead of stored adjacency.
"""
from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass, field
from math import prod
from typing import Iterator, Optional, Sequence

from .data import MISSING, Dataset, VariableSchema, complete_cases
from .errors import ArgumentError, ValidationError


@dataclass(frozen=True)
class EventTree:
    variables: tuple[VariableSchema, ...]
    counts: tuple[tuple[int, ...], ...]
    _offsets: tuple[int, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "counts", tuple(tuple(c) for c in self.counts))
        if not self.variables:
            raise ArgumentError("an event tree needs at least one variable")
        offsets = [0]
        size = 1
        for var in self.variables:
            offsets.append(offsets[-1] + size)
            size *= len(var.categories)
        offsets.append(offsets[-1] + size)
        object.__setattr__(self, "_offsets", tuple(offsets))
        if len(self.counts) != self.n_situations:
            raise ValidationError(
                f"expected counts for {self.n_situations} situations, got {len(self.counts)}"
            )
        for s, c in enumerate(self.counts):
            if len(c) != len(self.labels(s)) or any(x < 0 for x in c):
                raise ValidationError(f"invalid counts at situation {s}: {c}")

    @property
    def n_levels(self) -> int:
        return len(self.variables)

    @property
    def n_situations(self) -> int:
        return self._offsets[self.n_levels]

    @property
    def n_vertices(self) -> int:
        return self._offsets[-1]

    @property
    def situations(self) -> range:
        return range(self.n_situations)

    @property
    def leaves(self) -> range:
        return range(self.n_situations, self.n_vertices)

    @property
    def variable_names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    def level(self, depth: int) -> range:
        return range(self._offsets[depth], self._offsets[depth + 1])

    def depth(self, v: int) -> int:
        if not 0 <= v < self.n_vertices:
            raise ArgumentError(f"vertex {v} not in tree")
        return bisect_right(self._offsets, v) - 1

    def is_leaf(self, v: int) -> bool:
        return v >= self.n_situations

    def variable_at(self, s: int) -> VariableSchema:
        return self.variables[self.depth(s)]

    def labels(self, s: int) -> tuple[str, ...]:
        return self.variable_at(s).categories

    def child(self, s: int, k: int) -> int:
        d = self.depth(s)
        local = s - self._offsets[d]
        return self._offsets[d + 1] + local * len(self.variables[d].categories) + k

    def children(self, s: int) -> tuple[int, ...]:
        return tuple(self.child(s, k) for k in range(len(self.labels(s))))

    def parent(self, v: int) -> Optional[tuple[int, int]]:
        """Return ``(parent, category index)``, or ``None`` for the root."""
        d = self.depth(v)
        if d == 0:
            return None
        k_par = len(self.variables[d - 1].categories)
        local = v - self._offsets[d]
        return self._offsets[d - 1] + local // k_par, local % k_par

    def path_indices(self, v: int) -> tuple[int, ...]:
        d = self.depth(v)
        local = v - self._offsets[d]
        idx = []
        for var in reversed(self.variables[:d]):
            k = len(var.categories)
            idx.append(local % k)
            local //= k
        return tuple(reversed(idx))

    def path(self, v: int) -> tuple[str, ...]:
        return tuple(
            var.categories[i] for var, i in zip(self.variables, self.path_indices(v))
        )

    def vertex_at(self, indices: Sequence[int]) -> int:
        v = 0
        for k in indices:
            v = self.child(v, k)
        return v

    def sample_size(self, s: int) -> int:
        """Number of observations of the event resolved at ``s``."""
        return sum(self.counts[s])

    def incoming_count(self, v: int) -> int:
        par = self.parent(v)
        if par is None:
            return self.sample_size(0)
        return self.counts[par[0]][par[1]]

    def edges(self) -> Iterator[tuple[int, int, str, int]]:
        """Yield ``(parent, child, label, count)`` in vertex order."""
        for s in self.situations:
            for k, label in enumerate(self.labels(s)):
                yield s, self.child(s, k), label, self.counts[s][k]

    def same_topology(self, other: "EventTree") -> bool:
        return [v.categories for v in self.variables] == [
            v.categories for v in other.variables
        ]


def build_event_tree(
    data: Dataset, order: Sequence[str], complete_case: bool = False
) -> EventTree:
    """Count the rows of ``data`` along the product tree over ``order``.

    Each row adds one to every edge on its path up to, not including, its
    first missing value in ``order``. With ``complete_case`` rows that miss
    any ordered variable are dropped instead.
    """
    order = list(order)
    if not order:
        raise ArgumentError("variable order must be non-empty")
    if len(set(order)) != len(order):
        raise ArgumentError(f"variable order has duplicates: {order}")
    variables = tuple(data.variable(name) for name in order)
    for var in variables:
        if len(var.categories) < 2:
            raise ValidationError(
                f"variable {var.name!r} needs at least two categories to branch"
            )
    if complete_case:
        data = complete_cases(data, order)
    cols = [data.names.index(name) for name in order]
    lookups = [{c: k for k, c in enumerate(var.categories)} for var in variables]

    sizes = [len(v.categories) for v in variables]
    offsets = [0]
    for d in range(len(variables)):
        offsets.append(offsets[-1] + prod(sizes[:d]))
    counts = [[0] * sizes[d] for d in range(len(variables)) for _ in range(prod(sizes[:d]))]
    for row in data.rows:
        local = 0
        for d, (col, lookup) in enumerate(zip(cols, lookups)):
            value = row[col]
            if value is MISSING:
                break
            k = lookup[value]
            counts[offsets[d] + local][k] += 1
            local = local * sizes[d] + k
    return EventTree(variables, tuple(tuple(c) for c in counts))
