"""The staged tree: an event tree, a staging, a prior and (optionally)
estimated transition probabilities."""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

from .errors import StateError
from .scoring import EdgeProbabilities, PriorSpec, estimate_probabilities, staging_log_score
from .staging import Staging
from .tree import EventTree

PALETTE = (
    "#8dd3c7",
    "#ffffb3",
    "#bebada",
    "#fb8072",
    "#80b1d3",
    "#fdb462",
    "#b3de69",
    "#fccde5",
    "#bc80bd",
    "#ccebc5",
    "#ffed6f",
    "#a6cee3",
)
WHITE = "#ffffff"
ZERO_GREY = "#c0c0c0"


@dataclass(frozen=True)
class StagedTree:
    tree: EventTree
    staging: Staging
    prior: PriorSpec
    probabilities: Optional[EdgeProbabilities] = None

    def __post_init__(self):
        self.staging.validate(self.tree)

    def estimated(self, estimator: str = "mean") -> "StagedTree":
        probs = estimate_probabilities(self.tree, self.staging, self.prior, estimator)
        return replace(self, probabilities=probs)

    def require_probabilities(self) -> EdgeProbabilities:
        if self.probabilities is None:
            raise StateError("transition probabilities have not been estimated")
        return self.probabilities

    def log_score(self) -> float:
        return staging_log_score(self.tree, self.staging, self.prior)

    def stage_colours(self) -> dict:
        """Map each stage to a fill colour.

        Stages with two or more members get palette colours, larger stages
        first and then by smallest member; the palette cycles when exhausted.
        Singletons are white and zero-sample stages grey.
        """
        coloured = [
            st for st in self.staging.stages
            if len(st) > 1 and not self.staging.is_forbidden(st)
        ]
        coloured.sort(key=lambda st: (-len(st), st[0]))
        colours = {st: PALETTE[i % len(PALETTE)] for i, st in enumerate(coloured)}
        for st in self.staging.stages:
            if self.staging.is_forbidden(st):
                colours[st] = ZERO_GREY
            else:
                colours.setdefault(st, WHITE)
        return colours
