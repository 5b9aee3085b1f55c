"""Chain event graphs: position coalescence, graph construction and export
(Graphviz DOT text and a JSON structural dump)."""
from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

from .data import VariableSchema
from .errors import ArgumentError, ParseError
from .scoring import PriorSpec
from .staged import WHITE, ZERO_GREY, StagedTree
from .staging import Staging
from .tree import EventTree

SINK = "w_inf"
FORMAT_TAG = "stagedlong/1"


def compute_positions(st: StagedTree) -> tuple[tuple[int, ...], ...]:
    """Partition situations into positions.

    Works upwards from the deepest level: two situations share a position
    when they share a stage and, label by label, their children are both
    leaves or share a position. Positions are ordered by smallest member.
    """
    tree, staging = st.tree, st.staging
    position_of: dict[int, object] = {}
    groups: dict[tuple, list[int]] = {}
    for d in reversed(range(tree.n_levels)):
        for s in tree.level(d):
            targets = tuple(
                "sink" if tree.is_leaf(c) else position_of[c] for c in tree.children(s)
            )
            key = (staging.stage_index(s), targets)
            groups.setdefault(key, []).append(s)
            position_of[s] = key
    return tuple(sorted(tuple(sorted(m)) for m in groups.values()))


@dataclass(frozen=True)
class CegVertex:
    id: str
    members: tuple[int, ...]
    stage: int
    colour: str
    zero_sample: bool


@dataclass(frozen=True)
class CegEdge:
    source: str
    target: str
    label: str
    probability: float
    count: int

    @property
    def zero_sample(self) -> bool:
        return self.count == 0


@dataclass(frozen=True)
class Ceg:
    staged_tree: StagedTree
    vertices: tuple[CegVertex, ...]
    edges: tuple[CegEdge, ...]

    @property
    def root(self) -> str:
        return self.vertices[0].id

    def vertex(self, vid: str) -> CegVertex:
        for v in self.vertices:
            if v.id == vid:
                return v
        raise ArgumentError(f"no vertex {vid!r}")

    def out_edges(self, vid: str) -> list[CegEdge]:
        return [e for e in self.edges if e.source == vid]

    def position_of(self) -> dict[int, str]:
        return {s: v.id for v in self.vertices for s in v.members}


def build_ceg(st: StagedTree) -> Ceg:
    probs = st.require_probabilities()
    tree, staging = st.tree, st.staging
    positions = compute_positions(st)
    vid = {}
    for i, pos in enumerate(positions):
        for s in pos:
            vid[s] = f"w{i}"
    colours = st.stage_colours()
    vertices, edges = [], []
    for i, pos in enumerate(positions):
        stage = staging.stage_of(pos[0])
        vertices.append(
            CegVertex(
                f"w{i}",
                pos,
                staging.stage_index(pos[0]),
                colours[stage],
                staging.is_forbidden(stage),
            )
        )
        rep = pos[0]
        for k, label in enumerate(tree.labels(rep)):
            child = tree.child(rep, k)
            target = SINK if tree.is_leaf(child) else vid[child]
            count = sum(tree.counts[s][k] for s in pos)
            edges.append(CegEdge(f"w{i}", target, label, probs.probs[rep][k], count))
    return Ceg(st, tuple(vertices), tuple(edges))


def _quote(text: str) -> str:
    return '"' + str(text).replace("\\", "\\\\").replace('"', '\\"') + '"'


def _node_attrs(colour: str, zero: bool) -> str:
    if zero:
        return f'shape=square, style=filled, fillcolor={_quote(ZERO_GREY)}, color="grey40"'
    return f"shape=circle, style=filled, fillcolor={_quote(colour)}"


def _edge_attrs(label: str, value, zero: bool) -> str:
    attrs = f"label={_quote(f'{label} ({value})')}"
    if zero:
        attrs += ', style=dotted, color="grey50", fontcolor="grey50"'
    return attrs


def export_graph(g: Union[Ceg, StagedTree], rankdir: str = "LR") -> str:
    """Render a CEG or staged tree as Graphviz DOT.

    Stage colours fill round vertices (white for singleton stages);
    zero-sample stages become grey squares and zero-count edges grey dotted
    lines. Edge labels read ``category (probability)`` to two decimals, or
    ``category (count)`` for a staged tree without estimates.
    """
    lines = []
    if isinstance(g, Ceg):
        lines.append("digraph CEG {")
        lines.append(f"  rankdir={rankdir};")
        lines.append('  node [fontname="Helvetica"];')
        lines.append('  edge [fontname="Helvetica"];')
        for v in g.vertices:
            lines.append(f"  {v.id} [label={_quote(v.id)}, {_node_attrs(v.colour, v.zero_sample)}];")
        lines.append(f'  {SINK} [label="w∞", {_node_attrs(WHITE, False)}];')
        for e in g.edges:
            lines.append(
                f"  {e.source} -> {e.target} [{_edge_attrs(e.label, f'{e.probability:.2f}', e.zero_sample)}];"
            )
    elif isinstance(g, StagedTree):
        tree, staging = g.tree, g.staging
        colours = g.stage_colours()
        probs = g.probabilities
        lines.append("digraph StagedTree {")
        lines.append(f"  rankdir={rankdir};")
        lines.append('  node [fontname="Helvetica"];')
        lines.append('  edge [fontname="Helvetica"];')
        for s in tree.situations:
            stage = staging.stage_of(s)
            attrs = _node_attrs(colours[stage], staging.is_forbidden(stage))
            lines.append(f"  s{s} [label={_quote(f's{s}')}, {attrs}];")
        for leaf in tree.leaves:
            lines.append(f"  s{leaf} [label={_quote(f's{leaf}')}, shape=circle, style=filled, fillcolor=\"#ffffff\"];")
        for s, child, label, count in tree.edges():
            k = tree.labels(s).index(label)
            value = f"{probs.probs[s][k]:.2f}" if probs is not None else str(count)
            lines.append(f"  s{s} -> s{child} [{_edge_attrs(label, value, count == 0)}];")
    else:
        raise ArgumentError(f"cannot export object of type {type(g).__name__}")
    lines.append("}")
    return "\n".join(lines) + "\n"


def to_dict(st: StagedTree) -> dict:
    """Structural dump of a staged tree and, when estimated, its CEG.

    Alphas are written as exact fraction strings so the dump round-trips
    through :func:`staged_tree_from_dict`.
    """
    tree, staging, prior = st.tree, st.staging, st.prior
    probs = st.probabilities
    colours = st.stage_colours()
    ceg = build_ceg(st) if probs is not None else None
    pos = ceg.position_of() if ceg else {}
    stages = []
    for i, stage in enumerate(staging.stages):
        counts = [sum(tree.counts[s][k] for s in stage) for k in range(len(tree.labels(stage[0])))]
        stages.append(
            {
                "id": i,
                "members": list(stage),
                "labels": list(tree.labels(stage[0])),
                "counts": counts,
                "sample_size": sum(counts),
                "probabilities": list(probs.probs[stage[0]]) if probs else None,
                "forbidden": staging.is_forbidden(stage),
                "prior_only": sum(counts) == 0,
                "colour": colours[stage],
            }
        )
    out = {
        "format": FORMAT_TAG,
        "variables": [
            {"name": v.name, "categories": list(v.categories), "role": v.role, "time": v.time}
            for v in tree.variables
        ],
        "alpha_bar": str(prior.alpha_bar),
        "estimator": probs.estimator if probs else None,
        "log_score": st.log_score(),
        "situations": [
            {
                "id": s,
                "name": f"s{s}",
                "depth": tree.depth(s),
                "variable": tree.variables[tree.depth(s)].name,
                "path": list(tree.path(s)),
                "counts": list(tree.counts[s]),
                "alpha": [str(a) for a in prior.alphas[s]],
                "stage": staging.stage_index(s),
                "position": pos.get(s),
            }
            for s in tree.situations
        ],
        "stages": stages,
        "warnings": list(probs.warnings) if probs else [],
    }
    if ceg is not None:
        out["ceg"] = {
            "root": ceg.root,
            "sink": SINK,
            "vertices": [
                {
                    "id": v.id,
                    "members": list(v.members),
                    "stage": v.stage,
                    "colour": v.colour,
                    "zero_sample": v.zero_sample,
                }
                for v in ceg.vertices
            ],
            "edges": [
                {
                    "source": e.source,
                    "target": e.target,
                    "label": e.label,
                    "probability": e.probability,
                    "count": e.count,
                    "zero_sample": e.zero_sample,
                }
                for e in ceg.edges
            ],
        }
    return out


def dumps(st: StagedTree) -> str:
    return json.dumps(to_dict(st), indent=2, sort_keys=True) + "\n"


def staged_tree_from_dict(doc: dict) -> StagedTree:
    if doc.get("format") != FORMAT_TAG:
        raise ParseError(f"not a {FORMAT_TAG} document")
    try:
        variables = tuple(
            VariableSchema(v["name"], tuple(v["categories"]), v.get("role", "other"), v.get("time"))
            for v in doc["variables"]
        )
        sits = sorted(doc["situations"], key=lambda x: x["id"])
        tree = EventTree(variables, tuple(tuple(x["counts"]) for x in sits))
        prior = PriorSpec(
            Fraction(doc["alpha_bar"]),
            tuple(tuple(Fraction(a) for a in x["alpha"]) for x in sits),
        )
        stages = [tuple(st["members"]) for st in doc["stages"]]
        forbidden = frozenset(tuple(st["members"]) for st in doc["stages"] if st["forbidden"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed staged tree document: {exc}") from None
    st = StagedTree(tree, Staging(tuple(stages), forbidden), prior)
    if doc.get("estimator"):
        st = st.estimated(doc["estimator"])
    return st


def loads(text: str) -> StagedTree:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from None
    return staged_tree_from_dict(doc)
