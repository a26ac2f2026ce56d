"""Graphviz DOT renderings of nets, products, prefixes and exploration trees.

Output is deterministic: nodes appear in id order and edges in arc order, so
two exports of the same object compare equal as text.
"""

from __future__ import annotations

import json
from typing import Iterable

from .pdnet import ArcKind, PDNet

_SYNC = {ArcKind.ObservationArc, ArcKind.SchedulerArc}


def _q(s: str) -> str:
    return json.dumps(s, ensure_ascii=False)


def net_to_dot(net: PDNet, highlight_sync: bool = False) -> str:
    """Places as ellipses and transitions as boxes, both labelled ``name:kind``.

    A read arc (input and output arc between the same pair, token unchanged)
    is drawn once with arrowheads at both ends.  With ``highlight_sync`` the
    observation and scheduler arcs added by synchronization are coloured."""
    lines = [f"digraph {_q(net.name)} {{", "  rankdir=TB;"]
    for p in net.places:
        extra = ",peripheries=2" if p.acceptable else ""
        lines.append(f"  p{p.id} [shape=ellipse,label={_q(f'{p.name}:{p.kind.value}')}{extra}];")
    for t in net.transitions:
        lines.append(f"  t{t.id} [shape=box,label={_q(f'{t.name}:{t.kind.value}')}];")
    for a in net.arcs:
        read = net.is_read_arc(a.place, a.transition)
        if read and not a.to_transition:
            continue  # drawn with its input half
        style = []
        if read:
            style.append("dir=both")
        if highlight_sync and a.kind in _SYNC:
            style.append("color=blue")
        attrs = f" [{','.join(style)}]" if style else ""
        if a.to_transition:
            lines.append(f"  p{a.place} -> t{a.transition}{attrs};")
        else:
            lines.append(f"  t{a.transition} -> p{a.place}{attrs};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _names(net: PDNet, ts: Iterable[int]) -> str:
    return "{" + ",".join(net.transitions[t].name for t in sorted(ts)) + "}"


def tree_to_dot(tree: list, net: PDNet) -> str:
    """Exploration tree: left edges solid, right edges dashed, nodes labelled
    with the configuration size, the delayed set and the guide set."""
    lines = ["digraph tree {", "  rankdir=TB;"]
    for n in tree:
        label = f"{n.size}/{_names(net, n.kappa)}/{_names(net, n.eta)}"
        shape = {"terminal": "doublecircle", "blocked": "octagon", "duplicate": "diamond"}.get(n.status, "ellipse")
        lines.append(f"  n{n.id} [shape={shape},label={_q(label)}];")
    for n in tree:
        if n.parent is None:
            continue
        style = ",style=dashed" if n.side == "right" else ""
        tname = net.transitions[n.t].name if n.t is not None else ""
        lines.append(f"  n{n.parent} -> n{n.id} [label={_q(tname)}{style}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def dot_counts(text: str) -> tuple[int, int]:
    """(node statements, edge statements) of a DOT text produced here."""
    nodes = edges = 0
    for line in text.splitlines():
        s = line.strip()
        if "->" in s:
            edges += 1
        elif s.endswith("];") and not s.startswith(("graph", "node", "edge")):
            nodes += 1
    return nodes, edges
