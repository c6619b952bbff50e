"""Call-graph divergence analysis for mixed methods.

The call stacks of a mixed method's tracking and functional requests
are merged into one graph; nodes that appear only in tracking stacks
are the candidate points of divergence, ordered so the one closest to
the call roots comes first.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .attribution import method_name_of
from .filters import Label
from .trace import StackFrame

Node = tuple[str, str]  # (script_url, method_name)


class Participation(enum.Enum):
    TRACKING_ONLY = "tracking_only"
    FUNCTIONAL_ONLY = "functional_only"
    BOTH = "both"


@dataclass
class CallGraph:
    nodes: dict[Node, Participation] = field(default_factory=dict)
    edges: set[tuple[Node, Node]] = field(default_factory=set)  # caller -> callee
    roots: set[Node] = field(default_factory=set)


def _node_of(frame: StackFrame, positional_identity: bool) -> Node:
    return (frame.script_url, method_name_of(frame, positional_identity))


def build_call_graph(
    stacks: Iterable[tuple[Label, Sequence[StackFrame]]],
    positional_identity: bool = False,
) -> CallGraph:
    """Merge labeled stacks (most recent frame first) into one graph.

    Adjacent frames contribute caller->callee edges (frame i+1 calls
    frame i); the outermost frame of each stack is a root.  A node's
    tag is the union of the labels of the stacks containing it, so the
    graph is invariant under stack order.
    """
    graph = CallGraph()
    seen_labels: dict[Node, set[Label]] = {}
    for label, frames in stacks:
        if not frames:
            raise ValueError("stacks must be non-empty")
        nodes = [_node_of(f, positional_identity) for f in frames]
        for node in set(nodes):
            seen_labels.setdefault(node, set()).add(label)
        for i in range(len(nodes) - 1):
            graph.edges.add((nodes[i + 1], nodes[i]))  # caller -> callee
        graph.roots.add(nodes[-1])
    for node, labels in seen_labels.items():
        if labels == {Label.TRACKING}:
            graph.nodes[node] = Participation.TRACKING_ONLY
        elif labels == {Label.FUNCTIONAL}:
            graph.nodes[node] = Participation.FUNCTIONAL_ONLY
        else:
            graph.nodes[node] = Participation.BOTH
    return graph


def _root_distances(graph: CallGraph) -> dict[Node, int]:
    """Multi-source BFS along caller->callee edges."""
    adjacency: dict[Node, list[Node]] = {}
    for caller, callee in graph.edges:
        adjacency.setdefault(caller, []).append(callee)
    dist: dict[Node, int] = {r: 0 for r in graph.roots}
    queue = deque(sorted(graph.roots))
    while queue:
        node = queue.popleft()
        for nxt in adjacency.get(node, ()):
            if nxt not in dist:
                dist[nxt] = dist[node] + 1
                queue.append(nxt)
    return dist


def points_of_divergence(graph: CallGraph) -> list[Node]:
    """Tracking-only nodes ordered by distance from the nearest root
    (ties lexicographic), so the first element is the earliest
    divergence along call order.  Empty when no node diverges."""
    dist = _root_distances(graph)
    tracking_only = [
        n for n, tag in graph.nodes.items() if tag == Participation.TRACKING_ONLY
    ]
    return sorted(tracking_only, key=lambda n: (dist.get(n, len(graph.nodes)), n))
