"""Derived node predicates computed from graph structure."""

from __future__ import annotations

from .pdg import NodeKind, Pdg


def compute_output_ignored(g: Pdg, node_id: str) -> bool:
    """True iff the action's result is never produced or never used.

    Holds when the node has no outgoing ``def`` edge, or when its ``def``
    target has no outgoing edges of its own.
    """
    node = g.node(node_id)
    if node.kind is not NodeKind.ACTION:
        raise ValueError(f"output-ignored is defined on action nodes, "
                         f"got data node {node_id!r}")
    defs = [e for e in g.out_edges(node_id) if e.label.kind == "def"]
    if not defs:
        return True
    return all(not g.out_edges(e.dst) for e in defs)


def compute_trans_control_dep(g: Pdg, node_id: str) -> frozenset:
    """Labels of action nodes from which ``node_id`` is reachable over
    ``dep`` edges, following them transitively against their direction."""
    g.node(node_id)
    labels = set()
    seen = {node_id}
    stack = [node_id]
    while stack:
        current = stack.pop()
        for e in g.in_edges(current):
            if e.label.kind != "dep":
                continue
            src = g.node(e.src)
            if src.label:
                labels.add(src.label)
            if e.src not in seen:
                seen.add(e.src)
                stack.append(e.src)
    return frozenset(labels)
