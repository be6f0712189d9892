"""Valuated and unified annotated PDGs.

A valuated PDG pins some nodes to named free variables: it is one witness
of a quantified conjunct. A unified annotated PDG is the merge of several
such graphs along an alignment; its nodes carry joined predicate bundles
and remember which source examples contributed them (presence). Projecting
onto the nodes present in every source yields a conjunct that all sources
satisfy.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Tuple

from .align.problem import Alignment, GraphView, ViewNode
from .lattice import NodePredicates
from .pdg import ChangeTag, EdgeLabel, Node, NodeKind, Pdg


class MergeError(ValueError):
    pass


class ProjectionError(ValueError):
    """A node bound to a free variable fell out of a projection."""


@dataclass(frozen=True)
class Vpdg:
    graph: Pdg
    valuation: Dict[str, str]  # node id -> variable name, injective
    source: str

    def check(self):
        vals = list(self.valuation.values())
        if len(set(vals)) != len(vals):
            raise ValueError("valuation maps two nodes to one variable")
        for node_id in self.valuation:
            self.graph.node(node_id)

    def free_vars(self) -> frozenset:
        return frozenset(self.valuation.values())


@dataclass
class UNode:
    id: str
    kind: NodeKind
    tag: ChangeTag
    preds: NodePredicates
    presence: Dict[str, str]  # source -> contributing node id

    def label_value(self) -> Optional[str]:
        return self.preds.label.value if self.preds.label.tag == "exact" else None


@dataclass
class UEdge:
    src: str
    dst: str
    label: EdgeLabel
    presence: Dict[str, Tuple[str, str]]  # source -> original (src, dst)


class Uapdg:
    def __init__(self, nodes: List[UNode], edges: List[UEdge],
                 m_f: Dict[str, str], m_b: Dict[str, str],
                 sources: Tuple[str, ...]):
        self.nodes = list(nodes)
        self.edges = list(edges)
        self.m_f = dict(m_f)
        self.m_b = dict(m_b)
        self.sources = tuple(sources)
        self._by_id = {n.id: n for n in self.nodes}
        overlap = set(self.m_f) & set(self.m_b)
        if overlap:
            raise ValueError(f"nodes {sorted(overlap)} both free and bound")
        for n in self.nodes:
            if n.id not in self.m_f and n.id not in self.m_b:
                raise ValueError(f"node {n.id} has no variable")

    def node(self, node_id: str) -> UNode:
        return self._by_id[node_id]

    def var_of(self, node_id: str) -> str:
        return self.m_f.get(node_id) or self.m_b[node_id]

    def free_vars(self) -> frozenset:
        return frozenset(self.m_f.values())

    def frozen_node_for(self, var: str) -> Optional[str]:
        for node_id, v in self.m_f.items():
            if v == var:
                return node_id
        return None

    def as_view(self) -> GraphView:
        nodes = [ViewNode(n.id, n.kind, n.label_value(), n.tag)
                 for n in self.nodes]
        edges = [(e.src, e.dst, e.label) for e in self.edges]
        return GraphView(nodes, edges)

    def valuation_for(self, source: str,
                      node_ids: Optional[Iterable[str]] = None) -> Dict[str, str]:
        """Map the source example's own node ids to this graph's variables,
        optionally restricted to a subset of merged nodes."""
        wanted = set(node_ids) if node_ids is not None else None
        result = {}
        for n in self.nodes:
            if source not in n.presence:
                continue
            if wanted is not None and n.id not in wanted:
                continue
            result[n.presence[source]] = self.var_of(n.id)
        return result

    def render(self) -> str:
        from .lattice import predicates_to_obj

        lines = []
        for n in self.nodes:
            var = self.var_of(n.id)
            preds = predicates_to_obj(n.preds)
            anns = ", ".join(f"{k}={v}" for k, v in preds.items())
            frozen = " frozen" if n.id in self.m_f else ""
            lines.append(f"node {var} [{n.kind.value}{frozen}] "
                         f"present in {len(n.presence)}/{len(self.sources)}"
                         + (f" :: {anns}" if anns else ""))
        for e in self.edges:
            lines.append(f"edge {self.var_of(e.src)} -{e.label.text()}-> "
                         f"{self.var_of(e.dst)} "
                         f"present in {len(e.presence)}/{len(self.sources)}")
        return "\n".join(lines)


def from_vpdg(v: Vpdg) -> Uapdg:
    v.check()
    nodes = []
    m_f, m_b = {}, {}
    rename = {}
    counter = 0
    for node in v.graph.nodes:
        uid = f"m{len(nodes)}"
        rename[node.id] = uid
        nodes.append(UNode(
            id=uid, kind=node.kind, tag=node.change_tag,
            preds=NodePredicates.from_node(v.graph, node),
            presence={v.source: node.id}))
        if node.id in v.valuation:
            m_f[uid] = v.valuation[node.id]
        else:
            m_b[uid] = f"b{counter}"
            counter += 1
    edges = [UEdge(rename[e.src], rename[e.dst], e.label,
                   {v.source: (e.src, e.dst)}) for e in v.graph.edges]
    return Uapdg(nodes, edges, m_f, m_b, (v.source,))


def merge(a1: Uapdg, a2: Uapdg, al: Alignment) -> Uapdg:
    """Combine two graphs over one alignment; predicates join point-wise,
    presence unions, and nodes frozen to one variable collapse."""
    if a1.free_vars() != a2.free_vars():
        raise MergeError("operands declare different free-variable sets")
    if set(a1.sources) & set(a2.sources):
        raise MergeError("operands share sources")
    for node_id, var in a1.m_f.items():
        other = a2.frozen_node_for(var)
        if al.node_map.get(node_id) != other:
            raise MergeError(
                f"alignment violates frozen-variable pins: {var} maps "
                f"{node_id!r} to {al.node_map.get(node_id)!r}, expected "
                f"{other!r}")

    mapped_rev = {v: k for k, v in al.node_map.items()}
    nodes: List[UNode] = []
    where: Dict[Tuple[int, str], str] = {}  # (side, old id) -> new id
    m_f: Dict[str, str] = {}
    for n1 in a1.nodes:
        uid = f"m{len(nodes)}"
        where[(1, n1.id)] = uid
        if n1.id in al.node_map:
            n2 = a2.node(al.node_map[n1.id])
            where[(2, n2.id)] = uid
            if n1.kind is not n2.kind:
                raise MergeError(
                    f"alignment pairs {n1.id} and {n2.id} across kinds")
            tag = n1.tag if n1.tag is n2.tag else ChangeTag.NONE
            nodes.append(UNode(uid, n1.kind, tag, n1.preds.join(n2.preds),
                               {**n1.presence, **n2.presence}))
            if n1.id in a1.m_f:
                m_f[uid] = a1.m_f[n1.id]
        else:
            nodes.append(UNode(uid, n1.kind, n1.tag, n1.preds,
                               dict(n1.presence)))
            if n1.id in a1.m_f:
                raise MergeError(f"frozen node {n1.id} left unaligned")
    for n2 in a2.nodes:
        if n2.id in mapped_rev:
            continue
        uid = f"m{len(nodes)}"
        where[(2, n2.id)] = uid
        nodes.append(UNode(uid, n2.kind, n2.tag, n2.preds, dict(n2.presence)))
        if n2.id in a2.m_f:
            raise MergeError(f"frozen node {n2.id} left unaligned")

    edges: List[UEdge] = []
    edge_keys = {}
    mapped_edges_rev = {v: k for k, v in al.edge_map.items()}

    def push(src, dst, label, presence):
        key = (src, dst, label)
        if key in edge_keys:
            raise MergeError(
                f"two distinct edges collapse onto {src}-{label.text()}->"
                f"{dst}; the alignment left a matchable pair unmatched")
        edge_keys[key] = True
        edges.append(UEdge(src, dst, label, presence))

    for e1 in a1.edges:
        key1 = (e1.src, e1.dst, e1.label)
        if key1 in al.edge_map:
            s2, d2, lab2 = al.edge_map[key1]
            if lab2 != e1.label:
                raise MergeError("aligned edges carry different labels")
            e2 = next(e for e in a2.edges
                      if (e.src, e.dst, e.label) == (s2, d2, lab2))
            push(where[(1, e1.src)], where[(1, e1.dst)], e1.label,
                 {**e1.presence, **e2.presence})
        else:
            push(where[(1, e1.src)], where[(1, e1.dst)], e1.label,
                 dict(e1.presence))
    for e2 in a2.edges:
        if (e2.src, e2.dst, e2.label) in mapped_edges_rev:
            continue
        push(where[(2, e2.src)], where[(2, e2.dst)], e2.label,
             dict(e2.presence))

    m_b = {}
    counter = 0
    for n in nodes:
        if n.id not in m_f:
            m_b[n.id] = f"b{counter}"
            counter += 1
    return Uapdg(nodes, edges, m_f, m_b, a1.sources + a2.sources)


def project(a: Uapdg, required_sources: Iterable[str]) -> Uapdg:
    """Restrict to nodes and edges contributed by every required source.
    Kept bound variables keep their names."""
    required = frozenset(required_sources)
    kept_nodes = [n for n in a.nodes if required <= set(n.presence)]
    kept_ids = {n.id for n in kept_nodes}
    for node_id, var in a.m_f.items():
        if node_id not in kept_ids:
            raise ProjectionError(
                f"projection drops node bound to free variable {var}")
    kept_edges = [e for e in a.edges
                  if required <= set(e.presence)
                  and e.src in kept_ids and e.dst in kept_ids]
    return Uapdg(
        [UNode(n.id, n.kind, n.tag, n.preds, dict(n.presence))
         for n in kept_nodes],
        [UEdge(e.src, e.dst, e.label, dict(e.presence)) for e in kept_edges],
        dict(a.m_f),
        {n.id: a.m_b[n.id] for n in kept_nodes if n.id in a.m_b},
        a.sources)


def restrict_nodes(a: Uapdg, keep_ids: Iterable[str]) -> Uapdg:
    """Induced sub-UAPDG over an explicit node set (used by the
    single-example neighborhood heuristic). Frozen nodes must survive."""
    kept = set(keep_ids)
    for node_id, var in a.m_f.items():
        if node_id not in kept:
            raise ProjectionError(
                f"restriction drops node bound to free variable {var}")
    nodes = [n for n in a.nodes if n.id in kept]
    edges = [e for e in a.edges if e.src in kept and e.dst in kept]
    return Uapdg(
        [UNode(n.id, n.kind, n.tag, n.preds, dict(n.presence)) for n in nodes],
        [UEdge(e.src, e.dst, e.label, dict(e.presence)) for e in edges],
        dict(a.m_f),
        {n.id: a.m_b[n.id] for n in nodes if n.id in a.m_b},
        a.sources)


@dataclass(frozen=True)
class QuantifiedConjunct:
    """Existentially quantified conjunction of node and edge atoms.
    Variables range over distinct nodes."""

    free_vars: Tuple[str, ...]
    bound_vars: Tuple[str, ...]
    node_atoms: Dict[str, NodePredicates]
    edge_atoms: Tuple[Tuple[str, EdgeLabel, str], ...]

    def check(self):
        scope = set(self.free_vars) | set(self.bound_vars)
        if len(scope) != len(self.free_vars) + len(self.bound_vars):
            raise ValueError("conjunct repeats a variable")
        for var in self.node_atoms:
            if var not in scope:
                raise ValueError(f"node atom on unknown variable {var}")
        for src, _, dst in self.edge_atoms:
            for var in (src, dst):
                if var not in self.node_atoms:
                    raise ValueError(
                        f"edge atom uses variable {var} without a node atom")

    def all_vars(self) -> Tuple[str, ...]:
        return self.free_vars + self.bound_vars

    def rename(self, mapping: Dict[str, str]) -> "QuantifiedConjunct":
        def m(v):
            return mapping.get(v, v)

        return QuantifiedConjunct(
            tuple(m(v) for v in self.free_vars),
            tuple(m(v) for v in self.bound_vars),
            {m(v): preds for v, preds in self.node_atoms.items()},
            tuple((m(s), lab, m(d)) for s, lab, d in self.edge_atoms))

    def node_count(self) -> int:
        return len(self.node_atoms)


_VAR_RE = re.compile(r"^([a-zA-Z_]+)(\d*)$")


def var_sort_key(var: str):
    m = _VAR_RE.match(var)
    if not m:
        return (var, -1, var)
    prefix, digits = m.groups()
    return (prefix, int(digits) if digits else -1, var)


def to_formula(a: Uapdg) -> QuantifiedConjunct:
    free_vars = tuple(sorted(a.m_f.values(), key=var_sort_key))
    bound_vars = tuple(a.m_b[n.id] for n in a.nodes if n.id in a.m_b)
    node_atoms = {a.var_of(n.id): n.preds for n in a.nodes}
    edge_atoms = tuple((a.var_of(e.src), e.label, a.var_of(e.dst))
                       for e in a.edges)
    q = QuantifiedConjunct(free_vars, bound_vars, node_atoms, edge_atoms)
    q.check()
    return q
