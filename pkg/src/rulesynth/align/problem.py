"""Pairwise graph alignment set up as a 0-1 integer program.

The objective maximizes mapped nodes plus mapped edges. Structural rules:

 1-4. every node/edge on either side is mapped at most once (slack
      variables make these equalities)
 5.   pinned pairs (nodes frozen to the same free variable) must align
 6.   action nodes align only with equal labels
 7.   in precondition mode, action nodes align only with equal change tags
 8.   edges align only with equal labels (``para`` indices must agree)
 9.   an aligned edge pair needs both endpoint pairs aligned
 10.  an aligned data-node pair needs at least one aligned incident edge
      (pinned pairs are exempt; a forced pair cannot also be forbidden)

Rules 6-8 are applied by pruning: variables for excluded pairs are never
generated. Data nodes carry no label restriction, so differently typed
values can still align.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Tuple

from ..pdg import ChangeTag, EdgeLabel, NodeKind, Pdg


class Mode(Enum):
    PRECONDITION = "precondition"   # respect change tags
    POSTCONDITION = "postcondition"  # ignore change tags


@dataclass(frozen=True)
class ViewNode:
    id: str
    kind: NodeKind
    label: Optional[str]
    tag: ChangeTag


@dataclass
class GraphView:
    """The part of a graph the aligner needs: node identity/kind/label/tag
    plus labeled edges. Both plain PDGs and merged graphs reduce to this."""

    nodes: List[ViewNode]
    edges: List[Tuple[str, str, EdgeLabel]]

    @classmethod
    def of_pdg(cls, g: Pdg) -> "GraphView":
        nodes = [ViewNode(n.id, n.kind, n.label, n.change_tag)
                 for n in g.nodes]
        edges = [(e.src, e.dst, e.label) for e in g.edges]
        return cls(nodes, edges)

    def index(self) -> Dict[str, int]:
        return {n.id: i for i, n in enumerate(self.nodes)}


@dataclass
class AlignmentProblem:
    g1: GraphView
    g2: GraphView
    mode: Mode = Mode.POSTCONDITION
    pins: List[Tuple[str, str]] = field(default_factory=list)

    def validate(self):
        ids1 = {n.id for n in self.g1.nodes}
        ids2 = {n.id for n in self.g2.nodes}
        seen1, seen2 = set(), set()
        for a, b in self.pins:
            if a not in ids1 or b not in ids2:
                raise ValueError(f"pin ({a!r}, {b!r}) references unknown nodes")
            if a in seen1 or b in seen2:
                raise ValueError(f"node in pin ({a!r}, {b!r}) pinned twice")
            seen1.add(a)
            seen2.add(b)


@dataclass(frozen=True)
class Alignment:
    node_map: Dict[str, str]
    edge_map: Dict[Tuple[str, str, EdgeLabel], Tuple[str, str, EdgeLabel]]
    objective: int


class AlignmentError(ValueError):
    pass


class InfeasiblePins(AlignmentError):
    pass


class SolverBudgetExceeded(AlignmentError):
    pass


@dataclass
class SearchSpace:
    """Dense integer encoding of one alignment instance, shared by the
    pure-Python and compiled search kernels."""

    n1: int
    n2: int
    kind1: List[int]              # 1 action, 0 data
    kind2: List[int]
    act_label1: List[int]         # action label id, -1 for data nodes
    act_label2: List[int]
    cand: List[List[int]]         # allowed g2 partners per g1 node
    must_map: List[bool]
    pinned1: List[bool]           # exempt from the data-coupling rule
    pinned2: List[bool]
    edges1: List[Tuple[int, int, int]]   # (src, dst, label id)
    edges2: List[Tuple[int, int, int]]
    adj1: List[List[int]]         # incident edge indices per g1 node
    order: List[int]              # static branch order over g1 nodes
    num_labels: int               # distinct action labels
    num_edge_labels: int
    edge_label_text: List[str]    # label id -> rendered label
    id1: List[str]
    id2: List[str]
    infeasible: Optional[str] = None


def _compatible(n1: ViewNode, n2: ViewNode, mode: Mode) -> bool:
    if n1.kind is not n2.kind:
        return False
    if n1.kind is NodeKind.ACTION:
        if n1.label != n2.label:
            return False
        if mode is Mode.PRECONDITION and n1.tag is not n2.tag:
            return False
    return True


def build_space(p: AlignmentProblem) -> SearchSpace:
    p.validate()
    g1, g2 = p.g1, p.g2
    idx1, idx2 = g1.index(), g2.index()
    pin_for1 = {a: b for a, b in p.pins}
    pin_for2 = {b: a for a, b in p.pins}

    labels = {}

    def label_id(text):
        return labels.setdefault(text, len(labels))

    act_label1 = [label_id(("a", n.label)) if n.kind is NodeKind.ACTION else -1
                  for n in g1.nodes]
    act_label2 = [label_id(("a", n.label)) if n.kind is NodeKind.ACTION else -1
                  for n in g2.nodes]

    infeasible = None
    cand: List[List[int]] = []
    must_map = []
    for i, n1 in enumerate(g1.nodes):
        if n1.id in pin_for1:
            j = idx2[pin_for1[n1.id]]
            if not _compatible(n1, g2.nodes[j], p.mode):
                infeasible = (f"pin ({n1.id!r}, {g2.nodes[j].id!r}) pairs "
                              f"incompatible nodes")
                cand.append([])
                must_map.append(True)
                continue
            cand.append([j])
            must_map.append(True)
        else:
            allowed = [j for j, n2 in enumerate(g2.nodes)
                       if n2.id not in pin_for2
                       and _compatible(n1, n2, p.mode)]
            cand.append(allowed)
            must_map.append(False)

    edge_labels = {}

    def edge_label_id(lab: EdgeLabel):
        return edge_labels.setdefault(lab, len(edge_labels))

    edges1 = [(idx1[s], idx1[d], edge_label_id(lab)) for s, d, lab in g1.edges]
    edges2 = [(idx2[s], idx2[d], edge_label_id(lab)) for s, d, lab in g2.edges]
    adj1 = [[] for _ in range(len(g1.nodes))]
    for e_index, (s, d, _) in enumerate(edges1):
        adj1[s].append(e_index)
        if d != s:
            adj1[d].append(e_index)

    pinned1 = [n.id in pin_for1 for n in g1.nodes]
    pinned2 = [n.id in pin_for2 for n in g2.nodes]

    # pins first (no branching), then scarce-candidate nodes
    order = sorted(range(len(g1.nodes)),
                   key=lambda i: (not must_map[i], len(cand[i]), i))

    label_text = [None] * len(edge_labels)
    for lab, lab_id in edge_labels.items():
        label_text[lab_id] = lab.text()

    return SearchSpace(
        n1=len(g1.nodes), n2=len(g2.nodes),
        kind1=[1 if n.kind is NodeKind.ACTION else 0 for n in g1.nodes],
        kind2=[1 if n.kind is NodeKind.ACTION else 0 for n in g2.nodes],
        act_label1=act_label1, act_label2=act_label2,
        cand=cand, must_map=must_map, pinned1=pinned1, pinned2=pinned2,
        edges1=edges1, edges2=edges2, adj1=adj1, order=order,
        num_labels=len(labels), num_edge_labels=len(edge_labels),
        edge_label_text=label_text,
        id1=[n.id for n in g1.nodes], id2=[n.id for n in g2.nodes],
        infeasible=infeasible)


@dataclass
class IlpInstance:
    """Explicit 0-1 program. ``variables`` lists every variable including
    the not-mapped slacks; only pair variables appear in the objective."""

    variables: List[str]
    objective: List[str]
    constraints: List[Tuple[str, tuple]]
    node_pair_count: int
    space: SearchSpace = field(repr=False, default=None)
    pruned_note: str = ""

    def render_lp(self) -> str:
        lines = [f"max: {' + '.join(self.objective) if self.objective else '0'};"]
        if self.pruned_note:
            lines.append(f"// {self.pruned_note}")
        for kind, payload in self.constraints:
            if kind == "exactly_one":
                lines.append(f"{' + '.join(payload)} = 1;")
            elif kind == "eq1":
                lines.append(f"{payload[0]} = 1;")
            elif kind == "le":
                lines.append(f"{payload[0]} <= {payload[1]};")
            elif kind == "le_sum":
                rhs = " + ".join(payload[1]) if payload[1] else "0"
                lines.append(f"{payload[0]} <= {rhs};")
        lines.append("int " + ", ".join(self.variables) + ";"
                     if self.variables else "int;")
        return "\n".join(lines) + "\n"


def _edge_name(side, s, d, lab: EdgeLabel):
    return f"{s}-{lab.text()}->{d}"


def build_alignment_ilp(p: AlignmentProblem) -> IlpInstance:
    """Generate the explicit program. Candidate pruning keeps instance size
    proportional to compatible pairs; excluded pairs carry an implicit
    zero variable."""
    space = build_space(p)
    g1, g2 = p.g1, p.g2

    node_var = {}
    variables = []
    objective = []
    for i in range(space.n1):
        for j in space.cand[i]:
            name = f"zn[{space.id1[i]}|{space.id2[j]}]"
            node_var[(i, j)] = name
            variables.append(name)
            objective.append(name)

    cand_edge_pairs = []
    edge_var = {}
    for a, (s1, d1, l1) in enumerate(space.edges1):
        for b, (s2, d2, l2) in enumerate(space.edges2):
            if l1 != l2:
                continue
            if (s1, s2) not in node_var or (d1, d2) not in node_var:
                continue
            name = (f"ze[{_edge_name(1, space.id1[s1], space.id1[d1], p.g1.edges[a][2])}"
                    f"|{_edge_name(2, space.id2[s2], space.id2[d2], p.g2.edges[b][2])}]")
            edge_var[(a, b)] = name
            variables.append(name)
            objective.append(name)
            cand_edge_pairs.append((a, b))

    constraints = []
    for i in range(space.n1):
        slack = f"zn1[{space.id1[i]}]"
        variables.append(slack)
        terms = [node_var[(i, j)] for j in space.cand[i]] + [slack]
        constraints.append(("exactly_one", tuple(terms)))
    for j in range(space.n2):
        slack = f"zn2[{space.id2[j]}]"
        variables.append(slack)
        terms = [node_var[(i, j)] for i in range(space.n1)
                 if (i, j) in node_var] + [slack]
        constraints.append(("exactly_one", tuple(terms)))
    for a in range(len(space.edges1)):
        s, d, _ = space.edges1[a]
        slack = f"ze1[{_edge_name(1, space.id1[s], space.id1[d], p.g1.edges[a][2])}]"
        variables.append(slack)
        terms = [edge_var[(a, b)] for (a2, b) in cand_edge_pairs if a2 == a]
        constraints.append(("exactly_one", tuple(terms + [slack])))
    for b in range(len(space.edges2)):
        s, d, _ = space.edges2[b]
        slack = f"ze2[{_edge_name(2, space.id2[s], space.id2[d], p.g2.edges[b][2])}]"
        variables.append(slack)
        terms = [edge_var[(a, b)] for (a, b2) in cand_edge_pairs if b2 == b]
        constraints.append(("exactly_one", tuple(terms + [slack])))
    for a, b in p.pins:
        i, j = p.g1.index()[a], p.g2.index()[b]
        if (i, j) in node_var:
            constraints.append(("eq1", (node_var[(i, j)],)))
    for a, b in cand_edge_pairs:
        s1, d1, _ = space.edges1[a]
        s2, d2, _ = space.edges2[b]
        constraints.append(("le", (edge_var[(a, b)], node_var[(s1, s2)])))
        constraints.append(("le", (edge_var[(a, b)], node_var[(d1, d2)])))
    for (i, j), name in node_var.items():
        if space.kind1[i] == 1 or space.pinned1[i]:
            continue
        incident = []
        for a, b in cand_edge_pairs:
            s1, d1, _ = space.edges1[a]
            s2, d2, _ = space.edges2[b]
            if (s1 == i and s2 == j) or (d1 == i and d2 == j):
                incident.append(edge_var[(a, b)])
        constraints.append(("le_sum", (name, tuple(incident))))

    excluded = space.n1 * space.n2 - len(node_var)
    note = (f"label/tag pruning removed {excluded} node pair variables "
            f"(rules 6-8 hold implicitly)")
    return IlpInstance(variables=variables, objective=objective,
                       constraints=constraints,
                       node_pair_count=len(node_var), space=space,
                       pruned_note=note)
