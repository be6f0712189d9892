"""Program dependence graph data model, validation and interchange format.

A PDG represents one method. Nodes are either *data* nodes (SSA values,
literals) or *action* nodes (calls, operators, branches, catch handlers).
Edges carry one of six labels:

    recv    receiver object -> call
    para_i  i-th argument   -> operation
    def     operation       -> value it defines
    dep     branch/catch    -> directly control-dependent action
    cond    guard value     -> branch node
    throw   call            -> catch node

Graphs are immutable after construction; builders assemble node/edge lists
and hand them to ``Pdg``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional


class NodeKind(Enum):
    DATA = "data"
    ACTION = "action"


class ChangeTag(Enum):
    UNCHANGED = "unchanged"
    DELETED = "deleted"
    ADDED = "added"
    NONE = "none"  # graph does not arise from a code change


@dataclass(frozen=True, order=True)
class EdgeLabel:
    """Edge label; ``para`` carries the 0-based argument position."""

    kind: str
    index: Optional[int] = None

    _KINDS = ("recv", "para", "def", "dep", "cond", "throw")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise ValueError(f"unknown edge label kind: {self.kind!r}")
        if self.kind == "para":
            if self.index is None or self.index < 0:
                raise ValueError("para label requires a nonnegative index")
        elif self.index is not None:
            raise ValueError(f"{self.kind} label takes no index")

    def text(self) -> str:
        if self.kind == "para":
            return f"para{self.index}"
        return self.kind

    @classmethod
    def parse(cls, text: str) -> "EdgeLabel":
        if text.startswith("para") and text[4:].isdigit():
            return cls("para", int(text[4:]))
        return cls(text)

    def __repr__(self):
        return f"EdgeLabel({self.text()!r})"


RECV = EdgeLabel("recv")
DEF = EdgeLabel("def")
DEP = EdgeLabel("dep")
COND = EdgeLabel("cond")
THROW = EdgeLabel("throw")


def PARA(i: int) -> EdgeLabel:
    return EdgeLabel("para", i)


@dataclass(frozen=True)
class Node:
    id: str
    kind: NodeKind
    label: Optional[str] = None
    data_type: Optional[str] = None
    data_value: Optional[str] = None
    num_para: Optional[int] = None
    declaring_type: Optional[str] = None
    change_tag: ChangeTag = ChangeTag.NONE

    def with_tag(self, tag: ChangeTag) -> "Node":
        return Node(self.id, self.kind, self.label, self.data_type,
                    self.data_value, self.num_para, self.declaring_type, tag)

    def with_label(self, label: str) -> "Node":
        return Node(self.id, self.kind, label, self.data_type,
                    self.data_value, self.num_para, self.declaring_type,
                    self.change_tag)


@dataclass(frozen=True)
class Edge:
    src: str
    dst: str
    label: EdgeLabel

    def key(self):
        return (self.src, self.dst, self.label)


@dataclass(frozen=True)
class Origin:
    file: Optional[str] = None
    method: Optional[str] = None
    line: Optional[int] = None


class Pdg:
    """Immutable labeled graph. Node iteration order is the builder's
    insertion order and is relied upon for deterministic downstream output."""

    def __init__(self, nodes: Iterable[Node], edges: Iterable[Edge],
                 origin: Optional[Origin] = None):
        self.nodes = tuple(nodes)
        self.edges = tuple(edges)
        self.origin = origin
        self._by_id = {n.id: n for n in self.nodes}
        self._out = {n.id: [] for n in self.nodes}
        self._in = {n.id: [] for n in self.nodes}
        for e in self.edges:
            if e.src in self._out:
                self._out[e.src].append(e)
            if e.dst in self._in:
                self._in[e.dst].append(e)

    def node(self, node_id: str) -> Node:
        try:
            return self._by_id[node_id]
        except KeyError:
            raise KeyError(f"unknown node id: {node_id!r}") from None

    def has_node(self, node_id: str) -> bool:
        return node_id in self._by_id

    def out_edges(self, node_id: str) -> list:
        self.node(node_id)
        return list(self._out.get(node_id, ()))

    def in_edges(self, node_id: str) -> list:
        self.node(node_id)
        return list(self._in.get(node_id, ()))

    def neighbors(self, node_id: str) -> set:
        """All nodes adjacent to ``node_id`` by any edge in either direction."""
        self.node(node_id)
        out = {e.dst for e in self._out.get(node_id, ())}
        out |= {e.src for e in self._in.get(node_id, ())}
        out.discard(node_id)
        return out

    def is_change_tagged(self) -> bool:
        return bool(self.nodes) and all(
            n.change_tag is not ChangeTag.NONE for n in self.nodes)

    def __eq__(self, other):
        if not isinstance(other, Pdg):
            return NotImplemented
        return (frozenset(self.nodes) == frozenset(other.nodes)
                and frozenset(self.edges) == frozenset(other.edges))

    def __hash__(self):
        return hash((frozenset(self.nodes), frozenset(self.edges)))

    def __repr__(self):
        return f"Pdg({len(self.nodes)} nodes, {len(self.edges)} edges)"


def neighbors(g: Pdg, node_id: str) -> set:
    return g.neighbors(node_id)


def validate(g: Pdg) -> list:
    """Check every graph invariant; return one message per violation."""
    problems = []
    seen = set()
    for n in g.nodes:
        if n.id in seen:
            problems.append(f"duplicate node id {n.id!r}")
        seen.add(n.id)
        if n.kind is NodeKind.ACTION:
            if not n.label:
                problems.append(f"action node {n.id!r} has no label")
            if n.num_para is not None and n.num_para < 0:
                problems.append(f"action node {n.id!r} has negative num_para")
            if n.data_type is not None or n.data_value is not None:
                problems.append(
                    f"action node {n.id!r} carries data attributes")
        else:
            if n.num_para is not None:
                problems.append(f"data node {n.id!r} carries num_para")
            if n.declaring_type is not None:
                problems.append(f"data node {n.id!r} carries declaring_type")
    edge_keys = set()
    for e in g.edges:
        name = f"{e.src}-{e.label.text()}->{e.dst}"
        if e.key() in edge_keys:
            problems.append(f"duplicate edge {name}")
        edge_keys.add(e.key())
        if not g.has_node(e.src) or not g.has_node(e.dst):
            problems.append(f"edge {name} references a missing node")
            continue
        if e.label.kind == "def" and g.node(e.src).kind is not NodeKind.ACTION:
            problems.append(f"def edge {name} does not originate at an action node")
        if e.label.kind in ("recv", "para") and \
                g.node(e.dst).kind is not NodeKind.ACTION:
            problems.append(
                f"{e.label.kind} edge {name} does not terminate at an action node")
    return problems


class PdgFormatError(ValueError):
    pass


_TAG_TEXT = {ChangeTag.UNCHANGED: "unchanged", ChangeTag.DELETED: "deleted",
             ChangeTag.ADDED: "added"}
_TEXT_TAG = {v: k for k, v in _TAG_TEXT.items()}


def write_pdg(g: Pdg) -> bytes:
    doc = {"nodes": [], "edges": []}
    if g.origin is not None:
        origin = {}
        if g.origin.file is not None:
            origin["file"] = g.origin.file
        if g.origin.method is not None:
            origin["method"] = g.origin.method
        if g.origin.line is not None:
            origin["line"] = g.origin.line
        doc["origin"] = origin
    for n in g.nodes:
        rec = {"id": n.id, "kind": n.kind.value}
        if n.label is not None:
            rec["label"] = n.label
        if n.data_type is not None:
            rec["dataType"] = n.data_type
        if n.data_value is not None:
            rec["dataValue"] = n.data_value
        if n.num_para is not None:
            rec["numPara"] = n.num_para
        if n.declaring_type is not None:
            rec["declaringType"] = n.declaring_type
        if n.change_tag is not ChangeTag.NONE:
            rec["changeTag"] = _TAG_TEXT[n.change_tag]
        doc["nodes"].append(rec)
    for e in g.edges:
        rec = {"src": e.src, "dst": e.dst, "label": e.label.kind}
        if e.label.kind == "para":
            rec["paraIndex"] = e.label.index
        doc["edges"].append(rec)
    return (json.dumps(doc, indent=2) + "\n").encode("utf-8")


def read_pdg(data: bytes) -> Pdg:
    try:
        doc = json.loads(data.decode("utf-8") if isinstance(data, bytes) else data)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise PdgFormatError(f"not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise PdgFormatError("top level must be an object")
    nodes = []
    for i, rec in enumerate(doc.get("nodes", [])):
        where = f"nodes[{i}]"
        if "id" not in rec or "kind" not in rec:
            raise PdgFormatError(f"{where}: missing id or kind")
        try:
            kind = NodeKind(rec["kind"])
        except ValueError:
            raise PdgFormatError(f"{where}: unknown kind {rec['kind']!r}") from None
        tag = ChangeTag.NONE
        if "changeTag" in rec:
            if rec["changeTag"] not in _TEXT_TAG:
                raise PdgFormatError(
                    f"{where}: unknown changeTag {rec['changeTag']!r}")
            tag = _TEXT_TAG[rec["changeTag"]]
        num_para = rec.get("numPara")
        if num_para is not None and (not isinstance(num_para, int) or num_para < 0):
            raise PdgFormatError(f"{where}: numPara must be a nonnegative integer")
        nodes.append(Node(
            id=str(rec["id"]), kind=kind, label=rec.get("label"),
            data_type=rec.get("dataType"), data_value=rec.get("dataValue"),
            num_para=num_para, declaring_type=rec.get("declaringType"),
            change_tag=tag))
    edges = []
    for i, rec in enumerate(doc.get("edges", [])):
        where = f"edges[{i}]"
        for key in ("src", "dst", "label"):
            if key not in rec:
                raise PdgFormatError(f"{where}: missing {key}")
        if rec["label"] == "para":
            idx = rec.get("paraIndex")
            if not isinstance(idx, int) or idx < 0:
                raise PdgFormatError(
                    f"{where}: para edge requires nonnegative paraIndex")
            label = PARA(idx)
        else:
            try:
                label = EdgeLabel(rec["label"])
            except ValueError:
                raise PdgFormatError(
                    f"{where}: unknown label {rec['label']!r}") from None
        edges.append(Edge(str(rec["src"]), str(rec["dst"]), label))
    origin = None
    if "origin" in doc and isinstance(doc["origin"], dict):
        o = doc["origin"]
        origin = Origin(o.get("file"), o.get("method"), o.get("line"))
    g = Pdg(nodes, edges, origin)
    problems = validate(g)
    if problems:
        raise PdgFormatError("; ".join(problems))
    return g
