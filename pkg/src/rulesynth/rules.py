"""Rules, satisfiability checking and the rule file format.

A rule is ``exists x. pre(x) and not (OR_i exists y. post_i(x, y))``:
it flags a graph when some valuation of the precondition variables has no
postcondition disjunct covering it. Checking is plain backtracking search
over the finite graph; a cheap prefilter discharges graphs that lack an
action label the precondition demands.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Tuple

from .lattice import (NodePredicates, PredicateFormatError,
                      predicates_from_obj, predicates_to_obj, satisfies)
from .pdg import EdgeLabel, Node, NodeKind, Origin, Pdg
from .uapdg import QuantifiedConjunct, var_sort_key


@dataclass(frozen=True)
class Rule:
    name: str
    pre: QuantifiedConjunct
    post_disjuncts: Tuple[QuantifiedConjunct, ...]
    provenance: Dict[str, object] = field(default_factory=dict)

    def check(self):
        self.pre.check()
        if self.pre.bound_vars:
            raise ValueError("precondition variables are all rule-level")
        pre_vars = set(self.pre.free_vars)
        for i, disjunct in enumerate(self.post_disjuncts):
            disjunct.check()
            extra = set(disjunct.free_vars) - pre_vars
            if extra:
                raise ValueError(
                    f"post disjunct {i} uses free variables {sorted(extra)} "
                    f"absent from the precondition")


@dataclass(frozen=True)
class Detection:
    origin: Optional[Origin]
    rule: str
    valuation: Tuple[Tuple[str, str], ...]  # (variable, node id), sorted

    def line(self) -> str:
        origin = "<memory>"
        if self.origin is not None and self.origin.file:
            origin = self.origin.file
        elif self.origin is not None and self.origin.method:
            origin = self.origin.method
        pairs = " ".join(f"{v}={n}" for v, n in self.valuation)
        return f"{origin}\t{self.rule}\t{pairs}"


def match_conjunct(g: Pdg, q: QuantifiedConjunct,
                   partial: Optional[Dict[str, str]] = None
                   ) -> Optional[Dict[str, str]]:
    """First valuation extending ``partial`` that satisfies every atom, or
    None. Deterministic: most-constrained variable first, candidates in
    graph node order."""
    for result in _matches(g, q, partial, first_only=True):
        return result
    return None


def enumerate_matches(g: Pdg, q: QuantifiedConjunct,
                      partial: Optional[Dict[str, str]] = None
                      ) -> List[Dict[str, str]]:
    """All satisfying valuations, sorted by assigned node ids."""
    results = list(_matches(g, q, partial, first_only=False))
    order = q.all_vars()
    results.sort(key=lambda m: tuple(m[v] for v in order))
    return results


def _matches(g: Pdg, q: QuantifiedConjunct, partial, first_only) -> Iterator:
    q.check()
    variables = list(q.all_vars())
    partial = dict(partial or {})
    for var, node_id in partial.items():
        if var not in set(q.free_vars):
            raise ValueError(f"partial valuation pins unknown variable {var}")
        g.node(node_id)
    if len(set(partial.values())) != len(partial):
        return

    atoms = {v: q.node_atoms.get(v, NodePredicates.trivial())
             for v in variables}
    adjacency: Dict[str, List[Tuple[str, EdgeLabel, bool]]] = \
        {v: [] for v in variables}
    for src, lab, dst in q.edge_atoms:
        adjacency[src].append((dst, lab, True))
        adjacency[dst].append((src, lab, False))

    node_pos = {n.id: i for i, n in enumerate(g.nodes)}
    static: Dict[str, List[str]] = {}
    for v in variables:
        if v in partial:
            if not _node_ok(g, partial[v], atoms[v]):
                return
            static[v] = [partial[v]]
        else:
            static[v] = [n.id for n in g.nodes if _node_ok(g, n.id, atoms[v])]
            if not static[v]:
                return

    assignment: Dict[str, str] = dict(partial)
    used = set(partial.values())

    def candidates(v) -> List[str]:
        out = []
        for node_id in static[v]:
            if node_id in used and assignment.get(v) != node_id:
                continue
            ok = True
            for other, lab, outgoing in adjacency[v]:
                if other == v:
                    if not _has_edge(g, node_id, node_id, lab):
                        ok = False
                        break
                    continue
                if other in assignment:
                    a, b = (node_id, assignment[other]) if outgoing \
                        else (assignment[other], node_id)
                    if not _has_edge(g, a, b, lab):
                        ok = False
                        break
            if ok:
                out.append(node_id)
        return out

    def search() -> Iterator:
        unassigned = [v for v in variables if v not in assignment]
        if not unassigned:
            yield dict(assignment)
            return
        best_var, best_cands = None, None
        for v in unassigned:
            cands = candidates(v)
            if best_cands is None or len(cands) < len(best_cands):
                best_var, best_cands = v, cands
                if not cands:
                    return
        best_cands.sort(key=lambda nid: node_pos[nid])
        for node_id in best_cands:
            assignment[best_var] = node_id
            used.add(node_id)
            yield from search()
            used.discard(node_id)
            del assignment[best_var]

    for m in search():
        yield m
        if first_only:
            return


def _node_ok(g: Pdg, node_id: str, preds: NodePredicates) -> bool:
    return satisfies(g, g.node(node_id), preds)


def _has_edge(g: Pdg, src: str, dst: str, lab: EdgeLabel) -> bool:
    return any(e.dst == dst and e.label == lab for e in g.out_edges(src))


def prefilter(g: Pdg, q: QuantifiedConjunct) -> bool:
    """False only when matching is provably impossible: the conjunct pins an
    action label that no node of the graph carries."""
    present = {n.label for n in g.nodes if n.label is not None}
    for preds in q.node_atoms.values():
        if preds.label.tag == "exact" and preds.label.value not in present:
            return False
    return True


def check_rule(g: Pdg, r: Rule) -> List[Detection]:
    """Every precondition model that no postcondition disjunct explains.
    An empty list means the graph conforms."""
    r.check()
    if not prefilter(g, r.pre):
        return []
    detections = []
    for model in enumerate_matches(g, r.pre):
        if _covered(g, r, model):
            continue
        valuation = tuple(sorted(model.items(),
                                 key=lambda kv: var_sort_key(kv[0])))
        detections.append(Detection(g.origin, r.name, valuation))
    return detections


def _covered(g: Pdg, r: Rule, model: Dict[str, str]) -> bool:
    for disjunct in r.post_disjuncts:
        pins = {v: model[v] for v in disjunct.free_vars}
        if match_conjunct(g, disjunct, pins) is not None:
            return True
    return False


# --- rule file format ------------------------------------------------------

class RuleFormatError(ValueError):
    pass


def _conjunct_to_obj(q: QuantifiedConjunct, with_bound: bool) -> dict:
    obj = {"freeVars": list(q.free_vars)}
    if with_bound:
        obj["boundVars"] = list(q.bound_vars)
    obj["nodes"] = {v: predicates_to_obj(p)
                    for v, p in sorted(q.node_atoms.items(),
                                       key=lambda kv: var_sort_key(kv[0]))}
    obj["edges"] = [[s, lab.text(), d] for s, lab, d in q.edge_atoms]
    return obj


def _conjunct_from_obj(obj: dict, where: str,
                       with_bound: bool) -> QuantifiedConjunct:
    if not isinstance(obj, dict):
        raise RuleFormatError(f"{where}: expected an object")
    try:
        free_vars = tuple(obj["freeVars"])
    except KeyError:
        raise RuleFormatError(f"{where}.freeVars: missing") from None
    bound_vars = tuple(obj.get("boundVars", ())) if with_bound else ()
    nodes = {}
    for var, pred_obj in obj.get("nodes", {}).items():
        try:
            nodes[var] = predicates_from_obj(pred_obj)
        except PredicateFormatError as exc:
            raise RuleFormatError(f"{where}.nodes.{var}: {exc}") from None
    edges = []
    for i, item in enumerate(obj.get("edges", ())):
        if not (isinstance(item, list) and len(item) == 3):
            raise RuleFormatError(
                f"{where}.edges[{i}]: expected [var, label, var]")
        try:
            lab = EdgeLabel.parse(item[1])
        except ValueError as exc:
            raise RuleFormatError(f"{where}.edges[{i}]: {exc}") from None
        edges.append((item[0], lab, item[2]))
    q = QuantifiedConjunct(free_vars, bound_vars, nodes, tuple(edges))
    try:
        q.check()
    except ValueError as exc:
        raise RuleFormatError(f"{where}: {exc}") from None
    return q


def write_rule(r: Rule) -> bytes:
    r.check()
    doc = {
        "name": r.name,
        "pre": _conjunct_to_obj(r.pre, with_bound=False),
        "post": [_conjunct_to_obj(d, with_bound=True)
                 for d in r.post_disjuncts],
        "provenance": r.provenance,
    }
    return (json.dumps(doc, indent=2, sort_keys=False) + "\n").encode("utf-8")


def read_rule(data: bytes) -> Rule:
    try:
        doc = json.loads(data.decode("utf-8") if isinstance(data, bytes) else data)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise RuleFormatError(f"not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise RuleFormatError("top level must be an object")
    if "name" not in doc or "pre" not in doc:
        raise RuleFormatError("missing required fields name/pre")
    pre = _conjunct_from_obj(doc["pre"], "pre", with_bound=False)
    post = tuple(_conjunct_from_obj(obj, f"post[{i}]", with_bound=True)
                 for i, obj in enumerate(doc.get("post", ())))
    rule = Rule(name=str(doc["name"]), pre=pre, post_disjuncts=post,
                provenance=doc.get("provenance", {}))
    try:
        rule.check()
    except ValueError as exc:
        raise RuleFormatError(str(exc)) from None
    return rule


# --- human-readable rendering ----------------------------------------------

def _atom_lines(var: str, preds: NodePredicates) -> List[str]:
    lines = []
    if preds.label.tag == "exact":
        lines.append(f'label({var}) = "{preds.label.value}"')
    if preds.data_type.tag in ("exact", "pattern"):
        lines.append(f'data-type({var}) = "{preds.data_type.render()}"')
    if preds.data_value.tag == "exact":
        lines.append(f'data-value({var}) = "{preds.data_value.value}"')
    if preds.num_para.tag == "exact":
        lines.append(f"num-para({var}) = {preds.num_para.value}")
    if preds.declaring_type.tag in ("exact", "pattern"):
        lines.append(f'declaring-type({var}) = "{preds.declaring_type.render()}"')
    if preds.trans_control_dep.tag == "set" and preds.trans_control_dep.labels:
        inner = ", ".join(sorted(preds.trans_control_dep.labels))
        lines.append(f"trans-control-dep({var}) >= {{{inner}}}")
    if preds.output_ignored.tag == "exact":
        bang = "" if preds.output_ignored.value else "!"
        lines.append(f"{bang}output-ignored({var})")
    return lines


def render_conjunct(q: QuantifiedConjunct, indent: str = "  ") -> str:
    lines = []
    order = sorted(q.node_atoms, key=var_sort_key)
    for var in order:
        lines.extend(_atom_lines(var, q.node_atoms[var]))
    for src, lab, dst in q.edge_atoms:
        lines.append(f"{src} -{lab.text()}-> {dst}")
    if not lines:
        lines = ["True"]
    return "\n".join(indent + line for line in lines)


def render_rule(r: Rule) -> str:
    parts = [f"rule {r.name}"]
    head = ", ".join(r.pre.free_vars)
    parts.append(f"precondition pre({head}):")
    parts.append(render_conjunct(r.pre))
    if not r.post_disjuncts:
        parts.append("postcondition: False")
    else:
        for i, disjunct in enumerate(r.post_disjuncts, start=1):
            bound = ", ".join(disjunct.bound_vars)
            exists = f" (exists {bound})" if bound else ""
            parts.append(f"postcondition disjunct {i}{exists}:")
            parts.append(render_conjunct(disjunct))
    return "\n".join(parts) + "\n"
