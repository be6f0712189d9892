"""Alignment solving: kernel selection, decode, verification.

The search kernel exists twice: a compiled extension (Cython) and a pure
Python twin. The compiled one is preferred at import time; set
``RULESYNTH_PURE_PYTHON=1`` to force the fallback. ``benchmarks/bench_align.py``
compares the two.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Dict, Optional

from ..pdg import NodeKind
from . import _search_py
from .problem import (Alignment, AlignmentError, AlignmentProblem,
                      IlpInstance, InfeasiblePins, SearchSpace,
                      SolverBudgetExceeded, build_space)

DEFAULT_SOLVER_CAP = 20000

if os.environ.get("RULESYNTH_PURE_PYTHON") == "1":
    _kernel = _search_py
    BACKEND = "python"
else:
    try:
        from . import _search_cy as _kernel  # type: ignore

        BACKEND = "compiled"
    except ImportError:
        _kernel = _search_py
        BACKEND = "python"


def kernel_for(backend: str):
    if backend == "python":
        return _search_py
    if backend == "compiled":
        from . import _search_cy

        return _search_cy
    raise ValueError(f"unknown backend {backend!r}")


@dataclass
class IlpSolution:
    assignment: Dict[str, int]
    objective: int


def _check_budget(space: SearchSpace, solver_cap: Optional[int]):
    cap = DEFAULT_SOLVER_CAP if solver_cap is None else solver_cap
    pairs = sum(len(c) for c in space.cand)
    if pairs > cap:
        raise SolverBudgetExceeded(
            f"{pairs} candidate node pairs exceed the solver cap of {cap}; "
            f"raise --solver-cap to solve this instance exactly")


def _solve_space(space: SearchSpace, solver_cap: Optional[int]):
    if space.infeasible:
        raise InfeasiblePins(space.infeasible)
    _check_budget(space, solver_cap)
    best_map, score = _kernel.solve_space(space)
    if best_map is None:
        raise InfeasiblePins("no assignment satisfies the pin constraints")
    return best_map, score


def _induced_edge_pairs(space: SearchSpace, best_map):
    g2set = set()
    for s, d, lab in space.edges2:
        g2set.add((s, d, lab))
    pairs = []
    for s, d, lab in space.edges1:
        js, jd = best_map[s], best_map[d]
        if js >= 0 and jd >= 0 and (js, jd, lab) in g2set:
            pairs.append(((s, d, lab), (js, jd, lab)))
    return pairs


def solve_ilp(instance: IlpInstance,
              solver_cap: Optional[int] = None) -> IlpSolution:
    """Exact optimum of an instance produced by ``build_alignment_ilp``.

    Returns a full 0-1 assignment over the instance variables plus the
    objective value. Use ``instance.render_lp()`` to hand the same program
    to an external MILP solver instead.
    """
    space = instance.space
    if space is None:
        raise AlignmentError(
            "instance carries no search space; only instances built by "
            "build_alignment_ilp are solvable in-repo")
    best_map, score = _solve_space(space, solver_cap)
    assignment = {name: 0 for name in instance.variables}
    mapped2 = set()
    for i, j in enumerate(best_map):
        if j >= 0:
            assignment[f"zn[{space.id1[i]}|{space.id2[j]}]"] = 1
            mapped2.add(j)
        else:
            assignment[f"zn1[{space.id1[i]}]"] = 1
    for j in range(space.n2):
        if j not in mapped2:
            assignment[f"zn2[{space.id2[j]}]"] = 1
    matched1 = set()
    matched2 = set()
    for (s1, d1, lab), (s2, d2, _) in _induced_edge_pairs(space, best_map):
        text = space.edge_label_text[lab]
        name = (f"ze[{space.id1[s1]}-{text}->{space.id1[d1]}"
                f"|{space.id2[s2]}-{text}->{space.id2[d2]}]")
        assignment[name] = 1
        matched1.add((s1, d1, lab))
        matched2.add((s2, d2, lab))
    for s, d, lab in space.edges1:
        if (s, d, lab) not in matched1:
            text = space.edge_label_text[lab]
            assignment[f"ze1[{space.id1[s]}-{text}->{space.id1[d]}]"] = 1
    for s, d, lab in space.edges2:
        if (s, d, lab) not in matched2:
            text = space.edge_label_text[lab]
            assignment[f"ze2[{space.id2[s]}-{text}->{space.id2[d]}]"] = 1
    return IlpSolution(assignment=assignment, objective=score)


_dump_dir: Optional[str] = None
_dump_seq = 0


def set_ilp_dump(directory: Optional[str]):
    """Write every solved alignment program as LP text into ``directory``
    (debugging aid behind the CLI --dump-ilp flag)."""
    global _dump_dir, _dump_seq
    _dump_dir = directory
    _dump_seq = 0


def _maybe_dump(p: AlignmentProblem):
    global _dump_seq
    if _dump_dir is None:
        return
    from .problem import build_alignment_ilp

    os.makedirs(_dump_dir, exist_ok=True)
    instance = build_alignment_ilp(p)
    path = os.path.join(_dump_dir, f"align-{_dump_seq:04d}.lp")
    _dump_seq += 1
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(instance.render_lp())


def align(p: AlignmentProblem, solver_cap: Optional[int] = None) -> Alignment:
    """Solve and decode one alignment; the result is re-verified against
    the structural rules rather than trusted from the search."""
    _maybe_dump(p)
    space = build_space(p)
    best_map, score = _solve_space(space, solver_cap)

    edge_of = {}
    for pos, (s, d, lab) in enumerate(space.edges1):
        edge_of[(s, d, lab)] = p.g1.edges[pos][2]

    node_map = {}
    for i, j in enumerate(best_map):
        if j >= 0:
            node_map[space.id1[i]] = space.id2[j]
    edge_map = {}
    matched_per_node = {nid: 0 for nid in node_map}
    for (s1, d1, lab), (s2, d2, _) in _induced_edge_pairs(space, best_map):
        label = edge_of[(s1, d1, lab)]
        edge_map[(space.id1[s1], space.id1[d1], label)] = (
            space.id2[s2], space.id2[d2], label)
        matched_per_node[space.id1[s1]] += 1
        if space.id1[d1] != space.id1[s1]:
            matched_per_node[space.id1[d1]] += 1

    objective = len(node_map) + len(edge_map)
    if objective != score:
        raise AlignmentError(
            f"solver objective {score} does not match decoded "
            f"alignment size {objective}")
    _verify(p, node_map, edge_map, matched_per_node)
    return Alignment(node_map=node_map, edge_map=edge_map, objective=objective)


def _verify(p: AlignmentProblem, node_map, edge_map, matched_per_node):
    kind = {n.id: n.kind for n in p.g1.nodes}
    pinned = {a for a, _ in p.pins}
    for (s, d, lab), (s2, d2, lab2) in edge_map.items():
        if lab != lab2:
            raise AlignmentError("edge pair with unequal labels")
        if node_map.get(s) != s2 or node_map.get(d) != d2:
            raise AlignmentError("edge pair without aligned endpoints")
    for nid in node_map:
        if kind[nid] is NodeKind.DATA and nid not in pinned \
                and matched_per_node[nid] == 0:
            raise AlignmentError(
                f"data node {nid!r} aligned without any aligned edge")
    for a, b in p.pins:
        if node_map.get(a) != b:
            raise AlignmentError(f"pin ({a!r}, {b!r}) missing from alignment")
