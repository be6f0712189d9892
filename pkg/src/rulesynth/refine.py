"""Iterative rule refinement with labeled false-positive examples.

Every accepted false positive re-runs synthesis over the original change
corpus plus all false positives so far. The protocol converges when one
more example leaves the rule unchanged, compared on canonical forms.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .lattice import predicates_to_obj
from .pdg import Pdg
from .rules import Rule
from .synth import Report, SynthConfig, SynthesisInput, synthesize_rule
from .uapdg import QuantifiedConjunct

_TIE_CAP = 40320  # 8!; bound-variable symmetry never gets near this


class CanonicalizationError(ValueError):
    pass


def _conjunct_obj(q: QuantifiedConjunct, order: Dict[str, str]) -> dict:
    nodes = {}
    for var, preds in q.node_atoms.items():
        nodes[order.get(var, var)] = predicates_to_obj(preds)
    edges = sorted([order.get(s, s), lab.text(), order.get(d, d)]
                   for s, lab, d in q.edge_atoms)
    return {"freeVars": sorted(order.get(v, v) for v in q.free_vars),
            "nodes": dict(sorted(nodes.items())),
            "edges": edges}


def _signature(q: QuantifiedConjunct) -> Dict[str, str]:
    """Stable color per variable: predicate bundle refined by neighborhood
    structure until stable."""
    color = {}
    for var in q.all_vars():
        preds = q.node_atoms.get(var)
        base = json.dumps(predicates_to_obj(preds), sort_keys=True) \
            if preds is not None else "{}"
        pinned = f"free:{var}" if var in q.free_vars else "bound"
        color[var] = f"{pinned}|{base}"
    for _ in range(len(color) + 1):
        refined = {}
        for var in color:
            around = []
            for s, lab, d in q.edge_atoms:
                if s == var:
                    around.append(f">{lab.text()}|{color[d]}")
                if d == var:
                    around.append(f"<{lab.text()}|{color[s]}")
            refined[var] = color[var] + "#" + ",".join(sorted(around))
        if len(set(refined.values())) == len(set(color.values())):
            color = refined
            break
        color = refined
    return color


def canonical_conjunct(q: QuantifiedConjunct) -> dict:
    """Rename bound variables to y0..yn so that structurally equal conjuncts
    serialize identically; free variables keep their names."""
    color = _signature(q)
    groups: Dict[str, List[str]] = {}
    for var in q.bound_vars:
        groups.setdefault(color[var], []).append(var)
    ordered_groups = [sorted(groups[c]) for c in sorted(groups)]

    total = 1
    for g in ordered_groups:
        total *= _factorial(len(g))
    if total > _TIE_CAP:
        raise CanonicalizationError(
            f"{total} symmetric bound-variable orderings exceed the "
            f"canonicalization cap")

    best = None
    for perm_set in itertools.product(
            *[itertools.permutations(g) for g in ordered_groups]):
        flat = [v for group in perm_set for v in group]
        renaming = {v: f"y{i}" for i, v in enumerate(flat)}
        obj = _conjunct_obj(q, renaming)
        blob = json.dumps(obj, sort_keys=True)
        if best is None or blob < best[0]:
            best = (blob, obj)
    if best is None:
        return _conjunct_obj(q, {})
    return best[1]


def _factorial(n: int) -> int:
    out = 1
    for k in range(2, n + 1):
        out *= k
    return out


def canonical_rule(r: Rule) -> bytes:
    """Deterministic serialization: canonical bound variables, disjuncts
    sorted by size then content. Equal rules produce equal bytes;
    provenance is excluded."""
    pre = _conjunct_obj(r.pre, {})
    disjuncts = [canonical_conjunct(d) for d in r.post_disjuncts]
    disjuncts.sort(key=lambda obj: (len(obj["nodes"]),
                                    json.dumps(obj, sort_keys=True)))
    doc = {"name": r.name, "pre": pre, "post": disjuncts}
    return (json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n") \
        .encode("utf-8")


def rules_equivalent(a: Rule, b: Rule) -> bool:
    return canonical_rule(a) == canonical_rule(b)


@dataclass
class RefinementSession:
    base_input: SynthesisInput
    fp_examples: List[Tuple[str, Pdg]] = field(default_factory=list)
    history: List[Rule] = field(default_factory=list)

    def current_rule(self) -> Rule:
        if not self.history:
            raise ValueError("session has no synthesized rule yet")
        return self.history[-1]

    def ensure_base(self, config: Optional[SynthConfig] = None,
                    report: Optional[Report] = None) -> Rule:
        if not self.history:
            self.history.append(
                synthesize_rule(self._input_with_fps(), config, report))
        return self.history[-1]

    def _input_with_fps(self) -> SynthesisInput:
        base = self.base_input
        c_sources = base.conforming_sources or \
            [f"conforming/{i}" for i in range(len(base.conforming))]
        conforming = list(base.conforming) + [g for _, g in self.fp_examples]
        sources = list(c_sources) + [src for src, _ in self.fp_examples]
        return SynthesisInput(
            violating=base.violating, conforming=conforming, name=base.name,
            violating_sources=base.violating_sources,
            conforming_sources=sources)


def refine_step(session: RefinementSession, new_fp: Pdg, fp_source: str,
                config: Optional[SynthConfig] = None,
                report: Optional[Report] = None) -> Tuple[Rule, bool]:
    """Fold one more conforming example and re-synthesize. Returns the new
    rule and whether it equals the previous one (convergence)."""
    previous = session.ensure_base(config, report)
    session.fp_examples.append((fp_source, new_fp))
    try:
        rule = synthesize_rule(session._input_with_fps(), config, report)
    except Exception:
        session.fp_examples.pop()
        raise
    converged = rules_equivalent(rule, previous)
    session.history.append(rule)
    return rule, converged
