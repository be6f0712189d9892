"""Rule synthesis from violating and conforming examples.

The precondition is the merged common core of the violating graphs. Every
conforming graph satisfying it gets pinned with its models and handed to
postcondition synthesis, which starts from one group holding all of them
and keeps splitting groups (lowest-entropy candidate splits first, BFS)
until no violating example satisfies any group's conjunct.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .align import AlignmentProblem, Mode, align
from .pdg import Pdg
from .rules import Rule, check_rule, enumerate_matches, match_conjunct, \
    prefilter
from .uapdg import (QuantifiedConjunct, Uapdg, Vpdg, from_vpdg, project,
                    restrict_nodes, to_formula)


class SynthesisFailure(Exception):
    pass


class PartitionBudgetExceeded(SynthesisFailure):
    pass


@dataclass
class SynthConfig:
    delta: float = 0.05
    max_partitions_explored: int = 64
    single_example_radius: int = 1
    solver_cap: Optional[int] = None

    def check(self):
        if self.delta < 0:
            raise ValueError("delta must be nonnegative")
        if self.max_partitions_explored <= 0:
            raise ValueError("max_partitions_explored must be positive")
        if self.single_example_radius <= 0:
            raise ValueError("single_example_radius must be positive")

    def as_dict(self) -> dict:
        return {"delta": self.delta,
                "maxPartitions": self.max_partitions_explored,
                "radius": self.single_example_radius,
                "solverCap": self.solver_cap}


@dataclass
class SynthesisInput:
    violating: List[Pdg]
    conforming: List[Pdg]
    name: str = "rule"
    violating_sources: Optional[List[str]] = None
    conforming_sources: Optional[List[str]] = None

    def check(self):
        if not self.violating:
            raise ValueError("at least one violating example is required")
        for attr in ("violating_sources", "conforming_sources"):
            sources = getattr(self, attr)
            graphs = self.violating if attr.startswith("v") else self.conforming
            if sources is not None and len(sources) != len(graphs):
                raise ValueError(f"{attr} length mismatch")


class Report:
    """Plain-text synthesis log consumed by the CLI."""

    def __init__(self):
        self.lines: List[str] = []

    def add(self, text: str):
        self.lines.append(text)

    def text(self) -> str:
        return "\n".join(self.lines) + ("\n" if self.lines else "")


def _pins_between(a: Uapdg, b: Uapdg) -> List[Tuple[str, str]]:
    pins = []
    for var in sorted(a.free_vars()):
        pins.append((a.frozen_node_for(var), b.frozen_node_for(var)))
    return pins


def _merge_mode(examples: Sequence[Vpdg]) -> Mode:
    no_free_vars = all(not e.valuation for e in examples)
    tagged = all(e.graph.is_change_tagged() for e in examples)
    return Mode.PRECONDITION if no_free_vars and tagged else Mode.POSTCONDITION


def fold_merge(examples: Sequence[Vpdg], config: SynthConfig,
               report: Optional[Report] = None) -> Uapdg:
    """Left fold of pairwise merges in input order."""
    from .uapdg import merge  # local import keeps module load cycles away

    mode = _merge_mode(examples)
    merged = from_vpdg(examples[0])
    for example in examples[1:]:
        operand = from_vpdg(example)
        problem = AlignmentProblem(merged.as_view(), operand.as_view(),
                                   mode=mode,
                                   pins=_pins_between(merged, operand))
        alignment = align(problem, solver_cap=config.solver_cap)
        if report is not None:
            report.add(f"  aligned against {example.source}: "
                       f"objective {alignment.objective} "
                       f"({len(alignment.node_map)} nodes, "
                       f"{len(alignment.edge_map)} edges)")
        merged = merge(merged, operand, alignment)
    return merged


def get_conjunctive_subrule(examples: Sequence[Vpdg],
                            config: Optional[SynthConfig] = None,
                            report: Optional[Report] = None
                            ) -> Tuple[QuantifiedConjunct, List[Vpdg]]:
    """Most specific conjunct shared by all examples, plus the examples
    re-valuated with the conjunct's variable names."""
    config = config or SynthConfig()
    if not examples:
        raise ValueError("no examples to generalize")
    free = examples[0].free_vars()
    for e in examples[1:]:
        if e.free_vars() != free:
            raise ValueError("examples disagree on free variables")

    if len(examples) == 1:
        example = examples[0]
        a = from_vpdg(example)
        if not free:
            formula = to_formula(a)
            return formula, [Vpdg(example.graph,
                                  a.valuation_for(example.source),
                                  example.source)]
        keep = {nid for nid in a.m_f}
        frontier = set(example.valuation)  # original graph node ids
        for _ in range(config.single_example_radius):
            frontier = {m for nid in frontier
                        for m in example.graph.neighbors(nid)}
            frontier -= {n.presence[example.source]
                         for n in a.nodes if n.id in keep}
            if not frontier:
                break
            keep |= {n.id for n in a.nodes
                     if n.presence[example.source] in frontier}
        restricted = restrict_nodes(a, keep)
        formula = to_formula(restricted)
        kept_orig = {n.presence[example.source]
                     for n in restricted.nodes}
        valuation = {nid: var for nid, var in
                     a.valuation_for(example.source).items()
                     if nid in kept_orig}
        return formula, [Vpdg(example.graph, valuation, example.source)]

    merged = fold_merge(examples, config, report)
    core = project(merged, [e.source for e in examples])
    if report is not None:
        report.add(f"  shared core: {len(core.nodes)} nodes, "
                   f"{len(core.edges)} edges "
                   f"(merged graph holds {len(merged.nodes)} nodes)")
    formula = to_formula(core)
    core_ids = [n.id for n in core.nodes]
    revaluated = [Vpdg(e.graph, merged.valuation_for(e.source, core_ids),
                       e.source) for e in examples]
    return formula, revaluated


def _binary_entropy(p: float) -> float:
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log(p) - (1.0 - p) * math.log(1.0 - p)


def _subset_entropy(merged: Uapdg, subset: frozenset) -> float:
    if not subset:
        return 0.0
    total = 0.0
    for node in merged.nodes:
        inside = len(subset & set(node.presence))
        total += _binary_entropy(inside / len(subset))
    return total


def compute_entropy(examples: Sequence[Vpdg], merged: Uapdg,
                    split_node: str) -> float:
    """Weighted presence entropy of splitting the examples by whether they
    contribute to ``split_node``."""
    node = merged.node(split_node)
    sources = [e.source for e in examples]
    with_node = frozenset(s for s in sources if s in node.presence)
    without = frozenset(sources) - with_node
    n = len(sources)
    return (len(with_node) / n) * _subset_entropy(merged, with_node) \
        + (len(without) / n) * _subset_entropy(merged, without)


def _merged_node_order(node_id: str) -> Tuple[int, str]:
    digits = node_id[1:]
    return (int(digits), node_id) if digits.isdigit() else (1 << 30, node_id)


def generate_candidate_partitions(examples: Sequence[Vpdg],
                                  config: Optional[SynthConfig] = None,
                                  report: Optional[Report] = None
                                  ) -> List[Tuple[List[Vpdg], List[Vpdg]]]:
    """Low-entropy binary splits of the examples, keyed on action nodes that
    sit next to the shared core without belonging to it."""
    config = config or SynthConfig()
    merged = fold_merge(examples, config)
    core = project(merged, [e.source for e in examples])
    core_ids = {n.id for n in core.nodes}

    adjacent: Dict[str, set] = {}
    for e in merged.edges:
        adjacent.setdefault(e.src, set()).add(e.dst)
        adjacent.setdefault(e.dst, set()).add(e.src)

    candidates = []
    for node in merged.nodes:
        if node.kind.value != "action" or node.id in core_ids:
            continue
        if not (adjacent.get(node.id, set()) & core_ids):
            continue
        candidates.append(node.id)
    if not candidates:
        return []

    scored = [(compute_entropy(examples, merged, nid), nid)
              for nid in candidates]
    best = min(h for h, _ in scored)
    scored = [(h, nid) for h, nid in scored if h <= best + config.delta]
    scored.sort(key=lambda item: (item[0], _merged_node_order(item[1])))

    partitions = []
    seen_splits = set()
    for h, nid in scored:
        presence = set(merged.node(nid).presence)
        left = [e for e in examples if e.source in presence]
        right = [e for e in examples if e.source not in presence]
        key = frozenset((frozenset(e.source for e in left),
                         frozenset(e.source for e in right)))
        if key in seen_splits:
            continue
        seen_splits.add(key)
        if report is not None:
            report.add(f"  split on {merged.node(nid).label_value()!r} "
                       f"(H={h:.4f}): {len(left)} vs {len(right)} examples")
        partitions.append((left, right))
    return partitions


def _satisfies_pinned(example: Vpdg, conjunct: QuantifiedConjunct) -> bool:
    pins = {var: nid for nid, var in example.valuation.items()
            if var in conjunct.free_vars}
    return match_conjunct(example.graph, conjunct, pins) is not None


def synthesize_pc(violating: Sequence[Vpdg], conforming: Sequence[Vpdg],
                  config: Optional[SynthConfig] = None,
                  report: Optional[Report] = None
                  ) -> List[QuantifiedConjunct]:
    """Postcondition disjuncts covering every conforming example while
    rejecting every pinned violating example. Empty list encodes False."""
    config = config or SynthConfig()
    if not conforming:
        if report is not None:
            report.add("postcondition: no conforming example satisfies the "
                       "precondition; postcondition is False")
        return []

    worklist = deque([[list(conforming)]])
    explored = 0
    while worklist:
        partition = worklist.popleft()
        explored += 1
        if explored > config.max_partitions_explored:
            raise PartitionBudgetExceeded(
                f"explored {explored - 1} partitions without separating the "
                f"examples (budget {config.max_partitions_explored})")
        if report is not None:
            sizes = ", ".join(str(len(g)) for g in partition)
            report.add(f"partition #{explored}: group sizes [{sizes}]")
        disjuncts = [get_conjunctive_subrule(group, config, report)[0]
                     for group in partition]
        offending = None
        for v in violating:
            for i, disjunct in enumerate(disjuncts):
                if _satisfies_pinned(v, disjunct):
                    offending = (v, i)
                    break
            if offending:
                break
        if offending is None:
            if report is not None:
                report.add(f"accepted: {len(disjuncts)} disjunct(s) reject "
                           f"all violating examples")
            return disjuncts
        v, i = offending
        if report is not None:
            report.add(f"  violating example {v.source} satisfies "
                       f"disjunct {i + 1}; splitting its group")
        if len(partition[i]) == 1:
            raise SynthesisFailure(
                f"cannot separate: violating example {v.source} satisfies "
                f"the conjunct of the single conforming example "
                f"{partition[i][0].source}")
        splits = generate_candidate_partitions(partition[i], config, report)
        rest = partition[:i] + partition[i + 1:]
        for left, right in splits:
            worklist.append(rest + [left, right])
    raise SynthesisFailure(
        "no candidate partition separates the conforming examples from "
        "the violating ones")


def synthesize_rule(inp: SynthesisInput,
                    config: Optional[SynthConfig] = None,
                    report: Optional[Report] = None) -> Rule:
    config = config or SynthConfig()
    config.check()
    inp.check()

    v_sources = inp.violating_sources or \
        [f"violating/{i}" for i in range(len(inp.violating))]
    c_sources = inp.conforming_sources or \
        [f"conforming/{i}" for i in range(len(inp.conforming))]

    if report is not None:
        report.add(f"synthesizing rule {inp.name!r} from "
                   f"{len(inp.violating)} violating and "
                   f"{len(inp.conforming)} conforming examples")
        report.add("precondition merge:")
    violating_vpdgs = [Vpdg(g, {}, src)
                       for g, src in zip(inp.violating, v_sources)]
    pre_raw, revaluated = get_conjunctive_subrule(violating_vpdgs, config,
                                                  report)

    mapping = {old: f"x{k}" for k, old in enumerate(pre_raw.bound_vars)}
    pre = QuantifiedConjunct(
        free_vars=tuple(mapping[old] for old in pre_raw.bound_vars),
        bound_vars=(),
        node_atoms={mapping[v]: preds
                    for v, preds in pre_raw.node_atoms.items()},
        edge_atoms=tuple((mapping[s], lab, mapping[d])
                         for s, lab, d in pre_raw.edge_atoms))
    violating_pinned = [
        Vpdg(v.graph, {nid: mapping[var] for nid, var in v.valuation.items()},
             v.source)
        for v in revaluated]
    if report is not None:
        report.add(f"precondition: {len(pre.free_vars)} node(s), "
                   f"{len(pre.edge_atoms)} edge atom(s)")

    pinned_conforming: List[Vpdg] = []
    for g, src in zip(inp.conforming, c_sources):
        if not prefilter(g, pre):
            continue
        for k, model in enumerate(enumerate_matches(g, pre)):
            valuation = {nid: var for var, nid in model.items()}
            pinned_conforming.append(Vpdg(g, valuation, f"{src}#m{k}"))
    if report is not None:
        report.add(f"{len(pinned_conforming)} pinned conforming model(s) "
                   f"satisfy the precondition")

    disjuncts = synthesize_pc(violating_pinned, pinned_conforming, config,
                              report)

    rule = Rule(
        name=inp.name, pre=pre, post_disjuncts=tuple(disjuncts),
        provenance={"violating": list(v_sources),
                    "conforming": list(c_sources),
                    "config": config.as_dict()})
    rule.check()

    for g, src in zip(inp.violating, v_sources):
        if not check_rule(g, rule):
            raise SynthesisFailure(
                f"synthesized rule fails to flag violating example {src}")
    for g, src in zip(inp.conforming, c_sources):
        if check_rule(g, rule):
            raise SynthesisFailure(
                f"synthesized rule still flags conforming example {src}")
    if report is not None:
        report.add(f"final rule: precondition size {len(pre.node_atoms)}, "
                   f"{len(disjuncts)} postcondition disjunct(s) with sizes "
                   f"{[d.node_count() for d in disjuncts]}")
    return rule
