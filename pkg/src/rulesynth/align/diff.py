"""Graph differencing over a code change: tag nodes by alignment."""

from __future__ import annotations

from typing import Optional, Tuple

from ..pdg import ChangeTag, Pdg
from .problem import AlignmentProblem, GraphView, Mode
from .solver import align


def diff_pdgs(before: Pdg, after: Pdg,
              solver_cap: Optional[int] = None) -> Tuple[Pdg, Pdg]:
    """Align before/after (tags play no role here) and tag every node:
    mapped nodes become unchanged on both sides, the rest deleted/added."""
    problem = AlignmentProblem(GraphView.of_pdg(before),
                               GraphView.of_pdg(after),
                               mode=Mode.POSTCONDITION)
    result = align(problem, solver_cap=solver_cap)
    mapped_before = set(result.node_map)
    mapped_after = set(result.node_map.values())

    tagged_before = Pdg(
        [n.with_tag(ChangeTag.UNCHANGED if n.id in mapped_before
                    else ChangeTag.DELETED) for n in before.nodes],
        before.edges, before.origin)
    tagged_after = Pdg(
        [n.with_tag(ChangeTag.UNCHANGED if n.id in mapped_after
                    else ChangeTag.ADDED) for n in after.nodes],
        after.edges, after.origin)
    return tagged_before, tagged_after
