"""rulesynth: synthesize code-quality rules from labeled code examples."""

from .align import (Alignment, AlignmentProblem, GraphView, Mode, align,
                    build_alignment_ilp, diff_pdgs, solve_ilp)
from .lattice import Affix, Const, LabelSet, NodePredicates, join, satisfies
from .pdg import (ChangeTag, Edge, EdgeLabel, Node, NodeKind, Origin, Pdg,
                  neighbors, read_pdg, validate, write_pdg)
from .refine import RefinementSession, canonical_rule, refine_step
from .rules import (Detection, Rule, check_rule, enumerate_matches,
                    match_conjunct, prefilter, read_rule, render_rule,
                    write_rule)
from .synth import (Report, SynthConfig, SynthesisFailure, SynthesisInput,
                    compute_entropy, generate_candidate_partitions,
                    get_conjunctive_subrule, synthesize_pc, synthesize_rule)
from .uapdg import (QuantifiedConjunct, Uapdg, Vpdg, from_vpdg, merge,
                    project, to_formula)

__version__ = "0.1.0"
