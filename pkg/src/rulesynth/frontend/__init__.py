"""Mini-language frontend: parse ``.mj`` method bodies into normalized PDGs."""

from __future__ import annotations

import os

from ..analysis import compute_output_ignored, compute_trans_control_dep
from .build import BuildError, REL_OP_LABEL, build_pdg, dedup_getters, \
    normalize_relops
from .parser import CodeChange, MethodSource, ParseError, parse_method

__all__ = [
    "BuildError", "CodeChange", "MethodSource", "ParseError", "REL_OP_LABEL",
    "build_pdg", "compute_output_ignored", "compute_trans_control_dep",
    "dedup_getters", "load_change_dir", "load_method_file", "normalize_relops",
    "parse_method",
]


def load_method_file(path: str) -> MethodSource:
    name = os.path.splitext(os.path.basename(path))[0]
    with open(path, "r", encoding="utf-8") as handle:
        return MethodSource(name=name, body=handle.read())


def load_change_dir(path: str) -> CodeChange:
    """A code change is a directory holding ``before.mj`` and ``after.mj``."""
    before = os.path.join(path, "before.mj")
    after = os.path.join(path, "after.mj")
    for p in (before, after):
        if not os.path.exists(p):
            raise FileNotFoundError(f"change directory {path} is missing "
                                    f"{os.path.basename(p)}")
    return CodeChange(load_method_file(before), load_method_file(after))
