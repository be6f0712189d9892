"""Command-line interface.

    rulesynth synth <corpus> -o <rule>     synthesize a rule from a corpus
    rulesynth check <rule> <path...>       run a rule, emit detections
    rulesynth refine <session> <fp>        fold one false positive
    rulesynth explain <rule>               render a rule as a formula
    rulesynth pdg <file.mj>                dump a method's graph

Exit codes: 0 success (check: no detections), 1 check found detections,
2 synthesis failed, 3 input/parse errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

from . import align as align_mod
from .frontend import BuildError, ParseError, build_pdg, load_change_dir, \
    load_method_file
from .align import diff_pdgs
from .pdg import Pdg, PdgFormatError, read_pdg, write_pdg
from .refine import RefinementSession, refine_step, rules_equivalent
from .rules import RuleFormatError, check_rule, prefilter, read_rule, \
    render_rule, write_rule
from .synth import Report, SynthConfig, SynthesisFailure, SynthesisInput, \
    synthesize_rule

EXIT_OK = 0
EXIT_DETECTIONS = 1
EXIT_SYNTH_FAIL = 2
EXIT_INPUT = 3


class CliError(Exception):
    def __init__(self, message, code=EXIT_INPUT):
        super().__init__(message)
        self.code = code


def _add_config_flags(p):
    p.add_argument("--config", help="JSON config file; flags override it")
    p.add_argument("--delta", type=float, help="entropy margin")
    p.add_argument("--max-partitions", type=int,
                   help="partition exploration budget")
    p.add_argument("--radius", type=int,
                   help="neighborhood radius for single-example conjuncts")
    p.add_argument("--solver-cap", type=int,
                   help="candidate node-pair budget for the aligner")


def _config_from(args) -> SynthConfig:
    config = SynthConfig()
    if args.config:
        try:
            with open(args.config, "r", encoding="utf-8") as handle:
                doc = json.load(handle)
        except (OSError, json.JSONDecodeError) as exc:
            raise CliError(f"cannot read config {args.config}: {exc}")
        config.delta = doc.get("delta", config.delta)
        config.max_partitions_explored = doc.get(
            "maxPartitions", config.max_partitions_explored)
        config.single_example_radius = doc.get(
            "radius", config.single_example_radius)
        config.solver_cap = doc.get("solverCap", config.solver_cap)
    if args.delta is not None:
        config.delta = args.delta
    if args.max_partitions is not None:
        config.max_partitions_explored = args.max_partitions
    if args.radius is not None:
        config.single_example_radius = args.radius
    if args.solver_cap is not None:
        config.solver_cap = args.solver_cap
    try:
        config.check()
    except ValueError as exc:
        raise CliError(str(exc))
    return config


def _load_graph(path: str) -> Pdg:
    try:
        if path.endswith(".pdg"):
            with open(path, "rb") as handle:
                return read_pdg(handle.read())
        if path.endswith(".mj"):
            return build_pdg(load_method_file(path), origin_file=path)
    except (ParseError, BuildError, PdgFormatError, OSError) as exc:
        raise CliError(f"{path}: {exc}")
    raise CliError(f"{path}: expected a .mj or .pdg file")


def _scan_graph_files(paths) -> list:
    files = []
    for path in paths:
        if os.path.isdir(path):
            for root, _, names in os.walk(path):
                for name in sorted(names):
                    if name.endswith((".mj", ".pdg")):
                        files.append(os.path.join(root, name))
        elif os.path.exists(path):
            files.append(path)
        else:
            raise CliError(f"{path}: no such file or directory")
    return sorted(files)


def load_corpus(root: str, name=None):
    """Corpus layout: changes/<id>/{before,after}.mj, violating/*,
    conforming/*. Change pairs contribute tagged graphs on both sides."""
    if not os.path.isdir(root):
        raise CliError(f"{root}: not a corpus directory")
    violating, v_sources = [], []
    conforming, c_sources = [], []
    changes_dir = os.path.join(root, "changes")
    if os.path.isdir(changes_dir):
        for change_id in sorted(os.listdir(changes_dir)):
            change_path = os.path.join(changes_dir, change_id)
            if not os.path.isdir(change_path):
                continue
            try:
                change = load_change_dir(change_path)
                before = build_pdg(change.before,
                                   os.path.join(change_path, "before.mj"))
                after = build_pdg(change.after,
                                  os.path.join(change_path, "after.mj"))
            except (ParseError, BuildError, FileNotFoundError) as exc:
                raise CliError(f"{change_path}: {exc}")
            tagged_before, tagged_after = diff_pdgs(before, after)
            violating.append(tagged_before)
            v_sources.append(f"changes/{change_id}/before.mj")
            conforming.append(tagged_after)
            c_sources.append(f"changes/{change_id}/after.mj")
    for kind, graphs, sources in (("violating", violating, v_sources),
                                  ("conforming", conforming, c_sources)):
        section = os.path.join(root, kind)
        if os.path.isdir(section):
            for file_name in sorted(os.listdir(section)):
                if not file_name.endswith((".mj", ".pdg")):
                    continue
                path = os.path.join(section, file_name)
                graphs.append(_load_graph(path))
                sources.append(f"{kind}/{file_name}")
    if not violating:
        raise CliError(f"{root}: corpus has no violating examples "
                       f"(changes/ or violating/)")
    return SynthesisInput(
        violating=violating, conforming=conforming,
        name=name or os.path.basename(os.path.abspath(root)),
        violating_sources=v_sources, conforming_sources=c_sources)


def cmd_synth(args) -> int:
    config = _config_from(args)
    if args.dump_ilp:
        align_mod.solver.set_ilp_dump(args.dump_ilp)
    corpus = load_corpus(args.corpus)
    report = Report()
    try:
        rule = synthesize_rule(corpus, config, report)
    except SynthesisFailure as exc:
        print(f"synthesis failed: {exc}", file=sys.stderr)
        report.add(f"FAILED: {exc}")
        _write_report(args, report)
        return EXIT_SYNTH_FAIL
    finally:
        if args.dump_ilp:
            align_mod.solver.set_ilp_dump(None)
    with open(args.output, "wb") as handle:
        handle.write(write_rule(rule))
    _write_report(args, report)
    print(f"wrote {args.output}")
    return EXIT_OK


def _write_report(args, report: Report):
    path = args.report or (args.output + ".report.txt")
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(report.text())


def _read_rule_file(path: str):
    try:
        with open(path, "rb") as handle:
            return read_rule(handle.read())
    except (OSError, RuleFormatError) as exc:
        raise CliError(f"{path}: {exc}")


def cmd_check(args) -> int:
    rule = _read_rule_file(args.rule)
    files = _scan_graph_files(args.paths)

    def check_one(path):
        graph = _load_graph(path)
        if not prefilter(graph, rule.pre):
            return path, [], True
        return path, check_rule(graph, rule), False

    found = False
    with ThreadPoolExecutor(max_workers=min(8, max(1, len(files)))) as pool:
        for path, detections, prefiltered in pool.map(check_one, files):
            if prefiltered:
                print(f"{path}: prefiltered", file=sys.stderr)
                continue
            for d in detections:
                found = True
                print(d.line())
    return EXIT_DETECTIONS if found else EXIT_OK


def cmd_refine(args) -> int:
    config = _config_from(args)
    session_dir = args.session
    base_dir = os.path.join(session_dir, "base")
    rules_dir = os.path.join(session_dir, "rules")
    fps_dir = os.path.join(session_dir, "fps")
    if not os.path.isdir(base_dir):
        raise CliError(f"{session_dir}: session needs a base/ corpus")
    os.makedirs(rules_dir, exist_ok=True)
    os.makedirs(fps_dir, exist_ok=True)

    corpus = load_corpus(base_dir,
                         name=os.path.basename(os.path.abspath(session_dir)))
    fp_files = sorted(f for f in os.listdir(fps_dir) if f.endswith(".pdg"))
    session = RefinementSession(base_input=corpus)
    for file_name in fp_files:
        with open(os.path.join(fps_dir, file_name), "rb") as handle:
            session.fp_examples.append(
                (f"fps/{file_name}", read_pdg(handle.read())))

    report = Report()
    rule_files = sorted(f for f in os.listdir(rules_dir)
                        if f.endswith(".rule"))
    if not rule_files:
        base_rule = session.ensure_base(config, report)
        with open(os.path.join(rules_dir, "000.rule"), "wb") as handle:
            handle.write(write_rule(base_rule))
        rule_files = ["000.rule"]
    else:
        session.history.append(
            _read_rule_file(os.path.join(rules_dir, rule_files[-1])))

    current = session.current_rule()
    fp_graph = _load_graph(args.fp)
    detections = check_rule(fp_graph, current)
    if not detections:
        raise CliError(f"{args.fp}: not a detection of the current rule; "
                       f"nothing to refine")

    version = len(fp_files) + 1
    try:
        rule, converged = refine_step(session, fp_graph,
                                      f"fps/{version:03d}.pdg", config,
                                      report)
    except SynthesisFailure as exc:
        print(f"refinement failed: {exc}", file=sys.stderr)
        _append_log(session_dir, f"fp {args.fp}: FAILED: {exc}")
        return EXIT_SYNTH_FAIL

    with open(os.path.join(fps_dir, f"{version:03d}.pdg"), "wb") as handle:
        handle.write(write_pdg(fp_graph))
    with open(os.path.join(rules_dir, f"{version:03d}.rule"), "wb") as handle:
        handle.write(write_rule(rule))
    _append_log(session_dir,
                f"fp {args.fp} -> rules/{version:03d}.rule "
                f"converged={'true' if converged else 'false'}")
    print(f"converged: {'true' if converged else 'false'}")
    return EXIT_OK


def _append_log(session_dir, line):
    with open(os.path.join(session_dir, "log.txt"), "a",
              encoding="utf-8") as handle:
        handle.write(line + "\n")


def cmd_explain(args) -> int:
    rule = _read_rule_file(args.rule)
    sys.stdout.write(render_rule(rule))
    return EXIT_OK


def cmd_pdg(args) -> int:
    graph = _load_graph(args.file)
    sys.stdout.write(write_pdg(graph).decode("utf-8"))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rulesynth",
        description="synthesize and run code-quality rules over PDGs")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="synthesize a rule from a corpus")
    p.add_argument("corpus")
    p.add_argument("-o", "--output", required=True, help="rule file to write")
    p.add_argument("--report", help="synthesis report path "
                                    "(default: <output>.report.txt)")
    p.add_argument("--dump-ilp", metavar="DIR",
                   help="dump every alignment program in LP text form")
    _add_config_flags(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("check", help="run a rule over methods or graphs")
    p.add_argument("rule")
    p.add_argument("paths", nargs="+")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("refine", help="fold a false positive into a session")
    p.add_argument("session")
    p.add_argument("fp", help="false-positive example (.mj or .pdg)")
    _add_config_flags(p)
    p.set_defaults(func=cmd_refine)

    p = sub.add_parser("explain", help="render a rule as a logical formula")
    p.add_argument("rule")
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("pdg", help="emit the interchange graph of a method")
    p.add_argument("file")
    p.set_defaults(func=cmd_pdg)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except align_mod.SolverBudgetExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SYNTH_FAIL


if __name__ == "__main__":
    sys.exit(main())
