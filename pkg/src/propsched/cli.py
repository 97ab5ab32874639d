"""Command-line entry point: ``propsched <command> ...``.

Exit status: 0 ok, 1 usage error, 2 parse or input error, 3 size limit.
"""

from __future__ import annotations

import argparse
import re
import sys
import time
from collections.abc import Sequence
from importlib import resources
from pathlib import Path

from .formats import format_store, parse_artifact, parse_rule_file, parse_store, render_rule_file, serialize_artifact
from .kernel import gi_fixpoint, r_fixpoint
from .memrules import compile_rules, dead_checker
from .redundancy import Atom, minimize, report_csv, solving_stats
from .rulegen import BUNDLED, ConstraintDef, SizeLimitError, generate, load_bundled, parse_constraint
from .setrules import atom_names, closure, parse_set_rules
from .solver import RuleCache, SearchConfig, bench, build_csp, reports_csv, search
from .store import StoreLattice

EXIT_OK, EXIT_USAGE, EXIT_PARSE, EXIT_SIZE = 0, 1, 2, 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise _UsageError(f"{self.prog}: {message}")


def load_constraint_arg(arg: str) -> ConstraintDef:
    """A constraint file path, or the name of a bundled constraint."""
    path = Path(arg)
    if path.exists():
        return parse_constraint(path.read_text())
    if arg in BUNDLED:
        return load_bundled(arg)
    raise ValueError(f"no constraint file {arg!r} (bundled: {', '.join(BUNDLED)})")


def bundled_data(name: str) -> str:
    return resources.files("propsched.data").joinpath(name).read_text()


def read_arg_text(arg: str) -> str:
    """Read a file, falling back to a bundled data file of that name."""
    path = Path(arg)
    if path.exists():
        return path.read_text()
    try:
        return bundled_data(arg)
    except (FileNotFoundError, IsADirectoryError):
        raise ValueError(f"no such file {arg!r}") from None


def parse_order(text: str) -> list[Atom]:
    """Atoms as ``rule.atom`` pairs, 1-based, separated by whitespace."""
    out = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        for word in raw.split("#", 1)[0].split():
            m = re.fullmatch(r"(\d+)\.(\d+)", word)
            if m is None:
                raise ValueError(f"line {lineno}: expected <rule>.<atom>, found {word!r}")
            out.append(Atom(int(m.group(1)) - 1, int(m.group(2)) - 1))
    return out


def cmd_generate(args, out) -> int:
    c = load_constraint_arg(args.constraint)
    rules = generate(c, args.kind)
    out.write(render_rule_file(rules, c))
    return EXIT_OK


def cmd_compile(args, out) -> int:
    c = load_constraint_arg(args.constraint)
    rules = parse_rule_file(read_arg_text(args.rules), c)
    t0 = time.perf_counter()
    compiled = compile_rules(rules, c.universes)
    elapsed = time.perf_counter() - t0
    Path(args.output).write_text(serialize_artifact(c, rules, compiled))
    stats = solving_stats(compiled)
    out.write(f"compiled {len(rules)} rules for {c.name} in {elapsed:.3f}s\n{stats.summary()}\n")
    return EXIT_OK


def cmd_stats(args, out) -> int:
    art = parse_artifact(Path(args.artifact).read_text())
    stats = solving_stats(art.compiled)
    out.write(stats.to_csv())
    out.write(f"# {stats.summary()}\n")
    return EXIT_OK


def cmd_propagate(args, out) -> int:
    art = parse_artifact(Path(args.artifact).read_text())
    c = art.constraint
    lattice = StoreLattice(c.universes)
    store = parse_store(args.store, c) if args.store else lattice.bottom
    order = [args.first - 1] if args.first else None
    if args.scheduler == "GI":
        tr = gi_fixpoint(art.compiled.rules, lattice, store, order=order)
    else:
        tr = r_fixpoint(art.compiled, lattice, store, order=order, dead_check=dead_checker(args.dead_check))
    out.write(format_store(tr.final_store, c.universes, c.var_names) + "\n")
    out.write(
        f"condition_tests={tr.condition_tests} body_applications={tr.body_applications} "
        f"live_rules={len(tr.f_fin)} rules_removed={tr.rules_removed}\n"
    )
    return EXIT_OK


def cmd_minimize(args, out) -> int:
    c = load_constraint_arg(args.constraint)
    rules = parse_rule_file(read_arg_text(args.rules), c)
    if args.order == "cost":
        order: str | list[Atom] = "cost"
    elif args.order.startswith(("paper:", "file:")):
        order = parse_order(read_arg_text(args.order.split(":", 1)[1]))
    else:
        raise _UsageError(f"--order must be 'cost', 'paper:<file>' or 'file:<file>', not {args.order!r}")
    report = minimize(rules, c.universes, order)
    degrees = compile_rules(rules, c.universes).solving_degree if args.degrees else None
    text = render_rule_file(report.kept, c)
    csv_text = report_csv(report, rules, degrees)
    if args.output:
        Path(args.output).write_text(text)
    else:
        out.write(text)
    if args.report:
        Path(args.report).write_text(csv_text)
    else:
        out.write(csv_text)
    return EXIT_OK


def _seeds(spec: str) -> list[int]:
    m = re.fullmatch(r"(\d+)\.\.(\d+)", spec)
    if m:
        return list(range(int(m.group(1)), int(m.group(2)) + 1))
    return [int(s) for s in spec.split(",")]


def cmd_solve(args, out) -> int:
    path = Path(args.csp)
    csp = build_csp(path.read_text(), path.parent, args.kind)
    config = SearchConfig(args.seed, args.labelling, args.limit, args.scheduler, args.dead_check)
    report = search(csp, config)
    out.write(reports_csv([report]))
    if args.solutions:
        for s in sorted(report.solutions, key=lambda s: s.domains):
            out.write("# " + csp.format(s) + "\n")
    return EXIT_OK


def cmd_bench(args, out) -> int:
    path = Path(args.csp)
    csp = build_csp(path.read_text(), path.parent, args.kind, RuleCache())
    out.write(reports_csv(bench(csp, _seeds(args.seeds), args.limit, args.labelling)))
    return EXIT_OK


def cmd_closure(args, out) -> int:
    table, rules = parse_set_rules(read_arg_text(args.rules))
    initial = 0
    for a in args.initial.split():
        if a not in table:
            table.append(a)
        initial |= 1 << table.index(a)
    result = closure(rules, initial, len(table))
    out.write(" ".join(atom_names(result, table)) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="propsched", description="Schedulers, generation and minimization for membership rules.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="all minimal valid rules of a constraint")
    g.add_argument("constraint")
    g.add_argument("--kind", choices=("equality", "membership"), default="membership")
    g.set_defaults(func=cmd_generate)

    c = sub.add_parser("compile", help="precompute friends/obviated tables")
    c.add_argument("rules")
    c.add_argument("constraint")
    c.add_argument("-o", "--output", required=True)
    c.set_defaults(func=cmd_compile)

    m = sub.add_parser("minimize", help="remove redundant rules and body atoms")
    m.add_argument("rules")
    m.add_argument("constraint")
    m.add_argument("--order", default="cost", help="cost, or paper:<file> / file:<file> listing rule.atom pairs to test first")
    m.add_argument("-o", "--output")
    m.add_argument("--report")
    m.add_argument("--degrees", action="store_true", help="add solving degrees to the report")
    m.set_defaults(func=cmd_minimize)

    pr = sub.add_parser("propagate", help="fixpoint of a compiled rule set from a store")
    pr.add_argument("artifact")
    pr.add_argument("--store", default="")
    pr.add_argument("--scheduler", choices=("GI", "R"), default="R")
    pr.add_argument("--first", type=int, help="1-based rule to choose first")
    pr.add_argument("--dead-check", choices=("always", "singleton-only"), default="always")
    pr.set_defaults(func=cmd_propagate)

    s = sub.add_parser("solve", help="randomized search recording fixpoints")
    s.add_argument("csp")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--limit", type=int, default=10_000)
    s.add_argument("--scheduler", choices=("GI", "R"), default="R")
    s.add_argument("--labelling", choices=("random", "lexicographic"), default="random")
    s.add_argument("--kind", choices=("equality", "membership"), default="membership")
    s.add_argument("--dead-check", choices=("always", "singleton-only"), default="always")
    s.add_argument("--solutions", action="store_true", help="also list the solutions")
    s.set_defaults(func=cmd_solve)

    b = sub.add_parser("bench", help="compare GI and R counters over several seeds")
    b.add_argument("csp")
    b.add_argument("--seeds", default="0..9", help="N..M or a comma list")
    b.add_argument("--limit", type=int, default=1000)
    b.add_argument("--labelling", choices=("random", "lexicographic"), default="random")
    b.add_argument("--kind", choices=("equality", "membership"), default="membership")
    b.set_defaults(func=cmd_bench)

    st = sub.add_parser("stats", help="solving-degree CSV of a compiled rule set")
    st.add_argument("artifact")
    st.set_defaults(func=cmd_stats)

    cl = sub.add_parser("closure", help="closure of an atom set under 'p q -> r' rules")
    cl.add_argument("rules")
    cl.add_argument("--initial", default="")
    cl.set_defaults(func=cmd_closure)
    return p


def main(argv: Sequence[str] | None = None, out=None) -> int:
    out = sys.stdout if out is None else out
    try:
        args = build_parser().parse_args(argv)
        return args.func(args, out)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SizeLimitError as exc:
        print(f"propsched: size limit exceeded: {exc}", file=sys.stderr)
        return EXIT_SIZE
    except (ValueError, OSError) as exc:
        print(f"propsched: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
