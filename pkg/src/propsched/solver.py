"""Multi-constraint propagation interleaved with labelling.

Each posted constraint owns a compiled rule set over its own argument
positions.  Propagation projects the global store onto a constraint, runs
that constraint's scheduler and writes the result back, round-robin until no
constraint changes anything.  Under the R scheduler every constraint keeps the
live rule set it ended with; along a branch of the search tree the stores only
grow, so the next run for that constraint starts from that smaller set.
"""

from __future__ import annotations

import csv
import io
import random
from collections import deque
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

from .formats import CspSpec, parse_csp
from .kernel import CompiledRuleSet, gi_fixpoint, r_fixpoint
from .memrules import DeadMode, MembershipRule, compile_rules, dead_checker
from .rulegen import BUNDLED, ConstraintDef, generate, load_bundled, parse_constraint
from .store import TOP, Store, StoreLattice, StoreValue, Universe, is_assigned

Scheduler = Literal["GI", "R"]


@dataclass(frozen=True)
class Posted:
    constraint: ConstraintDef
    args: tuple[int, ...]
    rules: tuple[MembershipRule, ...]
    compiled: CompiledRuleSet

    @property
    def lattice(self) -> StoreLattice:
        return StoreLattice(self.constraint.universes)


@dataclass
class Csp:
    names: tuple[str, ...]
    universes: tuple[Universe, ...]
    posts: list[Posted] = field(default_factory=list)

    def __post_init__(self) -> None:
        self._watchers: list[list[int]] = [[] for _ in self.names]
        for k, p in enumerate(self.posts):
            self._index(k, p)

    def _index(self, k: int, p: Posted) -> None:
        if len(p.args) != p.constraint.arity:
            raise ValueError(f"{p.constraint.name} takes {p.constraint.arity} arguments, got {len(p.args)}")
        if len(set(p.args)) != len(p.args):
            raise ValueError(f"{p.constraint.name} posted on repeated variables")
        for pos, v in enumerate(p.args):
            if self.universes[v] != p.constraint.universes[pos]:
                raise ValueError(
                    f"variable {self.names[v]} ranges over {self.universes[v].values}, "
                    f"{p.constraint.name} expects {p.constraint.universes[pos].values}"
                )
            self._watchers[v].append(k)

    def post(self, p: Posted) -> None:
        self.posts.append(p)
        self._index(len(self.posts) - 1, p)

    def watchers(self, var: int) -> list[int]:
        return self._watchers[var]

    def bottom(self) -> Store:
        return Store(tuple(u.full for u in self.universes))

    def initial_state(self) -> PropState:
        return PropState(
            tuple(p.compiled.all_indices() for p in self.posts),
            tuple(False for _ in self.posts),
        )

    def is_solution(self, s: StoreValue) -> bool:
        if not is_assigned(s):
            return False
        for p in self.posts:
            t = tuple(s.domains[v].bit_length() - 1 for v in p.args)
            if t not in p.constraint.tuples:
                return False
        return True

    def format(self, s: StoreValue) -> str:
        if s is TOP:
            return "TOP"
        return ", ".join(f"{n}={u.format(d)}" for n, u, d in zip(self.names, self.universes, s.domains))


@dataclass(frozen=True)
class PropState:
    """Per-constraint live rules and solved flags; immutable, so a search node
    can hand it to both children without copying."""

    live: tuple[frozenset[int], ...]
    solved: tuple[bool, ...]


@dataclass
class Counters:
    condition_tests: int = 0
    body_applications: int = 0
    rules_removed: int = 0
    runs: int = 0

    def add(self, other: Counters) -> None:
        self.condition_tests += other.condition_tests
        self.body_applications += other.body_applications
        self.rules_removed += other.rules_removed
        self.runs += other.runs


@dataclass
class Propagation:
    store: StoreValue
    state: PropState
    counters: Counters


def propagate(
    csp: Csp,
    store: StoreValue,
    state: PropState | None = None,
    scheduler: Scheduler = "R",
    dead_mode: DeadMode = "always",
) -> Propagation:
    """Joint fixpoint of every posted constraint above ``store``."""
    if state is None:
        state = csp.initial_state()
    counters = Counters()
    if store is TOP:
        return Propagation(TOP, state, counters)
    if len(store.domains) != len(csp.names):
        raise ValueError("store does not match the CSP variables")
    live = list(state.live)
    solved = list(state.solved)
    dead = dead_checker(dead_mode)
    doms = list(store.domains)
    queue = deque(k for k in range(len(csp.posts)) if not solved[k])
    queued = set(queue)
    failed = False
    while queue:
        k = queue.popleft()
        queued.discard(k)
        if solved[k]:
            continue
        p = csp.posts[k]
        local = Store(tuple(doms[v] for v in p.args))
        if scheduler == "GI":
            tr = gi_fixpoint(p.compiled.rules, p.lattice, local)
        elif scheduler == "R":
            tr = r_fixpoint(p.compiled, p.lattice, local, live[k], dead_check=dead)
            counters.rules_removed += len(live[k]) - len(tr.f_fin)
            live[k] = tr.f_fin
        else:
            raise ValueError(f"unknown scheduler {scheduler!r}")
        counters.condition_tests += tr.condition_tests
        counters.body_applications += tr.body_applications
        counters.runs += 1
        if tr.reached_top:
            failed = True
            break
        out = tr.final_store
        for pos, v in enumerate(p.args):
            if out.domains[pos] != doms[v]:
                doms[v] = out.domains[pos]
                for j in csp.watchers(v):
                    if j != k and not solved[j] and j not in queued:
                        queue.append(j)
                        queued.add(j)
        if (scheduler == "R" and not live[k]) or is_assigned(out):
            solved[k] = True
    result = TOP if failed else Store(tuple(doms))
    return Propagation(result, PropState(tuple(live), tuple(solved)), counters)


@dataclass(frozen=True)
class SearchConfig:
    seed: int = 0
    labelling: Literal["random", "lexicographic"] = "random"
    fixpoint_record_limit: int = 10_000
    scheduler: Scheduler = "R"
    dead_mode: DeadMode = "always"

    def __post_init__(self) -> None:
        if self.fixpoint_record_limit <= 0:
            raise ValueError("fixpoint_record_limit must be positive")
        if self.labelling not in ("random", "lexicographic"):
            raise ValueError(f"unknown labelling {self.labelling!r}")
        if self.scheduler not in ("GI", "R"):
            raise ValueError(f"unknown scheduler {self.scheduler!r}")


@dataclass
class SearchReport:
    seed: int
    scheduler: str
    solutions: list[Store] = field(default_factory=list)
    fixpoints: set[Store] = field(default_factory=set)
    failures: int = 0
    nodes: int = 0
    limit_reached: bool = False
    counters: Counters = field(default_factory=Counters)

    def row(self) -> list:
        c = self.counters
        return [
            self.seed,
            self.scheduler,
            len(self.solutions),
            len(self.fixpoints),
            c.condition_tests,
            c.body_applications,
            c.rules_removed,
        ]


REPORT_HEADER = ["seed", "scheduler", "solutions", "fixpoints", "condition_tests", "body_apps", "rules_removed"]


def _choose(s: Store, universes: Sequence[Universe], labelling: str, rng: random.Random) -> tuple[int, int, bool]:
    open_vars = [v for v, d in enumerate(s.domains) if d & (d - 1)]
    if labelling == "lexicographic":
        v = open_vars[0]
        d = s.domains[v]
        return v, (d & -d).bit_length() - 1, True
    v = rng.choice(open_vars)
    d = s.domains[v]
    values = [a for a in range(len(universes[v])) if d >> a & 1]
    return v, rng.choice(values), rng.random() < 0.5


def _branch(s: Store, var: int, value: int, assign: bool) -> Store:
    doms = list(s.domains)
    doms[var] = 1 << value if assign else doms[var] & ~(1 << value)
    return Store(tuple(doms))


def search(csp: Csp, config: SearchConfig, start: StoreValue | None = None) -> SearchReport:
    """Depth-first labelling that records every fixpoint it reaches.

    A branch is cut when its fixpoint was recorded before.  Each choice picks
    a variable, a value and an action (assign it or remove it); the other
    branch takes the opposite action.  Search stops once
    ``fixpoint_record_limit`` fixpoints are recorded.
    """
    rng = random.Random(config.seed)
    report = SearchReport(seed=config.seed, scheduler=config.scheduler)
    stack: list[tuple[StoreValue, PropState]] = [(csp.bottom() if start is None else start, csp.initial_state())]
    while stack:
        store, state = stack.pop()
        report.nodes += 1
        prop = propagate(csp, store, state, config.scheduler, config.dead_mode)
        report.counters.add(prop.counters)
        fp = prop.store
        if fp is TOP:
            report.failures += 1
            continue
        if fp in report.fixpoints:
            continue
        if len(report.fixpoints) >= config.fixpoint_record_limit:
            report.limit_reached = True
            break
        report.fixpoints.add(fp)
        if is_assigned(fp):
            report.solutions.append(fp)
            continue
        var, value, assign = _choose(fp, csp.universes, config.labelling, rng)
        stack.append((_branch(fp, var, value, not assign), prop.state))
        stack.append((_branch(fp, var, value, assign), prop.state))
    return report


def reports_csv(reports: Sequence[SearchReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_HEADER)
    for r in reports:
        w.writerow(r.row())
    return buf.getvalue()


def bench(csp: Csp, seeds: Sequence[int], limit: int, labelling: str = "random") -> list[SearchReport]:
    """Run the same searches under both schedulers; counts only, no timings."""
    out = []
    for seed in seeds:
        for sched in ("GI", "R"):
            out.append(search(csp, SearchConfig(seed, labelling, limit, sched)))
    return out


# -- building CSPs ----------------------------------------------------------


class RuleCache:
    """Generated and compiled rule sets keyed by constraint and rule kind."""

    def __init__(self) -> None:
        self._cache: dict[tuple, tuple[tuple[MembershipRule, ...], CompiledRuleSet]] = {}

    def get(self, c: ConstraintDef, kind: str) -> tuple[tuple[MembershipRule, ...], CompiledRuleSet]:
        key = (c.name, c.universes, c.tuples, kind)
        if key not in self._cache:
            rules = tuple(generate(c, kind))
            self._cache[key] = (rules, compile_rules(rules, c.universes))
        return self._cache[key]


_default_cache = RuleCache()


def post_constraint(csp: Csp, c: ConstraintDef, args: Sequence[int], kind: str = "membership", cache: RuleCache | None = None) -> None:
    rules, compiled = (cache or _default_cache).get(c, kind)
    csp.post(Posted(c, tuple(args), rules, compiled))


def load_constraint(name: str, spec: CspSpec, base: Path | None) -> ConstraintDef:
    if name in spec.loads:
        path = Path(spec.loads[name])
        if base is not None and not path.is_absolute():
            path = base / path
        return parse_constraint(path.read_text())
    if base is not None and (base / f"{name}.con").exists():
        return parse_constraint((base / f"{name}.con").read_text())
    if name in BUNDLED:
        return load_bundled(name)
    raise ValueError(f"constraint {name!r} not found")


def build_csp(text: str, base: Path | None = None, kind: str = "membership", cache: RuleCache | None = None) -> Csp:
    spec = parse_csp(text)
    names = tuple(n for n, _ in spec.variables)
    index = {n: i for i, n in enumerate(names)}
    csp = Csp(names, tuple(u for _, u in spec.variables))
    loaded: dict[str, ConstraintDef] = {}
    for cname, args, lineno in spec.posts:
        if cname not in loaded:
            loaded[cname] = load_constraint(cname, spec, base)
        missing = [a for a in args if a not in index]
        if missing:
            raise ValueError(f"line {lineno}: undeclared variables {missing}")
        try:
            post_constraint(csp, loaded[cname], [index[a] for a in args], spec.rule_kinds.get(cname, kind), cache)
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
    return csp


def random_csp(
    rng: random.Random,
    constraints: Sequence[ConstraintDef],
    n_vars: int,
    n_posts: int,
    kind: str = "membership",
    cache: RuleCache | None = None,
) -> Csp:
    """Posts drawn from ``constraints`` over variables sharing their universes."""
    universes = [constraints[0].universes[0]] * n_vars
    csp = Csp(tuple(f"v{i}" for i in range(n_vars)), tuple(universes))
    for _ in range(n_posts):
        c = rng.choice(constraints)
        post_constraint(csp, c, rng.sample(range(n_vars), c.arity), kind, cache)
    return csp
