"""Text formats: CHR-style rule files, compiled rule-set artifacts, CSP files.

Rule files use single-headed propagation rules::

    % comment
    c(0,Y,Z) ==> in(Y,[1,2]) | Z ## 2.
    c(X,Y,Z,0) ==> X ## 0, Y ## 0, Z ## 0.

A constant at head position ``i`` is the condition ``x_i in {a}``; an
``in(V,[...])`` guard restricts the head variable ``V``; ``V ## a`` removes
``a`` from ``V``.  Variables start with an uppercase letter or ``_``.
"""

from __future__ import annotations

import re
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path

from .kernel import CompiledRuleSet
from .memrules import MembershipRule, bind
from .rulegen import ConstraintDef, ConstraintSyntaxError, parse_constraint, render_constraint
from .store import Store, StoreValue, Universe

ARTIFACT_MAGIC = "propsched-compiled 1"


class RuleSyntaxError(ValueError):
    def __init__(self, msg: str, line: int, column: int) -> None:
        super().__init__(f"line {line}, column {column}: {msg}")
        self.line = line
        self.column = column


_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>%[^\n]*)
  | (?P<arrow>==>)
  | (?P<neq>\#\#)
  | (?P<punct>[()\[\],|.])
  | (?P<word>[A-Za-z0-9_'+\-]+)
    """,
    re.VERBOSE,
)


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise RuleSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            toks.append(_Tok(kind, m.group(), line, pos - line_start + 1))
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - line_start + 1))
    return toks


def _is_var(word: str) -> bool:
    return word[0].isupper() or word[0] == "_"


class _Parser:
    def __init__(self, text: str, c: ConstraintDef) -> None:
        self.toks = _tokenize(text)
        self.pos = 0
        self.c = c

    def peek(self) -> _Tok:
        return self.toks[self.pos]

    def next(self) -> _Tok:
        tok = self.toks[self.pos]
        self.pos += 1
        return tok

    def expect(self, text: str) -> _Tok:
        tok = self.next()
        if tok.text != text:
            shown = tok.text or "end of input"
            raise RuleSyntaxError(f"expected {text!r}, found {shown!r}", tok.line, tok.col)
        return tok

    def word(self) -> _Tok:
        tok = self.next()
        if tok.kind != "word":
            raise RuleSyntaxError(f"expected a name or value, found {tok.text or 'end of input'!r}", tok.line, tok.col)
        return tok

    def rules(self) -> list[MembershipRule]:
        out = []
        while self.peek().kind != "eof":
            out.append(self.rule())
        return out

    def value(self, var: int, tok: _Tok) -> int:
        u = self.c.universes[var]
        if tok.text not in u.index:
            raise RuleSyntaxError(f"value {tok.text!r} outside the universe {list(u.values)}", tok.line, tok.col)
        return u.index[tok.text]

    def rule(self) -> MembershipRule:
        c = self.c
        name = self.word()
        if _is_var(name.text):
            raise RuleSyntaxError(f"head must be a constraint name, found variable {name.text!r}", name.line, name.col)
        if name.text != c.name:
            raise RuleSyntaxError(f"rule is for {name.text!r}, expected {c.name!r}", name.line, name.col)
        self.expect("(")
        args = [self.word()]
        while self.peek().text == ",":
            self.next()
            args.append(self.word())
        close = self.expect(")")
        if len(args) != c.arity:
            raise RuleSyntaxError(f"head has {len(args)} arguments, {c.name} has arity {c.arity}", close.line, close.col)
        positions: dict[str, int] = {}
        conds: dict[int, int] = {}
        for i, tok in enumerate(args):
            if _is_var(tok.text):
                if tok.text == "_":
                    continue
                if tok.text in positions:
                    raise RuleSyntaxError(f"variable {tok.text!r} repeated in head", tok.line, tok.col)
                positions[tok.text] = i
            else:
                conds[i] = 1 << self.value(i, tok)
        self.expect("==>")
        # guards come first when a '|' appears before the closing '.'
        k = self.pos
        while self.toks[k].text not in (".", "|") and self.toks[k].kind != "eof":
            k += 1
        if self.toks[k].text == "|":
            self.guard(positions, conds)
            while self.peek().text == ",":
                self.next()
                self.guard(positions, conds)
            self.expect("|")
        body = [self.atom(positions)]
        while self.peek().text == ",":
            self.next()
            body.append(self.atom(positions))
        self.expect(".")
        return MembershipRule(sorted(conds.items()), body)

    def head_var(self, positions: dict[str, int], tok: _Tok) -> int:
        if not _is_var(tok.text):
            raise RuleSyntaxError(f"expected a variable, found {tok.text!r}", tok.line, tok.col)
        if tok.text not in positions:
            raise RuleSyntaxError(f"variable {tok.text!r} does not appear in the head", tok.line, tok.col)
        return positions[tok.text]

    def guard(self, positions: dict[str, int], conds: dict[int, int]) -> None:
        kw = self.word()
        if kw.text != "in":
            raise RuleSyntaxError(f"only in/2 guards are supported, found {kw.text!r}", kw.line, kw.col)
        self.expect("(")
        vtok = self.word()
        var = self.head_var(positions, vtok)
        if var in conds:
            raise RuleSyntaxError(f"second condition on {vtok.text!r}", vtok.line, vtok.col)
        self.expect(",")
        self.expect("[")
        mask = 1 << self.value(var, self.word())
        while self.peek().text == ",":
            self.next()
            mask |= 1 << self.value(var, self.word())
        self.expect("]")
        self.expect(")")
        conds[var] = mask

    def atom(self, positions: dict[str, int]) -> tuple[int, int]:
        vtok = self.word()
        var = self.head_var(positions, vtok)
        self.expect("##")
        return var, self.value(var, self.word())


def parse_rule_file(text: str, c: ConstraintDef) -> list[MembershipRule]:
    return _Parser(text, c).rules()


def _chr_names(c: ConstraintDef) -> list[str]:
    names = [n[:1].upper() + n[1:] for n in c.var_names]
    if len(set(names)) != len(names):
        names = [f"X{i + 1}" for i in range(c.arity)]
    return names


def render_rule(rule: MembershipRule, c: ConstraintDef) -> str:
    names = _chr_names(c)
    body_vars = {z for z, _ in rule.body}
    head = list(names)
    guards = []
    for v, s in sorted(rule.conditions):
        u = c.universes[v]
        if s & (s - 1) == 0 and v not in body_vars:
            head[v] = u.values[s.bit_length() - 1]
        else:
            guards.append(f"in({names[v]},[{','.join(u.members(s))}])")
    text = f"{c.name}({','.join(head)}) ==> "
    if guards:
        text += ", ".join(guards) + " | "
    text += ", ".join(f"{names[z]} ## {c.universes[z].values[a]}" for z, a in rule.body)
    return text + "."


def render_rule_file(rules: Sequence[MembershipRule], c: ConstraintDef) -> str:
    lines = [f"% {c.name}/{c.arity}: {len(rules)} rules"]
    lines.extend(render_rule(r, c) for r in rules)
    return "\n".join(lines) + "\n"


# -- compiled artifacts -----------------------------------------------------


@dataclass
class Artifact:
    constraint: ConstraintDef
    rules: list[MembershipRule]
    compiled: CompiledRuleSet


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.split(",") if x)


def serialize_artifact(c: ConstraintDef, rules: Sequence[MembershipRule], compiled: CompiledRuleSet) -> str:
    out = [ARTIFACT_MAGIC, "[constraint]"]
    out.extend(render_constraint(c).splitlines())
    out.append("[rules]")
    out.extend(render_rule(r, c) for r in rules)
    out.append("[tables]")
    for i in range(len(compiled)):
        fr = ",".join(map(str, compiled.friends[i]))
        ob = ",".join(map(str, compiled.obviated[i]))
        out.append(f"{i} friends={fr} obviated={ob}")
    return "\n".join(out) + "\n"


def parse_artifact(text: str) -> Artifact:
    lines = text.splitlines()
    if not lines or lines[0].strip() != ARTIFACT_MAGIC:
        raise ConstraintSyntaxError(f"not a compiled rule set (expected {ARTIFACT_MAGIC!r})", 1)
    sections: dict[str, list[str]] = {}
    current = None
    for line in lines[1:]:
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1]
            sections[current] = []
        elif current is None:
            raise ConstraintSyntaxError("content before the first section", 2)
        else:
            sections[current].append(line)
    for name in ("constraint", "rules", "tables"):
        if name not in sections:
            raise ConstraintSyntaxError(f"missing [{name}] section", 1)
    c = parse_constraint("\n".join(sections["constraint"]))
    rules = parse_rule_file("\n".join(sections["rules"]), c)
    friends, obviated = [], []
    for k, line in enumerate(x for x in sections["tables"] if x.strip()):
        m = re.fullmatch(r"(\d+) friends=([\d,]*) obviated=([\d,]*)", line.strip())
        if m is None or int(m.group(1)) != k:
            raise ConstraintSyntaxError(f"bad table row {line!r}", k + 1)
        friends.append(_ints(m.group(2)))
        obviated.append(_ints(m.group(3)))
    if len(friends) != len(rules):
        raise ConstraintSyntaxError("table rows do not match the rule count", 1)
    compiled = CompiledRuleSet(tuple(bind(rules, c.universes)), tuple(friends), tuple(obviated))
    return Artifact(c, rules, compiled)


# -- stores on the command line ---------------------------------------------


def parse_store(text: str, c: ConstraintDef) -> StoreValue:
    """Parse ``x={0,1},y={1}``; unnamed variables keep their full universe."""
    lookup = {n.lower(): i for i, n in enumerate(c.var_names)}
    doms = [u.full for u in c.universes]
    for m in re.finditer(r"\s*([A-Za-z_][\w']*)\s*=\s*\{([^}]*)\}\s*(,|$)", text):
        name, vals = m.group(1), m.group(2)
        if name.lower() not in lookup:
            raise ValueError(f"unknown variable {name!r}; known: {', '.join(c.var_names)}")
        i = lookup[name.lower()]
        doms[i] = c.universes[i].mask(v.strip() for v in vals.split(",") if v.strip())
    if re.sub(r"\s*([A-Za-z_][\w']*)\s*=\s*\{([^}]*)\}\s*(,|$)", "", text).strip():
        raise ValueError(f"malformed store literal {text!r}")
    if any(d == 0 for d in doms):
        raise ValueError("store literal has an empty domain")
    return Store(tuple(doms))


def format_store(s: StoreValue, universes: Sequence[Universe], names: Sequence[str]) -> str:
    if not isinstance(s, Store):
        return "TOP"
    return ", ".join(f"{n}={u.format(d)}" for n, u, d in zip(names, universes, s.domains))


# -- CSP files --------------------------------------------------------------


@dataclass
class CspSpec:
    domains: dict[str, Universe] = field(default_factory=dict)
    variables: list[tuple[str, Universe]] = field(default_factory=list)
    posts: list[tuple[str, tuple[str, ...], int]] = field(default_factory=list)
    loads: dict[str, str] = field(default_factory=dict)
    rule_kinds: dict[str, str] = field(default_factory=dict)


def parse_csp(text: str) -> CspSpec:
    """Read a CSP description::

        domain kleene3 t f u
        var x y z : kleene3
        post equ3(x, y, z)
        load myc path/to/myc.con     # optional, else bundled or sibling file
        kind equ3 equality           # optional rule kind per constraint
    """
    spec = CspSpec()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = re.split(r"[#%]", raw, maxsplit=1)[0].strip()
        if not line:
            continue
        word = line.split()[0]
        col = raw.index(word) + 1
        rest = line[len(word) :].strip()
        if word == "domain":
            parts = rest.split()
            if len(parts) < 2:
                raise ConstraintSyntaxError("expected 'domain <name> <values...>'", lineno, col)
            spec.domains[parts[0]] = Universe(parts[1:])
        elif word == "var":
            if ":" not in rest:
                raise ConstraintSyntaxError("expected 'var <names...> : <domain>'", lineno, col)
            names, dom = (x.strip() for x in rest.split(":", 1))
            if dom not in spec.domains:
                raise ConstraintSyntaxError(f"unknown domain {dom!r}", lineno, col)
            for n in names.split():
                if any(n == v for v, _ in spec.variables):
                    raise ConstraintSyntaxError(f"variable {n!r} declared twice", lineno, col)
                spec.variables.append((n, spec.domains[dom]))
        elif word == "post":
            m = re.fullmatch(r"([\w']+)\s*\(([^)]*)\)", rest)
            if m is None:
                raise ConstraintSyntaxError("expected 'post <name>(<vars>)'", lineno, col)
            args = tuple(a.strip() for a in m.group(2).split(",") if a.strip())
            spec.posts.append((m.group(1), args, lineno))
        elif word == "load":
            parts = rest.split()
            if len(parts) != 2:
                raise ConstraintSyntaxError("expected 'load <name> <path>'", lineno, col)
            spec.loads[parts[0]] = parts[1]
        elif word == "kind":
            parts = rest.split()
            if len(parts) != 2 or parts[1] not in ("equality", "membership"):
                raise ConstraintSyntaxError("expected 'kind <name> equality|membership'", lineno, col)
            spec.rule_kinds[parts[0]] = parts[1]
        else:
            raise ConstraintSyntaxError(f"unknown directive {word!r}", lineno, col)
    return spec


def read_text(path: str | Path) -> str:
    return Path(path).read_text()
