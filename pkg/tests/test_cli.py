from __future__ import annotations

import io
import subprocess
import sys

import pytest

from propsched.cli import main, parse_order
from propsched.formats import (
    RuleSyntaxError,
    format_store,
    parse_artifact,
    parse_csp,
    parse_rule_file,
    parse_store,
    render_rule_file,
    serialize_artifact,
)
from propsched.memrules import compile_rules
from propsched.rulegen import BUNDLED, ConstraintDef, ConstraintSyntaxError, generate, load_bundled
from propsched.store import Universe

XYZ = ConstraintDef("c", (Universe("012"),) * 3, ((0, 1, 0), (1, 2, 2)), ("x", "y", "z"))


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), out)
    return code, out.getvalue()


# -- rule files ----------------------------------------------------------------


def test_parse_head_constant_and_guard():
    (r,) = parse_rule_file("c(0,Y,Z) ==> in(Y,[1,2]) | Z##2.", XYZ)
    assert r.conditions == ((0, 0b001), (1, 0b110))
    assert r.body == ((2, 2),)


def test_parse_comments_and_anonymous_variables():
    rules = parse_rule_file("% header\nc(_,1,Z) ==> Z ## 0.\nc(X,_,2) ==> X##0, X ## 2.\n", XYZ)
    assert [r.conditions for r in rules] == [((1, 0b010),), ((2, 0b100),)]


@pytest.mark.parametrize(
    "text,fragment",
    [
        ("c(X,Y,Z) ==> in(W,[1]) | Z##2.", "does not appear"),
        ("d(X,Y,Z) ==> Z##2.", "expected 'c'"),
        ("c(X,Y) ==> Y##2.", "arity"),
        ("c(X,Y,Z) ==> Z##7.", "outside the universe"),
        ("c(X,X,Z) ==> Z##1.", "repeated"),
        ("c(X,Y,Z) ==> dom(Y,[1]) | Z##1.", "in/2"),
        ("c(0,Y,Z) ==> in(Y,[1]), in(Y,[2]) | Z##1.", "second condition"),
        ("c(X,Y,Z) ==> Z##1", "'.'"),
    ],
)
def test_rule_syntax_errors(text, fragment):
    with pytest.raises(RuleSyntaxError) as info:
        parse_rule_file(text, XYZ)
    assert fragment in str(info.value)
    assert info.value.line == 1 and info.value.column >= 1


def test_error_positions_on_later_lines():
    with pytest.raises(RuleSyntaxError) as info:
        parse_rule_file("c(X,Y,Z) ==> Z##1.\n\n  c(X,Y,Z) ==> Q##1.\n", XYZ)
    assert (info.value.line, info.value.column) == (3, 16)


@pytest.mark.parametrize("name", BUNDLED)
@pytest.mark.parametrize("kind", ["equality", "membership"])
def test_rule_file_round_trip(generated, bundled, name, kind):
    c = bundled[name]
    rules = generated[(name, kind)]
    text = render_rule_file(rules, c)
    assert text.splitlines()[0] == f"% {name}/{c.arity}: {len(rules)} rules"
    assert parse_rule_file(text, c) == rules


@pytest.mark.parametrize("name", BUNDLED)
def test_artifact_round_trip(generated, bundled, name):
    c = bundled[name]
    rules = generated[(name, "membership")]
    compiled = compile_rules(rules, c.universes)
    art = parse_artifact(serialize_artifact(c, rules, compiled))
    assert art.constraint == c
    assert art.rules == rules
    assert art.compiled.friends == compiled.friends
    assert art.compiled.obviated == compiled.obviated


def test_artifact_rejects_garbage():
    with pytest.raises(ValueError):
        parse_artifact("not an artifact\n")


def test_store_text():
    c = load_bundled("equ3")
    s = parse_store("x={f}, Y={f,t,u}, z={f,u}", c)
    assert format_store(s, c.universes, c.var_names) == "x={f}, y={t,f,u}, z={f,u}"
    with pytest.raises(ValueError):
        parse_store("x={}", c)
    with pytest.raises(ValueError):
        parse_store("w={f}", c)
    with pytest.raises(ValueError):
        parse_store("x={q}", c)


def test_csp_text():
    spec = parse_csp("domain b 0 1\nvar p q r : b  # three\npost and2(p, q, r)\n")
    assert [n for n, _ in spec.variables] == ["p", "q", "r"]
    assert spec.posts == [("and2", ("p", "q", "r"), 3)]
    for bad in ["var p : b\n", "domain b\n", "domain b 0 1\npost and2 p q r\n", "frobnicate\n"]:
        with pytest.raises(ConstraintSyntaxError):
            parse_csp(bad)


def test_parse_order():
    assert [(a.rule, a.atom) for a in parse_order("11.1 10.1\n# comment\n2.3")] == [(10, 0), (9, 0), (1, 2)]
    with pytest.raises(ValueError):
        parse_order("1-1")


# -- commands ------------------------------------------------------------------


def test_generate_matches_bundled_rules(bundled):
    code, out = run("generate", "c", "--kind", "equality")
    assert code == 0
    from importlib import resources

    expected = parse_rule_file(resources.files("propsched.data").joinpath("c.rules").read_text(), bundled["c"])
    def norm(rules):
        return {(r.conditions, frozenset(r.body)) for r in rules}

    assert norm(parse_rule_file(out, bundled["c"])) == norm(expected)


def test_compile_stats_propagate(tmp_path):
    rules = tmp_path / "equ3.rules"
    art = tmp_path / "equ3.art"
    code, out = run("generate", "equ3")
    rules.write_text(out)
    code, out = run("compile", str(rules), "equ3", "-o", str(art))
    assert code == 0 and "12 solving / 26" in out
    code, out = run("stats", str(art))
    assert code == 0
    assert out.splitlines()[0] == "rule_id,degree,friends_size,obviated_size"
    assert len(out.splitlines()) == 28
    assert out.splitlines()[-1].startswith("# 12 solving / 26")

    rules_list = parse_rule_file(rules.read_text(), load_bundled("equ3"))
    c = load_bundled("equ3")
    r = next(
        i + 1
        for i, x in enumerate(rules_list)
        if x.conditions == ((0, c.universes[0].mask("f")), (2, c.universes[2].mask("fu"))) and x.body == ((1, 1),)
    )
    code, out = run("propagate", str(art), "--store", "x={f},y={f,t,u},z={f,u}", "--first", str(r))
    assert code == 0
    store_line, counts = out.splitlines()
    assert store_line == "x={f}, y={t,u}, z={f,u}"
    assert "live_rules=9" in counts and "rules_removed=17" in counts


def test_minimize_command(tmp_path):
    report = tmp_path / "report.csv"
    kept = tmp_path / "kept.rules"
    code, out = run("minimize", "c.rules", "c", "--order", "paper:c.order", "-o", str(kept), "--report", str(report))
    assert code == 0 and out == ""
    assert report.read_text().splitlines()[-1].endswith("13 of 20 atomic conclusions remain, redundancy ratio 35%")
    assert len(parse_rule_file(kept.read_text(), load_bundled("c"))) == 9


def test_solve_and_bench(tmp_path):
    csp = tmp_path / "p.csp"
    csp.write_text("domain b 0 1\nvar p q r : b\npost and2(p, q, r)\n")
    code, out = run("solve", str(csp), "--seed", "3", "--solutions")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "seed,scheduler,solutions,fixpoints,condition_tests,body_apps,rules_removed"
    assert lines[1].startswith("3,R,4,")
    assert sum(1 for line in lines if line.startswith("# ")) == 4
    code, out = run("bench", str(csp), "--seeds", "0..2")
    assert code == 0 and len(out.splitlines()) == 7


def test_closure_command(tmp_path):
    f = tmp_path / "r.txt"
    f.write_text("a -> b\nb c -> d\n")
    assert run("closure", str(f), "--initial", "a c") == (0, "a b c d\n")


def test_exit_codes(tmp_path, capsys):
    assert run()[0] == 1
    assert run("generate")[0] == 1
    assert run("minimize", "c.rules", "c", "--order", "random")[0] == 1
    bad = tmp_path / "bad.rules"
    bad.write_text("c(X,Y,Z,U) ==> Q ## 1.\n")
    assert run("compile", str(bad), "c", "-o", str(tmp_path / "x"))[0] == 2
    assert run("generate", str(tmp_path / "missing.con"))[0] == 2
    wide = tmp_path / "wide.con"
    wide.write_text("constraint w 7\nvalues 0 1\ntuple 0 0 0 0 0 0 0\n")
    assert run("generate", str(wide))[0] == 3
    assert "size limit" in capsys.readouterr().err


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "propsched.cli", "generate", "and2", "--kind", "equality"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[0] == "% and2/3: 6 rules"
