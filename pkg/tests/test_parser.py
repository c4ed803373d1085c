from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from metrilog import syntax as sx
from metrilog.cli import corpus_entries, corpus_structure_text
from metrilog.parser import (
    ParseError,
    parse_formula,
    parse_pool,
    parse_registry,
    parse_signature,
    parse_structure,
    parse_theory,
    parse_type,
    print_formula,
    print_pool,
    print_signature,
    print_structure,
    print_theory,
    print_type,
)

from helpers import AST_SIG, random_ast

SIG_TEXT = """\
function f/1 modulus identity
function g/2 modulus linear 2
predicate P/1
predicate R/2 modulus table 1/4:1/8 1/2:1/4
constant c
family e
"""


class TestFormulaExamples:
    def test_sup_neg(self):
        assert parse_formula("sup x . ~ d(x, c)", parse_signature("constant c")) == \
            sx.Sup("x", sx.neg(sx.Dist(sx.Var("x"), sx.Const("c"))))

    def test_dense_constants_body(self):
        phi = parse_formula("Vee i . ~ d(x, c[i])")
        assert phi == sx.SupSeq(sx.IndexSchema("i", sx.neg(sx.Dist(sx.Var("x"), sx.IConst("c", sx.Index.var("i"))))))

    def test_unbalanced(self):
        with pytest.raises(ParseError) as err:
            parse_formula("P(x")
        assert (err.value.line, err.value.column) == (1, 4)

    def test_derived_connectives_expand(self):
        p, q = sx.Pred("P", (sx.Var("x"),)), sx.Pred("Q", (sx.Var("x"),))
        assert parse_formula("P(x) \\/ Q(x)") == sx.or_(p, q)
        assert parse_formula("P(x) /\\ Q(x)") == sx.and_(p, q)
        assert parse_formula("P(x) (+) Q(x)") == sx.tplus(p, q)
        assert parse_formula("P(x) >= 1/2") == sx.geq(p, F(1, 2))
        assert parse_formula("P(x) <= 1/2") == sx.leq(p, F(1, 2))
        assert parse_formula("Disc(P(x))") == sx.disc(p)
        assert parse_formula("Half[3](P(x))") == sx.half(p, 3)
        assert parse_formula("inf x . P(x)") == sx.inf("x", p)
        assert parse_formula("eq(x, y)") == sx.eq(sx.Var("x"), sx.Var("y"))

    def test_precedence(self):
        a, b, c = (sx.Pred(n, (sx.Var("x"),)) for n in "ABC")
        assert parse_formula("A(x) -> B(x) -> C(x)") == sx.Implies(a, sx.Implies(b, c))
        assert parse_formula("A(x) \\/ B(x) /\\ C(x)") == sx.or_(a, sx.and_(b, c))
        assert parse_formula("~A(x) -> B(x)") == sx.Implies(sx.neg(a), b)

    def test_rational_sequences(self):
        phi = parse_formula("Vee i . P(x) >= 1-1/(i+2)")
        assert sx.instantiate(phi.schema, 0) == sx.geq(sx.Pred("P", (sx.Var("x"),)), F(1, 2))
        assert parse_formula("Vee i . 1/(i+1)").schema.body == sx.RatSeq("frac", 1, sx.Index.var("i", offset=1))
        assert parse_formula("Vee i . rat[i]").schema.body == sx.RatSeq("enum", 0, sx.Index.var("i"))

    @pytest.mark.parametrize("text, col, fragment", [
        ("2/4", 1, "lowest terms"),
        ("3/2", 1, "outside"),
        ("P(x) -> ", 9, "expected a formula"),
        ("d(x, c[i])", 8, "not bound"),
        ("Vee i . 1/(i)", 9, "b >= a"),
        ("P(x) $", 6, "unexpected character"),
    ])
    def test_errors_carry_positions(self, text, col, fragment):
        with pytest.raises(ParseError) as err:
            parse_formula(text)
        assert err.value.column == col and fragment in err.value.message

    def test_signature_checks(self):
        sig = parse_signature(SIG_TEXT)
        with pytest.raises(ParseError, match="unknown predicate"):
            parse_formula("Q(x)", sig)
        with pytest.raises(ParseError, match="arity"):
            parse_formula("R(x)", sig)
        with pytest.raises(ParseError, match="unknown function"):
            parse_formula("P(h(x))", sig)
        with pytest.raises(ParseError, match="unknown constant family"):
            parse_formula("Vee i . P(u[i])", sig)

    def test_multiline_positions(self):
        with pytest.raises(ParseError) as err:
            parse_formula("sup x .\n  P(x) ->\n  )")
        assert (err.value.line, err.value.column) == (3, 3)

    def test_determinism(self):
        msgs = set()
        for _ in range(3):
            with pytest.raises(ParseError) as err:
                parse_formula("sup x . (P(x)")
            msgs.add(str(err.value))
        assert len(msgs) == 1


class TestPrinter:
    def test_examples(self):
        p = sx.Pred("P", (sx.Var("x"),))
        assert print_formula(sx.Implies(sx.Rat(F(1, 3)), p)) == "1/3 -> P(x)"
        assert print_formula(sx.Implies(p, sx.Implies(p, p))) == "P(x) -> P(x) -> P(x)"
        assert print_formula(sx.Implies(sx.Implies(p, p), p)) == "P(x) \\/ P(x)"
        q = sx.Pred("Q", (sx.Var("x"),))
        assert print_formula(sx.Implies(sx.Implies(p, q), p)) == "(P(x) -> Q(x)) -> P(x)"
        assert print_formula(sx.Rat(F(2, 4))) == "1/2"

    def test_quantifier_in_left_operand_is_parenthesised(self):
        phi = sx.Implies(sx.Sup("x", sx.Pred("P", (sx.Var("x"),))), sx.Rat(0))
        assert print_formula(sx.Implies(phi.left, sx.Rat(F(1, 2)))) == "(sup x . P(x)) -> 1/2"

    @settings(max_examples=300, deadline=None)
    @given(st.randoms(use_true_random=False), st.integers(1, 6))
    def test_round_trip(self, rng, depth):
        ast = random_ast(rng, depth)
        text = print_formula(ast)
        assert parse_formula(text, AST_SIG) == ast
        assert print_formula(parse_formula(text, AST_SIG)) == text


class TestDocuments:
    def test_signature_round_trip(self):
        sig = parse_signature(SIG_TEXT)
        assert parse_signature(print_signature(sig)) == sig
        assert sig.predicate("R").modulus.kind == "table"

    def test_structure_round_trip(self):
        text = SIG_TEXT + """\
points a b
d(a,b) = 1/2
f(a) = b
f(b) = b
g(a,a) = a
g(a,b) = a
g(b,a) = b
g(b,b) = b
P(a) = 1/4
P(b) = 1/2
R(a,a) = 0
R(a,b) = 0
R(b,a) = 0
R(b,b) = 1/4
c = a
e[] = a b | a
"""
        m = parse_structure(text)
        again = parse_structure(print_structure(m))
        assert again == m
        assert m.families["e"][7] == "a"

    def test_structure_errors(self):
        with pytest.raises(ParseError, match="missing 'points'"):
            parse_structure("predicate P/1\nP(a) = 1\n")
        with pytest.raises(ParseError) as err:
            parse_structure("predicate P/1\npoints a\nP(z) = 1\n")
        assert err.value.line == 3
        with pytest.raises(ParseError, match="undefined"):
            parse_structure("predicate P/1\npoints a b\nd(a,b) = 1\nP(a) = 1\n")

    def test_theory_and_type(self):
        sig = parse_signature(SIG_TEXT)
        th = parse_theory("theory T\nsup x . P(x);\ninf x . ~P(x) # comment\n", sig)
        assert th.name == "T" and len(th.sentences) == 2
        assert parse_theory(print_theory(th), sig) == th
        with pytest.raises(ParseError, match="free variables"):
            parse_theory("P(x)", sig)
        ty = parse_type("type S (x, y)\nR(x, y);\neach i . d(x, e[i]) >= 1/(i+2);\n", sig)
        assert ty.variables == ("x", "y") and len(ty.formulas) == 2
        assert parse_type(print_type(ty), sig) == ty
        with pytest.raises(ParseError, match="undeclared"):
            parse_type("type S (x)\nR(x, y);", sig)

    def test_pool(self):
        sig = parse_signature(SIG_TEXT)
        pool = parse_pool("vars y\nformula P(y)\nformula 1\nterms f(y)\nthreshold 1/2 3/4\n", sig)
        assert pool.thresholds == (F(1, 2), F(3, 4)) and len(pool.terms) == 1
        assert parse_pool(print_pool(pool), sig) == pool
        with pytest.raises(ParseError):
            parse_pool("vars y\nthreshold 1\n", sig)

    def test_registry(self):
        doc = parse_registry("# seq\na.mstr\nb.mstr\ntail c.mstr\n")
        assert doc.paths == ["a.mstr", "b.mstr"] and doc.tail == "c.mstr"
        with pytest.raises(ParseError):
            parse_registry("tail a.mstr\nb.mstr\n")


class TestCorpus:
    def test_all_entries_parse_to_a_print_fixed_point(self):
        names = []
        for name, text, sig_text in corpus_entries():
            sig = parse_signature(sig_text)
            phi = parse_formula(text, sig)
            printed = print_formula(phi)
            assert print_formula(parse_formula(printed, sig)) == printed
            assert not sx.free_variables(phi)
            names.append(name)
        assert names == ["basic_sequence", "dense_constants", "hereditary_indecomposability",
                         "non_reflexivity", "stability_failure"]

    def test_dense_structure_parses(self):
        mstr, msig = corpus_structure_text()
        m = parse_structure(mstr, resolve=lambda _: msig)
        assert m.points == ("a", "b", "c")
