"""Acceptance criteria, each checked at its stated tolerance and time budget.

Every criterion records its outcome in ``RESULTS``. ``conftest.py`` prints one
PASS/FAIL line per criterion at the end of a pytest run, and running this file
directly does the same without pytest.
"""
from __future__ import annotations

import functools
import itertools
import random
import sys
import time
from fractions import Fraction as F

from metrilog import syntax as sx
from metrilog.cli import corpus_entries, corpus_structure_text
from metrilog.core import (
    FamilyInterp,
    MetricStructure,
    Signature,
    check_all_moduli,
    product_metric,
    validate_metric,
)
from metrilog.omitting import PartialType, WitnessPool, principal_over, realizations, realizes, thicken
from metrilog.parser import parse_formula, parse_structure, print_formula
from metrilog.semantics import EMPTY_THEORY, EvalConfig, Registry, Theory, Verdict, evaluate, satisfies
from metrilog.ultraproduct import FRECHET, Principal, check_claim3, ultraproduct

from helpers import AST_SIG, SIG, SIG_P, SIG_SEQ, random_ast, random_formula, random_sentence, random_sequence, \
    random_structure
from oracles import classical_truth, principality_oracle, reference_value

RESULTS: dict[int, dict] = {}
TITLES = {
    1: "Lukasiewicz kernel",
    2: "derived-connective laws",
    3: "half-function limit",
    4: "classical reduction",
    5: "value-limit identity for ultraproducts",
    6: "ultraproduct well-formedness",
    7: "thickening ball property",
    8: "principality oracle equivalence",
    9: "parser round trip and corpus",
    10: "truncation soundness and monotonicity",
}


def criterion(number: int, budget: float):
    """Time the wrapped check, fail it when it runs over ``budget`` seconds and record the outcome."""
    def deco(fn):
        @functools.wraps(fn)
        def wrapper():
            start = time.perf_counter()
            try:
                detail = fn()
            except Exception as exc:
                RESULTS[number] = {"ok": False, "elapsed": time.perf_counter() - start, "budget": budget,
                                   "detail": f"{type(exc).__name__}: {exc}".splitlines()[0][:160]}
                raise
            elapsed = time.perf_counter() - start
            ok = elapsed < budget
            RESULTS[number] = {"ok": ok, "elapsed": elapsed, "budget": budget,
                               "detail": detail if ok else f"over budget; {detail}"}
            assert ok, f"criterion {number} took {elapsed:.2f}s, budget {budget}s"
        return wrapper
    return deco


def summary_lines() -> list[str]:
    lines = []
    for n, title in TITLES.items():
        r = RESULTS.get(n)
        if r is None:
            lines.append(f"criterion {n:2d} NOT RUN  {title}")
            continue
        status = "PASS" if r["ok"] else "FAIL"
        lines.append(f"criterion {n:2d} {status}  {title}  ({r['elapsed']:.2f}s of {r['budget']:g}s)  {r['detail']}")
    return lines


BLANK = MetricStructure(Signature(), ("a",), {})


def value(phi):
    return evaluate(BLANK, phi).value


GRID20 = [F(k, 20) for k in range(21)]


@criterion(1, 1.0)
def test_c01_lukasiewicz_kernel():
    checked = 0
    for a, b in itertools.product(GRID20, repeat=2):
        phi = sx.Implies(sx.Rat(a), sx.Rat(b))
        assert value(phi) == min(1 - a + b, F(1)), (a, b)
        assert (satisfies(BLANK, phi) is Verdict.YES) == (a <= b), (a, b)
        checked += 1
    assert checked == 441
    return f"{checked} grid points exact"


@criterion(2, 1.0)
def test_c02_derived_connectives():
    checked = 0
    for a, b in itertools.product(GRID20, repeat=2):
        ra, rb = sx.Rat(a), sx.Rat(b)
        assert value(sx.neg(ra)) == 1 - a
        assert value(sx.or_(ra, rb)) == max(a, b)
        assert value(sx.and_(ra, rb)) == min(a, b)
        assert value(sx.tplus(ra, rb)) == min(2 - a - b, F(1))
        checked += 1
    return f"{checked} grid pairs, four laws each"


@criterion(3, 1.0)
def test_c03_half_function():
    checked = 0
    for n in (2, 4, 8, 16, 32, 64):
        for k in range(17):
            x = F(k, 16)
            gap = x / 2 - value(sx.half(sx.Rat(x), n))
            assert 0 <= gap <= F(1, 2 * n), (x, n, gap)
            checked += 1
    assert value(sx.half(sx.Rat(F(1, 2)), 4)) == F(1, 4)
    return f"{checked} (x, n) pairs within 1/(2n); Half_4(1/2) = 1/4"


@criterion(4, 10.0)
def test_c04_classical_reduction():
    rng = random.Random(4)
    structures = [random_structure(rng, rng.randrange(1, 5), SIG, discrete=True) for _ in range(200)]
    formulas = [random_formula(rng, 5, ("x", "y"), SIG, rationals=(F(0), F(1))) for _ in range(200)]
    checked = 0
    for m, phi in zip(structures, formulas):
        free = sorted(sx.free_variables(phi))
        for pts in itertools.product(m.points, repeat=len(free)):
            env = dict(zip(free, pts))
            v = evaluate(m, phi, env).value
            assert v in (0, 1), (phi, env, v)
            assert (v == 1) == classical_truth(m, phi, env), (phi, env)
            checked += 1
    return f"200 structure/formula pairs, {checked} assignments agree"


@criterion(5, 10.0)
def test_c05_value_limit_identity():
    rng = random.Random(5)
    checked = 0
    for _ in range(100):
        seq = random_sequence(rng)
        for _ in range(2):
            sigma = random_sentence(rng, 4, SIG_SEQ)
            for spec in (Principal(rng.randrange(len(seq.prefix) + 2)), FRECHET):
                report = check_claim3(seq, spec, sigma)
                assert report.equal, (spec, print_formula(sigma), report)
                checked += 1
    return f"100 sequences, {checked} exact equalities"


@criterion(6, 10.0)
def test_c06_ultraproduct_well_formed():
    rng = random.Random(6)
    built = 0
    for _ in range(100):
        seq = random_sequence(rng)
        for spec in (Principal(rng.randrange(len(seq.prefix) + 2)), FRECHET):
            u = ultraproduct(seq, spec).structure
            assert validate_metric(u).ok, spec
            assert not any(check_all_moduli(u).values()), spec
            built += 1
    return f"{built} ultraproducts pass metric and modulus checks"


def _small_structures():
    """Every structure on at most three points over the unary signature, up to point names."""
    dists = [F(k, 4) for k in range(1, 5)]
    vals = [F(0), F(1, 2), F(1)]
    for n in (1, 2, 3):
        points = ("a", "b", "e")[:n]
        pairs = list(itertools.combinations(points, 2))
        for ds in itertools.product(dists, repeat=len(pairs)):
            metric = dict(zip(pairs, ds))
            for ps in itertools.product(vals, repeat=n):
                m = MetricStructure(SIG_P, points, metric, predicates={"P": {(p,): v for p, v in zip(points, ps)}})
                if validate_metric(m).ok and not any(check_all_moduli(m).values()):
                    yield m


def _types():
    x, y = sx.Var("x"), sx.Var("y")
    px, py = sx.Pred("P", (x,)), sx.Pred("P", (y,))
    return [
        PartialType("full", ("x",), (px,)),
        PartialType("half", ("x",), (sx.geq(px, F(1, 2)),)),
        PartialType("empty", ("x",), (sx.neg(px),)),
        PartialType("minimal", ("x",), (sx.inf("y", sx.Implies(px, py)),)),
        PartialType("split", ("x", "y"), (px, sx.neg(py))),
        PartialType("apart", ("x", "y"), (sx.geq(sx.Dist(x, y), F(1, 2)), sx.geq(py, F(1, 2)))),
    ]


@criterion(7, 30.0)
def test_c07_thickening_ball_property():
    types = _types()
    thick = {(t.name, d): thicken(t, d) for t in types for d in (F(1, 4), F(1, 2))}
    structures = implications = 0
    for m in _small_structures():
        structures += 1
        for t in types:
            real = [tup for tup, v in realizations(m, t) if v is Verdict.YES]
            if not real:
                continue
            for d in (F(1, 4), F(1, 2)):
                verdicts: dict = {}
                for a in real:
                    for b in m.tuples(len(t.variables)):
                        if product_metric(m, a, b) <= d:
                            if b not in verdicts:
                                verdicts[b] = realizes(m, thick[t.name, d], b)
                            assert verdicts[b] is Verdict.YES, (m, t.name, d, a, b)
                            implications += 1
    return f"{structures} structures, {implications} ball implications hold"


def _oracle(theory, sigma, pool, registry, strict):
    return principality_oracle(theory.sentences, sigma.formulas, sigma.variables, pool.variables, pool.formulas,
                               list(pool.terms), pool.thresholds, registry,
                               lambda m, phi, env: reference_value(m, phi, env), strict)


def _agrees(theory, sigma, pool, registry, strict="eq1"):
    report = principal_over(theory, sigma, pool, registry, strict=strict)
    verdict, witness = _oracle(theory, sigma, pool, registry, strict)
    assert report.verdict == verdict, (sigma.name, [m.name for m in registry], strict)
    if witness is not None:
        w = report.witness
        assert (w.formula, w.terms, w.threshold) == witness
    return report


@criterion(8, 30.0)
def test_c08_principality_oracle():
    x = sx.Var("x")
    px = sx.Pred("P", (x,))
    one = {p: MetricStructure(SIG_P, ("a",), {}, predicates={"P": {("a",): p}}, name=f"P={p}")
           for p in (F(0), F(1, 2), F(1))}
    sigma = PartialType("Sigma", ("x",), (px,))

    # the worked examples
    grid = Registry(one.values())
    rep = principal_over(EMPTY_THEORY, sigma, WitnessPool(("x",), (px,), thresholds=(F(3, 4),)), grid)
    assert rep.verdict == "principal" and rep.witness.threshold == F(3, 4)
    consts = WitnessPool(("x",), (sx.Rat(F(1)), sx.Rat(F(1, 2))), thresholds=(F(1, 4), F(3, 4)))
    assert principal_over(EMPTY_THEORY, sigma, consts, grid).verdict == "not_principal"

    types = [t for t in _types() if len(t.variables) == 1]
    theories = [EMPTY_THEORY, Theory("T", (sx.Sup("x", px),)), Theory("T'", (sx.neg(sx.inf("x", px)),))]
    pool = WitnessPool(("x",), (px, sx.neg(px), sx.geq(px, F(1, 2)), sx.Rat(F(1)), sx.Rat(F(1, 2))),
                       thresholds=(F(1, 4), F(1, 2), F(3, 4)))
    compared = 0
    for k in (1, 2, 3):
        for order in itertools.permutations(one.values(), k):
            registry = Registry(order)
            for theory, t, strict in itertools.product(theories, types, ("eq1", "gt0")):
                _agrees(theory, t, pool, registry, strict)
                compared += 1

    rng = random.Random(8)
    for i in range(50):
        registry = Registry([random_structure(rng, 2, SIG_P, name=f"R{i}.{j}") for j in range(rng.randrange(1, 4))])
        t = PartialType("S", ("x",), tuple(random_formula(rng, 2, ("x",), SIG_P) for _ in range(rng.randrange(1, 3))))
        rpool = WitnessPool(("x",), tuple(random_formula(rng, 2, ("x",), SIG_P) for _ in range(4)),
                            thresholds=(F(1, 4), F(1, 2), F(3, 4)))
        theory = Theory("T", (random_sentence(rng, 2, SIG_P),)) if rng.random() < 0.5 else EMPTY_THEORY
        _agrees(theory, t, rpool, registry, rng.choice(("eq1", "gt0")))
        compared += 1
    return f"worked examples reproduce; {compared} registries agree with the oracle"


@criterion(9, 5.0)
def test_c09_parser_round_trip():
    rng = random.Random(9)
    for _ in range(1000):
        ast = random_ast(rng, rng.randrange(1, 7))
        text = print_formula(ast)
        assert parse_formula(text, AST_SIG) == ast, text
    from metrilog.parser import parse_signature
    names = []
    for name, text, sig_text in corpus_entries():
        sig = parse_signature(sig_text)
        printed = print_formula(parse_formula(text, sig))
        assert print_formula(parse_formula(printed, sig)) == printed, name
        names.append(name)
    return f"1000 ASTs round trip; {len(names)} corpus sentences at a print fixed point"


def _enumerating(rng, k):
    points = ("a", "b", "e", "g", "h")[:k]
    metric = {pair: rng.choice([F(1, 2), F(3, 4), F(1)]) for pair in itertools.combinations(points, 2)}
    order = list(points)
    rng.shuffle(order)
    fam = FamilyInterp(tuple(order[:-1]), order[-1])
    sig = Signature(families=("c",))
    return MetricStructure(sig, points, metric, families={"c": fam}, name=f"enum{k}")


@criterion(10, 1.0)
def test_c10_truncation():
    mstr, msig = corpus_structure_text()
    rng = random.Random(10)
    cases = [(parse_structure(mstr, resolve=lambda _: msig), 3)] + [(_enumerating(rng, k), k) for k in (1, 2, 4, 5)]
    for m, length in cases:
        phi = parse_formula("inf x . Vee i . ~d(x, c[i])", m.signature)
        prev = None
        for n in range(1, 9):
            cfg = EvalConfig(n)
            verdict = satisfies(m, phi, None, cfg)
            assert verdict is (Verdict.YES if n >= length else Verdict.UNKNOWN), (m.name, n, verdict)
            iv = evaluate(m, phi, None, cfg)
            if prev is not None:
                assert prev.lo <= iv.lo and iv.hi <= prev.hi, (m.name, n)
            prev = iv
    return f"{len(cases)} enumerating structures, N = 1..8"


if __name__ == "__main__":
    failed = 0
    for name, fn in sorted((k, v) for k, v in globals().items() if k.startswith("test_c")):
        try:
            fn()
        except Exception:
            failed += 1
    print("\n".join(summary_lines()))
    sys.exit(1 if failed else 0)
