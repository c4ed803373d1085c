"""Random generators shared by the unit and acceptance tests.

Every generator takes a ``random.Random`` so the acceptance suite can run
from a fixed seed and hypothesis can drive the same code via ``st.randoms``.
"""
from __future__ import annotations

import itertools
import random
from fractions import Fraction as F

from metrilog import syntax as sx
from metrilog.core import (
    FamilyInterp,
    FunctionSymbol,
    MetricStructure,
    Modulus,
    PredicateSymbol,
    Signature,
    check_all_moduli,
    validate_metric,
)

QUARTERS = [F(k, 4) for k in range(5)]

# P is unary, R binary (2-Lipschitz in the sup metric), f unary, c a constant
SIG = Signature(
    functions=(FunctionSymbol("f", 1, Modulus.identity()),),
    predicates=(PredicateSymbol("P", 1, Modulus.identity()), PredicateSymbol("R", 2, Modulus.linear(2))),
    constants=("c",),
)
SIG_P = Signature(predicates=(PredicateSymbol("P", 1, Modulus.identity()),))
POINT_NAMES = ("a", "b", "e", "g")


def random_metric(rng: random.Random, points, distances=(F(1, 2), F(3, 4), F(1)), zero_prob=0.0):
    """A random pseudometric on ``points``.

    Points are first grouped into clusters (a point joins an earlier cluster
    with probability ``zero_prob``). Points in one cluster are at distance 0,
    and distinct clusters get distances from ``distances``. Any values in
    [1/2, 1] satisfy the triangle inequality automatically.
    """
    cluster = {}
    for i, a in enumerate(points):
        cluster[a] = cluster[points[rng.randrange(i)]] if i and rng.random() < zero_prob else a
    between = {}
    metric = {}
    for a, b in itertools.combinations(points, 2):
        key = tuple(sorted((cluster[a], cluster[b])))
        if key[0] == key[1]:
            metric[a, b] = F(0)
        else:
            metric[a, b] = between.setdefault(key, rng.choice(distances))
    return metric


def random_structure(rng: random.Random, n_points: int, sig: Signature = SIG, *, discrete=False,
                     zero_prob=0.0, values=QUARTERS, name="M", tries=200) -> MetricStructure:
    """A random structure whose interpretations respect the declared moduli."""
    points = POINT_NAMES[:n_points]
    for _ in range(tries):
        if discrete:
            metric = {(a, b): F(1) for a, b in itertools.combinations(points, 2)}
            vals = (F(0), F(1))
        else:
            metric = random_metric(rng, points, zero_prob=zero_prob)
            vals = values
        preds = {}
        for sym in sig.predicates:
            preds[sym.name] = {args: rng.choice(vals) for args in itertools.product(points, repeat=sym.arity)}
        funcs = {}
        for sym in sig.functions:
            funcs[sym.name] = {args: rng.choice(points) for args in itertools.product(points, repeat=sym.arity)}
        consts = {c: rng.choice(points) for c in sig.constants}
        fams = {fam: FamilyInterp(tuple(rng.choice(points) for _ in range(rng.randrange(3))), rng.choice(points))
                for fam in sig.families}
        m = MetricStructure(sig, points, metric, funcs, preds, consts, fams, name=name)
        if validate_metric(m).ok and not any(check_all_moduli(m).values()):
            return m
    raise RuntimeError("could not draw a well-formed structure")


# --------------------------------------------------------------------------
# formulas


def random_term(rng: random.Random, variables, sig: Signature = SIG, depth=1):
    choices = [sx.Var(v) for v in variables] + [sx.Const(c) for c in sig.constants]
    if depth > 0 and sig.functions and rng.random() < 0.3:
        fn = rng.choice(sig.functions)
        return sx.App(fn.name, tuple(random_term(rng, variables, sig, depth - 1) for _ in range(fn.arity)))
    return rng.choice(choices)


def random_atom(rng: random.Random, variables, sig: Signature = SIG, rationals=QUARTERS):
    r = rng.random()
    if r < 0.2 or not (variables or sig.constants):
        return sx.Rat(rng.choice(rationals))
    if r < 0.45:
        return sx.Dist(random_term(rng, variables, sig), random_term(rng, variables, sig))
    sym = rng.choice(sig.predicates)
    return sx.Pred(sym.name, tuple(random_term(rng, variables, sig) for _ in range(sym.arity)))


def random_formula(rng: random.Random, depth: int, variables=(), sig: Signature = SIG, rationals=QUARTERS,
                   bound_names=("x", "y", "z")):
    """A finitary formula of nesting depth at most ``depth`` with free variables among ``variables``."""
    if depth == 0 or rng.random() < 0.2:
        return random_atom(rng, variables, sig, rationals)
    r = rng.random()
    if r < 0.45:
        return sx.Implies(random_formula(rng, depth - 1, variables, sig, rationals, bound_names),
                          random_formula(rng, depth - 1, variables, sig, rationals, bound_names))
    if r < 0.6:
        return sx.neg(random_formula(rng, depth - 1, variables, sig, rationals, bound_names))
    if r < 0.7:
        op = rng.choice((sx.or_, sx.and_))
        return op(random_formula(rng, depth - 2 if depth > 1 else 0, variables, sig, rationals, bound_names),
                  random_formula(rng, depth - 2 if depth > 1 else 0, variables, sig, rationals, bound_names))
    v = rng.choice(bound_names)
    body = random_formula(rng, depth - 1, tuple(set(variables) | {v}), sig, rationals, bound_names)
    return sx.Sup(v, body) if rng.random() < 0.6 else sx.inf(v, body)


def random_sentence(rng: random.Random, depth: int, sig: Signature = SIG, rationals=QUARTERS):
    phi = random_formula(rng, depth, ("x",), sig, rationals)
    return sx.Sup("x", phi) if "x" in sx.free_variables(phi) else phi


# --------------------------------------------------------------------------
# arbitrary ASTs for the printer round trip

AST_SIG = Signature(
    functions=(FunctionSymbol("f", 1, Modulus.identity()), FunctionSymbol("g", 2, Modulus.linear(2))),
    predicates=(PredicateSymbol("P", 1, Modulus.identity()), PredicateSymbol("R", 2, Modulus.linear(2))),
    constants=("c",),
    families=("e", "u"),
)
AST_VARS = ("x", "y", "z", "x'")
AST_INDICES = ("i", "j")


def _random_index(rng, indices, allow_closed=True):
    coeffs = []
    for v in indices:
        if rng.random() < 0.6:
            coeffs.append((v, rng.choice((1, 1, 2))))
    if not coeffs and (not allow_closed or not indices or rng.random() < 0.3) and indices:
        coeffs.append((rng.choice(indices), 1))
    return sx.Index(tuple(coeffs), rng.randrange(4))


def _ast_term(rng, indices, depth):
    r = rng.random()
    if depth > 0 and r < 0.25:
        fn = rng.choice(AST_SIG.functions)
        return sx.App(fn.name, tuple(_ast_term(rng, indices, depth - 1) for _ in range(fn.arity)))
    if r < 0.4:
        return sx.IConst(rng.choice(AST_SIG.families), _random_index(rng, indices))
    if r < 0.5:
        return sx.Const("c")
    return sx.Var(rng.choice(AST_VARS))


def _ast_rational(rng, indices):
    if indices and rng.random() < 0.4:
        idx = _random_index(rng, indices, allow_closed=False)
        kind = rng.choice(("frac", "cofrac", "enum"))
        if kind == "enum":
            return sx.RatSeq("enum", 0, idx)
        num = rng.randrange(1, 3)
        idx = sx.Index(idx.coeffs, max(idx.offset, num))
        return sx.RatSeq(kind, num, idx)
    den = rng.randrange(1, 9)
    return sx.Rat(F(rng.randrange(den + 1), den))


def random_ast(rng: random.Random, depth: int = 4, indices=()):
    """Any core AST over ``AST_SIG``, including schemas and index-dependent rationals."""
    if depth == 0 or rng.random() < 0.15:
        r = rng.random()
        if r < 0.3:
            return _ast_rational(rng, indices)
        if r < 0.55:
            return sx.Dist(_ast_term(rng, indices, 1), _ast_term(rng, indices, 1))
        sym = rng.choice(AST_SIG.predicates)
        return sx.Pred(sym.name, tuple(_ast_term(rng, indices, 1) for _ in range(sym.arity)))
    r = rng.random()
    if r < 0.5:
        return sx.Implies(random_ast(rng, depth - 1, indices), random_ast(rng, depth - 1, indices))
    if r < 0.7:
        return sx.Sup(rng.choice(AST_VARS), random_ast(rng, depth - 1, indices))
    if r < 0.85:
        fresh = [v for v in AST_INDICES if v not in indices]
        if fresh:
            v = rng.choice(fresh)
            return sx.SupSeq(sx.IndexSchema(v, random_ast(rng, depth - 1, tuple(indices) + (v,))))
    members = tuple(random_ast(rng, depth - 1, indices) for _ in range(rng.randrange(1, 4)))
    return sx.SupSeq(sx.ListSchema(members))


# --------------------------------------------------------------------------
# sequences for ultraproducts

SIG_SEQ = Signature(
    functions=SIG.functions,
    predicates=SIG.predicates,
    constants=SIG.constants,
    families=("e",),
)


def random_sequence(rng: random.Random, sig: Signature = SIG_SEQ, max_points=3, max_prefix=3, zero_prob=0.25):
    """An eventually-constant sequence: a random prefix of structures, then one tail structure forever."""
    from metrilog.ultraproduct import StructureSequence

    def draw(name):
        return random_structure(rng, rng.randrange(1, max_points + 1), sig, zero_prob=zero_prob, name=name)

    prefix = [draw(f"M{n}") for n in range(rng.randrange(max_prefix + 1))]
    return StructureSequence.eventually(prefix, draw("tail"))
