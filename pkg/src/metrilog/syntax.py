"""Terms, formulas, infinitary schemas, derived connectives and substitution.

Only five formula constructors exist: :class:`Dist`, :class:`Pred`,
:class:`Rat` (plus the schema-dependent :class:`RatSeq`), :class:`Implies`,
:class:`SupSeq` and :class:`Sup`. Every other connective is a function that
expands eagerly into these.
"""
from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Union

from .core import ONE, ZERO, unit

# --------------------------------------------------------------------------
# index expressions


@dataclass(frozen=True)
class Index:
    """Affine index ``sum(coeff * var) + offset`` over schema index variables."""

    coeffs: tuple[tuple[str, int], ...] = ()
    offset: int = 0

    def __post_init__(self):
        merged: dict[str, int] = {}
        for var, k in self.coeffs:
            if k < 0:
                raise ValueError("index coefficients must be non-negative")
            merged[var] = merged.get(var, 0) + k
        if self.offset < 0:
            raise ValueError("index offset must be non-negative")
        object.__setattr__(self, "coeffs", tuple(sorted((v, k) for v, k in merged.items() if k)))

    @classmethod
    def const(cls, n: int) -> Index:
        return cls((), n)

    @classmethod
    def var(cls, name: str, coeff: int = 1, offset: int = 0) -> Index:
        return cls(((name, coeff),), offset)

    @property
    def variables(self) -> frozenset[str]:
        return frozenset(v for v, _ in self.coeffs)

    @property
    def is_closed(self) -> bool:
        return not self.coeffs

    def bind(self, env: Mapping[str, int]) -> Index:
        offset = self.offset
        rest = []
        for var, k in self.coeffs:
            if var in env:
                offset += k * env[var]
            else:
                rest.append((var, k))
        return Index(tuple(rest), offset)

    def value(self, env: Mapping[str, int] | None = None) -> int:
        bound = self.bind(env or {})
        if not bound.is_closed:
            raise ValueError(f"unbound index variable(s) {sorted(bound.variables)}")
        return bound.offset


_rational_cache: list[Fraction] = []


def _rationals() -> Iterator[Fraction]:
    for q in itertools.count(2):
        for p in range(1, q):
            if _gcd(p, q) == 1:
                yield Fraction(p, q)


def _gcd(a, b):
    while b:
        a, b = b, a % b
    return a


_rational_stream = _rationals()


def enumerate_rational(n: int) -> Fraction:
    """The n-th element of a fixed enumeration of Q ∩ (0, 1): 1/2, 1/3, 2/3, 1/4, 3/4, ..."""
    while len(_rational_cache) <= n:
        _rational_cache.append(next(_rational_stream))
    return _rational_cache[n]


# --------------------------------------------------------------------------
# terms


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class IConst:
    family: str
    index: Index


@dataclass(frozen=True)
class App:
    fn: str
    args: tuple

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))
        if not self.args:
            raise ValueError("function application needs at least one argument")


Term = Union[Var, Const, IConst, App]

# --------------------------------------------------------------------------
# formulas


@dataclass(frozen=True)
class Dist:
    left: Term
    right: Term


@dataclass(frozen=True)
class Pred:
    name: str
    args: tuple

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))
        if not self.args:
            raise ValueError("predicate application needs at least one argument")


@dataclass(frozen=True)
class Rat:
    value: Fraction

    def __post_init__(self):
        object.__setattr__(self, "value", unit(self.value))


@dataclass(frozen=True)
class RatSeq:
    """A rational constant depending on schema indices.

    ``kind`` is ``frac`` (a / index), ``cofrac`` (1 - a / index) or ``enum``
    (the index-th rational of :func:`enumerate_rational`; ``numerator`` unused).
    """

    kind: str
    numerator: int
    index: Index

    def __post_init__(self):
        if self.kind in ("frac", "cofrac"):
            if self.numerator < 1 or self.index.offset < self.numerator:
                raise ValueError("a/(i+b) needs integers b >= a >= 1")
        elif self.kind != "enum":
            raise ValueError(f"unknown rational sequence kind {self.kind!r}")

    def at(self, env: Mapping[str, int] | None = None) -> Fraction:
        n = self.index.value(env)
        if self.kind == "frac":
            return Fraction(self.numerator, n)
        if self.kind == "cofrac":
            return 1 - Fraction(self.numerator, n)
        return enumerate_rational(n)


@dataclass(frozen=True)
class Implies:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class IndexSchema:
    """The countable family ``body[var := 0], body[var := 1], ...``."""

    var: str
    body: "Formula"


@dataclass(frozen=True)
class ListSchema:
    members: tuple

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))
        if not self.members:
            raise ValueError("an explicit schema needs at least one member")


Schema = Union[IndexSchema, ListSchema]


@dataclass(frozen=True)
class SupSeq:
    schema: Schema


@dataclass(frozen=True)
class Sup:
    var: str
    body: "Formula"


Formula = Union[Dist, Pred, Rat, RatSeq, Implies, SupSeq, Sup]
FORMULA_TYPES = (Dist, Pred, Rat, RatSeq, Implies, SupSeq, Sup)

# --------------------------------------------------------------------------
# derived connectives

ZERO_F = Rat(ZERO)
ONE_F = Rat(ONE)


def _rat(r) -> Formula:
    return r if isinstance(r, (Rat, RatSeq)) else Rat(r)


def neg(phi: Formula) -> Formula:
    return Implies(phi, ZERO_F)


def or_(phi: Formula, psi: Formula) -> Formula:
    return Implies(Implies(phi, psi), psi)


def and_(phi: Formula, psi: Formula) -> Formula:
    return neg(or_(neg(phi), neg(psi)))


def tplus(phi: Formula, psi: Formula) -> Formula:
    """Truncated addition ``phi ⊸ ¬psi``; value min{2 - phi - psi, 1}."""
    return Implies(phi, neg(psi))


def big_or(formulas: Iterable[Formula]) -> Formula:
    return functools.reduce(or_, formulas)


def big_and(formulas: Iterable[Formula]) -> Formula:
    return functools.reduce(and_, formulas)


def inf(var: str, body: Formula) -> Formula:
    return neg(Sup(var, neg(body)))


def inf_seq(schema: Schema) -> Formula:
    if isinstance(schema, IndexSchema):
        return neg(SupSeq(IndexSchema(schema.var, neg(schema.body))))
    return neg(SupSeq(ListSchema(tuple(neg(m) for m in schema.members))))


def geq(phi: Formula, r) -> Formula:
    return Implies(_rat(r), phi)


def leq(phi: Formula, r) -> Formula:
    return Implies(phi, _rat(r))


def eq(t1: Term, t2: Term) -> Formula:
    return neg(Dist(t1, t2))


def disc(phi: Formula) -> Formula:
    return or_(phi, neg(phi))


def half(phi: Formula, n: int) -> Formula:
    """Approximant of ``x / 2``: the disjunction over i = 1..n of i/n ∧ ¬(phi ⊸ i/n)."""
    if n < 1:
        raise ValueError("Half_n needs n >= 1")
    return big_or(and_(Rat(Fraction(i, n)), neg(Implies(phi, Rat(Fraction(i, n))))) for i in range(1, n + 1))


# --------------------------------------------------------------------------
# traversal helpers


def term_variables(t: Term) -> frozenset[str]:
    if isinstance(t, Var):
        return frozenset({t.name})
    if isinstance(t, App):
        return frozenset().union(*(term_variables(a) for a in t.args))
    return frozenset()


def free_variables(phi: Formula) -> frozenset[str]:
    if isinstance(phi, Dist):
        return term_variables(phi.left) | term_variables(phi.right)
    if isinstance(phi, Pred):
        return frozenset().union(*(term_variables(a) for a in phi.args))
    if isinstance(phi, (Rat, RatSeq)):
        return frozenset()
    if isinstance(phi, Implies):
        return free_variables(phi.left) | free_variables(phi.right)
    if isinstance(phi, Sup):
        return free_variables(phi.body) - {phi.var}
    if isinstance(phi, SupSeq):
        # logic variables do not depend on the index, so one body covers every instance
        if isinstance(phi.schema, IndexSchema):
            return free_variables(phi.schema.body)
        return frozenset().union(*(free_variables(m) for m in phi.schema.members))
    raise TypeError(f"not a formula: {phi!r}")


def all_variables(phi: Formula) -> frozenset[str]:
    """Free and bound logic variable names occurring in ``phi``."""
    if isinstance(phi, Sup):
        return all_variables(phi.body) | {phi.var}
    if isinstance(phi, Implies):
        return all_variables(phi.left) | all_variables(phi.right)
    if isinstance(phi, SupSeq):
        if isinstance(phi.schema, IndexSchema):
            return all_variables(phi.schema.body)
        return frozenset().union(*(all_variables(m) for m in phi.schema.members))
    return free_variables(phi)


def free_index_variables(phi) -> frozenset[str]:
    if isinstance(phi, Index):
        return phi.variables
    if isinstance(phi, IConst):
        return phi.index.variables
    if isinstance(phi, App):
        return frozenset().union(*(free_index_variables(a) for a in phi.args))
    if isinstance(phi, (Var, Const, Rat)):
        return frozenset()
    if isinstance(phi, RatSeq):
        return phi.index.variables
    if isinstance(phi, Dist):
        return free_index_variables(phi.left) | free_index_variables(phi.right)
    if isinstance(phi, Pred):
        return frozenset().union(*(free_index_variables(a) for a in phi.args))
    if isinstance(phi, Implies):
        return free_index_variables(phi.left) | free_index_variables(phi.right)
    if isinstance(phi, Sup):
        return free_index_variables(phi.body)
    if isinstance(phi, SupSeq):
        if isinstance(phi.schema, IndexSchema):
            return free_index_variables(phi.schema.body) - {phi.schema.var}
        return frozenset().union(*(free_index_variables(m) for m in phi.schema.members))
    raise TypeError(f"not a term or formula: {phi!r}")


def is_finitary(phi: Formula) -> bool:
    if isinstance(phi, SupSeq):
        return False
    if isinstance(phi, Implies):
        return is_finitary(phi.left) and is_finitary(phi.right)
    if isinstance(phi, Sup):
        return is_finitary(phi.body)
    return True


def size(phi: Formula) -> int:
    if isinstance(phi, Implies):
        return 1 + size(phi.left) + size(phi.right)
    if isinstance(phi, Sup):
        return 1 + size(phi.body)
    if isinstance(phi, SupSeq):
        if isinstance(phi.schema, IndexSchema):
            return 1 + size(phi.schema.body)
        return 1 + sum(size(m) for m in phi.schema.members)
    return 1


def fresh_name(base: str, avoid: Iterable[str]) -> str:
    avoid = set(avoid)
    name = base
    while name in avoid:
        name += "'"
    return name


# --------------------------------------------------------------------------
# substitution


def substitute_term(t: Term, var: str, s: Term) -> Term:
    if isinstance(t, Var):
        return s if t.name == var else t
    if isinstance(t, App):
        return App(t.fn, tuple(substitute_term(a, var, s) for a in t.args))
    return t


def substitute(phi: Formula, var: str, t: Term) -> Formula:
    """Capture-avoiding substitution of term ``t`` for free occurrences of ``var``."""
    if var not in free_variables(phi):
        return phi
    return _subst(phi, var, t, term_variables(t))


def _subst(phi, var, t, tvars):
    if isinstance(phi, Dist):
        return Dist(substitute_term(phi.left, var, t), substitute_term(phi.right, var, t))
    if isinstance(phi, Pred):
        return Pred(phi.name, tuple(substitute_term(a, var, t) for a in phi.args))
    if isinstance(phi, (Rat, RatSeq)):
        return phi
    if isinstance(phi, Implies):
        return Implies(_subst_opt(phi.left, var, t, tvars), _subst_opt(phi.right, var, t, tvars))
    if isinstance(phi, Sup):
        if phi.var == var:
            return phi
        body, bound = phi.body, phi.var
        if bound in tvars:
            bound = fresh_name(bound, all_variables(body) | tvars | {var})
            body = _subst(body, phi.var, Var(bound), {bound}) if phi.var in free_variables(body) else body
        return Sup(bound, _subst_opt(body, var, t, tvars))
    if isinstance(phi, SupSeq):
        if isinstance(phi.schema, IndexSchema):
            return SupSeq(IndexSchema(phi.schema.var, _subst_opt(phi.schema.body, var, t, tvars)))
        return SupSeq(ListSchema(tuple(_subst_opt(m, var, t, tvars) for m in phi.schema.members)))
    raise TypeError(f"not a formula: {phi!r}")


def _subst_opt(phi, var, t, tvars):
    return _subst(phi, var, t, tvars) if var in free_variables(phi) else phi


def substitute_many(phi: Formula, mapping: Mapping[str, Term]) -> Formula:
    """Simultaneous substitution, done via fresh intermediate variables."""
    if not mapping:
        return phi
    avoid = set(all_variables(phi)) | set(mapping)
    for t in mapping.values():
        avoid |= term_variables(t)
    temps = {}
    for v in mapping:
        tmp = fresh_name(f"{v}~", avoid)
        avoid.add(tmp)
        temps[v] = tmp
    for v, tmp in temps.items():
        phi = substitute(phi, v, Var(tmp))
    for v, tmp in temps.items():
        phi = substitute(phi, tmp, mapping[v])
    return phi


# --------------------------------------------------------------------------
# schemas


def _bind_term(t: Term, env: Mapping[str, int]) -> Term:
    if isinstance(t, IConst):
        return IConst(t.family, t.index.bind(env))
    if isinstance(t, App):
        return App(t.fn, tuple(_bind_term(a, env) for a in t.args))
    return t


def bind_indices(phi: Formula, env: Mapping[str, int]) -> Formula:
    """Replace free schema index variables by the numbers in ``env``."""
    if isinstance(phi, Dist):
        return Dist(_bind_term(phi.left, env), _bind_term(phi.right, env))
    if isinstance(phi, Pred):
        return Pred(phi.name, tuple(_bind_term(a, env) for a in phi.args))
    if isinstance(phi, Rat):
        return phi
    if isinstance(phi, RatSeq):
        idx = phi.index.bind(env)
        seq = RatSeq(phi.kind, phi.numerator, idx)
        return Rat(seq.at()) if idx.is_closed else seq
    if isinstance(phi, Implies):
        return Implies(bind_indices(phi.left, env), bind_indices(phi.right, env))
    if isinstance(phi, Sup):
        return Sup(phi.var, bind_indices(phi.body, env))
    if isinstance(phi, SupSeq):
        if isinstance(phi.schema, IndexSchema):
            inner = {k: v for k, v in env.items() if k != phi.schema.var}
            return SupSeq(IndexSchema(phi.schema.var, bind_indices(phi.schema.body, inner)))
        return SupSeq(ListSchema(tuple(bind_indices(m, env) for m in phi.schema.members)))
    raise TypeError(f"not a formula: {phi!r}")


def instantiate(schema: Schema, i: int) -> Formula:
    if i < 0:
        raise ValueError("schema index must be a natural number")
    if isinstance(schema, ListSchema):
        if i >= len(schema.members):
            raise IndexError(f"explicit schema has only {len(schema.members)} members")
        return schema.members[i]
    return bind_indices(schema.body, {schema.var: i})


# --------------------------------------------------------------------------
# fragment closure


def _match_term(pattern: Term, target: Term, binding: dict, bound: dict) -> bool:
    if isinstance(pattern, Var):
        if pattern.name in bound:
            return isinstance(target, Var) and target.name == bound[pattern.name]
        if pattern.name in binding:
            return binding[pattern.name] == target
        if term_variables(target) & set(bound.values()):
            return False
        binding[pattern.name] = target
        return True
    if isinstance(pattern, App):
        return (
            isinstance(target, App)
            and target.fn == pattern.fn
            and len(target.args) == len(pattern.args)
            and all(_match_term(p, q, binding, bound) for p, q in zip(pattern.args, target.args))
        )
    return pattern == target


def match_instance(pattern: Formula, target: Formula, binding: dict | None = None, bound: dict | None = None) -> dict | None:
    """Find terms for the free variables of ``pattern`` turning it into ``target``.

    Bound variables are matched up to renaming. Returns the substitution or None.
    """
    binding = {} if binding is None else binding
    bound = {} if bound is None else bound
    p, q = pattern, target
    if isinstance(p, Dist):
        ok = isinstance(q, Dist) and _match_term(p.left, q.left, binding, bound) and _match_term(p.right, q.right, binding, bound)
    elif isinstance(p, Pred):
        ok = (
            isinstance(q, Pred) and q.name == p.name and len(q.args) == len(p.args)
            and all(_match_term(a, b, binding, bound) for a, b in zip(p.args, q.args))
        )
    elif isinstance(p, (Rat, RatSeq)):
        ok = p == q
    elif isinstance(p, Implies):
        ok = (
            isinstance(q, Implies)
            and match_instance(p.left, q.left, binding, bound) is not None
            and match_instance(p.right, q.right, binding, bound) is not None
        )
    elif isinstance(p, Sup):
        ok = isinstance(q, Sup) and match_instance(p.body, q.body, binding, {**bound, p.var: q.var}) is not None
    elif isinstance(p, SupSeq):
        if isinstance(p.schema, IndexSchema):
            ok = (
                isinstance(q, SupSeq) and isinstance(q.schema, IndexSchema) and q.schema.var == p.schema.var
                and match_instance(p.schema.body, q.schema.body, binding, bound) is not None
            )
        else:
            ok = (
                isinstance(q, SupSeq) and isinstance(q.schema, ListSchema)
                and len(q.schema.members) == len(p.schema.members)
                and all(match_instance(a, b, binding, bound) is not None for a, b in zip(p.schema.members, q.schema.members))
            )
    else:
        raise TypeError(f"not a formula: {p!r}")
    return binding if ok else None


def _substitution_cost(generator: Formula, target: Formula) -> int | None:
    binding = match_instance(generator, target)
    if binding is None:
        return None
    return sum(1 for v, t in binding.items() if t != Var(v))


def in_fragment_closure(phi: Formula, generators: Iterable[Formula], depth: int) -> bool:
    """Bounded search for a derivation of ``phi`` in the fragment generated by ``generators``.

    Atomic formulas and rational constants cost nothing; every use of
    ``sup_x``, ``⊸``, ``¬`` or of substituting a term for one variable costs
    one step. ``False`` only means no derivation within ``depth`` steps.
    """
    if depth < 0:
        raise ValueError("depth must be non-negative")
    gens = tuple(generators)
    return _min_cost(phi, gens, {}) <= depth


_INF = float("inf")


def _min_cost(phi, gens, memo) -> float:
    key = phi
    if key in memo:
        return memo[key]
    best = _INF
    if isinstance(phi, (Dist, Pred, Rat)):
        best = 0
    for g in gens:
        c = _substitution_cost(g, phi)
        if c is not None:
            best = min(best, c)
    if best > 0:
        if isinstance(phi, Implies):
            best = min(best, 1 + _min_cost(phi.left, gens, memo) + _min_cost(phi.right, gens, memo))
            if phi.right == ZERO_F:
                best = min(best, 1 + _min_cost(phi.left, gens, memo))
        elif isinstance(phi, Sup):
            best = min(best, 1 + _min_cost(phi.body, gens, memo))
    memo[key] = best
    return best
