"""Ultraproducts that can actually be computed.

Two kinds of ultrafilter are supported. ``Principal(k)`` works on any family
and projects onto coordinate ``k``. ``FRECHET`` stands for an arbitrary
non-principal ultrafilter on ω. It is only accepted for sequences that are
eventually constant, because those are exactly the inputs on which every
non-principal ultrafilter gives the same answer.

Points of the ultraproduct are built from representative sequences, and
every distance and predicate value is computed as an ultrafilter limit of the
coordinate values. Points at distance 0 are then identified with a union-find.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence, Union

from .core import FamilyInterp, MetricStructure, check_all_moduli, format_rational, validate_metric
from .semantics import EvalConfig, EvaluationError, evaluate


class NotComputable(ValueError):
    pass


@dataclass(frozen=True)
class Principal:
    index: int

    def __post_init__(self):
        if self.index < 0:
            raise ValueError("principal index must be a natural number")


@dataclass(frozen=True)
class FrechetLimit:
    def __repr__(self):
        return "FRECHET"


FRECHET = FrechetLimit()
UltrafilterSpec = Union[Principal, FrechetLimit]


@dataclass(frozen=True)
class StructureSequence:
    """Either a finite family (``tail`` is None) or ``prefix`` followed by ``tail`` forever."""

    prefix: tuple
    tail: MetricStructure | None = None

    def __post_init__(self):
        object.__setattr__(self, "prefix", tuple(self.prefix))
        members = list(self.prefix) + ([self.tail] if self.tail is not None else [])
        if not members:
            raise ValueError("empty structure sequence")
        sig = members[0].signature
        if any(m.signature != sig for m in members):
            raise ValueError("structures in a sequence must share one signature")

    @classmethod
    def family(cls, members: Sequence[MetricStructure]) -> StructureSequence:
        return cls(tuple(members), None)

    @classmethod
    def eventually(cls, prefix: Sequence[MetricStructure], tail: MetricStructure) -> StructureSequence:
        return cls(tuple(prefix), tail)

    @property
    def is_finite(self) -> bool:
        return self.tail is None

    @property
    def signature(self):
        return (self.prefix[0] if self.prefix else self.tail).signature

    def __getitem__(self, n: int) -> MetricStructure:
        if n < len(self.prefix):
            return self.prefix[n]
        if self.tail is None:
            raise IndexError(f"family has only {len(self.prefix)} members")
        return self.tail


# --------------------------------------------------------------------------
# value sequences and their limits


@dataclass(frozen=True)
class ConstantTail:
    value: Fraction

    def at(self, n: int) -> Fraction:
        return self.value

    @property
    def limit(self) -> Fraction:
        return self.value


@dataclass(frozen=True)
class ConvergentTail:
    """A convergent tail given by its terms, declared limit and rate.

    ``rate(eps)`` must return an index after which every term is within
    ``eps`` of ``limit``.
    """

    term: Callable[[int], Fraction]
    limit: Fraction
    rate: Callable[[Fraction], int] | None = None

    def at(self, n: int) -> Fraction:
        return Fraction(self.term(n))


@dataclass(frozen=True)
class ValueSequence:
    """An ω-sequence of truth values: explicit ``prefix`` then ``tail``; no tail means finite."""

    prefix: tuple
    tail: ConstantTail | ConvergentTail | None = None

    def __post_init__(self):
        object.__setattr__(self, "prefix", tuple(Fraction(v) for v in self.prefix))
        for v in self.prefix:
            if not 0 <= v <= 1:
                raise ValueError(f"value {v} outside [0, 1]")
        if self.tail is not None and not 0 <= self.tail.limit <= 1:
            raise ValueError("tail limit outside [0, 1]")

    def at(self, n: int) -> Fraction:
        if n < len(self.prefix):
            return self.prefix[n]
        if self.tail is None:
            raise IndexError(f"sequence has only {len(self.prefix)} values")
        return self.tail.at(n)


def check_tail(tail: ConvergentTail, probes: Sequence[Fraction] = (Fraction(1, 4), Fraction(1, 16), Fraction(1, 64)),
               window: int = 32) -> bool:
    """Spot-check a declared rate of convergence on a few eps values."""
    if tail.rate is None:
        return True
    for eps in probes:
        start = tail.rate(eps)
        for n in range(start, start + window):
            if abs(tail.at(n) - tail.limit) > eps:
                return False
    return True


def value_limit(values: ValueSequence, spec: UltrafilterSpec) -> Fraction:
    """Limit of ``values`` along the ultrafilter ``spec``."""
    if isinstance(spec, Principal):
        return values.at(spec.index)
    if values.tail is None:
        raise NotComputable("not computable: non-principal limit of a finite family")
    return Fraction(values.tail.limit)


# --------------------------------------------------------------------------
# ultraproducts


@dataclass
class UltraproductResult:
    structure: MetricStructure
    # ultraproduct point -> point of the factor it projects to
    witness: dict
    source: MetricStructure
    classes: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"witness": dict(self.witness), "classes": {k: list(v) for k, v in self.classes.items()}}


class _UnionFind:
    def __init__(self, items):
        self.parent = {x: x for x in items}

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra


def _index_range(seq: StructureSequence, spec: UltrafilterSpec):
    if isinstance(spec, Principal):
        if seq.is_finite and spec.index >= len(seq.prefix):
            raise ValueError(f"principal index {spec.index} outside a family of {len(seq.prefix)}")
        return seq[spec.index]
    if seq.is_finite:
        raise NotComputable("not computable: non-principal ultraproduct of varying structures")
    return seq.tail


def _values(seq: StructureSequence, fn) -> ValueSequence:
    prefix = tuple(fn(n, seq[n]) for n in range(len(seq.prefix)))
    if seq.is_finite:
        return ValueSequence(prefix)
    return ValueSequence(prefix, ConstantTail(fn(len(seq.prefix), seq.tail)))


def ultraproduct(seq: StructureSequence, spec: UltrafilterSpec) -> UltraproductResult:
    """Build the ultraproduct of ``seq`` along ``spec`` together with its projection witness."""
    source = _index_range(seq, spec)
    k = spec.index if isinstance(spec, Principal) else None

    def rep(p):
        # coordinate n of the representative sequence of source point p; off the
        # decisive coordinates any point will do
        def coord(n, m):
            return p if p in m.points else m.points[0]
        return coord

    reps = {p: rep(p) for p in source.points}

    def lim(fn) -> Fraction:
        return value_limit(_values(seq, fn), spec)

    def dist(p, q) -> Fraction:
        rp, rq = reps[p], reps[q]
        return lim(lambda n, m: m.metric[rp(n, m), rq(n, m)])

    uf = _UnionFind(source.points)
    for p, q in itertools.combinations(source.points, 2):
        if dist(p, q) == 0 and dist(q, p) == 0:
            uf.union(p, q)
    roots = []
    members: dict[str, list[str]] = {}
    for p in source.points:
        r = uf.find(p)
        if r not in members:
            roots.append(r)
            members[r] = []
        members[r].append(p)
    name = {r: f"[{r}]" for r in roots}

    def class_of_sequence(coords: Callable[[int, MetricStructure], str]) -> str:
        for r in roots:
            rr = reps[r]
            if lim(lambda n, m: m.metric[coords(n, m), rr(n, m)]) == 0:
                return name[r]
        raise ValueError("sequence matches no class; the factor is not a pseudometric space")

    metric = {(name[a], name[b]): dist(a, b) for a in roots for b in roots}
    for r in roots:
        for p in members[r]:
            for q in roots:
                if dist(p, q) != dist(r, q):
                    raise ValueError(f"metric does not respect the d=0 quotient at {p}, {q}")

    sig = source.signature
    preds = {}
    for sym in sig.predicates:
        table = {}
        for args in itertools.product(source.points, repeat=sym.arity):
            rs = [reps[a] for a in args]
            v = lim(lambda n, m, rs=rs: m.predicates[sym.name][tuple(r(n, m) for r in rs)])
            key = tuple(name[uf.find(a)] for a in args)
            if key in table and table[key] != v:
                raise ValueError(f"predicate {sym.name} is not invariant under the d=0 quotient")
            table[key] = v
        preds[sym.name] = table
    funcs = {}
    for sym in sig.functions:
        table = {}
        for args in itertools.product(source.points, repeat=sym.arity):
            rs = [reps[a] for a in args]
            out = class_of_sequence(lambda n, m, rs=rs: m.functions[sym.name][tuple(r(n, m) for r in rs)])
            key = tuple(name[uf.find(a)] for a in args)
            if key in table and table[key] != out:
                raise ValueError(f"function {sym.name} is not invariant under the d=0 quotient")
            table[key] = out
        funcs[sym.name] = table
    consts = {c: class_of_sequence(lambda n, m, c=c: m.constants[c]) for c in sig.constants}
    fams = {}
    all_members = list(seq.prefix) + ([seq.tail] if seq.tail is not None else [])
    for fam in sig.families:
        horizon = max(len(m.families[fam].prefix) for m in all_members)
        values = [class_of_sequence(lambda n, m, i=i: m.families[fam][i]) for i in range(horizon + 1)]
        prefix, tail = values[:-1], values[-1]
        while prefix and prefix[-1] == tail:
            prefix.pop()
        fams[fam] = FamilyInterp(tuple(prefix), tail)

    label = f"P{k}" if k is not None else "Frechet"
    structure = MetricStructure(
        sig, tuple(name[r] for r in roots), metric, funcs, preds, consts, fams,
        name=f"ultraproduct_{label}",
    )
    witness = {name[r]: r for r in roots}
    classes = {name[r]: tuple(members[r]) for r in roots}
    return UltraproductResult(structure, witness, source, classes)


def verify_isomorphism(result: UltraproductResult) -> list[str]:
    """Check the projection witness point by point; returns a list of problems (empty if fine)."""
    u, m, w = result.structure, result.source, result.witness
    problems = []
    inverse: dict[str, str] = {}
    for up, mp in w.items():
        if up not in u.points or mp not in m.points:
            problems.append(f"witness entry {up} -> {mp} names unknown points")
            continue
        inverse[mp] = up
    if set(w) != set(u.points):
        problems.append("witness is not total on the ultraproduct")
    if len(inverse) != len(w):
        problems.append("witness is not injective")

    def cls(p):
        # image of a factor point: the ultraproduct point whose witness is at distance 0
        for up, mp in w.items():
            if m.metric[p, mp] == 0 and m.metric[mp, p] == 0:
                return up
        return None

    for p in m.points:
        if cls(p) is None:
            problems.append(f"factor point {p} has no image")
    if problems:
        return problems
    for a, b in itertools.product(u.points, repeat=2):
        if u.metric[a, b] != m.metric[w[a], w[b]]:
            problems.append(f"metric differs at ({a}, {b})")
    sig = u.signature
    for sym in sig.predicates:
        for args in u.tuples(sym.arity):
            if u.predicates[sym.name][args] != m.predicates[sym.name][tuple(w[a] for a in args)]:
                problems.append(f"{sym.name} differs at {args}")
    for sym in sig.functions:
        for args in u.tuples(sym.arity):
            image = cls(m.functions[sym.name][tuple(w[a] for a in args)])
            if u.functions[sym.name][args] != image:
                problems.append(f"{sym.name} differs at {args}")
    for c in sig.constants:
        if u.constants[c] != cls(m.constants[c]):
            problems.append(f"constant {c} differs")
    for fam in sig.families:
        horizon = max(len(u.families[fam].prefix), len(m.families[fam].prefix)) + 1
        for i in range(horizon):
            if u.families[fam][i] != cls(m.families[fam][i]):
                problems.append(f"{fam}[{i}] differs")
    return problems


def well_formedness(structure: MetricStructure) -> list[str]:
    """Metric-axiom violations and modulus counterexamples, as readable strings."""
    out = [v.detail for v in validate_metric(structure).violations]
    for sym, bad in check_all_moduli(structure).items():
        out.extend(f"{sym}: modulus fails at {c.left}/{c.right}, eps={format_rational(c.eps)}" for c in bad)
    return out


# --------------------------------------------------------------------------
# the value-limit identity for sentences


@dataclass(frozen=True)
class Claim3Report:
    ultraproduct_value: Fraction
    limit_value: Fraction

    @property
    def equal(self) -> bool:
        return self.ultraproduct_value == self.limit_value

    def as_dict(self) -> dict:
        return {
            "ultraproduct": format_rational(self.ultraproduct_value),
            "limit": format_rational(self.limit_value),
            "verdict": "equal" if self.equal else "unequal",
        }


def _exact(m, sigma, cfg) -> Fraction:
    iv = evaluate(m, sigma, None, cfg)
    if not iv.exact:
        raise EvaluationError(f"sentence is not evaluated exactly in {m.name} (got {iv})")
    return iv.lo


def check_claim3(seq: StructureSequence, spec: UltrafilterSpec, sigma, cfg: EvalConfig | None = None) -> Claim3Report:
    """Compare sigma in the ultraproduct with the ultrafilter limit of sigma in the factors."""
    cfg = cfg or EvalConfig()
    product = ultraproduct(seq, spec).structure
    left = _exact(product, sigma, cfg)
    right = value_limit(_values(seq, lambda n, m: _exact(m, sigma, cfg)), spec)
    return Claim3Report(left, right)
