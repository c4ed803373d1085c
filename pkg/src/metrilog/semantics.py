"""Truth values of formulas in finite metric structures.

Finitary formulas always get an exact value. Countable suprema over an
infinite schema are truncated after ``truncation_depth`` instances and
reported as a sound interval ``[lo, hi]`` that contains the true value.
"""
from __future__ import annotations

import enum
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from . import syntax as sx
from .core import ONE, ZERO, MetricStructure, format_rational

DEFAULT_DEPTH = 16


@dataclass(frozen=True)
class EvalConfig:
    truncation_depth: int = DEFAULT_DEPTH

    def __post_init__(self):
        if self.truncation_depth < 1:
            raise ValueError("truncation depth must be at least 1")

    @classmethod
    def from_env(cls, depth: int | None = None) -> EvalConfig:
        """Explicit ``depth`` wins over ``METRILOG_DEPTH``, which wins over the default."""
        if depth is None:
            raw = os.environ.get("METRILOG_DEPTH")
            depth = int(raw) if raw else DEFAULT_DEPTH
        return cls(depth)


@dataclass(frozen=True)
class ValueInterval:
    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        if not ZERO <= self.lo <= self.hi <= ONE:
            raise ValueError(f"bad interval [{self.lo}, {self.hi}]")

    @classmethod
    def point(cls, q) -> ValueInterval:
        q = Fraction(q)
        return cls(q, q)

    @property
    def exact(self) -> bool:
        return self.lo == self.hi

    @property
    def value(self) -> Fraction:
        if not self.exact:
            raise ValueError(f"value is only known to lie in [{self.lo}, {self.hi}]")
        return self.lo

    def contains(self, q) -> bool:
        return self.lo <= q <= self.hi

    def __str__(self):
        exact = "true" if self.exact else "false"
        return f"lo={format_rational(self.lo)} hi={format_rational(self.hi)} exact={exact}"

    def as_dict(self) -> dict:
        return {"lo": format_rational(self.lo), "hi": format_rational(self.hi), "exact": self.exact}


class Verdict(enum.Enum):
    YES = "yes"
    NO = "no"
    UNKNOWN = "unknown"

    def __str__(self):
        return self.value

    @staticmethod
    def all_of(verdicts: Iterable[Verdict]) -> Verdict:
        """Conjunction in the three-valued lattice: any No wins, then any Unknown."""
        seen_unknown = False
        for v in verdicts:
            if v is Verdict.NO:
                return Verdict.NO
            if v is Verdict.UNKNOWN:
                seen_unknown = True
        return Verdict.UNKNOWN if seen_unknown else Verdict.YES


class EvaluationError(ValueError):
    pass


# --------------------------------------------------------------------------
# evaluator


def eval_term(m: MetricStructure, t: sx.Term, env: Mapping[str, str], ienv: Mapping[str, int] | None = None) -> str:
    if isinstance(t, sx.Var):
        try:
            return env[t.name]
        except KeyError:
            raise EvaluationError(f"unbound variable {t.name!r}") from None
    if isinstance(t, sx.Const):
        try:
            return m.constants[t.name]
        except KeyError:
            raise EvaluationError(f"unknown constant {t.name!r}") from None
    if isinstance(t, sx.IConst):
        if t.family not in m.families:
            raise EvaluationError(f"unknown constant family {t.family!r}")
        try:
            i = t.index.value(ienv)
        except ValueError as exc:
            raise EvaluationError(str(exc)) from None
        return m.families[t.family][i]
    if isinstance(t, sx.App):
        table = m.functions.get(t.fn)
        if table is None:
            raise EvaluationError(f"unknown function {t.fn!r}")
        args = tuple(eval_term(m, a, env, ienv) for a in t.args)
        try:
            return table[args]
        except KeyError:
            raise EvaluationError(f"function {t.fn!r} applied to {len(args)} argument(s)") from None
    raise TypeError(f"not a term: {t!r}")


class Evaluator:
    """Evaluates many formulas in one structure, sharing a memo between calls.

    Internally every node is valued as a bare ``(lo, hi)`` pair, cached under
    the node identity and the values of its own free variables, so a
    subformula that does not mention an outer variable is computed once.
    """

    def __init__(self, m: MetricStructure, cfg: EvalConfig | None = None):
        self.m = m
        self.cfg = cfg or EvalConfig()
        self.depth = self.cfg.truncation_depth
        self.memo: dict = {}
        self.scopes: dict = {}
        self.dispatch = {
            sx.Dist: self._dist,
            sx.Pred: self._pred,
            sx.Rat: self._rat,
            sx.RatSeq: self._ratseq,
            sx.Implies: self._implies,
            sx.Sup: self._sup,
            sx.SupSeq: self._supseq,
        }

    def evaluate(self, phi: sx.Formula, assignment: Mapping[str, str] | None = None) -> ValueInterval:
        env = dict(assignment or {})
        missing = sx.free_variables(phi) - set(env)
        if missing:
            raise EvaluationError(f"unbound free variable(s) {sorted(missing)}")
        for var, p in env.items():
            if p not in self.m.points:
                raise EvaluationError(f"assignment {var}={p!r} names no point")
        lo, hi = self.run(phi, env, {})
        return ValueInterval(lo, hi)

    def _scope(self, phi) -> tuple:
        """Sorted free logic variables and free index variables of ``phi``, cached by identity."""
        hit = self.scopes.get(id(phi))
        if hit is not None:
            return hit[1]
        t = type(phi)
        if t is sx.Implies:
            lv, li = self._scope(phi.left)
            rv, ri = self._scope(phi.right)
            fv, fi = set(lv) | set(rv), set(li) | set(ri)
        elif t is sx.Sup:
            bv, bi = self._scope(phi.body)
            fv, fi = set(bv) - {phi.var}, set(bi)
        elif t is sx.SupSeq and isinstance(phi.schema, sx.IndexSchema):
            bv, bi = self._scope(phi.schema.body)
            fv, fi = set(bv), set(bi) - {phi.schema.var}
        elif t is sx.SupSeq:
            fv, fi = set(), set()
            for member in phi.schema.members:
                mv, mi = self._scope(member)
                fv |= set(mv)
                fi |= set(mi)
        else:
            fv, fi = sx.free_variables(phi), sx.free_index_variables(phi)
        out = (tuple(sorted(fv)), tuple(sorted(fi)))
        self.scopes[id(phi)] = (phi, out)
        return out

    def run(self, phi, env, ienv) -> tuple:
        fv, fi = self._scope(phi)
        key = (id(phi), tuple(env.get(v) for v in fv), tuple(ienv.get(v) for v in fi))
        hit = self.memo.get(key)
        if hit is not None:
            return hit[1]
        handler = self.dispatch.get(type(phi))
        if handler is None:
            raise TypeError(f"not a formula: {phi!r}")
        out = handler(phi, env, ienv)
        # the node is stored alongside its value so its id cannot be reused
        self.memo[key] = (phi, out)
        return out

    def _dist(self, phi, env, ienv):
        a = eval_term(self.m, phi.left, env, ienv)
        b = eval_term(self.m, phi.right, env, ienv)
        v = self.m.metric[a, b]
        return v, v

    def _pred(self, phi, env, ienv):
        table = self.m.predicates.get(phi.name)
        if table is None:
            raise EvaluationError(f"unknown predicate {phi.name!r}")
        args = tuple(eval_term(self.m, a, env, ienv) for a in phi.args)
        try:
            v = table[args]
        except KeyError:
            raise EvaluationError(f"predicate {phi.name!r} applied to {len(args)} argument(s)") from None
        return v, v

    def _rat(self, phi, env, ienv):
        return phi.value, phi.value

    def _ratseq(self, phi, env, ienv):
        try:
            v = phi.at(ienv)
        except ValueError as exc:
            raise EvaluationError(str(exc)) from None
        return v, v

    def _implies(self, phi, env, ienv):
        alo, ahi = self.run(phi.left, env, ienv)
        blo, bhi = self.run(phi.right, env, ienv)
        # antitone in the antecedent, monotone in the consequent
        lo = 1 - ahi + blo if ahi > blo else ONE
        if alo is ahi and blo is bhi:
            return lo, lo
        return lo, (1 - alo + bhi if alo > bhi else ONE)

    def _sup(self, phi, env, ienv):
        lo = hi = ZERO
        for p in self.m.points:
            vlo, vhi = self.run(phi.body, {**env, phi.var: p}, ienv)
            if vlo > lo:
                lo = vlo
            if vhi > hi:
                hi = vhi
        return (lo, lo) if lo == hi else (lo, hi)

    def _supseq(self, phi, env, ienv):
        schema = phi.schema
        if isinstance(schema, sx.ListSchema):
            vals = [self.run(member, env, ienv) for member in schema.members]
            lo, hi = max(v[0] for v in vals), max(v[1] for v in vals)
            return (lo, lo) if lo == hi else (lo, hi)
        lo = ZERO
        for i in range(self.depth):
            vlo, _ = self.run(schema.body, env, {**ienv, schema.var: i})
            if vlo == ONE:
                return ONE, ONE
            lo = max(lo, vlo)
        return lo, ONE


def evaluate(m: MetricStructure, phi: sx.Formula, assignment: Mapping[str, str] | None = None,
             cfg: EvalConfig | None = None) -> ValueInterval:
    """Truth value of ``phi`` in ``m`` under ``assignment``, as a sound interval."""
    return Evaluator(m, cfg).evaluate(phi, assignment)


def verdict_of(iv: ValueInterval) -> Verdict:
    if iv.lo == ONE:
        return Verdict.YES
    if iv.hi < ONE:
        return Verdict.NO
    return Verdict.UNKNOWN


def satisfies(m: MetricStructure, phi: sx.Formula, assignment: Mapping[str, str] | None = None,
              cfg: EvalConfig | None = None) -> Verdict:
    """Does ``phi`` take value exactly 1? Unknown when truncation leaves 1 undecided."""
    return verdict_of(evaluate(m, phi, assignment, cfg))


# --------------------------------------------------------------------------
# theories and registries


@dataclass(frozen=True)
class Theory:
    name: str
    sentences: tuple

    def __post_init__(self):
        object.__setattr__(self, "sentences", tuple(self.sentences))
        for s in self.sentences:
            fv = sx.free_variables(s)
            if fv:
                raise ValueError(f"theory member has free variables {sorted(fv)}")


EMPTY_THEORY = Theory("empty", ())


def models(m: MetricStructure, theory: Theory, cfg: EvalConfig | None = None) -> Verdict:
    return Verdict.all_of(satisfies(m, s, None, cfg) for s in theory.sentences)


class Registry(tuple):
    """An ordered, finite stand-in for the class of all structures of one signature."""

    def __new__(cls, structures: Iterable[MetricStructure] = ()):
        items = tuple(structures)
        if items:
            sig = items[0].signature
            for s in items[1:]:
                if s.signature != sig:
                    raise ValueError(f"structure {s.name} has a different signature")
        return super().__new__(cls, items)

    @property
    def signature(self):
        return self[0].signature if self else None


@dataclass
class IntervalPartition:
    inside: list[int] = field(default_factory=list)
    outside: list[int] = field(default_factory=list)
    unknown: list[int] = field(default_factory=list)
    values: list[ValueInterval] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "inside": self.inside,
            "outside": self.outside,
            "unknown": self.unknown,
            "values": [v.as_dict() for v in self.values],
        }


def mod_interval(registry: Sequence[MetricStructure], sigma: sx.Formula, r, s,
                 cfg: EvalConfig | None = None) -> IntervalPartition:
    """Split ``registry`` by whether ``sigma`` certainly lies in [r, s], certainly not, or neither."""
    r, s = Fraction(r), Fraction(s)
    if r > s:
        raise ValueError("empty interval: r > s")
    out = IntervalPartition()
    for i, m in enumerate(registry):
        iv = evaluate(m, sigma, None, cfg)
        out.values.append(iv)
        if r <= iv.lo and iv.hi <= s:
            out.inside.append(i)
        elif iv.hi < r or iv.lo > s:
            out.outside.append(i)
        else:
            out.unknown.append(i)
    return out


def interval_class_sentence(sigma: sx.Formula, r, s) -> sx.Formula:
    """The sentence ``sigma >= r ∧ sigma <= s`` whose models are exactly sigma^-1([r, s])."""
    return sx.and_(sx.geq(sigma, Fraction(r)), sx.leq(sigma, Fraction(s)))


@dataclass(frozen=True)
class Comparison:
    sentence: sx.Formula
    left: ValueInterval
    right: ValueInterval
    verdict: str  # equal | different | unknown


@dataclass
class CompareReport:
    entries: list[Comparison]

    @property
    def verdict(self) -> str:
        kinds = {e.verdict for e in self.entries}
        if "different" in kinds:
            return "different"
        if "unknown" in kinds:
            return "unknown"
        return "equal"


def compare_L(m: MetricStructure, n: MetricStructure, pool: Iterable[sx.Formula],
              cfg: EvalConfig | None = None) -> CompareReport:
    """Compare the sentence values of two structures on a finite pool of sentences."""
    if m.signature != n.signature:
        raise ValueError("structures have different signatures")
    entries = []
    for sigma in pool:
        a = evaluate(m, sigma, None, cfg)
        b = evaluate(n, sigma, None, cfg)
        if a.exact and b.exact and a.lo == b.lo:
            verdict = "equal"
        elif a.hi < b.lo or b.hi < a.lo:
            verdict = "different"
        else:
            verdict = "unknown"
        entries.append(Comparison(sigma, a, b, verdict))
    return CompareReport(entries)
