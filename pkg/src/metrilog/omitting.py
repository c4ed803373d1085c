"""Partial types: realization, omission, thickening and principality over a finite registry.

Entailment ``T ∪ {φ ≥ r} ⊨ Σ`` is only ever checked inside a user-supplied
registry of finite structures, so every principality verdict here is
relative to that registry and to the supplied witness pool.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from . import syntax as sx
from .core import MetricStructure, format_rational
from .semantics import EvalConfig, Evaluator, Theory, Verdict, eval_term, models, verdict_of

# --------------------------------------------------------------------------
# types


@dataclass(frozen=True)
class MemberSchema:
    """An ω-family of type members ``body[var := 0], body[var := 1], ...``."""

    var: str
    body: sx.Formula


@dataclass(frozen=True)
class PartialType:
    name: str
    variables: tuple
    formulas: tuple

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "formulas", tuple(self.formulas))
        if len(set(self.variables)) != len(self.variables):
            raise ValueError("type variables must be distinct")
        for phi in self.formulas:
            body = phi.body if isinstance(phi, MemberSchema) else phi
            extra = sx.free_variables(body) - set(self.variables)
            if extra:
                raise ValueError(f"type member mentions undeclared variables {sorted(extra)}")


@dataclass(frozen=True)
class WitnessPool:
    """Candidate principality witnesses.

    ``formulas`` and ``terms`` are written in ``variables``. An empty
    ``terms`` list means the identity tuple, i.e. the function-free form.
    """

    variables: tuple
    formulas: tuple
    terms: tuple = ()
    thresholds: tuple = ()

    def __post_init__(self):
        for attr in ("variables", "formulas", "terms", "thresholds"):
            object.__setattr__(self, attr, tuple(getattr(self, attr)))
        object.__setattr__(self, "terms", tuple(tuple(t) for t in self.terms))
        object.__setattr__(self, "thresholds", tuple(Fraction(r) for r in self.thresholds))
        for r in self.thresholds:
            if not 0 < r < 1:
                raise ValueError("thresholds must lie in (0, 1)")
        allowed = set(self.variables)
        for phi in self.formulas:
            extra = sx.free_variables(phi) - allowed
            if extra:
                raise ValueError(f"pool formula mentions undeclared variables {sorted(extra)}")
        if len({len(t) for t in self.terms}) > 1:
            raise ValueError("all term tuples must have the same length")
        for tup in self.terms:
            for t in tup:
                extra = sx.term_variables(t) - allowed
                if extra:
                    raise ValueError(f"pool term mentions undeclared variables {sorted(extra)}")

    def term_tuples(self, arity: int) -> tuple:
        if self.terms:
            if len(self.terms[0]) != arity:
                raise ValueError(f"term tuples have length {len(self.terms[0])}, the type has {arity} variables")
            return self.terms
        if len(self.variables) != arity:
            raise ValueError("without term tuples the pool needs exactly as many variables as the type")
        return (tuple(sx.Var(v) for v in self.variables),)


def members(sigma: PartialType, cfg: EvalConfig) -> tuple[list[sx.Formula], bool]:
    """Concrete member formulas, plus whether an infinite member family was cut short."""
    out, truncated = [], False
    for phi in sigma.formulas:
        if isinstance(phi, MemberSchema):
            if phi.var in sx.free_index_variables(phi.body):
                out.extend(sx.bind_indices(phi.body, {phi.var: i}) for i in range(cfg.truncation_depth))
                truncated = True
            else:
                out.append(phi.body)
        else:
            out.append(phi)
    return out, truncated


def _realizes(ev: Evaluator, sigma: PartialType, formulas, truncated: bool, tup: Sequence[str]) -> Verdict:
    if len(tup) != len(sigma.variables):
        raise ValueError(f"type has {len(sigma.variables)} variables, tuple has {len(tup)} points")
    env = dict(zip(sigma.variables, tup))
    verdict = Verdict.all_of(verdict_of(ev.evaluate(phi, env)) for phi in formulas)
    if truncated and verdict is Verdict.YES:
        return Verdict.UNKNOWN
    return verdict


def realizes(m: MetricStructure, sigma: PartialType, tup: Sequence[str], cfg: EvalConfig | None = None) -> Verdict:
    cfg = cfg or EvalConfig()
    formulas, truncated = members(sigma, cfg)
    return _realizes(Evaluator(m, cfg), sigma, formulas, truncated, tup)


def realizations(m: MetricStructure, sigma: PartialType, cfg: EvalConfig | None = None):
    """Every tuple of ``m`` with its realization verdict, in lexicographic order."""
    cfg = cfg or EvalConfig()
    formulas, truncated = members(sigma, cfg)
    ev = Evaluator(m, cfg)
    return [(tup, _realizes(ev, sigma, formulas, truncated, tup)) for tup in m.tuples(len(sigma.variables))]


def omits(m: MetricStructure, sigma: PartialType, cfg: EvalConfig | None = None) -> Verdict:
    verdicts = [v for _, v in realizations(m, sigma, cfg)]
    if any(v is Verdict.YES for v in verdicts):
        return Verdict.NO
    if any(v is Verdict.UNKNOWN for v in verdicts):
        return Verdict.UNKNOWN
    return Verdict.YES


# --------------------------------------------------------------------------
# thickening


def thicken_formula(phi: sx.Formula, variables: Sequence[str], delta: Fraction) -> sx.Formula:
    """``sup_y1 ... sup_yn ((d(x1,y1) <= delta ∧ ... ∧ d(xn,yn) <= delta) ∧ phi(y))``."""
    if not variables:
        return phi
    used = set(sx.all_variables(phi)) | set(variables)
    fresh = []
    for k, _ in enumerate(variables):
        base = "y" if len(variables) == 1 else f"y{k + 1}"
        name = sx.fresh_name(base, used)
        used.add(name)
        fresh.append(name)
    body = sx.substitute_many(phi, {x: sx.Var(y) for x, y in zip(variables, fresh)})
    near = sx.big_and(sx.leq(sx.Dist(sx.Var(x), sx.Var(y)), delta) for x, y in zip(variables, fresh))
    out = sx.and_(near, body)
    for y in reversed(fresh):
        out = sx.Sup(y, out)
    return out


def thicken(sigma: PartialType, delta) -> PartialType:
    delta = Fraction(delta)
    if not 0 < delta < 1:
        raise ValueError("thickening radius must lie in (0, 1)")
    new = []
    for phi in sigma.formulas:
        if isinstance(phi, MemberSchema):
            new.append(MemberSchema(phi.var, thicken_formula(phi.body, sigma.variables, delta)))
        else:
            new.append(thicken_formula(phi, sigma.variables, delta))
    return PartialType(f"{sigma.name}^{format_rational(delta)}", sigma.variables, tuple(new))


def term_instances(sigma: PartialType, variables: Sequence[str], term_tuples: Iterable[Sequence[sx.Term]]) -> list[PartialType]:
    """The types Σ(t1(y), ..., tn(y)) for each supplied term tuple.

    Omitting a type in the presence of function symbols needs these instances
    omitted as well; whether to include them is left to the caller.
    """
    out = []
    for j, tup in enumerate(term_tuples):
        if len(tup) != len(sigma.variables):
            raise ValueError("term tuple length does not match the type")
        mapping = dict(zip(sigma.variables, tup))
        new = []
        for phi in sigma.formulas:
            if isinstance(phi, MemberSchema):
                new.append(MemberSchema(phi.var, sx.substitute_many(phi.body, mapping)))
            else:
                new.append(sx.substitute_many(phi, mapping))
        out.append(PartialType(f"{sigma.name}[{j}]", tuple(variables), tuple(new)))
    return out


# --------------------------------------------------------------------------
# principality


@dataclass
class TripleResult:
    formula: int
    terms: int
    threshold: Fraction
    status: str  # accepted | rejected | unknown
    satisfiable: Verdict
    sat_witness: tuple | None = None       # (structure index, tuple)
    counterexample: tuple | None = None    # (structure index, tuple, reason)

    def as_dict(self) -> dict:
        return {
            "formula": self.formula,
            "terms": self.terms,
            "threshold": format_rational(self.threshold),
            "status": self.status,
            "satisfiable": str(self.satisfiable),
            "sat_witness": None if self.sat_witness is None else [self.sat_witness[0], list(self.sat_witness[1])],
            "counterexample": None if self.counterexample is None
            else [self.counterexample[0], list(self.counterexample[1]), self.counterexample[2]],
        }


@dataclass
class PrincipalityReport:
    verdict: str  # principal | not_principal | unknown
    witness: TripleResult | None
    triples: list[TripleResult]
    is_type: bool
    relative_to: str = "pool and registry"
    notes: list[str] = field(default_factory=list)

    @property
    def vacuous(self) -> bool:
        return not self.is_type

    def as_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "relative_to": self.relative_to,
            "witness": None if self.witness is None else self.witness.as_dict(),
            "is_type": self.is_type,
            "notes": list(self.notes),
            "triples": [t.as_dict() for t in self.triples],
        }


def _premise_sat(iv, strict: str) -> Verdict:
    if strict == "eq1":
        return verdict_of(iv)
    if iv.lo > 0:
        return Verdict.YES
    if iv.hi == 0:
        return Verdict.NO
    return Verdict.UNKNOWN


def is_type_of(theory: Theory, sigma: PartialType, registry: Sequence[MetricStructure], cfg: EvalConfig | None = None) -> bool:
    """Is Σ realized in some registry structure that is definitely a model of T?"""
    for m in registry:
        if models(m, theory, cfg) is Verdict.YES:
            if any(v is Verdict.YES for _, v in realizations(m, sigma, cfg)):
                return True
    return False


def principal_over(theory: Theory, sigma: PartialType, pool: WitnessPool, registry: Sequence[MetricStructure],
                   cfg: EvalConfig | None = None, strict: str = "eq1") -> PrincipalityReport:
    """Search ``pool`` for a (φ, t̄, r) making Σ principal over T inside ``registry``.

    A triple is accepted when some definite model of T has a tuple b̄ with
    φ(b̄) satisfied (value 1, or value > 0 with ``strict="gt0"``), and every
    possible model of T has ``realizes(Σ, t̄(b̄)) = Yes`` wherever φ(b̄) >= r
    might hold. Anything short of all-Yes evidence blocks acceptance.
    """
    if not registry:
        raise ValueError("principality needs a non-empty registry")
    if strict not in ("eq1", "gt0"):
        raise ValueError("strict must be 'eq1' or 'gt0'")
    cfg = cfg or EvalConfig()
    n = len(pool.variables)
    term_tuples = pool.term_tuples(len(sigma.variables))
    model_verdicts = [models(m, theory, cfg) for m in registry]
    evaluators = [Evaluator(m, cfg) for m in registry]
    sigma_members, truncated = members(sigma, cfg)
    # per structure: [(b, value of each pool formula at b)]
    candidates = []
    for i, m in enumerate(registry):
        if model_verdicts[i] is Verdict.NO:
            continue
        for b in m.tuples(n):
            env = dict(zip(pool.variables, b))
            candidates.append((i, b, env, [evaluators[i].evaluate(phi, env) for phi in pool.formulas]))
    realize_cache: dict = {}

    def realized(i, image):
        key = (i, image)
        if key not in realize_cache:
            realize_cache[key] = _realizes(evaluators[i], sigma, sigma_members, truncated, image)
        return realize_cache[key]

    triples = []
    for fi, _phi in enumerate(pool.formulas):
        sat, sat_witness = Verdict.NO, None
        for i, b, _env, values in candidates:
            v = _premise_sat(values[fi], strict)
            if v is Verdict.YES and model_verdicts[i] is Verdict.YES:
                sat, sat_witness = Verdict.YES, (i, b)
                break
            if v is not Verdict.NO:
                sat = Verdict.UNKNOWN
        for ti, tup in enumerate(term_tuples):
            for r in pool.thresholds:
                definite = unknown = None
                for i, b, env, values in candidates:
                    iv = values[fi]
                    if iv.hi < r:
                        continue
                    image = tuple(eval_term(registry[i], t, env) for t in tup)
                    rv = realized(i, image)
                    if rv is Verdict.YES:
                        continue
                    if rv is Verdict.NO and iv.lo >= r and model_verdicts[i] is Verdict.YES:
                        definite = (i, b, f"phi = {format_rational(iv.lo)} >= {format_rational(r)} "
                                          f"but the type fails at t(b) = ({', '.join(image)})")
                        break
                    if unknown is None:
                        unknown = (i, b, f"phi in [{format_rational(iv.lo)}, {format_rational(iv.hi)}] may reach "
                                         f"{format_rational(r)}; the type at t(b) = ({', '.join(image)}) is {rv}")
                if sat is Verdict.NO:
                    status, cex = "rejected", definite or (None, (), "phi is not satisfiable with T in the registry")
                elif definite is not None:
                    status, cex = "rejected", definite
                elif sat is Verdict.YES and unknown is None:
                    status, cex = "accepted", None
                else:
                    status, cex = "unknown", unknown
                triples.append(TripleResult(fi, ti, r, status, sat, sat_witness, cex))

    accepted = next((t for t in triples if t.status == "accepted"), None)
    if accepted is not None:
        verdict = "principal"
    elif all(t.status == "rejected" for t in triples):
        verdict = "not_principal"
    else:
        verdict = "unknown"
    is_type = is_type_of(theory, sigma, registry, cfg)
    notes = []
    if not is_type:
        notes.append("vacuously principal: the type is not a type of T over this registry")
    if not triples:
        notes.append("empty witness pool")
    return PrincipalityReport(verdict, accepted, triples, is_type, notes=notes)


@dataclass
class MetricPrincipalityReport:
    verdict: str  # metrically_principal | not_metrically_principal | unknown
    per_delta: list[tuple[Fraction, PrincipalityReport]]
    failing_delta: Fraction | None = None
    notes: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "relative_to": "pool, registry and delta grid",
            "failing_delta": None if self.failing_delta is None else format_rational(self.failing_delta),
            "notes": list(self.notes),
            "per_delta": [{"delta": format_rational(d), **rep.as_dict()} for d, rep in self.per_delta],
        }


def metrically_principal_over(theory: Theory, sigma: PartialType, pool: WitnessPool,
                              registry: Sequence[MetricStructure], deltas: Iterable,
                              cfg: EvalConfig | None = None, strict: str = "eq1") -> MetricPrincipalityReport:
    """Principality of every thickening Σ^δ over the supplied grid of δ values."""
    if not registry:
        raise ValueError("principality needs a non-empty registry")
    deltas = [Fraction(d) for d in deltas]
    if not deltas:
        return MetricPrincipalityReport("metrically_principal", [], None,
                                        ["empty delta grid: vacuously metrically principal"])
    per = [(d, principal_over(theory, thicken(sigma, d), pool, registry, cfg, strict)) for d in deltas]
    failing = next((d for d, rep in per if rep.verdict == "not_principal"), None)
    if failing is not None:
        verdict = "not_metrically_principal"
    elif all(rep.verdict == "principal" for _, rep in per):
        verdict = "metrically_principal"
    else:
        verdict = "unknown"
    return MetricPrincipalityReport(verdict, per, failing, ["finite delta grid only"])


# --------------------------------------------------------------------------
# searching for an omitting model


@dataclass
class OmitRow:
    index: int
    models: Verdict
    omits: list[Verdict]
    realizing: list[list[tuple]]  # per type: tuples with realizes = Yes

    def as_dict(self) -> dict:
        return {
            "index": self.index,
            "models": str(self.models),
            "omits": [str(v) for v in self.omits],
            "realizing": [[list(t) for t in ts] for ts in self.realizing],
        }


@dataclass
class OmitSearchResult:
    found: int | None
    rows: list[OmitRow]

    def as_dict(self) -> dict:
        return {"found": self.found, "rows": [r.as_dict() for r in self.rows]}


def omit_search(theory: Theory, types: Sequence[PartialType], registry: Sequence[MetricStructure],
                cfg: EvalConfig | None = None) -> OmitSearchResult:
    """First registry structure that is a model of T and omits every type, scanning in order."""
    rows = []
    for i, m in enumerate(registry):
        mv = models(m, theory, cfg)
        if mv is not Verdict.YES:
            rows.append(OmitRow(i, mv, [], []))
            continue
        verdicts, realizing = [], []
        for sigma in types:
            rs = realizations(m, sigma, cfg)
            realizing.append([t for t, v in rs if v is Verdict.YES])
            verdicts.append(omits(m, sigma, cfg))
        rows.append(OmitRow(i, mv, verdicts, realizing))
        if all(v is Verdict.YES for v in verdicts):
            return OmitSearchResult(i, rows)
    return OmitSearchResult(None, rows)
