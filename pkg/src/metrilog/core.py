"""Exact truth values, signatures, moduli of continuity and finite metric structures."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

ZERO = Fraction(0)
ONE = Fraction(1)
HALF = Fraction(1, 2)


def unit(value) -> Fraction:
    """Coerce ``value`` to an exact rational in [0, 1].

    Floats are refused: they cannot decide whether a value is exactly 1.
    """
    if isinstance(value, float):
        raise TypeError(f"refusing float {value!r}; use an exact rational")
    q = Fraction(value)
    if not ZERO <= q <= ONE:
        raise ValueError(f"{q} is outside [0, 1]")
    return q


def format_rational(q: Fraction) -> str:
    q = Fraction(q)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


# --------------------------------------------------------------------------
# moduli of continuity


@dataclass(frozen=True)
class Modulus:
    """A finitely presented modulus of uniform continuity ``eps -> delta(eps)``.

    ``kind`` is one of ``identity``, ``linear`` (``param`` is the Lipschitz
    constant k >= 1, delta = eps / k), ``constant`` (delta = ``param``) or
    ``table`` (``table`` holds strictly increasing ``(eps, delta)`` samples).
    """

    kind: str = "identity"
    param: Fraction | None = None
    table: tuple[tuple[Fraction, Fraction], ...] = ()

    def __post_init__(self):
        if self.kind == "identity":
            if self.param is not None or self.table:
                raise ValueError("identity modulus takes no parameters")
        elif self.kind == "linear":
            k = Fraction(self.param)
            if k < 1:
                raise ValueError("linear modulus needs slope k >= 1")
            object.__setattr__(self, "param", k)
        elif self.kind == "constant":
            c = Fraction(self.param)
            if not ZERO < c < ONE:
                raise ValueError("constant modulus value must lie in (0, 1)")
            object.__setattr__(self, "param", c)
        elif self.kind == "table":
            pairs = tuple((Fraction(e), Fraction(d)) for e, d in self.table)
            if not pairs:
                raise ValueError("table modulus needs at least one sample")
            for e, d in pairs:
                if not (ZERO < e < ONE and ZERO < d < ONE):
                    raise ValueError("table samples must lie in (0, 1)")
            for (e0, d0), (e1, d1) in zip(pairs, pairs[1:]):
                if e1 <= e0:
                    raise ValueError("table samples must be strictly increasing in eps")
                if d1 < d0:
                    raise ValueError("table delta values must be nondecreasing")
            object.__setattr__(self, "table", pairs)
        else:
            raise ValueError(f"unknown modulus kind {self.kind!r}")

    @classmethod
    def identity(cls) -> Modulus:
        return cls("identity")

    @classmethod
    def linear(cls, k) -> Modulus:
        return cls("linear", Fraction(k))

    @classmethod
    def constant(cls, c) -> Modulus:
        return cls("constant", Fraction(c))

    @classmethod
    def from_table(cls, pairs: Iterable[tuple]) -> Modulus:
        return cls("table", None, tuple(pairs))

    def __call__(self, eps) -> Fraction:
        eps = Fraction(eps)
        if not ZERO < eps < ONE:
            raise ValueError("modulus is defined on (0, 1) only")
        if self.kind == "identity":
            return eps
        if self.kind == "linear":
            return eps / self.param
        if self.kind == "constant":
            return self.param
        first_eps, first_delta = self.table[0]
        if eps < first_eps:
            return first_delta * eps / first_eps
        delta = first_delta
        for e, d in self.table:
            if e <= eps:
                delta = d
            else:
                break
        return delta

    def breakpoints(self, values: Iterable[Fraction]) -> set[Fraction]:
        """Arguments where ``delta(eps)`` crosses one of ``values`` or changes piece."""
        points: set[Fraction] = set()
        if self.kind == "table":
            points.update(e for e, _ in self.table)
            e0, d0 = self.table[0]
            points.update(v * e0 / d0 for v in values)
        elif self.kind == "identity":
            points.update(values)
        elif self.kind == "linear":
            points.update(v * self.param for v in values)
        return {p for p in points if ZERO < p < ONE}

    def describe(self) -> str:
        if self.kind == "identity":
            return "identity"
        if self.kind in ("linear", "constant"):
            return f"{self.kind} {format_rational(self.param)}"
        samples = " ".join(f"{format_rational(e)}:{format_rational(d)}" for e, d in self.table)
        return f"table {samples}"


# --------------------------------------------------------------------------
# signatures


@dataclass(frozen=True)
class FunctionSymbol:
    name: str
    arity: int
    modulus: Modulus = field(default_factory=Modulus.identity)


@dataclass(frozen=True)
class PredicateSymbol:
    name: str
    arity: int
    modulus: Modulus = field(default_factory=Modulus.identity)


RESERVED = frozenset({"d", "sup", "inf", "Vee", "Wedge", "Disc", "Half", "eq", "rat", "each"})


@dataclass(frozen=True)
class Signature:
    functions: tuple[FunctionSymbol, ...] = ()
    predicates: tuple[PredicateSymbol, ...] = ()
    constants: tuple[str, ...] = ()
    families: tuple[str, ...] = ()

    def __post_init__(self):
        for attr in ("functions", "predicates", "constants", "families"):
            object.__setattr__(self, attr, tuple(getattr(self, attr)))
        names = [s.name for s in self.functions] + [s.name for s in self.predicates]
        names += list(self.constants) + list(self.families)
        seen = set()
        for name in names:
            if name in seen:
                raise ValueError(f"symbol {name!r} declared twice")
            if name in RESERVED:
                raise ValueError(f"symbol name {name!r} is reserved")
            seen.add(name)
        for sym in self.functions + self.predicates:
            if sym.arity < 1:
                raise ValueError(f"symbol {sym.name!r} needs arity >= 1")

    def function(self, name: str) -> FunctionSymbol | None:
        return next((s for s in self.functions if s.name == name), None)

    def predicate(self, name: str) -> PredicateSymbol | None:
        return next((s for s in self.predicates if s.name == name), None)

    def kind_of(self, name: str) -> str | None:
        if self.function(name):
            return "function"
        if self.predicate(name):
            return "predicate"
        if name in self.constants:
            return "constant"
        if name in self.families:
            return "family"
        return None


# --------------------------------------------------------------------------
# structures


@dataclass(frozen=True)
class FamilyInterp:
    """Total map i -> point given by a finite prefix and an eventually repeated tail."""

    prefix: tuple[str, ...]
    tail: str

    def __getitem__(self, i: int) -> str:
        if i < 0:
            raise IndexError("family index must be a natural number")
        return self.prefix[i] if i < len(self.prefix) else self.tail

    def points(self) -> set[str]:
        return set(self.prefix) | {self.tail}


Point = str
Tuple = tuple


@dataclass(frozen=True, eq=False)
class MetricStructure:
    """A finite metric structure; treat every field as read-only.

    ``metric`` maps ordered point pairs to distances. Missing diagonal entries
    default to 0; any other missing pair is an error.
    """

    signature: Signature
    points: tuple[Point, ...]
    metric: Mapping[tuple[Point, Point], Fraction]
    functions: Mapping[str, Mapping[tuple, Point]] = field(default_factory=dict)
    predicates: Mapping[str, Mapping[tuple, Fraction]] = field(default_factory=dict)
    constants: Mapping[str, Point] = field(default_factory=dict)
    families: Mapping[str, FamilyInterp] = field(default_factory=dict)
    name: str = "M"

    def __post_init__(self):
        pts = tuple(self.points)
        if not pts:
            raise ValueError("a structure needs at least one point")
        if len(set(pts)) != len(pts):
            raise ValueError("duplicate point names")
        object.__setattr__(self, "points", pts)
        pset = set(pts)
        metric = {}
        for a in pts:
            for b in pts:
                if (a, b) in self.metric:
                    metric[a, b] = unit(self.metric[a, b])
                elif (b, a) in self.metric:
                    metric[a, b] = unit(self.metric[b, a])
                elif a == b:
                    metric[a, b] = ZERO
                else:
                    raise ValueError(f"metric undefined on ({a}, {b})")
        extra = set(self.metric) - set(metric)
        if extra:
            raise ValueError(f"metric mentions unknown points: {sorted(extra)}")
        object.__setattr__(self, "metric", metric)

        sig = self.signature
        funcs = {}
        for sym in sig.functions:
            table = self.functions.get(sym.name)
            if table is None:
                raise ValueError(f"function {sym.name} is not interpreted")
            funcs[sym.name] = _total_table(sym.name, sym.arity, pts, table, lambda v: _point(v, pset))
        preds = {}
        for sym in sig.predicates:
            table = self.predicates.get(sym.name)
            if table is None:
                raise ValueError(f"predicate {sym.name} is not interpreted")
            preds[sym.name] = _total_table(sym.name, sym.arity, pts, table, unit)
        consts = {}
        for c in sig.constants:
            if c not in self.constants:
                raise ValueError(f"constant {c} is not interpreted")
            consts[c] = _point(self.constants[c], pset)
        fams = {}
        for fam in sig.families:
            interp = self.families.get(fam)
            if interp is None:
                raise ValueError(f"family {fam} is not interpreted")
            if not isinstance(interp, FamilyInterp):
                prefix, tail = interp
                interp = FamilyInterp(tuple(prefix), tail)
            for p in interp.points():
                _point(p, pset)
            fams[fam] = interp
        known = {s.name for s in sig.functions} | {s.name for s in sig.predicates}
        known |= set(sig.constants) | set(sig.families)
        stray = (set(self.functions) | set(self.predicates) | set(self.constants) | set(self.families)) - known
        if stray:
            raise ValueError(f"interpretations for undeclared symbols: {sorted(stray)}")
        object.__setattr__(self, "functions", funcs)
        object.__setattr__(self, "predicates", preds)
        object.__setattr__(self, "constants", consts)
        object.__setattr__(self, "families", fams)

    def d(self, a: Point, b: Point) -> Fraction:
        return self.metric[a, b]

    def tuples(self, n: int):
        return itertools.product(self.points, repeat=n)

    def __eq__(self, other):
        if not isinstance(other, MetricStructure):
            return NotImplemented
        return (
            self.signature == other.signature
            and self.points == other.points
            and self.metric == other.metric
            and self.functions == other.functions
            and self.predicates == other.predicates
            and self.constants == other.constants
            and self.families == other.families
        )

    __hash__ = None

    def __repr__(self):
        return f"<MetricStructure {self.name} on {len(self.points)} points>"


def _point(value, pset) -> Point:
    if value not in pset:
        raise ValueError(f"unknown point {value!r}")
    return value


def _total_table(name, arity, pts, table, convert):
    out = {}
    for args in itertools.product(pts, repeat=arity):
        key = args
        if key not in table and arity == 1 and args[0] in table:
            key = args[0]
        if key not in table:
            raise ValueError(f"{name} undefined at ({', '.join(args)})")
        out[args] = convert(table[key])
    extra = {k if isinstance(k, tuple) else (k,) for k in table} - set(out)
    if extra:
        raise ValueError(f"{name} interpreted at unknown arguments {sorted(extra)}")
    return out


Assignment = Mapping[str, Point]


# --------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class MetricViolation:
    axiom: str  # reflexivity | symmetry | triangle | bound
    points: tuple[Point, ...]
    detail: str


@dataclass
class MetricReport:
    violations: list[MetricViolation] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def as_dict(self) -> dict:
        return {
            "ok": self.ok,
            "violations": [
                {"axiom": v.axiom, "points": list(v.points), "detail": v.detail} for v in self.violations
            ],
            "warnings": list(self.warnings),
        }


def validate_metric(structure: MetricStructure) -> MetricReport:
    """List every failure of the metric axioms, with witnessing points.

    Distinct points at distance 0 are legal here and only produce a warning.
    """
    report = MetricReport()
    d = structure.metric
    pts = structure.points
    for a in pts:
        if d[a, a] != 0:
            report.violations.append(
                MetricViolation("reflexivity", (a,), f"d({a},{a}) = {format_rational(d[a, a])}")
            )
    for a, b in itertools.combinations(pts, 2):
        if d[a, b] != d[b, a]:
            report.violations.append(
                MetricViolation(
                    "symmetry", (a, b),
                    f"d({a},{b}) = {format_rational(d[a, b])} but d({b},{a}) = {format_rational(d[b, a])}",
                )
            )
        if d[a, b] == 0 and d[b, a] == 0:
            report.warnings.append(f"distinct points {a} and {b} are at distance 0 (pseudometric)")
    for a, b, c in itertools.product(pts, repeat=3):
        if d[a, c] > d[a, b] + d[b, c]:
            report.violations.append(
                MetricViolation(
                    "triangle", (a, b, c),
                    f"d({a},{c}) = {format_rational(d[a, c])} > "
                    f"d({a},{b}) + d({b},{c}) = {format_rational(d[a, b] + d[b, c])}",
                )
            )
    for (a, b), v in d.items():
        if v > 1 or v < 0:
            report.violations.append(MetricViolation("bound", (a, b), f"d({a},{b}) = {v}"))
    return report


def product_metric(structure: MetricStructure, left: Sequence[Point], right: Sequence[Point]) -> Fraction:
    if len(left) != len(right):
        raise ValueError(f"tuple lengths differ ({len(left)} vs {len(right)})")
    if not left:
        raise ValueError("product metric needs tuples of positive length")
    return max(structure.metric[a, b] for a, b in zip(left, right))


@dataclass(frozen=True)
class ModulusCounterexample:
    left: tuple[Point, ...]
    right: tuple[Point, ...]
    eps: Fraction
    distance: Fraction
    gap: Fraction


def _output_gaps(structure: MetricStructure, symbol: str):
    sig = structure.signature
    if sig.function(symbol):
        sym = sig.function(symbol)
        table = structure.functions[symbol]

        def gap(x, y):
            return structure.metric[table[x], table[y]]
    elif sig.predicate(symbol):
        sym = sig.predicate(symbol)
        table = structure.predicates[symbol]

        def gap(x, y):
            return abs(table[x] - table[y])
    else:
        raise KeyError(f"{symbol!r} is not a function or predicate symbol")
    return sym, gap


def modulus_test_grid(structure: MetricStructure, modulus: Modulus, gaps: Iterable[Fraction]) -> list[Fraction]:
    """Finite set of eps values at which checking a modulus on ``structure`` is exhaustive.

    Between consecutive breakpoints neither side of the modulus implication
    changes truth value, so breakpoints plus midpoints cover every case. The
    dyadic sixteenths are added as a fixed, human-readable probe set.
    """
    distances = set(structure.metric.values())
    gaps = set(gaps)
    marks = {v for v in distances | gaps if ZERO < v < ONE}
    if modulus.kind == "table":
        marks.update(e for e, _ in modulus.table)
    marks |= modulus.breakpoints(distances)
    marks.update(Fraction(k, 16) for k in range(1, 16))
    ordered = sorted({ZERO, ONE} | marks)
    grid = set(marks)
    grid.update((lo + hi) / 2 for lo, hi in zip(ordered, ordered[1:]))
    return sorted(g for g in grid if ZERO < g < ONE)


def check_modulus(structure: MetricStructure, symbol: str, modulus: Modulus | None = None) -> list[ModulusCounterexample]:
    """Exhaustively test the declared modulus of ``symbol`` on ``structure``.

    Returns one counterexample per (unordered tuple pair, eps) at which
    ``sup d(a_i, b_i) < delta(eps)`` holds but the output moves by more than eps.
    """
    sym, gap = _output_gaps(structure, symbol)
    modulus = modulus or sym.modulus
    tuples = list(structure.tuples(sym.arity))
    pairs = []
    for x, y in itertools.combinations(tuples, 2):
        pairs.append((x, y, product_metric(structure, x, y), gap(x, y)))
    grid = modulus_test_grid(structure, modulus, (g for *_, g in pairs))
    out = []
    for eps in grid:
        delta = modulus(eps)
        for x, y, dist, g in pairs:
            if dist < delta and g > eps:
                out.append(ModulusCounterexample(x, y, eps, dist, g))
    return out


def check_metric_modulus(structure: MetricStructure, modulus: Modulus) -> list[ModulusCounterexample]:
    """Test ``modulus`` for the metric itself, viewed as a binary predicate."""
    pairs = []
    tuples = list(structure.tuples(2))
    for x, y in itertools.combinations(tuples, 2):
        g = abs(structure.metric[x] - structure.metric[y])
        pairs.append((x, y, product_metric(structure, x, y), g))
    grid = modulus_test_grid(structure, modulus, (g for *_, g in pairs))
    out = []
    for eps in grid:
        delta = modulus(eps)
        for x, y, dist, g in pairs:
            if dist < delta and g > eps:
                out.append(ModulusCounterexample(x, y, eps, dist, g))
    return out


def check_all_moduli(structure: MetricStructure) -> dict[str, list[ModulusCounterexample]]:
    sig = structure.signature
    return {s.name: check_modulus(structure, s.name) for s in sig.functions + sig.predicates}


def is_discrete(structure: MetricStructure) -> bool:
    if any(v not in (ZERO, ONE) for v in structure.metric.values()):
        return False
    return all(v in (ZERO, ONE) for table in structure.predicates.values() for v in table.values())
