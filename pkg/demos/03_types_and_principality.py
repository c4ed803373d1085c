"""Realizing, thickening and isolating a partial type.

The type Sigma(x) = {P(x)} asks for a point where P is exactly 1. Over the
registry of one-point structures with P in {0, 1/2, 1}, the formula P(x) with
threshold 3/4 isolates it, while constant formulas cannot.
"""
from fractions import Fraction
from pathlib import Path

from metrilog import MetricStructure, Registry, metrically_principal_over, omit_search, parse_structure, \
    principal_over, realizes, thicken
from metrilog.parser import parse_pool, parse_registry, parse_type, print_type
from metrilog.semantics import EMPTY_THEORY

DATA = Path(__file__).parent / "data"


def load(name):
    return parse_structure((DATA / name).read_text(), resolve=lambda p: (DATA / p).read_text())


def main():
    m = load("M.mstr")
    sig = m.signature
    sigma = parse_type((DATA / "sigma.mtyp").read_text(), sig)
    print(print_type(sigma))

    print("In M, P(a) = 1/4 and P(b) = 3/4, so nothing realizes Sigma exactly:")
    print(f"  {[(p, str(realizes(m, sigma, (p,)))) for p in m.points]}")

    near = MetricStructure(sig, ("a", "b"), {("a", "b"): Fraction(1, 4)},
                           predicates={"P": {"a": Fraction(1), "b": Fraction(3, 4)}}, name="near")
    print(f"\nIn '{near.name}', a realizes Sigma and b sits 1/4 away from it with P(b) = 3/4.")
    for delta in (Fraction(1, 8), Fraction(1, 4)):
        thick = thicken(sigma, delta)
        verdicts = {p: str(realizes(near, thick, (p,))) for p in near.points}
        print(f"  Sigma^{delta} asks for a realization within {delta}: {verdicts}")

    registry = Registry(load(p) for p in parse_registry((DATA / "grid.mreg").read_text()).paths)
    print(f"\nRegistry: {[s.name for s in registry]}")
    for pool_file in ("pool.mpool", "constants.mpool"):
        pool = parse_pool((DATA / pool_file).read_text(), sig)
        report = principal_over(EMPTY_THEORY, sigma, pool, registry)
        print(f"  {pool_file}: {report.verdict}")
        for t in report.triples:
            reason = "" if t.counterexample is None else f"  ({t.counterexample[2]})"
            print(f"    formula {t.formula}, threshold {t.threshold}: {t.status}{reason}")

    print("\nMetric principality needs every thickening to be principal.")
    pool = parse_pool((DATA / "pool.mpool").read_text(), sig)
    report = metrically_principal_over(EMPTY_THEORY, sigma, pool, Registry([near]),
                                       [Fraction(1, 8), Fraction(1, 4)])
    print(f"  Over '{near.name}' alone, P(x) >= 3/4 picks out b, which only realizes the 1/4 thickening.")
    print(f"  verdict {report.verdict}, first failing radius {report.failing_delta}")

    print("\nSearching the registry for a structure that omits Sigma:")
    found = omit_search(EMPTY_THEORY, [sigma], registry)
    print(f"  first omitting structure: {registry[found.found].name}")


if __name__ == "__main__":
    main()
