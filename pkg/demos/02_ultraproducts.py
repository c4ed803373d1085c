"""Ultraproducts that can be computed exactly.

A sequence of one-point structures with P = 0, P = 1/2 and then P = 1
forever. A principal ultrafilter projects onto one coordinate, while any
non-principal ultrafilter sees only the constant tail. In both cases a
sentence has the same value in the ultraproduct as the ultrafilter limit of
its values in the factors.
"""
from pathlib import Path

from metrilog import FRECHET, NotComputable, Principal, StructureSequence, check_claim3, parse_formula, \
    parse_structure, ultraproduct
from metrilog.ultraproduct import verify_isomorphism, well_formedness

DATA = Path(__file__).parent / "data"


def load(name):
    return parse_structure((DATA / name).read_text(), resolve=lambda p: (DATA / p).read_text())


def main():
    p0, p_half, p1 = load("p0.mstr"), load("p1_2.mstr"), load("p1.mstr")
    seq = StructureSequence.eventually([p0, p_half], p1)
    sigma = parse_formula("sup x . P(x)", p0.signature)

    for spec in (Principal(0), Principal(1), Principal(5), FRECHET):
        result = ultraproduct(seq, spec)
        report = check_claim3(seq, spec, sigma)
        print(f"{spec!r:>14}: sigma in the ultraproduct = {report.ultraproduct_value}, "
              f"limit of factor values = {report.limit_value}, equal = {report.equal}")
        assert not well_formedness(result.structure) and not verify_isomorphism(result)

    print("\nWithout a tail there is nothing a non-principal ultrafilter can be computed from:")
    try:
        ultraproduct(StructureSequence.family([p0, p_half, p1]), FRECHET)
    except NotComputable as exc:
        print(f"  {exc}")


if __name__ == "__main__":
    main()
