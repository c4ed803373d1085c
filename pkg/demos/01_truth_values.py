"""Truth values in a two-point structure.

Walks through exact evaluation of a few formulas, the derived connectives,
the half-function approximation and what truncation does to a countable
supremum. Run with ``python3 demos/01_truth_values.py``.
"""
from fractions import Fraction
from pathlib import Path

from metrilog import EvalConfig, evaluate, parse_formula, parse_structure, satisfies
from metrilog import syntax as sx
from metrilog.cli import corpus_structure_text

DATA = Path(__file__).parent / "data"


def show(label, iv):
    print(f"  {label:<38} {iv}")


def main():
    m = parse_structure((DATA / "M.mstr").read_text(), resolve=lambda p: (DATA / p).read_text())
    print(f"Structure {m.name}: points {', '.join(m.points)}, d(a, b) = {m.d('a', 'b')}")
    print("P(a) = 1/4 and P(b) = 3/4.\n")

    print("Atomic values and quantifiers are exact on a finite structure:")
    for text, env in [("P(x)", {"x": "a"}), ("sup x . P(x)", {}), ("inf x . P(x)", {}),
                      ("sup x . sup y . d(x, y)", {})]:
        show(text + (f"  [x={env['x']}]" if env else ""), evaluate(m, parse_formula(text, m.signature), env))

    print("\nImplication is min(1 - a + b, 1). The other connectives are macros over it:")
    a, b = sx.Rat(Fraction(3, 10)), sx.Rat(Fraction(4, 5))
    for name, phi in [("3/10 -> 4/5", sx.Implies(a, b)), ("4/5 -> 3/10", sx.Implies(b, a)),
                      ("~3/10", sx.neg(a)), ("3/10 \\/ 4/5", sx.or_(a, b)), ("3/10 /\\ 4/5", sx.and_(a, b))]:
        show(name, evaluate(m, phi))

    print("\nHalving is not a connective, but Half_n approximates x/2 from below:")
    x = Fraction(1, 2)
    for n in (2, 4, 8, 64):
        v = evaluate(m, sx.half(sx.Rat(x), n)).value
        print(f"  Half_{n}(1/2) = {v}   gap to 1/4 is {Fraction(1, 4) - v}, at most 1/(2n) = {Fraction(1, 2 * n)}")

    print("\nA countable supremum is only evaluated up to a truncation depth N.")
    print("The dense-constants sentence says every point is a limit of the constants c[i].")
    mstr, msig = corpus_structure_text()
    dense = parse_structure(mstr, resolve=lambda _: msig)
    phi = parse_formula("inf x . Vee i . ~d(x, c[i])", dense.signature)
    for n in range(1, 5):
        cfg = EvalConfig(n)
        print(f"  N = {n}: {evaluate(dense, phi, None, cfg)}  verdict {satisfies(dense, phi, None, cfg)}")
    print("Point c first appears at index 2, so the verdict stays unknown until N = 3.")


if __name__ == "__main__":
    main()
