"""The bundled example sentences.

Each sentence is parsed, printed in canonical form and parsed again to check
that printing reaches a fixed point. The schemas use indexed constant
families, so ``Vee i`` and ``Wedge i`` range over all natural numbers.
"""
from metrilog.cli import corpus_entries
from metrilog.parser import parse_formula, parse_signature, print_formula
from metrilog.syntax import size


def main():
    for name, text, sig_text in corpus_entries():
        sig = parse_signature(sig_text)
        phi = parse_formula(text, sig)
        printed = print_formula(phi)
        fixed = print_formula(parse_formula(printed, sig)) == printed
        print(f"{name}  ({size(phi)} nodes, fixed point: {fixed})")
        print(f"  {printed}\n")


if __name__ == "__main__":
    main()
