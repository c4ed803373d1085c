"""Command-line interface: ``metrilog VERB FILES... [flags]``.

Exit status: 0 definite success or Yes, 1 definite No or violation,
2 Unknown (truncation or a non-computable request), 3 usage or parse error.
Reports are deterministic; ``--json`` switches every verb to sorted JSON.
"""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from importlib import resources
from pathlib import Path

from . import parser as P
from .core import check_all_moduli, format_rational, validate_metric
from .omitting import (
    metrically_principal_over,
    omit_search,
    omits,
    principal_over,
    realizations,
    realizes,
    thicken,
)
from .semantics import (
    EvalConfig,
    EvaluationError,
    Registry,
    Verdict,
    compare_L,
    evaluate,
    mod_interval,
    models,
    verdict_of,
)
from .ultraproduct import (
    FRECHET,
    NotComputable,
    Principal,
    StructureSequence,
    check_claim3,
    ultraproduct,
    verify_isomorphism,
    well_formedness,
)

EXIT_YES, EXIT_NO, EXIT_UNKNOWN, EXIT_USAGE = 0, 1, 2, 3
_VERDICT_EXIT = {Verdict.YES: EXIT_YES, Verdict.NO: EXIT_NO, Verdict.UNKNOWN: EXIT_UNKNOWN}


class UsageError(Exception):
    pass


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# --------------------------------------------------------------------------
# argument helpers


def _rational(text: str) -> Fraction:
    try:
        q = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational: {text!r}") from None
    if not 0 <= q <= 1:
        raise argparse.ArgumentTypeError(f"{text} is outside [0, 1]")
    return q


def _rational_list(text: str) -> list[Fraction]:
    return [_rational(t) for t in text.replace(",", " ").split()]


def _ultra(text: str):
    if text == "frechet":
        return FRECHET
    head, _, k = text.partition(":")
    if head == "principal" and k.isdigit():
        return Principal(int(k))
    raise argparse.ArgumentTypeError("expected 'principal:K' or 'frechet'")


def _assignment(text: str) -> dict[str, str]:
    out = {}
    for item in filter(None, (s.strip() for s in text.split(","))):
        var, eq, point = item.partition("=")
        if not eq or not var.strip() or not point.strip():
            raise argparse.ArgumentTypeError(f"bad assignment entry {item!r}; expected x=point")
        out[var.strip()] = point.strip()
    return out


def _emit(args, data: dict, text: str) -> None:
    if args.json:
        sys.stdout.write(json.dumps(data, indent=2, sort_keys=True) + "\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _registry(args) -> list:
    if not args.registry:
        raise UsageError("this verb needs --registry PATH")
    members, tail = P.load_registry(args.registry)
    return list(Registry(members + ([tail] if tail is not None else [])))


def _sequence(path) -> StructureSequence:
    members, tail = P.load_registry(path)
    return StructureSequence(tuple(members), tail)


# --------------------------------------------------------------------------
# verbs

_LOADERS = {
    ".msig": ("signature", P.load_signature, P.print_signature),
    ".mstr": ("structure", P.load_structure, P.print_structure),
    ".mfla": ("formula", None, P.print_formula),
    ".mthy": ("theory", None, P.print_theory),
    ".mtyp": ("type", None, P.print_type),
    ".mpool": ("pool", None, P.print_pool),
}


def cmd_parse(args, cfg):
    path = Path(args.file)
    sig = P.load_signature(args.signature) if args.signature else None
    if path.suffix == ".mreg":
        doc = P.parse_registry(path.read_text(encoding="utf-8"), source=str(path))
        text = "\n".join(doc.paths + ([f"tail {doc.tail}"] if doc.tail else [])) + "\n"
        _emit(args, {"kind": "registry", "paths": doc.paths, "tail": doc.tail}, text)
        return EXIT_YES
    if path.suffix not in _LOADERS:
        raise UsageError(f"unknown file kind {path.suffix!r}")
    kind, loader, printer = _LOADERS[path.suffix]
    if loader is None:
        loader = {"formula": P.load_formula, "theory": P.load_theory,
                  "type": P.load_type, "pool": P.load_pool}[kind]
        obj = loader(path, sig)
    else:
        obj = loader(path)
    text = printer(obj)
    data = {"kind": kind, "text": text}
    if kind == "formula":
        data["ast"] = P.formula_to_json(obj)
    _emit(args, data, text)
    return EXIT_YES


def cmd_validate(args, cfg):
    m = P.load_structure(args.structure)
    report = validate_metric(m)
    moduli = check_all_moduli(m)
    lines = [f"structure {m.name}: metric {'ok' if report.ok else 'violated'}"]
    lines += [f"  violation {v.axiom}: {v.detail}" for v in report.violations]
    lines += [f"  warning: {w}" for w in report.warnings]
    bad = False
    mod_data = {}
    for sym, cex in moduli.items():
        desc = (m.signature.function(sym) or m.signature.predicate(sym)).modulus.describe()
        lines.append(f"modulus {sym} ({desc}): {'ok' if not cex else f'{len(cex)} counterexample(s)'}")
        for c in cex[:5]:
            lines.append(f"  {c.left} vs {c.right}: eps={format_rational(c.eps)} "
                         f"distance={format_rational(c.distance)} gap={format_rational(c.gap)}")
        bad = bad or bool(cex)
        mod_data[sym] = {"modulus": desc, "counterexamples": [
            {"left": list(c.left), "right": list(c.right), "eps": format_rational(c.eps),
             "distance": format_rational(c.distance), "gap": format_rational(c.gap)} for c in cex]}
    _emit(args, {"metric": report.as_dict(), "moduli": mod_data}, "\n".join(lines))
    return EXIT_NO if bad or not report.ok else EXIT_YES


def _structure_and_formula(args):
    m = P.load_structure(args.structure)
    phi = P.load_formula(args.formula, m.signature)
    return m, phi


def cmd_eval(args, cfg):
    m, phi = _structure_and_formula(args)
    iv = evaluate(m, phi, args.assignment, cfg)
    _emit(args, iv.as_dict(), str(iv))
    return EXIT_YES


def cmd_sat(args, cfg):
    m, phi = _structure_and_formula(args)
    iv = evaluate(m, phi, args.assignment, cfg)
    v = verdict_of(iv)
    _emit(args, {"verdict": str(v), "value": iv.as_dict()}, f"{v} ({iv})")
    return _VERDICT_EXIT[v]


def cmd_models(args, cfg):
    m = P.load_structure(args.structure)
    theory = P.load_theory(args.theory, m.signature)
    rows = [(P.print_formula(s), evaluate(m, s, None, cfg)) for s in theory.sentences]
    v = models(m, theory, cfg)
    lines = [f"{v}"] + [f"  {verdict_of(iv)}  {iv}  {text}" for text, iv in rows]
    data = {"verdict": str(v), "sentences": [{"sentence": t, "value": iv.as_dict()} for t, iv in rows]}
    _emit(args, data, "\n".join(lines))
    return _VERDICT_EXIT[v]


def cmd_mod_interval(args, cfg):
    if args.lo is None or args.hi is None:
        raise UsageError("mod-interval needs --lo and --hi")
    reg = _registry(args)
    sigma = P.load_formula(args.formula, reg[0].signature if reg else None)
    part = mod_interval(reg, sigma, args.lo, args.hi, cfg)
    lines = [f"interval [{format_rational(args.lo)}, {format_rational(args.hi)}]"]
    for i, (m, iv) in enumerate(zip(reg, part.values)):
        where = "inside" if i in part.inside else "outside" if i in part.outside else "unknown"
        lines.append(f"  {i} {m.name}: {where} ({iv})")
    _emit(args, part.as_dict(), "\n".join(lines))
    return EXIT_UNKNOWN if part.unknown else EXIT_YES


def cmd_compare(args, cfg):
    m = P.load_structure(args.left)
    n = P.load_structure(args.right)
    pool = P.load_theory(args.pool, m.signature)
    rep = compare_L(m, n, pool.sentences, cfg)
    lines = [rep.verdict] + [f"  {e.verdict}: {e.left} | {e.right} | {P.print_formula(e.sentence)}"
                             for e in rep.entries]
    data = {"verdict": rep.verdict, "entries": [
        {"sentence": P.print_formula(e.sentence), "left": e.left.as_dict(), "right": e.right.as_dict(),
         "verdict": e.verdict} for e in rep.entries]}
    _emit(args, data, "\n".join(lines))
    return {"equal": EXIT_YES, "different": EXIT_NO, "unknown": EXIT_UNKNOWN}[rep.verdict]


def cmd_ultraproduct(args, cfg):
    result = ultraproduct(_sequence(args.sequence), args.ultra)
    problems = verify_isomorphism(result) + well_formedness(result.structure)
    text = P.print_structure(result.structure)
    text += "".join(f"# witness {u} -> {p}\n" for u, p in sorted(result.witness.items()))
    text += "".join(f"# problem: {p}\n" for p in problems)
    _emit(args, {"structure": P.print_structure(result.structure), **result.as_dict(), "problems": problems}, text)
    return EXIT_NO if problems else EXIT_YES


def cmd_claim3(args, cfg):
    seq = _sequence(args.sequence)
    sigma = P.load_formula(args.formula, seq.signature)
    rep = check_claim3(seq, args.ultra, sigma, cfg)
    text = (f"{'equal' if rep.equal else 'unequal'}: ultraproduct={format_rational(rep.ultraproduct_value)} "
            f"limit={format_rational(rep.limit_value)}")
    _emit(args, rep.as_dict(), text)
    return EXIT_YES if rep.equal else EXIT_NO


def _type_tuple(sigma, assignment):
    missing = [v for v in sigma.variables if v not in assignment]
    if missing:
        raise UsageError(f"--assignment must bind the type variables {missing}")
    return tuple(assignment[v] for v in sigma.variables)


def cmd_realizes(args, cfg):
    m = P.load_structure(args.structure)
    sigma = P.load_type(args.type, m.signature)
    tup = _type_tuple(sigma, args.assignment or {})
    v = realizes(m, sigma, tup, cfg)
    _emit(args, {"verdict": str(v), "tuple": list(tup)}, f"{v}")
    return _VERDICT_EXIT[v]


def cmd_omits(args, cfg):
    m = P.load_structure(args.structure)
    sigma = P.load_type(args.type, m.signature)
    rows = realizations(m, sigma, cfg)
    v = omits(m, sigma, cfg)
    lines = [f"{v}"] + [f"  ({', '.join(t)}): {r}" for t, r in rows]
    _emit(args, {"verdict": str(v), "tuples": [{"tuple": list(t), "realizes": str(r)} for t, r in rows]},
          "\n".join(lines))
    return _VERDICT_EXIT[v]


def cmd_thicken(args, cfg):
    if args.delta is None:
        raise UsageError("thicken needs --delta")
    sig = P.load_signature(args.signature) if args.signature else None
    out = thicken(P.load_type(args.type, sig), args.delta)
    text = P.print_type(out)
    _emit(args, {"type": text}, text)
    return EXIT_YES


def _principal_inputs(args):
    reg = _registry(args)
    sig = reg[0].signature
    return reg, P.load_theory(args.theory, sig), P.load_type(args.type, sig), P.load_pool(args.pool, sig)


def _triple_line(pool, t) -> str:
    head = (f"  formula {t.formula} [{P.print_formula(pool.formulas[t.formula])}] terms {t.terms} "
            f"r={format_rational(t.threshold)}: {t.status}")
    if t.counterexample is not None:
        i, b, why = t.counterexample
        head += f" ({why}" + (f"; structure {i}, b = ({', '.join(b)})" if i is not None else "") + ")"
    return head


def cmd_principal(args, cfg):
    reg, theory, sigma, pool = _principal_inputs(args)
    rep = principal_over(theory, sigma, pool, reg, cfg, args.strict_sat)
    lines = [f"{rep.verdict} (relative to {rep.relative_to})"]
    lines += [f"  note: {n}" for n in rep.notes]
    lines += [_triple_line(pool, t) for t in rep.triples]
    _emit(args, rep.as_dict(), "\n".join(lines))
    return {"principal": EXIT_YES, "not_principal": EXIT_NO, "unknown": EXIT_UNKNOWN}[rep.verdict]


def cmd_metrically_principal(args, cfg):
    reg, theory, sigma, pool = _principal_inputs(args)
    deltas = args.deltas if args.deltas is not None else []
    rep = metrically_principal_over(theory, sigma, pool, reg, deltas, cfg, args.strict_sat)
    lines = [rep.verdict] + [f"  note: {n}" for n in rep.notes]
    for d, r in rep.per_delta:
        lines.append(f"  delta {format_rational(d)}: {r.verdict}")
    _emit(args, rep.as_dict(), "\n".join(lines))
    return {"metrically_principal": EXIT_YES, "not_metrically_principal": EXIT_NO,
            "unknown": EXIT_UNKNOWN}[rep.verdict]


def cmd_omit_search(args, cfg):
    reg = _registry(args)
    sig = reg[0].signature
    theory = P.load_theory(args.theory, sig)
    types = [P.load_type(t, sig) for t in args.types]
    res = omit_search(theory, types, reg, cfg)
    lines = [f"found structure {res.found} ({reg[res.found].name})" if res.found is not None else "exhausted"]
    for row in res.rows:
        line = f"  {row.index} {reg[row.index].name}: models={row.models}"
        if row.omits:
            line += " omits=" + ",".join(str(v) for v in row.omits)
        for sigma, tuples in zip(types, row.realizing):
            if tuples:
                line += f" {sigma.name} realized at " + " ".join(f"({', '.join(t)})" for t in tuples)
        lines.append(line)
    _emit(args, res.as_dict(), "\n".join(lines))
    return EXIT_YES if res.found is not None else EXIT_NO


def corpus_entries():
    """(name, formula text, signature text) for each bundled example sentence."""
    root = resources.files("metrilog") / "corpus"
    out = []
    for entry in sorted(root.iterdir(), key=lambda e: e.name):
        if entry.name.endswith(".mfla"):
            stem = entry.name[: -len(".mfla")]
            out.append((stem, entry.read_text(encoding="utf-8"), (root / f"{stem}.msig").read_text(encoding="utf-8")))
    return out


def corpus_structure_text() -> tuple[str, str]:
    root = resources.files("metrilog") / "corpus"
    return (root / "dense_constants.mstr").read_text(encoding="utf-8"), (root / "dense_constants.msig").read_text(encoding="utf-8")


def cmd_corpus(args, cfg):
    rows, ok = [], True
    for name, text, sig_text in corpus_entries():
        sig = P.parse_signature(sig_text, source=f"{name}.msig")
        phi = P.parse_formula(text, sig, source=f"{name}.mfla")
        printed = P.print_formula(phi)
        fixed = P.print_formula(P.parse_formula(printed, sig)) == printed
        ok = ok and fixed
        rows.append({"name": name, "printed": printed, "fixed_point": fixed})
    mstr, msig = corpus_structure_text()
    m = P.parse_structure(mstr, source="dense_constants.mstr", resolve=lambda _: msig)
    dense = next(r for r in rows if r["name"] == "dense_constants")
    iv = evaluate(m, P.parse_formula(dense["printed"], m.signature), None, cfg)
    lines = [f"{r['name']}: {'ok' if r['fixed_point'] else 'NOT a print fixed point'}\n  {r['printed']}" for r in rows]
    lines.append(f"dense_constants on {m.name}: {iv}")
    _emit(args, {"entries": rows, "dense_constants_value": iv.as_dict()}, "\n".join(lines))
    return EXIT_YES if ok else EXIT_NO


# --------------------------------------------------------------------------
# argument parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--depth", type=int, help="truncation depth for countable suprema (default 16, or METRILOG_DEPTH)")
    common.add_argument("--json", action="store_true", help="emit a JSON report")
    common.add_argument("--registry", help="registry (.mreg) listing structure files")
    common.add_argument("--assignment", type=_assignment, help="variable assignment 'x=a,y=b'")
    common.add_argument("--strict-sat", choices=("eq1", "gt0"), default="eq1",
                        help="satisfiability of a witness formula: value 1 (default) or value > 0")
    common.add_argument("--signature", help="signature (.msig) for documents without an embedded one")

    ap = _ArgumentParser(prog="metrilog", description="Continuous first-order logic over finite metric structures.")
    sub = ap.add_subparsers(dest="verb", required=True, parser_class=_ArgumentParser)

    def verb(name, fn, *positionals, help_=None):
        p = sub.add_parser(name, parents=[common], help=help_)
        for pos in positionals:
            if pos.endswith("+"):
                p.add_argument(pos[:-1], nargs="+")
            else:
                p.add_argument(pos)
        p.set_defaults(fn=fn)
        return p

    verb("parse", cmd_parse, "file", help_="parse a document and print its canonical form")
    verb("validate", cmd_validate, "structure", help_="check metric axioms and moduli")
    verb("eval", cmd_eval, "structure", "formula", help_="value interval of a formula")
    verb("sat", cmd_sat, "structure", "formula", help_="does the formula take value 1")
    verb("models", cmd_models, "structure", "theory", help_="is the structure a model of the theory")
    p = verb("mod-interval", cmd_mod_interval, "formula", help_="split a registry by sigma in [lo, hi]")
    p.add_argument("--lo", type=_rational)
    p.add_argument("--hi", type=_rational)
    verb("compare", cmd_compare, "left", "right", "pool", help_="compare sentence values on a pool")
    for name, fn, pos in (("ultraproduct", cmd_ultraproduct, ("sequence",)),
                          ("claim3", cmd_claim3, ("sequence", "formula"))):
        p = verb(name, fn, *pos, help_="ultraproduct along principal:K or frechet"
                 if name == "ultraproduct" else "compare sigma in the ultraproduct with its limit")
        p.add_argument("--ultra", type=_ultra, required=True, help="principal:K or frechet")
    verb("realizes", cmd_realizes, "structure", "type", help_="does the assigned tuple realize the type")
    verb("omits", cmd_omits, "structure", "type", help_="does the structure omit the type")
    p = verb("thicken", cmd_thicken, "type", help_="the thickened type at radius delta")
    p.add_argument("--delta", type=_rational)
    verb("principal", cmd_principal, "theory", "type", "pool", help_="principality over the registry")
    p = verb("metrically-principal", cmd_metrically_principal, "theory", "type", "pool",
             help_="principality of every thickening on a delta grid")
    p.add_argument("--deltas", type=_rational_list, help="comma-separated radii")
    verb("omit-search", cmd_omit_search, "theory", "types+", help_="first registry model omitting the types")
    verb("corpus", cmd_corpus, help_="parse-check the bundled example corpus")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = EvalConfig.from_env(args.depth)
        return args.fn(args, cfg)
    except NotComputable as exc:
        print(f"unknown: {exc}", file=sys.stderr)
        return EXIT_UNKNOWN
    except (P.ParseError, EvaluationError, UsageError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
