"""Concrete syntax for formulas, signatures, structures, theories, types and registries.

Formula grammar (loosest binding first)::

    formula := quant | implies
    quant   := ('sup' | 'inf') VAR '.' formula
             | ('Vee' | 'Wedge') IDX '.' formula
             | ('Vee' | 'Wedge') '[' formula (',' formula)* ']'
    implies := disj ['->' formula]                  right associative
    disj    := conj ('\\/' conj)*
    conj    := tsum ('/\\' tsum)*
    tsum    := cmp ('(+)' cmp)*
    cmp     := unary (('>=' | '<=') ratexpr)*
    unary   := '~' unary | quant | atom
    atom    := 'd' '(' term ',' term ')' | NAME '(' term, ... ')'
             | ratexpr | '(' formula ')'
             | 'Disc' '(' formula ')' | 'Half' '[' INT ']' '(' formula ')'
             | 'eq' '(' term ',' term ')'
    ratexpr := INT | INT '/' INT | INT '/' '(' index ')' | '1' '-' INT '/' '(' index ')'
             | 'rat' '[' index ']'
    term    := VAR | CONST | FAMILY '[' index ']' | FN '(' term, ... ')'
    index   := part ('+' part)*        part := INT | INT '*' IDX | IDX

Derived connectives are expanded while parsing, so the result only ever
contains the core constructors of :mod:`metrilog.syntax`.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable

from . import syntax as sx
from .omitting import MemberSchema, PartialType, WitnessPool
from .semantics import Theory
from .core import (
    FamilyInterp,
    FunctionSymbol,
    MetricStructure,
    Modulus,
    PredicateSymbol,
    Signature,
    format_rational,
)


class ParseError(ValueError):
    def __init__(self, message: str, line: int = 1, column: int = 1, source: str | None = None):
        self.message = message
        self.line = line
        self.column = column
        self.source = source
        where = f"{source}:" if source else ""
        super().__init__(f"{where}line {line}, column {column}: {message}")


# --------------------------------------------------------------------------
# lexer

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<op>->|\\/|/\\|\(\+\)|>=|<=|[()\[\],.~/*+\-=:;|])
  | (?P<int>\d+)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*'*)
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # op | int | name | eof
    text: str
    line: int
    column: int


def tokenize(text: str, line: int = 1, column: int = 1, source: str | None = None) -> list[Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, column, source)
        kind = m.lastgroup
        chunk = m.group()
        if kind == "nl":
            line += 1
            column = 1
        else:
            if kind in ("op", "int", "name"):
                tokens.append(Token(kind, chunk, line, column))
            column += len(chunk)
        pos = m.end()
    tokens.append(Token("eof", "", line, column))
    return tokens


# --------------------------------------------------------------------------
# formula parser


class _FormulaParser:
    def __init__(self, tokens, signature: Signature | None, source=None, indices=()):
        self.tokens = tokens
        self.pos = 0
        self.sig = signature
        self.source = source
        self.indices = list(indices)

    # token helpers
    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, k=1) -> Token:
        return self.tokens[min(self.pos + k, len(self.tokens) - 1)]

    def error(self, message, tok=None):
        tok = tok or self.tok
        return ParseError(message, tok.line, tok.column, self.source)

    def at(self, text) -> bool:
        return self.tok.kind in ("op", "name") and self.tok.text == text

    def advance(self) -> Token:
        t = self.tok
        self.pos += 1
        return t

    def expect(self, text) -> Token:
        if not self.at(text):
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        return self.advance()

    def expect_kind(self, kind, what) -> Token:
        if self.tok.kind != kind:
            found = self.tok.text or "end of input"
            raise self.error(f"expected {what}, found {found!r}")
        return self.advance()

    # grammar
    def formula(self):
        # quantifiers are reached through ``unary``; a binder body runs to the end
        # anyway, while ``Vee [...]`` may still be followed by infix operators
        return self.implies()

    def quant(self):
        head = self.advance()
        if head.text in ("sup", "inf"):
            var = self.expect_kind("name", "a variable").text
            self._check_var_name(var)
            self.expect(".")
            body = self.formula()
            return sx.Sup(var, body) if head.text == "sup" else sx.inf(var, body)
        if self.at("["):
            self.advance()
            members = [self.formula()]
            while self.at(","):
                self.advance()
                members.append(self.formula())
            self.expect("]")
            schema = sx.ListSchema(tuple(members))
        else:
            var = self.expect_kind("name", "an index variable").text
            self.expect(".")
            self.indices.append(var)
            try:
                body = self.formula()
            finally:
                self.indices.pop()
            schema = sx.IndexSchema(var, body)
        return sx.SupSeq(schema) if head.text == "Vee" else sx.inf_seq(schema)

    def implies(self):
        left = self.disj()
        if self.at("->"):
            self.advance()
            return sx.Implies(left, self.formula())
        return left

    def disj(self):
        left = self.conj()
        while self.at("\\/"):
            self.advance()
            left = sx.or_(left, self.conj())
        return left

    def conj(self):
        left = self.tsum()
        while self.at("/\\"):
            self.advance()
            left = sx.and_(left, self.tsum())
        return left

    def tsum(self):
        left = self.cmp()
        while self.at("(+)"):
            self.advance()
            left = sx.tplus(left, self.cmp())
        return left

    def cmp(self):
        left = self.unary()
        while self.at(">=") or self.at("<="):
            op = self.advance().text
            r = self.ratexpr()
            if r is None:
                raise self.error("expected a rational after comparison")
            left = sx.geq(left, r) if op == ">=" else sx.leq(left, r)
        return left

    def unary(self):
        if self.at("~"):
            self.advance()
            return sx.neg(self.unary())
        if self.at("sup") or self.at("inf") or self.at("Vee") or self.at("Wedge"):
            return self.quant()
        return self.atom()

    def atom(self):
        tok = self.tok
        if self.at("("):
            self.advance()
            inner = self.formula()
            self.expect(")")
            return inner
        if tok.kind == "int" or self.at("rat"):
            r = self.ratexpr()
            if r is None:
                raise self.error("malformed rational", tok)
            return r
        if tok.kind != "name":
            found = tok.text or "end of input"
            raise self.error(f"expected a formula, found {found!r}")
        name = tok.text
        if name == "d":
            self.advance()
            self.expect("(")
            t1 = self.term()
            self.expect(",")
            t2 = self.term()
            self.expect(")")
            return sx.Dist(t1, t2)
        if name == "eq":
            self.advance()
            self.expect("(")
            t1 = self.term()
            self.expect(",")
            t2 = self.term()
            self.expect(")")
            return sx.eq(t1, t2)
        if name == "Disc":
            self.advance()
            self.expect("(")
            inner = self.formula()
            self.expect(")")
            return sx.disc(inner)
        if name == "Half":
            self.advance()
            self.expect("[")
            n = int(self.expect_kind("int", "an integer").text)
            if n < 1:
                raise self.error("Half needs n >= 1")
            self.expect("]")
            self.expect("(")
            inner = self.formula()
            self.expect(")")
            return sx.half(inner, n)
        if self.peek().kind == "op" and self.peek().text == "(":
            if self.sig is not None:
                kind = self.sig.kind_of(name)
                if kind is None:
                    raise self.error(f"unknown predicate {name!r}")
                if kind != "predicate":
                    raise self.error(f"{name!r} is a {kind}, not a predicate")
            self.advance()
            args = self.arguments()
            if self.sig is not None:
                arity = self.sig.predicate(name).arity
                if arity != len(args):
                    raise self.error(f"predicate {name!r} has arity {arity}, got {len(args)} argument(s)", tok)
            return sx.Pred(name, tuple(args))
        raise self.error(f"expected a formula, found {name!r}")

    def arguments(self):
        self.expect("(")
        args = [self.term()]
        while self.at(","):
            self.advance()
            args.append(self.term())
        self.expect(")")
        return args

    def term(self):
        tok = self.expect_kind("name", "a term")
        name = tok.text
        if name in ("d", "sup", "inf", "Vee", "Wedge", "Disc", "Half", "eq", "rat"):
            raise self.error(f"keyword {name!r} cannot be used as a term", tok)
        if self.at("["):
            if self.sig is not None and name not in self.sig.families:
                raise self.error(f"unknown constant family {name!r}", tok)
            self.advance()
            idx = self.index()
            self.expect("]")
            return sx.IConst(name, idx)
        if self.at("("):
            if self.sig is not None:
                fn = self.sig.function(name)
                if fn is None:
                    raise self.error(f"unknown function {name!r}", tok)
            args = self.arguments()
            if self.sig is not None and self.sig.function(name).arity != len(args):
                raise self.error(
                    f"function {name!r} has arity {self.sig.function(name).arity}, got {len(args)} argument(s)", tok
                )
            return sx.App(name, tuple(args))
        if self.sig is not None:
            kind = self.sig.kind_of(name)
            if kind == "constant":
                return sx.Const(name)
            if kind is not None:
                raise self.error(f"{kind} {name!r} used as a variable", tok)
        self._check_var_name(name, tok)
        return sx.Var(name)

    def _check_var_name(self, name, tok=None):
        if self.sig is not None and self.sig.kind_of(name) is not None:
            raise self.error(f"{name!r} is a declared symbol, not a variable", tok)

    def index(self):
        coeffs = []
        offset = 0
        while True:
            tok = self.tok
            if tok.kind == "int":
                n = int(self.advance().text)
                if self.at("*"):
                    self.advance()
                    var = self.index_var()
                    coeffs.append((var, n))
                else:
                    offset += n
            elif tok.kind == "name":
                coeffs.append((self.index_var(), 1))
            else:
                raise self.error("expected an index expression")
            if not self.at("+"):
                break
            self.advance()
        return sx.Index(tuple(coeffs), offset)

    def index_var(self):
        tok = self.expect_kind("name", "an index variable")
        if tok.text not in self.indices:
            raise self.error(f"index variable {tok.text!r} is not bound by an enclosing schema", tok)
        return tok.text

    def ratexpr(self):
        tok = self.tok
        if self.at("rat"):
            self.advance()
            self.expect("[")
            idx = self.index()
            self.expect("]")
            return self._seq("enum", 0, idx, tok)
        if tok.kind != "int":
            return None
        num = int(self.advance().text)
        if self.at("/"):
            self.advance()
            if self.at("("):
                self.advance()
                idx = self.index()
                self.expect(")")
                return self._seq("frac", num, idx, tok)
            den = int(self.expect_kind("int", "a denominator").text)
            if den == 0:
                raise self.error("zero denominator", tok)
            q = Fraction(num, den)
            if q.numerator != num or q.denominator != den:
                raise self.error(f"rational {num}/{den} is not in lowest terms", tok)
            if q > 1:
                raise self.error(f"rational {num}/{den} is outside [0, 1]", tok)
            return sx.Rat(q)
        if self.at("-"):
            if num != 1:
                raise self.error("only '1 - a/(index)' is allowed", tok)
            self.advance()
            a = int(self.expect_kind("int", "an integer").text)
            self.expect("/")
            self.expect("(")
            idx = self.index()
            self.expect(")")
            return self._seq("cofrac", a, idx, tok)
        if num > 1:
            raise self.error(f"rational {num} is outside [0, 1]", tok)
        return sx.Rat(Fraction(num))

    def _seq(self, kind, num, idx, tok):
        try:
            seq = sx.RatSeq(kind, num, idx)
        except ValueError as exc:
            raise self.error(str(exc), tok) from None
        return sx.Rat(seq.at()) if idx.is_closed else seq


def parse_formula(text: str, signature: Signature | None = None, *, source: str | None = None,
                  line: int = 1, column: int = 1) -> sx.Formula:
    """Parse one formula.

    With a ``signature``, bare identifiers naming constants become constants,
    symbols are checked for existence and arity, and everything else is a
    variable. Without one, every bare identifier is a variable.
    """
    p = _FormulaParser(tokenize(text, line, column, source), signature, source)
    phi = p.formula()
    if p.tok.kind != "eof":
        raise p.error(f"unexpected {p.tok.text!r} after formula")
    return phi


def parse_term(text: str, signature: Signature | None = None) -> sx.Term:
    p = _FormulaParser(tokenize(text), signature)
    t = p.term()
    if p.tok.kind != "eof":
        raise p.error(f"unexpected {p.tok.text!r} after term")
    return t


# --------------------------------------------------------------------------
# pretty printer


def print_index(idx: sx.Index) -> str:
    parts = [v if k == 1 else f"{k}*{v}" for v, k in idx.coeffs]
    if idx.offset or not parts:
        parts.append(str(idx.offset))
    return "+".join(parts)


def print_term(t: sx.Term) -> str:
    if isinstance(t, (sx.Var, sx.Const)):
        return t.name
    if isinstance(t, sx.IConst):
        return f"{t.family}[{print_index(t.index)}]"
    if isinstance(t, sx.App):
        return f"{t.fn}({', '.join(print_term(a) for a in t.args)})"
    raise TypeError(f"not a term: {t!r}")


def _is_neg(phi) -> bool:
    return isinstance(phi, sx.Implies) and phi.right == sx.ZERO_F


def _print_rat(phi) -> str:
    if isinstance(phi, sx.Rat):
        return format_rational(phi.value)
    idx = print_index(phi.index)
    if phi.kind == "frac":
        return f"{phi.numerator}/({idx})"
    if phi.kind == "cofrac":
        return f"1-{phi.numerator}/({idx})"
    return f"rat[{idx}]"


def _quant_view(phi):
    """Recognise the inf / Wedge sugar produced by the parser."""
    if _is_neg(phi):
        inner = phi.left
        if isinstance(inner, sx.Sup) and _is_neg(inner.body):
            return "inf", inner.var, inner.body.left
        if isinstance(inner, sx.SupSeq):
            sch = inner.schema
            if isinstance(sch, sx.IndexSchema) and _is_neg(sch.body):
                return "Wedge", sch.var, sch.body.left
            if isinstance(sch, sx.ListSchema) and all(_is_neg(m) for m in sch.members):
                return "Wedge", None, tuple(m.left for m in sch.members)
    if isinstance(phi, sx.Sup):
        return "sup", phi.var, phi.body
    if isinstance(phi, sx.SupSeq):
        if isinstance(phi.schema, sx.IndexSchema):
            return "Vee", phi.schema.var, phi.schema.body
        return "Vee", None, phi.schema.members
    return None


def print_formula(phi: sx.Formula) -> str:
    """Canonical text for ``phi``; :func:`parse_formula` maps it back to ``phi``."""
    return _pf(phi, _IMPL, tail=True)


# binding strength of each printed shape, loosest first; mirrors the grammar.
# Comparisons are printed as plain implications, so ``_CMP`` only guards
# operands that must bind tighter than ``(+)``.
_IMPL, _DISJ, _CONJ, _CMP, _UNARY = range(5)


def _or_view(phi):
    if isinstance(phi, sx.Implies) and isinstance(phi.left, sx.Implies) and phi.left.right == phi.right:
        return phi.left.left, phi.right
    return None


def _and_view(phi):
    if _is_neg(phi):
        parts = _or_view(phi.left)
        if parts is not None and _is_neg(parts[0]) and _is_neg(parts[1]):
            return parts[0].left, parts[1].left
    return None


def _pf(phi, level: int, tail: bool) -> str:
    # ``level`` is the loosest shape allowed here without parentheses; ``tail``
    # is true when nothing follows, so a quantifier body may run to the end.
    shape, text = _shape(phi, level, tail)
    if shape < level:
        return "(" + _pf(phi, _IMPL, True) + ")"
    return text


def _shape(phi, level, tail):
    q = _quant_view(phi)
    if q is not None:
        head, var, body = q
        if var is None:
            return _UNARY, f"{head} [{', '.join(_pf(m, _IMPL, True) for m in body)}]"
        if not tail:
            return -1, ""
        return _UNARY, f"{head} {var} . {_pf(body, _IMPL, True)}"
    parts = _and_view(phi)
    if parts is not None:
        return _CONJ, f"{_pf(parts[0], _CONJ, False)} /\\ {_pf(parts[1], _CMP, tail)}"
    if _is_neg(phi):
        return _UNARY, "~" + _pf(phi.left, _UNARY, tail)
    parts = _or_view(phi)
    if parts is not None:
        return _DISJ, f"{_pf(parts[0], _DISJ, False)} \\/ {_pf(parts[1], _CONJ, tail)}"
    if isinstance(phi, sx.Implies):
        return _IMPL, f"{_pf(phi.left, _DISJ, False)} -> {_pf(phi.right, _IMPL, tail)}"
    return _UNARY + 1, _pf_atom(phi)


def _pf_atom(phi) -> str:
    if isinstance(phi, sx.Dist):
        return f"d({print_term(phi.left)}, {print_term(phi.right)})"
    if isinstance(phi, sx.Pred):
        return f"{phi.name}({', '.join(print_term(a) for a in phi.args)})"
    if isinstance(phi, (sx.Rat, sx.RatSeq)):
        return _print_rat(phi)
    raise TypeError(f"not a formula: {phi!r}")


def formula_to_json(phi) -> dict:
    if isinstance(phi, sx.Var):
        return {"var": phi.name}
    if isinstance(phi, sx.Const):
        return {"const": phi.name}
    if isinstance(phi, sx.IConst):
        return {"family": phi.family, "index": print_index(phi.index)}
    if isinstance(phi, sx.App):
        return {"apply": phi.fn, "args": [formula_to_json(a) for a in phi.args]}
    if isinstance(phi, sx.Dist):
        return {"dist": [formula_to_json(phi.left), formula_to_json(phi.right)]}
    if isinstance(phi, sx.Pred):
        return {"pred": phi.name, "args": [formula_to_json(a) for a in phi.args]}
    if isinstance(phi, sx.Rat):
        return {"rat": format_rational(phi.value)}
    if isinstance(phi, sx.RatSeq):
        return {"ratseq": _print_rat(phi)}
    if isinstance(phi, sx.Implies):
        return {"implies": [formula_to_json(phi.left), formula_to_json(phi.right)]}
    if isinstance(phi, sx.Sup):
        return {"sup": phi.var, "body": formula_to_json(phi.body)}
    if isinstance(phi, sx.SupSeq):
        if isinstance(phi.schema, sx.IndexSchema):
            return {"supseq": phi.schema.var, "body": formula_to_json(phi.schema.body)}
        return {"supseq": None, "members": [formula_to_json(m) for m in phi.schema.members]}
    raise TypeError(f"cannot serialise {phi!r}")


# --------------------------------------------------------------------------
# line-oriented documents


@dataclass
class _Line:
    text: str
    number: int


def _lines(text: str) -> list[_Line]:
    out = []
    for n, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.split("#", 1)[0].rstrip()
        if stripped.strip():
            out.append(_Line(stripped, n))
    return out


def _parse_rational(text: str, line: int, column: int, source=None, lo=Fraction(0), hi=Fraction(1)) -> Fraction:
    m = re.fullmatch(r"\s*(\d+)(?:/(\d+))?\s*", text)
    if not m:
        raise ParseError(f"expected a rational, found {text.strip()!r}", line, column, source)
    num = int(m.group(1))
    den = int(m.group(2)) if m.group(2) else 1
    if den == 0:
        raise ParseError("zero denominator", line, column, source)
    q = Fraction(num, den)
    if m.group(2) and (q.numerator != num or q.denominator != den):
        raise ParseError(f"rational {num}/{den} is not in lowest terms", line, column, source)
    if not lo <= q <= hi:
        raise ParseError(f"rational {text.strip()} is outside [{lo}, {hi}]", line, column, source)
    return q


def _parse_modulus(words: list[str], line: int, column: int, source=None) -> Modulus:
    if not words:
        return Modulus.identity()
    kind, rest = words[0], words[1:]
    try:
        if kind == "identity" and not rest:
            return Modulus.identity()
        if kind == "linear" and len(rest) == 1:
            return Modulus.linear(_parse_rational(rest[0], line, column, source, hi=Fraction(10**9)))
        if kind == "constant" and len(rest) == 1:
            return Modulus.constant(_parse_rational(rest[0], line, column, source))
        if kind == "table" and rest:
            pairs = []
            for item in rest:
                e, _, dlt = item.partition(":")
                pairs.append((_parse_rational(e, line, column, source), _parse_rational(dlt, line, column, source)))
            return Modulus.from_table(pairs)
    except ValueError as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(str(exc), line, column, source) from None
    raise ParseError(f"malformed modulus {' '.join(words)!r}", line, column, source)


_DECL_RE = re.compile(r"\s*(function|predicate)\s+([A-Za-z_][A-Za-z0-9_]*)\s*/\s*(\d+)\s*(?:modulus\s+(.*))?$")


def _signature_line(ln: _Line, acc: dict, source=None) -> bool:
    """Consume a signature declaration line into ``acc``; False if not one."""
    text = ln.text
    m = _DECL_RE.match(text)
    if m:
        kind, name, arity, mod = m.groups()
        col = text.index(name) + 1
        modulus = _parse_modulus((mod or "").split(), ln.number, col, source)
        sym = (FunctionSymbol if kind == "function" else PredicateSymbol)(name, int(arity), modulus)
        acc["functions" if kind == "function" else "predicates"].append(sym)
        return True
    m = re.match(r"\s*(constant|family)\s+(.*)$", text)
    if m:
        kind, rest = m.groups()
        names = rest.replace(",", " ").split()
        if not names:
            raise ParseError(f"{kind} declaration without names", ln.number, 1, source)
        for name in names:
            if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", name):
                raise ParseError(f"bad symbol name {name!r}", ln.number, text.index(name) + 1, source)
        acc["constants" if kind == "constant" else "families"].extend(names)
        return True
    if re.match(r"\s*(function|predicate)\b", text):
        raise ParseError("malformed declaration; expected 'function NAME/ARITY [modulus ...]'", ln.number, 1, source)
    return False


def _build_signature(acc: dict, line=1, source=None) -> Signature:
    try:
        return Signature(tuple(acc["functions"]), tuple(acc["predicates"]), tuple(acc["constants"]), tuple(acc["families"]))
    except ValueError as exc:
        raise ParseError(str(exc), line, 1, source) from None


def _empty_acc():
    return {"functions": [], "predicates": [], "constants": [], "families": []}


def parse_signature(text: str, *, source: str | None = None) -> Signature:
    acc = _empty_acc()
    for ln in _lines(text):
        if not _signature_line(ln, acc, source):
            raise ParseError(f"unrecognised signature line {ln.text.strip()!r}", ln.number, 1, source)
    return _build_signature(acc, source=source)


def print_signature(sig: Signature) -> str:
    out = []
    for f in sig.functions:
        out.append(f"function {f.name}/{f.arity} modulus {f.modulus.describe()}")
    for p in sig.predicates:
        out.append(f"predicate {p.name}/{p.arity} modulus {p.modulus.describe()}")
    if sig.constants:
        out.append("constant " + " ".join(sig.constants))
    if sig.families:
        out.append("family " + " ".join(sig.families))
    return "\n".join(out) + ("\n" if out else "")


_APP_RE = re.compile(r"\s*([A-Za-z_][A-Za-z0-9_]*)\s*\(([^()]*)\)\s*=\s*(.+?)\s*$")
_FAM_RE = re.compile(r"\s*([A-Za-z_][A-Za-z0-9_]*)\s*\[\s*\]\s*=\s*(.*?)\|\s*(\S+)\s*$")
_CONST_RE = re.compile(r"\s*([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(\S+)\s*$")


def parse_structure(text: str, *, source: str | None = None,
                    resolve: Callable[[str], str] | None = None) -> MetricStructure:
    """Parse a ``.mstr`` document.

    Signature declarations may appear inline or be pulled in with
    ``signature PATH``; ``resolve`` maps such a path to its text.
    """
    acc = _empty_acc()
    name = "M"
    points = None
    metric, funcs, preds, consts, fams = {}, {}, {}, {}, {}
    body = []
    for ln in _lines(text):
        m = re.match(r"\s*structure\s+(\S+)\s*$", ln.text)
        if m:
            name = m.group(1)
            continue
        m = re.match(r"\s*signature\s+(\S+)\s*$", ln.text)
        if m:
            if resolve is None:
                raise ParseError("signature includes need a file context", ln.number, 1, source)
            included = parse_signature(resolve(m.group(1)), source=m.group(1))
            for key, syms in (("functions", included.functions), ("predicates", included.predicates),
                              ("constants", included.constants), ("families", included.families)):
                acc[key].extend(syms)
            continue
        if _signature_line(ln, acc, source):
            continue
        m = re.match(r"\s*points\s+(.*)$", ln.text)
        if m:
            if points is not None:
                raise ParseError("points declared twice", ln.number, 1, source)
            points = m.group(1).replace(",", " ").split()
            continue
        body.append(ln)
    sig = _build_signature(acc, source=source)
    if points is None:
        raise ParseError("missing 'points' line", 1, 1, source)
    pset = set(points)

    def point(p, ln, col):
        if p not in pset:
            raise ParseError(f"unknown point {p!r}", ln.number, col, source)
        return p

    for ln in body:
        text_ = ln.text
        m = _FAM_RE.match(text_)
        if m:
            fam, prefix, tail = m.groups()
            if fam not in sig.families:
                raise ParseError(f"unknown constant family {fam!r}", ln.number, 1, source)
            if fam in fams:
                raise ParseError(f"family {fam!r} interpreted twice", ln.number, 1, source)
            col = text_.index("=") + 2
            fams[fam] = FamilyInterp(tuple(point(p, ln, col) for p in prefix.replace(",", " ").split()),
                                     point(tail, ln, col))
            continue
        m = _APP_RE.match(text_)
        if m:
            sym, args_text, value = m.groups()
            args = tuple(a.strip() for a in args_text.split(","))
            col = text_.index("(") + 2
            for a in args:
                point(a, ln, col)
            vcol = text_.rindex("=") + 2
            if sym == "d":
                if len(args) != 2:
                    raise ParseError("d takes two points", ln.number, col, source)
                if args in metric:
                    raise ParseError(f"d({args[0]},{args[1]}) given twice", ln.number, 1, source)
                metric[args] = _parse_rational(value, ln.number, vcol, source)
            elif sig.predicate(sym):
                if len(args) != sig.predicate(sym).arity:
                    raise ParseError(f"predicate {sym!r} has arity {sig.predicate(sym).arity}", ln.number, col, source)
                table = preds.setdefault(sym, {})
                if args in table:
                    raise ParseError(f"{sym}{args} given twice", ln.number, 1, source)
                table[args] = _parse_rational(value, ln.number, vcol, source)
            elif sig.function(sym):
                if len(args) != sig.function(sym).arity:
                    raise ParseError(f"function {sym!r} has arity {sig.function(sym).arity}", ln.number, col, source)
                table = funcs.setdefault(sym, {})
                if args in table:
                    raise ParseError(f"{sym}{args} given twice", ln.number, 1, source)
                table[args] = point(value, ln, vcol)
            else:
                raise ParseError(f"unknown symbol {sym!r}", ln.number, 1, source)
            continue
        m = _CONST_RE.match(text_)
        if m:
            c, p = m.groups()
            if c not in sig.constants:
                raise ParseError(f"unknown constant {c!r}", ln.number, 1, source)
            if c in consts:
                raise ParseError(f"constant {c!r} interpreted twice", ln.number, 1, source)
            consts[c] = point(p, ln, text_.index("=") + 2)
            continue
        raise ParseError(f"unrecognised structure line {text_.strip()!r}", ln.number, 1, source)

    # metric entries given in one order only are mirrored
    for (a, b), v in list(metric.items()):
        metric.setdefault((b, a), v)
    try:
        return MetricStructure(sig, tuple(points), metric, funcs, preds, consts, fams, name=name)
    except ValueError as exc:
        raise ParseError(str(exc), 1, 1, source) from None


def print_structure(m: MetricStructure) -> str:
    out = [f"structure {m.name}"]
    sig_text = print_signature(m.signature).rstrip("\n")
    if sig_text:
        out.append(sig_text)
    out.append("points " + " ".join(m.points))
    for i, a in enumerate(m.points):
        for b in m.points[i + 1:]:
            out.append(f"d({a},{b}) = {format_rational(m.metric[a, b])}")
            if m.metric[b, a] != m.metric[a, b]:
                out.append(f"d({b},{a}) = {format_rational(m.metric[b, a])}")
    for a in m.points:
        if m.metric[a, a] != 0:
            out.append(f"d({a},{a}) = {format_rational(m.metric[a, a])}")
    for sym in m.signature.functions:
        for args, v in m.functions[sym.name].items():
            out.append(f"{sym.name}({','.join(args)}) = {v}")
    for sym in m.signature.predicates:
        for args, v in m.predicates[sym.name].items():
            out.append(f"{sym.name}({','.join(args)}) = {format_rational(v)}")
    for c in m.signature.constants:
        out.append(f"{c} = {m.constants[c]}")
    for fam in m.signature.families:
        interp = m.families[fam]
        out.append(f"{fam}[] = {' '.join(interp.prefix)} | {interp.tail}".replace("=  |", "= |"))
    return "\n".join(out) + "\n"


# --------------------------------------------------------------------------
# theories, types, pools, registries


def _split_statements(text: str, start_line: int = 1):
    """Split on top-level ';', yielding (chunk, line, column) with comments blanked."""
    cleaned = "\n".join(line.split("#", 1)[0] for line in text.split("\n"))
    line, col = start_line, 1
    depth = 0
    start = (line, col)
    buf = []
    for ch in cleaned:
        if ch == ";" and depth == 0:
            yield "".join(buf), start
            buf = []
            if ch == "\n":
                line += 1
                col = 1
            else:
                col += 1
            start = (line, col)
            continue
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth = max(depth - 1, 0)
        buf.append(ch)
        if ch == "\n":
            line += 1
            col = 1
        else:
            col += 1
    yield "".join(buf), start


def _statements(text: str, start_line: int = 1):
    for chunk, (line, col) in _split_statements(text, start_line):
        if chunk.strip():
            yield chunk, line, col


def _header(text: str, keyword: str):
    """Strip an optional ``keyword NAME ...`` first line; returns (header, rest, rest_line)."""
    lines = text.split("\n")
    for i, raw in enumerate(lines):
        stripped = raw.split("#", 1)[0].strip()
        if not stripped:
            continue
        if stripped.split()[0] == keyword:
            return stripped, "\n".join([""] * (i + 1) + lines[i + 1:]), 1
        break
    return None, text, 1


def parse_theory(text: str, signature: Signature | None = None, *, source: str | None = None) -> Theory:
    header, body, start = _header(text, "theory")
    name = header.split()[1] if header and len(header.split()) > 1 else "T"
    sentences = []
    for chunk, line, col in _statements(body, start):
        phi = parse_formula(chunk, signature, source=source, line=line, column=col)
        fv = sx.free_variables(phi)
        if fv:
            raise ParseError(f"theory sentence has free variables {sorted(fv)}", line, col, source)
        sentences.append(phi)
    return Theory(name, tuple(sentences))


def print_theory(theory: Theory) -> str:
    out = [f"theory {theory.name}"]
    out.extend(print_formula(s) + ";" for s in theory.sentences)
    return "\n".join(out) + "\n"


_TYPE_HEAD = re.compile(r"type\s+([A-Za-z_][A-Za-z0-9_']*)\s*\(([^)]*)\)\s*$")


def parse_type(text: str, signature: Signature | None = None, *, source: str | None = None) -> PartialType:
    header, body, start = _header(text, "type")
    if header is None:
        raise ParseError("expected 'type NAME (x, ...)' header", 1, 1, source)
    m = _TYPE_HEAD.match(header)
    if not m:
        raise ParseError("malformed type header; expected 'type NAME (x, ...)'", 1, 1, source)
    name = m.group(1)
    variables = tuple(v.strip() for v in m.group(2).split(",") if v.strip())
    members = []
    for chunk, line, col in _statements(body, start):
        stripped = chunk.lstrip()
        lead = len(chunk) - len(stripped)
        mm = re.match(r"each\s+([A-Za-z_][A-Za-z0-9_]*)\s*\.", stripped)
        if mm:
            var = mm.group(1)
            offset = lead + mm.end()
            rest_line = line + chunk[:offset].count("\n")
            rest_col = (offset - chunk[:offset].rfind("\n")) if "\n" in chunk[:offset] else col + offset
            p = _FormulaParser(tokenize(chunk[offset:], rest_line, rest_col, source), signature, source, indices=[var])
            phi = p.formula()
            if p.tok.kind != "eof":
                raise p.error(f"unexpected {p.tok.text!r} after formula")
            member = MemberSchema(var, phi)
            fv = sx.free_variables(phi)
        else:
            member = parse_formula(chunk, signature, source=source, line=line, column=col)
            fv = sx.free_variables(member)
        extra = fv - set(variables)
        if extra:
            raise ParseError(f"member mentions undeclared variables {sorted(extra)}", line, col, source)
        members.append(member)
    return PartialType(name, variables, tuple(members))


def print_type(t: PartialType) -> str:
    out = [f"type {t.name} ({', '.join(t.variables)})"]
    for phi in t.formulas:
        if isinstance(phi, MemberSchema):
            out.append(f"each {phi.var} . {print_formula(phi.body)};")
        else:
            out.append(print_formula(phi) + ";")
    return "\n".join(out) + "\n"


def parse_pool(text: str, signature: Signature | None = None, *, source: str | None = None) -> WitnessPool:
    """Parse a ``.mpool`` document: ``vars``, ``formula``, ``terms`` and ``threshold`` lines."""
    variables: list[str] = []
    formulas, terms, thresholds = [], [], []
    for ln in _lines(text):
        m = re.match(r"\s*(vars|formula|terms|threshold)\b\s*(.*)$", ln.text)
        if not m:
            raise ParseError(f"unrecognised pool line {ln.text.strip()!r}", ln.number, 1, source)
        key, rest = m.groups()
        col = ln.text.index(rest) + 1 if rest else len(ln.text) + 1
        if key == "vars":
            variables.extend(v for v in rest.replace(",", " ").split())
        elif key == "formula":
            formulas.append(parse_formula(rest, signature, source=source, line=ln.number, column=col))
        elif key == "terms":
            p = _FormulaParser(tokenize(rest, ln.number, col, source), signature, source)
            tup = [p.term()] if p.tok.kind != "eof" else []
            while p.at(","):
                p.advance()
                tup.append(p.term())
            if p.tok.kind != "eof":
                raise p.error(f"unexpected {p.tok.text!r} in term tuple")
            terms.append(tuple(tup))
        else:
            for item in rest.replace(",", " ").split():
                thresholds.append(_parse_rational(item, ln.number, col, source))
    try:
        return WitnessPool(tuple(variables), tuple(formulas), tuple(terms), tuple(thresholds))
    except ValueError as exc:
        raise ParseError(str(exc), 1, 1, source) from None


def print_pool(pool: WitnessPool) -> str:
    out = ["vars " + " ".join(pool.variables)]
    out.extend("formula " + print_formula(f) for f in pool.formulas)
    out.extend("terms " + ", ".join(print_term(t) for t in tup) for tup in pool.terms)
    if pool.thresholds:
        out.append("threshold " + " ".join(format_rational(r) for r in pool.thresholds))
    return "\n".join(out) + "\n"


@dataclass
class RegistryDoc:
    """Paths listed by a ``.mreg`` file; ``tail`` marks an eventually repeated member."""

    paths: list[str] = field(default_factory=list)
    tail: str | None = None


def parse_registry(text: str, *, source: str | None = None) -> RegistryDoc:
    doc = RegistryDoc()
    for ln in _lines(text):
        words = ln.text.split()
        if words[0] == "tail":
            if len(words) != 2:
                raise ParseError("expected 'tail PATH'", ln.number, 1, source)
            if doc.tail is not None:
                raise ParseError("tail given twice", ln.number, 1, source)
            doc.tail = words[1]
        elif len(words) == 1:
            if doc.tail is not None:
                raise ParseError("prefix entries must precede the tail", ln.number, 1, source)
            doc.paths.append(words[0])
        else:
            raise ParseError(f"unrecognised registry line {ln.text.strip()!r}", ln.number, 1, source)
    return doc


# --------------------------------------------------------------------------
# file helpers


def _read(path) -> str:
    return Path(path).read_text(encoding="utf-8")


def _resolver(path):
    base = Path(path).parent
    return lambda rel: _read(base / rel)


def load_signature(path) -> Signature:
    return parse_signature(_read(path), source=str(path))


def load_structure(path) -> MetricStructure:
    return parse_structure(_read(path), source=str(path), resolve=_resolver(path))


def load_formula(path, signature: Signature | None = None) -> sx.Formula:
    return parse_formula(_read(path), signature, source=str(path))


def load_theory(path, signature: Signature | None = None) -> Theory:
    return parse_theory(_read(path), signature, source=str(path))


def load_type(path, signature: Signature | None = None) -> PartialType:
    return parse_type(_read(path), signature, source=str(path))


def load_pool(path, signature: Signature | None = None) -> WitnessPool:
    return parse_pool(_read(path), signature, source=str(path))


def load_registry(path) -> tuple[list[MetricStructure], MetricStructure | None]:
    doc = parse_registry(_read(path), source=str(path))
    base = Path(path).parent
    members = [load_structure(base / p) for p in doc.paths]
    tail = load_structure(base / doc.tail) if doc.tail else None
    return members, tail
