"""Parse and print the `.ip` algebraic text format.

One statement per line, `#` starts a comment:

    var <name> in <lo>..<hi>
    maximize <polynomial>
    subject <name>: <polynomial> (<=|>=) <rational>

Polynomials use `+`/`-` between terms, `*` for products, `^` for integer
powers and `a/b` rationals. `format_problem` renders the canonical form:
variables in declaration order, monomials with sorted factors, repeated
factors collapsed into powers, non-integral coefficients printed `a/b`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from .model import GE, LE, Constraint, Monomial, Polynomial, Problem, Variable


@dataclass(frozen=True)
class SourceSpan:
    line: int   # 1-based
    column: int  # 1-based
    length: int

    def __str__(self) -> str:
        return f"line {self.line}, column {self.column}"


class ParseError(ValueError):
    def __init__(self, message: str, span: SourceSpan):
        super().__init__(f"{span}: {message}")
        self.message = message
        self.span = span


_TOKEN_RE = re.compile(
    r"(?P<ws>\s+)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<int>\d+)"
    r"|(?P<op><=|>=|\.\.|[+\-*/^:])"
)


@dataclass(frozen=True)
class _Token:
    kind: str  # name | int | op | end
    text: str
    line: int
    column: int

    @property
    def span(self) -> SourceSpan:
        return SourceSpan(self.line, self.column, max(len(self.text), 1))


def _tokenize_line(text: str, line_no: int) -> list[_Token]:
    tokens: list[_Token] = []
    pos = 0
    while pos < len(text):
        if text[pos] == "#":
            break
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(
                f"unexpected character {text[pos]!r}",
                SourceSpan(line_no, pos + 1, 1),
            )
        if m.lastgroup != "ws":
            tokens.append(_Token(m.lastgroup, m.group(), line_no, pos + 1))
        pos = m.end()
    tokens.append(_Token("end", "", line_no, len(text) + 1))
    return tokens


class _LineParser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def next(self) -> _Token:
        tok = self.tokens[self.pos]
        if tok.kind != "end":
            self.pos += 1
        return tok

    def expect(self, kind: str, text: str | None = None) -> _Token:
        tok = self.peek()
        if tok.kind != kind or (text is not None and tok.text != text):
            want = text if text is not None else kind
            raise ParseError(f"expected {want!r}, found {tok.text or 'end of line'!r}", tok.span)
        return self.next()

    def at_end(self) -> bool:
        return self.peek().kind == "end"


class _ProblemBuilder:
    def __init__(self):
        self.variables: list[Variable] = []
        self.index: dict[str, int] = {}
        self.cost: Polynomial | None = None
        self.cost_span: SourceSpan | None = None
        self.constraints: list[Constraint] = []
        self.constraint_names: set[str] = set()


def _parse_integer(lp: _LineParser) -> int:
    sign = 1
    if lp.peek().kind == "op" and lp.peek().text == "-":
        lp.next()
        sign = -1
    tok = lp.expect("int")
    return sign * int(tok.text)


def _parse_rational(lp: _LineParser) -> Fraction:
    num = _parse_integer(lp)
    if lp.peek().kind == "op" and lp.peek().text == "/":
        lp.next()
        den_tok = lp.expect("int")
        den = int(den_tok.text)
        if den == 0:
            raise ParseError("zero denominator", den_tok.span)
        return Fraction(num, den)
    return Fraction(num)


def _parse_factor(lp: _LineParser, builder: _ProblemBuilder) -> tuple[Fraction, list[int]]:
    tok = lp.peek()
    if tok.kind == "int":
        return _parse_rational(lp), []
    if tok.kind == "name":
        lp.next()
        if tok.text not in builder.index:
            raise ParseError(f"undeclared variable {tok.text!r}", tok.span)
        idx = builder.index[tok.text]
        power = 1
        if lp.peek().kind == "op" and lp.peek().text == "^":
            lp.next()
            exp_tok = lp.expect("int")
            power = int(exp_tok.text)
            if power < 1:
                raise ParseError("power must be >= 1", exp_tok.span)
        return Fraction(1), [idx] * power
    raise ParseError(f"expected a number or variable, found {tok.text or 'end of line'!r}", tok.span)


def _parse_polynomial(lp: _LineParser, builder: _ProblemBuilder) -> Polynomial:
    terms: list[Monomial] = []
    first = True
    while True:
        sign = Fraction(1)
        tok = lp.peek()
        if tok.kind == "op" and tok.text in "+-":
            lp.next()
            sign = Fraction(-1) if tok.text == "-" else Fraction(1)
        elif not first:
            break
        coeff, factors = _parse_factor(lp, builder)
        while lp.peek().kind == "op" and lp.peek().text == "*":
            lp.next()
            more_coeff, more_factors = _parse_factor(lp, builder)
            coeff *= more_coeff
            factors += more_factors
        terms.append(Monomial(sign * coeff, tuple(factors)))
        first = False
    if not terms:
        raise ParseError("empty polynomial", lp.peek().span)
    return Polynomial(tuple(terms))


def _parse_statement(lp: _LineParser, builder: _ProblemBuilder) -> None:
    head = lp.peek()
    if head.kind != "name":
        raise ParseError(f"expected a statement, found {head.text!r}", head.span)
    if head.text == "var":
        lp.next()
        name_tok = lp.expect("name")
        if name_tok.text in builder.index:
            raise ParseError(f"duplicate variable {name_tok.text!r}", name_tok.span)
        lp.expect("name", "in")
        lo = _parse_integer(lp)
        lp.expect("op", "..")
        hi = _parse_integer(lp)
        if lo > hi:
            raise ParseError(f"empty domain {lo}..{hi}", name_tok.span)
        builder.index[name_tok.text] = len(builder.variables)
        builder.variables.append(Variable(name_tok.text, lo, hi))
    elif head.text == "maximize":
        lp.next()
        if builder.cost is not None:
            raise ParseError("duplicate maximize statement", head.span)
        builder.cost = _parse_polynomial(lp, builder)
        builder.cost_span = head.span
    elif head.text == "subject":
        lp.next()
        name_tok = lp.expect("name")
        if name_tok.text in builder.constraint_names:
            raise ParseError(f"duplicate constraint name {name_tok.text!r}", name_tok.span)
        lp.expect("op", ":")
        lhs_span = lp.peek().span
        lhs = _parse_polynomial(lp, builder)
        sense_tok = lp.peek()
        if sense_tok.kind != "op" or sense_tok.text not in (LE, GE):
            raise ParseError(
                f"expected '<=' or '>=', found {sense_tok.text or 'end of line'!r}",
                sense_tok.span,
            )
        lp.next()
        rhs = _parse_rational(lp)
        if not lhs.terms:
            raise ParseError("constraint left side cancels to zero", lhs_span)
        builder.constraint_names.add(name_tok.text)
        builder.constraints.append(Constraint(name_tok.text, lhs, sense_tok.text, rhs))
    else:
        raise ParseError(f"unknown statement {head.text!r}", head.span)
    tail = lp.peek()
    if tail.kind != "end":
        raise ParseError(f"unexpected trailing {tail.text!r}", tail.span)


def parse_problem(text: str) -> Problem:
    builder = _ProblemBuilder()
    for line_no, line in enumerate(text.splitlines(), start=1):
        tokens = _tokenize_line(line, line_no)
        lp = _LineParser(tokens)
        if lp.at_end():
            continue
        _parse_statement(lp, builder)
    if builder.cost is None:
        raise ParseError("missing maximize statement (empty cost)", SourceSpan(1, 1, 1))
    return Problem(tuple(builder.variables), builder.cost, tuple(builder.constraints))


def _format_rational(value: Fraction) -> str:
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def _format_monomial(term: Monomial, names: list[str]) -> str:
    coeff = abs(term.coeff)
    pieces: list[str] = []
    if not term.factors:
        return _format_rational(coeff)
    if coeff != 1:
        pieces.append(_format_rational(coeff))
    idx = 0
    while idx < len(term.factors):
        var = term.factors[idx]
        run = 1
        while idx + run < len(term.factors) and term.factors[idx + run] == var:
            run += 1
        pieces.append(names[var] if run == 1 else f"{names[var]}^{run}")
        idx += run
    return "*".join(pieces)


def format_polynomial(poly: Polynomial, names: list[str]) -> str:
    if not poly.terms:
        return "0"
    out: list[str] = []
    for i, term in enumerate(poly.terms):
        body = _format_monomial(term, names)
        if i == 0:
            out.append(f"-{body}" if term.coeff < 0 else body)
        else:
            out.append(f"- {body}" if term.coeff < 0 else f"+ {body}")
    return " ".join(out)


def format_problem(problem: Problem) -> str:
    names = [v.name for v in problem.variables]
    lines = [f"var {v.name} in {v.lo}..{v.hi}" for v in problem.variables]
    lines.append(f"maximize {format_polynomial(problem.cost, names)}")
    for c in problem.constraints:
        lines.append(
            f"subject {c.name}: {format_polynomial(c.lhs, names)} {c.sense} {_format_rational(c.rhs)}"
        )
    return "\n".join(lines) + "\n"
