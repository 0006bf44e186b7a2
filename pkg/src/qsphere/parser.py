"""Text syntax for algebra elements.

Grammar (whitespace-insensitive)::

    expr   := ['+'|'-'] term (('+'|'-') term)*
    term   := factor (['*'|'/'] factor)*
    factor := atom ['^' int]
    atom   := rational | 'q' | 'lam' | gen | '(' expr ')'
    gen    := 'x' digits ['*']

Juxtaposition multiplies.  ``/`` divides by the following factor, which
must be a scalar.  A star directly after a generator is its adjoint, so
``x1*x2`` reads as ``x1* x2``; write ``x1 * x2`` for the product.
``render_poly`` emits text this parser reads back.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .algebra import ContextError, NCPoly, SphereCtx, letter, render_monomial
from .coefficients import QRat, Scalar

__all__ = ["ParseError", "parse_poly", "render_poly", "render_scalar"]


class ParseError(ValueError):
    def __init__(self, msg: str, pos: int):
        super().__init__(f"{msg} at position {pos}")
        self.pos = pos


_TOKEN = re.compile(r"\s*(?:(\d+)|(x\d+\*?)|(lam)|(q)|([-+*/^()]))")


@dataclass
class _Tok:
    kind: str
    text: str
    pos: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m:
            start = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise ParseError(f"unexpected character {text[start]!r}", start)
        start = m.start(m.lastindex)
        kind = ("int", "gen", "lam", "q", "op")[m.lastindex - 1]
        toks.append(_Tok(kind, m.group(m.lastindex), start))
        pos = m.end()
    toks.append(_Tok("end", "", len(text)))
    return toks


class _Parser:
    def __init__(self, text: str, ctx: SphereCtx):
        self.toks = _tokenize(text)
        self.i = 0
        self.ctx = ctx

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def take(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, text: str):
        t = self.take()
        if t.text != text:
            raise ParseError(f"expected {text!r}, found {t.text or 'end of input'!r}", t.pos)

    def parse(self) -> NCPoly:
        if self.tok.kind == "end":
            raise ParseError("empty expression", 0)
        out = self.expr()
        if self.tok.kind != "end":
            raise ParseError(f"unexpected {self.tok.text!r}", self.tok.pos)
        return out

    def expr(self) -> NCPoly:
        sign = 1
        if self.tok.text in "+-" and self.tok.kind == "op":
            sign = -1 if self.take().text == "-" else 1
        out = self.term() * sign
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.take().text
            rhs = self.term()
            out = out + rhs if op == "+" else out - rhs
        return out

    def _starts_factor(self) -> bool:
        t = self.tok
        return t.kind in ("int", "gen", "lam", "q") or t.text == "("

    def term(self) -> NCPoly:
        out = self.factor()
        while True:
            t = self.tok
            if t.text == "*" and t.kind == "op":
                self.take()
                out = out * self.factor()
            elif t.text == "/" and t.kind == "op":
                self.take()
                pos = self.tok.pos
                d = self.factor()
                if not d.is_scalar() or d.is_zero():
                    raise ParseError("division by a non-scalar or zero", pos)
                s = d.constant_term()
                if not s.is_phase_free():
                    raise ParseError("division by a phase-dependent scalar", pos)
                out = out * s.as_qrat().inverse()
            elif self._starts_factor():
                out = out * self.factor()
            else:
                return out

    def _int(self) -> int:
        sign = 1
        if self.tok.text in "+-" and self.tok.kind == "op":
            sign = -1 if self.take().text == "-" else 1
        t = self.take()
        if t.kind != "int":
            raise ParseError("expected an integer exponent", t.pos)
        return sign * int(t.text)

    def factor(self) -> NCPoly:
        t = self.tok
        ctx = self.ctx
        if t.kind == "int":
            self.take()
            base = NCPoly.constant(ctx, int(t.text))
            kind = "scalar"
        elif t.kind == "q":
            self.take()
            base = NCPoly.constant(ctx, QRat.q_power(1))
            kind = "q"
        elif t.kind == "lam":
            self.take()
            base = NCPoly.constant(ctx, Scalar.lam(1))
            kind = "lam"
        elif t.kind == "gen":
            self.take()
            starred = t.text.endswith("*")
            idx = int(t.text[1:].rstrip("*"))
            try:
                code = letter(ctx, idx, starred)
            except ContextError:
                raise ParseError(f"unknown generator {t.text} on {ctx}", t.pos) from None
            base = NCPoly.monomial(ctx, (code,))
            kind = "gen"
        elif t.text == "(":
            self.take()
            base = self.expr()
            self.expect(")")
            kind = "paren"
        else:
            raise ParseError(f"unexpected {t.text or 'end of input'!r}", t.pos)
        if self.tok.text == "^" and self.tok.kind == "op":
            self.take()
            pos = self.tok.pos
            k = self._int()
            if kind == "q":
                return NCPoly.constant(ctx, QRat.q_power(k))
            if kind == "lam":
                return NCPoly.constant(ctx, Scalar.lam(k))
            if k < 0:
                if not base.is_scalar() or not base.constant_term().is_phase_free() or base.is_zero():
                    raise ParseError("negative power of a non-scalar", pos)
                return NCPoly.constant(ctx, base.constant_term().as_qrat() ** k)
            return base ** k
        return base


def parse_poly(text: str, ctx: SphereCtx) -> NCPoly:
    """Parse ``text`` into the normal-form element of ``ctx``."""
    return _Parser(text, ctx).parse()


def render_scalar(s: Scalar) -> str:
    parts = []
    for d in sorted(s.terms):
        c = s.terms[d]
        lam = "" if d == 0 else ("lam" if d == 1 else f"lam^{d}")
        if not lam:
            parts.append(f"({c})")
        elif c == QRat.of(1):
            parts.append(lam)
        else:
            parts.append(f"({c})*{lam}")
    body = " + ".join(parts)
    return body if len(parts) == 1 else f"({body})"


def render_poly(p: NCPoly) -> str:
    """Canonical text: ``(coeff)*monomial`` terms joined by ``+``, sorted."""
    if p.is_zero():
        return "0"
    out = []
    for w in sorted(p.terms, key=lambda w: (len(w), w)):
        c = render_scalar(p.terms[w])
        out.append(c if not w else f"{c}*{render_monomial(w)}")
    return " + ".join(out)
