"""Exact scalars: rational functions of ``q`` and Laurent polynomials in a phase.

``QRat`` is a quotient of integer polynomials in ``q`` kept in canonical form
(coprime in Z[q], positive leading denominator coefficient), so equality is
structural.  ``Scalar`` adjoins a formal unit-modulus phase ``lam`` with
``lam* = 1/lam``.
"""

from __future__ import annotations

from math import gcd
from typing import Iterable, Mapping

__all__ = [
    "QRat",
    "Scalar",
    "PoleError",
    "geometric_series_sum",
    "eval_numeric",
    "scalar_arith",
    "qrat_div",
]


class PoleError(ArithmeticError):
    """Numeric evaluation hit a zero of a denominator."""


# ---------------------------------------------------------------------------
# dense integer polynomials: tuple of coefficients, lowest power first,
# no trailing zeros; () is the zero polynomial
# ---------------------------------------------------------------------------

def _trim(c: list[int]) -> tuple[int, ...]:
    while c and c[-1] == 0:
        c.pop()
    return tuple(c)


def _padd(a, b):
    if len(a) < len(b):
        a, b = b, a
    c = list(a)
    for i, v in enumerate(b):
        c[i] += v
    return _trim(c)


def _pneg(a):
    return tuple(-v for v in a)


def _psub(a, b):
    return _padd(a, _pneg(b))


def _pmul(a, b):
    if not a or not b:
        return ()
    if len(a) == 1:
        s = a[0]
        return tuple(s * v for v in b)
    if len(b) == 1:
        s = b[0]
        return tuple(s * v for v in a)
    c = [0] * (len(a) + len(b) - 1)
    for i, u in enumerate(a):
        if u:
            for j, v in enumerate(b):
                c[i + j] += u * v
    return tuple(c)


def _content(a) -> int:
    g = 0
    for v in a:
        g = gcd(g, v)
        if g == 1:
            break
    return g


def _low(a) -> int:
    """Order of vanishing at q = 0."""
    for i, v in enumerate(a):
        if v:
            return i
    raise ValueError("zero polynomial")


def _is_monomial(a) -> bool:
    return all(v == 0 for v in a[:-1])


def _prem(a, b):
    """Pseudo-remainder of a by b."""
    db = len(b) - 1
    lb = b[-1]
    r = list(a)
    while len(r) - 1 >= db and r:
        lr = r[-1]
        shift = len(r) - 1 - db
        r = [lb * v for v in r]
        for i, v in enumerate(b):
            r[i + shift] -= lr * v
        r = list(_trim(r))
    return tuple(r)


def _primitive(a):
    c = _content(a)
    if a[-1] < 0:
        c = -c
    return tuple(v // c for v in a)


def _pgcd(a, b):
    """Gcd in Z[q] with positive leading coefficient."""
    if not a:
        return _primitive(b) if b else ()
    if not b:
        return _primitive(a)
    c = gcd(_content(a), _content(b))
    a, b = _primitive(a), _primitive(b)
    if len(a) < len(b):
        a, b = b, a
    while b:
        r = _prem(a, b)
        a, b = b, (_primitive(r) if r else ())
    return tuple(c * v for v in a)


def _pexact_div(a, b):
    """Quotient a / b in Z[q]; b must divide a."""
    if len(b) == 1:
        s = b[0]
        return tuple(v // s for v in a)
    r = list(a)
    db = len(b) - 1
    lb = b[-1]
    qt = [0] * (len(a) - db)
    for k in range(len(a) - 1 - db, -1, -1):
        coef, rem = divmod(r[k + db], lb)
        if rem:
            raise ArithmeticError("inexact polynomial division")
        qt[k] = coef
        if coef:
            for i, v in enumerate(b):
                r[k + i] -= coef * v
    if any(r[:db]):
        raise ArithmeticError("inexact polynomial division")
    return _trim(qt)


def _peval(a, x):
    acc = 0
    for v in reversed(a):
        acc = acc * x + v
    return acc


def _render_poly(a) -> str:
    parts = []
    for i in range(len(a) - 1, -1, -1):
        v = a[i]
        if not v:
            continue
        sign = "-" if v < 0 else "+"
        mag = abs(v)
        if i == 0:
            body = str(mag)
        else:
            var = "q" if i == 1 else f"q^{i}"
            body = var if mag == 1 else f"{mag}*{var}"
        parts.append((sign, body))
    if not parts:
        return "0"
    first_sign, first = parts[0]
    out = ("-" if first_sign == "-" else "") + first
    for sign, body in parts[1:]:
        out += sign + body
    return out


# ---------------------------------------------------------------------------
# QRat
# ---------------------------------------------------------------------------

class QRat:
    """Rational function ``num(q) / den(q)`` with integer coefficients.

    Instances are immutable.  Build them with :meth:`QRat.of`,
    :meth:`QRat.q_power`, :meth:`QRat.from_laurent` or arithmetic.
    """

    __slots__ = ("num", "den", "_hash")

    def __init__(self, num: Iterable[int] = (), den: Iterable[int] = (1,), *, _canonical: bool = False):
        num = _trim(list(num))
        den = _trim(list(den))
        if not den:
            raise ZeroDivisionError("QRat with zero denominator")
        if not _canonical:
            num, den = _canonicalize(num, den)
        self.num = num
        self.den = den
        self._hash = None

    # constructors ---------------------------------------------------------
    @classmethod
    def of(cls, value) -> "QRat":
        if isinstance(value, QRat):
            return value
        if isinstance(value, int):
            return _int_qrat(value)
        try:
            from fractions import Fraction

            f = Fraction(value)
        except (TypeError, ValueError):
            raise TypeError(f"cannot convert {value!r} to QRat") from None
        return cls((f.numerator,), (f.denominator,))

    @classmethod
    def q_power(cls, k: int) -> "QRat":
        if k >= 0:
            return cls((0,) * k + (1,), (1,), _canonical=True)
        return cls((1,), (0,) * (-k) + (1,), _canonical=True)

    @classmethod
    def from_laurent(cls, coeffs: Mapping[int, int]) -> "QRat":
        """Build from ``{exponent: integer coefficient}``."""
        items = [(e, c) for e, c in coeffs.items() if c]
        if not items:
            return ZERO
        lo = min(e for e, _ in items)
        hi = max(e for e, _ in items)
        num = [0] * (hi - lo + 1)
        for e, c in items:
            num[e - lo] += c
        if lo >= 0:
            return cls((0,) * lo + tuple(num), (1,))
        return cls(num, (0,) * (-lo) + (1,))

    # predicates -----------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.num

    def is_integer(self) -> bool:
        return self.den == (1,) and len(self.num) <= 1

    def __bool__(self) -> bool:
        return bool(self.num)

    def as_int(self) -> int:
        if not self.is_integer():
            raise ValueError(f"{self} is not an integer")
        return self.num[0] if self.num else 0

    # arithmetic -----------------------------------------------------------
    def __add__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        if not other.num:
            return self
        if not self.num:
            return other
        if self.den == other.den:
            return QRat(_padd(self.num, other.num), self.den)
        return QRat(
            _padd(_pmul(self.num, other.den), _pmul(other.num, self.den)),
            _pmul(self.den, other.den),
        )

    __radd__ = __add__

    def __neg__(self):
        return QRat(_pneg(self.num), self.den, _canonical=True)

    def __sub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        if not self.num or not other.num:
            return ZERO
        if self.den == (1,) and other.den == (1,):
            return QRat(_pmul(self.num, other.num), (1,), _canonical=True)
        return QRat(_pmul(self.num, other.num), _pmul(self.den, other.den))

    __rmul__ = __mul__

    def inverse(self) -> "QRat":
        if not self.num:
            raise ZeroDivisionError("QRat division by zero")
        return QRat(self.den, self.num)

    def __truediv__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return self * other.inverse()

    def __rtruediv__(self, other):
        return _coerce(other) * self.inverse()

    def __pow__(self, k: int):
        if k < 0:
            return self.inverse() ** (-k)
        out, base = ONE, self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def invert_q(self) -> "QRat":
        """The substitution ``q -> 1/q``."""
        if not self.num:
            return self
        dn, dd = len(self.num) - 1, len(self.den) - 1
        num = tuple(reversed(self.num))
        den = tuple(reversed(self.den))
        shift = dd - dn
        if shift >= 0:
            num = (0,) * shift + num
        else:
            den = (0,) * (-shift) + den
        return QRat(num, den)

    # comparison -----------------------------------------------------------
    def __eq__(self, other):
        if isinstance(other, QRat):
            return self.num == other.num and self.den == other.den
        if isinstance(other, int):
            return self == _int_qrat(other)
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.num, self.den))
        return self._hash

    # evaluation / rendering ----------------------------------------------
    def evaluate(self, q0):
        d = _peval(self.den, q0)
        if d == 0:
            raise PoleError(f"{self} has a pole at q = {q0}")
        return _peval(self.num, q0) / d

    def __float__(self):
        raise TypeError("QRat has no float value without a q; use evaluate()")

    def __str__(self):
        num = _render_poly(self.num)
        if self.den == (1,):
            return num
        nterms = sum(1 for v in self.num if v)
        den = _render_poly(self.den)
        dterms = sum(1 for v in self.den if v)
        if nterms > 1:
            num = f"({num})"
        bare_den = dterms == 1 and (len(self.den) == 1 or self.den[-1] == 1)
        if not bare_den:
            den = f"({den})"
        return f"{num}/{den}"

    def __repr__(self):
        return f"QRat({self})"


def _canonicalize(num, den):
    if not num:
        return (), (1,)
    if _is_monomial(den):
        # fast path: den = c q^k
        k = len(den) - 1
        c = den[-1]
        g = gcd(_content(num), c)
        s = min(k, _low(num))
        if c < 0:
            g = -g
        num = tuple(v // g for v in num[s:])
        den = (0,) * (k - s) + (c // g,)
        return num, den
    g = _pgcd(num, den)
    if g != (1,):
        num = _pexact_div(num, g)
        den = _pexact_div(den, g)
    if den[-1] < 0:
        num, den = _pneg(num), _pneg(den)
    return num, den


_INT_CACHE: dict[int, QRat] = {}


def _int_qrat(v: int) -> QRat:
    r = _INT_CACHE.get(v)
    if r is None:
        r = QRat((v,) if v else (), (1,), _canonical=True)
        if -64 <= v <= 64:
            _INT_CACHE[v] = r
    return r


def _coerce(x):
    if isinstance(x, QRat):
        return x
    if isinstance(x, int):
        return _int_qrat(x)
    return NotImplemented


ZERO = QRat((), (1,), _canonical=True)
ONE = QRat((1,), (1,), _canonical=True)
Q = QRat.q_power(1)
QINV = QRat.q_power(-1)


def qrat_div(a: QRat, b: QRat) -> QRat:
    return QRat.of(a) / QRat.of(b)


def geometric_series_sum(m: int) -> QRat:
    """Closed form of ``sum_{k>=0} q^(-m k)``, i.e. ``(1 - q^-m)^-1 = q^m / (q^m - 1)``."""
    if m <= 0:
        raise ValueError(f"geometric series with ratio q^-{m} diverges")
    qm = (0,) * m + (1,)
    return QRat(qm, (-1,) + (0,) * (m - 1) + (1,), _canonical=True)


# ---------------------------------------------------------------------------
# Scalar = QRat[lam, lam^-1]
# ---------------------------------------------------------------------------

class Scalar:
    """Finite sum ``sum_d c_d lam^d`` with ``c_d`` in :class:`QRat`."""

    __slots__ = ("terms", "_hash")

    def __init__(self, terms: Mapping[int, QRat] | None = None):
        if terms:
            self.terms = {d: c for d, c in terms.items() if c.num}
        else:
            self.terms = {}
        self._hash = None

    @classmethod
    def of(cls, value) -> "Scalar":
        if isinstance(value, Scalar):
            return value
        r = QRat.of(value)
        return cls({0: r}) if r.num else S_ZERO

    @classmethod
    def lam(cls, d: int = 1) -> "Scalar":
        return cls({d: ONE})

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def is_phase_free(self) -> bool:
        return all(d == 0 for d in self.terms)

    def coeff(self, d: int = 0) -> QRat:
        return self.terms.get(d, ZERO)

    def as_qrat(self) -> QRat:
        if not self.is_phase_free():
            raise ValueError(f"scalar {self} depends on the phase lam")
        return self.coeff(0)

    def __add__(self, other):
        other = _scoerce(other)
        if other is NotImplemented:
            return other
        if not other.terms:
            return self
        if not self.terms:
            return other
        out = dict(self.terms)
        for d, c in other.terms.items():
            out[d] = out[d] + c if d in out else c
        return Scalar(out)

    __radd__ = __add__

    def __neg__(self):
        return Scalar({d: -c for d, c in self.terms.items()})

    def __sub__(self, other):
        other = _scoerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, QRat):
            if not other.num:
                return S_ZERO
            return Scalar({d: c * other for d, c in self.terms.items()})
        other = _scoerce(other)
        if other is NotImplemented:
            return other
        if len(self.terms) == 1 and len(other.terms) == 1:
            (d1, c1), = self.terms.items()
            (d2, c2), = other.terms.items()
            return Scalar({d1 + d2: c1 * c2})
        out: dict[int, QRat] = {}
        for d1, c1 in self.terms.items():
            for d2, c2 in other.terms.items():
                d = d1 + d2
                p = c1 * c2
                out[d] = out[d] + p if d in out else p
        return Scalar(out)

    __rmul__ = __mul__

    def conj(self) -> "Scalar":
        """Involution: ``lam -> 1/lam``; q is real so QRat parts are fixed."""
        return Scalar({-d: c for d, c in self.terms.items()})

    def map_coeffs(self, f) -> "Scalar":
        return Scalar({d: f(c) for d, c in self.terms.items()})

    def invert_q(self) -> "Scalar":
        return self.map_coeffs(QRat.invert_q)

    def evaluate(self, q0, lam0=1.0):
        return eval_numeric(self, q0, lam0)

    def __eq__(self, other):
        other = _scoerce(other)
        if other is NotImplemented:
            return other
        return self.terms == other.terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self.terms.items()))
        return self._hash

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for d in sorted(self.terms):
            c = self.terms[d]
            if d == 0:
                parts.append(str(c))
            else:
                lam = "lam" if d == 1 else f"lam^{d}"
                parts.append(lam if c == ONE else f"({c})*{lam}")
        return " + ".join(parts)

    def __repr__(self):
        return f"Scalar({self})"


def _scoerce(x):
    if isinstance(x, Scalar):
        return x
    if isinstance(x, (QRat, int)):
        return Scalar.of(x)
    return NotImplemented


S_ZERO = Scalar()
S_ONE = Scalar({0: ONE})


def scalar_arith(a, b, op: str) -> Scalar:
    a, b = Scalar.of(a), Scalar.of(b)
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    raise ValueError(f"unknown scalar operation {op!r}")


def eval_numeric(s, q0, lambda0=1.0) -> complex:
    """Substitute ``q = q0`` and ``lam = lambda0``."""
    if isinstance(s, (int, QRat)):
        return complex(QRat.of(s).evaluate(float(q0)))
    total = 0j
    for d, c in s.terms.items():
        total += c.evaluate(float(q0)) * (complex(lambda0) ** d)
    return total
