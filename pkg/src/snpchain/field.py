"""Exact univariate rational functions over Q.

``Poly`` is a dense polynomial in the spectral variable with
:class:`fractions.Fraction` coefficients (ascending order).  ``RatFunc`` is
the fraction field element ``num/den`` kept in canonical form: coprime,
monic denominator.  Both are immutable and hash by value.

Mixed arithmetic with ``int`` and ``Fraction`` is supported, so code can be
written once and run on exact rationals, symbolic rational functions, or
(through :meth:`RatFunc.eval`) complex floats.
"""
from __future__ import annotations

from fractions import Fraction
from numbers import Rational
from typing import Iterable, Sequence

__all__ = [
    "Poly",
    "RatFunc",
    "PoleError",
    "LAM",
    "as_fraction",
    "rf_arith",
    "rf_eval",
    "rf_residue",
]


class PoleError(ZeroDivisionError):
    """Evaluation at a pole, or a residue requested at a higher-order pole."""


def as_fraction(x) -> Fraction:
    """Coerce ints, Fractions and ``"p/q"`` strings to ``Fraction``."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, Rational)):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    raise TypeError(f"cannot convert {type(x).__name__} to an exact rational")


def _trim(coeffs: list) -> tuple:
    while coeffs and coeffs[-1] == 0:
        coeffs.pop()
    return tuple(coeffs)


class Poly:
    __slots__ = ("c",)

    def __init__(self, coeffs: Iterable = ()):
        self.c = _trim([as_fraction(a) for a in coeffs])

    @classmethod
    def _raw(cls, coeffs: tuple) -> "Poly":
        p = object.__new__(cls)
        p.c = coeffs
        return p

    @classmethod
    def const(cls, a) -> "Poly":
        return cls((a,))

    @classmethod
    def x(cls) -> "Poly":
        return cls._raw((Fraction(0), Fraction(1)))

    @classmethod
    def from_roots(cls, roots: Iterable, lead=1) -> "Poly":
        p = cls.const(lead)
        for r in roots:
            p = p * cls((-as_fraction(r), 1))
        return p

    # -- basic queries -------------------------------------------------
    @property
    def degree(self) -> int:
        return len(self.c) - 1

    def is_zero(self) -> bool:
        return not self.c

    def is_const(self) -> bool:
        return len(self.c) <= 1

    @property
    def lead(self) -> Fraction:
        return self.c[-1] if self.c else Fraction(0)

    def __bool__(self):
        return bool(self.c)

    def __eq__(self, other):
        if isinstance(other, Poly):
            return self.c == other.c
        if isinstance(other, (int, Fraction)):
            return self.c == Poly.const(other).c
        return NotImplemented

    def __hash__(self):
        return hash(("Poly", self.c))

    def __repr__(self):
        return f"Poly({[str(a) for a in self.c]})"

    # -- arithmetic ----------------------------------------------------
    def __neg__(self):
        return Poly._raw(tuple(-a for a in self.c))

    def __add__(self, other):
        if not isinstance(other, Poly):
            other = Poly.const(other)
        a, b = self.c, other.c
        if len(a) < len(b):
            a, b = b, a
        out = list(a)
        for i, v in enumerate(b):
            out[i] += v
        return Poly._raw(_trim(out))

    __radd__ = __add__

    def __sub__(self, other):
        if not isinstance(other, Poly):
            other = Poly.const(other)
        return self + (-other)

    def __rsub__(self, other):
        return Poly.const(other) - self

    def __mul__(self, other):
        if not isinstance(other, Poly):
            s = as_fraction(other)
            if s == 0:
                return Poly._raw(())
            return Poly._raw(tuple(a * s for a in self.c))
        a, b = self.c, other.c
        if not a or not b:
            return Poly._raw(())
        out = [Fraction(0)] * (len(a) + len(b) - 1)
        for i, u in enumerate(a):
            if u == 0:
                continue
            for j, v in enumerate(b):
                out[i + j] += u * v
        return Poly._raw(tuple(out))

    __rmul__ = __mul__

    def __pow__(self, k: int):
        out = Poly.const(1)
        for _ in range(k):
            out = out * self
        return out

    def divmod(self, other: "Poly") -> tuple["Poly", "Poly"]:
        if other.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        rem = list(self.c)
        db = other.degree
        if len(rem) - 1 < db:
            return Poly._raw(()), self
        inv_lead = 1 / other.lead
        q = [Fraction(0)] * (len(rem) - db)
        for i in range(len(rem) - 1, db - 1, -1):
            coef = rem[i] * inv_lead
            if coef == 0:
                continue
            q[i - db] = coef
            for j, v in enumerate(other.c):
                rem[i - db + j] -= coef * v
        return Poly._raw(_trim(q)), Poly._raw(_trim(rem[:db]))

    def __floordiv__(self, other):
        return self.divmod(other)[0]

    def __mod__(self, other):
        return self.divmod(other)[1]

    def monic(self) -> "Poly":
        if not self.c or self.c[-1] == 1:
            return self
        return self * (1 / self.c[-1])

    def gcd(self, other: "Poly") -> "Poly":
        a, b = self, other
        while b:
            a, b = b, a % b
        return a.monic()

    def deriv(self) -> "Poly":
        return Poly._raw(tuple(i * a for i, a in enumerate(self.c) if i))

    # -- evaluation and substitution ----------------------------------
    def __call__(self, x):
        acc = 0
        for a in reversed(self.c):
            acc = acc * x + a
        return acc

    def eval_complex(self, z: complex) -> complex:
        acc = 0j
        for a in reversed(self.c):
            acc = acc * z + float(a)
        return acc

    def compose_linear(self, a, b) -> "Poly":
        """Return ``p(a*x + b)``."""
        lin = Poly((b, a))
        out = Poly._raw(())
        for coef in reversed(self.c):
            out = out * lin + coef
        return out

    def multiplicity(self, root) -> int:
        """Order of vanishing at ``root`` (0 if ``p(root) != 0``)."""
        if self.is_zero():
            raise ValueError("zero polynomial vanishes to infinite order")
        lin = Poly((-as_fraction(root), 1))
        m, p = 0, self
        while True:
            q, r = p.divmod(lin)
            if r:
                return m
            m, p = m + 1, q


class RatFunc:
    """Canonical ``num/den`` with ``gcd(num, den) = 1`` and monic ``den``."""

    __slots__ = ("num", "den")

    def __init__(self, num=0, den=1, *, _canonical=False):
        if not isinstance(num, Poly):
            num = Poly.const(num)
        if not isinstance(den, Poly):
            den = Poly.const(den)
        if den.is_zero():
            raise ZeroDivisionError("rational function with zero denominator")
        if not _canonical:
            num, den = _normalize(num, den)
        self.num = num
        self.den = den

    @classmethod
    def x(cls) -> "RatFunc":
        return cls(Poly.x(), Poly.const(1), _canonical=True)

    @classmethod
    def from_poly(cls, p: Poly) -> "RatFunc":
        return cls(p, _ONE, _canonical=True)

    # -- queries --------------------------------------------------------
    def is_poly(self) -> bool:
        return self.den.is_const()

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_const(self) -> bool:
        return self.num.is_const() and self.den.is_const()

    def const_value(self) -> Fraction:
        if not self.is_const():
            raise ValueError("not a constant")
        return self.num.lead if self.num else Fraction(0)

    def __bool__(self):
        return not self.num.is_zero()

    def __eq__(self, other):
        if isinstance(other, RatFunc):
            return self.num == other.num and self.den == other.den
        if isinstance(other, (int, Fraction)):
            return self.den.is_const() and self.num == other
        return NotImplemented

    def __hash__(self):
        if self.is_const():
            return hash(self.const_value())
        return hash((self.num, self.den))

    def __repr__(self):
        return f"RatFunc({self.num!r}, {self.den!r})"

    def __str__(self):
        return f"({_pstr(self.num)})/({_pstr(self.den)})" if not self.is_poly() else _pstr(self.num)

    # -- arithmetic -----------------------------------------------------
    def __neg__(self):
        return RatFunc(-self.num, self.den, _canonical=True)

    def __add__(self, other):
        if not isinstance(other, RatFunc):
            if isinstance(other, (int, Fraction)):
                if other == 0:
                    return self
                return RatFunc(self.num + self.den * other, self.den, _canonical=True)
            return NotImplemented
        if other.num.is_zero():
            return self
        if self.num.is_zero():
            return other
        if self.den == other.den:
            if self.den.is_const():
                return RatFunc(self.num + other.num, self.den, _canonical=True)
            return RatFunc(self.num + other.num, self.den)
        return RatFunc(self.num * other.den + other.num * self.den, self.den * other.den)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, (RatFunc, int, Fraction)):
            return self + (-other)
        return NotImplemented

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, RatFunc):
            if isinstance(other, (int, Fraction)):
                if other == 0:
                    return _ZERO_RF
                return RatFunc(self.num * other, self.den, _canonical=True)
            return NotImplemented
        if self.num.is_zero() or other.num.is_zero():
            return _ZERO_RF
        if self.den.is_const() and other.den.is_const():
            return RatFunc(self.num * other.num, _ONE, _canonical=True)
        # cross-cancel before multiplying keeps degrees small
        g1 = self.num.gcd(other.den)
        g2 = other.num.gcd(self.den)
        n = (self.num // g1) * (other.num // g2)
        d = (self.den // g2) * (other.den // g1)
        lead = d.lead
        if lead != 1:
            n, d = n * (1 / lead), d * (1 / lead)
        return RatFunc(n, d, _canonical=True)

    __rmul__ = __mul__

    def inverse(self) -> "RatFunc":
        if self.num.is_zero():
            raise ZeroDivisionError("division by the zero rational function")
        lead = self.num.lead
        return RatFunc(self.den * (1 / lead), self.num * (1 / lead), _canonical=True)

    def __truediv__(self, other):
        if isinstance(other, RatFunc):
            return self * other.inverse()
        if isinstance(other, (int, Fraction)):
            if other == 0:
                raise ZeroDivisionError("division by zero")
            return RatFunc(self.num * (1 / as_fraction(other)), self.den, _canonical=True)
        return NotImplemented

    def __rtruediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.inverse() * other
        return NotImplemented

    def __pow__(self, k: int):
        if k < 0:
            return self.inverse() ** (-k)
        return RatFunc(self.num ** k, self.den ** k, _canonical=True)

    # -- evaluation -----------------------------------------------------
    def __call__(self, x):
        """Substitute ``x``: a rational gives a Fraction, a RatFunc composes."""
        if isinstance(x, RatFunc):
            return _compose(self, x)
        if isinstance(x, complex) or isinstance(x, float):
            return self.eval(x)
        return rf_eval(self, x)

    def eval(self, z) -> complex:
        d = self.den.eval_complex(z)
        if d == 0:
            raise PoleError(f"pole at {z}")
        return self.num.eval_complex(z) / d

    def subs_linear(self, a, b) -> "RatFunc":
        """Return ``f(a*x + b)`` for rationals ``a != 0`` and ``b``."""
        n = self.num.compose_linear(a, b)
        d = self.den.compose_linear(a, b)
        lead = d.lead
        return RatFunc(n * (1 / lead), d * (1 / lead), _canonical=True)

    def deriv(self) -> "RatFunc":
        n = self.num.deriv() * self.den - self.num * self.den.deriv()
        return RatFunc(n, self.den * self.den)

    def coeff_at_infinity(self, power: int) -> Fraction:
        """Coefficient of ``x**power`` in the Laurent expansion at infinity."""
        if self.num.is_zero():
            return Fraction(0)
        dn, dd = self.num.degree, self.den.degree
        top = dn - dd
        if power > top:
            return Fraction(0)
        # f = x**top * N(t)/D(t), t = 1/x, N, D the reversed coefficient lists
        n_rev = list(reversed(self.num.c))
        d_rev = list(reversed(self.den.c))
        need = top - power
        s: list[Fraction] = []
        for j in range(need + 1):
            acc = n_rev[j] if j < len(n_rev) else Fraction(0)
            for i in range(1, min(j, len(d_rev) - 1) + 1):
                acc -= d_rev[i] * s[j - i]
            s.append(acc / d_rev[0])
        return s[need]

    # -- serialisation --------------------------------------------------
    def to_json(self) -> dict:
        return {"num": [_qstr(a) for a in self.num.c], "den": [_qstr(a) for a in self.den.c]}

    @classmethod
    def from_json(cls, data: dict) -> "RatFunc":
        return cls(Poly(data["num"]), Poly(data["den"]))


def _qstr(a: Fraction) -> str:
    return f"{a.numerator}/{a.denominator}"


def _pstr(p: Poly) -> str:
    if p.is_zero():
        return "0"
    terms = []
    for i, a in enumerate(p.c):
        if a == 0:
            continue
        terms.append(str(a) if i == 0 else f"{a}*x" + (f"^{i}" if i > 1 else ""))
    return " + ".join(reversed(terms))


def _normalize(num: Poly, den: Poly) -> tuple[Poly, Poly]:
    if num.is_zero():
        return num, _ONE
    if not den.is_const():
        g = num.gcd(den)
        if not g.is_const():
            num, den = num // g, den // g
    lead = den.lead
    if lead != 1:
        inv = 1 / lead
        num, den = num * inv, den * inv
    return num, den


def _compose(f: RatFunc, g: RatFunc) -> RatFunc:
    num = _horner_rf(f.num, g)
    den = _horner_rf(f.den, g)
    return num / den


def _horner_rf(p: Poly, g: RatFunc):
    acc = _ZERO_RF
    for a in reversed(p.c):
        acc = acc * g + a
    return acc


_ONE = Poly.const(1)
_ZERO_RF = RatFunc(Poly(), _ONE, _canonical=True)
LAM = RatFunc.x()


def rf_arith(a: RatFunc, b: RatFunc, op: str) -> RatFunc:
    """Dispatch helper: ``op`` in {"add", "sub", "mul", "div"}."""
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    raise ValueError(f"unknown op {op!r}")


def rf_eval(f: RatFunc, x) -> Fraction:
    x = as_fraction(x)
    d = f.den(x)
    if d == 0:
        raise PoleError(f"pole at {x}")
    return Fraction(f.num(x)) / d


def rf_residue(f: RatFunc, pole) -> Fraction:
    """Coefficient of ``1/(x - pole)``; raises on a pole of order >= 2."""
    pole = as_fraction(pole)
    m = f.den.multiplicity(pole)
    if m == 0:
        return Fraction(0)
    if m > 1:
        raise PoleError(f"pole of order {m} at {pole}")
    return Fraction(f.num(pole)) / f.den.deriv()(pole)


