"""Eigenvalue-level layer: Drinfeld polynomials, vacuum eigenvalue, dressing and Bethe equations.

Every scalar formula here is written in plain arithmetic on the spectral
argument, so the same function accepts ``LAM`` (exact identity tests),
a ``Fraction`` or a ``complex`` sample.

Two dressing conventions are available:

* ``center="origin"``: the printed closed forms, with the middle form
  chosen from the parity of N and whether rho = -N/2.
* ``center="crossing"``: the rho = -N/2 forms translated by
  ``delta = hbar (rho + N/2) / 2`` so that the crossing point
  ``-hbar rho / 2`` is their symmetry centre.  This is the convention that
  reproduces complete N = 2 spectra at every rho.
"""
from __future__ import annotations

import cmath
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .boundary import BoundarySpec, TwistedChain, crossing_factor
from .field import LAM, Poly, RatFunc, as_fraction
from .yangian import ChainSpec, SpecError

__all__ = [
    "WeightData",
    "SpectralModel",
    "BetheRoots",
    "drinfeld_poly",
    "sigma_k",
    "g_k",
    "lambda0",
    "middle_case",
    "dressing",
    "dressed_eigenvalue",
    "tilde_functions",
    "dtilde",
    "ehat",
    "bethe_ratio",
    "bethe_residual",
    "bethe_residuals",
    "bethe_jacobian",
    "pole_points",
    "num_levels",
    "check_lambda_crossing",
    "check_dressing_constraints",
]

CENTERS = ("origin", "crossing")


@dataclass(frozen=True)
class WeightData:
    """Per-site highest weights ``alpha^n`` and inhomogeneities ``a_n``."""

    N: int
    weights: tuple = ()
    shifts: tuple = ()

    def __post_init__(self):
        w = tuple(tuple(as_fraction(x) for x in row) for row in self.weights)
        a = tuple(as_fraction(x) for x in self.shifts)
        if len(w) != len(a):
            raise SpecError("weights and shifts must have one entry per site")
        if any(len(row) != self.N for row in w):
            raise SpecError(f"each weight vector needs N={self.N} entries")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "shifts", a)

    @property
    def length(self) -> int:
        return len(self.shifts)

    @classmethod
    def from_chain(cls, chain: ChainSpec) -> "WeightData":
        return cls(chain.N, tuple(s.weights for s in chain.sites), tuple(s.shift for s in chain.sites))


@dataclass(frozen=True)
class SpectralModel:
    weights: WeightData
    boundary: BoundarySpec

    def __post_init__(self):
        if self.weights.N != self.boundary.N:
            raise SpecError("weights and boundary disagree on N")

    @property
    def N(self) -> int:
        return self.boundary.N

    @property
    def hbar(self) -> Fraction:
        return self.boundary.hbar

    @property
    def rho(self) -> Fraction:
        return self.boundary.rho

    @classmethod
    def from_twisted(cls, tc: TwistedChain) -> "SpectralModel":
        return cls(WeightData.from_chain(tc.chain), tc.boundary)

    @classmethod
    def from_chain(cls, chain: ChainSpec, boundary: BoundarySpec) -> "SpectralModel":
        return cls.from_twisted(TwistedChain(chain, boundary))


def num_levels(n: int) -> int:
    """Independent root levels: 1 .. floor(N/2)."""
    return n // 2


@dataclass
class BetheRoots:
    M: list
    roots: list
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.M = [int(m) for m in self.M]
        self.roots = [list(level) for level in self.roots]
        if len(self.roots) != len(self.M) or any(len(r) != m for r, m in zip(self.roots, self.M)):
            raise SpecError("root lists do not match the occupation numbers")
        if any(m < 0 for m in self.M):
            raise SpecError("occupation numbers must be nonnegative")

    @classmethod
    def empty(cls, n: int) -> "BetheRoots":
        return cls([0] * (n - 1), [[] for _ in range(n - 1)])

    def level(self, k: int) -> list:
        """Roots of level k (1-based); empty outside 1..N-1."""
        if 1 <= k <= len(self.roots):
            return self.roots[k - 1]
        return []

    def flat(self) -> list:
        return [z for level in self.roots for z in level]

    def with_flat(self, values: Sequence) -> "BetheRoots":
        out, pos = [], 0
        for m in self.M:
            out.append(list(values[pos:pos + m]))
            pos += m
        return BetheRoots(list(self.M), out, dict(self.meta))

    def validate_for(self, n: int) -> None:
        if len(self.M) != n - 1:
            raise SpecError(f"need N-1={n - 1} occupation numbers, got {len(self.M)}")
        for k in range(num_levels(n) + 1, n):
            if self.M[k - 1]:
                raise SpecError(f"level {k} is fixed by crossing; only levels 1..{num_levels(n)} carry roots")

    def canonical(self) -> "BetheRoots":
        """Sign-fix each root (Re > 0, ties Im >= 0) and sort within levels."""
        out = []
        for level in self.roots:
            fixed = []
            for z in level:
                c = complex(z)
                tiny = 1e-12 * max(1.0, abs(c))
                if c.real < -tiny or (abs(c.real) <= tiny and c.imag < 0):
                    z = -z
                fixed.append(z)
            fixed.sort(key=lambda z: (round(complex(z).real, 9), round(complex(z).imag, 9)))
            out.append(fixed)
        return BetheRoots(list(self.M), out, dict(self.meta))

    def to_json(self) -> dict:
        def enc(z):
            c = complex(z)
            return {"re": repr(c.real), "im": repr(c.imag)}

        data = {"M": list(self.M), "roots": [[enc(z) for z in level] for level in self.roots]}
        if self.meta:
            data["meta"] = self.meta
        return data

    @classmethod
    def from_json(cls, data: dict) -> "BetheRoots":
        try:
            roots = [[complex(float(z["re"]), float(z.get("im", 0))) for z in level] for level in data["roots"]]
            return cls(list(data["M"]), roots, dict(data.get("meta", {})))
        except (KeyError, TypeError, ValueError) as exc:
            raise SpecError(f"bad Bethe roots: {exc}") from exc


# -- vacuum data ---------------------------------------------------------------

def drinfeld_poly(w: WeightData, k: int, hbar=1) -> Poly:
    """P_k(lam) = prod_n (lam + a_n - hbar alpha^n_k)."""
    if not 1 <= k <= w.N:
        raise ValueError(f"k must be in 1..{w.N}")
    hbar = as_fraction(hbar)
    return Poly.from_roots([hbar * alpha[k - 1] - a for alpha, a in zip(w.weights, w.shifts)])


def _eval_poly(p: Poly, x):
    if isinstance(x, RatFunc):
        return p(x)
    if isinstance(x, complex):
        return p.eval_complex(x)
    return p(x)


def sigma_k(model: SpectralModel, k: int, lam=LAM):
    """sigma_k(lam) = P_k(lam) P_kbar(-lam - hbar rho)."""
    n, h = model.N, model.hbar
    pk = drinfeld_poly(model.weights, k, h)
    pkb = drinfeld_poly(model.weights, n + 1 - k, h)
    val = _eval_poly(pk, lam) * _eval_poly(pkb, -lam - h * model.rho)
    if isinstance(val, Poly):
        val = RatFunc(val)
    return val


def g_k(b: BoundarySpec, k: int, lam=LAM):
    n, h, rho = b.N, b.hbar, b.rho
    z = b.zeta[k - 1]
    if n % 2 and k == (n + 1) // 2:
        return z
    if 2 * k <= n:
        return z * (2 * lam + h * (rho + b.theta)) / (2 * lam + h * rho)
    return z * (2 * lam + h * (rho - b.theta * b.epsilon)) / (2 * lam + h * rho)


def lambda0(model: SpectralModel, lam=LAM):
    total = 0
    for k in range(1, model.N + 1):
        total = total + g_k(model.boundary, k, lam) * sigma_k(model, k, lam)
    return total


# -- dressing --------------------------------------------------------------------

def middle_case(model: SpectralModel, center: str = "origin") -> str:
    """Which closed form the middle dressing function uses.

    ``odd`` (N = 2n+1), ``even`` (N = 2n, rho != -N/2) or ``even-degenerate``
    (N = 2n with rho = -N/2, or any even N in the crossing-centred convention).
    """
    n = model.N
    if n % 2:
        return "odd"
    if center == "crossing" or 2 * model.rho == -n:
        return "even-degenerate"
    return "even"


def _frame(model: SpectralModel, center: str):
    """(effective rho, spectral translation delta) of a dressing convention."""
    if center == "origin":
        return model.rho, Fraction(0)
    if center == "crossing":
        rho_star = Fraction(-model.N, 2)
        return rho_star, model.hbar * (model.rho - rho_star) / 2
    raise ValueError(f"center must be one of {CENTERS}")


def _pair(lam, mu, up, down):
    """(lam - mu + up)(lam + mu + up) / ((lam - mu + down)(lam + mu + down))."""
    return (lam - mu + up) * (lam + mu + up) / ((lam - mu + down) * (lam + mu + down))


def _d_low(model, roots: BetheRoots, k: int, lam, rho_eff, case: str):
    """D_k for 1 <= k <= ceil(N/2) in a frame where the effective rho is ``rho_eff``."""
    n, h = model.N, model.hbar
    half = n // 2
    out = 1
    if n % 2 and k == half + 1:
        # odd middle: level-n roots only
        for mu in roots.level(half):
            out = out * _pair(lam, mu, -h * (half + 2) / 2, -h * half / 2)
            out = out * _pair(lam, mu, h * (half + 2 + 2 * rho_eff) / 2, h * (half + 2 * rho_eff) / 2)
        return out
    for mu in roots.level(k - 1):
        out = out * _pair(lam, mu, -h * (k + 1) / 2, -h * (k - 1) / 2)
    for mu in roots.level(k):
        out = out * _pair(lam, mu, -h * (k - 2) / 2, -h * k / 2)
    if n % 2 == 0 and k == half and case == "even":
        for mu in roots.level(k):
            out = out * _pair(lam, mu, h * (k + 2 + 2 * rho_eff) / 2, h * (k + 2 * rho_eff) / 2)
    return out


def dressing(model: SpectralModel, roots: BetheRoots, k: int, lam=LAM, center: str = "origin", middle: str | None = None):
    """D_k(lam).  ``middle`` may be passed to assert which middle form is expected."""
    n, h = model.N, model.hbar
    if not 1 <= k <= n:
        raise ValueError(f"k must be in 1..{n}")
    case = middle_case(model, center)
    if middle is not None and middle != case:
        raise ValueError(f"requested middle form {middle!r} but the model selects {case!r}")
    rho_eff, delta = _frame(model, center)
    x = lam + delta
    if k <= (n + 1) // 2:
        return _d_low(model, roots, k, x, rho_eff, case)
    return _d_low(model, roots, n + 1 - k, -x - h * rho_eff, rho_eff, case)


def dressed_eigenvalue(model: SpectralModel, roots: BetheRoots, lam=LAM, center: str = "origin"):
    total = 0
    for k in range(1, model.N + 1):
        total = total + g_k(model.boundary, k, lam) * sigma_k(model, k, lam) * dressing(model, roots, k, lam, center)
    return total


# -- tilde structures -----------------------------------------------------------

def tilde_functions(model: SpectralModel, k: int, lam=LAM):
    """(g~_k, sigma~_k)."""
    n, h, rho = model.N, model.hbar, model.rho
    half = Fraction(n, 2)
    s = 1
    for j in range(1, k):
        s = s * sigma_k(model, j, -lam - h * (half + rho - j))
    for j in range(k + 1, n + 1):
        s = s * sigma_k(model, j, -lam - h * (half + rho - j + 1))
    z = model.boundary.zeta[k - 1]
    return g_k(model.boundary, k, lam) / (z * z), s


def dtilde(model: SpectralModel, roots: BetheRoots, k: int, lam=LAM, center: str = "origin"):
    """D~_N(lam) = 1 / D_1(lam - hbar N/2) and D~_1(lam) = D~_N(-lam - hbar rho).

    Intermediate D~_k are not pinned down by these constraints except for N = 2.
    """
    n, h = model.N, model.hbar
    if k == n:
        return 1 / dressing(model, roots, 1, lam - h * Fraction(n, 2), center)
    if k == 1:
        return dtilde(model, roots, n, -lam - h * model.rho, center)
    raise ValueError("only D~_1 and D~_N are determined")


# -- Bethe equations ---------------------------------------------------------------

def ehat(x, lam, mu, hbar=1):
    c = as_fraction(hbar) * as_fraction(x) / 2
    return (lam - mu - c) * (lam + mu - c) / ((lam - mu + c) * (lam + mu + c))


def _ehat_grad(x, a, b, hbar):
    """(value, d/da, d/db) of ehat_x(a, b)."""
    c = complex(hbar * Fraction(x) / 2)
    num = (a - b - c) * (a + b - c)
    den = (a - b + c) * (a + b + c)
    dnum_a, dnum_b = 2 * a - 2 * c, -2 * b
    dden_a, dden_b = 2 * a + 2 * c, -2 * b
    val = num / den
    return val, (dnum_a * den - num * dden_a) / den**2, (dnum_b * den - num * dden_b) / den**2


_RATIO_CACHE: dict = {}


def bethe_ratio(model: SpectralModel, k: int) -> RatFunc:
    """g_k sigma_k / (g_{k+1} sigma_{k+1}) as a reduced rational function."""
    key = (model, k)
    if key not in _RATIO_CACHE:
        b = model.boundary
        num = g_k(b, k, LAM) * sigma_k(model, k, LAM)
        den = g_k(b, k + 1, LAM) * sigma_k(model, k + 1, LAM)
        r = num / den
        _RATIO_CACHE[key] = (r, r.deriv())
    return _RATIO_CACHE[key][0]


def _ratio_and_deriv(model, k):
    bethe_ratio(model, k)
    return _RATIO_CACHE[(model, k)]


def _factors(model: SpectralModel, roots: BetheRoots, k: int, p: int, center: str):
    """Kernel factors of the (k, p) equation as (x, a_shift, level, index) tuples.

    Each factor is ehat_x(lam_p + a_shift, root[level][index]).
    """
    n, h = model.N, model.hbar
    half = n // 2
    rho_eff, _ = _frame(model, center)
    case = middle_case(model, center)
    out = []
    if k < half:
        for j in range(len(roots.level(k - 1))):
            out.append((-1, 0, k - 1, j))
        for j in range(len(roots.level(k))):
            out.append((2, 0, k, j))
        for j in range(len(roots.level(k + 1))):
            out.append((-1, 0, k + 1, j))
        return out
    if case == "even":
        s = h * (half + rho_eff)
        for j in range(len(roots.level(k - 1))):
            out += [(-1, 0, k - 1, j), (-1, s, k - 1, j)]
        for j in range(len(roots.level(k))):
            out += [(2, 0, k, j), (2, s, k, j)]
    elif case == "even-degenerate":
        for j in range(len(roots.level(k - 1))):
            out += [(-1, 0, k - 1, j), (-1, 0, k - 1, j)]
        for j in range(len(roots.level(k))):
            out.append((2, 0, k, j))
    else:
        s = h * (n + 2 * rho_eff) / 2
        for j in range(len(roots.level(k - 1))):
            out.append((-1, 0, k - 1, j))
        for j in range(len(roots.level(k))):
            out += [(2, 0, k, j), (-1, s, k, j)]
    return out


def _offsets(roots: BetheRoots) -> list:
    off, acc = [], 0
    for m in roots.M:
        off.append(acc)
        acc += m
    return off


def pole_points(model: SpectralModel, roots: BetheRoots, center: str = "origin") -> list:
    """Spectral points lam_p^(k) + hbar k / 2 - delta where the Bethe equations enforce analyticity."""
    _, delta = _frame(model, center)
    h = model.hbar
    return [
        (k, p, complex(roots.level(k)[p]) + complex(h * k / 2 - delta))
        for k in range(1, num_levels(model.N) + 1)
        for p in range(len(roots.level(k)))
    ]


def bethe_residual(model: SpectralModel, roots: BetheRoots, k: int, p: int, center: str = "origin") -> complex:
    """LHS + prod(kernels) for the (k, p) equation; ``inf`` at a kernel pole."""
    val, _ = _residual_and_grad(model, roots, k, p, center, want_grad=False)
    return val


def _residual_and_grad(model, roots, k, p, center, want_grad=True):
    h = model.hbar
    _, delta = _frame(model, center)
    lam_p = complex(roots.level(k)[p])
    off = _offsets(roots)
    nvar = sum(roots.M)
    grad = [0j] * nvar
    ratio, dratio = _ratio_and_deriv(model, k)
    z = lam_p + complex(h * k / 2 - delta)
    try:
        lhs = ratio.eval(z)
        dlhs = dratio.eval(z) if want_grad else 0j
        vals = []
        for x, shift, lev, j in _factors(model, roots, k, p, center):
            a = lam_p + complex(shift)
            bval = complex(roots.level(lev)[j])
            vals.append((_ehat_grad(x, a, bval, h), lev, j))
    except ZeroDivisionError:
        return complex("inf"), None
    prod = 1 + 0j
    for (v, _, _), _, _ in vals:
        prod *= v
    if want_grad:
        ip = off[k - 1] + p
        grad[ip] += dlhs
        for i, ((v, da, db), lev, j) in enumerate(vals):
            rest = 1 + 0j
            for i2, ((v2, _, _), _, _) in enumerate(vals):
                if i2 != i:
                    rest *= v2
            grad[ip] += da * rest
            grad[off[lev - 1] + j] += db * rest
    return lhs + prod, grad


def bethe_residuals(model: SpectralModel, roots: BetheRoots, center: str = "origin") -> list:
    roots.validate_for(model.N)
    return [bethe_residual(model, roots, k, p, center) for k in range(1, num_levels(model.N) + 1) for p in range(roots.M[k - 1])]


def bethe_jacobian(model: SpectralModel, roots: BetheRoots, center: str = "origin"):
    """(residual vector, complex Jacobian rows) with analytic derivatives."""
    res, jac = [], []
    for k in range(1, num_levels(model.N) + 1):
        for p in range(roots.M[k - 1]):
            v, g = _residual_and_grad(model, roots, k, p, center)
            if g is None or not cmath.isfinite(v):
                return None, None
            res.append(v)
            jac.append(g)
    return res, jac


def check_lambda_crossing(model: SpectralModel, roots: BetheRoots, center: str = "origin") -> bool:
    """Lambda(lam) = crossing_factor(lam) * Lambda(-lam - hbar rho) as a rational identity."""
    lam = LAM
    lhs = dressed_eigenvalue(model, roots, lam, center)
    rhs = crossing_factor(model.boundary, lam) * dressed_eigenvalue(model, roots, -lam - model.hbar * model.rho, center)
    return lhs == rhs


def check_dressing_constraints(model: SpectralModel, roots: BetheRoots, center: str = "origin") -> dict:
    """Crossing, fusion and top-tilde constraints on the dressing functions as exact identities.

    For N = 2 the tilde fusion and tilde crossing are added.
    """
    n, h, rho = model.N, model.hbar, model.rho
    lam = LAM
    d = [dressing(model, roots, k, lam, center) for k in range(1, n + 1)]
    out = {
        "crossing": all(d[k - 1] == dressing(model, roots, n + 1 - k, -lam - h * rho, center) for k in range(1, n + 1)),
    }
    prod = 1
    for k in range(1, n + 1):
        prod = prod * dressing(model, roots, k, lam - h * (n - k), center)
    out["fusion"] = prod == 1
    out["top_tilde"] = dtilde(model, roots, n, lam, center) * dressing(model, roots, 1, lam - h * Fraction(n, 2), center) == 1
    if n == 2:
        t1 = dtilde(model, roots, 1, lam - h, center)
        out["tilde_fusion"] = t1 * dtilde(model, roots, 2, lam, center) == 1
        out["tilde_crossing"] = dtilde(model, roots, 1, lam, center) == dtilde(model, roots, 2, -lam - h * rho, center)
    return out
