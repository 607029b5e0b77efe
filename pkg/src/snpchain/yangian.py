"""R-matrix, evaluation Lax operators, monodromies and quantum determinants.

Spectral arguments may be exact numbers (``int``/``Fraction``) or
:class:`RatFunc` values such as ``LAM`` or ``-LAM - hbar*rho``; every
construction is polynomial/rational in them so identities can be
zero-tested exactly.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .field import as_fraction
from .tensor import (
    LabeledOperator,
    SpaceLayout,
    antisymmetrizer,
    kron,
    matrix_inverse,
    partial_trace,
    permutation_op,
    _perm_sign,
)

__all__ = [
    "SpecError",
    "SiteSpec",
    "ChainSpec",
    "r_matrix",
    "zeta_unitarity",
    "check_ybe",
    "check_unitarity",
    "check_rtt",
    "lax",
    "monodromy",
    "site_label",
    "entry",
    "from_blocks",
    "qdet",
    "qdet_perm_sum",
    "quantum_minor",
    "comatrix",
    "lax_inverse",
    "check_comatrix",
    "highest_weight_vector",
]


class SpecError(ValueError):
    """Invalid model specification (maps to CLI exit code 2)."""


def _unit(n: int, i: int, j: int) -> np.ndarray:
    m = np.empty((n, n), dtype=object)
    m.fill(0)
    m[i, j] = 1
    return m


def _check_gl_relations(gens: Sequence[Sequence[np.ndarray]], n: int) -> None:
    # [e_ij, e_kl] = d_jk e_il - d_li e_kj
    for i, j, k, l in itertools.product(range(n), repeat=4):
        a, b = gens[i][j], gens[k][l]
        lhs = a.dot(b) - b.dot(a)
        rhs = (gens[i][l] if j == k else 0) - (gens[k][j] if l == i else 0)
        if np.any(lhs - rhs != 0):
            raise SpecError(f"explicit representation violates gl(N) relation at {(i, j, k, l)}")


@dataclass(frozen=True)
class SiteSpec:
    """One evaluation-module site: highest weight, inhomogeneity and e_ij matrices."""

    weights: tuple
    shift: Fraction = Fraction(0)
    rep: str = "fundamental"
    explicit_rep: tuple | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(as_fraction(w) for w in self.weights))
        object.__setattr__(self, "shift", as_fraction(self.shift))
        n = len(self.weights)
        if self.explicit_rep is not None:
            gens = tuple(tuple(np.asarray(self.explicit_rep[i][j], dtype=object) for j in range(n)) for i in range(n))
            _check_gl_relations(gens, n)
            object.__setattr__(self, "explicit_rep", gens)
        elif self.rep == "fundamental":
            if list(self.weights) != [1] + [0] * (n - 1):
                raise SpecError(f"fundamental site needs weights (1,0,...,0), got {list(map(str, self.weights))}")
        elif self.rep != "weights":
            raise SpecError(f"unknown rep {self.rep!r}")

    @classmethod
    def fundamental(cls, n: int, shift=0) -> "SiteSpec":
        return cls(tuple([1] + [0] * (n - 1)), as_fraction(shift))

    @property
    def has_matrices(self) -> bool:
        return self.explicit_rep is not None or self.rep == "fundamental"

    @property
    def dim(self) -> int:
        if self.explicit_rep is not None:
            return self.explicit_rep[0][0].shape[0]
        return len(self.weights)

    def generators(self) -> tuple:
        """``gens[i][j]`` is the matrix of e_ij on this site."""
        n = len(self.weights)
        if self.explicit_rep is not None:
            return self.explicit_rep
        if self.rep == "fundamental":
            return tuple(tuple(_unit(n, i, j) for j in range(n)) for i in range(n))
        raise SpecError("site has no explicit matrices; only eigenvalue formulas apply")

    def highest_weight_vector(self) -> np.ndarray:
        if self.explicit_rep is not None:
            raise SpecError("highest-weight vector of an explicit rep must be supplied by the caller")
        v = np.empty(self.dim, dtype=object)
        v.fill(0)
        v[0] = 1
        return v

    def to_json(self) -> dict:
        return {"weights": [str(w) for w in self.weights], "shift": str(self.shift), "rep": self.rep}


@dataclass(frozen=True)
class ChainSpec:
    N: int
    sites: tuple = ()
    hbar: Fraction = Fraction(1)

    def __post_init__(self):
        if int(self.N) < 2:
            raise SpecError("N must be >= 2")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "sites", tuple(self.sites))
        object.__setattr__(self, "hbar", as_fraction(self.hbar))
        if self.hbar == 0:
            raise SpecError("hbar must be nonzero")
        for s in self.sites:
            if len(s.weights) != self.N:
                raise SpecError(f"site weights have length {len(s.weights)}, expected N={self.N}")

    @classmethod
    def fundamental(cls, n: int, shifts: Sequence = (0,), hbar=1) -> "ChainSpec":
        return cls(n, tuple(SiteSpec.fundamental(n, a) for a in shifts), hbar)

    @property
    def length(self) -> int:
        return len(self.sites)

    @property
    def has_matrices(self) -> bool:
        return all(s.has_matrices for s in self.sites)

    @classmethod
    def from_json(cls, data: dict) -> "ChainSpec":
        try:
            n = int(data["N"])
            sites = []
            for s in data.get("sites", []):
                rep = s.get("rep", "fundamental")
                weights = s.get("weights") or ([1] + [0] * (n - 1))
                sites.append(SiteSpec(tuple(weights), s.get("shift", "0"), rep, s.get("matrices")))
            return cls(n, tuple(sites), data.get("hbar", "1"))
        except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
            if isinstance(exc, SpecError):
                raise
            raise SpecError(f"bad chain spec: {exc}") from exc

    def to_json(self) -> dict:
        return {"N": self.N, "hbar": str(self.hbar), "sites": [s.to_json() for s in self.sites]}


def site_label(n: int) -> str:
    return f"q{n + 1}"


# -- R-matrix -----------------------------------------------------------

def r_matrix(lam, n: int, hbar=1, a: str = "a", b: str = "b", normalized: bool = False) -> LabeledOperator:
    """``I - hbar P / lam``; with ``normalized`` the polynomial ``lam I - hbar P``."""
    hbar = as_fraction(hbar)
    p = permutation_op(n, a, b)
    ident = LabeledOperator.identity(p.layout)
    if normalized:
        return ident.scale(lam) - p.scale(hbar)
    return ident - p.scale(hbar / lam)


def zeta_unitarity(lam, hbar=1):
    hbar = as_fraction(hbar)
    return (1 - hbar / lam) * (1 + hbar / lam)


def check_ybe(n: int, la, lb, hbar=1) -> bool:
    """R_ab(la-lb) R_ac(la) R_bc(lb) = R_bc(lb) R_ac(la) R_ab(la-lb), denominators cleared."""
    la, lb = _arg(la), _arg(lb)
    rab = r_matrix(la - lb, n, hbar, "a", "b", normalized=True)
    rac = r_matrix(la, n, hbar, "a", "c", normalized=True)
    rbc = r_matrix(lb, n, hbar, "b", "c", normalized=True)
    lhs = rab @ rac @ rbc
    rhs = rbc @ rac @ rab
    return lhs.equals(rhs)


def check_unitarity(n: int, lam, hbar=1) -> bool:
    lam = _arg(lam)
    rab = r_matrix(lam, n, hbar, "a", "b")
    rba = r_matrix(-lam, n, hbar, "b", "a")
    prod = rab @ rba
    return prod.equals(LabeledOperator.identity(prod.layout).scale(zeta_unitarity(lam, hbar)))


def _arg(x):
    if isinstance(x, (int, Fraction, str, float)):
        return as_fraction(x)
    return x


# -- Lax operators and monodromy -----------------------------------------

def lax(site: SiteSpec, lam, n: int, hbar=1, aux: str = "a", label: str = "q1", normalized: bool = False) -> LabeledOperator:
    """``L_ij = d_ij - hbar e_ji / (lam + a)`` on aux (x) site.

    With ``normalized`` the whole operator is multiplied by ``lam + a`` and
    has polynomial entries.
    """
    hbar = as_fraction(hbar)
    gens = site.generators()
    d = site.dim
    x = lam + site.shift
    coef = -hbar if normalized else -hbar / x
    diag = x if normalized else 1
    data = np.empty((n * d, n * d), dtype=object)
    data.fill(0)
    for i in range(n):
        for j in range(n):
            blk = gens[j][i]
            for r in range(d):
                for c in range(d):
                    v = blk[r, c]
                    val = 0 if v == 0 else coef * v
                    if i == j and r == c:
                        val = val + diag
                    if val != 0:
                        data[i * d + r, j * d + c] = val
    return LabeledOperator([(aux, n), (label, d)], data)


def monodromy(chain: ChainSpec, lam, aux: str = "a", normalized: bool = False) -> LabeledOperator:
    """Ordered product ``L_a1(lam) ... L_al(lam)``; identity on aux for an empty chain."""
    lam = _arg(lam)
    op = LabeledOperator.identity([(aux, chain.N)])
    for k, site in enumerate(chain.sites):
        op = op @ lax(site, lam, chain.N, chain.hbar, aux, site_label(k), normalized)
    return op


def quantum_layout(chain: ChainSpec) -> SpaceLayout:
    return SpaceLayout([(site_label(k), s.dim) for k, s in enumerate(chain.sites)])


def highest_weight_vector(chain: ChainSpec) -> np.ndarray:
    v = np.array([1], dtype=object)
    for s in chain.sites:
        v = np.kron(v, s.highest_weight_vector())
    return v


def check_rtt(chain: ChainSpec, la, lb) -> bool:
    """R_ab(la-lb) T_a(la) T_b(lb) = T_b(lb) T_a(la) R_ab(la-lb), normalized."""
    la, lb = _arg(la), _arg(lb)
    r = r_matrix(la - lb, chain.N, chain.hbar, "a", "b", normalized=True)
    ta = monodromy(chain, la, "a", normalized=True)
    tb = monodromy(chain, lb, "b", normalized=True)
    return (r @ ta @ tb).equals(tb @ ta @ r)


# -- operator-valued matrix entries ---------------------------------------

def entry(op: LabeledOperator, aux: str, i: int, j: int, layout: SpaceLayout | None = None) -> LabeledOperator:
    """``op_ij`` as an operator on the non-aux factors (optionally embedded into ``layout``)."""
    blk = op.block(aux, i, j)
    return blk.embed(layout) if layout is not None else blk


def from_blocks(blocks, aux: str, n: int) -> LabeledOperator:
    """Assemble ``sum_ij E_ij (x) blocks[i][j]``."""
    out = None
    for i in range(n):
        for j in range(n):
            e = LabeledOperator([(aux, n)], _unit(n, i, j))
            term = kron(e, blocks[i][j])
            out = term if out is None else out + term
    return out


# -- quantum determinant --------------------------------------------------

def qdet_perm_sum(chain: ChainSpec, lam, ordering: str = "descending") -> LabeledOperator:
    """Permutation-sum quantum determinant.

    ``descending``: sum sgn(s) T_{1 s1}(lam - hbar(N-1)) ... T_{N sN}(lam).
    ``ascending``: the same with the shifts reversed, T_{1 s1}(lam) ... T_{N sN}(lam - hbar(N-1)).
    Only the first agrees with the antisymmetrizer definition.
    """
    n, h = chain.N, chain.hbar
    lam = _arg(lam)
    qlay = quantum_layout(chain)
    shifts = [lam - h * (n - 1 - k) for k in range(n)]
    if ordering == "ascending":
        shifts = shifts[::-1]
    elif ordering != "descending":
        raise ValueError("ordering must be 'descending' or 'ascending'")
    ts = [monodromy(chain, s, "a") for s in shifts]
    total = None
    for perm in itertools.permutations(range(n)):
        term = LabeledOperator.identity(qlay)
        for k in range(n):
            term = term @ entry(ts[k], "a", k, perm[k], qlay)
        term = term.scale(_perm_sign(perm))
        total = term if total is None else total + term
    return total


def qdet(chain: ChainSpec, lam, return_projection: bool = False):
    """Quantum determinant from ``T_N(lam-hbar(N-1)) ... T_1(lam) A_N = qdet A_N``.

    Returns an operator on the quantum space.  Raises ``ArithmeticError`` if
    the product is not proportional to the antisymmetrizer.
    """
    n, h = chain.N, chain.hbar
    lam = _arg(lam)
    aux = [f"a{k + 1}" for k in range(n)]
    proj = antisymmetrizer(n, n, aux)
    x = None
    for k in reversed(range(n)):
        t = monodromy(chain, lam - h * k, aux[k])
        x = t if x is None else x @ t
    x = x @ proj
    qlay = quantum_layout(chain)
    q = x
    for a in aux:
        q = partial_trace(q, a)
    expected = kron(proj, q)
    if not x.equals(expected):
        raise ArithmeticError("antisymmetrized monodromy product is not proportional to A_N")
    return (q, x) if return_projection else q


# -- comatrix and inverse ---------------------------------------------------

def quantum_minor(t_of, rows: Sequence[int], cols: Sequence[int], lam, hbar, qlay) -> LabeledOperator:
    """sum sgn(s) T_{r1 c_s1}(lam - hbar(m-1)) ... T_{rm c_sm}(lam)."""
    m = len(rows)
    ts = [t_of(lam - hbar * (m - 1 - k)) for k in range(m)]
    total = None
    for perm in itertools.permutations(range(m)):
        term = LabeledOperator.identity(qlay)
        for k in range(m):
            term = term @ entry(ts[k], "a", rows[k], cols[perm[k]], qlay)
        term = term.scale(_perm_sign(perm))
        total = term if total is None else total + term
    return total


def comatrix(chain: ChainSpec, lam) -> LabeledOperator:
    """Quantum comatrix: entry (i,j) is (-1)^(i+j) times the minor without row j and column i."""
    n, h = chain.N, chain.hbar
    lam = _arg(lam)
    qlay = quantum_layout(chain)
    cache: dict = {}

    def t_of(x):
        key = repr(x)
        if key not in cache:
            cache[key] = monodromy(chain, x, "a")
        return cache[key]

    blocks = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            rows = [r for r in range(n) if r != j]
            cols = [c for c in range(n) if c != i]
            blocks[i][j] = quantum_minor(t_of, rows, cols, lam, h, qlay).scale((-1) ** (i + j))
    return from_blocks(blocks, "a", n)


def lax_inverse(chain: ChainSpec, lam) -> LabeledOperator:
    """Inverse of the monodromy by elimination over the rational-function field."""
    return matrix_inverse(monodromy(chain, _arg(lam), "a"))


def check_comatrix(chain: ChainSpec, lam) -> bool:
    """T(lam - hbar(N-1)) T*(lam) = qdet T(lam) and T^-1(lam-hbar(N-1)) = qdet^-1 T*(lam)."""
    n, h = chain.N, chain.hbar
    lam = _arg(lam)
    shifted = monodromy(chain, lam - h * (n - 1), "a")
    star = comatrix(chain, lam)
    q = qdet(chain, lam)
    ident_a = LabeledOperator.identity([("a", n)])
    if not (shifted @ star).equals(kron(ident_a, q)):
        return False
    inv = matrix_inverse(shifted)
    return inv.equals(kron(ident_a, matrix_inverse(q)) @ star)
