"""Diagonal SNP boundary, twisted monodromy, transfer matrix and their identities.

The twisted monodromy is kept in its polynomial normalization

    S^(lam) = prod_i (lam + a_i)(-lam - hbar rho + a_i) * T(lam) K T^t(-lam - hbar rho),

so every entry is a polynomial in ``lam``.  Identities that are linear in
S are insensitive to this scalar because it is invariant under
``lam -> -lam - hbar rho``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .field import LAM, Poly, RatFunc, as_fraction
from .tensor import (
    LabeledOperator,
    antisymmetrizer,
    exact_rank,
    gen_transpose,
    kron,
    partial_trace,
)
from .yangian import (
    ChainSpec,
    SpecError,
    _arg,
    _unit,
    entry,
    highest_weight_vector,
    monodromy,
    qdet,
    quantum_layout,
    r_matrix,
)

__all__ = [
    "BoundarySpec",
    "TwistedChain",
    "k_matrix",
    "check_snp_reflection",
    "normalization",
    "twisted_monodromy",
    "transfer_matrix",
    "check_exchange",
    "check_symmetry_relation",
    "check_crossing",
    "check_commuting",
    "crossing_factor",
    "symmetry_generators",
    "check_generator_commutators",
    "generator_span",
    "sklyanin_det",
    "sdet_k",
    "check_sdet_factorization",
    "check_highest_weight",
]


@dataclass(frozen=True)
class BoundarySpec:
    zeta: tuple
    theta: int = 1
    epsilon: int = 1
    rho: Fraction = Fraction(0)
    hbar: Fraction = Fraction(1)

    def __post_init__(self):
        object.__setattr__(self, "zeta", tuple(as_fraction(z) for z in self.zeta))
        object.__setattr__(self, "rho", as_fraction(self.rho))
        object.__setattr__(self, "hbar", as_fraction(self.hbar))
        n = len(self.zeta)
        if n < 2:
            raise SpecError("boundary needs at least two zeta entries")
        if self.theta not in (1, -1) or self.epsilon not in (1, -1):
            raise SpecError("theta and epsilon must be +1 or -1")
        if n % 2 and (self.theta != 1 or self.epsilon != 1):
            raise SpecError("odd N requires theta = epsilon = +1")
        if any(z == 0 for z in self.zeta):
            raise SpecError("zeta entries must be nonzero")
        for k in range(n):
            if self.zeta[n - 1 - k] != self.epsilon * self.zeta[k]:
                raise SpecError(
                    f"zeta_{n - k} = {self.zeta[n - 1 - k]} violates zeta_(N+1-k) = epsilon*zeta_k with zeta_{k + 1} = {self.zeta[k]}"
                )
        if self.hbar == 0:
            raise SpecError("hbar must be nonzero")

    @property
    def N(self) -> int:
        return len(self.zeta)

    @classmethod
    def from_free(cls, free: Sequence, n: int, theta=1, epsilon=1, rho=0, hbar=1) -> "BoundarySpec":
        """Build zeta from its first ceil(N/2) entries."""
        free = [as_fraction(z) for z in free]
        half = (n + 1) // 2
        if len(free) != half:
            raise SpecError(f"expected {half} free zeta values for N={n}")
        zeta = free + [epsilon * free[n - 1 - k] for k in range(half, n)]
        return cls(tuple(zeta), theta, epsilon, rho, hbar)

    @classmethod
    def from_json(cls, data: dict) -> "BoundarySpec":
        try:
            return cls(
                tuple(data["zeta"]),
                int(data.get("theta", 1)),
                int(data.get("epsilon", 1)),
                data.get("rho", "0"),
                data.get("hbar", "1"),
            )
        except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
            if isinstance(exc, SpecError):
                raise
            raise SpecError(f"bad boundary spec: {exc}") from exc

    def to_json(self) -> dict:
        return {
            "zeta": [str(z) for z in self.zeta],
            "theta": self.theta,
            "epsilon": self.epsilon,
            "rho": str(self.rho),
            "hbar": str(self.hbar),
        }


@dataclass(frozen=True)
class TwistedChain:
    chain: ChainSpec
    boundary: BoundarySpec

    def __post_init__(self):
        if self.chain.N != self.boundary.N:
            raise SpecError(f"chain has N={self.chain.N} but boundary has {self.boundary.N} zeta entries")
        if self.chain.hbar != self.boundary.hbar:
            raise SpecError("chain and boundary disagree on hbar")

    @property
    def N(self) -> int:
        return self.chain.N

    @property
    def hbar(self) -> Fraction:
        return self.chain.hbar

    def crossed(self, lam):
        """``-lam - hbar rho``."""
        return -lam - self.hbar * self.boundary.rho


def k_matrix(b: BoundarySpec, aux: str = "a") -> LabeledOperator:
    n = b.N
    data = np.empty((n, n), dtype=object)
    data.fill(0)
    for k, z in enumerate(b.zeta):
        data[k, k] = z
    return LabeledOperator([(aux, n)], data)


def check_snp_reflection(k_op: LabeledOperator, la, lb, theta: int = 1, rho=0, hbar=1) -> bool:
    """Reflection equation with R^{t_a} for a constant K given on space ``a``.

    ``k_op`` may be any N x N operator; this is how the non-symmetric
    counterexample is run.
    """
    la, lb = _arg(la), _arg(lb)
    rho, hbar = as_fraction(rho), as_fraction(hbar)
    n = k_op.layout.dim
    ka = LabeledOperator([("a", n)], k_op.data)
    kb = LabeledOperator([("b", n)], k_op.data)
    r = r_matrix(la - lb, n, hbar, "a", "b", normalized=True)
    rt = gen_transpose(r_matrix(-la - lb - hbar * rho, n, hbar, "a", "b", normalized=True), "a", theta)
    return (r @ ka @ rt @ kb).equals(kb @ rt @ ka @ r)


def normalization(tc: TwistedChain, lam):
    """prod_i (lam + a_i)(-lam - hbar rho + a_i)."""
    out = 1
    for s in tc.chain.sites:
        out = out * (lam + s.shift) * (tc.crossed(lam) + s.shift)
    return out


def twisted_monodromy(tc: TwistedChain, lam=LAM, aux: str = "a") -> LabeledOperator:
    lam = _arg(lam)
    t = monodromy(tc.chain, lam, aux, normalized=True)
    tt = gen_transpose(monodromy(tc.chain, tc.crossed(lam), aux, normalized=True), aux, tc.boundary.theta)
    return t @ k_matrix(tc.boundary, aux) @ tt


def transfer_matrix(tc: TwistedChain, lam=LAM) -> LabeledOperator:
    return partial_trace(twisted_monodromy(tc, lam, "a"), "a")


def check_exchange(tc: TwistedChain, la, lb) -> bool:
    la, lb = _arg(la), _arg(lb)
    n, h, rho = tc.N, tc.hbar, tc.boundary.rho
    sa = twisted_monodromy(tc, la, "a")
    sb = twisted_monodromy(tc, lb, "b")
    r = r_matrix(la - lb, n, h, "a", "b", normalized=True)
    rt = gen_transpose(r_matrix(-la - lb - h * rho, n, h, "a", "b", normalized=True), "a", tc.boundary.theta)
    return (r @ sa @ rt @ sb).equals(sb @ rt @ sa @ r)


def check_symmetry_relation(tc: TwistedChain, lam=LAM) -> bool:
    """(2lam + hbar rho) S^t(lam) = (2lam + hbar rho) eps S(mu) - theta hbar (S(mu) - S(lam))."""
    lam = _arg(lam)
    b, h = tc.boundary, tc.hbar
    mu = tc.crossed(lam)
    s = twisted_monodromy(tc, lam)
    s_mu = twisted_monodromy(tc, mu)
    w = 2 * lam + h * b.rho
    lhs = gen_transpose(s, "a", b.theta).scale(w)
    rhs = s_mu.scale(w * b.epsilon) - (s_mu - s).scale(b.theta * h)
    return lhs.equals(rhs)


def crossing_factor(b: BoundarySpec, lam=LAM):
    """(2 lam eps + hbar(rho eps - theta)) / (2 lam + hbar(rho - theta))."""
    h = b.hbar
    return (2 * lam * b.epsilon + h * (b.rho * b.epsilon - b.theta)) / (2 * lam + h * (b.rho - b.theta))


def check_crossing(tc: TwistedChain, lam=LAM) -> bool:
    lam = _arg(lam)
    b, h = tc.boundary, tc.hbar
    lhs = transfer_matrix(tc, lam).scale(2 * lam + h * (b.rho - b.theta))
    rhs = transfer_matrix(tc, tc.crossed(lam)).scale(2 * lam * b.epsilon + h * (b.rho * b.epsilon - b.theta))
    return lhs.equals(rhs)


def check_commuting(tc: TwistedChain, l1, l2) -> bool:
    s1 = transfer_matrix(tc, _arg(l1))
    s2 = transfer_matrix(tc, _arg(l2))
    return s1.commutator(s2).is_zero()


# -- symmetry generators ------------------------------------------------------

def symmetry_generators(tc: TwistedChain) -> list[list[LabeledOperator]]:
    """S^(1)_ij: the 1/lam coefficient of S(lam) = S^(lam) / normalization at infinity."""
    n = tc.N
    s = twisted_monodromy(tc, LAM)
    norm = normalization(tc, LAM)
    qlay = quantum_layout(tc.chain)
    gens = []
    for i in range(n):
        row = []
        for j in range(n):
            blk = entry(s, "a", i, j, qlay)
            data = np.empty(blk.data.shape, dtype=object)
            for idx, x in np.ndenumerate(blk.data):
                f = RatFunc(Poly.const(x)) if not isinstance(x, RatFunc) else x
                c = (f / norm).coeff_at_infinity(-1) if not isinstance(norm, int) else f.coeff_at_infinity(-1)
                data[idx] = c if c.denominator != 1 else int(c)
            row.append(LabeledOperator(qlay, data))
        gens.append(row)
    return gens


def check_generator_commutators(tc: TwistedChain, lam=LAM) -> dict:
    """[s^(lam), S^(1)_ij] against hbar (zeta_i - zeta_j)(S^_ij + (S^t)_ij) for every (i, j)."""
    n, h = tc.N, tc.hbar
    zeta = tc.boundary.zeta
    lam = _arg(lam)
    s = twisted_monodromy(tc, lam)
    st = gen_transpose(s, "a", tc.boundary.theta)
    tr = partial_trace(s, "a")
    qlay = quantum_layout(tc.chain)
    gens = symmetry_generators(tc)
    report = {}
    for i, j in itertools.product(range(n), repeat=2):
        lhs = tr.commutator(gens[i][j])
        rhs = (entry(s, "a", i, j, qlay) + entry(st, "a", i, j, qlay)).scale(h * (zeta[i] - zeta[j]))
        report[(i, j)] = {"commutes": lhs.is_zero(), "formula": lhs.equals(rhs)}
    return report


def _flatten(ops: Sequence[LabeledOperator]) -> np.ndarray:
    return np.array([list(op.data.flat) for op in ops], dtype=object)


def generator_span(tc: TwistedChain) -> tuple[int, bool]:
    """(dimension of span{S^(1)_ij}, whether the span is closed under commutators)."""
    ops = [g for row in symmetry_generators(tc) for g in row]
    base = _flatten(ops)
    dim = exact_rank(base)
    for a, b in itertools.combinations(ops, 2):
        c = a.commutator(b)
        if c.is_zero():
            continue
        if exact_rank(np.vstack([base, _flatten([c])])) != dim:
            return dim, False
    return dim, True


# -- Sklyanin determinant ------------------------------------------------------

def sklyanin_det(tc: TwistedChain, lam=LAM, return_projection: bool = False):
    """Scalar sdet from the fused product on N auxiliary spaces projected by A_N.

    Uses the polynomial normalization of S^, so the result equals the
    unnormalized sdet times prod_k normalization(lam - hbar(k-1)).
    """
    n, h, rho, theta = tc.N, tc.hbar, tc.boundary.rho, tc.boundary.theta
    lam = _arg(lam)
    aux = [f"a{k + 1}" for k in range(n)]
    lams = [lam - h * k for k in range(n)]
    x = None
    for k in reversed(range(1, n)):
        term = twisted_monodromy(tc, lams[k], aux[k])
        for j in reversed(range(k)):
            r = r_matrix(-lams[k] - lams[j] - h * rho, n, h, aux[k], aux[j])
            term = term @ gen_transpose(r, aux[k], theta)
        x = term if x is None else x @ term
    s1 = twisted_monodromy(tc, lams[0], aux[0])
    x = s1 if x is None else x @ s1
    proj = antisymmetrizer(n, n, aux)
    x = x @ proj
    q = x
    for a in aux:
        q = partial_trace(q, a)
    val = _scalar(q)
    if not x.equals(kron(proj, q)):
        raise ArithmeticError("fused twisted product is not proportional to A_N")
    return (val, x) if return_projection else val


def _scalar(op: LabeledOperator):
    """The scalar c if op = c * identity, else ArithmeticError."""
    c = op.data[0, 0]
    if not op.equals(LabeledOperator.identity(op.layout).scale(c)):
        raise ArithmeticError("operator is not a multiple of the identity")
    return c


def sdet_k(b: BoundarySpec, lam=LAM):
    n, h, rho = b.N, b.hbar, b.rho
    m = n // 2
    pref = Fraction(1)
    for z in b.zeta:
        pref *= z
    te = b.theta * b.epsilon
    return pref * (2 * lam - (te + 1) * m * h + h + h * rho) / (2 * lam - 2 * m * h + h + h * rho)


def check_sdet_factorization(tc: TwistedChain, lam=LAM) -> dict:
    """sdet S^ against sdet K * qdet T(lam) * qdet T(-lam - hbar(rho - N + 1)), normalization restored."""
    n, h = tc.N, tc.hbar
    lam = _arg(lam)
    got = sklyanin_det(tc, lam)
    norm = 1
    for k in range(n):
        norm = norm * normalization(tc, lam - h * k)
    q1 = _scalar(qdet(tc.chain, lam))
    q2 = _scalar(qdet(tc.chain, -lam - h * (tc.boundary.rho - n + 1)))
    want = norm * sdet_k(tc.boundary, lam) * q1 * q2
    bare = TwistedChain(ChainSpec(n, (), h), tc.boundary)
    k_only = sklyanin_det(bare, lam)
    out = {
        "sdet_k_closed_form": k_only == sdet_k(tc.boundary, lam),
        "sdet_qdet_factorization": got == want,
    }
    if tc.chain.has_matrices:
        from .bethe import SpectralModel, sigma_k

        model = SpectralModel.from_twisted(tc)
        ev = sdet_k(tc.boundary, lam)
        for k in range(1, n + 1):
            ev = ev * sigma_k(model, k, lam - h * (n - k))
        out["eval_sdet"] = got == ev
    return out


# -- highest-weight action ------------------------------------------------------

def check_highest_weight(tc: TwistedChain, lam=LAM) -> dict:
    """Action of S^_jk on the pseudo-vacuum against the eigenvalue formulas."""
    from .bethe import SpectralModel, sigma_k

    n, h = tc.N, tc.hbar
    b = tc.boundary
    lam = _arg(lam)
    model = SpectralModel.from_twisted(tc)
    s = twisted_monodromy(tc, lam)
    qlay = quantum_layout(tc.chain)
    v = highest_weight_vector(tc.chain)
    te = b.theta * b.epsilon
    sig = [sigma_k(model, k + 1, lam) for k in range(n)]
    annihilate = True
    diagonal = True
    for j in range(n):
        for k in range(n):
            w = entry(s, "a", j, k, qlay).apply(v)
            if k < j:
                annihilate &= all(x == 0 for x in w)
            elif k == j:
                kk = k + 1
                if kk <= (n + 1) / 2:
                    ev = b.zeta[k] * sig[k]
                else:
                    kbar = n + 1 - kk
                    ev = b.zeta[k] * ((2 * lam + h * (b.rho - te)) * sig[k] + te * h * sig[kbar - 1]) / (2 * lam + h * b.rho)
                diagonal &= all(x == ev * y for x, y in zip(w, v))
    return {"annihilation": annihilate, "diagonal": diagonal}
