"""Floating-point layer: complex evaluation, diagonalization, Bethe solving, spectrum matching."""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .bethe import (
    BetheRoots,
    SpectralModel,
    bethe_jacobian,
    bethe_residuals,
    dressed_eigenvalue,
    num_levels,
    pole_points,
)
from .boundary import TwistedChain, transfer_matrix
from .field import LAM, PoleError, RatFunc
from .tensor import LabeledOperator

__all__ = [
    "SolverConfig",
    "SpectrumReport",
    "eval_complex",
    "diagonalize",
    "cluster",
    "TransferEvaluator",
    "bethe_solve",
    "check_jacobian",
    "contour_residue",
    "residue_at_poles",
    "spectrum_match",
    "default_samples",
    "fmt_float",
    "thread_count",
]


def fmt_float(x: float) -> str:
    """Shortest round-trip decimal string."""
    return repr(float(x))


def _cjson(z: complex) -> dict:
    z = complex(z)
    return {"re": fmt_float(z.real), "im": fmt_float(z.imag)}


def thread_count() -> int:
    try:
        n = int(os.environ.get("SNPCHAIN_THREADS", "1"))
    except ValueError:
        n = 1
    return max(1, n)


def _pmap(fn: Callable, items: Sequence) -> list:
    """Order-preserving map, threaded up to SNPCHAIN_THREADS workers."""
    n = thread_count()
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


# -- evaluation and diagonalization --------------------------------------------

def _entry_complex(x, z: complex) -> complex:
    if isinstance(x, RatFunc):
        return x.eval(z)
    return complex(x)


def eval_complex(op: LabeledOperator, z: complex) -> np.ndarray:
    """Entry-wise evaluation of an exact operator at a complex spectral point."""
    z = complex(z)
    return op.to_complex(lambda x: _entry_complex(x, z))


def diagonalize(mat: np.ndarray, check: bool = True, rtol: float = 1e-10) -> np.ndarray:
    """All eigenvalues with multiplicity, sorted; residuals of the returned pairs are checked."""
    mat = np.asarray(mat, dtype=complex)
    vals, vecs = np.linalg.eig(mat)
    if not np.all(np.isfinite(vals)):
        raise np.linalg.LinAlgError("eigensolver returned non-finite values")
    if check:
        scale = max(np.linalg.norm(mat, 2), 1e-300)
        res = np.linalg.norm(mat @ vecs - vecs * vals, axis=0)
        if np.max(res) > rtol * scale:
            raise np.linalg.LinAlgError(f"eigenpair residual {np.max(res):.3e} exceeds {rtol} * ||M||")
    order = np.lexsort((np.round(vals.imag, 12), np.round(vals.real, 12)))
    return vals[order]


def cluster(values: np.ndarray, rtol: float = 1e-9) -> list[tuple[complex, int]]:
    """Group nearly equal eigenvalues into (mean value, multiplicity) pairs."""
    groups: list[list[complex]] = []
    for v in values:
        for g in groups:
            ref = g[0]
            if abs(v - ref) <= rtol * max(abs(ref), abs(v), 1.0):
                g.append(v)
                break
        else:
            groups.append([v])
    return [(complex(np.mean(g)), len(g)) for g in groups]


class TransferEvaluator:
    """Caches the exact transfer matrix and evaluates it at complex points."""

    def __init__(self, tc: TwistedChain):
        self.tc = tc
        self.exact = transfer_matrix(tc, LAM)
        d = self.exact.data.shape[0]
        self._polys = []
        for i in range(d):
            for j in range(d):
                x = self.exact.data[i, j]
                if isinstance(x, RatFunc):
                    if not x.is_poly():
                        raise ValueError("normalized transfer matrix should be polynomial")
                    self._polys.append((i, j, np.array([complex(c) for c in reversed(x.num.c)])))
                elif x != 0:
                    self._polys.append((i, j, np.array([complex(x)])))
        self.dim = d

    def __call__(self, z: complex) -> np.ndarray:
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for i, j, c in self._polys:
            out[i, j] = np.polyval(c, z)
        return out


# -- Bethe solver ----------------------------------------------------------------

@dataclass
class SolverConfig:
    max_iter: int = 80
    tol: float = 1e-12
    restarts: int = 120
    damping: float = 1.0
    rng_seed: int = 0
    dedup_eps: float = 1e-7
    radius: float | None = None
    max_radius: float = 50.0
    center: str = "crossing"
    residue_tol: float | None = 1e-8  # drop solutions where Lambda keeps a pole

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if not 0 < self.damping <= 1:
            raise ValueError("damping must lie in (0, 1]")


def _flat_roots(model: SpectralModel, occupations: Sequence[int]) -> BetheRoots:
    n = model.N
    m = list(occupations) + [0] * (n - 1 - len(occupations))
    r = BetheRoots(m, [[0j] * k for k in m])
    r.validate_for(n)
    return r


def _weighted(model, template: BetheRoots, z: np.ndarray, cfg: SolverConfig, scale: float):
    """Residual times w(z_p) = (1 + (z_p/scale)^2)^2 per root, with its Jacobian.

    The raw residual decays at infinity, which makes infinity an attractor for
    Newton; the weight removes that.  Its zeros at +-i*scale are spurious and
    are filtered by checking the raw residual.
    """
    res, jac = bethe_jacobian(model, template.with_flat(list(z)), cfg.center)
    if res is None:
        return None
    f, jac = np.array(res), np.array(jac)
    u = 1 + (z / scale) ** 2
    w = u * u
    dw = 4 * u * z / scale**2
    g = f * w
    jg = jac * w[:, None] + np.diag(f * dw)
    if not (np.all(np.isfinite(g)) and np.all(np.isfinite(jg))):
        return None
    return f, g, jg


def _newton(model, template: BetheRoots, z0: np.ndarray, cfg: SolverConfig, rmax: float, scale: float):
    z = z0.copy()
    cur = _weighted(model, template, z, cfg, scale)
    if cur is None:
        return None, math.inf
    f, g, jac = cur
    gnorm = np.max(np.abs(g))
    for _ in range(cfg.max_iter):
        if np.max(np.abs(f)) < cfg.tol:
            break
        try:
            step = np.linalg.solve(jac, -g)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(jac, -g, rcond=None)[0]
        t = cfg.damping
        accepted = False
        for _ in range(30):
            cand = z + t * step
            nxt = _weighted(model, template, cand, cfg, scale)
            if nxt is not None and np.max(np.abs(nxt[1])) < gnorm:
                z, (f, g, jac) = cand, nxt
                gnorm = np.max(np.abs(g))
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break
        if np.max(np.abs(z)) > rmax:
            return None, math.inf
    return z, float(np.max(np.abs(f)))


def _snap(z: complex, eps: float = 1e-12) -> complex:
    re = 0.0 if abs(z.real) < eps else z.real
    im = 0.0 if abs(z.imag) < eps else z.imag
    return complex(re, im)


def _admissible(roots: BetheRoots, eps: float) -> bool:
    """Reject coinciding roots within a level (up to the sign symmetry)."""
    for level in roots.roots:
        for i in range(len(level)):
            for j in range(i + 1, len(level)):
                a, b = complex(level[i]), complex(level[j])
                if abs(a - b) < eps or abs(a + b) < eps:
                    return False
    return True


def _exact_string(roots: BetheRoots, hbar: float, eps: float = 1e-6) -> bool:
    """Two roots of one level separated by exactly hbar (a singular solution)."""
    for level in roots.roots:
        zs = [complex(v) for v in level]
        for i in range(len(zs)):
            for j in range(i + 1, len(zs)):
                if abs(abs(zs[i] - zs[j]) - abs(hbar)) < eps and abs((zs[i] - zs[j]).imag) < eps:
                    return True
    return False


def _same(a: BetheRoots, b: BetheRoots, eps: float) -> bool:
    fa, fb = a.flat(), b.flat()
    return a.M == b.M and all(abs(complex(x) - complex(y)) < eps for x, y in zip(fa, fb))


def bethe_solve(model: SpectralModel, occupations: Sequence[int], cfg: SolverConfig | None = None) -> list[BetheRoots]:
    """Distinct solutions (canonical, sorted) of the Bethe equations with the given occupations.

    When nothing converges the result is empty and the best residual is
    recorded on the function attribute ``last_best``.
    """
    cfg = cfg or SolverConfig()
    template = _flat_roots(model, occupations)
    nvar = sum(template.M)
    if nvar == 0:
        bethe_solve.last_best = 0.0
        bethe_solve.last_rejected = []
        return [BetheRoots(list(template.M), [[] for _ in template.M], {"residual": "0.0", "seed": cfg.rng_seed})]
    radius = cfg.radius or float(model.hbar) * (model.weights.length + model.N)
    seeds = np.random.SeedSequence(cfg.rng_seed).spawn(cfg.restarts)

    def run(seed):
        rng = np.random.default_rng(seed)
        # alternate between a disk of radius hbar and the full start disk
        r = (radius if rng.random() < 0.5 else float(model.hbar)) * np.sqrt(rng.random(nvar))
        phi = 2 * np.pi * rng.random(nvar)
        return _newton(model, template, r * np.exp(1j * phi), cfg, cfg.max_radius * radius, float(model.hbar))

    found: list[BetheRoots] = []
    rejected: list[BetheRoots] = []
    best = math.inf
    for z, norm in _pmap(run, seeds):
        if z is None:
            continue
        best = min(best, norm)
        if norm >= cfg.tol:
            continue
        sol = template.with_flat([_snap(complex(v)) for v in z]).canonical()
        if not _admissible(sol, cfg.dedup_eps):
            continue
        if any(_same(sol, s, 100 * cfg.dedup_eps) for s in found):
            continue
        if _exact_string(sol, float(model.hbar)):
            rejected.append(sol)
            continue
        if cfg.residue_tol is not None:
            worst = max((abs(r) for r in residue_at_poles(model, sol, cfg.center)), default=0.0)
            if not worst < cfg.residue_tol:
                rejected.append(sol)
                continue
        sol.meta = {"residual": fmt_float(norm), "seed": cfg.rng_seed}
        found.append(sol)
    found.sort(key=lambda s: [(round(complex(v).real, 9), round(complex(v).imag, 9)) for v in s.flat()])
    bethe_solve.last_best = best
    bethe_solve.last_rejected = rejected
    return found


bethe_solve.last_best = math.inf
bethe_solve.last_rejected = []


def check_jacobian(model: SpectralModel, roots: BetheRoots, center: str = "crossing", h: float = 1e-6) -> float:
    """Max relative deviation of the analytic Jacobian from central differences."""
    res, jac = bethe_jacobian(model, roots, center)
    jac = np.array(jac)
    z = np.array([complex(v) for v in roots.flat()])
    fd = np.zeros_like(jac)
    for q in range(len(z)):
        e = np.zeros(len(z), dtype=complex)
        e[q] = h
        fp = np.array(bethe_residuals(model, roots.with_flat(list(z + e)), center))
        fm = np.array(bethe_residuals(model, roots.with_flat(list(z - e)), center))
        fd[:, q] = (fp - fm) / (2 * h)
    scale = max(np.max(np.abs(jac)), 1e-300)
    return float(np.max(np.abs(fd - jac)) / scale)


# -- residues and matching ----------------------------------------------------------

def contour_residue(fn: Callable[[complex], complex], z0: complex, radius: float = 1e-3, points: int = 64) -> complex:
    """Trapezoid rule for (1 / 2 pi i) * contour integral of fn around z0."""
    acc = 0j
    for q in range(points):
        w = radius * np.exp(2j * np.pi * (q + 0.5) / points)
        try:
            acc += fn(z0 + w) * w
        except ZeroDivisionError:
            return complex("inf")
    return acc / points


def residue_at_poles(model: SpectralModel, roots: BetheRoots, center: str = "crossing") -> list[complex]:
    """Numerical residue of Lambda at every Bethe pole point."""
    lam_fn = lambda z: dressed_eigenvalue(model, roots, complex(z), center)
    return [contour_residue(lam_fn, z0) for _, _, z0 in pole_points(model, roots, center)]


def default_samples(count: int = 5, seed: int = 0) -> list[complex]:
    rng = np.random.default_rng(np.random.SeedSequence([seed, 7]))
    return [complex(round(a, 6), round(b, 6)) for a, b in zip(rng.uniform(-1.5, 1.5, count), rng.uniform(0.2, 1.5, count))]


@dataclass
class SpectrumReport:
    samples: list
    eigenvalues: list
    matched: list = field(default_factory=list)
    unmatched: list = field(default_factory=list)
    rejected: list = field(default_factory=list)
    degeneracy: list = field(default_factory=list)
    dimension: int = 0
    center: str = "crossing"
    tol: float = 1e-8
    model: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    @property
    def n_matched(self) -> int:
        return self.dimension - len(self.unmatched[0]) if self.unmatched else self.dimension

    @property
    def ok(self) -> bool:
        return all(len(u) == 0 for u in self.unmatched)

    @property
    def consistent_degeneracy(self) -> bool:
        return all(d == self.degeneracy[0] for d in self.degeneracy)

    def to_json(self, timestamp: str | None = None) -> dict:
        data = {
            "model": self.model,
            "center": self.center,
            "tol": fmt_float(self.tol),
            "dimension": self.dimension,
            "samples": [_cjson(z) for z in self.samples],
            "eigenvalues": [[_cjson(z) for z in ev] for ev in self.eigenvalues],
            "degeneracy": self.degeneracy,
            "matched": self.matched,
            "unmatched": [[_cjson(z) for z in u] for u in self.unmatched],
            "rejected": self.rejected,
            "summary": {
                "matched": self.n_matched,
                "unmatched": self.dimension - self.n_matched,
                "degeneracy_consistent": self.consistent_degeneracy,
                "ok": self.ok,
            },
            "notes": self.notes,
        }
        if timestamp is not None:
            data["timestamp"] = timestamp
        return data


def spectrum_match(
    model: SpectralModel,
    tc: TwistedChain,
    samples: Sequence[complex],
    solutions: Sequence[BetheRoots],
    tol: float = 1e-8,
    center: str = "crossing",
    cluster_rtol: float = 1e-9,
) -> SpectrumReport:
    """Match dressed eigenvalues against brute-force spectra at every sample.

    A root set matches an eigenvalue cluster when its Lambda lies within the
    relative tolerance at every sample; all members of the cluster count as
    matched.  Root sets that match nowhere are listed under ``rejected``.
    """
    ev = TransferEvaluator(tc)
    spectra = _pmap(lambda z: diagonalize(ev(complex(z))), list(samples))
    clusters = [cluster(s, cluster_rtol) for s in spectra]
    covered = [[False] * len(c) for c in clusters]
    matched, rejected = [], []
    for sol in solutions:
        try:
            vals = [complex(dressed_eigenvalue(model, sol, complex(z), center)) for z in samples]
        except (ZeroDivisionError, PoleError):
            rejected.append({"roots": sol.to_json(), "reason": "pole at a sample"})
            continue
        hit, worst = [], 0.0
        for s, v in enumerate(vals):
            best, best_i = math.inf, None
            for i, (mu, _) in enumerate(clusters[s]):
                rel = abs(v - mu) / max(abs(mu), 1e-300)
                if rel < best:
                    best, best_i = rel, i
            hit.append(best_i if best <= tol else None)
            worst = max(worst, best)
        mults = {clusters[s][i][1] for s, i in enumerate(hit) if i is not None}
        if all(i is not None for i in hit) and len(mults) == 1:
            for s, i in enumerate(hit):
                covered[s][i] = True
            matched.append(
                {
                    "roots": sol.to_json(),
                    "lambda": [_cjson(v) for v in vals],
                    "max_rel_mismatch": fmt_float(worst),
                    "cluster_size": mults.pop(),
                }
            )
        else:
            rejected.append({"roots": sol.to_json(), "reason": "no consistent match", "max_rel_mismatch": fmt_float(worst)})
    unmatched = []
    for s, cl in enumerate(clusters):
        left = []
        for i, (mu, m) in enumerate(cl):
            if not covered[s][i]:
                left += [mu] * m
        unmatched.append(left)
    return SpectrumReport(
        samples=[complex(z) for z in samples],
        eigenvalues=[list(s) for s in spectra],
        matched=matched,
        unmatched=unmatched,
        rejected=rejected,
        degeneracy=[sorted(m for _, m in c) for c in clusters],
        dimension=ev.dim,
        center=center,
        tol=tol,
    )
