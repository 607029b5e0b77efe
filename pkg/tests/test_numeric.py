from __future__ import annotations

import math
from fractions import Fraction as F

import numpy as np
import pytest

from snpchain.bethe import BetheRoots, SpectralModel, dressed_eigenvalue, lambda0
from snpchain.boundary import BoundarySpec, TwistedChain, transfer_matrix
from snpchain.field import LAM, rf_eval
from snpchain.numeric import (
    SolverConfig,
    TransferEvaluator,
    _pmap,
    bethe_solve,
    check_jacobian,
    cluster,
    contour_residue,
    default_samples,
    diagonalize,
    eval_complex,
    residue_at_poles,
    spectrum_match,
    thread_count,
)
from snpchain.tensor import LabeledOperator, permutation_op
from snpchain.yangian import ChainSpec, r_matrix


def _tc(ell, rho=F(0), n=2, free=(1,)):
    b = BoundarySpec.from_free(list(free), n, 1, 1, rho, 1)
    return TwistedChain(ChainSpec.fundamental(n, [0] * ell), b)


def test_eval_complex_identity_and_r():
    ident = LabeledOperator.identity([("a", 3)])
    assert np.array_equal(eval_complex(ident, 0.3 + 2j), np.eye(3))
    got = eval_complex(r_matrix(LAM, 2), 1.0 + 0j)
    want = np.eye(4) - permutation_op(2).data.astype(float)
    assert np.max(np.abs(got - want)) < 1e-15


def test_eval_complex_transfer_matches_exact_entries():
    tc = _tc(1, F(1, 3))
    s = transfer_matrix(tc)
    x = F(2, 7)
    got = eval_complex(s, complex(x))
    exact = np.array([[float(rf_eval(e, x)) if hasattr(e, "num") else float(e) for e in row] for row in s.data])
    assert np.max(np.abs(got - exact)) < 1e-13


def test_diagonalize_and_cluster():
    assert list(diagonalize(np.diag([2.0, 1.0]).astype(complex))) == [1, 2]
    cl = cluster(np.array([1.0, 1.0 + 1e-12, 3.0]))
    assert [m for _, m in cl] == [2, 1]


def test_degeneracy_pattern_is_sample_independent_and_contains_vacuum():
    tc = _tc(2, F(1, 3))
    ev = TransferEvaluator(tc)
    model = SpectralModel.from_twisted(tc)
    patterns = []
    for z in default_samples(3, seed=1):
        vals = diagonalize(ev(z))
        patterns.append(sorted(m for _, m in cluster(vals)))
        lam0 = complex(lambda0(model, z))
        assert np.min(np.abs(vals - lam0)) <= 1e-10 * abs(lam0)
    assert all(p == patterns[0] for p in patterns)


def test_jacobian_matches_finite_differences():
    model = SpectralModel.from_twisted(_tc(3, F(1, 3)))
    rng = np.random.default_rng(0)
    for _ in range(5):
        z = rng.normal(size=2) + 1j * rng.normal(size=2)
        assert check_jacobian(model, BetheRoots([2], [list(z)])) < 1e-6


def test_solver_empty_occupation():
    model = SpectralModel.from_twisted(_tc(2))
    sols = bethe_solve(model, [0])
    assert len(sols) == 1 and sols[0].flat() == []


def test_solver_finds_both_single_root_solutions():
    model = SpectralModel.from_twisted(_tc(2))
    sols = bethe_solve(model, [1])
    roots = sorted(abs(complex(s.flat()[0])) for s in sols)
    assert len(roots) == 2
    assert roots[0] < 1e-12 and abs(roots[1] - math.sqrt(0.5)) < 1e-12


def test_solver_deterministic():
    model = SpectralModel.from_twisted(_tc(2, F(1, 3)))
    cfg = SolverConfig(rng_seed=7, restarts=30)
    a = [s.to_json() for s in bethe_solve(model, [1], cfg)]
    b = [s.to_json() for s in bethe_solve(model, [1], cfg)]
    assert a == b


def test_solver_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(tol=0)
    with pytest.raises(ValueError):
        SolverConfig(restarts=0)
    with pytest.raises(ValueError):
        SolverConfig(damping=1.5)


def test_contour_residue_simple_pole():
    assert abs(contour_residue(lambda z: 3 / (z - 1) + z, 1.0) - 3) < 1e-12
    assert abs(contour_residue(lambda z: z**2, 0.5)) < 1e-15


def test_residue_vanishes_on_solutions_only():
    model = SpectralModel.from_twisted(_tc(2))
    root = BetheRoots([1], [[complex(math.sqrt(0.5))]])
    assert max(abs(r) for r in residue_at_poles(model, root)) < 1e-8
    off = BetheRoots([1], [[complex(math.sqrt(0.5) + 1e-3)]])
    assert max(abs(r) for r in residue_at_poles(model, off)) > 1e-5


def test_spectrum_match_single_site():
    tc = _tc(1)
    model = SpectralModel.from_twisted(tc)
    rep = spectrum_match(model, tc, default_samples(5), bethe_solve(model, [0]))
    assert rep.ok and rep.n_matched == 2 and rep.dimension == 2


def test_spectrum_match_negative_control():
    tc = _tc(2)
    model = SpectralModel.from_twisted(tc)
    bad = [BetheRoots.empty(2), BetheRoots([1], [[0.3 + 0j]])]
    rep = spectrum_match(model, tc, default_samples(5), bad)
    assert not rep.ok
    assert rep.rejected and rep.rejected[0]["reason"] == "no consistent match"


def test_report_counts_sum_to_dimension():
    tc = _tc(2)
    model = SpectralModel.from_twisted(tc)
    rep = spectrum_match(model, tc, default_samples(2), [BetheRoots.empty(2)])
    for u in rep.unmatched:
        assert rep.dimension - len(u) == rep.n_matched


def test_thread_cap(monkeypatch):
    monkeypatch.setenv("SNPCHAIN_THREADS", "3")
    assert thread_count() == 3
    assert _pmap(lambda x: x * x, list(range(20))) == [x * x for x in range(20)]
    monkeypatch.setenv("SNPCHAIN_THREADS", "junk")
    assert thread_count() == 1


def test_dressed_value_is_transfer_eigenvalue_for_solution():
    tc = _tc(2)
    model = SpectralModel.from_twisted(tc)
    root = BetheRoots([1], [[complex(math.sqrt(0.5))]])
    z = 0.4 + 0.9j
    lam = complex(dressed_eigenvalue(model, root, z, "crossing"))
    vals = diagonalize(TransferEvaluator(tc)(z))
    assert np.min(np.abs(vals - lam)) < 1e-10 * abs(lam)
