from __future__ import annotations

import itertools
from fractions import Fraction as F

import numpy as np
import pytest

from snpchain.bethe import SpectralModel, lambda0
from snpchain.boundary import (
    BoundarySpec,
    TwistedChain,
    check_commuting,
    check_crossing,
    check_exchange,
    check_generator_commutators,
    check_highest_weight,
    check_sdet_factorization,
    check_snp_reflection,
    check_symmetry_relation,
    generator_span,
    k_matrix,
    sdet_k,
    sklyanin_det,
    transfer_matrix,
    twisted_monodromy,
)
from snpchain.field import LAM, RatFunc
from snpchain.tensor import LabeledOperator
from snpchain.yangian import ChainSpec, SpecError, highest_weight_vector


def _tc(n, shifts, free, theta=1, epsilon=1, rho=F(1, 3), h=1):
    b = BoundarySpec.from_free(free, n, theta, epsilon, rho, h)
    return TwistedChain(ChainSpec.fundamental(n, shifts, h), b)


def test_k_matrix_examples():
    c = F(5, 3)
    assert list(np.diag(k_matrix(BoundarySpec.from_free([c], 2)).data)) == [c, c]
    assert list(np.diag(k_matrix(BoundarySpec.from_free([c], 2, epsilon=-1)).data)) == [c, -c]
    assert list(np.diag(k_matrix(BoundarySpec.from_free([c, F(2)], 3)).data)) == [c, 2, c]


def test_boundary_validation():
    with pytest.raises(SpecError):
        BoundarySpec((F(1), F(2)))
    with pytest.raises(SpecError):
        BoundarySpec((F(1), F(1), F(1)), theta=-1)
    with pytest.raises(SpecError):
        BoundarySpec((F(0), F(0)))
    with pytest.raises(SpecError):
        BoundarySpec((F(1), F(-1)), epsilon=1)
    assert BoundarySpec.from_json(BoundarySpec((F(2), F(-2)), -1, -1, F(1, 2)).to_json()).epsilon == -1


@pytest.mark.parametrize("theta,epsilon", list(itertools.product([1, -1], repeat=2)))
def test_reflection_equation_n2(theta, epsilon):
    b = BoundarySpec.from_free([F(7, 4)], 2, theta, epsilon, F(1, 3))
    assert check_snp_reflection(k_matrix(b), F(2, 7), F(-5, 3), theta, b.rho)


def test_reflection_equation_n3():
    b = BoundarySpec.from_free([F(3, 2), F(-2)], 3, rho=F(1, 5))
    assert check_snp_reflection(k_matrix(b), F(2, 7), F(-5, 3), 1, b.rho)


def test_reflection_fails_for_asymmetric_k():
    k = LabeledOperator([("a", 2)], np.array([[1, 0], [0, 2]], dtype=object))
    assert not check_snp_reflection(k, F(2, 7), F(-5, 3))


def test_empty_chain_is_k():
    tc = TwistedChain(ChainSpec(2, ()), BoundarySpec.from_free([F(3)], 2))
    assert twisted_monodromy(tc).equals(k_matrix(tc.boundary))


def test_twisted_monodromy_polynomial():
    s = twisted_monodromy(_tc(2, [0, F(1, 2)], [F(3, 2)]))
    assert all(x.is_poly() for x in s.data.flat if isinstance(x, RatFunc))


@pytest.mark.parametrize("n,free", [(2, [F(3, 2)]), (3, [F(3, 2), F(-2)])])
@pytest.mark.parametrize("shifts", [[0], [0, F(1, 2)]])
@pytest.mark.parametrize("rho_kind", ["generic", "special"])
def test_commuting_and_crossing(n, free, shifts, rho_kind):
    rho = F(1, 3) if rho_kind == "generic" else F(-n, 2)
    tc = _tc(n, shifts, free, rho=rho)
    assert check_commuting(tc, LAM, F(3, 7))
    assert check_crossing(tc)


@pytest.mark.parametrize("theta,epsilon", [(1, 1), (-1, 1), (1, -1)])
def test_symmetry_relation_and_exchange(theta, epsilon):
    tc = _tc(2, [0], [F(5, 2)], theta, epsilon)
    assert check_symmetry_relation(tc)
    assert check_exchange(tc, F(2, 3), F(-1, 5))


def test_symmetry_relation_bare_k():
    tc = TwistedChain(ChainSpec(2, ()), BoundarySpec.from_free([F(3)], 2, -1, -1))
    assert check_symmetry_relation(tc)


@pytest.mark.parametrize("n,free", [(2, [F(3, 2)]), (3, [F(3, 2), F(-2)])])
@pytest.mark.parametrize("shifts", [[0], [0, F(1, 2)]])
def test_highest_weight_action(n, free, shifts):
    assert check_highest_weight(_tc(n, shifts, free)) == {"annihilation": True, "diagonal": True}


def test_transfer_on_vacuum_is_lambda0():
    tc = _tc(2, [0, F(1, 2)], [F(3, 2)])
    s = transfer_matrix(tc)
    v = highest_weight_vector(tc.chain)
    want = lambda0(SpectralModel.from_twisted(tc), LAM)
    assert list(s.apply(v)) == [want * x for x in v]


def test_sdet_k_closed_forms():
    z = F(3, 2)
    h, rho = 1, F(1, 3)
    b = BoundarySpec.from_free([z], 2, 1, 1, rho, h)
    assert sdet_k(b) == z * z
    b = BoundarySpec.from_free([z], 2, -1, 1, rho, h)
    assert sdet_k(b) == z * z * (2 * LAM + h * (1 + rho)) / (2 * LAM + h * (rho - 1))


@pytest.mark.parametrize("theta", [1, -1])
@pytest.mark.parametrize("shifts", [[0], [0, F(1, 2)]])
def test_sdet_identities(theta, shifts):
    res = check_sdet_factorization(_tc(2, shifts, [F(3, 2)], theta))
    assert res == {"sdet_k_closed_form": True, "sdet_qdet_factorization": True, "eval_sdet": True}


def test_sdet_bare_k_matches_closed_form_n3():
    b = BoundarySpec.from_free([F(3, 2), F(-2)], 3, rho=F(1, 5))
    assert sklyanin_det(TwistedChain(ChainSpec(3, ()), b)) == sdet_k(b)


@pytest.mark.parametrize("n,free,theta,epsilon,h", [
    (2, [F(3, 2)], 1, 1, 1),
    (2, [F(3, 2)], 1, -1, 1),
    (2, [F(3, 2)], -1, -1, 2),
    (3, [F(3, 2), F(-2)], 1, 1, F(3, 2)),
])
def test_generator_commutators(n, free, theta, epsilon, h):
    tc = _tc(n, [0, F(1, 2)], free, theta, epsilon, h=h)
    res = check_generator_commutators(tc)
    z = tc.boundary.zeta
    for (i, j), v in res.items():
        assert v["formula"]
        if z[i] == z[j]:
            assert v["commutes"]


@pytest.mark.parametrize("shifts", [[0], [0, F(1, 2)]])
def test_symplectic_generator_span(shifts):
    tc = _tc(2, shifts, [F(2)], -1, 1)
    assert generator_span(tc) == (3, True)
