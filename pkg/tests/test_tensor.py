from __future__ import annotations

import itertools
from fractions import Fraction as F

import numpy as np
import pytest

from snpchain.field import LAM
from snpchain.tensor import (
    LabeledOperator,
    LayoutError,
    antisymmetrizer,
    exact_rank,
    gen_transpose,
    kron,
    matrix_inverse,
    partial_trace,
    permutation_op,
    q_projector,
    v_matrix,
)


def _basis(n, i):
    v = np.zeros(n, dtype=object)
    v.fill(0)
    v[i] = 1
    return v


def _rand_op(label, n, rng):
    data = np.empty((n, n), dtype=object)
    for i, j in itertools.product(range(n), repeat=2):
        data[i, j] = F(int(rng.integers(-5, 6)), int(rng.integers(1, 4)))
    return LabeledOperator([(label, n)], data)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_permutation_swaps_basis(n):
    p = permutation_op(n)
    for i, j in itertools.product(range(n), repeat=2):
        v = np.kron(_basis(n, i), _basis(n, j))
        w = np.kron(_basis(n, j), _basis(n, i))
        assert list(p.apply(v)) == list(w)
    assert (p @ p).equals(LabeledOperator.identity(p.layout))
    assert p.trace() == n


@pytest.mark.parametrize("m,n", [(2, 2), (2, 3), (3, 3), (4, 4)])
def test_antisymmetrizer_idempotent(m, n):
    a = antisymmetrizer(m, n)
    assert (a @ a).equals(a)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_antisymmetrizer_top_rank_one(n):
    assert exact_rank(antisymmetrizer(n, n).data) == 1


def test_antisymmetrizer_vanishes_above_rank():
    assert exact_rank(antisymmetrizer(3, 2).data) == 0


def test_antisymmetrizer_two_copies():
    p = permutation_op(3, "a1", "a2")
    want = (LabeledOperator.identity(p.layout) - p).scale(F(1, 2))
    assert antisymmetrizer(2, 3).equals(want)


@pytest.mark.parametrize("n,theta", [(2, 1), (2, -1), (3, 1), (4, -1)])
def test_v_squares_to_theta(n, theta):
    v = v_matrix(n, theta)
    assert (v.dot(v) == theta * np.eye(n, dtype=int)).all()


def test_odd_dimension_symplectic_rejected():
    with pytest.raises(ValueError):
        v_matrix(3, -1)


@pytest.mark.parametrize("theta", [1, -1])
def test_gen_transpose_involution_and_factorization(theta):
    rng = np.random.default_rng(1)
    a = _rand_op("a", 2, rng)
    b = _rand_op("b", 3, rng)
    ab = kron(a, b)
    assert gen_transpose(gen_transpose(ab, "a", theta), "a", theta).equals(ab)
    assert gen_transpose(ab, "a", theta).equals(kron(gen_transpose(a, "a", theta), b))


@pytest.mark.parametrize("theta", [1, -1])
def test_gen_transpose_antimorphism(theta):
    rng = np.random.default_rng(2)
    m, n = _rand_op("a", 4, rng), _rand_op("a", 4, rng)
    lhs = gen_transpose(m @ n, "a", theta)
    rhs = gen_transpose(n, "a", theta) @ gen_transpose(m, "a", theta)
    assert lhs.equals(rhs)


@pytest.mark.parametrize("n", [2, 3])
def test_q_projector(n):
    q = q_projector(n)
    qn = q.scale(F(1, n))
    assert (qn @ qn).equals(qn)
    assert q.trace() == n


def test_q_projector_rank_n2():
    assert exact_rank(q_projector(2).data) == 1


def test_partial_traces():
    rng = np.random.default_rng(3)
    m = _rand_op("b", 3, rng)
    ident = LabeledOperator.identity([("a", 2)])
    assert partial_trace(kron(ident, m), "a").equals(m.scale(2))
    assert partial_trace(permutation_op(3), "a").equals(LabeledOperator.identity([("b", 3)]))


def test_kron_associative():
    rng = np.random.default_rng(4)
    a, b, c = _rand_op("a", 2, rng), _rand_op("b", 2, rng), _rand_op("c", 3, rng)
    assert kron(kron(a, b), c).equals(kron(a, kron(b, c)))


def test_labels_auto_embed_and_commute_when_disjoint():
    rng = np.random.default_rng(5)
    a, b = _rand_op("a", 2, rng), _rand_op("b", 2, rng)
    assert (a @ b).equals(b @ a)
    assert (a @ b).labels == ("a", "b")


def test_dimension_mismatch_raises():
    with pytest.raises(LayoutError):
        LabeledOperator([("a", 2)], np.zeros((3, 3)))
    with pytest.raises(LayoutError):
        _ = LabeledOperator.identity([("a", 2)]) @ LabeledOperator.identity([("a", 3)])


def test_ratfunc_entries_and_inverse():
    p = permutation_op(2)
    r = LabeledOperator.identity(p.layout) - p.scale(1 / LAM)
    inv = matrix_inverse(r)
    assert (r @ inv).equals(LabeledOperator.identity(p.layout))


def test_json_dump_uses_strings():
    p = permutation_op(2)
    data = p.to_json()
    assert data["layout"] == [["a", 2], ["b", 2]]
    assert data["entries"][1] == ["0", "0", "1", "0"]
