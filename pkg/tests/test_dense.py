import numpy as np
import pytest

from mtensor import dense
from mtensor.core import MTensor, hadamard, unfold_mode1
from mtensor.errors import CapacityError, DimensionError, RankError
from tests.test_core import TOY_UNFOLD

TOY_COEFFS = [1.706, 2.235, 1.059, 1.235, -0.588, 0.588, 0.059, 0.588, -0.588]


def test_materialize_toy(toy):
    D = dense.materialize(toy)
    assert D.shape == (3, 3, 3)
    assert np.array_equal(D.reshape(3, 9), TOY_UNFOLD)


def test_materialize_matches_element(toy):
    from mtensor.core import element

    D = dense.materialize(toy)
    for k in range(3):
        for i in range(3):
            for j in range(3):
                assert D[k, i, j] == element(toy, k, (i, j))


def test_materialize_zero_core():
    D = dense.materialize([np.zeros((2, 3)), np.ones((2, 2))])
    assert not D.any()


def test_materialize_hadamard(rng):
    a = dense.random_cores(rng, 3, [2, 3])
    b = dense.random_cores(rng, 3, [2, 3])
    lhs = dense.materialize(hadamard(MTensor(a), MTensor(b)))
    assert np.allclose(lhs, dense.materialize(a) * dense.materialize(b), rtol=1e-14, atol=0)


def test_materialize_cap():
    with pytest.raises(CapacityError):
        dense.materialize([np.ones((2, 10))] * 3, cap=100)


def test_face_splitting_toy(toy):
    assert np.array_equal(dense.face_splitting(toy.cores), TOY_UNFOLD)


def test_face_splitting_single_core(rng):
    A = rng.uniform(size=(3, 4))
    assert np.array_equal(dense.face_splitting([A]), A)


def test_face_splitting_identity_rows():
    I = np.eye(2)
    F = dense.face_splitting([I, I])
    for k in range(2):
        assert np.array_equal(F[k], np.kron(I[k], I[k]))
    with pytest.raises(DimensionError):
        dense.face_splitting([np.eye(2), np.eye(3)])


def test_dense_lstsq_toy(toy, toy_y):
    c = dense.dense_lstsq(unfold_mode1(toy), toy_y)
    assert np.allclose(c, TOY_COEFFS, atol=1e-3)


def test_dense_lstsq_identity():
    y = np.array([1.0, -2.0, 3.0])
    assert np.allclose(dense.dense_lstsq(np.eye(3), y), y)


def test_dense_lstsq_overdetermined_normal_equations(rng):
    A = rng.uniform(-1, 1, (12, 4))
    y = rng.uniform(-1, 1, 12)
    c = dense.dense_lstsq(A, y)
    assert np.abs(A.T @ (A @ c - y)).max() < 1e-9


def test_dense_lstsq_branches_agree(rng):
    A = rng.uniform(-1, 1, (5, 5)) + 3 * np.eye(5)
    y = rng.uniform(size=5)
    assert np.allclose(dense.dense_lstsq(A, y, "rows"), dense.dense_lstsq(A, y, "cols"), atol=1e-9)


def test_dense_lstsq_singular():
    A = np.array([[1.0, 2.0], [2.0, 4.0]])
    with pytest.raises(RankError):
        dense.dense_lstsq(A, np.ones(2), "rows")


def test_random_instance_bounds():
    rng = np.random.default_rng(dense.ORACLE_SEED)
    for _ in range(50):
        cores = dense.random_instance(rng)
        assert 1 <= len(cores) <= 4
        assert 1 <= cores[0].shape[0] <= 6
        assert all(1 <= c.shape[1] <= 3 and np.abs(c).max() <= 1 for c in cores)
