import numpy as np
import pytest
from hypothesis import given, strategies as st

from qmemlearn.ensembles import (
    Group,
    GroupElement,
    SeededRng,
    haar_batch,
    haar_element,
    haar_orthogonal,
    haar_pure_state,
    haar_state_vectors,
    haar_symplectic,
    haar_unitary,
    membership_error,
    random_signed_pauli,
    symplectic_form,
)
from qmemlearn.qcore import pauli_matrix


@pytest.mark.parametrize("group,d", [(g, d) for g in Group for d in (2, 4, 6)])
def test_every_draw_is_a_member(group, d):
    batch = haar_batch(group, d, 500, np.random.default_rng(d))
    for a in batch:
        assert membership_error(group, a) <= 1e-9
    if group is Group.ORTHOGONAL:
        assert np.abs(batch.imag).max() <= 1e-12


def test_symplectic_relation_and_determinant():
    rng = np.random.default_rng(1)
    j = symplectic_form(4)
    for a in haar_batch(Group.SYMPLECTIC, 4, 1000, rng):
        assert np.abs(a @ j @ a.T - j).max() <= 1e-9
    for a in haar_batch(Group.SYMPLECTIC, 2, 200, rng):
        assert abs(np.linalg.det(a) - 1) <= 1e-9


def test_odd_symplectic_dimension_rejected(rng):
    with pytest.raises(ValueError):
        haar_symplectic(3, rng)


def test_group_element_rejects_non_members():
    with pytest.raises(ValueError):
        GroupElement(Group.UNITARY, 2 * np.eye(2))
    with pytest.raises(ValueError):
        GroupElement(Group.ORTHOGONAL, np.diag([1, 1j]))
    with pytest.raises(ValueError):
        GroupElement(Group.SYMPLECTIC, np.diag([1, -1]).astype(complex))


@given(st.integers(0, 2 ** 63 - 1), st.integers(0, 1000))
def test_seeded_streams_reproduce(seed, stream):
    a = SeededRng(seed, stream).generator().random(4)
    b = SeededRng(seed, stream).generator().random(4)
    c = SeededRng(seed, stream + 1).generator().random(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_deterministic_matrices():
    for g in Group:
        a = haar_element(g, 4, SeededRng(3, 9).generator()).matrix
        b = haar_element(g, 4, SeededRng(3, 9).generator()).matrix
        assert np.array_equal(a, b)


def test_unitary_examples():
    rng = np.random.default_rng(2)
    assert abs(abs(haar_unitary(1, rng).matrix[0, 0]) - 1) < 1e-12
    u4 = haar_batch(Group.UNITARY, 4, 100_000, rng)
    assert abs(np.mean(np.abs(u4[:, 0, 0]) ** 2) - 0.25) < 0.01
    u8 = haar_batch(Group.UNITARY, 8, 100_000, rng)
    assert abs(np.mean(np.abs(np.trace(u8, axis1=1, axis2=2)) ** 2) - 1) < 0.05


def test_orthogonal_examples():
    rng = np.random.default_rng(3)
    signs = np.array([haar_orthogonal(1, rng).matrix[0, 0].real for _ in range(4000)])
    assert set(np.round(signs)) == {-1.0, 1.0}
    assert abs(np.mean(signs)) < 4 / np.sqrt(4000)
    o = haar_batch(Group.ORTHOGONAL, 4, 100_000, rng)
    assert abs(np.mean(o[:, 0, 0] ** 2) - 0.25) < 0.01
    assert abs(np.mean(o[:, 0, 0] * o[:, 0, 1])) < 0.01


def test_pure_state_examples():
    rng = np.random.default_rng(4)
    v3 = haar_state_vectors(8, 100_000, rng)
    assert abs(np.mean(np.abs(v3[:, 0]) ** 2) - 1 / 8) < 0.005
    v2 = haar_state_vectors(4, 100_000, rng)
    assert abs(np.mean(np.abs(v2[:, 0]) ** 4) - 0.1) < 0.005
    for _ in range(50):
        assert abs(np.linalg.norm(haar_pure_state(3, rng).amplitudes) - 1) < 1e-12


def test_random_signed_pauli_distribution():
    rng = np.random.default_rng(5)
    draws = 100_000
    keys = [str(random_signed_pauli(1, rng)) for _ in range(draws)]
    labels, counts = np.unique(keys, return_counts=True)
    assert len(labels) == 6
    p = 1 / 6
    assert np.all(np.abs(counts / draws - p) <= 4 * np.sqrt(p * (1 - p) / draws))
    for _ in range(200):
        q = random_signed_pauli(3, rng)
        assert not q.is_identity()
        m = pauli_matrix(q)
        assert np.allclose(m @ m, np.eye(8))
