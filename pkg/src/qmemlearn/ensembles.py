"""Seeded Haar-random group elements, Haar states, Cliffords and signed Paulis."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .clifford import MAX_CLIFFORD_QUBITS, random_clifford_matrix
from .qcore import PauliString, PureState

MEMBERSHIP_ATOL = 1e-9


class Group(enum.Enum):
    UNITARY = "u"
    ORTHOGONAL = "o"
    SYMPLECTIC = "sp"


def symplectic_form(d: int) -> np.ndarray:
    """``[[0, I], [-I, 0]]`` with ``d/2`` blocks."""
    if d % 2 or d < 2:
        raise ValueError(f"symplectic form needs even d >= 2, got {d}")
    h = d // 2
    j = np.zeros((d, d))
    j[:h, h:] = np.eye(h)
    j[h:, :h] = -np.eye(h)
    return j


def membership_error(group: Group, a: np.ndarray) -> float:
    """Largest violation of the defining relations of ``group`` by ``a``."""
    d = a.shape[-1]
    eye = np.eye(d)
    err = np.abs(np.swapaxes(a.conj(), -1, -2) @ a - eye).max()
    if group is Group.ORTHOGONAL:
        err = max(err, np.abs(a.imag).max())
    elif group is Group.SYMPLECTIC:
        j = symplectic_form(d)
        err = max(err, np.abs(a @ j @ np.swapaxes(a, -1, -2) - j).max())
    return float(err)


@dataclass(frozen=True)
class GroupElement:
    group: Group
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("group element must be a square matrix")
        if self.group is Group.SYMPLECTIC and m.shape[0] % 2:
            raise ValueError("symplectic elements need even dimension")
        err = membership_error(self.group, m)
        if err > MEMBERSHIP_ATOL:
            raise ValueError(f"matrix is not in {self.group.name}: violation {err:.2e}")
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class SeededRng:
    """Reproducible, independent streams keyed by ``(root_seed, stream_id)``."""

    root_seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence([self.root_seed & (2 ** 64 - 1), self.stream_id]))

    def child(self, stream_id: int) -> "SeededRng":
        return SeededRng(self.root_seed, stream_id)


def _ginibre(shape, rng: np.random.Generator) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def haar_unitary_batch(d: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` Haar unitaries of size ``d`` as a ``(count, d, d)`` array."""
    if d < 1:
        raise ValueError("d must be positive")
    q, r = np.linalg.qr(_ginibre((count, d, d), rng))
    diag = np.diagonal(r, axis1=-2, axis2=-1)
    return q * (diag / np.abs(diag))[:, None, :]


def haar_orthogonal_batch(d: int, count: int, rng: np.random.Generator) -> np.ndarray:
    if d < 1:
        raise ValueError("d must be positive")
    q, r = np.linalg.qr(rng.standard_normal((count, d, d)))
    return q * np.sign(np.diagonal(r, axis1=-2, axis2=-1))[:, None, :]


def haar_symplectic_batch(d: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """Haar elements of Sp(d/2) in the form ``S J S^t = J``.

    Quaternionic Gram-Schmidt on a Gaussian matrix: column ``j`` is a Gaussian
    vector made orthogonal to the previous columns ``c_i`` and their partners
    ``-J conj(c_i)``, and column ``j + d/2`` is the partner of column ``j``.
    """
    if d % 2 or d < 2:
        raise ValueError(f"symplectic dimension must be even and >= 2, got {d}")
    h = d // 2
    j = symplectic_form(d)
    g = _ginibre((count, d, h), rng)
    out = np.empty((count, d, d), dtype=complex)
    for col in range(h):
        v = g[:, :, col]
        for prev in range(col):
            for basis in (out[:, :, prev], out[:, :, prev + h]):
                v = v - basis * np.einsum("bi,bi->b", basis.conj(), v)[:, None]
        v = v / np.linalg.norm(v, axis=1)[:, None]
        out[:, :, col] = v
        out[:, :, col + h] = -(v.conj() @ j.T)
    return out


def haar_unitary(d: int, rng: np.random.Generator) -> GroupElement:
    return GroupElement(Group.UNITARY, haar_unitary_batch(d, 1, rng)[0])


def haar_orthogonal(d: int, rng: np.random.Generator) -> GroupElement:
    return GroupElement(Group.ORTHOGONAL, haar_orthogonal_batch(d, 1, rng)[0].astype(complex))


def haar_symplectic(d: int, rng: np.random.Generator) -> GroupElement:
    return GroupElement(Group.SYMPLECTIC, haar_symplectic_batch(d, 1, rng)[0])


_SAMPLERS = {
    Group.UNITARY: haar_unitary,
    Group.ORTHOGONAL: haar_orthogonal,
    Group.SYMPLECTIC: haar_symplectic,
}

_BATCH_SAMPLERS = {
    Group.UNITARY: haar_unitary_batch,
    Group.ORTHOGONAL: haar_orthogonal_batch,
    Group.SYMPLECTIC: haar_symplectic_batch,
}


def haar_element(group: Group, d: int, rng: np.random.Generator) -> GroupElement:
    return _SAMPLERS[group](d, rng)


def haar_batch(group: Group, d: int, count: int, rng: np.random.Generator) -> np.ndarray:
    return _BATCH_SAMPLERS[group](d, count, rng)


def haar_state_vectors(d: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` Haar-random unit vectors in C^d, one per row."""
    v = _ginibre((count, d), rng)
    return v / np.linalg.norm(v, axis=1)[:, None]


def haar_pure_state(n: int, rng: np.random.Generator) -> PureState:
    if n < 1:
        raise ValueError("n must be at least 1")
    return PureState(n, haar_state_vectors(1 << n, 1, rng)[0])


def random_clifford(n: int, rng: np.random.Generator) -> GroupElement:
    """Uniform n-qubit Clifford (1 <= n <= 6) with the first nonzero entry real positive."""
    if not 1 <= n <= MAX_CLIFFORD_QUBITS:
        raise ValueError(f"random_clifford supports 1 <= n <= {MAX_CLIFFORD_QUBITS}, got {n}")
    return GroupElement(Group.UNITARY, random_clifford_matrix(n, rng))


def random_signed_pauli(n: int, rng: np.random.Generator) -> PauliString:
    """Uniform over the 2(4^n - 1) signed non-identity Paulis."""
    if n < 1:
        raise ValueError("n must be at least 1")
    index = int(rng.integers(1, 4 ** n))
    sign = 1 if rng.random() < 0.5 else -1
    return PauliString.from_index(n, index, sign)
