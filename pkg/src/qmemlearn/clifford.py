"""Uniform Clifford sampling and stabilizer-state enumeration.

A Pauli on n qubits is encoded by a pair of n-bit integers ``(x, z)`` using the
same big-endian bit order as basis indices, and stands for the Hermitian
operator ``i^|x & z| X^x Z^z``. A Clifford is fixed (up to phase) by the signed
images of ``X_j`` and ``Z_j`` for every qubit.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .qcore import pauli_phases

MAX_CLIFFORD_QUBITS = 6
MAX_STABILIZER_QUBITS = 4


def _popcount(v: int) -> int:
    return bin(v).count("1")


def symplectic_product(a: tuple[int, int], b: tuple[int, int]) -> int:
    """1 if the Paulis ``a`` and ``b`` anticommute, else 0."""
    return (_popcount(a[0] & b[1]) + _popcount(a[1] & b[0])) & 1


def _random_vector(n: int, rng: np.random.Generator) -> tuple[int, int]:
    bits = rng.integers(0, 2, size=2 * n)
    x = int("".join(map(str, bits[:n])), 2)
    z = int("".join(map(str, bits[n:])), 2)
    return x, z


def _xor(a, b):
    return a[0] ^ b[0], a[1] ^ b[1]


def random_symplectic_gf2(n: int, rng: np.random.Generator) -> list[tuple[tuple[int, int], tuple[int, int]]]:
    """Uniform element of Sp(2n, GF(2)) as the list of images ``(X_j -> v_j, Z_j -> w_j)``.

    Symplectic Gram-Schmidt: each ``v_j`` is uniform over the nonzero vectors of
    the complement of the pairs chosen so far, and ``w_j`` is uniform over the
    vectors of that complement with ``<v_j, w_j> = 1``. The number of options at
    every step does not depend on earlier choices, so the result is uniform.
    """
    pairs = []

    def project(u):
        for v, w in pairs:
            if symplectic_product(u, w):
                u = _xor(u, v)
            if symplectic_product(u, v):
                u = _xor(u, w)
        return u

    for _ in range(n):
        while True:
            v = project(_random_vector(n, rng))
            if v != (0, 0):
                break
        while True:
            w = project(_random_vector(n, rng))
            if symplectic_product(v, w):
                break
        pairs.append((v, w))
    return pairs


def apply_pauli(x: int, z: int, sign: int, vectors: np.ndarray, n: int) -> np.ndarray:
    """``sign * i^|x&z| X^x Z^z`` applied along the first axis of ``vectors``."""
    phase = pauli_phases(x, z, n, sign)
    out = np.empty_like(vectors)
    b = np.arange(1 << n)
    out[b ^ x] = phase[:, None] * vectors if vectors.ndim == 2 else phase * vectors
    return out


def canonical_phase(m: np.ndarray) -> np.ndarray:
    """Rescale so that the first entry (row-major) of modulus above 1e-9 is real positive."""
    flat = m.ravel()
    first = flat[np.argmax(np.abs(flat) > 1e-9)]
    return m * (abs(first) / first)


def clifford_from_images(n: int, images, signs) -> np.ndarray:
    """Materialize the Clifford sending ``X_j -> s_j P(v_j)`` and ``Z_j -> t_j P(w_j)``.

    ``U|0>`` is the joint +1 eigenvector of the images of all ``Z_j``, and
    ``U|b> = prod_j image(X_j)^{b_j} U|0>``.
    """
    d = 1 << n
    proj = np.eye(d, dtype=complex)
    for j, (_, w) in enumerate(images):
        proj = (proj + apply_pauli(w[0], w[1], signs[j][1], proj, n)) / 2
    col = int(np.argmax(np.linalg.norm(proj, axis=0)))
    psi0 = proj[:, col] / np.linalg.norm(proj[:, col])
    u = np.empty((d, d), dtype=complex)
    u[:, 0] = psi0
    for b in range(1, d):
        # clear the lowest set bit; qubit j lives in bit n-1-j
        low = b & -b
        j = n - 1 - (low.bit_length() - 1)
        v = images[j][0]
        u[:, b] = apply_pauli(v[0], v[1], signs[j][0], u[:, b ^ low], n)
    return canonical_phase(u)


def random_clifford_matrix(n: int, rng: np.random.Generator) -> np.ndarray:
    if not 1 <= n <= MAX_CLIFFORD_QUBITS:
        raise ValueError(f"random_clifford supports 1 <= n <= {MAX_CLIFFORD_QUBITS}, got {n}")
    images = random_symplectic_gf2(n, rng)
    signs = [tuple(int(s) for s in 1 - 2 * rng.integers(0, 2, size=2)) for _ in range(n)]
    return clifford_from_images(n, images, signs)


@lru_cache(maxsize=None)
def stabilizer_states(n: int) -> np.ndarray:
    """All n-qubit stabilizer states modulo global phase, one per row.

    Breadth-first closure of ``|0...0>`` under H, S and CNOT on every qubit
    (pair); the counts are 6, 60, 1080, 36720 for n = 1..4.
    """
    if not 1 <= n <= MAX_STABILIZER_QUBITS:
        raise ValueError(f"stabilizer enumeration supports 1 <= n <= {MAX_STABILIZER_QUBITS}")
    d = 1 << n
    h = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    s = np.diag([1, 1j])
    gates = []
    for q in range(n):
        for g in (h, s):
            gates.append(np.kron(np.kron(np.eye(1 << q), g), np.eye(1 << (n - q - 1))))
    b = np.arange(d)
    for c in range(n):
        for t in range(n):
            if c != t:
                target = b ^ (((b >> (n - 1 - c)) & 1) << (n - 1 - t))
                perm = np.zeros((d, d))
                perm[target, b] = 1
                gates.append(perm)
    start = np.zeros((1, d), dtype=complex)
    start[0, 0] = 1
    found = [start]
    seen = {_row_keys(start)[0]}
    frontier = start
    while len(frontier):
        cand = np.concatenate([frontier @ g.T for g in gates])
        cand = _canonical_rows(cand)
        fresh = []
        for row, key in zip(cand, _row_keys(cand)):
            if key not in seen:
                seen.add(key)
                fresh.append(row)
        frontier = np.array(fresh)
        if len(fresh):
            found.append(frontier)
    return np.concatenate(found)


def _canonical_rows(m: np.ndarray) -> np.ndarray:
    first = m[np.arange(len(m)), np.argmax(np.abs(m) > 1e-9, axis=1)]
    return m * (np.abs(first) / first)[:, None]


def _row_keys(m: np.ndarray) -> list[bytes]:
    r = np.ascontiguousarray(np.round(m, 6) + 0.0)
    return [row.tobytes() for row in r]


def stabilizer_count(n: int) -> int:
    """``2^n prod_{j=1}^n (2^j + 1)``."""
    out = 1 << n
    for j in range(1, n + 1):
        out *= (1 << j) + 1
    return out
