"""Dense multi-qubit states, Pauli operators, channels and measurements.

Qubit 0 is the leftmost (most significant) tensor factor, so basis index
``b`` of an n-qubit register has qubit ``j`` in bit ``n - 1 - j``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable, Sequence

import numpy as np

if TYPE_CHECKING:
    from .ensembles import GroupElement

ATOL = 1e-9

_I2 = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI_GENERATORS = {"I": _I2, "X": _X, "Y": _Y, "Z": _Z}


class NumericalError(RuntimeError):
    """A computed probability or invariant left its admissible range."""


def _dim_to_qubits(dim: int) -> int:
    n = dim.bit_length() - 1
    if dim < 1 or 1 << n != dim:
        raise ValueError(f"dimension {dim} is not a power of two")
    return n


# --------------------------------------------------------------------------
# States
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class PureState:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).ravel()
        if amps.shape != (1 << self.n_qubits,):
            raise ValueError(f"expected {1 << self.n_qubits} amplitudes, got {amps.shape[0]}")
        if abs(np.linalg.norm(amps) - 1) > ATOL:
            raise ValueError("state is not normalized")
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_vector(cls, vec) -> "PureState":
        vec = np.asarray(vec, dtype=complex).ravel()
        return cls(_dim_to_qubits(vec.size), vec / np.linalg.norm(vec))

    @classmethod
    def basis(cls, n: int, index: int = 0) -> "PureState":
        v = np.zeros(1 << n, dtype=complex)
        v[index] = 1
        return cls(n, v)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def density(self) -> "DensityMatrix":
        return DensityMatrix.from_pure(self)


@dataclass(frozen=True)
class DensityMatrix:
    n_qubits: int
    matrix: np.ndarray
    validate: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        dim = 1 << self.n_qubits
        if m.shape != (dim, dim):
            raise ValueError(f"expected a {dim}x{dim} matrix, got {m.shape}")
        if self.validate:
            check_density(m)
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_matrix(cls, m, validate: bool = True) -> "DensityMatrix":
        m = np.asarray(m, dtype=complex)
        return cls(_dim_to_qubits(m.shape[0]), m, validate)

    @classmethod
    def from_pure(cls, psi: PureState | np.ndarray) -> "DensityMatrix":
        v = psi.amplitudes if isinstance(psi, PureState) else np.asarray(psi, dtype=complex).ravel()
        return cls(_dim_to_qubits(v.size), np.outer(v, v.conj()), validate=False)

    @classmethod
    def maximally_mixed(cls, n: int) -> "DensityMatrix":
        d = 1 << n
        return cls(n, np.eye(d, dtype=complex) / d, validate=False)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def purity(self) -> float:
        return float(np.real(np.vdot(self.matrix, self.matrix)))

    def expectation(self, op: np.ndarray) -> float:
        return float(np.real(np.trace(op @ self.matrix)))


def check_density(m: np.ndarray, atol: float = ATOL) -> None:
    """Raise ``ValueError`` unless ``m`` is Hermitian, PSD and unit-trace within ``atol``."""
    if np.max(np.abs(m - m.conj().T), initial=0) > atol:
        raise ValueError("matrix is not Hermitian")
    if abs(np.trace(m) - 1) > atol:
        raise ValueError("trace is not 1")
    if np.linalg.eigvalsh(m).min() < -atol:
        raise ValueError("matrix is not positive semidefinite")


# --------------------------------------------------------------------------
# Paulis
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class PauliString:
    letters: str
    sign: int = 1

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        if any(c not in "IXYZ" for c in self.letters):
            raise ValueError(f"invalid Pauli letters {self.letters!r}")

    @classmethod
    def from_str(cls, text: str) -> "PauliString":
        text = text.strip()
        sign = 1
        if text[:1] in "+-":
            sign = -1 if text[0] == "-" else 1
            text = text[1:]
        return cls(text, sign)

    @classmethod
    def from_index(cls, n: int, index: int, sign: int = 1) -> "PauliString":
        """Base-4 digits of ``index`` (qubit 0 most significant) over I, X, Y, Z."""
        letters = []
        for j in range(n):
            letters.append("IXYZ"[(index >> (2 * (n - 1 - j))) & 3])
        return cls("".join(letters), sign)

    @property
    def n_qubits(self) -> int:
        return len(self.letters)

    def is_identity(self) -> bool:
        return set(self.letters) <= {"I"}

    def __str__(self) -> str:
        return ("+" if self.sign > 0 else "-") + self.letters


def pauli_matrix(p: PauliString) -> np.ndarray:
    """``sign * P_1 (x) ... (x) P_n`` as a dense matrix."""
    out = np.array([[complex(p.sign)]])
    for c in p.letters:
        out = np.kron(out, PAULI_GENERATORS[c])
    return out


def pauli_xz(p: PauliString) -> tuple[int, int]:
    """Bit masks ``(x, z)`` with ``P = sign * i^|x&z| X^x Z^z`` (Y carries both bits)."""
    x = z = 0
    n = p.n_qubits
    for j, c in enumerate(p.letters):
        bit = 1 << (n - 1 - j)
        if c in "XY":
            x |= bit
        if c in "ZY":
            z |= bit
    return x, z


def pauli_phases(x: int, z: int, n: int, sign: int = 1) -> np.ndarray:
    """``phase[b]`` such that ``P|b> = phase[b] |b ^ x>``."""
    b = np.arange(1 << n)
    zb = b & z
    parity = np.zeros_like(b)
    for j in range(n):
        parity ^= (zb >> j) & 1
    return sign * (1j ** bin(x & z).count("1")) * (1 - 2 * parity)


def pauli_expectation(p: PauliString, rho: DensityMatrix | np.ndarray) -> float:
    """``Tr(P rho)`` in O(2^n) time."""
    m = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho)
    n = p.n_qubits
    x, z = pauli_xz(p)
    phase = pauli_phases(x, z, n, p.sign)
    b = np.arange(1 << n)
    return float(np.real(np.sum(phase[b ^ x] * m[b ^ x, b])))


def pauli_expectations_vectors(p: PauliString, states: np.ndarray) -> np.ndarray:
    """``<s|P|s>`` for every row ``s`` of ``states``."""
    n = p.n_qubits
    x, z = pauli_xz(p)
    phase = pauli_phases(x, z, n, p.sign)
    b = np.arange(1 << n)
    return np.real(np.sum(states[:, b ^ x].conj() * phase * states, axis=1))


def all_paulis(n: int, include_identity: bool = False) -> list[PauliString]:
    start = 0 if include_identity else 1
    return [PauliString.from_index(n, i) for i in range(start, 4 ** n)]


def swap_operator(n: int) -> np.ndarray:
    """Permutation matrix exchanging two n-qubit registers."""
    if n < 1:
        raise ValueError("n must be at least 1")
    d = 1 << n
    idx = np.arange(d * d)
    a, b = divmod(idx, d)
    out = np.zeros((d * d, d * d), dtype=complex)
    out[b * d + a, idx] = 1
    return out


def permutation_operator(d: int, perm: Sequence[int]) -> np.ndarray:
    """Matrix of ``psi_1 (x) ... (x) psi_T -> psi_{p^-1(1)} (x) ... (x) psi_{p^-1(T)}``.

    ``perm[s]`` is the image of slot ``s`` (0-based), so the tensor factor
    found in slot ``s`` of the input ends up in slot ``perm[s]``.
    """
    t = len(perm)
    inv = [0] * t
    for s, ps in enumerate(perm):
        inv[ps] = s
    eye = np.eye(d ** t, dtype=complex).reshape((d,) * t + (d ** t,))
    return eye.transpose(inv + [t]).reshape(d ** t, d ** t)


# --------------------------------------------------------------------------
# Channels
# --------------------------------------------------------------------------


class ChannelKind(enum.Enum):
    DEPOLARIZING = "depolarizing"
    CONJUGATION = "conjugation"


@dataclass(frozen=True)
class ChannelSpec:
    kind: ChannelKind
    n_qubits: int
    conjugator: "GroupElement | None" = None

    def __post_init__(self):
        if self.kind is ChannelKind.CONJUGATION:
            if self.conjugator is None:
                raise ValueError("conjugation channel needs a conjugator")
            if self.conjugator.dim != 1 << self.n_qubits:
                raise ValueError("conjugator dimension does not match n_qubits")

    @classmethod
    def depolarizing(cls, n: int) -> "ChannelSpec":
        return cls(ChannelKind.DEPOLARIZING, n)

    @classmethod
    def conjugation(cls, g: "GroupElement") -> "ChannelSpec":
        return cls(ChannelKind.CONJUGATION, _dim_to_qubits(g.dim), g)


def apply_channel(c: ChannelSpec, rho: DensityMatrix, ancilla: int = 0) -> DensityMatrix:
    """``(C (x) id_aux)(rho)`` where the channel acts on the first ``n`` qubits."""
    if rho.n_qubits != c.n_qubits + ancilla:
        raise ValueError(f"input has {rho.n_qubits} qubits, expected {c.n_qubits}+{ancilla}")
    d = 1 << c.n_qubits
    if c.kind is ChannelKind.DEPOLARIZING:
        aux = partial_trace(rho, range(c.n_qubits, rho.n_qubits)).matrix
        out = np.kron(np.eye(d) / d, aux)
    else:
        a = c.conjugator.matrix
        if ancilla:
            a = np.kron(a, np.eye(1 << ancilla))
        out = a @ rho.matrix @ a.conj().T
    return DensityMatrix(rho.n_qubits, out, validate=False)


def partial_trace(rho: DensityMatrix | np.ndarray, keep: Iterable[int]) -> DensityMatrix:
    """Reduced state on the qubits in ``keep`` (0-based), in increasing qubit order.

    An empty ``keep`` returns the trace as a 1x1 matrix.
    """
    m = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    n = _dim_to_qubits(m.shape[0])
    keep = sorted(set(keep))
    if any(not 0 <= q < n for q in keep):
        raise ValueError("qubit index out of range")
    drop = [q for q in range(n) if q not in keep]
    t = m.reshape((2,) * (2 * n))
    # move kept row axes, kept column axes, then traced row/column axes
    order = keep + [n + q for q in keep] + drop + [n + q for q in drop]
    t = t.transpose(order)
    k, r = 1 << len(keep), 1 << len(drop)
    t = t.reshape(k, k, r, r)
    out = np.trace(t, axis1=2, axis2=3)
    return DensityMatrix(len(keep), out, validate=False)


# --------------------------------------------------------------------------
# Measurements
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Povm:
    elements: tuple[np.ndarray, ...]

    def __post_init__(self):
        elems = tuple(np.asarray(e, dtype=complex) for e in self.elements)
        if not elems:
            raise ValueError("empty POVM")
        dim = elems[0].shape[0]
        if any(e.shape != (dim, dim) for e in elems):
            raise ValueError("POVM elements must share one square shape")
        for e in elems:
            if np.max(np.abs(e - e.conj().T)) > ATOL or np.linalg.eigvalsh(e).min() < -ATOL:
                raise ValueError("POVM element is not PSD")
        if np.max(np.abs(sum(elems) - np.eye(dim))) > ATOL:
            raise ValueError("POVM elements do not sum to the identity")
        object.__setattr__(self, "elements", elems)

    @property
    def dim(self) -> int:
        return self.elements[0].shape[0]

    def __len__(self) -> int:
        return len(self.elements)

    @classmethod
    def computational(cls, n: int) -> "Povm":
        d = 1 << n
        return cls(tuple(np.diag(np.eye(d)[i]).astype(complex) for i in range(d)))

    @classmethod
    def from_basis(cls, basis: np.ndarray) -> "Povm":
        """Projective measurement onto the columns of a unitary ``basis``."""
        return cls(tuple(np.outer(v, v.conj()) for v in np.asarray(basis).T))


def born_probabilities(rho: DensityMatrix, m: Povm) -> np.ndarray:
    if m.dim != rho.dim:
        raise ValueError("POVM dimension does not match the state")
    p = np.array([np.real(np.vdot(f, rho.matrix)) for f in m.elements])
    return _checked_probabilities(p)


def _checked_probabilities(p: np.ndarray) -> np.ndarray:
    if p.min(initial=0) < -ATOL:
        raise NumericalError(f"negative probability {p.min()}")
    if abs(p.sum() - 1) > ATOL:
        raise NumericalError(f"probabilities sum to {p.sum()}")
    p = np.clip(p, 0, None)
    return p / p.sum()


def measure_povm(rho: DensityMatrix, m: Povm, rng: np.random.Generator, shots: int | None = None):
    """Sample outcome indices with probability ``Tr(F_s rho)``."""
    p = born_probabilities(rho, m)
    if shots is None:
        return int(rng.choice(len(p), p=p))
    return rng.choice(len(p), size=shots, p=p)


def sample_basis(probs: np.ndarray, rng: np.random.Generator, shots: int | None = None):
    """Sample computational-basis outcomes from a probability vector."""
    p = _checked_probabilities(np.asarray(probs, dtype=float))
    if shots is None:
        return int(rng.choice(p.size, p=p))
    return rng.choice(p.size, size=shots, p=p)


def rank1_refine(m: Povm, cutoff: float = 1e-12) -> tuple[Povm, list[int]]:
    """Split every element into weighted rank-1 projectors ``w |v><v|``.

    Returns the refined POVM and, per child, the index of its parent element.
    Eigenvalues below ``cutoff`` are dropped.
    """
    children, parents = [], []
    for s, f in enumerate(m.elements):
        w, v = np.linalg.eigh(f)
        for lam, vec in zip(w, v.T):
            if lam > cutoff:
                children.append(lam * np.outer(vec, vec.conj()))
                parents.append(s)
    return Povm(tuple(children)), parents


def post_measurement_state(rho: DensityMatrix, m: Povm, outcome: int) -> DensityMatrix:
    """``sqrt(F) rho sqrt(F) / Tr(F rho)`` for the observed element ``F``."""
    f = m.elements[outcome]
    w, v = np.linalg.eigh(f)
    root = (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T
    out = root @ rho.matrix @ root
    p = np.real(np.trace(out))
    if p <= 0:
        raise NumericalError("outcome has zero probability")
    return DensityMatrix(rho.n_qubits, out / p, validate=False)


def swap_test(rho1: DensityMatrix, rho2: DensityMatrix, rng: np.random.Generator) -> int:
    """0 with probability ``(1 + Tr(rho1 rho2)) / 2``, else 1."""
    if rho1.dim != rho2.dim:
        raise ValueError("swap test needs equal dimensions")
    overlap = float(np.real(np.vdot(rho1.matrix.conj().T, rho2.matrix)))
    p0 = min(max((1 + overlap) / 2, 0.0), 1.0)
    return 0 if rng.random() < p0 else 1


# --------------------------------------------------------------------------
# Bell-basis measurement
# --------------------------------------------------------------------------


class BellState(enum.IntEnum):
    PHI_PLUS = 0
    PHI_MINUS = 1
    PSI_PLUS = 2
    PSI_MINUS = 3


# P (x) P eigenvalue on each Bell state, rows X, Y, Z.
BELL_EIGENVALUES = {
    "I": np.array([1, 1, 1, 1]),
    "X": np.array([1, -1, 1, -1]),
    "Y": np.array([-1, 1, 1, -1]),
    "Z": np.array([1, 1, -1, -1]),
}


def _walsh_hadamard(n: int) -> np.ndarray:
    idx = np.arange(1 << n)
    parity = np.zeros((idx.size, idx.size), dtype=np.int64)
    both = idx[:, None] & idx[None, :]
    for j in range(n):
        parity ^= (both >> j) & 1
    return (1 - 2 * parity) / math.sqrt(1 << n)


def _bell_rotate(vectors: np.ndarray, n: int) -> np.ndarray:
    """Apply CNOT(j -> j+n) then H(j) for every pair to the columns of ``vectors``."""
    d = 1 << n
    m = vectors.shape[1]
    v = vectors.reshape(d, d, m)
    a = np.arange(d)
    v = v[a[:, None], a[None, :] ^ a[:, None], :]
    return np.tensordot(_walsh_hadamard(n), v, axes=(1, 0)).reshape(d * d, m)


def bell_label_table(n: int) -> np.ndarray:
    """``table[outcome, j]`` is the Bell label of pair ``j`` for a joint outcome index.

    After rotation the joint index is ``A * 2^n + B``; pair ``j`` reads bit ``j``
    of both halves, and the bits (a, b) encode the label ``a + 2 b``.
    """
    d = 1 << n
    idx = np.arange(d * d)
    hi, lo = idx // d, idx % d
    shifts = n - 1 - np.arange(n)
    a = (hi[:, None] >> shifts) & 1
    b = (lo[:, None] >> shifts) & 1
    return (a + 2 * b).astype(np.int8)


def bell_probabilities(pair: DensityMatrix) -> np.ndarray:
    """Joint outcome distribution of the qubit-wise Bell measurement on 2n qubits."""
    if pair.n_qubits % 2:
        raise ValueError("Bell measurement needs an even number of qubits")
    n = pair.n_qubits // 2
    x = _bell_rotate(pair.matrix, n)
    y = _bell_rotate(x.conj().T, n)
    return _checked_probabilities(np.real(np.diag(y)).copy())


def bell_probabilities_product(rho: DensityMatrix) -> np.ndarray:
    """Bell outcome distribution on ``rho (x) rho`` without forming the 2n-qubit matrix."""
    n = rho.n_qubits
    w, v = np.linalg.eigh(rho.matrix)
    keep = w > 1e-13
    w, v = w[keep], v[:, keep]
    r = w.size
    d = 1 << n
    prods = np.einsum("ai,bj->abij", v, v).reshape(d * d, r * r)
    amps = _bell_rotate(prods, n)
    weights = np.outer(w, w).ravel()
    return _checked_probabilities(np.abs(amps) ** 2 @ weights)


def bell_basis_measure(pair: DensityMatrix, rng: np.random.Generator) -> np.ndarray:
    """Measure pairs (j, j+n) of a 2n-qubit state in the Bell basis; returns n labels."""
    p = bell_probabilities(pair)
    n = pair.n_qubits // 2
    return bell_label_table(n)[sample_basis(p, rng)].copy()
