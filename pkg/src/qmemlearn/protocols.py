"""Learning protocols for states and channels, with and without quantum memory.

Memoryless protocols measure each copy (or each channel output) on its own and
keep only classical outcomes. The two memory protocols, Bell sampling and the
swap test, hold one extra n-qubit register and act on two copies jointly.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .clifford import MAX_STABILIZER_QUBITS, stabilizer_states
from .ensembles import haar_unitary_batch, random_clifford, symplectic_form
from .qcore import (
    ChannelKind,
    ChannelSpec,
    DensityMatrix,
    PauliString,
    PureState,
    apply_channel,
    bell_probabilities_product,
    pauli_expectation,
    pauli_expectations_vectors,
    pauli_xz,
    sample_basis,
    swap_test,
)

PURE_TOL = 1e-10


class BudgetExhausted(RuntimeError):
    """A learner asked for more copies or queries than it was granted."""


class Decision(str, enum.Enum):
    MAXIMALLY_MIXED = "MaximallyMixed"
    ALTERNATIVE = "Alternative"
    PURE = "Pure"
    UNIFORM = "Uniform"
    FAR = "Far"
    DEPOLARIZING = "Depolarizing"
    FIXED_CONJUGATION = "FixedConjugation"
    UNITARY = "Unitary"
    ORTHOGONAL = "Orthogonal"
    SYMPLECTIC = "Symplectic"


def _pure_vector(rho: DensityMatrix) -> np.ndarray | None:
    if abs(rho.purity() - 1) > PURE_TOL:
        return None
    # a rank-one matrix: any nonzero column is proportional to the state
    col = rho.matrix[:, int(np.argmax(np.abs(np.diagonal(rho.matrix))))]
    return col / np.linalg.norm(col)


class StateSource:
    """Fresh copies of a hidden state, available only through measurements.

    Each method consumes copies from the budget (``None`` means unlimited) and
    returns classical outcomes only.
    """

    def __init__(self, state: DensityMatrix | PureState, budget: int | None = None):
        if isinstance(state, PureState):
            self._psi = state.amplitudes
            self._rho = None
            self.n_qubits = state.n_qubits
        else:
            self._rho = state
            self._psi = _pure_vector(state)
            self.n_qubits = state.n_qubits
        self.budget = budget
        self.copies_consumed = 0

    @property
    def dim(self) -> int:
        return 1 << self.n_qubits

    def _take(self, count: int) -> None:
        if count < 0:
            raise ValueError("count must be non-negative")
        if self.budget is not None and self.copies_consumed + count > self.budget:
            raise BudgetExhausted(f"requested {count} copies with {self.remaining()} left")
        self.copies_consumed += count

    def remaining(self) -> int | None:
        return None if self.budget is None else self.budget - self.copies_consumed

    def _matrix(self) -> np.ndarray:
        if self._rho is None:
            self._rho = DensityMatrix.from_pure(self._psi)
        return self._rho.matrix

    def _basis_probabilities(self, basis: np.ndarray) -> np.ndarray:
        """Outcome distribution of measuring the rotated state ``basis @ rho @ basis^dag``."""
        if self._psi is not None:
            return np.abs(basis @ self._psi) ** 2
        return np.real(np.sum((basis @ self._matrix()) * basis.conj(), axis=1))

    def measure_basis(self, basis: np.ndarray, count: int, rng: np.random.Generator) -> np.ndarray:
        """Apply the unitary ``basis`` to ``count`` copies and measure each in the computational basis."""
        self._take(count)
        return sample_basis(self._basis_probabilities(basis), rng, count)

    def measure_pauli(self, p: PauliString, count: int, rng: np.random.Generator) -> np.ndarray:
        """Measure the two-outcome POVM ``{(I + P)/2, (I - P)/2}``; returns +-1 outcomes."""
        self._take(count)
        if self._psi is not None:
            mean = float(pauli_expectations_vectors(p, self._psi[None, :])[0])
        else:
            mean = pauli_expectation(p, self._matrix())
        plus = min(max((1 + mean) / 2, 0.0), 1.0)
        return np.where(rng.random(count) < plus, 1, -1)

    def measure_stabilizer_povm(self, count: int, rng: np.random.Generator) -> np.ndarray:
        """Indices into :func:`stabilizer_states` drawn from the POVM ``{(d/N) |s><s|}``.

        This POVM has the same outcome distribution as applying a uniform
        random Clifford ``U`` and recording ``U^dag |b>``.
        """
        states = stabilizer_states(self.n_qubits)
        self._take(count)
        if self._psi is not None:
            weights = np.abs(states.conj() @ self._psi) ** 2
        else:
            weights = np.real(np.sum((states.conj() @ self._matrix()) * states, axis=1))
        p = weights * (self.dim / len(states))
        return sample_basis(p, rng, count)

    def measure_bell_pairs(self, pairs: int, rng: np.random.Generator) -> np.ndarray:
        """Measure ``pairs`` copies of ``rho (x) rho`` qubit-wise in the Bell basis.

        Uses two copies per pair. Returns joint outcome indices ``A * 2^n + B``,
        see :func:`qmemlearn.qcore.bell_label_table`.
        """
        self._take(2 * pairs)
        if self._psi is not None:
            p = _bell_probabilities_pure(self._psi, self.n_qubits)
        else:
            p = bell_probabilities_product(DensityMatrix(self.n_qubits, self._matrix(), validate=False))
        return sample_basis(p, rng, pairs)


def _bell_probabilities_pure(psi: np.ndarray, n: int) -> np.ndarray:
    d = 1 << n
    v = np.outer(psi, psi)
    a = np.arange(d)
    v = v[a[:, None], a[None, :] ^ a[:, None]]
    v = _fwht(v, axis=0) / math.sqrt(d)
    return (np.abs(v) ** 2).ravel()


def _fwht(a: np.ndarray, axis: int = 0) -> np.ndarray:
    """Unnormalized Walsh-Hadamard transform along ``axis`` (length a power of two)."""
    a = np.moveaxis(np.array(a, dtype=np.result_type(a, float)), axis, 0)
    size = a.shape[0]
    rest = a.shape[1:]
    h = 1
    while h < size:
        a = a.reshape((size // (2 * h), 2, h) + rest)
        top, bottom = a[:, 0].copy(), a[:, 1].copy()
        a[:, 0], a[:, 1] = top + bottom, top - bottom
        a = a.reshape((size,) + rest)
        h *= 2
    return np.moveaxis(a, 0, axis)


class ChannelOracle:
    """Black-box access to a hidden channel; each query returns one output state."""

    def __init__(self, spec: ChannelSpec, budget: int | None = None):
        self._spec = spec
        self.n_qubits = spec.n_qubits
        self.budget = budget
        self.queries = 0
        self._cache: dict[bytes, DensityMatrix] = {}

    def query(self, state: PureState | DensityMatrix, ancilla: int = 0) -> DensityMatrix:
        if self.budget is not None and self.queries >= self.budget:
            raise BudgetExhausted("channel query budget exhausted")
        self.queries += 1
        rho = state.density() if isinstance(state, PureState) else state
        key = rho.matrix.tobytes() + bytes([ancilla])
        if key not in self._cache:
            if self._spec.kind is ChannelKind.CONJUGATION and isinstance(state, PureState) and not ancilla:
                out = DensityMatrix.from_pure(self._spec.conjugator.matrix @ state.amplitudes)
            else:
                out = apply_channel(self._spec, rho, ancilla)
            self._cache[key] = out
        return self._cache[key]


# --------------------------------------------------------------------------
# Pauli estimation
# --------------------------------------------------------------------------


def naive_pauli_estimate(src: StateSource, paulis: Sequence[PauliString], shots_per_obs: int,
                         rng: np.random.Generator) -> np.ndarray:
    """Empirical mean of +-1 outcomes, measuring each Pauli on its own copies."""
    if shots_per_obs < 1:
        raise ValueError("shots_per_obs must be at least 1")
    return np.array([src.measure_pauli(p, shots_per_obs, rng).mean() for p in paulis])


def bell_character_means(outcomes: np.ndarray, n: int) -> np.ndarray:
    """``mean_t (-1)^popcount(outcome_t & mask)`` for every 2n-bit mask at once."""
    hist = np.bincount(outcomes, minlength=4 ** n).astype(float)
    return _fwht(hist) / len(outcomes)


def bell_pauli_sq_estimate(src: StateSource, paulis: Sequence[PauliString], pairs: int,
                           rng: np.random.Generator) -> np.ndarray:
    """Unbiased estimates of ``Tr(P rho)^2`` from qubit-wise Bell measurements of pairs.

    A pair's sample for ``P`` is the product over qubits of the eigenvalue of
    ``P_j (x) P_j`` on the observed Bell state. With the outcome bits ``(a, b)``
    of a pair that eigenvalue is ``(-1)^a`` for X, ``(-1)^b`` for Z and
    ``-(-1)^(a+b)`` for Y, so all Paulis follow from one Walsh-Hadamard
    transform of the outcome histogram.
    """
    if pairs < 1:
        raise ValueError("pairs must be at least 1")
    n = src.n_qubits
    outcomes = src.measure_bell_pairs(pairs, rng)
    return bell_estimates_from_outcomes(outcomes, n, paulis)


def bell_estimates_from_outcomes(outcomes: np.ndarray, n: int, paulis: Sequence[PauliString]) -> np.ndarray:
    chars = bell_character_means(outcomes, n)
    masks, signs = bell_masks(paulis, n)
    return signs * chars[masks]


def bell_masks(paulis: Sequence[PauliString], n: int) -> tuple[np.ndarray, np.ndarray]:
    masks = np.empty(len(paulis), dtype=np.int64)
    signs = np.empty(len(paulis))
    for i, p in enumerate(paulis):
        x, z = pauli_xz(p)
        masks[i] = (x << n) | z
        signs[i] = -1.0 if p.letters.count("Y") % 2 else 1.0
    return masks, signs


# --------------------------------------------------------------------------
# Classical shadows
# --------------------------------------------------------------------------


class ShadowMode(str, enum.Enum):
    CLIFFORD = "clifford"
    HAAR = "haar"


@dataclass(frozen=True)
class ShadowSnapshot:
    """One randomized measurement: the post-rotation outcome and the state ``U^dag |b>``.

    ``unitary`` is kept when the rotation was sampled explicitly; it is ``None``
    when the Clifford measurement was simulated through the equivalent
    stabilizer-state POVM.
    """

    state: np.ndarray
    outcome: int
    unitary: np.ndarray | None = None

    def reconstruction(self) -> np.ndarray:
        d = self.state.size
        return (d + 1) * np.outer(self.state, self.state.conj()) - np.eye(d)


class ShadowRecord(Sequence):
    """A batch of snapshots stored as arrays; indexing yields :class:`ShadowSnapshot`."""

    def __init__(self, states: np.ndarray, outcomes: np.ndarray, unitaries: np.ndarray | None = None):
        self.states = states
        self.outcomes = outcomes
        self.unitaries = unitaries

    def __len__(self) -> int:
        return len(self.states)

    def __getitem__(self, i):
        if isinstance(i, slice):
            u = None if self.unitaries is None else self.unitaries[i]
            return ShadowRecord(self.states[i], self.outcomes[i], u)
        u = None if self.unitaries is None else self.unitaries[i]
        return ShadowSnapshot(self.states[i], int(self.outcomes[i]), u)

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    def mean_reconstruction(self) -> np.ndarray:
        d = self.dim
        s = self.states
        return (d + 1) * (s.T @ s.conj()) / len(s) - np.eye(d)


def classical_shadow_collect(src: StateSource, T: int, mode: ShadowMode | str, rng: np.random.Generator,
                             explicit: bool = False, chunk: int = 4096) -> ShadowRecord:
    """Collect ``T`` snapshots with random Clifford or Haar basis rotations.

    For Clifford mode on at most four qubits the rotation is simulated through
    the stabilizer-state POVM unless ``explicit`` is set, in which case every
    Clifford is sampled and materialized.
    """
    mode = ShadowMode(mode)
    n, d = src.n_qubits, src.dim
    if T < 1:
        raise ValueError("T must be at least 1")
    if mode is ShadowMode.CLIFFORD and not explicit and n <= MAX_STABILIZER_QUBITS:
        idx = src.measure_stabilizer_povm(T, rng)
        return ShadowRecord(stabilizer_states(n)[idx], idx)
    if mode is ShadowMode.CLIFFORD:
        unitaries = np.array([random_clifford(n, rng).matrix for _ in range(T)])
    else:
        unitaries = None
    states = np.empty((T, d), dtype=complex)
    outcomes = np.empty(T, dtype=np.int64)
    kept = []
    for start in range(0, T, chunk):
        stop = min(T, start + chunk)
        block = unitaries[start:stop] if unitaries is not None else haar_unitary_batch(d, stop - start, rng)
        if unitaries is None:
            kept.append(block)
        for i, u in enumerate(block):
            b = int(src.measure_basis(u, 1, rng)[0])
            outcomes[start + i] = b
            states[start + i] = u[b].conj()
    if unitaries is None:
        unitaries = np.concatenate(kept)
    return ShadowRecord(states, outcomes, unitaries)


def shadow_values(snapshots: ShadowRecord, obs: np.ndarray) -> np.ndarray:
    """Per-snapshot estimates ``(d + 1) <s|O|s> - Tr(O)``."""
    s = snapshots.states
    d = snapshots.dim
    vals = np.real(np.sum((s.conj() @ obs) * s, axis=1))
    return (d + 1) * vals - np.real(np.trace(obs))


def median_of_means(values: np.ndarray, batches: int) -> float:
    if batches <= 1:
        return float(np.mean(values))
    parts = np.array_split(values, min(batches, len(values)))
    return float(np.median([p.mean() for p in parts]))


def classical_shadow_estimate(snapshots: ShadowRecord, obs: np.ndarray, batches: int = 1) -> float:
    """Mean (or median of ``batches`` means) of ``Tr(O hat_rho)`` over the snapshots."""
    if len(snapshots) < 1:
        raise ValueError("need at least one snapshot")
    obs = np.asarray(obs)
    if obs.shape != (snapshots.dim, snapshots.dim):
        raise ValueError("observable dimension does not match the snapshots")
    return median_of_means(shadow_values(snapshots, obs), batches)


def shadow_pauli_estimates(snapshots: ShadowRecord, paulis: Sequence[PauliString], batches: int = 1) -> np.ndarray:
    d = snapshots.dim
    return np.array([median_of_means((d + 1) * pauli_expectations_vectors(p, snapshots.states), batches)
                     for p in paulis])


# --------------------------------------------------------------------------
# Uniformity and purity testing
# --------------------------------------------------------------------------


def collision_count(samples: np.ndarray, d: int) -> int:
    counts = np.bincount(np.asarray(samples), minlength=d)
    return int(np.sum(counts * (counts - 1) // 2))


def l2_uniformity_test(samples: Sequence[int], d: int, eps: float) -> Decision:
    """Collision tester: ``Far`` iff collisions exceed ``C(T,2) (1 + eps^2/2) / d``.

    Uniform samples give ``C(T,2)/d`` collisions on average and a distribution
    at L2 distance ``eps/sqrt(d)`` gives ``C(T,2)(1 + eps^2)/d``; the threshold
    is the midpoint.
    """
    if d <= 1:
        raise ValueError("d must exceed 1")
    samples = np.asarray(samples)
    t = len(samples)
    if t < 2:
        raise ValueError("need at least two samples")
    threshold = t * (t - 1) / 2 * (1 + eps ** 2 / 2) / d
    return Decision.FAR if collision_count(samples, d) > threshold else Decision.UNIFORM


def purity_eps(d: int) -> float:
    """``eps`` with ``eps^2 / d`` equal to the expected squared L2 distance for Haar-pure states."""
    return math.sqrt((d - 1) / (d + 1))


def purity_test(src: StateSource, T: int, rng: np.random.Generator) -> Decision:
    """Measure ``T`` copies in one Haar-random basis and test the outcomes for uniformity."""
    if T < 2:
        raise ValueError("T must be at least 2")
    d = src.dim
    basis = haar_unitary_batch(d, 1, rng)[0]
    outcomes = src.measure_basis(basis, T, rng)
    verdict = l2_uniformity_test(outcomes, d, purity_eps(d))
    return Decision.PURE if verdict is Decision.FAR else Decision.MAXIMALLY_MIXED


def _zero_state(n: int) -> PureState:
    return PureState.basis(n, 0)


def channel_distinguish_memoryless(oracle: ChannelOracle, T: int, rng: np.random.Generator) -> Decision:
    """Send ``|0^n>`` through the channel ``T`` times and purity-test the outputs."""
    if T < 2:
        raise ValueError("T must be at least 2")
    zero = _zero_state(oracle.n_qubits)
    outputs = [oracle.query(zero) for _ in range(T)]
    # every query received the same input, so the outputs are identical copies
    verdict = purity_test(StateSource(outputs[0], budget=T), T, rng)
    return Decision.FIXED_CONJUGATION if verdict is Decision.PURE else Decision.DEPOLARIZING


def channel_distinguish_memory(oracle: ChannelOracle, repeats: int, rng: np.random.Generator) -> Decision:
    """Swap-test pairs of outputs on ``|0^n>``; conjugation iff every test returns 0."""
    if repeats < 1:
        raise ValueError("repeats must be at least 1")
    zero = _zero_state(oracle.n_qubits)
    for _ in range(repeats):
        first = oracle.query(zero)
        second = oracle.query(zero)
        if swap_test(first, second, rng):
            return Decision.DEPOLARIZING
    return Decision.FIXED_CONJUGATION


# --------------------------------------------------------------------------
# Tomography and symmetry classification
# --------------------------------------------------------------------------


def pure_state_tomography(src: StateSource, T: int, mode: ShadowMode | str, rng: np.random.Generator) -> PureState:
    """Top eigenvector of the averaged classical-shadow reconstruction."""
    snaps = classical_shadow_collect(src, T, mode, rng)
    est = snaps.mean_reconstruction()
    est = (est + est.conj().T) / 2
    _, v = np.linalg.eigh(est)
    return PureState.from_vector(v[:, -1])


def symmetry_inputs(n: int) -> tuple[PureState, PureState, PureState]:
    """``|0^n>``, ``|+>|0^(n-1)>`` and ``|->|0^(n-1)>``."""
    d = 1 << n
    plus = np.zeros(d, dtype=complex)
    minus = np.zeros(d, dtype=complex)
    plus[0] = minus[0] = 1 / math.sqrt(2)
    plus[d // 2] = 1 / math.sqrt(2)
    minus[d // 2] = -1 / math.sqrt(2)
    return PureState.basis(n, 0), PureState(n, plus), PureState(n, minus)


def symmetry_statistics(phi1: np.ndarray, phi2: np.ndarray, phi3: np.ndarray) -> tuple[float, float]:
    """``(|phi2^t J phi3|, |phi1^t phi1|)``; both are invariant under global phases."""
    j = symplectic_form(phi1.size)
    return float(abs(phi2 @ j @ phi3)), float(abs(phi1 @ phi1))


def symmetry_decide(phi1: np.ndarray, phi2: np.ndarray, phi3: np.ndarray, threshold: float = 0.5) -> Decision:
    """Symplectic iff ``|phi2^t J phi3| > 1/2``, else Orthogonal iff ``|phi1^t phi1| > 1/2``, else Unitary.

    Both comparisons are strict, so a value exactly at the threshold falls to
    the less symmetric class.
    """
    sp_stat, o_stat = symmetry_statistics(phi1, phi2, phi3)
    if sp_stat > threshold:
        return Decision.SYMPLECTIC
    if o_stat > threshold:
        return Decision.ORTHOGONAL
    return Decision.UNITARY


def symmetry_classify(oracle: ChannelOracle, eps: float, T_per_state: int, rng: np.random.Generator,
                      mode: ShadowMode | str = ShadowMode.CLIFFORD) -> Decision:
    """Tomograph the channel outputs on three fixed inputs and test for real or symplectic structure.

    ``eps`` is the tomography accuracy the budget ``T_per_state`` is meant to
    reach; it does not change the decision rule.
    """
    if oracle.n_qubits < 1:
        raise ValueError("need at least one qubit so that the dimension is even")
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    phis = []
    for psi in symmetry_inputs(oracle.n_qubits):
        outputs = [oracle.query(psi) for _ in range(T_per_state)]
        est = pure_state_tomography(StateSource(outputs[0], budget=T_per_state), T_per_state, mode, rng)
        phis.append(est.amplitudes)
    return symmetry_decide(*phis)


def symmetry_classify_exact(conjugator: np.ndarray) -> Decision:
    """The same decision rule applied to the exact output states (no tomography)."""
    n = int(conjugator.shape[0]).bit_length() - 1
    phis = [conjugator @ psi.amplitudes for psi in symmetry_inputs(n)]
    return symmetry_decide(*phis)


def trace_distance_pure(a: np.ndarray, b: np.ndarray) -> float:
    overlap = abs(np.vdot(a, b)) ** 2
    return float(math.sqrt(max(0.0, 1 - overlap)))

