"""Distinguishing tasks, learners, and the Monte Carlo success-rate harness."""

from __future__ import annotations

import enum
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import stats

from .ensembles import (
    Group,
    SeededRng,
    haar_element,
    haar_pure_state,
    haar_state_vectors,
    haar_unitary_batch,
    random_signed_pauli,
)
from .protocols import (
    BudgetExhausted,
    ChannelOracle,
    Decision,
    ShadowMode,
    StateSource,
    bell_masks,
    bell_character_means,
    bell_pauli_sq_estimate,
    channel_distinguish_memory,
    channel_distinguish_memoryless,
    classical_shadow_collect,
    median_of_means,
    naive_pauli_estimate,
    purity_test,
    shadow_pauli_estimates,
    symmetry_classify,
    symmetry_classify_exact,
)
from .qcore import ChannelSpec, DensityMatrix, all_paulis, pauli_expectations_vectors, pauli_matrix

MAX_RANDOM_OBSERVABLES = 2 ** 12
SHADOW_BATCHES = 10
TOMOGRAPHY_EPS = 0.2


class TaskKind(str, enum.Enum):
    PAULI = "pauli"
    RANDOMOBS = "randomobs"
    PURITY = "purity"
    CHANNEL = "channel"
    SYMMETRY = "symmetry"


_LABELS = {
    TaskKind.PAULI: (Decision.MAXIMALLY_MIXED, Decision.ALTERNATIVE),
    TaskKind.RANDOMOBS: (Decision.MAXIMALLY_MIXED, Decision.ALTERNATIVE),
    TaskKind.PURITY: (Decision.MAXIMALLY_MIXED, Decision.PURE),
    TaskKind.CHANNEL: (Decision.DEPOLARIZING, Decision.FIXED_CONJUGATION),
    TaskKind.SYMMETRY: (Decision.UNITARY, Decision.ORTHOGONAL, Decision.SYMPLECTIC),
}

_SYMMETRY_GROUPS = {
    Decision.UNITARY: Group.UNITARY,
    Decision.ORTHOGONAL: Group.ORTHOGONAL,
    Decision.SYMPLECTIC: Group.SYMPLECTIC,
}


@dataclass(frozen=True)
class TaskSpec:
    kind: TaskKind
    n_qubits: int
    epsilon: float = 0.1
    n_observables: int = 16
    group: Group = Group.UNITARY
    fixed_truth: Decision | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", TaskKind(self.kind))
        object.__setattr__(self, "group", Group(self.group))
        if self.fixed_truth is not None:
            object.__setattr__(self, "fixed_truth", Decision(self.fixed_truth))
            if self.fixed_truth not in self.labels:
                raise ValueError(f"{self.fixed_truth.value} is not a label of task {self.kind.value}")
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be at least 1")
        if self.kind is TaskKind.PAULI and not 0 < self.epsilon < 1 / 3:
            raise ValueError("PauliManyVsOne needs 0 < epsilon < 1/3 so that (I + 3 eps P)/2^n stays PSD")
        if self.kind is TaskKind.RANDOMOBS:
            if not 0 < self.epsilon < 1 / 3:
                raise ValueError("RandomObsManyVsOne needs 0 < epsilon < 1/3")
            m = self.n_observables
            if m < 2 or m % 2 or m > MAX_RANDOM_OBSERVABLES:
                raise ValueError(f"n_observables must be even and in [2, {MAX_RANDOM_OBSERVABLES}]")

    @property
    def labels(self) -> tuple[Decision, ...]:
        return _LABELS[self.kind]


@dataclass
class Instance:
    hidden: DensityMatrix | ChannelSpec
    truth: Decision
    public: dict = field(default_factory=dict)


def planted_state(n: int, observable: np.ndarray, epsilon: float) -> DensityMatrix:
    """``(I + 3 eps O) / 2^n``."""
    d = 1 << n
    return DensityMatrix(n, (np.eye(d) + 3 * epsilon * observable) / d, validate=False)


def random_observable_unitaries(n: int, m: int, rng: np.random.Generator) -> np.ndarray:
    """The ``m/2`` Haar unitaries defining ``O_i = +-U_i Z_last U_i^dag``."""
    return haar_unitary_batch(1 << n, m // 2, rng)


def _z_last(n: int) -> np.ndarray:
    return 1 - 2 * (np.arange(1 << n) & 1)


def random_observable(unitaries: np.ndarray, index: int) -> np.ndarray:
    half = len(unitaries)
    u = unitaries[index % half]
    sign = 1 if index < half else -1
    n = u.shape[0].bit_length() - 1
    return sign * (u * _z_last(n)) @ u.conj().T


def sample_instance(task: TaskSpec, rng: np.random.Generator) -> Instance:
    """Draw a hidden instance and its label from the task's prior."""
    n = task.n_qubits
    if task.kind is TaskKind.SYMMETRY:
        draw = int(rng.integers(0, 3))
        truth = task.fixed_truth or task.labels[draw]
        return Instance(ChannelSpec.conjugation(haar_element(_SYMMETRY_GROUPS[truth], 1 << n, rng)), truth)
    draw = rng.random() < 0.5
    alternative = draw if task.fixed_truth is None else task.fixed_truth == task.labels[1]
    truth = task.labels[1] if alternative else task.labels[0]
    if task.kind is TaskKind.CHANNEL:
        if alternative:
            return Instance(ChannelSpec.conjugation(haar_element(task.group, 1 << n, rng)), truth)
        return Instance(ChannelSpec.depolarizing(n), truth)
    public = {}
    if task.kind is TaskKind.RANDOMOBS:
        public["unitaries"] = random_observable_unitaries(n, task.n_observables, rng)
    if not alternative:
        return Instance(DensityMatrix.maximally_mixed(n), truth, public)
    if task.kind is TaskKind.PURITY:
        return Instance(haar_pure_state(n, rng).density(), truth, public)
    if task.kind is TaskKind.PAULI:
        p = random_signed_pauli(n, rng)
        return Instance(planted_state(n, pauli_matrix(p), task.epsilon), truth, public)
    index = int(rng.integers(0, task.n_observables))
    obs = random_observable(public["unitaries"], index)
    return Instance(planted_state(n, obs, task.epsilon), truth, public)


def randomobs_delta_diagnostic(unitaries: np.ndarray, samples: int, rng: np.random.Generator) -> tuple[float, float]:
    """Average of ``(2/M) sum_i <phi|O_i|phi>^2`` over Haar ``phi``, and ``1/(2^n + 1)``.

    This samples the average over states, not the supremum.
    """
    d = unitaries.shape[1]
    n = d.bit_length() - 1
    phis = haar_state_vectors(d, samples, rng)
    rotated = np.matmul(phis, unitaries.conj())
    vals = np.sum(np.abs(rotated) ** 2 * _z_last(n), axis=2)
    return float(np.mean(np.mean(vals ** 2, axis=0))), 1 / (d + 1)


# --------------------------------------------------------------------------
# Learners
# --------------------------------------------------------------------------


@dataclass
class LearnerResult:
    decision: Decision
    copies: int


LearnerFn = Callable[[TaskSpec, Instance, int, np.random.Generator], LearnerResult]


def _guess(task: TaskSpec, rng: np.random.Generator) -> Decision:
    return task.labels[int(rng.integers(0, len(task.labels)))]


def _blind(task, inst, T, rng):
    return LearnerResult(task.labels[0], 0)


def _pauli_detect(estimates: np.ndarray, epsilon: float) -> Decision:
    # midpoint between Tr(P rho_mm) = 0 and Tr(P rho_P) = 3 eps
    return Decision.ALTERNATIVE if np.max(np.abs(estimates)) > 1.5 * epsilon else Decision.MAXIMALLY_MIXED


def _pauli_naive(task, inst, T, rng):
    paulis = all_paulis(task.n_qubits)
    shots = T // len(paulis)
    if shots < 1:
        return LearnerResult(_guess(task, rng), 0)
    src = StateSource(inst.hidden, budget=T)
    est = naive_pauli_estimate(src, paulis, shots, rng)
    return LearnerResult(_pauli_detect(est, task.epsilon), src.copies_consumed)


def _pauli_shadow(task, inst, T, rng):
    src = StateSource(inst.hidden, budget=T)
    snaps = classical_shadow_collect(src, T, ShadowMode.CLIFFORD, rng)
    est = shadow_pauli_estimates(snaps, all_paulis(task.n_qubits), SHADOW_BATCHES)
    return LearnerResult(_pauli_detect(est, task.epsilon), src.copies_consumed)


def _pauli_bell(task, inst, T, rng):
    pairs = T // 2
    if pairs < 1:
        return LearnerResult(_guess(task, rng), 0)
    src = StateSource(inst.hidden, budget=T)
    est = bell_pauli_sq_estimate(src, all_paulis(task.n_qubits), pairs, rng)
    # midpoint between Tr(P rho_mm)^2 = 0 and Tr(P rho_P)^2 = (3 eps)^2
    alt = np.max(est) > (3 * task.epsilon) ** 2 / 2
    return LearnerResult(Decision.ALTERNATIVE if alt else Decision.MAXIMALLY_MIXED, src.copies_consumed)


def _randomobs_estimates_shadow(unitaries: np.ndarray, states: np.ndarray) -> np.ndarray:
    """Per-snapshot ``(d + 1) <s|U Z U^dag|s>`` for every unitary, shape (M/2, T)."""
    d = states.shape[1]
    n = d.bit_length() - 1
    rotated = np.matmul(states, unitaries.conj())
    return (d + 1) * np.sum(np.abs(rotated) ** 2 * _z_last(n), axis=2)


def _randomobs_naive(task, inst, T, rng):
    unitaries = inst.public["unitaries"]
    shots = T // len(unitaries)
    if shots < 1:
        return LearnerResult(_guess(task, rng), 0)
    src = StateSource(inst.hidden, budget=T)
    z = _z_last(task.n_qubits)
    est = np.array([z[src.measure_basis(u.conj().T, shots, rng)].mean() for u in unitaries])
    return LearnerResult(_pauli_detect(est, task.epsilon), src.copies_consumed)


def _randomobs_shadow(task, inst, T, rng):
    unitaries = inst.public["unitaries"]
    src = StateSource(inst.hidden, budget=T)
    snaps = classical_shadow_collect(src, T, ShadowMode.CLIFFORD, rng)
    vals = _randomobs_estimates_shadow(unitaries, snaps.states)
    est = np.array([median_of_means(v, SHADOW_BATCHES) for v in vals])
    return LearnerResult(_pauli_detect(est, task.epsilon), src.copies_consumed)


def _purity_memoryless(task, inst, T, rng):
    if T < 2:
        return LearnerResult(_guess(task, rng), 0)
    src = StateSource(inst.hidden, budget=T)
    return LearnerResult(purity_test(src, T, rng), src.copies_consumed)


def _channel_memoryless(task, inst, T, rng):
    if T < 2:
        return LearnerResult(_guess(task, rng), 0)
    oracle = ChannelOracle(inst.hidden, budget=T)
    return LearnerResult(channel_distinguish_memoryless(oracle, T, rng), oracle.queries)


def _channel_memory(task, inst, T, rng):
    repeats = T // 2
    if repeats < 1:
        return LearnerResult(_guess(task, rng), 0)
    oracle = ChannelOracle(inst.hidden, budget=T)
    return LearnerResult(channel_distinguish_memory(oracle, repeats, rng), oracle.queries)


def _symmetry_tomography(task, inst, T, rng):
    if T < 1:
        return LearnerResult(_guess(task, rng), 0)
    oracle = ChannelOracle(inst.hidden, budget=3 * T)
    return LearnerResult(symmetry_classify(oracle, TOMOGRAPHY_EPS, T, rng), oracle.queries)


def _symmetry_exact(task, inst, T, rng):
    return LearnerResult(symmetry_classify_exact(inst.hidden.conjugator.matrix), 0)


LEARNERS: dict[TaskKind, dict[str, LearnerFn]] = {
    TaskKind.PAULI: {"naive": _pauli_naive, "shadow": _pauli_shadow, "bell": _pauli_bell, "blind": _blind},
    TaskKind.RANDOMOBS: {"naive": _randomobs_naive, "shadow": _randomobs_shadow, "blind": _blind},
    TaskKind.PURITY: {"memoryless": _purity_memoryless, "blind": _blind},
    TaskKind.CHANNEL: {"memoryless": _channel_memoryless, "memory": _channel_memory, "blind": _blind},
    TaskKind.SYMMETRY: {"tomography": _symmetry_tomography, "exact": _symmetry_exact, "blind": _blind},
}


def valid_pairs() -> list[tuple[str, str]]:
    return [(k.value, name) for k, learners in LEARNERS.items() for name in learners]


def get_learner(kind: TaskKind | str, learner: str) -> LearnerFn:
    kind = TaskKind(kind)
    try:
        return LEARNERS[kind][learner]
    except KeyError:
        pairs = ", ".join(f"{t}/{l}" for t, l in valid_pairs())
        raise ValueError(f"learner {learner!r} is not available for task {kind.value!r}; valid pairs: {pairs}") from None


# --------------------------------------------------------------------------
# Harness
# --------------------------------------------------------------------------


@dataclass
class ExperimentRecord:
    task: str
    learner: str
    n: int
    T: int
    trial: int
    root_seed: int
    stream_id: int
    truth: str
    decision: str
    copies: int
    flagged: str = ""
    wall_time: float = field(default=0.0, compare=False)

    @property
    def success(self) -> bool:
        return not self.flagged and self.truth == self.decision

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class TrialSummary:
    task: str
    learner: str
    n: int
    T: int
    trials: int
    successes: int
    ci_lo: float
    ci_hi: float
    copies: int
    seed: int
    records: list[ExperimentRecord] = field(repr=False, default_factory=list)

    @property
    def rate(self) -> float:
        return self.successes / self.trials if self.trials else 0.0

    def row(self) -> dict:
        return {
            "task": self.task, "learner": self.learner, "n": self.n, "T": self.T,
            "trials": self.trials, "successes": self.successes, "rate": self.rate,
            "ci_lo": self.ci_lo, "ci_hi": self.ci_hi, "copies": self.copies, "seed": self.seed,
        }


def wilson_interval(successes: int, trials: int) -> tuple[float, float]:
    if trials == 0:
        return 0.0, 1.0
    ci = stats.binomtest(successes, trials).proportion_ci(confidence_level=0.95, method="wilson")
    return float(ci.low), float(ci.high)


def _run_one(task: TaskSpec, learner: str, T: int, trial: int, root_seed: int) -> ExperimentRecord:
    fn = get_learner(task.kind, learner)
    rng = SeededRng(root_seed, trial).generator()
    start = time.perf_counter()
    flagged = ""
    # the instance and learner draw from one stream so a trial is a pure function of its seed
    inst = sample_instance(task, rng)
    try:
        result = fn(task, inst, T, rng)
    except BudgetExhausted:
        result = LearnerResult(_guess(task, rng), T)
    except Exception as exc:  # infrastructure failure: keep the record, flag it
        result = LearnerResult(task.labels[0], 0)
        flagged = f"{type(exc).__name__}: {exc}"
    budget = 3 * T if task.kind is TaskKind.SYMMETRY else T
    if result.copies > budget:
        raise AssertionError(f"learner {learner} used {result.copies} copies with budget {budget}")
    return ExperimentRecord(
        task=task.kind.value, learner=learner, n=task.n_qubits, T=T, trial=trial,
        root_seed=root_seed, stream_id=trial, truth=inst.truth.value, decision=result.decision.value,
        copies=result.copies, flagged=flagged, wall_time=time.perf_counter() - start,
    )


def _run_chunk(args) -> list[ExperimentRecord]:
    task, learner, T, trials, root_seed = args
    return [_run_one(task, learner, T, t, root_seed) for t in trials]


def run_trials(task: TaskSpec, learner: str, T: int, trials: int, root_seed: int, jobs: int = 1) -> TrialSummary:
    """Estimate the success probability of ``learner`` on ``task`` with budget ``T``.

    Trial ``t`` uses the stream ``(root_seed, t)`` for both the hidden instance
    and the learner, so results do not depend on ``jobs``.
    """
    get_learner(task.kind, learner)
    if jobs > 1 and trials > 1:
        chunks = [list(c) for c in np.array_split(np.arange(trials), min(jobs * 4, trials)) if len(c)]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = pool.map(_run_chunk, [(task, learner, T, [int(i) for i in c], root_seed) for c in chunks])
            records = [r for part in parts for r in part]
    else:
        records = [_run_one(task, learner, T, t, root_seed) for t in range(trials)]
    records.sort(key=lambda r: r.trial)
    successes = sum(r.success for r in records)
    lo, hi = wilson_interval(successes, trials)
    copies = max((r.copies for r in records), default=0)
    return TrialSummary(task.kind.value, learner, task.n_qubits, T, trials, successes, lo, hi, copies,
                        root_seed, records)


def sweep(task: TaskSpec, learner: str, budgets: Sequence[int], trials: int, root_seed: int,
          n_list: Sequence[int] | None = None, jobs: int = 1) -> list[TrialSummary]:
    """One :class:`TrialSummary` per ``(n, T)``; ``budgets`` must be strictly increasing."""
    budgets = list(budgets)
    if any(b >= c for b, c in zip(budgets, budgets[1:])):
        raise ValueError("budgets must be strictly increasing")
    n_list = [task.n_qubits] if n_list is None else list(n_list)
    out = []
    for n in n_list:
        spec = TaskSpec(task.kind, n, task.epsilon, task.n_observables, task.group, task.fixed_truth)
        for T in budgets:
            out.append(run_trials(spec, learner, T, trials, root_seed, jobs))
    return out


def monotonicity_violations(rows: Sequence[TrialSummary]) -> list[tuple[int, int]]:
    """(n, T) pairs where the rate drops below the previous budget's CI; a soft diagnostic."""
    bad = []
    for a, b in zip(rows, rows[1:]):
        if a.n == b.n and b.rate < a.ci_lo:
            bad.append((b.n, b.T))
    return bad


# --------------------------------------------------------------------------
# Scaling analysis
# --------------------------------------------------------------------------


def threshold_crossing(budgets: Sequence[float], rates: Sequence[float], target: float = 2 / 3) -> float:
    """Smallest budget where the rate reaches ``target``, interpolated linearly in log2(budget).

    Returns ``inf`` when the target is never reached.
    """
    logs = np.log2(np.asarray(budgets, dtype=float))
    rates = np.asarray(rates, dtype=float)
    for i, r in enumerate(rates):
        if r >= target:
            if i == 0:
                return float(budgets[0])
            r0, r1 = rates[i - 1], r
            frac = (target - r0) / (r1 - r0)
            return float(2 ** (logs[i - 1] + frac * (logs[i] - logs[i - 1])))
    return math.inf


@dataclass
class LineFit:
    slope: float
    intercept: float
    r_squared: float


def fit_line(x: Sequence[float], y: Sequence[float]) -> LineFit:
    res = stats.linregress(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    return LineFit(float(res.slope), float(res.intercept), float(res.rvalue ** 2))


def bell_accuracy_rates(n: int, epsilon: float, pair_grid: Sequence[int], trials: int, root_seed: int) -> np.ndarray:
    """Fraction of trials with ``max_P |estimate - Tr(P rho)^2| <= epsilon`` at each pair count.

    Each trial draws one Haar-pure hidden state and one stream of
    ``max(pair_grid)`` Bell-pair outcomes; the estimate at ``m`` pairs uses
    the first ``m`` outcomes of that stream.
    """
    pair_grid = sorted(pair_grid)
    paulis = all_paulis(n)
    masks, signs = bell_masks(paulis, n)
    hits = np.zeros(len(pair_grid))
    for t in range(trials):
        rng = SeededRng(root_seed, t).generator()
        psi = haar_pure_state(n, rng)
        truth = np.array([pauli_expectations_vectors(p, psi.amplitudes[None, :])[0] for p in paulis]) ** 2
        src = StateSource(psi)
        outcomes = src.measure_bell_pairs(pair_grid[-1], rng)
        for i, m in enumerate(pair_grid):
            est = signs * bell_character_means(outcomes[:m], n)[masks]
            hits[i] += np.max(np.abs(est - truth)) <= epsilon
    return hits / trials


def naive_pauli_copies(n: int, epsilon: float) -> int:
    """``(4^n - 1) * ceil(9 / eps^2)`` copies for per-Pauli measurement at accuracy ``eps``."""
    return (4 ** n - 1) * math.ceil(9 / epsilon ** 2 - 1e-12)
