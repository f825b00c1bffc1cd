import math

import numpy as np
import pytest

from qmemlearn.ensembles import Group, SeededRng
from qmemlearn.protocols import Decision
from qmemlearn.qcore import ChannelKind
from qmemlearn.tasks import (
    TaskKind,
    TaskSpec,
    fit_line,
    get_learner,
    monotonicity_violations,
    naive_pauli_copies,
    planted_state,
    random_observable,
    random_observable_unitaries,
    randomobs_delta_diagnostic,
    run_trials,
    sample_instance,
    sweep,
    threshold_crossing,
    valid_pairs,
    wilson_interval,
)


def test_taskspec_validation():
    with pytest.raises(ValueError):
        TaskSpec("pauli", 2, epsilon=1 / 3)
    with pytest.raises(ValueError):
        TaskSpec("randomobs", 2, n_observables=3)
    with pytest.raises(ValueError):
        TaskSpec("purity", 0)
    with pytest.raises(ValueError):
        TaskSpec("purity", 2, fixed_truth="Unitary")


def test_planted_state_example():
    z = np.diag([1.0, -1.0])
    assert np.allclose(planted_state(1, z, 0.1).matrix, np.diag([0.65, 0.35]))


def test_null_branch_is_maximally_mixed():
    task = TaskSpec("purity", 3, fixed_truth=Decision.MAXIMALLY_MIXED)
    inst = sample_instance(task, np.random.default_rng(0))
    assert np.allclose(inst.hidden.matrix, np.eye(8) / 8)


def test_pauli_alternative_branch_has_planted_signal():
    rng = np.random.default_rng(1)
    task = TaskSpec("pauli", 2, epsilon=0.1, fixed_truth=Decision.ALTERNATIVE)
    for _ in range(20):
        rho = sample_instance(task, rng).hidden.matrix
        # (I + 0.3 P)/4 has eigenvalues 1.3/4 and 0.7/4, each twice
        assert np.allclose(np.sort(np.linalg.eigvalsh(rho)), [0.175, 0.175, 0.325, 0.325])


def test_random_observables_are_traceless_involutions():
    rng = np.random.default_rng(2)
    u = random_observable_unitaries(3, 8, rng)
    assert u.shape == (4, 8, 8)
    for i in range(8):
        o = random_observable(u, i)
        assert np.allclose(o @ o, np.eye(8)) and abs(np.trace(o)) < 1e-9
    # the second half repeats the first with the opposite sign
    assert np.allclose(random_observable(u, 0), -random_observable(u, 4))


def test_randomobs_diagnostic_near_target():
    u = random_observable_unitaries(3, 64, np.random.default_rng(3))
    avg, target = randomobs_delta_diagnostic(u, 2000, np.random.default_rng(4))
    assert target == pytest.approx(1 / 9)
    assert abs(avg - target) < 0.02


def test_symmetry_prior_uniform():
    rng = np.random.default_rng(5)
    task = TaskSpec("symmetry", 2)
    draws = 10_000
    counts = {}
    for _ in range(draws):
        label = sample_instance(task, rng).truth
        counts[label] = counts.get(label, 0) + 1
    assert set(counts) == set(task.labels)
    sigma = math.sqrt(draws * (1 / 3) * (2 / 3))
    assert all(abs(c - draws / 3) <= 4 * sigma for c in counts.values())


def test_two_label_priors_balanced():
    for kind in ("pauli", "purity", "channel"):
        task = TaskSpec(kind, 2, epsilon=0.1)
        rng = np.random.default_rng(6)
        alt = sum(sample_instance(task, rng).truth is task.labels[1] for _ in range(4000))
        assert abs(alt - 2000) <= 4 * math.sqrt(1000)


def test_channel_alternative_uses_requested_group():
    task = TaskSpec("channel", 2, group=Group.ORTHOGONAL, fixed_truth=Decision.FIXED_CONJUGATION)
    inst = sample_instance(task, np.random.default_rng(7))
    assert inst.hidden.kind is ChannelKind.CONJUGATION
    assert inst.hidden.conjugator.group is Group.ORTHOGONAL


def test_learner_registry():
    assert ("pauli", "bell") in valid_pairs()
    with pytest.raises(ValueError, match="valid pairs"):
        get_learner("purity", "bell")


def test_blind_learner_near_half():
    s = run_trials(TaskSpec("purity", 2), "blind", 10, 400, root_seed=0)
    assert s.ci_lo <= 0.5 <= s.ci_hi
    assert s.copies == 0


def test_reproducible_records():
    task = TaskSpec("pauli", 2, epsilon=0.3)
    a = run_trials(task, "bell", 50, 30, root_seed=9)
    b = run_trials(task, "bell", 50, 30, root_seed=9)
    assert a.records == b.records
    assert [r.trial for r in a.records] == list(range(30))


def test_parallel_matches_serial():
    task = TaskSpec("channel", 3)
    a = run_trials(task, "memory", 6, 40, root_seed=3, jobs=1)
    b = run_trials(task, "memory", 6, 40, root_seed=3, jobs=2)
    assert a.records == b.records


def test_copies_never_exceed_budget():
    for kind, learner, T in [("pauli", "naive", 100), ("pauli", "shadow", 64), ("purity", "memoryless", 16),
                             ("channel", "memoryless", 9), ("channel", "memory", 7), ("symmetry", "tomography", 16)]:
        s = run_trials(TaskSpec(kind, 2, epsilon=0.1), learner, T, 10, root_seed=1)
        budget = 3 * T if kind == "symmetry" else T
        assert all(r.copies <= budget for r in s.records)
        assert not any(r.flagged for r in s.records)


def test_budget_too_small_guesses():
    s = run_trials(TaskSpec("pauli", 2, epsilon=0.3), "naive", 3, 200, root_seed=2)
    assert s.copies == 0
    assert 0.35 < s.rate < 0.65


def test_learner_examples():
    s = run_trials(TaskSpec("channel", 4), "memory", 10, 400, root_seed=4)
    assert s.rate >= 0.9
    s = run_trials(TaskSpec("pauli", 2, epsilon=0.3), "bell", 400, 200, root_seed=5)
    assert s.rate >= 2 / 3


def test_wilson_interval():
    lo, hi = wilson_interval(50, 100)
    assert lo < 0.5 < hi
    assert lo == pytest.approx(0.4038, abs=1e-3) and hi == pytest.approx(0.5962, abs=1e-3)
    assert wilson_interval(0, 0) == (0.0, 1.0)


def test_sweep_rows_and_monotone_budgets():
    rows = sweep(TaskSpec("channel", 3), "memory", [2, 4, 8], 50, root_seed=1, n_list=[3, 4])
    assert [(r.n, r.T) for r in rows] == [(3, 2), (3, 4), (3, 8), (4, 2), (4, 4), (4, 8)]
    assert list(rows[0].row()) == ["task", "learner", "n", "T", "trials", "successes", "rate", "ci_lo", "ci_hi",
                                   "copies", "seed"]
    assert monotonicity_violations(rows) == []
    with pytest.raises(ValueError):
        sweep(TaskSpec("channel", 3), "memory", [4, 2], 5, root_seed=1)


def test_threshold_crossing_and_fit():
    assert threshold_crossing([1, 2, 4], [0.5, 0.6, 0.9]) == pytest.approx(2 ** (1 + (2 / 3 - 0.6) / 0.3))
    assert threshold_crossing([1, 2], [0.1, 0.2]) == math.inf
    assert threshold_crossing([4, 8], [0.9, 1.0]) == 4
    fit = fit_line([1, 2, 3], [3, 5, 7])
    assert fit.slope == pytest.approx(2) and fit.r_squared == pytest.approx(1)


def test_naive_pauli_copies():
    assert naive_pauli_copies(2, 0.3) == 15 * 100
    assert naive_pauli_copies(3, 0.3) == 63 * 100


def test_stream_isolation():
    # the per-trial stream is a function of (root_seed, trial) only
    g1 = SeededRng(7, 3).generator().random()
    s = run_trials(TaskSpec("purity", 2), "memoryless", 8, 5, root_seed=7)
    assert SeededRng(7, 3).generator().random() == g1
    assert s.records[3].stream_id == 3
