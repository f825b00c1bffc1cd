"""Recorded tester constants and the runs that fix them.

The scaling statements behind the testers only hold up to constants, so the
budgets used by the acceptance runs come from one calibration pass at small
``n``. The functions here rerun that pass; the module-level constants are the
values it produced and are what the rest of the package uses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ensembles import SeededRng
from .protocols import Decision, l2_uniformity_test, pure_state_tomography, trace_distance_pure, StateSource
from .qcore import PureState
from .tasks import TaskSpec, run_trials, threshold_crossing

# collision tester: T = UNIFORMITY_C0 * sqrt(d) / eps^2
UNIFORMITY_C0 = 8.0
# purity tester: T = PURITY_C * 2^(n/2)
PURITY_C = 4.0
# tomography: T = TOMOGRAPHY_C1 * 2^n per state (at accuracy 1/5)
TOMOGRAPHY_C1 = 64


def uniformity_budget(d: int, eps: float) -> int:
    return math.ceil(UNIFORMITY_C0 * math.sqrt(d) / eps ** 2)


def purity_budget(n: int, c: float = PURITY_C) -> int:
    return math.ceil(c * 2 ** (n / 2))


def tomography_budget(n: int, c1: int = TOMOGRAPHY_C1) -> int:
    return c1 << n


@dataclass
class CalibrationRow:
    name: str
    n: int
    budget: int
    rate: float


def calibrate_uniformity(d: int = 256, repeats: int = 1000, seed: int = 0) -> CalibrationRow:
    """Acceptance rate of the collision tester on uniform samples at ``T = 8 sqrt(d)``."""
    rng = SeededRng(seed, 0).generator()
    T = math.ceil(UNIFORMITY_C0 * math.sqrt(d))
    hits = sum(l2_uniformity_test(rng.integers(0, d, T), d, 1.0) is Decision.UNIFORM for _ in range(repeats))
    return CalibrationRow("uniformity", int(math.log2(d)), T, hits / repeats)


def calibrate_purity(n_list=(4, 6, 8), budgets=(8, 16, 32, 64, 128), trials: int = 400,
                     seed: int = 11) -> list[tuple[int, float]]:
    """2/3-crossing budget of the memoryless purity tester per ``n``.

    ``PURITY_C`` was chosen so that ``PURITY_C * 2^(n/2)`` sits above every
    crossing with room for sampling noise.
    """
    out = []
    for n in n_list:
        task = TaskSpec("purity", n)
        rates = [run_trials(task, "memoryless", T, trials, seed).rate for T in budgets]
        out.append((n, threshold_crossing(budgets, rates)))
    return out


def calibrate_tomography(n: int = 3, trials: int = 200, seed: int = 0, c1: int = TOMOGRAPHY_C1,
                         eps: float = 0.2) -> CalibrationRow:
    """Fraction of trials where tomography of ``|0^n>`` lands within trace distance ``eps``."""
    T = tomography_budget(n, c1)
    hidden = PureState.basis(n, 0)
    hits = 0
    for t in range(trials):
        rng = SeededRng(seed, t).generator()
        est = pure_state_tomography(StateSource(hidden, budget=T), T, "clifford", rng)
        hits += trace_distance_pure(est.amplitudes, hidden.amplitudes) <= eps
    return CalibrationRow("tomography", n, T, hits / trials)


def calibration_report(seed: int = 0) -> list[CalibrationRow]:
    rows = [calibrate_uniformity(seed=seed), calibrate_tomography(seed=seed)]
    for n, crossing in calibrate_purity(seed=seed):
        rows.append(CalibrationRow("purity-crossing", n, int(np.ceil(crossing)) if np.isfinite(crossing) else -1,
                                   2 / 3))
    return rows
