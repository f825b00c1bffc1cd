import math

from qmemlearn import calibration as cal


def test_budgets_follow_recorded_constants():
    assert cal.purity_budget(4) == math.ceil(cal.PURITY_C * 4)
    assert cal.purity_budget(6) == math.ceil(cal.PURITY_C * 8)
    assert cal.tomography_budget(3) == cal.TOMOGRAPHY_C1 * 8
    assert cal.uniformity_budget(256, 1.0) == 128


def test_uniformity_calibration_example():
    row = cal.calibrate_uniformity(d=256, repeats=1000, seed=0)
    assert row.budget == 128 and row.rate >= 0.85


def test_tomography_calibration_example():
    row = cal.calibrate_tomography(n=3, trials=200, seed=0)
    assert row.rate >= 0.9
