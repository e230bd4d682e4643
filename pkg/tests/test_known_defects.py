"""
Evidence for the places where a printed statement and the numerics part ways.

These tests pin the behaviour around the red acceptance criteria: the
inequalities that do hold (from the second iteration on, or with the
constant recomputed from the potential argument) are asserted green here.
"""

import numpy as np
import pytest

from inclsolve.harness import ExperimentConfig, run_experiment
from inclsolve.solvers import GOLDEN, stepsize_window

ITERS = 3000


def _run(pid, method, theorem, **kw):
    return run_experiment(ExperimentConfig(problem_id=pid, method=method, theorem=theorem,
                                           iterations=ITERS, **kw))


FIRST_STEP_GAP = [("rotation2", "rfbs", "thm6.1", {}), ("bilinear-box-4", "rfbs", "thm6.1", {}),
                  ("rotation-l1-4", "rfbs", "thm6.1", {}),
                  ("bilinear-box-4", "gr", "thm6.2", {"omega": 1.3}),
                  ("bilinear-box-4", "gr", "thm6.2", {"omega": GOLDEN}),
                  ("rotation2", "gr", "thm6.2", {"omega": 2.0}),
                  ("bilinear-box-4", "aeg", "thm8.1", {}), ("cohypo-0.05", "aeg", "thm8.1", {})]


@pytest.mark.parametrize("pid,method,theorem,kw", FIRST_STEP_GAP,
                         ids=[f"{m}-{p}-{kw}" for p, m, _, kw in FIRST_STEP_GAP])
def test_potential_decreases_after_first_step(pid, method, theorem, kw):
    tr = _run(pid, method, theorem, **kw)
    pot = [c for c in tr.certificates if c.kind == "potential_decrease"]
    assert tr.meta["applicable"]
    # the only violation is the very first transition
    assert all(c.passed for c in pot if c.k >= 2)
    assert [c.k for c in pot if not c.passed] in ([], [1])


@pytest.mark.parametrize("pid", ["rotation2", "bilinear-box-4", "cohypo-0.05",
                                 "skew-simplex-4", "rotation-l1-4"])
def test_peag_bound_holds_with_rederived_constant(pid):
    tr = _run(pid, "peag", "thm7.3")
    info = [c for c in tr.certificates if c.kind == "explicit_bound" and c.informational]
    assert len(info) == ITERS + 1 and all(c.passed for c in info)
    pot = [c for c in tr.certificates if c.kind == "potential_decrease"]
    assert all(c.passed for c in pot)


@pytest.mark.parametrize("omega", [2.0, 2.6])
@pytest.mark.parametrize("pid", ["rotation2", "bilinear-box-4"])
def test_gr_plus_summability_with_rederived_constant(pid, omega):
    tr = _run(pid, "gr", "thm6.2", omega=omega)
    info = [c for c in tr.certificates if c.kind == "summability" and c.informational]
    assert len(info) == ITERS + 1 and all(c.passed for c in info)
    assert tr.meta["constants"]["C0_hat_corrected"] > 0


def test_gr_plus_printed_constant_negative_at_large_omega():
    c = stepsize_window("gr", 1.0, omega=2.6).constants
    assert c["C0_hat"] < 0 < c["C0_hat_corrected"]


def test_peg_window_empty_on_cohypo_005():
    # beta^2 / 48 < L rho = 0.05 < beta^2 / 12
    w = stepsize_window("peg", 1.0, 0.05)
    assert not w.feasible and "48" in w.reason


def test_eg_window_empty_on_cohypo_005():
    assert 0.05 <= (3 * np.sqrt(2) - 2) / 12
    assert 0.05 > (np.sqrt(6) - 2) / 12
    assert not stepsize_window("eg", 1.0, 0.05).feasible
