import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from inclsolve.errors import ConfigurationError, NumericError, ParameterError
from inclsolve.operators import Problem
from inclsolve.solvers import (GOLDEN, METHODS, Schedule, apeg_gamma_max,
                               fill_witness, init_state, iterate, make_config, step,
                               stepsize_window)
from inclsolve.zoo import get_problem, initial_point, list_problems, make_affine_skew

X0 = np.array([1.0, 0.0])


def _cfg(method, problem, eta, **kw):
    return make_config(method, problem, eta=eta, override=True, **kw)


def _states(problem, cfg, x0, n):
    return list(iterate(problem, cfg, x0, n))


# hand recursions on the rotation F(x1, x2) = (x2, -x1)

def test_eg_hand_recursion(rotation):
    s0, s1 = _states(rotation, _cfg("eg", rotation, 0.5), X0, 1)
    np.testing.assert_allclose(s1.y_prev, [1.0, 0.5], atol=1e-15)
    np.testing.assert_allclose(s1.x, [0.75, 0.5], atol=1e-15)


def test_eg_plus_uses_step_eta_over_beta(rotation):
    s1 = _states(rotation, _cfg("eg", rotation, 0.25, beta=0.5), X0, 1)[1]
    # extrapolation step eta / beta = 0.5
    np.testing.assert_allclose(s1.y_prev, [1.0, 0.5], atol=1e-15)
    np.testing.assert_allclose(s1.x, [1.0 - 0.25 * 0.5, 0.25], atol=1e-15)


def test_peg_hand_recursion(rotation):
    s1 = _states(rotation, _cfg("peg", rotation, 0.2), X0, 1)[1]
    np.testing.assert_allclose(s1.y_prev, [1.0, 0.2], atol=1e-15)
    np.testing.assert_allclose(s1.x, [0.96, 0.2], atol=1e-15)


def test_peg_first_step_equals_eg(rotation):
    a = _states(rotation, _cfg("peg", rotation, 0.2), X0, 1)[1]
    b = _states(rotation, _cfg("eg", rotation, 0.2), X0, 1)[1]
    np.testing.assert_array_equal(a.x, b.x)


def test_rfbs_hand_recursion(rotation):
    s = _states(rotation, _cfg("rfbs", rotation, 0.3), X0, 2)
    np.testing.assert_allclose(s[1].x, [1.0, 0.3], atol=1e-15)
    np.testing.assert_allclose(s[2].y_prev, [1.0, 0.6], atol=1e-15)
    np.testing.assert_allclose(s[2].x, [0.82, 0.6], atol=1e-15)


def test_gr_hand_recursion(rotation):
    s = _states(rotation, _cfg("gr", rotation, 0.4, omega=2.0), X0, 1)
    np.testing.assert_array_equal(s[0].y, X0)
    np.testing.assert_allclose(s[1].x, [1.0, 0.4], atol=1e-15)
    np.testing.assert_allclose(s[1].y, [1.0, 0.2], atol=1e-15)


def test_eag_hand_recursion(rotation):
    s1 = _states(rotation, _cfg("eag", rotation, 1.0), X0, 1)[1]
    np.testing.assert_allclose(s1.y_prev, [1.0, 0.5], atol=1e-15)
    np.testing.assert_allclose(s1.x, [0.5, 1.0], atol=1e-15)


def test_fw_norm_recursion(rotation):
    s = _states(rotation, _cfg("fw", rotation, 0.5), X0, 3)
    np.testing.assert_allclose(s[1].x, [1.0, 0.5])
    for a, b in zip(s, s[1:]):
        assert float(b.x @ b.x) == pytest.approx(1.25 * float(a.x @ a.x), rel=1e-14)


def test_fw_on_identity_halves():
    p = make_affine_skew(1.0, 0.0, 2)
    s = _states(p, _cfg("fw", p, 0.5), np.array([2.0, -4.0]), 3)
    for a, b in zip(s, s[1:]):
        np.testing.assert_array_equal(b.x, 0.5 * a.x)


def test_fw_requires_equation():
    p = get_problem("bilinear-box-4")
    with pytest.raises(ConfigurationError):
        init_state(p, _cfg("fw", p, 0.1), np.zeros(4))


def test_aeg_hand_recursion(rotation):
    cfg = make_config("aeg", rotation, gamma=1.0)
    assert cfg.eta == 1.0
    s0, s1 = _states(rotation, cfg, X0, 1)
    Fy0 = np.array([0.0, -1.0])
    x0 = X0 - Fy0                                   # (1, 1)
    np.testing.assert_allclose(s0.x, x0, atol=1e-15)
    w0 = np.array([x0[1], -x0[0]])                  # F x0
    np.testing.assert_allclose(s0.w.w, w0, atol=1e-15)
    z1 = x0 - w0                                    # (0, 2)
    y1 = z1 + (1 / 3) * (z1 - X0) + (2 / 3) * (X0 - z1)
    np.testing.assert_allclose(s1.z, z1, atol=1e-15)
    np.testing.assert_allclose(s1.y, y1, atol=1e-15)
    x1 = y1 - np.array([y1[1], -y1[0]]) + (2 / 3) * w0
    np.testing.assert_allclose(s1.x, x1, atol=1e-15)
    np.testing.assert_allclose(s1.x, [-1 / 3, 1.0], atol=1e-15)


def test_apeg_hand_recursion(rotation):
    g = 1 / (4 * math.sqrt(29))
    cfg = make_config("apeg", rotation, gamma=g)
    eta = 6 * g
    assert cfg.eta == pytest.approx(eta, rel=1e-15)
    F = lambda v: np.array([v[1], -v[0]])
    s0, s1 = _states(rotation, cfg, X0, 1)
    x0 = X0 - eta * F(X0)
    wh0 = (X0 - x0) / eta
    z1 = x0 - g * wh0
    y1 = z1 + (1 / 3) * (z1 - X0) + (2 / 3) * (X0 - z1)
    x1 = y1 - eta * F(y1) + (2 / 3) * eta * wh0
    np.testing.assert_allclose(s0.x, x0, atol=1e-15)
    np.testing.assert_allclose(s1.y, y1, atol=1e-15)
    np.testing.assert_allclose(s1.x, x1, atol=1e-15)


# reductions

def test_fbfs_equals_eg_on_equations(rotation):
    a = _states(rotation, _cfg("fbfs", rotation, 0.5), X0, 3)
    b = _states(rotation, _cfg("eg", rotation, 0.5), X0, 3)
    for u, v in zip(a, b):
        np.testing.assert_allclose(u.x, v.x, atol=1e-14)


@pytest.mark.parametrize("pid", ["rotation2", "bilinear-box-4", "rotation-l1-4"])
def test_past_fbfs_is_forward_reflected_backward(pid):
    p = get_problem(pid)
    eta = 0.15
    s = _states(p, _cfg("past_fbfs", p, eta), initial_point(p, 3), 8)
    ys = [t.y_prev for t in s[1:]]
    Fs = [p.F(y) for y in ys]
    for k in range(1, len(ys) - 1):
        pt = p.T.resolvent(eta, ys[k] - eta * (2 * Fs[k] - Fs[k - 1]))
        np.testing.assert_allclose(ys[k + 1], pt, atol=1e-13)


def test_feg_reduces_to_eag(rotation):
    a = _states(rotation, _cfg("feg", rotation, 0.7), X0, 5)
    b = _states(rotation, _cfg("eag", rotation, 0.7), X0, 5)
    for u, v in zip(a, b):
        np.testing.assert_allclose(u.x, v.x, atol=1e-12)


def test_peag_first_step_equals_feg(rotation):
    eta = math.sqrt(2) / math.sqrt(17)
    a = _states(rotation, make_config("peag", rotation), X0, 1)[1]
    b = _states(rotation, _cfg("feg", rotation, eta), X0, 1)[1]
    np.testing.assert_allclose(a.x, b.x, atol=1e-15)


# fixed points

@pytest.mark.parametrize("method", [m for m in METHODS if m != "fw"])
@pytest.mark.parametrize("pid", ["rotation2", "bilinear-box-4", "cohypo-0.05",
                                 "skew-simplex-4", "rotation-l1-4"])
def test_solution_is_fixed_point(method, pid):
    p = get_problem(pid)
    cfg = _cfg(method, p, 0.3, omega=GOLDEN if method == "gr" else None)
    xs = p.known_solution
    for s in _states(p, cfg, xs, 5):
        np.testing.assert_allclose(s.x, xs, atol=1e-12)


# evaluation budget

def _counting(problem):
    calls = {"F": 0, "J": 0}

    def F(x):
        calls["F"] += 1
        return problem.F(x)

    def J(eta, x):
        calls["J"] += 1
        return problem.T.resolvent(eta, x)

    p = Problem(F=replace(problem.F, eval=F), T=replace(problem.T, resolvent=J),
                dim=problem.dim, known_solution=problem.known_solution, L=problem.L,
                mu=problem.mu, rho=problem.rho, name=problem.name)
    return p, calls


# peg evaluates its two resolvents; see the README for the rationale
BUDGET = {"eg": (2, 2), "fbfs": (2, 1), "eag": (2, 2), "feg": (2, 1), "aeg": (2, 1),
          "peg": (1, 2), "past_fbfs": (1, 1), "rfbs": (1, 1), "gr": (1, 1),
          "peag": (1, 1), "apeg": (1, 1), "fbs": (1, 1)}


@pytest.mark.parametrize("method", sorted(BUDGET))
def test_evaluation_budget(method):
    base = get_problem("bilinear-box-4")
    p, calls = _counting(base)
    cfg = _cfg(method, base, 0.1, omega=GOLDEN if method == "gr" else None)
    s = fill_witness(init_state(p, cfg, initial_point(base, 0)), p)
    sched = Schedule(method, cfg.eta, cfg.rho_assumed)
    for _ in range(6):
        if method == "aeg":
            s = fill_witness(s, p)
        calls.update(F=0, J=0)
        new = step(s, cfg, p, sched)
        assert (calls["F"], calls["J"]) == BUDGET[method]
        s = fill_witness(new, p)


def test_no_resolvent_calls_when_T_is_zero(rotation):
    p, calls = _counting(rotation)
    cfg = _cfg("eg", rotation, 0.5)
    s = fill_witness(init_state(p, cfg, X0), p)
    calls.update(F=0, J=0)
    step(s, cfg, p)
    assert calls["J"] == 0


# schedules

@given(k=st.integers(0, 10 ** 6))
def test_schedule_identities(k):
    s = Schedule("aeg", 0.5)
    assert abs(s.tau(k) * (k + 2) - 1) <= 1e-15
    assert abs(s.theta(k) * s.t(k + 1) - (s.t(k) - 1)) <= 1e-15 * s.t(k)
    assert abs(s.nu(k) * s.t(k + 1) - s.t(k)) <= 1e-15 * s.t(k)


@given(k=st.integers(0, 10 ** 5), eta=st.floats(0.01, 10), rho=st.floats(0, 1))
def test_eta_hat_forms_agree(k, eta, rho):
    h = Schedule("feg", eta, rho).eta_hat(k)
    n = Schedule("aeg", eta, rho).eta_hat(k)
    assert h == pytest.approx(n, rel=1e-15)
    assert Schedule("feg", eta, rho).beta(k) == pytest.approx(2 * rho * (k + 1) / (k + 2))
    t = 1 / (k + 2)
    assert Schedule("peag", eta, rho).beta(k) == pytest.approx(4 * rho * (1 - t) / (1 + t))


def test_schedule_at_zero():
    s = Schedule("eag", 0.8)
    assert s.tau(0) == 0.5 and s.eta_hat(0) == 0.4


# windows

def test_eg_window_monotone():
    w = stepsize_window("eg", 2.0, 0.0, 1.0)
    assert (w.lo, w.hi) == (0.0, pytest.approx(0.5))
    assert not w.contains(0.5) and w.contains(0.49)


def test_peg_window_monotone():
    w = stepsize_window("peg", 1.0, 0.0, 1.0)
    assert (w.lo, w.hi) == (0.0, pytest.approx(1 / 3))


def test_eg_window_infeasible_names_threshold():
    w = stepsize_window("eg", 1.0, 0.2)
    assert not w.feasible and "(3*sqrt(2) - 2)/12" in w.reason


def test_eg_window_empty_between_thresholds():
    # (sqrt(6)-2)/12 < 0.05 < (3 sqrt(2)-2)/12: the interval has no real end points
    w = stepsize_window("eg", 1.0, 0.05)
    assert not w.feasible


def test_remaining_windows():
    L = 2.0
    assert stepsize_window("rfbs", L).hi == pytest.approx((math.sqrt(2) - 1) / L)
    assert stepsize_window("gr", L, omega=GOLDEN).hi == pytest.approx(GOLDEN / (2 * L))
    psi = (2 * 2.5 + 2 - 2.5 ** 2) / 2.5
    assert stepsize_window("gr", L, omega=2.5).hi == pytest.approx(psi / (2 * L))
    w = stepsize_window("eag", L)
    assert w.hi == 0.5 and w.hi_closed and w.contains(0.5)
    w = stepsize_window("feg", 1.0, 0.1)
    assert (w.lo, w.hi) == (pytest.approx(0.2), 1.0) and not w.contains(0.2)
    w = stepsize_window("peag", L)
    assert w.lo == w.hi == pytest.approx(math.sqrt(2) / (math.sqrt(17) * L))
    assert not stepsize_window("rfbs", 1.0, 0.01).feasible


def test_apeg_gamma_max_at_zero_rho():
    g = apeg_gamma_max(3.0, 0.0)
    assert g == pytest.approx(1 / (4 * 3.0 * math.sqrt(29)), rel=1e-14)
    assert 16 * 9 * (3 * (3 * g) ** 2 + g * 2 * g) == pytest.approx(1.0)


def test_aeg_default_gamma_is_admissible():
    p = get_problem("cohypo-0.05")
    g = 1 / p.L - 2 * p.rho
    cfg = make_config("aeg", p, gamma=g)
    assert cfg.eta == pytest.approx(1 / p.L)


def test_default_eta_is_midpoint():
    assert stepsize_window("eg", 1.0).default_eta() == 0.5
    w = stepsize_window("feg", 1.0, 0.1)
    assert w.default_eta() == pytest.approx(0.6)


@given(omega=st.one_of(st.floats(0.0, 1.0), st.floats(1 + math.sqrt(3), 10)))
def test_omega_outside_range_rejected(omega):
    with pytest.raises(ParameterError):
        make_config("gr", get_problem("rotation2"), omega=omega)


def test_config_errors(rotation):
    with pytest.raises(ConfigurationError):
        make_config("newton", rotation)
    with pytest.raises(ParameterError):
        make_config("eg", rotation, eta=-1.0, override=True)
    with pytest.raises(ParameterError):
        make_config("eg", rotation, eta=1.5)
    with pytest.raises(ParameterError):
        make_config("eg", rotation, eta="fast")
    assert make_config("eg", rotation, eta=1.5, override=True).override


def test_overflow_raises_numeric_error(rotation):
    with pytest.raises(NumericError):
        for _ in iterate(rotation, _cfg("fw", rotation, 10.0), X0, 10 ** 4):
            pass


@pytest.mark.parametrize("pid", ["rotation2", "bilinear-box-4", "rotation-ball-4"])
def test_eg_fejer_and_monotone_residual(pid):
    p = get_problem(pid)
    cfg = make_config("eg", p)
    xs = p.known_solution
    s = _states(p, cfg, initial_point(p, 1), 300)
    for a, b in zip(s, s[1:]):
        assert np.linalg.norm(b.x - xs) <= np.linalg.norm(a.x - xs) + 1e-10
        assert np.linalg.norm(b.w.w) <= np.linalg.norm(a.w.w) + 1e-10


@pytest.mark.parametrize("pid", [p for p, _ in list_problems()])
def test_initial_witness_is_in_T(pid):
    p = get_problem(pid)
    cfg = _cfg("eg", p, 0.3)
    s = init_state(p, cfg, initial_point(p, 2))
    # xi in T(x) iff J_{eta T}(x + eta xi) = x
    np.testing.assert_allclose(p.T.resolvent(0.3, s.x + 0.3 * s.xi), s.x, atol=1e-12)


def test_iterate_yields_filled_witnesses(rotation):
    for method in ("peg", "rfbs", "peag", "apeg"):
        cfg = _cfg(method, rotation, 0.1)
        for s in _states(rotation, cfg, X0, 3):
            assert s.w is not None and s.Fx is not None
            np.testing.assert_allclose(s.w.w, s.Fx + s.w.xi)
