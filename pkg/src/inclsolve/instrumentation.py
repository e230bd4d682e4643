"""
Potential functions, convergence certificates and rate diagnostics.

A certificate is one numerical instance of an inequality from a
convergence statement, evaluated on an actual iterate.  It passes when
``lhs <= rhs + rtol * (1 + |rhs|)``.  Certificates whose hypotheses are not
met by the run are still emitted, flagged ``applicable=False``, so that
nothing is skipped silently.
"""

from dataclasses import dataclass, field

import numpy as np

from inclsolve.errors import ConfigurationError, ParameterError
from inclsolve.operators import RTOL, fb_residual
from inclsolve.solvers import GOLDEN, stepsize_window

CERT_KINDS = ("potential_decrease", "explicit_bound", "fejer", "last_iterate_monotone",
              "linear_contraction", "summability")

THEOREMS = ("thm3.1a", "thm3.1b", "rem3.3", "thm4.1a", "thm4.1b", "thm5.1a", "thm5.1b",
            "thm6.1", "thm6.2", "thm7.1", "thm7.2", "thm7.3", "thm8.1", "thm8.2")


#%% POTENTIALS

@dataclass(frozen=True)
class PotentialCoefficients:
    """
    Coefficients of a potential at iteration ``k``.

    For the anchored kinds ``a, b, c`` multiply ``||w||^2``, the anchor
    inner product and the witness-gap term.  For ``rfbs`` ``a`` weights
    ``||x^k - y^{k-1}||^2`` and ``b`` the inner product; for ``gr`` ``a``
    weights ``||y^k - x*||^2`` and ``b`` weights ``||x^k - x^{k-1}||^2``.
    """

    scheme: str
    k: int
    a: float
    b: float
    c: float = 0.0
    t: float = 0.0


def potential_coefficients(kind, k, eta, rho=0.0, gamma=None, L=None, omega=None):
    """
    Coefficient schedule of each potential.

    ``b_0 = 1`` for the Halpern-type potentials and ``b_0 = 2 gamma`` for
    the Nesterov-type ones.
    """
    if kind == "eag":
        b = k + 1.0
        return PotentialCoefficients(kind, k, eta * b * (k + 1) / 2.0, b)
    if kind == "feg":
        b = k + 1.0
        return PotentialCoefficients(kind, k, ((eta - 2 * rho) * (k + 1) + 2 * rho) * (k + 1) / 2.0, b)
    if kind == "peag":
        b = k + 1.0
        if L is None:
            raise ConfigurationError("peag potential needs L")
        M = 2 * (1 + 13.0 / 4.0) * L ** 2
        a = b / 2.0 * (eta * (k + 1) - 4 * rho * k + 2 * rho * (k - 1) / (k + 3.0))
        c = b / 2.0 * (M * eta ** 3 * (k + 1) + 8 * rho * (k + 2) ** 2 / (k + 3.0))
        return PotentialCoefficients(kind, k, a, b, c)
    if kind in ("aeg", "apeg"):
        if gamma is None:
            raise ConfigurationError(f"{kind} potential needs gamma")
        b0 = 2 * gamma
        b = b0 * (k + 1) * (k + 2) / 2.0
        if kind == "aeg":
            return PotentialCoefficients(kind, k, b0 * (k + 1) * (gamma * k + 3 * gamma + 2 * rho) / 4.0,
                                         b, 0.0, k + 2.0)
        a = b0 * (k + 1) * (gamma * k + 5 * gamma + 2 * rho) / 4.0
        c = b0 * (k + 1) * ((31 * gamma + 20 * rho) * (k + 1) + gamma) / 4.0
        return PotentialCoefficients(kind, k, a, b, c, k + 2.0)
    if kind == "rfbs":
        return PotentialCoefficients(kind, k, 1 - np.sqrt(2) * L * eta, 2 * eta)
    if kind == "gr":
        if omega <= GOLDEN:
            return PotentialCoefficients(kind, k, omega, omega * (omega - 1) / 2.0)
        psi = (2 * omega + 2 - omega ** 2) / omega
        return PotentialCoefficients(kind, k, omega, psi * (omega - 1) / 2.0)
    raise ConfigurationError(f"no potential for {kind!r}")


def _sq(v):
    return float(v @ v)


def potential_value(kind, state, coeffs, problem):
    r"""
    Evaluate a potential at ``state``.

    * ``eag``/``feg``: :math:`a\|w^k\|^2 + b\langle w^k, x^k - x^0\rangle`
    * ``peag``: the above plus :math:`c\|w^k - \hat w^k\|^2`
    * ``aeg``: :math:`a\|w^{k-1}\|^2 + b\langle w^{k-1}, z^k - y^k\rangle
      + \|z^k + t_k(y^k - z^k) - x^\star\|^2`
    * ``apeg``: the above plus :math:`c\|w^{k-1} - \hat w^{k-1}\|^2`
    * ``rfbs``: :math:`\|x^k - x^\star\|^2 + 2\|x^k - x^{k-1}\|^2
      + a\|x^k - y^{k-1}\|^2 + b\langle F y^{k-1} - F x^\star, x^k - x^{k-1}\rangle`
    * ``gr``: :math:`a\|y^k - x^\star\|^2 + b\|x^k - x^{k-1}\|^2`

    Raises
    ------
    ConfigurationError
        If ``x*`` is required but unknown, or a needed witness is missing.
    """
    xs = problem.known_solution
    if kind in ("aeg", "apeg", "rfbs", "gr") and xs is None:
        raise ConfigurationError(f"{kind} potential requires a known solution")
    if kind in ("eag", "feg", "peag"):
        if state.w is None:
            raise ConfigurationError("state has no witness; fill it first")
        w = state.w.w
        v = coeffs.a * _sq(w) + coeffs.b * float(w @ (state.x - state.x0))
        if kind == "peag":
            v += coeffs.c * _sq(w - state.w_hat)
        return v
    if kind in ("aeg", "apeg"):
        wp = state.w_prev
        if wp is None:
            raise ConfigurationError("state has no previous witness")
        z, y, t = state.z, state.y, coeffs.t
        v = coeffs.a * _sq(wp) + coeffs.b * float(wp @ (z - y)) + _sq(z + t * (y - z) - xs)
        if kind == "apeg":
            v += coeffs.c * _sq(wp - state.w_hat_prev)
        return v
    if kind == "rfbs":
        dx = state.x - state.x_prev
        Fxs = problem.F(xs)
        return (_sq(state.x - xs) + 2 * _sq(dx) + coeffs.a * _sq(state.x - state.y_prev)
                + coeffs.b * float((state.Fy_prev - Fxs) @ dx))
    if kind == "gr":
        return coeffs.a * _sq(state.y - xs) + coeffs.b * _sq(state.x - state.x_prev)
    raise ConfigurationError(f"no potential for {kind!r}")


#%% CERTIFICATES

@dataclass(frozen=True)
class Certificate:
    """One checked inequality ``lhs <= rhs`` at iteration ``k``."""

    kind: str
    k: int
    lhs: float
    rhs: float
    passed: bool
    slack: float
    theorem: str = ""
    applicable: bool = True
    informational: bool = False
    note: str = ""

    @property
    def pass_(self):
        return self.passed


def make_certificate(kind, k, lhs, rhs, theorem="", rtol=RTOL, applicable=True,
                     informational=False, note=""):
    """Build a :class:`Certificate`; pass iff ``lhs <= rhs + rtol (1 + |rhs|)``."""
    if kind not in CERT_KINDS:
        raise ParameterError(f"unknown certificate kind {kind!r}")
    lhs, rhs = float(lhs), float(rhs)
    ok = bool(lhs <= rhs + rtol * (1.0 + abs(rhs)))
    return Certificate(kind, int(k), lhs, rhs, ok, rhs - lhs, theorem, applicable,
                       informational, note)


def default_theorem(method, problem):
    """Convergence statement matching ``method`` on ``problem``."""
    eq = problem.T.is_zero
    table = {"eg": "thm3.1a" if eq else "thm4.1a", "peg": "thm3.1b" if eq else "thm4.1b",
             "fbfs": "thm5.1a", "past_fbfs": "thm5.1b", "rfbs": "thm6.1", "gr": "thm6.2",
             "eag": "thm7.1", "feg": "thm7.2", "peag": "thm7.3", "aeg": "thm8.1",
             "apeg": "thm8.2"}
    return table.get(method)


_METHOD_OF = {"thm3.1a": "eg", "thm3.1b": "peg", "rem3.3": "eg", "thm4.1a": "eg",
              "thm4.1b": "peg", "thm5.1a": "fbfs", "thm5.1b": "past_fbfs", "thm6.1": "rfbs",
              "thm6.2": "gr", "thm7.1": "eag", "thm7.2": "feg", "thm7.3": "peag",
              "thm8.1": "aeg", "thm8.2": "apeg"}

_POTENTIAL_OF = {"thm6.1": "rfbs", "thm6.2": "gr", "thm7.1": "eag", "thm7.2": "feg",
                 "thm7.3": "peag", "thm8.1": "aeg", "thm8.2": "apeg"}


def _monotone_F(problem):
    return problem.F.mono_class in ("monotone", "mu_strong")


def hypotheses(theorem, problem, config, window):
    """
    Check the hypotheses of ``theorem`` for this run.

    Returns
    -------
    ok : bool
    reason : str
        Empty when ``ok``.
    """
    if theorem not in THEOREMS:
        raise ConfigurationError(f"unknown theorem tag {theorem!r}")
    if _METHOD_OF[theorem] != config.method:
        return False, f"{theorem} concerns method {_METHOD_OF[theorem]}"
    if config.override:
        return False, "step-size window overridden"
    if not window.feasible:
        return False, window.reason
    if not window.contains(config.eta):
        return False, "eta outside the window"
    if problem.known_solution is None:
        return False, "no known solution"
    eq = problem.T.is_zero
    if theorem in ("thm3.1a", "thm3.1b", "rem3.3", "thm5.1a", "thm5.1b") and not eq:
        return False, "stated for equations (T = 0) here"
    if theorem == "rem3.3" and not problem.mu > 0:
        return False, "needs strong monotonicity"
    if theorem in ("thm4.1a", "thm4.1b", "thm6.1", "thm6.2", "thm7.1"):
        if not _monotone_F(problem) or problem.rho > 0:
            return False, "needs monotone F"
        if not problem.T.maximal_monotone:
            return False, "needs maximally monotone T"
    if theorem in ("thm7.2", "thm7.3", "thm8.1", "thm8.2"):
        # F + T is rho-co-hypomonotone when T = 0, or when both parts are monotone
        if not (eq or (_monotone_F(problem) and problem.rho == 0)):
            return False, "co-hypomonotonicity of F + T not certified"
    return True, ""


class CertificateChecker:
    """
    Incremental certificate evaluation along one run.

    Feed the states ``0, 1, 2, ...`` in order to :meth:`update`; each call
    returns the certificates concluded at that index.

    Parameters
    ----------
    theorem : str
    problem : Problem
    config : SolverConfig
    window : StepWindow, optional
        Recomputed from ``config`` when omitted.
    rtol : float
    """

    def __init__(self, theorem, problem, config, window=None, rtol=RTOL):
        self.theorem = theorem
        self.problem = problem
        self.config = config
        self.rtol = rtol
        if window is None:
            window = stepsize_window(config.method, problem.L, config.rho_assumed,
                                     config.beta, config.omega, eta=config.eta, mu=problem.mu)
        self.window = window
        self.constants = dict(window.constants)
        self.applicable, self.reason = hypotheses(theorem, problem, config, window)
        self.prev = None
        self.prev_potential = None
        self.running = 0.0
        self.d0sq = None
        xs = problem.known_solution
        self.x_star = xs
        self.Fx_star = None if xs is None else problem.F(xs)

    # helpers
    def _cert(self, kind, k, lhs, rhs, informational=False, note=""):
        return make_certificate(kind, k, lhs, rhs, self.theorem, self.rtol,
                                self.applicable, informational, note or self.reason)

    def potential(self, state):
        kind = _POTENTIAL_OF.get(self.theorem)
        if kind is None or self.x_star is None and kind in ("aeg", "apeg", "rfbs", "gr"):
            return None
        c = self.config
        co = potential_coefficients(kind, state.k, c.eta, c.rho_assumed, c.gamma,
                                    self.problem.L, c.omega)
        try:
            return potential_value(kind, state, co, self.problem)
        except ConfigurationError:
            return None

    def update(self, state):
        """Certificates concluded at ``state.k``."""
        th, k = self.theorem, state.k
        out = []
        if self.d0sq is None:
            self.d0sq = (_sq(state.x0 - self.x_star) if self.x_star is not None else np.nan)
        d0sq = self.d0sq
        cst = self.constants
        eta = self.config.eta
        wsq = _sq(state.w.w)
        prev = self.prev
        pot = self.potential(state)

        if th in ("thm3.1a", "rem3.3"):
            self.running += wsq
            if th == "thm3.1a":
                out.append(self._cert("summability", k, self.running, cst["C_rho"] * d0sq))
            if prev is not None:
                dn, dp = _sq(state.x - self.x_star), _sq(prev.x - self.x_star)
                if th == "thm3.1a":
                    out.append(self._cert("fejer", k, dn, dp))
                    if self.config.beta == 1.0:
                        lhs = wsq + cst["psi"] * _sq(state.Fy_prev - prev.Fx)
                        out.append(self._cert("last_iterate_monotone", k, lhs, _sq(prev.w.w)))
                else:
                    out.append(self._cert("linear_contraction", k, dn, cst["phi"] * dp))
            if th == "thm3.1a" and self.config.beta == 1.0:
                out.append(self._cert("explicit_bound", k, wsq, cst["C_rho"] * d0sq / (k + 1)))

        elif th == "thm3.1b":
            gap = 0.0 if prev is None else _sq(state.x - prev.y_prev)
            self.running += wsq + cst["kappa"] * gap
            out.append(self._cert("summability", k, self.running, cst["C_hat_rho"] * d0sq))
            if self.config.beta == 1.0 and "kappa_hat" in cst:
                kh = cst["kappa_hat"]
                cur = wsq + kh * _sq(state.Fx - state.Fy_prev)
                if prev is not None:
                    out.append(self._cert("last_iterate_monotone", k, cur, self._last))
                out.append(self._cert("explicit_bound", k, wsq, cst["M_rho"] * d0sq / (k + 1)))
                self._last = cur

        elif th in ("thm4.1a", "thm5.1a"):
            Ckey = "C0" if th == "thm4.1a" else "C_rho"
            if prev is not None:
                self.running += wsq
                out.append(self._cert("summability", k, self.running, cst[Ckey] * d0sq))
                out.append(self._cert("fejer", k, _sq(state.x - self.x_star),
                                      _sq(prev.x - self.x_star)))
                if th == "thm4.1a":
                    out.append(self._cert("last_iterate_monotone", k, wsq, _sq(prev.w.w)))
                    out.append(self._cert("explicit_bound", k, wsq, cst["C0"] * d0sq / k))

        elif th in ("thm4.1b", "thm5.1b"):
            if prev is not None:
                if th == "thm5.1b":
                    self.running += wsq + cst["weight"] * _sq(state.x - state.y_prev)
                    out.append(self._cert("summability", k, self.running, cst["C_hat_rho"] * d0sq))
                elif "C0_hat" in cst:
                    self.running += wsq
                    out.append(self._cert("summability", k, self.running, cst["C0_hat"] * d0sq))
                    kap = cst["kappa_incl"]
                    cur = wsq + kap * _sq(state.Fx - state.Fy_prev)
                    if k >= 2:
                        out.append(self._cert("last_iterate_monotone", k, cur, self._last))
                    out.append(self._cert("explicit_bound", k, cur,
                                          cst["C0_hat"] * d0sq / (cst["m0"] * k),
                                          informational=True, note="depends on psi"))
                    self._last = cur

        elif th == "thm6.1":
            Fyp = state.Fy_prev
            term = wsq + cst["kappa"] * _sq(state.Fx - Fyp)
            self.running += term
            out.append(self._cert("summability", k, self.running, cst["C0"] * d0sq))
            out.append(self._cert("explicit_bound", k, term, cst["C0"] * d0sq / (k + 1)))
            if prev is not None:
                out.append(self._cert("potential_decrease", k, pot, self.prev_potential))

        elif th == "thm6.2":
            self.running += wsq
            C = cst["C0"] if "C0" in cst else cst["C0_hat"]
            out.append(self._cert("summability", k, self.running, C * d0sq))
            if "C0_hat_corrected" in cst:
                out.append(self._cert("summability", k, self.running,
                                      cst["C0_hat_corrected"] * d0sq, informational=True,
                                      note="constant rederived from the potential"))
            if prev is not None:
                out.append(self._cert("potential_decrease", k, pot, self.prev_potential))

        elif th in ("thm7.1", "thm7.2", "thm7.3"):
            if k == 0:
                self.w0sq = wsq
            if th == "thm7.1":
                rhs = (4 * d0sq + 2 * eta ** 2 * self.w0sq) / (eta ** 2 * (k + 1) ** 2)
            elif th == "thm7.2":
                r = self.config.rho_assumed
                rhs = ((4 * d0sq + 2 * eta * (eta - 2 * r) * self.w0sq)
                       / ((eta - 2 * r) ** 2 * (k + 1) ** 2))
            else:
                r = self.config.rho_assumed
                rhs = (4 / (3 * (eta - 4 * r) ** 2) * d0sq
                       + 2 * (3 * eta - 2 * r) / (9 * (eta - 4 * r)) * self.w0sq) / (k + 1) ** 2
            out.append(self._cert("explicit_bound", k, wsq, rhs))
            if th == "thm7.3":
                # Young's inequality on the potential yields three times the printed value
                out.append(self._cert("explicit_bound", k, wsq, 3.0 * rhs, informational=True,
                                      note="constant rederived from the potential"))
            if prev is not None:
                out.append(self._cert("potential_decrease", k, pot, self.prev_potential))

        elif th in ("thm8.1", "thm8.2"):
            g = self.config.gamma
            if th == "thm8.1":
                rhs = 4 * d0sq / (g ** 2 * (k + 2) ** 2)
            else:
                rhs = 4 * d0sq / (g ** 2 * (k + 2) * (k + 4))
            out.append(self._cert("explicit_bound", k, wsq, rhs))
            if prev is not None:
                out.append(self._cert("potential_decrease", k, pot, self.prev_potential))

        self.prev = state
        self.prev_potential = pot
        self.last_potential = pot
        return out


def check_certificates(states, theorem, problem, config, window=None, rtol=RTOL):
    """
    Evaluate every certificate of ``theorem`` along a sequence of states.

    Returns
    -------
    list of Certificate
    """
    chk = CertificateChecker(theorem, problem, config, window, rtol)
    out = []
    for st in states:
        out.extend(chk.update(st))
    return out


def first_failure(certs):
    """First applicable, non-informational certificate that failed, or ``None``."""
    for c in certs:
        if c.applicable and not c.informational and not c.passed:
            return c
    return None


#%% TRACE

@dataclass
class Trace:
    """
    Per-iteration metrics of one run.

    ``rows`` holds dictionaries with keys ``k, res_norm, fb_res, dist,
    potential, best_res, cert_pass``; ``certificates`` collects every
    certificate emitted.  ``meta`` is fixed at construction.
    """

    meta: dict
    rows: list = field(default_factory=list)
    certificates: list = field(default_factory=list)

    def __len__(self):
        return len(self.rows)

    def column(self, key):
        return np.array([r[key] for r in self.rows], dtype=float)

    def append(self, row, certs=()):
        self.rows.append(row)
        self.certificates.extend(certs)

    @property
    def failure(self):
        return first_failure(self.certificates)

    @property
    def all_pass(self):
        return self.failure is None


def state_metrics(state, problem, eta):
    """``(res_norm, fb_res, dist)`` at ``state``; ``dist`` is NaN without ``x*``."""
    res = float(np.linalg.norm(state.w.w))
    fb = float(np.linalg.norm(fb_residual(problem, eta, state.x)))
    xs = problem.known_solution
    dist = float(np.linalg.norm(state.x - xs)) if xs is not None else float("nan")
    return res, fb, dist


#%% SERIES TOOLS

def best_iterate(series):
    """
    Index and value of the smallest entry (first one on ties).

    Raises
    ------
    ParameterError
        On an empty series.
    """
    s = np.asarray(series, dtype=float)
    if s.size == 0:
        raise ParameterError("empty series")
    i = int(np.argmin(s))
    return i, float(s[i])


def rate_fit(series, k_min=0, k_max=None):
    """
    Least-squares slope of ``log(value)`` against ``log(k + 1)``.

    Parameters
    ----------
    series : array_like
        Values indexed by ``k = 0, 1, ...``.
    k_min, k_max : int
        Inclusive index range used in the fit.

    Returns
    -------
    slope, intercept, r2 : float

    Raises
    ------
    ParameterError
        If fewer than 10 points remain or a value is not positive.
    """
    s = np.asarray(series, dtype=float)
    k = np.arange(s.size)
    mask = k >= k_min
    if k_max is not None:
        mask &= k <= k_max
    v = s[mask]
    if v.size < 10:
        raise ParameterError("rate_fit needs at least 10 points")
    if not np.all(v > 0):
        raise ParameterError("rate_fit needs positive values")
    X = np.log(k[mask] + 1.0)
    Y = np.log(v)
    slope, intercept = np.polyfit(X, Y, 1)
    resid = Y - (slope * X + intercept)
    tot = np.sum((Y - Y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid ** 2) / tot if tot > 0 else 1.0
    return float(slope), float(intercept), float(r2)
