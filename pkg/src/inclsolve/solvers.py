"""
Step kernels for the extragradient family.

Every kernel maps an :class:`IterState` to the next one and never mutates
its input.  Witnesses (``xi``, ``zeta``, ``w_hat``, ...) are always
reconstructed from resolvent outputs, so they satisfy their defining
identities up to roundoff.

The parameter side lives here as well: :func:`stepsize_window` returns the
admissible step-size interval of each method together with the constants
appearing in its convergence bounds, and :class:`Schedule` produces the
anchoring and momentum sequences.
"""

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from inclsolve.errors import ConfigurationError, NumericError, ParameterError
from inclsolve.operators import Witness, as_vector, resolvent_apply

GOLDEN = (1.0 + np.sqrt(5.0)) / 2.0

METHODS = ("fw", "fbs", "eg", "peg", "fbfs", "past_fbfs", "rfbs", "gr",
           "eag", "feg", "peag", "aeg", "apeg")
HALPERN = ("eag", "feg", "peag")
NESTEROV = ("aeg", "apeg")

# PEAG stepsize constants: omega and M = 2 (1 + omega) L^2 with M eta^2 = 1
PEAG_OMEGA = 13.0 / 4.0


#%% SCHEDULES

@dataclass(frozen=True)
class Schedule:
    r"""
    Anchoring and momentum sequences.

    ``tau_k = 1/(k+2)``, ``t_k = k+2``, ``theta_k = (t_k-1)/t_{k+1}``,
    ``nu_k = t_k/t_{k+1}``.  The inner step ``eta_hat_k`` equals
    ``(1 - tau_k) eta`` for Halpern-type schemes and ``(t_k - 1) eta / t_k``
    for the Nesterov-type ones (the two coincide numerically).  The
    correction ``beta_k`` is ``2 rho (1 - tau_k)`` for FEG and
    ``4 rho (1 - tau_k)/(1 + tau_k)`` for PEAG, zero otherwise.
    """

    method: str
    eta: float
    rho: float = 0.0

    @staticmethod
    def tau(k):
        return 1.0 / (k + 2)

    @staticmethod
    def t(k):
        return float(k + 2)

    def theta(self, k):
        return (self.t(k) - 1.0) / self.t(k + 1)

    def nu(self, k):
        return self.t(k) / self.t(k + 1)

    def eta_hat(self, k):
        if self.method in NESTEROV:
            t = self.t(k)
            return (t - 1.0) * self.eta / t
        if self.method in HALPERN:
            return (1.0 - self.tau(k)) * self.eta
        return self.eta

    def beta(self, k):
        tau = self.tau(k)
        if self.method == "feg":
            return 2.0 * self.rho * (1.0 - tau)
        if self.method == "peag":
            return 4.0 * self.rho * (1.0 - tau) / (1.0 + tau)
        return 0.0


#%% STEPSIZE WINDOWS

@dataclass(frozen=True)
class StepWindow:
    """
    Admissible step sizes for one method and the bound constants at ``eta``.

    Attributes
    ----------
    lo, hi : float
        Interval end points.  ``lo_closed``/``hi_closed`` tell whether the
        end points are admissible.
    feasible : bool
        ``False`` when the hypotheses cannot be met; ``reason`` names the
        violated condition.
    eta : float or None
        The step at which ``constants`` were evaluated.
    constants : dict
        Named constants of the convergence statement.
    """

    method: str
    lo: float
    hi: float
    lo_closed: bool = False
    hi_closed: bool = False
    feasible: bool = True
    reason: str = ""
    eta: Optional[float] = None
    constants: dict = field(default_factory=dict)

    def contains(self, eta):
        if not self.feasible:
            return False
        above = eta >= self.lo if self.lo_closed else eta > self.lo
        below = eta <= self.hi if self.hi_closed else eta < self.hi
        return bool(above and below)

    def default_eta(self):
        """
        Arithmetic midpoint of the window.

        For windows starting at 0 this is ``hi / 2``.  Degenerate windows
        (``lo == hi``, closed) return the single admissible value.
        """
        if not self.feasible:
            raise ParameterError(f"{self.method}: empty step-size window ({self.reason})")
        if self.lo == self.hi:
            return self.lo
        return 0.5 * (self.lo + self.hi)


def _infeasible(method, reason, constants=None):
    # constants at a supplied step are still reported, for diagnostics
    return StepWindow(method=method, lo=0.0, hi=0.0, feasible=False, reason=reason,
                      constants=constants or {})


def _eg_constants(L, rho, beta, eta, mu):
    c = {"C_rho": beta ** 2 / (eta * (eta * beta - 6 * beta ** 2 * rho
                                      - (3 * L * rho + 1) * L * eta ** 2)),
         "psi": 1.0 - 4.0 * rho / eta - L ** 2 * eta * (eta + 4.0 * rho)}
    if beta - L * eta > 0:
        c["C0"] = (3 + 2 * L ** 2) / (eta ** 2 * (beta - L * eta))
    if mu > 0:
        c["phi"] = 1.0 - eta ** 2 * (1.0 - L ** 2 * eta ** 2) * mu ** 2
    return c


def _peg_constants(L, rho, beta, eta):
    gap = beta * eta - 3 * L * eta ** 2 - 4 * rho
    c = {"kappa": (2 * L ** 2 * eta ** 2 + 3) * L / (2 * gap),
         "C_hat_rho": (2 * L ** 2 * eta ** 2 + 3) / (gap * eta)}
    if 1 - 2 * L ** 2 * eta ** 2 > 0:
        c["kappa_hat"] = 2 * (eta + 4 * rho) * L ** 2 * eta / (1 - 2 * L ** 2 * eta ** 2)
        c["M_rho"] = c["C_hat_rho"] * max(L ** 2 * c["kappa_hat"] / c["kappa"], 1.0)
    if beta - 3 * L * eta > 0 and 1 - 9 * L ** 2 * eta ** 2 > 0:
        c["C0_hat"] = (3 + 2 * L ** 2) / (eta ** 2 * (beta - 3 * L * eta))
        c["psi_info"] = L * (3 + 2 * L ** 2) / (2 * eta * (beta - 3 * L * eta))
        c["kappa_incl"] = (1 + 9 * L ** 2 * eta ** 2) / (1 - 9 * L ** 2 * eta ** 2)
        c["m0"] = max(c["kappa_incl"] / c["psi_info"], 1.0)
    return c


def _gr_constants(L, omega, eta):
    if omega <= GOLDEN:
        return {"varphi": (omega ** 2 - 4 * L ** 2 * eta ** 2) / (2 * omega),
                "C0": ((omega ** 2 - 2 * L ** 2 * eta ** 2) * omega ** 2
                       / ((omega ** 2 - 4 * L ** 2 * eta ** 2) * eta ** 2 * (omega - 1)))}
    psi = (2 * omega + 2 - omega ** 2) / omega
    den = (omega - 1) * (psi ** 2 - 4 * L ** 2 * eta ** 2) * eta ** 2 * psi
    return {"psi": psi,
            "kappa": (psi ** 2 - 4 * L ** 2 * eta ** 2) / (2 * psi),
            "C0_hat": (psi ** 2 - 2 * L ** 2 * eta ** 2 * (2 * omega ** 2 - psi ** 2)) * omega / den,
            # numerator carrying the omega^2 factor the potential argument produces
            "C0_hat_corrected": (omega ** 2 * psi ** 2
                                 - 2 * L ** 2 * eta ** 2 * (2 * omega ** 2 - psi ** 2)) * omega / den}


def apeg_gamma_max(L, rho):
    """Largest ``gamma`` with ``16 L^2 [3(3g + 2rho)^2 + g(2g + rho)] <= 1``."""
    # 29 g^2 + 37 rho g + 12 rho^2 - 1/(16 L^2) = 0
    c = 12 * rho ** 2 - 1.0 / (16 * L ** 2)
    disc = (37 * rho) ** 2 - 4 * 29 * c
    return (-37 * rho + np.sqrt(disc)) / 58.0


def stepsize_window(method, L, rho=0.0, beta=1.0, omega=None, eta=None, mu=0.0):
    r"""
    Admissible step-size interval and convergence constants.

    Parameters
    ----------
    method : str
        One of :data:`METHODS`.
    L : float
        Lipschitz constant of ``F``, positive.
    rho : float
        Co-hypomonotonicity constant, nonnegative.
    beta : float
        Scaling in ``(0, 1]`` for the EG/PEG/FBFS families.
    omega : float, optional
        GR parameter in ``(1, 1 + sqrt(3))``; defaults to the golden ratio.
    eta : float, optional
        Step at which to evaluate the constants; defaults to the midpoint.
    mu : float
        Strong monotonicity constant, used for the EG contraction factor.

    Returns
    -------
    StepWindow

    Notes
    -----
    For ``aeg`` and ``apeg`` the window is expressed in ``eta``; the
    companion ``gamma`` is ``eta - 2 rho`` and ``eta / 6 - 2 rho / 3``
    respectively, and is reported in ``constants``.
    """
    if method not in METHODS:
        raise ConfigurationError(f"unknown method {method!r}")
    if not L > 0:
        raise ParameterError("L must be positive")
    if rho < 0:
        raise ParameterError("rho must be nonnegative")
    if not 0 < beta <= 1:
        raise ParameterError("beta must lie in (0, 1]")
    Lr = L * rho

    if method in ("fw", "fbs"):
        # baselines: no convergence statement, any positive step is allowed
        win = StepWindow(method, 0.0, 2.0 / L)
        return replace(win, eta=eta if eta is not None else win.default_eta())

    if method in ("eg", "fbfs"):
        diag = _eg_constants(L, rho, beta, eta, mu) if eta is not None else None
        if Lr > (3 * np.sqrt(2) - 2) / 12:
            return _infeasible(method, "L*rho <= (3*sqrt(2) - 2)/12", diag)
        disc = 1 - 24 * Lr * (3 * Lr + 1)
        if disc < 0:
            return _infeasible(method, "1 - 24 L rho (3 L rho + 1) >= 0 (L*rho <= (sqrt(6) - 2)/12)",
                               diag)
        den = 2 * L * (3 * Lr + 1)
        win = StepWindow(method, beta * (1 - np.sqrt(disc)) / den, beta * (1 + np.sqrt(disc)) / den)
        e = eta if eta is not None else win.default_eta()
        if method == "eg":
            c = _eg_constants(L, rho, beta, e, mu)
        else:
            c = {"C_rho": (3 + 2 * L ** 2) / (e * (beta * e - 6 * beta ** 2 * rho
                                                  - (3 * Lr + 1) * L * e ** 2))}
        return replace(win, eta=e, constants=c)

    if method == "peg":
        if 12 * Lr > beta ** 2:
            return _infeasible(method, "L*rho <= beta^2/12")
        r = np.sqrt(beta ** 2 - 12 * Lr)
        # the constants need beta eta - 3 L eta^2 - 4 rho > 0, whose roots use
        # beta^2 - 48 L rho; intersect with the printed interval
        if 48 * Lr > beta ** 2:
            return _infeasible(method, "beta*eta - 3*L*eta^2 - 4*rho > 0 needs L*rho <= beta^2/48")
        q = np.sqrt(beta ** 2 - 48 * Lr)
        win = StepWindow(method, max((beta - r) / (6 * L), (beta - q) / (6 * L)),
                         min((beta + r) / (6 * L), (beta + q) / (6 * L)))
        e = eta if eta is not None else win.default_eta()
        return replace(win, eta=e, constants=_peg_constants(L, rho, beta, e))

    if method == "past_fbfs":
        if Lr > (2 * np.sqrt(3) - 3) / 24:
            return _infeasible(method, "L*rho <= (2*sqrt(3) - 3)/24")
        disc = 1 - 48 * Lr * (4 * Lr + 1)
        if disc < 0:
            return _infeasible(method, "1 - 48 L rho (4 L rho + 1) >= 0")
        den = 6 * L * (4 * Lr + 1)
        win = StepWindow(method, beta * (1 - np.sqrt(disc)) / den, beta * (1 + np.sqrt(disc)) / den)
        e = eta if eta is not None else win.default_eta()
        c = {"C_hat_rho": (3 + 2 * L ** 2) / (e * (beta * e - 4 * beta ** 2 * rho
                                                   - 3 * (4 * Lr + 1) * L * e ** 2)),
             "weight": (L * e ** 2 + 8 * beta ** 2 * rho) / (2 * e)}
        return replace(win, eta=e, constants=c)

    if method == "rfbs":
        if rho > 0:
            return _infeasible(method, "monotone F required (rho = 0)")
        win = StepWindow(method, 0.0, (np.sqrt(2) - 1) / L)
        e = eta if eta is not None else win.default_eta()
        c = {"C0": (5 * L ** 2 * e ** 2 + 3) / (3 * e ** 2 * (1 - (1 + np.sqrt(2)) * L * e)),
             "kappa": 2 * L ** 2 * e ** 2 / (1 - 2 * L ** 2 * e ** 2),
             "kappa_printed": 2 * L ** 2 * e ** 2 / (1 - L ** 2 * e ** 2)}
        return replace(win, eta=e, constants=c)

    if method == "gr":
        omega = GOLDEN if omega is None else float(omega)
        check_omega(omega)
        if rho > 0:
            return _infeasible(method, "monotone F required (rho = 0)")
        top = omega if omega <= GOLDEN else (2 * omega + 2 - omega ** 2) / omega
        win = StepWindow(method, 0.0, top / (2 * L))
        e = eta if eta is not None else win.default_eta()
        c = _gr_constants(L, omega, e)
        c["omega"] = omega
        return replace(win, eta=e, constants=c)

    if method == "eag":
        if rho > 0:
            return _infeasible(method, "monotone F required (rho = 0)")
        win = StepWindow(method, 0.0, 1.0 / L, hi_closed=True)
        return replace(win, eta=eta if eta is not None else win.default_eta())

    if method == "feg":
        if not 2 * Lr < 1:
            return _infeasible(method, "2 L rho < 1")
        win = StepWindow(method, 2 * rho, 1.0 / L, hi_closed=True)
        return replace(win, eta=eta if eta is not None else win.default_eta())

    if method == "peag":
        if not 2 * np.sqrt(34) * Lr < 1:
            return _infeasible(method, "2 sqrt(34) L rho < 1")
        e0 = np.sqrt(2.0) / (np.sqrt(17.0) * L)
        if not e0 > 4 * rho:
            return _infeasible(method, "eta > 4 rho")
        win = StepWindow(method, e0, e0, lo_closed=True, hi_closed=True,
                         constants={"omega": PEAG_OMEGA, "M": 2 * (1 + PEAG_OMEGA) * L ** 2})
        return replace(win, eta=eta if eta is not None else e0)

    if method == "aeg":
        if not 2 * Lr < 1:
            return _infeasible(method, "2 L rho < 1")
        win = StepWindow(method, 2 * rho, 1.0 / L, hi_closed=True)
        e = eta if eta is not None else win.default_eta()
        return replace(win, eta=e, constants={"gamma": e - 2 * rho})

    # apeg
    if not 8 * np.sqrt(3) * Lr < 1:
        return _infeasible(method, "8 sqrt(3) L rho < 1")
    gmax = apeg_gamma_max(L, rho)
    win = StepWindow(method, 4 * rho, 2 * (3 * gmax + 2 * rho), hi_closed=True,
                     constants={"gamma_max": gmax})
    e = eta if eta is not None else win.default_eta()
    return replace(win, eta=e, constants={"gamma_max": gmax, "gamma": e / 6.0 - 2 * rho / 3.0})


def check_omega(omega):
    if not 1 < omega < 1 + np.sqrt(3):
        raise ParameterError("omega must lie in (1, 1 + sqrt(3))")


#%% CONFIGURATION

@dataclass(frozen=True)
class SolverConfig:
    """
    Parameters of one solver run.

    ``gamma`` is derived from ``eta`` for AEG/APEG when not given.  With
    ``override=True`` the step may leave the theorem window; certificates
    are then not evaluated.
    """

    method: str
    eta: float
    beta: float = 1.0
    omega: Optional[float] = None
    gamma: Optional[float] = None
    rho_assumed: float = 0.0
    override: bool = False

    @property
    def option(self):
        return "u_is_Fy_prev" if self.method in ("peg", "past_fbfs") else "u_is_Fx"


def make_config(method, problem, eta="auto", beta=1.0, omega=None, gamma=None,
                rho=None, override=False):
    """
    Resolve and validate a :class:`SolverConfig` for ``problem``.

    ``eta="auto"`` picks :meth:`StepWindow.default_eta`.  For AEG/APEG a
    given ``gamma`` fixes ``eta`` through the theorem relation.
    """
    if method not in METHODS:
        raise ConfigurationError(f"unknown method {method!r}")
    rho = problem.rho if rho is None else float(rho)
    if method == "gr":
        omega = GOLDEN if omega is None else float(omega)
        check_omega(omega)
    if gamma is not None and method in NESTEROV:
        if not gamma > 0:
            raise ParameterError("gamma must be positive")
        eta = gamma + 2 * rho if method == "aeg" else 2 * (3 * gamma + 2 * rho)
    win = stepsize_window(method, problem.L, rho, beta, omega, mu=problem.mu)
    if isinstance(eta, str):
        if eta != "auto":
            raise ParameterError(f"eta must be a number or 'auto', got {eta!r}")
        eta = win.default_eta()
    eta = float(eta)
    if not eta > 0:
        raise ParameterError("eta must be positive")
    if not override and not win.contains(eta):
        why = win.reason or f"eta must lie in window ({win.lo:.6g}, {win.hi:.6g})"
        raise ParameterError(f"{method}: eta = {eta:.6g} not admissible: {why}")
    if method == "aeg":
        gamma = eta - 2 * rho
    elif method == "apeg":
        gamma = eta / 6.0 - 2 * rho / 3.0
    if method in NESTEROV and not gamma > 0:
        raise ParameterError("gamma must be positive")
    return SolverConfig(method=method, eta=eta, beta=float(beta), omega=omega,
                        gamma=gamma, rho_assumed=rho, override=override)


#%% STATE

@dataclass(frozen=True)
class IterState:
    """
    Full iteration state.

    Only the fields a method uses are populated.  ``Fx`` caches ``F(x)``
    when the method evaluated it anyway; ``w`` is the residual witness at
    ``x`` (``None`` until filled, see :func:`fill_witness`).
    """

    k: int
    x: np.ndarray
    x0: np.ndarray
    xi: Optional[np.ndarray] = None
    Fx: Optional[np.ndarray] = None
    w: Optional[Witness] = None
    y: Optional[np.ndarray] = None
    y_prev: Optional[np.ndarray] = None
    x_prev: Optional[np.ndarray] = None
    z: Optional[np.ndarray] = None
    Fy: Optional[np.ndarray] = None
    Fy_prev: Optional[np.ndarray] = None
    w_hat: Optional[np.ndarray] = None
    w_tilde: Optional[np.ndarray] = None
    w_breve: Optional[np.ndarray] = None
    zeta: Optional[np.ndarray] = None
    u: Optional[np.ndarray] = None
    w_prev: Optional[np.ndarray] = None
    w_hat_prev: Optional[np.ndarray] = None


def _finite(*vs):
    for v in vs:
        if v is not None and not np.all(np.isfinite(v)):
            raise NumericError("iterate became non-finite")


def fill_witness(state, problem):
    """
    Return ``state`` with ``Fx`` and ``w`` populated.

    One-evaluation schemes do not compute ``F(x)`` themselves; this extra
    evaluation is bookkeeping and is not part of the method's budget.
    """
    if state.w is not None:
        return state
    Fx = state.Fx if state.Fx is not None else problem.F(state.x)
    _finite(Fx)
    return replace(state, Fx=Fx, w=Witness(xi=state.xi, w=Fx + state.xi))


def initial_witness(problem, x, eta):
    """
    Starting point and witness ``(x0, xi0)``.

    Uses the closed-form witness of ``T`` minimizing ``||F x + xi||``.  When
    ``T`` offers none, one forward-backward step is taken and its
    resolvent output and witness become the start.
    """
    x = problem.project_domain(as_vector(x, problem.dim))
    if problem.T.is_zero or problem.T.witness is not None:
        return x, problem.witness(x)
    return resolvent_apply(problem.T, eta, x - eta * problem.F(x))


def init_state(problem, config, x_init):
    """
    Build the ``k = 0`` state.

    For AEG/APEG ``x_init`` is ``y^0`` and the first resolvent step
    producing ``x^0`` is carried out here.
    """
    eta = config.eta
    m = config.method
    if m == "fw" and not problem.T.is_zero:
        raise ConfigurationError("the forward method applies to equations only (T = 0)")
    if m in NESTEROV:
        y0 = problem.project_domain(as_vector(x_init, problem.dim))
        Fy = problem.F(y0)
        x, xi = resolvent_apply(problem.T, eta, y0 - eta * Fy)
        if m == "aeg":
            Fx = problem.F(x)
            w = (y0 - x) / eta - (Fy - Fx)
            return IterState(k=0, x=x, x0=y0, xi=xi, Fx=Fx, w=Witness(xi, w), y=y0,
                             z=y0.copy(), Fy=Fy, x_prev=y0, w_prev=np.zeros_like(y0))
        w_hat = (y0 - x) / eta
        return IterState(k=0, x=x, x0=y0, xi=w_hat - Fy, y=y0, z=y0.copy(), Fy=Fy,
                         x_prev=y0, w_hat=w_hat, w_hat_prev=np.zeros_like(y0),
                         w_prev=np.zeros_like(y0))
    x0, xi0 = initial_witness(problem, x_init, eta)
    Fx0 = problem.F(x0)
    _finite(x0, Fx0)
    st = IterState(k=0, x=x0, x0=x0.copy(), xi=xi0, Fx=Fx0, w=Witness(xi0, Fx0 + xi0))
    if m in ("peg", "past_fbfs", "rfbs", "peag"):
        st = replace(st, y_prev=x0.copy(), Fy_prev=Fx0, x_prev=x0.copy())
    if m == "peag":
        st = replace(st, w_hat=st.w.w)
    if m == "rfbs":
        st = replace(st, w_hat=st.w.w)
    if m == "gr":
        st = replace(st, y=x0.copy(), y_prev=x0.copy(), x_prev=x0.copy())
    return st


#%% KERNELS: baselines

def fw_step(state, config, problem):
    """Forward step ``x+ = x - eta F x`` (equations only)."""
    Fx = state.Fx if state.Fx is not None else problem.F(state.x)
    x = state.x - config.eta * Fx
    Fxn = problem.F(x)
    _finite(x, Fxn)
    zero = np.zeros_like(x)
    return IterState(k=state.k + 1, x=x, x0=state.x0, xi=zero, Fx=Fxn,
                     w=Witness(zero, Fxn), x_prev=state.x)


def fbs_step(state, config, problem):
    """Forward-backward step ``x+ = J(x - eta F x)``."""
    Fx = state.Fx if state.Fx is not None else problem.F(state.x)
    x, xi = resolvent_apply(problem.T, config.eta, state.x - config.eta * Fx)
    Fxn = problem.F(x)
    _finite(x, Fxn)
    return IterState(k=state.k + 1, x=x, x0=state.x0, xi=xi, Fx=Fxn,
                     w=Witness(xi, Fxn + xi), x_prev=state.x)


#%% KERNELS: extragradient type

def _extrapolate(state, config, problem, u):
    s = config.eta / config.beta
    y, zeta = resolvent_apply(problem.T, s, state.x - s * u)
    return y, zeta


def eg_step(state, config, problem):
    r"""
    Extragradient step (EG/EG+ for ``beta < 1``).

    .. math::
        y^k = J_{(\eta/\beta) T}(x^k - (\eta/\beta) F x^k), \quad
        x^{k+1} = J_{\eta T}(x^k - \eta F y^k).
    """
    eta = config.eta
    Fx = state.Fx if state.Fx is not None else problem.F(state.x)
    y, zeta = _extrapolate(state, config, problem, Fx)
    Fy = problem.F(y)
    x, xi = resolvent_apply(problem.T, eta, state.x - eta * Fy)
    Fxn = problem.F(x)
    _finite(y, x, Fxn)
    return IterState(k=state.k + 1, x=x, x0=state.x0, xi=xi, Fx=Fxn,
                     w=Witness(xi, Fxn + xi), x_prev=state.x, y_prev=y, Fy_prev=Fy,
                     zeta=zeta, u=Fx, w_tilde=Fx + zeta, w_hat=Fy + xi)


def peg_step(state, config, problem):
    """Past-extragradient (Popov) step with ``u^k = F y^{k-1}``."""
    eta = config.eta
    u = state.Fy_prev
    y, zeta = _extrapolate(state, config, problem, u)
    Fy = problem.F(y)
    x, xi = resolvent_apply(problem.T, eta, state.x - eta * Fy)
    _finite(y, x)
    return IterState(k=state.k + 1, x=x, x0=state.x0, xi=xi, x_prev=state.x,
                     y_prev=y, Fy_prev=Fy, zeta=zeta, u=u, w_hat=Fy + xi)


def _fbfs_common(state, config, problem, u):
    eta, beta = config.eta, config.beta
    y, zeta = _extrapolate(state, config, problem, u)
    Fy = problem.F(y)
    x = beta * y + (1 - beta) * state.x - eta * (Fy - u)
    _finite(y, x)
    return x, y, zeta, Fy


def _fbfs_witness(problem, x, Fx, zeta, Fy):
    # x^{k+1} is not a resolvent output; off equations the nearest
    # available witness is the one at y^k
    if problem.T.is_zero:
        zero = np.zeros_like(x)
        return zero, Witness(zero, Fx)
    return zeta, Witness(zeta, Fy + zeta)


def fbfs_step(state, config, problem):
    r"""
    Forward-backward-forward step (Option 1, ``u^k = F x^k``).

    .. math::
        y^k = J_{(\eta/\beta) T}(x^k - (\eta/\beta) u^k), \quad
        x^{k+1} = \beta y^k + (1 - \beta) x^k - \eta (F y^k - u^k).
    """
    u = state.Fx if state.Fx is not None else problem.F(state.x)
    x, y, zeta, Fy = _fbfs_common(state, config, problem, u)
    Fxn = problem.F(x)
    xi, w = _fbfs_witness(problem, x, Fxn, zeta, Fy)
    return IterState(k=state.k + 1, x=x, x0=state.x0, xi=xi, Fx=Fxn, w=w,
                     x_prev=state.x, y_prev=y, Fy_prev=Fy, zeta=zeta, u=u)


def past_fbfs_step(state, config, problem):
    """Optimistic variant of :func:`fbfs_step` with ``u^k = F y^{k-1}``."""
    u = state.Fy_prev
    x, y, zeta, Fy = _fbfs_common(state, config, problem, u)
    if problem.T.is_zero:
        xi, w = np.zeros_like(x), None
    else:
        xi, w = zeta, Witness(zeta, Fy + zeta)
    return IterState(k=state.k + 1, x=x, x0=state.x0, xi=xi, w=w, x_prev=state.x,
                     y_prev=y, Fy_prev=Fy, zeta=zeta, u=u)


def rfbs_step(state, config, problem):
    r"""
    Reflected forward-backward step.

    .. math::
        y^k = 2 x^k - x^{k-1}, \quad x^{k+1} = J_{\eta T}(x^k - \eta F y^k).
    """
    eta = config.eta
    y = 2 * state.x - state.x_prev
    Fy = problem.F(y)
    x, xi = resolvent_apply(problem.T, eta, state.x - eta * Fy)
    _finite(y, x)
    return IterState(k=state.k + 1, x=x, x0=state.x0, xi=xi, x_prev=state.x,
                     y_prev=y, Fy_prev=Fy, w_hat=Fy + xi)


def gr_step(state, config, problem):
    r"""
    Golden-ratio step.

    .. math::
        x^{k+1} = J_{\eta T}(y^k - \eta F x^k), \quad
        y^{k+1} = \tfrac{\omega - 1}{\omega} x^{k+1} + \tfrac{1}{\omega} y^k.
    """
    eta, om = config.eta, config.omega
    check_omega(om)
    Fx = state.Fx if state.Fx is not None else problem.F(state.x)
    x, xi = resolvent_apply(problem.T, eta, state.y - eta * Fx)
    Fxn = problem.F(x)
    y = (om - 1) / om * x + state.y / om
    _finite(x, Fxn)
    return IterState(k=state.k + 1, x=x, x0=state.x0, xi=xi, Fx=Fxn,
                     w=Witness(xi, Fxn + xi), x_prev=state.x, y=y, y_prev=state.y,
                     w_breve=Fx + xi)


#%% KERNELS: anchored

def eag_step(state, config, schedule, problem):
    r"""
    Extra-anchored gradient step.

    .. math::
        y^k = J_{\hat\eta_k T}(\tau_k x^0 + (1-\tau_k) x^k - \hat\eta_k F x^k), \quad
        x^{k+1} = J_{\eta T}(\tau_k x^0 + (1-\tau_k) x^k - \eta F y^k).
    """
    k, eta = state.k, config.eta
    tau, eh = schedule.tau(k), schedule.eta_hat(k)
    Fx = state.Fx if state.Fx is not None else problem.F(state.x)
    anchor = tau * state.x0 + (1 - tau) * state.x
    y, zeta = resolvent_apply(problem.T, eh, anchor - eh * Fx)
    Fy = problem.F(y)
    x, xi = resolvent_apply(problem.T, eta, anchor - eta * Fy)
    Fxn = problem.F(x)
    _finite(y, x, Fxn)
    return IterState(k=k + 1, x=x, x0=state.x0, xi=xi, Fx=Fxn, w=Witness(xi, Fxn + xi),
                     x_prev=state.x, y_prev=y, Fy_prev=Fy, zeta=zeta, w_hat=Fy + xi)


def feg_step(state, config, schedule, problem):
    r"""
    Fast extragradient step in witness form.

    .. math::
        y^k = x^k + \tau_k (x^0 - x^k) - (\hat\eta_k - \beta_k) w^k, \quad
        x^{k+1} = J_{\eta T}(y^k - \eta F y^k + \hat\eta_k w^k).
    """
    k, eta = state.k, config.eta
    state = fill_witness(state, problem)
    w = state.w.w
    tau, eh, bk = schedule.tau(k), schedule.eta_hat(k), schedule.beta(k)
    y = state.x + tau * (state.x0 - state.x) - (eh - bk) * w
    Fy = problem.F(y)
    x, xi = resolvent_apply(problem.T, eta, y - eta * Fy + eh * w)
    Fxn = problem.F(x)
    _finite(y, x, Fxn)
    return IterState(k=k + 1, x=x, x0=state.x0, xi=xi, Fx=Fxn, w=Witness(xi, Fxn + xi),
                     x_prev=state.x, y_prev=y, Fy_prev=Fy, w_hat=Fy + xi, w_prev=w)


def peag_step(state, config, schedule, problem):
    r"""
    Past extra-anchored gradient step.

    .. math::
        y^k = x^k + \tau_k (x^0 - x^k) - (\hat\eta_k - \beta_k) \hat w^k, \quad
        x^{k+1} = J_{\eta T}(y^k - \eta F y^k + \hat\eta_k \hat w^k),

    with ``w_hat^{k+1} = F y^k + xi^{k+1}``.
    """
    k, eta = state.k, config.eta
    wh = state.w_hat
    tau, eh, bk = schedule.tau(k), schedule.eta_hat(k), schedule.beta(k)
    y = state.x + tau * (state.x0 - state.x) - (eh - bk) * wh
    Fy = problem.F(y)
    v = y - eta * Fy + eh * wh
    x, xi = resolvent_apply(problem.T, eta, v)
    _finite(y, x)
    return IterState(k=k + 1, x=x, x0=state.x0, xi=xi, x_prev=state.x, y_prev=y,
                     Fy_prev=Fy, w_hat=(y + eh * wh - x) / eta, w_hat_prev=wh,
                     w_prev=None if state.w is None else state.w.w)


def _momentum(state, config, schedule, direction):
    k = state.k
    z = state.x - config.gamma * direction
    y = z + schedule.theta(k) * (z - state.z) + schedule.nu(k) * (state.y - z)
    return z, y


def aeg_step(state, config, schedule, problem):
    r"""
    Nesterov-accelerated extragradient step.

    From ``(y^k, z^k, x^k, w^k)``: ``z^{k+1} = x^k - gamma w^k``,
    ``y^{k+1} = z^{k+1} + theta_k (z^{k+1} - z^k) + nu_k (y^k - z^{k+1})``,
    ``x^{k+1} = J_{eta T}(y^{k+1} - eta F y^{k+1} + eta_hat_{k+1} w^k)`` and
    ``w^{k+1} = (y^{k+1} - x^{k+1} + eta_hat_{k+1} w^k)/eta - (F y^{k+1} - F x^{k+1})``.
    """
    eta = config.eta
    wk = state.w.w
    z, y = _momentum(state, config, schedule, wk)
    eh = schedule.eta_hat(state.k + 1)
    Fy = problem.F(y)
    x, xi = resolvent_apply(problem.T, eta, y - eta * Fy + eh * wk)
    Fx = problem.F(x)
    _finite(z, y, x, Fx)
    w = (y - x + eh * wk) / eta - (Fy - Fx)
    return IterState(k=state.k + 1, x=x, x0=state.x0, xi=xi, Fx=Fx, w=Witness(xi, w),
                     y=y, y_prev=state.y, z=z, Fy=Fy, Fy_prev=state.Fy, x_prev=state.x,
                     w_prev=wk)


def apeg_step(state, config, schedule, problem):
    r"""
    Nesterov-accelerated past-extragradient step.

    As :func:`aeg_step` with ``w`` replaced by
    ``w_hat^k = (y^k - x^k + eta_hat_k w_hat^{k-1})/eta = F y^k + xi^k``,
    so only ``F y`` is evaluated.
    """
    eta = config.eta
    wh = state.w_hat
    z, y = _momentum(state, config, schedule, wh)
    eh = schedule.eta_hat(state.k + 1)
    Fy = problem.F(y)
    x, xi_ = resolvent_apply(problem.T, eta, y - eta * Fy + eh * wh)
    _finite(z, y, x)
    w_hat = (y - x + eh * wh) / eta
    return IterState(k=state.k + 1, x=x, x0=state.x0, xi=w_hat - Fy, y=y, y_prev=state.y,
                     z=z, Fy=Fy, Fy_prev=state.Fy, x_prev=state.x, w_hat=w_hat,
                     w_hat_prev=wh, w_prev=None if state.w is None else state.w.w)


KERNELS = {"fw": fw_step, "fbs": fbs_step, "eg": eg_step, "peg": peg_step,
           "fbfs": fbfs_step, "past_fbfs": past_fbfs_step, "rfbs": rfbs_step,
           "gr": gr_step, "eag": eag_step, "feg": feg_step, "peag": peag_step,
           "aeg": aeg_step, "apeg": apeg_step}


def step(state, config, problem, schedule=None):
    """Dispatch one iteration of ``config.method``."""
    kern = KERNELS[config.method]
    if config.method in HALPERN + NESTEROV:
        if schedule is None:
            schedule = Schedule(config.method, config.eta, config.rho_assumed)
        if config.method in NESTEROV:
            state = fill_witness(state, problem) if config.method == "aeg" else state
        return kern(state, config, schedule, problem)
    return kern(state, config, problem)


def iterate(problem, config, x_init, iterations):
    """
    Yield the states ``0, ..., iterations`` with witnesses filled.

    Yields
    ------
    IterState
    """
    sched = Schedule(config.method, config.eta, config.rho_assumed)
    st = fill_witness(init_state(problem, config, x_init), problem)
    yield st
    for _ in range(iterations):
        # divergence is reported through NumericError, not floating-point warnings
        with np.errstate(over="ignore", invalid="ignore"):
            st = fill_witness(step(st, config, problem, sched), problem)
        yield st


#%% REFORMULATIONS

def reformulated_iterate(prev, new, config, problem, schedule=None):
    r"""
    Recompute ``x^{k+1}`` from the witness form of the scheme.

    Uses the witnesses stored in ``prev`` (state ``k``) and ``new``
    (state ``k+1``):

    * eg/peg: ``x^{k+1} = x^k - eta (F y^k + xi^{k+1})``,
    * fbfs/past_fbfs: ``x^{k+1} = x^k - eta (F y^k + zeta^k)``,
    * rfbs: ``x^{k+1} = x^k - eta w_hat^{k+1}``,
    * gr: ``x^{k+1} = x^k - eta w_breve^{k+1} + (eta/omega) w_breve^k``,
    * eag/feg: ``x^{k+1} = x^k + tau_k (x^0 - x^k) - eta w_hat^{k+1} + beta_k w^k``,
    * peag: same with ``w_hat^k`` in place of ``w^k``,
    * aeg/apeg: ``x^{k+1} = y^{k+1} - eta v^{k+1} + eta_hat_{k+1} v^k`` with
      ``v = F y + xi`` (aeg, ``v^k`` replaced by ``w^k``) or ``v = w_hat``.

    Returns
    -------
    ndarray
    """
    m = config.method
    eta = config.eta
    k = prev.k
    if schedule is None:
        schedule = Schedule(m, eta, config.rho_assumed)
    if m in ("eg", "peg"):
        return prev.x - eta * (new.Fy_prev + new.xi)
    if m in ("fbfs", "past_fbfs"):
        if config.beta != 1.0:
            return prev.x + config.beta * (new.y_prev - prev.x) - eta * (new.Fy_prev - new.u)
        return prev.x - eta * (new.Fy_prev + new.zeta)
    if m == "rfbs":
        return prev.x - eta * new.w_hat
    if m == "gr":
        if prev.w_breve is None:
            # k = 0: y^0 = x^0, so x^1 = x^0 - eta w_breve^1
            return prev.x - eta * new.w_breve
        return prev.x - eta * new.w_breve + eta / config.omega * prev.w_breve
    if m in ("eag", "feg", "peag"):
        tau, bk = schedule.tau(k), schedule.beta(k)
        past = prev.w_hat if m == "peag" else fill_witness(prev, problem).w.w
        return prev.x + tau * (prev.x0 - prev.x) - eta * new.w_hat + bk * past
    if m == "aeg":
        return new.y - eta * (new.Fy + new.xi) + schedule.eta_hat(k + 1) * prev.w.w
    if m == "apeg":
        return new.y - eta * new.w_hat + schedule.eta_hat(k + 1) * prev.w_hat
    if m == "fbs":
        return prev.x - eta * (prev.Fx + new.xi)
    if m == "fw":
        return prev.x - eta * prev.Fx
    raise ConfigurationError(f"no reformulation for {m!r}")


def eliminated_y_next(prev, new, config, schedule=None):
    r"""
    ``y^{k+1}`` from the ``z``-free forms of AEG/APEG.

    AEG: ``x^k - beta_k (F x^k - F y^k) + theta_k (x^k - x^{k-1})
    + beta_hat_k (y^k - x^k) + beta_tilde_k w^{k-1}`` with
    ``beta_k = gamma (1 + theta_k - nu_k)``,
    ``beta_hat_k = nu_k - beta_k/eta``,
    ``beta_tilde_k = gamma theta_k - beta_k eta_hat_k/eta``.
    APEG: the same without the ``beta_k`` gradient-difference term and with
    ``w_hat`` in place of ``w``.

    At ``k = 0`` ``x^{-1}`` is taken as ``y^0``.
    """
    m = config.method
    if m not in NESTEROV:
        raise ConfigurationError("eliminated form defined for aeg/apeg only")
    if schedule is None:
        schedule = Schedule(m, config.eta, config.rho_assumed)
    k, eta, g = prev.k, config.eta, config.gamma
    th, nu, eh = schedule.theta(k), schedule.nu(k), schedule.eta_hat(k)
    bk = g * (1 + th - nu)
    b_hat = nu - bk / eta
    b_til = g * th - bk * eh / eta
    x_prev = prev.x_prev
    if m == "aeg":
        return (prev.x - bk * (prev.Fx - prev.Fy) + th * (prev.x - x_prev)
                + b_hat * (prev.y - prev.x) + b_til * prev.w_prev)
    return (prev.x + th * (prev.x - x_prev) + b_hat * (prev.y - prev.x)
            + b_til * prev.w_hat_prev)
