"""
Operators, resolvents, residual metrics and sampled monotonicity probes.

A composite inclusion ``0 in F(x) + T(x)`` is described by a single-valued
operator :class:`SingleOp` and a set-valued operator :class:`SetOp`.  The
set-valued part is only ever touched through its resolvent
``J_{eta T} = (I + eta T)^{-1}``; every resolvent call also yields the
element ``xi = (x - J(x)) / eta`` of ``T(J(x))``.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from inclsolve.errors import ConfigurationError, NumericError, ParameterError, ShapeError

ATOL = 1e-10
RTOL = 1e-8

MONO_CLASSES = ("monotone", "mu_strong", "rho_cohypo", "star_mono",
                "star_cohypo", "weak_minty", "none")


#%% TYPES

@dataclass(frozen=True)
class SingleOp:
    r"""
    Single-valued Lipschitz operator :math:`F`.

    Parameters
    ----------
    eval : callable
        Map ``ndarray -> ndarray``; must be deterministic.
    lipschitz_L : float
        Declared Lipschitz constant.
    mono_class : str
        One of :data:`MONO_CLASSES`.
    class_param : float
        The parameter of the class (``mu`` or ``rho``), zero otherwise.
    """

    eval: Callable[[np.ndarray], np.ndarray]
    lipschitz_L: float
    mono_class: str = "none"
    class_param: float = 0.0

    def __post_init__(self):
        if self.mono_class not in MONO_CLASSES:
            raise ParameterError(f"unknown monotonicity class {self.mono_class!r}")
        if not self.lipschitz_L >= 0:
            raise ParameterError("lipschitz_L must be nonnegative")

    def __call__(self, x):
        return self.eval(x)


@dataclass(frozen=True)
class SetOp:
    r"""
    Set-valued operator :math:`T` exposed through its resolvent.

    Parameters
    ----------
    resolvent : callable
        ``resolvent(eta, x)`` returns :math:`J_{\eta T}(x)`.
    domain_tag : str
        Human readable description of :math:`\mathrm{dom}\, T`.
    cyclic_order_m : int or None
        Largest order of cyclic monotonicity; ``None`` means every order
        (subdifferentials of convex functions).
    witness : callable, optional
        ``witness(x, h)`` returns the element of :math:`T x` closest to
        ``-h``.  Used to pick the initial witness at a point of the domain.
    project_domain : callable, optional
        Projection onto :math:`\mathrm{dom}\, T`; ``None`` when the domain is
        the whole space.
    is_zero : bool
        Marks the ``T = 0`` sentinel, whose resolvent is the identity.
    maximal_monotone : bool
        Whether the resolvent is firmly nonexpansive.
    """

    resolvent: Callable[[float, np.ndarray], np.ndarray]
    domain_tag: str = "R^p"
    cyclic_order_m: Optional[int] = None
    witness: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    project_domain: Optional[Callable[[np.ndarray], np.ndarray]] = None
    is_zero: bool = False
    maximal_monotone: bool = True


@dataclass(frozen=True)
class Witness:
    """Pair ``(xi, w)`` with ``xi`` in ``T(x)`` and ``w = F(x) + xi``."""

    xi: np.ndarray
    w: np.ndarray


@dataclass(frozen=True)
class Problem:
    r"""
    Composite inclusion :math:`0 \in F x + T x`.

    Parameters
    ----------
    F : SingleOp
    T : SetOp
    dim : int
    known_solution : ndarray, optional
    L, mu, rho : float
        Lipschitz, strong monotonicity and co-hypomonotonicity constants.
    name : str
    """

    F: SingleOp
    T: SetOp
    dim: int
    known_solution: Optional[np.ndarray] = None
    L: float = 1.0
    mu: float = 0.0
    rho: float = 0.0
    name: str = ""
    meta: dict = field(default_factory=dict, compare=False)

    def witness(self, x):
        """Element of ``T(x)`` minimizing ``||F(x) + xi||`` (closed form)."""
        x = as_vector(x, self.dim)
        if self.T.is_zero:
            return np.zeros_like(x)
        if self.T.witness is None:
            raise ConfigurationError(
                f"problem {self.name!r}: T has no closed-form witness rule")
        return self.T.witness(x, self.F(x))

    def project_domain(self, x):
        x = as_vector(x, self.dim)
        if self.T.project_domain is None:
            return x
        return self.T.project_domain(x)


def as_vector(x, dim=None):
    """Return ``x`` as a finite 1-D float array, checking its dimension."""
    v = np.asarray(x, dtype=float)
    if v.ndim != 1:
        raise ShapeError(f"expected a 1-D vector, got shape {v.shape}")
    if dim is not None and v.shape[0] != dim:
        raise ShapeError(f"expected dimension {dim}, got {v.shape[0]}")
    return v


def _check_eta(eta):
    if not (np.isfinite(eta) and eta > 0):
        raise ParameterError(f"step size must be positive and finite, got {eta}")


#%% RESOLVENTS AND RESIDUALS

def resolvent_apply(T, eta, x):
    r"""
    Evaluate the resolvent and its witness.

    Returns ``(point, xi)`` with ``point = J_{eta T}(x)`` and
    ``xi = (x - point) / eta``, so that ``xi`` belongs to ``T(point)`` and
    ``point + eta * xi`` reproduces ``x``.

    Raises
    ------
    ParameterError
        If ``eta <= 0``.
    NumericError
        If the resolvent returns non-finite values.
    """
    _check_eta(eta)
    x = as_vector(x)
    if T.is_zero:
        return x.copy(), np.zeros_like(x)
    point = np.asarray(T.resolvent(eta, x), dtype=float)
    if point.shape != x.shape:
        raise ShapeError("resolvent changed the vector shape")
    if not np.all(np.isfinite(point)):
        raise NumericError("resolvent returned non-finite values")
    return point, (x - point) / eta


def residual_norm(problem, x, xi):
    """Norm of ``F(x) + xi`` for an algorithm-produced witness ``xi``."""
    x = as_vector(x, problem.dim)
    xi = as_vector(xi, problem.dim)
    return float(np.linalg.norm(problem.F(x) + xi))


def fb_residual(problem, eta, x):
    r"""
    Forward-backward residual :math:`(x - J_{\eta T}(x - \eta F x)) / \eta`.

    Equals ``F(x)`` when ``T = 0`` and vanishes exactly at zeros of ``F + T``.
    """
    _check_eta(eta)
    x = as_vector(x, problem.dim)
    point, _ = resolvent_apply(problem.T, eta, x - eta * problem.F(x))
    return (x - point) / eta


#%% SAMPLED PROBES

class PairSampler:
    """
    Seeded source of test points.

    Points are Gaussian with a per-draw scale drawn log-uniformly from
    ``[10**lo, 10**hi]`` so that both local and global behaviour is probed.
    """

    def __init__(self, dim, seed=0, center=None, log_scale=(-2.0, 1.0)):
        self.dim = int(dim)
        self.rng = np.random.default_rng(seed)
        self.center = np.zeros(dim) if center is None else as_vector(center, dim)
        self.log_scale = log_scale

    def point(self):
        s = 10.0 ** self.rng.uniform(*self.log_scale)
        return self.center + s * self.rng.standard_normal(self.dim)

    def pair(self):
        return self.point(), self.point()

    def points(self, m):
        return np.array([self.point() for _ in range(m)])


@dataclass(frozen=True)
class Verdict:
    """Outcome of a falsification probe."""

    holds: bool
    checked: int
    pair: Optional[tuple] = None
    margin: float = 0.0

    def __bool__(self):
        return self.holds


def _violates(lhs, rhs, scale):
    return lhs < rhs - (ATOL + RTOL * scale)


def probe_monotonicity(op, claim, param=0.0, sampler=None, n=1000, x_star=None):
    r"""
    Try to falsify a monotonicity-type claim on sampled points.

    Parameters
    ----------
    op : SingleOp
    claim : str
        ``monotone``, ``mu_strong`` (param = mu), ``rho_cohypo``
        (param = rho), ``star_mono``, ``star_cohypo`` or ``weak_minty``.
        Star claims compare against ``x_star``.
    param : float
    sampler : PairSampler
    n : int
        Number of sampled pairs.
    x_star : array_like, optional
        Required for star claims.

    Returns
    -------
    Verdict
        ``holds`` is False with the first violating pair otherwise.
    """
    if n < 1:
        raise ParameterError("n must be at least 1")
    if claim not in MONO_CLASSES or claim == "none":
        raise ParameterError(f"unknown claim {claim!r}")
    star = claim in ("star_mono", "star_cohypo", "weak_minty")
    if star and x_star is None:
        raise ConfigurationError(f"claim {claim!r} needs a known solution")
    if sampler is None:
        raise ConfigurationError("a sampler is required")
    if star:
        x_star = as_vector(x_star)
        F_star = op(x_star)

    worst = np.inf
    for i in range(n):
        if star:
            x, y = sampler.point(), x_star
            u, v = op(x), F_star
        else:
            x, y = sampler.pair()
            u, v = op(x), op(y)
        dx, du = x - y, u - v
        if claim == "weak_minty":
            lhs = float(u @ dx)
            rhs = -param * float(u @ u)
            scale = np.linalg.norm(u) * np.linalg.norm(dx) + abs(rhs)
        else:
            lhs = float(du @ dx)
            if claim == "mu_strong":
                rhs = param * float(dx @ dx)
            elif claim in ("rho_cohypo", "star_cohypo"):
                rhs = -param * float(du @ du)
            else:
                rhs = 0.0
            scale = np.linalg.norm(du) * np.linalg.norm(dx) + abs(rhs)
        worst = min(worst, lhs - rhs)
        if _violates(lhs, rhs, scale):
            return Verdict(False, i + 1, (x, y), lhs - rhs)
    return Verdict(True, n, None, worst)


def probe_lipschitz(op, L, sampler, n=10000):
    """Try to falsify ``||F x - F y|| <= L ||x - y||`` on sampled pairs."""
    worst = np.inf
    for i in range(n):
        x, y = sampler.pair()
        lhs = float(np.linalg.norm(op(x) - op(y)))
        rhs = L * float(np.linalg.norm(x - y))
        worst = min(worst, rhs - lhs)
        if _violates(rhs, lhs, rhs):
            return Verdict(False, i + 1, (x, y), rhs - lhs)
    return Verdict(True, n, None, worst)


def probe_cyclic_monotonicity(T, m, sampler, n=1000, eta=1.0):
    r"""
    Try to falsify m-cyclic monotonicity of ``T``.

    Each trial maps ``m`` sampled points through the resolvent to obtain
    graph pairs ``(x_i, u_i)`` and checks
    :math:`\sum_i \langle u_i, x_i - x_{i+1} \rangle \geq 0` (indices mod m).
    """
    if int(m) != m or m < 2:
        raise ParameterError("cycle length m must be an integer >= 2")
    m = int(m)
    worst = np.inf
    for i in range(n):
        pts = [resolvent_apply(T, eta, z) for z in sampler.points(m)]
        xs = np.array([p for p, _ in pts])
        us = np.array([u for _, u in pts])
        terms = np.einsum("ij,ij->i", us, xs - np.roll(xs, -1, axis=0))
        total = float(terms.sum())
        worst = min(worst, total)
        if _violates(total, 0.0, float(np.abs(terms).sum())):
            return Verdict(False, i + 1, (xs, us), total)
    return Verdict(True, n, None, worst)


def probe_firm_nonexpansive(T, sampler, n=1000, eta=1.0):
    r"""Check :math:`\|Jx - Jy\|^2 \leq \langle Jx - Jy, x - y\rangle` on samples."""
    worst = np.inf
    for i in range(n):
        x, y = sampler.pair()
        d = resolvent_apply(T, eta, x)[0] - resolvent_apply(T, eta, y)[0]
        lhs, rhs = float(d @ d), float(d @ (x - y))
        worst = min(worst, rhs - lhs)
        if lhs > rhs + ATOL:
            return Verdict(False, i + 1, (x, y), rhs - lhs)
    return Verdict(True, n, None, worst)


#%% SET-VALUED OPERATORS WITH CLOSED-FORM RESOLVENTS

def zero_operator():
    """The ``T = 0`` sentinel; its resolvent is the identity."""
    return SetOp(resolvent=lambda eta, x: np.array(x, dtype=float),
                 domain_tag="R^p", cyclic_order_m=None,
                 witness=lambda x, h: np.zeros_like(x), is_zero=True)


def box_normal_cone(lower, upper):
    """Normal cone of the box ``[lower, upper]``; resolvent is clipping."""
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if np.any(lower > upper):
        raise ParameterError("box needs lower <= upper")

    def witness(x, h):
        xi = np.zeros_like(x)
        up, lo = x >= upper, x <= lower
        xi[up] = np.maximum(0.0, -h[up])
        xi[lo] = np.minimum(0.0, -h[lo])
        both = up & lo
        xi[both] = -h[both]
        return xi

    clip = lambda x: np.clip(x, lower, upper)
    return SetOp(resolvent=lambda eta, x: clip(x),
                 domain_tag=f"box[{lower.tolist()}, {upper.tolist()}]",
                 witness=witness, project_domain=clip)


def ball_normal_cone(radius):
    """Normal cone of the centered Euclidean ball of the given radius."""
    if not radius > 0:
        raise ParameterError("ball radius must be positive")

    def project(x):
        nx = np.linalg.norm(x)
        return x if nx <= radius else x * (radius / nx)

    def witness(x, h):
        if np.linalg.norm(x) < radius * (1 - 1e-12):
            return np.zeros_like(x)
        s = max(0.0, -float(h @ x) / float(x @ x))
        return s * x

    return SetOp(resolvent=lambda eta, x: project(x),
                 domain_tag=f"ball({radius})", witness=witness,
                 project_domain=project)


def project_simplex(x):
    """Euclidean projection onto the unit simplex (sorting method)."""
    u = np.sort(x)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, x.size + 1)
    r = np.nonzero(u - css / idx > 0)[0][-1]
    return np.maximum(x - css[r] / (r + 1), 0.0)


def _simplex_witness(x, h):
    # xi = lam*1 - nu with nu >= 0 supported on the zero set of x; pick lam
    # minimizing sum_S (h+lam)^2 + sum_Z min(0, h+lam)^2
    S = x > 0
    hs, hz = h[S], np.sort(h[~S])
    for j in range(hz.size + 1):
        lam = -(hs.sum() + hz[:j].sum()) / (hs.size + j)
        if np.all(hz[:j] + lam <= 0) and np.all(hz[j:] + lam >= 0):
            break
    xi = np.full_like(x, lam)
    Z = ~S
    xi[Z] = np.minimum(lam, -h[Z])
    return xi


def simplex_normal_cone():
    """Normal cone of the unit simplex ``{x >= 0, sum(x) = 1}``."""
    return SetOp(resolvent=lambda eta, x: project_simplex(x), domain_tag="simplex",
                 witness=_simplex_witness, project_domain=project_simplex)


def l1_subdifferential(lam=1.0):
    r"""Subdifferential of :math:`\lambda \|x\|_1`; resolvent is soft thresholding."""
    if not lam > 0:
        raise ParameterError("l1 weight must be positive")

    def resolvent(eta, x):
        return np.sign(x) * np.maximum(np.abs(x) - eta * lam, 0.0)

    def witness(x, h):
        return np.where(x != 0, lam * np.sign(x), np.clip(-h, -lam, lam))

    return SetOp(resolvent=resolvent, domain_tag="R^p", witness=witness)


def half_sqnorm_subdifferential():
    r"""Gradient of :math:`\tfrac12\|x\|^2`; resolvent ``x / (1 + eta)``."""
    return SetOp(resolvent=lambda eta, x: x / (1.0 + eta), domain_tag="R^p",
                 witness=lambda x, h: np.array(x, dtype=float))
