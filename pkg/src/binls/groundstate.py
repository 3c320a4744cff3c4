"""Ground states of ``Q'''' + 2a Q'' + b Q - |Q|^alpha Q = 0``.

The equation is solved in fixed-point form

    F(Q) = Q - IFFT( FFT(|Q|^alpha Q) / (k^4 - 2 a k^2 + b) ) = 0

by a Newton iteration whose linear systems are solved matrix-free with GMRES.
Residuals are measured as sup norms of physical-space samples.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np
from scipy.sparse.linalg import LinearOperator, gmres

from . import spectral as sp
from .errors import (
    ConfigurationError,
    DomainError,
    InnerSolveError,
    NonConvergenceError,
    ScalingNotAvailableError,
)
from .spectral import Field, Grid

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class GroundStateProblem:
    alpha: float
    a: float
    b: float
    grid: Grid
    initial_iterate: Field | None = field(default=None, repr=False, compare=False)
    initial_amplitude: float = 1.5
    newton_tol: float = 1e-10
    # None selects 0.1 for a < 0 and 1.0 otherwise.
    relaxation: float | None = None
    # Full Newton steps are taken once the residual drops below this level.
    relax_until: float = 1e-3
    max_newton_iters: int = 100
    gmres_rtol: float = 1e-3
    gmres_restart: int = 30
    gmres_maxiter: int = 200

    def __post_init__(self):
        validate_parameters(self.alpha, self.a, self.b)
        if self.relaxation is not None and not 0 < self.relaxation <= 1:
            raise ConfigurationError("relaxation must lie in (0, 1]")
        if self.newton_tol <= 0:
            raise ConfigurationError("newton_tol must be positive")
        if self.initial_iterate is not None:
            if self.initial_iterate.grid != self.grid:
                raise ConfigurationError("initial iterate lives on a different grid")
            if np.max(np.abs(self.initial_iterate.values.imag)) > 0:
                raise ConfigurationError("initial iterate must be real-valued")

    @property
    def mu(self) -> float:
        if self.relaxation is not None:
            return self.relaxation
        return 0.1 if self.a < 0 else 1.0

    def symbol(self) -> np.ndarray:
        k = np.asarray(self.grid.k)
        return k**4 - 2 * self.a * k**2 + self.b


def validate_parameters(alpha, a, b):
    if not alpha > 0:
        raise ConfigurationError(f"alpha must be positive, got {alpha}")
    if not b > 0:
        raise ConfigurationError(f"b must be positive, got {b}")
    # k^4 - 2ak^2 + b > 0 for every k iff a < sqrt(b)
    if a > 0 and not b > a * a:
        raise ConfigurationError(f"ground states with a > 0 require b > a^2 (a={a}, b={b})")


@dataclass(frozen=True)
class GroundState:
    profile: Field
    problem: GroundStateProblem
    residual_sup: float
    iterations: int
    scalars: dict = field(default_factory=dict)

    @property
    def grid(self) -> Grid:
        return self.profile.grid

    @property
    def alpha(self):
        return self.problem.alpha

    @property
    def a(self):
        return self.problem.a

    @property
    def b(self):
        return self.problem.b

    @property
    def mass(self) -> float:
        return self.scalars["M"]

    @property
    def energy(self) -> float:
        return self.scalars["E"]


def compute_scalars(Q: Field, alpha: float, a: float) -> dict:
    return {
        "M": sp.mass(Q),
        "E": sp.energy(Q, a, alpha),
        "Linf": Q.sup(),
        "Lp": sp.potential_term(Q, alpha),
        "grad_sq": sp.gradient_sq(Q),
        "h2_sq": sp.h2_seminorm(Q) ** 2,
    }


def _nonlinearity(q, alpha):
    return np.abs(q) ** alpha * q


def _residual_values(q: np.ndarray, alpha: float, sigma: np.ndarray) -> np.ndarray:
    return q - np.fft.ifft(np.fft.fft(_nonlinearity(q, alpha)) / sigma)


def _check_symbol(sigma):
    if np.any(sigma <= 0):
        raise ConfigurationError("symbol k^4 - 2ak^2 + b must be positive on all modes")


def fixed_point_residual(Q: Field, p: GroundStateProblem) -> Field:
    """``F(Q^) = Q^ - FFT(|Q|^alpha Q) / (k^4 - 2ak^2 + b)`` as a :class:`Field`."""
    sigma = p.symbol()
    _check_symbol(sigma)
    return Field(Q.grid, _residual_values(np.asarray(Q.values), p.alpha, sigma))


def jacobian_apply(v: Field, Q: Field, p: GroundStateProblem) -> Field:
    """Frechet derivative of :func:`fixed_point_residual` at real ``Q`` applied to ``v``."""
    sigma = p.symbol()
    w = (p.alpha + 1) * np.abs(Q.values.real) ** p.alpha
    return Field(v.grid, v.values - np.fft.ifft(np.fft.fft(w * v.values) / sigma))


def _pokhozhaev_scale(q, alpha, sigma, n):
    """Amplitude c making ``c*q`` satisfy ``<q, sigma q> = c^alpha ||q||^{alpha+2}``."""
    quad = np.sum(sigma * np.abs(np.fft.fft(q)) ** 2) / n
    pot = np.sum(np.abs(q) ** (alpha + 2))
    if pot == 0 or quad <= 0:
        return 1.0
    return float((quad / pot) ** (1.0 / alpha))


def _project(q: np.ndarray, grid: Grid) -> np.ndarray:
    q = 0.5 * (q + grid.reflect(q))
    if q[grid.origin_index] < 0:
        q = -q
    return q


def solve(p: GroundStateProblem) -> GroundState:
    grid = p.grid
    n = grid.N
    alpha = p.alpha
    sigma = p.symbol()
    _check_symbol(sigma)

    if p.initial_iterate is not None:
        q = np.array(p.initial_iterate.values.real)
    else:
        q = p.initial_amplitude * np.exp(-np.asarray(grid.x) ** 2)
    q = _project(q, grid)
    # A small iterate is attracted by the trivial solution; start on the
    # Pokhozhaev balance instead.
    q = q * _pokhozhaev_scale(q, alpha, sigma, n)

    def G(q):
        return _residual_values(q, alpha, sigma).real

    r = G(q)
    res = float(np.max(np.abs(r)))
    mu = p.mu
    it = 0
    while res >= p.newton_tol:
        if it >= p.max_newton_iters:
            raise NonConvergenceError(
                f"Newton did not converge in {it} iterations (residual {res:.3e})",
                residual=res,
                iterations=it,
            )
        w = (alpha + 1) * np.abs(q) ** alpha
        J = LinearOperator(
            (n, n),
            matvec=lambda v: v - np.fft.ifft(np.fft.fft(w * v) / sigma).real,
            dtype=float,
        )
        delta, info = gmres(
            J, r, rtol=p.gmres_rtol, restart=p.gmres_restart, maxiter=p.gmres_maxiter
        )
        if info != 0:
            lin = np.linalg.norm(J.matvec(delta) - r) / np.linalg.norm(r)
            if info < 0 or lin > 0.5:
                raise InnerSolveError(
                    f"GMRES stagnated (relative residual {lin:.2e}); retry with smaller relaxation",
                    residual=res,
                    iterations=it,
                )
        relaxed = res >= p.relax_until
        step = mu if relaxed else 1.0
        q_new = _project(q - step * delta, grid)
        if relaxed:
            q_new = q_new * _pokhozhaev_scale(q_new, alpha, sigma, n)
        r_new = G(q_new)
        res_new = float(np.max(np.abs(r_new)))
        it += 1
        if res_new > res and mu == 1.0 and relaxed:
            mu = 0.1
            log.debug("residual increased at iteration %d, switching to mu=0.1", it)
        log.debug("newton %d: residual %.3e (step %.2f)", it, res_new, step)
        q, r, res = q_new, r_new, res_new

    Q = Field(grid, q)
    return GroundState(Q, p, res, it, compute_scalars(Q, alpha, p.a))


_EXACT = {
    2: (
        lambda a: 16 * a * a / 25,
        lambda a, x: math.sqrt(6 / 5) * abs(a) / np.cosh(math.sqrt(abs(a) / 10) * x) ** 2,
    ),
    8: (
        lambda a: 25 * (a / 13) ** 2,
        lambda a, x: (math.sqrt(105) * abs(a) / 13) ** 0.25
        / np.sqrt(np.cosh(2 * math.sqrt(abs(a) / 13) * x)),
    ),
    10: (
        lambda a: (12 * a / 37) ** 2,
        lambda a, x: (math.sqrt(714) * abs(a) / 37) ** 0.2
        / np.cosh(5 * math.sqrt(abs(a) / 74) * x) ** 0.4,
    ),
}


def exact_b(alpha, a) -> float:
    if alpha not in _EXACT or not a < 0:
        raise DomainError(f"no closed-form ground state for alpha={alpha}, a={a}")
    return float(_EXACT[alpha][0](a))


def exact_solution(alpha, a, grid: Grid, **problem_kw) -> GroundState:
    """Sample the closed-form sech-type ground state (alpha in {2, 8, 10}, a < 0)."""
    b = exact_b(alpha, a)
    p = GroundStateProblem(alpha, a, b, grid, **problem_kw)
    Q = Field(grid, _EXACT[alpha][1](a, np.asarray(grid.x)))
    res = fixed_point_residual(Q, p).sup()
    return GroundState(Q, p, res, 0, compute_scalars(Q, alpha, a))


class PokhozhaevResiduals(NamedTuple):
    r1: float
    r2: float
    r3: float
    r4: float


def _pokhozhaev_terms(g: GroundState):
    s = g.scalars
    al, a, b = g.alpha, g.a, g.b
    h2, g2, M, P, E = s["h2_sq"], s["grad_sq"], s["M"], s["Lp"], s["E"]
    return (
        (h2, -2 * a * g2, b * M, -P),
        (3 * h2, -2 * a * g2, -b * M, 2 * P / (al + 2)),
        (E, b * M / 2, -al * P / (2 * (al + 2))),
        (E, -(al - 8) / (3 * al + 8) * b * M / 2, 2 * a * al / (3 * al + 8) * g2),
    )


def pokhozhaev_residuals(g: GroundState) -> PokhozhaevResiduals:
    return PokhozhaevResiduals(*(math.fsum(t) for t in _pokhozhaev_terms(g)))


def pokhozhaev_scales(g: GroundState) -> tuple:
    """Largest constituent term of each identity, for relative tolerances.

    The energy is expanded into its three integrals so that a vanishing energy
    (alpha = 8, a = 0) does not collapse the scale.
    """
    s = g.scalars
    e_parts = (0.5 * s["h2_sq"], g.a * s["grad_sq"], s["Lp"] / (g.alpha + 2))
    scales = []
    for i, terms in enumerate(_pokhozhaev_terms(g)):
        vals = [abs(v) for v in terms]
        if i >= 2:
            vals += [abs(v) for v in e_parts]
        scales.append(max(vals))
    return tuple(scales)


def rescale(g: GroundState, b_new: float) -> GroundState:
    """Member ``s^{1/alpha} Q(s^{1/4} x)``, ``s = b_new / b``, of the a = 0 family."""
    if g.a != 0:
        raise ScalingNotAvailableError("the scaling family exists only for a = 0")
    if not b_new > 0:
        raise DomainError("b_new must be positive")
    s = b_new / g.b
    p = replace(g.problem, b=float(b_new), initial_iterate=None)
    if s == 1:
        Q = g.profile
    else:
        Q = Field(g.grid, scaled_profile(g.profile, s, g.alpha).real)
    res = fixed_point_residual(Q, p).sup()
    return GroundState(Q, p, res, 0, compute_scalars(Q, g.alpha, 0.0))


def scaled_profile(Q: Field, s: float, alpha: float, center: float = 0.0, grid: Grid | None = None):
    """Samples of ``s^{1/alpha} Q(s^{1/4} (x - center))`` on ``grid`` (default: Q's grid)."""
    grid = grid or Q.grid
    xi = s**0.25 * (np.asarray(grid.x) - center)
    inside = np.abs(xi) <= Q.grid.L * np.pi
    out = np.zeros(grid.N, dtype=complex)
    out[inside] = sp.interpolate(Q, xi[inside])
    return s ** (1.0 / alpha) * out
