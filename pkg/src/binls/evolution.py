"""ETDRK4 (Cox-Matthews) time stepping for ``i u_t - u_xxxx - 2a u_xx + |u|^alpha u = 0``.

In Fourier space the semi-discrete system is ``u^_t = Lin u^ + F[u]`` with
``Lin = -i (k^4 - 2 a k^2)`` and ``F[u] = i FFT(|u|^alpha u)``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import spectral as sp
from .errors import ConfigurationError, NumericalFailure
from .spectral import Field, Grid

log = logging.getLogger(__name__)

COMPLETED = "completed"
ENERGY_DRIFT_ABORT = "energy_drift_abort"
AMPLITUDE_ABORT = "amplitude_abort"

CONTOUR_POINTS = 32
CONTOUR_SWITCH = 0.5


class ETDWeights(NamedTuple):
    """Per-mode coefficients of one Cox-Matthews step of size h."""

    E: np.ndarray  # e^{Lh}
    E2: np.ndarray  # e^{Lh/2}
    Q: np.ndarray  # h (e^{Lh/2} - 1) / (Lh)
    f1: np.ndarray
    f2: np.ndarray
    f3: np.ndarray


def _phi_direct(z):
    ez = np.exp(z)
    z3 = z**3
    return (
        (np.exp(z / 2) - 1) / z,
        (-4 - z + ez * (4 - 3 * z + z * z)) / z3,
        (2 + z + ez * (z - 2)) / z3,
        (-4 - 3 * z - z * z + ez * (4 - z)) / z3,
    )


def phi_weights(lin, h: float) -> ETDWeights:
    """Cox-Matthews weights for the diagonal symbol ``lin`` and step ``h``.

    Near the removable singularity (``|lin*h| < 0.5``) the scalar functions are
    averaged over a circle of radius 1 around ``lin*h`` (32 points).
    """
    if not h > 0:
        raise ConfigurationError("time step must be positive")
    z = np.asarray(lin, dtype=complex) * h
    out = [np.empty_like(z) for _ in range(4)]
    small = np.abs(z) < CONTOUR_SWITCH
    big = ~small
    if big.any():
        for o, v in zip(out, _phi_direct(z[big])):
            o[big] = v
    if small.any():
        roots = np.exp(2j * np.pi * (np.arange(CONTOUR_POINTS) + 0.5) / CONTOUR_POINTS)
        zc = z[small][:, None] + roots[None, :]
        for o, v in zip(out, _phi_direct(zc)):
            o[small] = v.mean(axis=1)
    q, f1, f2, f3 = (h * o for o in out)
    return ETDWeights(np.exp(z), np.exp(z / 2), q, f1, f2, f3)


def linear_symbol(grid: Grid, a: float) -> np.ndarray:
    k = np.asarray(grid.k)
    return -1j * (k**4 - 2 * a * k**2)


@dataclass(frozen=True)
class EvolutionConfig:
    alpha: float
    a: float
    grid: Grid
    t_span: tuple
    n_steps: int
    monitor_stride: int = 10
    energy_abort_rel: float = 1e-3
    linf_abort: float = 1e6
    nonlinearity_enabled: bool = True
    snapshot_stride: int | None = None

    def __post_init__(self):
        t0, t1 = self.t_span
        if not t1 > t0:
            raise ConfigurationError("t_span must satisfy t1 > t0")
        if self.n_steps < 1:
            raise ConfigurationError("n_steps must be >= 1")
        if self.monitor_stride < 1:
            raise ConfigurationError("monitor_stride must be >= 1")
        if not self.energy_abort_rel > 0:
            raise ConfigurationError("energy_abort_rel must be positive")
        if not self.alpha > 0:
            raise ConfigurationError("alpha must be positive")
        object.__setattr__(self, "t_span", (float(t0), float(t1)))

    @property
    def h(self) -> float:
        return (self.t_span[1] - self.t_span[0]) / self.n_steps


class TraceRecord(NamedTuple):
    t: float
    linf: float
    mass: float
    energy: float
    energy_drift_rel: float
    h2_seminorm: float
    tail_level: float


TRACE_COLUMNS = TraceRecord._fields


@dataclass
class EvolutionTrace:
    records: list
    final_state: Field
    termination: str
    snapshots: list = field(default_factory=list)
    step_sizes: list = field(default_factory=list)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])

    @property
    def t(self):
        return self.column("t")

    @property
    def linf(self):
        return self.column("linf")

    @property
    def t_final(self) -> float:
        return self.records[-1].t


class Monitor:
    """Diagnostics of a state, consistent with :mod:`binls.spectral`."""

    def __init__(self, grid: Grid, alpha: float, a: float):
        self.grid = grid
        self.alpha = alpha
        self.a = a

    def energy_terms(self, uh, u):
        return sp.energy_from(self.grid, uh, u, self.a, self.alpha)

    def record(self, t, uh, u, e0, e_scale):
        mod2 = u.real**2 + u.imag**2
        e, _, h2_sq = self.energy_terms(uh, u)
        drift = abs(e - e0) / e_scale if e_scale > 0 else 0.0
        return TraceRecord(
            float(t),
            float(math.sqrt(mod2.max())),
            float(self.grid.h * mod2.sum()),
            float(e),
            float(drift),
            float(math.sqrt(h2_sq)),
            sp.tail_level_spectrum(uh),
        )


def _nonlinear_term(alpha):
    half = alpha / 2
    if float(half).is_integer() and half >= 1:
        p = int(half)

        def pw(m2):
            out = m2
            for _ in range(p - 1):
                out = out * m2
            return out

    else:

        def pw(m2):
            return m2**half

    def nl(vh):
        v = np.fft.ifft(vh)
        m2 = v.real**2 + v.imag**2
        return 1j * np.fft.fft(pw(m2) * v), m2

    return nl


def _energy_denominator(e0, scale0):
    # relative to |E0| unless E0 is round-off small next to its constituents
    if abs(e0) > 1e-10 * scale0:
        return abs(e0)
    return scale0


def evolve(u0: Field, cfg: EvolutionConfig, *, e_ref=None) -> EvolutionTrace:
    """Advance ``u0`` over ``cfg.t_span`` in ``cfg.n_steps`` uniform ETDRK4 steps.

    ``e_ref`` optionally supplies the (energy, denominator) pair that drift is
    measured against; by default the energy of ``u0`` is used.
    """
    # overflow is detected explicitly and raised as NumericalFailure
    with np.errstate(over="ignore", invalid="ignore"):
        return _evolve(u0, cfg, e_ref)


def _evolve(u0: Field, cfg: EvolutionConfig, e_ref) -> EvolutionTrace:
    if u0.grid != cfg.grid:
        raise ConfigurationError("initial data and configuration use different grids")
    grid = cfg.grid
    h = cfg.h
    t0 = cfg.t_span[0]
    w = phi_weights(linear_symbol(grid, cfg.a), h)
    mon = Monitor(grid, cfg.alpha, cfg.a)

    uh = np.array(u0.spectrum)
    u = np.array(u0.values)
    e0, scale0, _ = mon.energy_terms(uh, u)
    if e_ref is not None:
        e0, denom = e_ref
    else:
        denom = _energy_denominator(e0, scale0)
    rec = mon.record(t0, uh, u, e0, denom)
    records = [rec]
    snapshots = []
    if cfg.snapshot_stride:
        snapshots.append((t0, u0))
    termination = COMPLETED

    if cfg.nonlinearity_enabled:
        nl = _nonlinear_term(cfg.alpha)
    else:
        zero = np.zeros(grid.N, dtype=complex)

        def nl(vh):
            v = np.fft.ifft(vh)
            return zero, v.real**2 + v.imag**2

    E, E2, Qw, f1, f2, f3 = w
    two_f2 = 2 * f2
    # squared once; thresholds beyond sqrt(float max) mean no amplitude abort
    linf_abort_sq = cfg.linf_abort**2 if cfg.linf_abort < 1e150 else math.inf
    last_good = rec
    step = 0
    for step in range(1, cfg.n_steps + 1):
        Nu, m2 = nl(uh)
        if not m2.max() <= linf_abort_sq:
            if not np.isfinite(m2).all():
                raise NumericalFailure(f"non-finite state at t={t0 + (step - 1) * h}", last_good)
            termination = AMPLITUDE_ABORT
            step -= 1
            break
        a_ = E2 * uh + Qw * Nu
        Na, _ = nl(a_)
        b_ = E2 * uh + Qw * Na
        Nb, _ = nl(b_)
        c_ = E2 * a_ + Qw * (2 * Nb - Nu)
        Nc, _ = nl(c_)
        uh = E * uh + f1 * Nu + two_f2 * (Na + Nb) + f3 * Nc

        if step % cfg.monitor_stride == 0 or step == cfg.n_steps:
            t = t0 + step * h
            u = np.fft.ifft(uh)
            if not np.isfinite(u).all():
                raise NumericalFailure(f"non-finite state at t={t}", last_good)
            rec = mon.record(t, uh, u, e0, denom)
            records.append(rec)
            last_good = rec
            if cfg.snapshot_stride and step % cfg.snapshot_stride == 0:
                snapshots.append((t, Field(grid, u)))
            if rec.energy_drift_rel > cfg.energy_abort_rel:
                termination = ENERGY_DRIFT_ABORT
                break
            if rec.linf > cfg.linf_abort:
                termination = AMPLITUDE_ABORT
                break

    t_end = t0 + step * h
    final = Field(grid, np.fft.ifft(uh))
    if records[-1].t != t_end:
        records.append(mon.record(t_end, uh, np.asarray(final.values), e0, denom))
    return EvolutionTrace(records, final, termination, snapshots, [h])


# --- perturbation experiments ---------------------------------------------

BLOWUP = "blowup"
DISPERSE = "disperse"
CONVERGE_OSCILLATE = "converge_oscillate"

INITIAL_KINDS = ("AQ", "gaussian", "supergaussian", "sech")


def initial_data(kind: str, A: float, grid: Grid, ground_state=None) -> Field:
    """``A*Q``, ``A e^{-x^2}``, ``A e^{-x^4}`` or ``A sech x`` on ``grid``."""
    x = np.asarray(grid.x)
    if kind == "AQ":
        if ground_state is None:
            raise ConfigurationError("kind 'AQ' needs a ground state")
        return Field(grid, A * np.asarray(sp.resample(ground_state.profile, grid).values))
    if kind == "gaussian":
        return Field(grid, A * np.exp(-x * x))
    if kind == "supergaussian":
        return Field(grid, A * np.exp(-(x**4)))
    if kind == "sech":
        return Field(grid, A / np.cosh(x))
    raise ConfigurationError(f"unknown initial data kind {kind!r}; expected one of {INITIAL_KINDS}")


@dataclass(frozen=True)
class VerdictRule:
    """Thresholds for classifying an experiment; configuration, not claims.

    ``blowup``: the amplitude abort (``amplitude_factor`` times the initial
    sup norm) fired, or the state became non-finite.
    ``disperse``: final sup norm below ``disperse_ratio`` times the initial one
    and the sup norm decreasing over the last ``trend_fraction`` of the run.
    ``converge_oscillate``: otherwise.
    """

    amplitude_factor: float = 3.0
    disperse_ratio: float = 0.6
    trend_fraction: float = 0.5
    energy_abort_rel: float = 0.1

    def __post_init__(self):
        if not self.amplitude_factor > 1:
            raise ConfigurationError("amplitude_factor must exceed 1")
        if not 0 < self.disperse_ratio < 1:
            raise ConfigurationError("disperse_ratio must lie in (0, 1)")
        if not 0 < self.trend_fraction <= 1:
            raise ConfigurationError("trend_fraction must lie in (0, 1]")


@dataclass
class ExperimentResult:
    trace: EvolutionTrace | None
    verdict: str
    initial_linf: float
    final_linf: float
    max_energy_drift: float
    failure: str | None = None


def _decreasing(t, linf, fraction):
    n = len(t)
    start = min(n - 2, int(n * (1 - fraction)))
    if start < 0 or n - start < 2:
        return False
    slope = np.polyfit(t[start:], linf[start:], 1)[0]
    return bool(slope < 0)


def classify(trace: EvolutionTrace, initial_linf: float, rule: VerdictRule = VerdictRule()) -> str:
    if trace.termination == AMPLITUDE_ABORT:
        return BLOWUP
    linf = trace.linf
    if linf[-1] < rule.disperse_ratio * initial_linf and _decreasing(trace.t, linf, rule.trend_fraction):
        return DISPERSE
    return CONVERGE_OSCILLATE


def perturbation_experiment(
    u0: Field,
    alpha: float,
    a: float,
    t_span=(0.0, 20.0),
    n_steps: int = 20000,
    rule: VerdictRule = VerdictRule(),
    monitor_stride: int = 10,
) -> ExperimentResult:
    """Evolve ``u0`` and classify the outcome as blowup / disperse / converge_oscillate."""
    init = u0.sup()
    if init == 0:
        raise ConfigurationError("perturbation experiment needs nonzero initial data")
    cfg = EvolutionConfig(
        alpha,
        a,
        u0.grid,
        t_span,
        n_steps,
        monitor_stride=monitor_stride,
        energy_abort_rel=rule.energy_abort_rel,
        linf_abort=rule.amplitude_factor * init,
    )
    try:
        trace = evolve(u0, cfg)
    except NumericalFailure as exc:
        # an explicit stage overflowing is the fastest form of the amplitude abort
        rec = exc.last_record
        drift = rec.energy_drift_rel if rec is not None else math.nan
        final = rec.linf if rec is not None else math.nan
        log.info("numerical failure during experiment classified as blowup: %s", exc)
        return ExperimentResult(None, BLOWUP, init, final, drift, failure=str(exc))
    drift = float(trace.column("energy_drift_rel").max())
    verdict = classify(trace, init, rule)
    if trace.termination == ENERGY_DRIFT_ABORT:
        log.warning("experiment stopped by energy drift %.2e; verdict %s is unreliable", drift, verdict)
    return ExperimentResult(trace, verdict, init, trace.records[-1].linf, drift)
