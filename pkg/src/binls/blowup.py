"""Refined integration toward finite-time blow-up and self-similar diagnostics.

The step schedule keeps ``h * ||u||_inf^alpha`` roughly constant: a sub-interval
ends when the sup norm has grown by ``growth`` (default ``2**(1/alpha)``) and
the next one runs with half the step. In the rescaled variables
``dtau = dt / lambda^4``, ``lambda ~ ||u||_inf^(-alpha/4)``, this is a uniform
step in ``tau``.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import spectral as sp
from .errors import ConfigurationError, DomainError, FitUnreliableError, NumericalFailure
from .evolution import (
    AMPLITUDE_ABORT,
    COMPLETED,
    ENERGY_DRIFT_ABORT,
    EvolutionConfig,
    EvolutionTrace,
    Monitor,
    _energy_denominator,
    evolve,
)
from .groundstate import GroundState, scaled_profile
from .spectral import Field

log = logging.getLogger(__name__)

ALGEBRAIC = "algebraic"
EXPONENTIAL = "exponential"


@dataclass(frozen=True)
class BlowupSchedule:
    h0: float
    t_max: float
    growth: float | None = None  # default 2**(1/alpha)
    h_min: float = 1e-10
    max_steps: int = 2_000_000
    chunk_steps: int = 2000
    monitor_stride: int = 10
    energy_abort_rel: float = 1e-3
    keep_snapshots: int = 6

    def __post_init__(self):
        if not self.h0 > 0 or not self.t_max > 0:
            raise ConfigurationError("h0 and t_max must be positive")
        if self.growth is not None and not self.growth > 1:
            raise ConfigurationError("growth must exceed 1")
        if not 0 < self.h_min <= self.h0:
            raise ConfigurationError("h_min must lie in (0, h0]")
        if self.chunk_steps < 1 or self.max_steps < 1 or self.monitor_stride < 1:
            raise ConfigurationError("step counts must be positive")


def refine_to_blowup(u0: Field, alpha: float, a: float, schedule: BlowupSchedule) -> EvolutionTrace:
    """Evolve with successively halved steps until the energy drift criterion stops the run.

    Termination ``energy_drift_abort`` signals numerical blow-up; ``completed``
    means ``t_max`` or the step budget was reached without it. The returned
    trace holds the concatenated records, the step used in each sub-interval,
    and the sub-interval end states of the last ``keep_snapshots`` sub-intervals.
    """
    grid = u0.grid
    growth = schedule.growth or 2.0 ** (1.0 / alpha)
    mon = Monitor(grid, alpha, a)
    e0, scale0, _ = mon.energy_terms(np.asarray(u0.spectrum), np.asarray(u0.values))
    e_ref = (e0, _energy_denominator(e0, scale0))

    t = 0.0
    h = schedule.h0
    u = u0
    records = []
    snapshots = []
    steps = []
    used = 0
    termination = COMPLETED
    while t < schedule.t_max and used < schedule.max_steps:
        amp = u.sup()
        n = min(schedule.chunk_steps, schedule.max_steps - used)
        t1 = min(t + n * h, schedule.t_max)
        n = max(1, int(round((t1 - t) / h)))
        cfg = EvolutionConfig(
            alpha,
            a,
            grid,
            (t, t + n * h),
            n,
            monitor_stride=schedule.monitor_stride,
            energy_abort_rel=schedule.energy_abort_rel,
            linf_abort=growth * amp if amp > 0 else math.inf,
        )
        try:
            tr = evolve(u, cfg, e_ref=e_ref)
        except NumericalFailure as exc:
            log.warning("state became non-finite at h=%.3e: %s", h, exc)
            termination = ENERGY_DRIFT_ABORT
            break
        records.extend(tr.records if not records else tr.records[1:])
        steps.append(h)
        u = tr.final_state
        t_new = tr.t_final
        used += int(round((t_new - t) / h))
        t = t_new
        if tr.termination == ENERGY_DRIFT_ABORT:
            termination = ENERGY_DRIFT_ABORT
            break
        if tr.termination == AMPLITUDE_ABORT:
            snapshots.append((t, u))
            snapshots = snapshots[-schedule.keep_snapshots :]
            h = max(schedule.h_min, 0.5 * h)
    if termination == ENERGY_DRIFT_ABORT:
        # the state at the abort already violates the accuracy criterion
        log.info("blow-up run stopped at t=%.10g (step %.3e)", t, h)
    return EvolutionTrace(records, u, termination, snapshots, steps)


# --- blow-up time and rates -------------------------------------------------


@dataclass(frozen=True)
class FitWindowRule:
    """Records with ``||u||_inf > factor * ||u(t0)||_inf``, minus the last ``drop_last``."""

    factor: float = 2.0
    drop_last: int = 3
    min_records: int = 20


def fit_window(t, linf, rule: FitWindowRule = FitWindowRule()):
    t = np.asarray(t, dtype=float)
    linf = np.asarray(linf, dtype=float)
    idx = np.nonzero(linf > rule.factor * linf[0])[0]
    if idx.size:
        idx = np.arange(idx[0], len(t))
    if rule.drop_last:
        idx = idx[: max(0, idx.size - rule.drop_last)]
    if idx.size < rule.min_records:
        raise FitUnreliableError(
            f"only {idx.size} records above {rule.factor:g}x the initial amplitude",
            {"records_in_window": int(idx.size), "growth": float(linf.max() / linf[0])},
        )
    seg = linf[idx]
    if np.any(np.diff(seg) <= 0):
        raise FitUnreliableError(
            "sup norm is not monotonically increasing in the fit window",
            {"first_t": float(t[idx[0]]), "records_in_window": int(idx.size)},
        )
    return idx


def _loglog_fit(tstar, t, y):
    """Slope/intercept/RMS of log y against -log(t* - t)."""
    xs = -np.log(tstar - t)
    ys = np.log(y)
    A = np.vstack([xs, np.ones_like(xs)]).T
    coef, *_ = np.linalg.lstsq(A, ys, rcond=None)
    r = ys - A @ coef
    return float(coef[0]), float(coef[1]), float(np.sqrt(np.mean(r * r)))


def _trisect(f, lo, hi, tol):
    while hi - lo > tol:
        m1 = lo + (hi - lo) / 3
        m2 = hi - (hi - lo) / 3
        if f(m1) <= f(m2):
            hi = m2
        else:
            lo = m1
    return 0.5 * (lo + hi)


def estimate_tstar(t, linf, rule: FitWindowRule = FitWindowRule(), h_last: float | None = None, tol: float = 1e-12):
    """Blow-up time minimising the RMS of a power-law fit of ``linf`` in ``t* - t``.

    Candidates lie in ``(t_last, t_last + 10 h_last N_tail]`` with ``h_last`` the
    final record spacing and ``N_tail`` the window size; a logarithmic scan of the
    offset is refined by trisection.
    Returns ``(t_star, window_indices)``.
    """
    t = np.asarray(t, dtype=float)
    linf = np.asarray(linf, dtype=float)
    idx = fit_window(t, linf, rule)
    tw, yw = t[idx], linf[idx]
    t_last = float(t[-1])
    if h_last is None:
        # record spacing at the end of the run
        h_last = float(np.median(np.diff(t[-6:])))
    span = 10.0 * h_last * idx.size
    lo_off = max(1e-3 * h_last, 4 * np.spacing(t_last))

    def rms(off):
        return _loglog_fit(t_last + off, tw, yw)[2]

    offs = np.geomspace(lo_off, span, 241)
    vals = np.array([rms(o) for o in offs])
    j = int(np.argmin(vals))
    lo = offs[max(j - 1, 0)]
    hi = offs[min(j + 1, len(offs) - 1)]
    # trisect in log-offset, then polish the absolute tolerance
    lg = _trisect(lambda s: rms(math.exp(s)), math.log(lo), math.log(hi), 1e-10)
    off = math.exp(lg)
    if j == len(offs) - 1:
        log.warning("t* scan hit the upper end of its bracket")
    return t_last + off, idx


def fit_rates(t, linf, h2, t_star, idx):
    """``(gamma_inf, gamma_2, {"linf": rms, "h2": rms})`` over the window ``idx``."""
    t = np.asarray(t, dtype=float)[idx]
    if not t_star > t[-1]:
        raise DomainError("t_star must exceed the fitted times")
    g_inf, _, r_inf = _loglog_fit(t_star, t, np.asarray(linf, dtype=float)[idx])
    g_2, _, r_2 = _loglog_fit(t_star, t, np.asarray(h2, dtype=float)[idx])
    return g_inf, g_2, {"linf": r_inf, "h2": r_2}


def lambda_trace(linf, q0_max: float, alpha: float) -> np.ndarray:
    """``lambda = (max Q0 / ||u||_inf)^(alpha/4)``."""
    return (q0_max / np.asarray(linf, dtype=float)) ** (alpha / 4.0)


def rescaled_time(t, lam) -> np.ndarray:
    """``tau(t) = int dt / lambda^4`` by the trapezoid rule, ``tau(t_0) = 0``."""
    t = np.asarray(t, dtype=float)
    w = 1.0 / np.asarray(lam, dtype=float) ** 4
    tau = np.zeros_like(t)
    tau[1:] = np.cumsum(0.5 * (w[1:] + w[:-1]) * np.diff(t))
    return tau


def classify_a_inf(t, lam, idx):
    """Compare ``ln lambda`` linear in ``tau`` (exponential) against linear in ``ln tau`` (algebraic).

    Returns ``(class, {"exponential": rms, "algebraic": rms})``.
    """
    tau = rescaled_time(t, lam)[idx]
    ll = np.log(np.asarray(lam, dtype=float)[idx])
    out = {}
    for name, xs in ((EXPONENTIAL, tau), (ALGEBRAIC, np.log(tau))):
        A = np.vstack([xs, np.ones_like(xs)]).T
        coef, *_ = np.linalg.lstsq(A, ll, rcond=None)
        r = ll - A @ coef
        out[name] = float(np.sqrt(np.mean(r * r)))
    return (ALGEBRAIC if out[ALGEBRAIC] < out[EXPONENTIAL] else EXPONENTIAL), out


# --- profile fit --------------------------------------------------------------


@dataclass
class ProfileFit:
    b_prime: float
    center: float
    difference: Field
    sup_difference: float
    relative_difference: float
    core_halfwidth: float


def _peak_location(grid, mod):
    """Position and height of the maximum of the parabola through the top three samples."""
    j = int(np.argmax(mod))
    n = grid.N
    ym, y0, yp = mod[(j - 1) % n], mod[j], mod[(j + 1) % n]
    den = ym - 2 * y0 + yp
    off = 0.5 * (ym - yp) / den if den != 0 else 0.0
    top = y0 - 0.25 * (ym - yp) * off
    return float(grid.x[j] + off * grid.h), float(max(top, y0))


def fit_profile(u: Field, q0: GroundState, alpha: float | None = None) -> ProfileFit:
    """Fit ``|u|`` with ``|Q_b'|``, the a = 0 family member matching its maximum.

    ``(b'/b0)^(1/alpha) = max|u| / max Q0``; the fitted profile is centred at
    the (sub-grid) maximum of ``|u|``. The sup difference is taken over
    ``|x - x_peak| <= 5 b'^(-1/4)``.
    """
    alpha = q0.alpha if alpha is None else alpha
    if q0.a != 0:
        raise DomainError("profile fitting needs the a = 0 ground state")
    mod = np.abs(np.asarray(u.values))
    top = mod.max()
    if top == 0:
        raise DomainError("cannot fit a profile to the zero field")
    xc, top = _peak_location(u.grid, mod)
    _, q_max = _peak_location(q0.grid, np.abs(np.asarray(q0.profile.values)))
    s = (top / q_max) ** alpha
    b_prime = q0.b * s
    qb = scaled_profile(q0.profile, s, alpha, center=xc, grid=u.grid).real
    # moduli are compared: Q0 changes sign in its oscillatory tail
    diff = mod - np.abs(qb)
    half = 5.0 * b_prime ** -0.25
    x = np.asarray(u.grid.x)
    # periodic distance to the peak
    dist = np.abs((x - xc + np.pi * u.grid.L) % (2 * np.pi * u.grid.L) - np.pi * u.grid.L)
    core = dist <= half
    sup = float(np.max(np.abs(diff[core])))
    return ProfileFit(float(b_prime), xc, Field(u.grid, diff), sup, sup / float(top), half)


# --- report -------------------------------------------------------------------


@dataclass
class BlowupReport:
    t_star: float | None
    rate_linf: float | None
    rate_h2: float | None
    fit_window: list | None
    fit_residuals: dict
    profile_fit: dict | None
    lambda_exponent: float | None
    A_inf_estimate: str | None
    A_inf_residuals: dict
    termination: str
    t_last: float
    linf_growth: float
    verdict: str
    window_rule: dict
    diagnostics: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def analyse(
    trace: EvolutionTrace,
    alpha: float,
    q0: GroundState | None = None,
    rule: FitWindowRule = FitWindowRule(),
    config: dict | None = None,
) -> BlowupReport:
    """Blow-up time, rates, lambda behaviour and profile fit for a refined run."""
    t = trace.t
    linf = trace.linf
    h2 = trace.column("h2_seminorm")
    growth = float(linf.max() / linf[0]) if linf[0] > 0 else math.inf
    base = dict(
        termination=trace.termination,
        t_last=float(t[-1]),
        linf_growth=growth,
        window_rule=asdict(rule),
        config=config or {},
    )
    if trace.termination == COMPLETED:
        return BlowupReport(None, None, None, None, {}, None, None, None, {}, verdict="no_blowup", **base)
    try:
        t_star, idx = estimate_tstar(t, linf, rule)
        g_inf, g_2, res = fit_rates(t, linf, h2, t_star, idx)
    except FitUnreliableError as exc:
        return BlowupReport(
            None, None, None, None, {}, None, None, None, {},
            verdict="fit_unreliable", diagnostics={"error": str(exc), **exc.diagnostics}, **base,
        )
    pf = None
    lam_exp = None
    a_cls, a_res = None, {}
    if q0 is not None:
        lam = lambda_trace(linf, q0.profile.sup(), alpha)
        lam_exp = g_inf * alpha / 4.0
        a_cls, a_res = classify_a_inf(t, lam, idx)
        if trace.snapshots:
            ts, us = trace.snapshots[-1]
            fit = fit_profile(us, q0, alpha)
            pf = {
                "b_prime": fit.b_prime,
                "sup_difference": fit.sup_difference,
                "relative_difference": fit.relative_difference,
                "time_of_snapshot": float(ts),
                "center": fit.center,
            }
    return BlowupReport(
        float(t_star),
        g_inf,
        g_2,
        [float(t[idx[0]]), float(t[idx[-1]])],
        res,
        pf,
        lam_exp,
        a_cls,
        a_res,
        verdict="blowup",
        **base,
    )


RATE_COLUMNS = ("t", "tstar_minus_t", "linf", "h2_seminorm", "in_window")


def write_rate_csv(trace: EvolutionTrace, report: BlowupReport, path) -> None:
    t = trace.t
    linf = trace.linf
    h2 = trace.column("h2_seminorm")
    lo, hi = report.fit_window or (math.inf, -math.inf)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(RATE_COLUMNS)
        for ti, li, hi2 in zip(t, linf, h2):
            dt = report.t_star - ti if report.t_star is not None else float("nan")
            w.writerow([repr(float(ti)), repr(float(dt)), repr(float(li)), repr(float(hi2)), int(lo <= ti <= hi)])
