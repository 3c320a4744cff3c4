"""Parameter sweeps of ground states and detection of the two-branch (fold) structure.

A sweep solves a sequence of problems, warm-starting each Newton solve from the
previous converged profile, so that one branch is followed continuously.
"""

from __future__ import annotations

import csv
import logging
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from .errors import ConfigurationError, DomainError, NonConvergenceError
from .groundstate import GroundStateProblem, solve, validate_parameters

log = logging.getLogger(__name__)

SINGLE = "single"
LOWER_B = "lower-b-branch"  # below the fold: higher energy, unstable
UPPER_B = "upper-b-branch"  # above the fold: lower energy, stable

BRANCH_COLUMNS = ("param", "b", "a", "alpha", "M", "E", "Linf", "Lp", "residual", "branch_label")


class BranchSample(NamedTuple):
    param: float
    b: float
    a: float
    M: float
    E: float
    Linf: float
    Lp: float
    residual: float


@dataclass
class BranchCurve:
    alpha: float
    swept: str  # "b" or "a"
    fixed: float
    samples: list
    labels: list = field(default_factory=list)
    fold_index: int | None = None
    folds: list = field(default_factory=list)
    failures: list = field(default_factory=list)  # (param, message)

    def __post_init__(self):
        if self.swept not in ("a", "b"):
            raise ConfigurationError("swept must be 'a' or 'b'")
        if not self.labels:
            self.labels = [SINGLE] * len(self.samples)

    def __len__(self):
        return len(self.samples)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(s, name) for s in self.samples])

    @property
    def params(self):
        return self.column("param")

    def nearest(self, value: float) -> int:
        return int(np.argmin(np.abs(self.params - value)))

    def rows(self):
        for s, lab in zip(self.samples, self.labels):
            yield {**s._asdict(), "alpha": self.alpha, "branch_label": lab}


def default_b_values(a: float, n: int = 31, b_max: float = 4.0) -> np.ndarray:
    return np.linspace(max(a * a + 0.05, 1.0), b_max, n)


def parse_range(text: str) -> np.ndarray:
    """``"1:0.1:4"`` (start:step:stop, inclusive) or a comma-separated list."""
    if ":" in text:
        parts = [float(p) for p in text.split(":")]
        if len(parts) != 3 or parts[1] <= 0 or parts[2] < parts[0]:
            raise ConfigurationError(f"range must be start:step:stop with step > 0, got {text!r}")
        start, step, stop = parts
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return start + step * np.arange(n)
    vals = [float(p) for p in text.split(",") if p.strip()]
    if not vals:
        raise ConfigurationError("empty sweep")
    return np.array(vals)


def _check_sorted(values):
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ConfigurationError("empty sweep")
    if np.any(np.diff(v) <= 0):
        raise ConfigurationError("sweep values must be strictly increasing")
    return v


def _sweep(base: GroundStateProblem, swept: str, values) -> BranchCurve:
    values = _check_sorted(values)
    for v in values:
        kw = {swept: float(v)}
        validate_parameters(base.alpha, kw.get("a", base.a), kw.get("b", base.b))
    fixed = base.a if swept == "b" else base.b
    samples, failures = [], []
    warm = base.initial_iterate
    for v in values:
        p = replace(base, **{swept: float(v)}, initial_iterate=warm)
        try:
            g = solve(p)
        except NonConvergenceError as exc:
            if warm is None:
                failures.append((float(v), str(exc)))
                log.warning("sweep %s=%g failed: %s", swept, v, exc)
                continue
            # retry from the default iterate before giving up on the point
            try:
                g = solve(replace(p, initial_iterate=None))
            except NonConvergenceError as exc2:
                failures.append((float(v), str(exc2)))
                log.warning("sweep %s=%g failed: %s", swept, v, exc2)
                continue
        s = g.scalars
        samples.append(
            BranchSample(float(v), p.b, p.a, s["M"], s["E"], s["Linf"], s["Lp"], g.residual_sup)
        )
        warm = g.profile
    return BranchCurve(base.alpha, swept, fixed, samples, failures=failures)


def sweep_b(base: GroundStateProblem, b_values) -> BranchCurve:
    """Ground states at fixed ``(alpha, a)`` for each ``b``; ``base.b`` is ignored."""
    return _sweep(base, "b", b_values)


def sweep_a(base: GroundStateProblem, a_values) -> BranchCurve:
    """Ground states at fixed ``(alpha, b)`` for each ``a``; ``base.a`` is ignored."""
    return _sweep(base, "a", a_values)


def _dm(params, m):
    # central differences inside, one-sided at the ends
    return np.gradient(m, params)


def detect_fold(curve: BranchCurve, noise: float = 1e-8) -> BranchCurve:
    """Label samples around the first interior extremum of M along the swept parameter.

    Samples up to and including the fold are labelled ``lower-b-branch`` (higher
    energy, unstable), the rest ``upper-b-branch`` (stable). Returns a new
    curve; the input is not modified.
    """
    n = len(curve)
    if n < 3:
        raise DomainError("fold detection needs at least 3 samples")
    p = curve.params
    m = curve.column("M")
    dm = _dm(p, m)
    sgn = np.where(np.abs(dm) <= noise, 0, np.sign(dm))
    folds = []
    prev = None
    for i in range(n):
        if sgn[i] == 0:
            continue
        if prev is not None and sgn[i] != sgn[prev]:
            # extremum between prev and i; tie toward the smaller parameter
            j = prev + int(np.argmax(m[prev : i + 1]) if sgn[prev] > 0 else np.argmin(m[prev : i + 1]))
            folds.append(j)
        prev = i
    out = replace(curve, labels=[SINGLE] * n, fold_index=None, folds=folds)
    if not folds:
        return out
    if len(folds) > 1:
        warnings.warn(f"{len(folds)} folds detected at indices {folds}; labelling around the first")
    f = folds[0]
    out.fold_index = f
    out.labels = [LOWER_B if i <= f else UPPER_B for i in range(n)]
    if curve.swept == "b" and not branch_energy_check(out):
        log.warning("equal-mass energy ordering does not match the branch labels")
    return out


def _interp_energy_at_mass(m, e, target):
    """Energies where the piecewise-linear curve M(param) crosses ``target``."""
    out = []
    for i in range(len(m) - 1):
        m0, m1 = m[i], m[i + 1]
        if (m0 - target) * (m1 - target) <= 0 and m0 != m1:
            t = (target - m0) / (m1 - m0)
            out.append(e[i] + t * (e[i + 1] - e[i]))
    return out


def branch_energy_check(curve: BranchCurve) -> bool:
    """At equal mass, the branch below the fold must carry the larger energy."""
    f = curve.fold_index
    if f is None:
        return True
    m, e = curve.column("M"), curve.column("E")
    lo_m, lo_e = m[: f + 1], e[: f + 1]
    hi_m, hi_e = m[f:], e[f:]
    lo_range = (lo_m.min(), lo_m.max())
    hi_range = (hi_m.min(), hi_m.max())
    a_, b_ = max(lo_range[0], hi_range[0]), min(lo_range[1], hi_range[1])
    if not b_ > a_:
        return True
    for target in np.linspace(a_, b_, 7)[1:-1]:
        e_lo = _interp_energy_at_mass(lo_m, lo_e, target)
        e_hi = _interp_energy_at_mass(hi_m, hi_e, target)
        if e_lo and e_hi and not min(e_lo) > max(e_hi):
            return False
    return True


def write_branch_csv(curve: BranchCurve, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=BRANCH_COLUMNS, extrasaction="ignore")
        w.writeheader()
        for row in curve.rows():
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})


def read_branch_csv(path) -> list:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
