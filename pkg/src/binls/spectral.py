"""Periodic Fourier collocation on the torus L*[-pi, pi).

Conventions
-----------
Collocation points ``x_j = -L*pi + j*h`` with ``h = 2*pi*L/N``. Wavenumbers are
stored in FFT-natural order ``k = (0, 1, ..., N/2-1, -N/2, ..., -1) / L``.
The forward transform is the unnormalised sum (``numpy.fft.fft``), the inverse
carries the ``1/N``. Physical quantities (mass, energy, norms) are always
computed from physical-space samples with the rectangle rule, so the transform
normalisation never leaks into results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ConfigurationError, DomainError

#: Tail level above which a field is considered under-resolved.
TAIL_WARNING = 1e-10


def _frozen(a):
    a = np.asarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid of ``N`` points on ``L*[-pi, pi)``."""

    L: float
    N: int

    def __post_init__(self):
        if not (isinstance(self.L, (int, float)) and math.isfinite(self.L) and self.L > 0):
            raise ConfigurationError(f"L must be a positive real, got {self.L!r}")
        n = self.N
        if isinstance(n, bool) or not isinstance(n, (int, np.integer)):
            raise ConfigurationError(f"N must be an integer, got {n!r}")
        if n < 8 or n & (n - 1):
            raise ConfigurationError(f"N must be a power of two >= 8, got {n}")
        object.__setattr__(self, "L", float(self.L))
        object.__setattr__(self, "N", int(n))

    @property
    def h(self) -> float:
        return 2 * np.pi * self.L / self.N

    @cached_property
    def x(self) -> np.ndarray:
        return _frozen(-self.L * np.pi + self.h * np.arange(self.N))

    @cached_property
    def k(self) -> np.ndarray:
        return _frozen(np.fft.fftfreq(self.N, d=1.0 / self.N) / self.L)

    @property
    def k_max(self) -> float:
        return self.N / (2 * self.L)

    @property
    def origin_index(self) -> int:
        """Index of the collocation point x = 0."""
        return self.N // 2

    def reflect(self, values: np.ndarray) -> np.ndarray:
        """Return ``values`` sampled at ``-x`` (x_j -> x_{N-j})."""
        return np.roll(values[::-1], 1)

    def __hash__(self):
        return hash((self.L, self.N))


def make_grid(L: float, N: int) -> Grid:
    return Grid(L, N)


def forward(values: np.ndarray) -> np.ndarray:
    return np.fft.fft(values)


def inverse(spectrum: np.ndarray) -> np.ndarray:
    return np.fft.ifft(spectrum)


@dataclass(frozen=True, eq=False)
class Field:
    """Complex samples on a :class:`Grid` with a lazily computed spectrum."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=complex)
        if v.shape != (self.grid.N,):
            raise ConfigurationError(
                f"field has shape {v.shape}, grid expects ({self.grid.N},)"
            )
        object.__setattr__(self, "values", _frozen(v))

    @classmethod
    def from_spectrum(cls, grid: Grid, spectrum) -> "Field":
        f = cls(grid, inverse(np.asarray(spectrum, dtype=complex)))
        return f

    @classmethod
    def from_function(cls, grid: Grid, func) -> "Field":
        return cls(grid, func(np.asarray(grid.x)))

    @cached_property
    def spectrum(self) -> np.ndarray:
        return _frozen(forward(self.values))

    @property
    def real(self) -> np.ndarray:
        return self.values.real

    def __mul__(self, c):
        return Field(self.grid, self.values * c)

    __rmul__ = __mul__

    def __add__(self, other: "Field"):
        return Field(self.grid, self.values + other.values)

    def __sub__(self, other: "Field"):
        return Field(self.grid, self.values - other.values)

    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))


def as_field(f, grid: Grid | None = None) -> Field:
    if isinstance(f, Field):
        return f
    if grid is None:
        raise TypeError("a Grid is required to wrap raw samples")
    return Field(grid, f)


def derivative_multiplier(grid: Grid, order: int) -> np.ndarray:
    """Fourier symbol ``(i k)^order`` with the Nyquist mode handled per parity."""
    if order < 0:
        raise DomainError("derivative order must be non-negative")
    k = np.asarray(grid.k)
    if order % 2 == 0:
        return ((-1) ** (order // 2)) * k**order + 0j
    mult = (1j * k) ** order
    mult[grid.N // 2] = 0.0
    return mult


def derivative(f: Field, order: int = 1) -> Field:
    if order < 1:
        raise DomainError("derivative order must be >= 1")
    return Field.from_spectrum(f.grid, derivative_multiplier(f.grid, order) * f.spectrum)


def integrate(grid: Grid, values) -> float:
    """Rectangle rule on the uniform periodic grid."""
    return float(np.sum(values).real * grid.h)


def mass(f: Field) -> float:
    v = f.values
    return float(f.grid.h * np.sum(v.real**2 + v.imag**2))


def lp_norm(f: Field, p: float) -> float:
    if p < 1:
        raise DomainError(f"L^p norm needs p >= 1, got {p}")
    if math.isinf(p):
        return f.sup()
    return integrate(f.grid, np.abs(f.values) ** p) ** (1.0 / p)


def potential_term(f: Field, alpha: float) -> float:
    """``||f||_{alpha+2}^{alpha+2}``."""
    return integrate(f.grid, np.abs(f.values) ** (alpha + 2))


def sobolev_forms(grid: Grid, spectrum) -> tuple[float, float]:
    """``(||f_x||_2^2, ||f_xx||_2^2)`` from the spectrum via Parseval.

    Matches the quadrature of :func:`derivative` output exactly in exact
    arithmetic, including the zeroed Nyquist mode of the first derivative.
    """
    p = np.abs(spectrum) ** 2
    k2 = np.asarray(grid.k) ** 2
    c = grid.h / grid.N
    grad = p * k2
    grad[grid.N // 2] = 0.0
    return float(c * grad.sum()), float(c * np.sum(p * k2 * k2))


def gradient_sq(f: Field) -> float:
    """``||f_x||_2^2``."""
    return sobolev_forms(f.grid, f.spectrum)[0]


def h2_seminorm(f: Field) -> float:
    """``||f_xx||_2``."""
    return math.sqrt(sobolev_forms(f.grid, f.spectrum)[1])


def energy_from(grid: Grid, spectrum, values, a: float, alpha: float) -> tuple[float, float, float]:
    """Energy, the sum of its absolute constituents, and ``||f_xx||^2``."""
    grad_sq, h2_sq = sobolev_forms(grid, spectrum)
    mod2 = values.real**2 + values.imag**2
    pot = float(grid.h * np.sum(mod2 ** ((alpha + 2) / 2)))
    e = 0.5 * h2_sq - a * grad_sq - pot / (alpha + 2)
    scale = 0.5 * h2_sq + abs(a) * grad_sq + pot / (alpha + 2)
    return e, scale, h2_sq


def energy(f: Field, a: float, alpha: float) -> float:
    """Hamiltonian ``1/2 ||f_xx||^2 - a ||f_x||^2 - ||f||_{alpha+2}^{alpha+2}/(alpha+2)``."""
    return energy_from(f.grid, f.spectrum, f.values, a, alpha)[0]


def tail_level_spectrum(spectrum: np.ndarray) -> float:
    a = np.abs(spectrum)
    top = a.max()
    if top == 0:
        return 0.0
    n = len(a)
    n_tail = max(1, math.ceil(n / 10))
    # modes ordered by |m| descending: N/2, N/2-1 (x2), ...
    m = np.abs(np.fft.fftfreq(n, d=1.0 / n))
    cutoff = np.sort(m)[-n_tail]
    return float(a[m >= cutoff].max() / top)


def tail_level(f: Field) -> float:
    """Largest spectral coefficient among the top 10% of |k|, relative to the peak."""
    return tail_level_spectrum(f.spectrum)


def interpolate(f: Field, points, chunk: int = 2048) -> np.ndarray:
    """Evaluate the trigonometric interpolant of ``f`` at arbitrary ``points``."""
    grid = f.grid
    pts = np.atleast_1d(np.asarray(points, dtype=float))
    c = np.array(f.spectrum) / grid.N
    k = np.array(grid.k)
    nyq = grid.N // 2
    c_nyq = c[nyq]
    c[nyq] = 0.0
    shift = pts - grid.x[0]
    out = np.empty(pts.shape, dtype=complex)
    for s in range(0, len(pts), chunk):
        xs = shift[s : s + chunk]
        out[s : s + chunk] = np.exp(1j * np.outer(xs, k)) @ c
        out[s : s + chunk] += c_nyq * np.cos(grid.k_max * xs)
    return out


def resample(f: Field, grid: Grid) -> Field:
    """Transfer ``f`` onto ``grid`` by spectral interpolation.

    Same-period grids use zero padding / truncation of the spectrum; other
    grids fall back to direct evaluation, with points outside the source
    period set to zero (fields are assumed localised).
    """
    src = f.grid
    if grid == src:
        return f
    if math.isclose(grid.L, src.L, rel_tol=0, abs_tol=1e-14 * src.L):
        n_src, n_dst = src.N, grid.N
        spec = np.array(f.spectrum)
        out = np.zeros(n_dst, dtype=complex)
        half = min(n_src, n_dst) // 2
        out[:half] = spec[:half]
        out[n_dst - half + 1 :] = spec[n_src - half + 1 :]
        if n_dst > n_src:
            # split the source Nyquist coefficient symmetrically
            out[half] = 0.5 * spec[half]
            out[n_dst - half] = 0.5 * spec[half]
        else:
            out[half] = spec[half] + spec[n_src - half]
        return Field(grid, inverse(out) * (n_dst / n_src))
    x = np.asarray(grid.x)
    inside = np.abs(x) <= src.L * np.pi
    vals = np.zeros(grid.N, dtype=complex)
    vals[inside] = interpolate(f, x[inside])
    return Field(grid, vals)


def circular_shift(f: Field, shift: int) -> Field:
    return Field(f.grid, np.roll(f.values, shift))
