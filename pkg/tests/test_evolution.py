"""ETDRK4 weights, symmetries of the flow and perturbation-experiment verdicts."""

import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from binls import spectral as sp
from binls.errors import ConfigurationError, NumericalFailure
from binls.evolution import (
    AMPLITUDE_ABORT,
    BLOWUP,
    COMPLETED,
    CONVERGE_OSCILLATE,
    DISPERSE,
    ENERGY_DRIFT_ABORT,
    EvolutionConfig,
    EvolutionTrace,
    TraceRecord,
    VerdictRule,
    classify,
    evolve,
    initial_data,
    linear_symbol,
    perturbation_experiment,
    phi_weights,
)
from binls.groundstate import GroundStateProblem, solve
from binls.spectral import Field, Grid


def _phi_oracle(z):
    """Cox-Matthews scalar weights (h = 1) in 50-digit arithmetic."""
    with mpmath.workdps(50):
        z = mpmath.mpc(z)
        if z == 0:
            return [mpmath.mpf(1) / 2, mpmath.mpf(1) / 6, mpmath.mpf(1) / 6, mpmath.mpf(1) / 6]
        e = mpmath.exp(z)
        z3 = z**3
        vals = [
            (mpmath.exp(z / 2) - 1) / z,
            (-4 - z + e * (4 - 3 * z + z * z)) / z3,
            (2 + z + e * (z - 2)) / z3,
            (-4 - 3 * z - z * z + e * (4 - z)) / z3,
        ]
        return [complex(v) for v in vals]


@pytest.mark.parametrize(
    "z",
    [0, 1e-12, 1e-6j, -1e-4, 0.3j, 0.49, -0.51, 0.5j, 2.0, -30.0, 150j, -3 + 4j, 1e4j],
)
def test_phi_weights_match_high_precision(z):
    w = phi_weights(np.array([z]), 1.0)
    ref = _phi_oracle(z)
    for got, exp in zip((w.Q, w.f1, w.f2, w.f3), ref):
        assert abs(got[0] - complex(exp)) <= 1e-13 * max(1.0, abs(complex(exp)))
    assert w.E[0] == pytest.approx(np.exp(z))
    assert w.E2[0] == pytest.approx(np.exp(z / 2))


def test_phi_weights_scale_with_h():
    lam = np.array([-2.0, 0.1j, 40j])
    h = 0.01
    w = phi_weights(lam, h)
    for i, z in enumerate(lam * h):
        ref = _phi_oracle(z)
        assert w.f1[i] == pytest.approx(h * complex(ref[1]), rel=1e-12)


def test_phi_weights_reject_bad_step():
    with pytest.raises(ConfigurationError):
        phi_weights(np.zeros(4), 0.0)


class TestConfig:
    def test_validation(self):
        g = Grid(5.0, 64)
        for kw in (
            dict(t_span=(1.0, 1.0), n_steps=10),
            dict(t_span=(0.0, 1.0), n_steps=0),
            dict(t_span=(0.0, 1.0), n_steps=10, monitor_stride=0),
            dict(t_span=(0.0, 1.0), n_steps=10, energy_abort_rel=0.0),
        ):
            with pytest.raises(ConfigurationError):
                EvolutionConfig(2.0, 0.0, g, **kw)
        with pytest.raises(ConfigurationError):
            EvolutionConfig(0.0, 0.0, g, (0.0, 1.0), 10)

    def test_grid_mismatch(self):
        cfg = EvolutionConfig(2.0, 0.0, Grid(5.0, 64), (0.0, 1.0), 10)
        with pytest.raises(ConfigurationError):
            evolve(Field(Grid(5.0, 128), np.zeros(128)), cfg)


def test_zero_data_stays_zero():
    g = Grid(5.0, 128)
    tr = evolve(Field(g, np.zeros(g.N)), EvolutionConfig(8.0, 1.0, g, (0.0, 1.0), 50))
    assert tr.termination == COMPLETED
    assert tr.final_state.sup() == 0.0
    assert all(r.energy_drift_rel == 0.0 for r in tr.records)


@settings(max_examples=10, deadline=None)
@given(st.integers(-20, 20), st.floats(-2.0, 2.0))
def test_linear_flow_is_exact(m, a):
    g = Grid(2.0, 64)
    k = m / g.L
    u0 = Field.from_function(g, lambda x: np.exp(1j * k * x))
    cfg = EvolutionConfig(2.0, a, g, (0.0, 0.7), 7, nonlinearity_enabled=False)
    got = evolve(u0, cfg).final_state.values
    phase = (k**4 - 2 * a * k**2) * 0.7
    exact = np.exp(1j * k * np.asarray(g.x) - 1j * phase)
    # round-off in a phase of thousands of radians
    assert np.abs(got - exact).max() < 1e-13 + 1e-15 * abs(phase)


def _bump(g, shift=0.0):
    return Field.from_function(g, lambda x: 1.2 * np.exp(-((x - shift) ** 2)) * np.exp(0.4j * x))


@settings(max_examples=6, deadline=None)
@given(st.floats(0.0, 2 * math.pi))
def test_phase_equivariance(theta):
    g = Grid(5.0, 256)
    cfg = EvolutionConfig(4.0, 0.5, g, (0.0, 0.5), 200)
    u0 = _bump(g)
    rot = np.exp(1j * theta)
    a = evolve(u0 * rot, cfg).final_state.values
    b = evolve(u0, cfg).final_state.values * rot
    assert np.abs(a - b).max() < 1e-12


@settings(max_examples=6, deadline=None)
@given(st.integers(-40, 40))
def test_translation_equivariance(shift):
    g = Grid(5.0, 256)
    cfg = EvolutionConfig(4.0, 0.5, g, (0.0, 0.5), 200)
    u0 = _bump(g)
    a = evolve(sp.circular_shift(u0, shift), cfg).final_state
    b = sp.circular_shift(evolve(u0, cfg).final_state, shift)
    assert np.abs(a.values - b.values).max() < 1e-12


def test_time_reversal():
    # conj(u(T - t)) solves the same equation: forward, conjugate, forward, conjugate
    g = Grid(5.0, 256)
    cfg = EvolutionConfig(4.0, 0.5, g, (0.0, 0.5), 1000)
    u0 = _bump(g)
    uT = evolve(u0, cfg).final_state
    back = evolve(Field(g, np.conj(uT.values)), cfg).final_state
    assert np.abs(np.conj(back.values) - u0.values).max() < 1e-9


@pytest.fixture(scope="module")
def soliton():
    return solve(GroundStateProblem(8.0, 1.0, 2.0, Grid(10.0, 1024)))


def test_soliton_rotates_in_phase(soliton):
    cfg = EvolutionConfig(8.0, 1.0, soliton.grid, (0.0, 0.25), 500)
    tr = evolve(soliton.profile, cfg)
    expected = np.exp(2j * 0.25) * soliton.profile.values
    assert np.abs(tr.final_state.values - expected).max() < 1e-8
    assert max(r.energy_drift_rel for r in tr.records) < 1e-10
    m = tr.column("mass")
    assert np.abs(m - m[0]).max() < 1e-10 * m[0]
    assert tr.t_final == pytest.approx(0.25)
    assert tr.step_sizes == [pytest.approx(0.25 / 500)]


def test_monitor_stride_and_final_record():
    g = Grid(5.0, 128)
    tr = evolve(_bump(g), EvolutionConfig(2.0, 0.0, g, (1.0, 2.0), 25, monitor_stride=10))
    assert list(np.round(tr.t, 12)) == [1.0, 1.4, 1.8, 2.0]
    assert set(TraceRecord._fields) <= {"t", "linf", "mass", "energy", "energy_drift_rel", "h2_seminorm", "tail_level"}


def test_snapshots_recorded():
    g = Grid(5.0, 128)
    tr = evolve(_bump(g), EvolutionConfig(2.0, 0.0, g, (0.0, 1.0), 20, monitor_stride=5, snapshot_stride=10))
    assert [round(t, 12) for t, _ in tr.snapshots] == [0.0, 0.5, 1.0]


def test_amplitude_abort():
    g = Grid(5.0, 256)
    u0 = Field.from_function(g, lambda x: 2.0 * np.exp(-x * x))
    cfg = EvolutionConfig(8.0, 0.0, g, (0.0, 1.0), 20000, monitor_stride=5, energy_abort_rel=1.0, linf_abort=4.0)
    tr = evolve(u0, cfg)
    assert tr.termination == AMPLITUDE_ABORT
    assert tr.t_final < 1.0


def test_energy_drift_abort():
    g = Grid(5.0, 256)
    u0 = Field.from_function(g, lambda x: 2.0 * np.exp(-x * x))
    cfg = EvolutionConfig(8.0, 0.0, g, (0.0, 0.1), 10, monitor_stride=1, energy_abort_rel=1e-12)
    assert evolve(u0, cfg).termination == ENERGY_DRIFT_ABORT


def test_nonfinite_state_raises():
    g = Grid(5.0, 256)
    u0 = Field.from_function(g, lambda x: 3.0 * np.exp(-x * x))
    cfg = EvolutionConfig(8.0, 0.0, g, (0.0, 1.0), 2, energy_abort_rel=1e300, linf_abort=1e300)
    with pytest.raises(NumericalFailure):
        evolve(u0, cfg)


class TestInitialData:
    def test_kinds(self):
        g = Grid(5.0, 128)
        x = np.asarray(g.x)
        assert np.allclose(initial_data("gaussian", 2, g).values, 2 * np.exp(-x * x))
        assert np.allclose(initial_data("supergaussian", 2, g).values, 2 * np.exp(-(x**4)))
        assert np.allclose(initial_data("sech", 2, g).values, 2 / np.cosh(x))
        with pytest.raises(ConfigurationError):
            initial_data("square", 1, g)
        with pytest.raises(ConfigurationError):
            initial_data("AQ", 1, g)

    def test_aq_resamples(self, soliton):
        g = Grid(10.0, 2048)
        u = initial_data("AQ", 1.1, g, soliton)
        assert u.sup() == pytest.approx(1.1 * soliton.profile.sup(), rel=1e-12)


def _trace(t, linf, termination=COMPLETED):
    recs = [TraceRecord(ti, li, 1.0, 0.0, 0.0, 1.0, 0.0) for ti, li in zip(t, linf)]
    return EvolutionTrace(recs, None, termination)


class TestClassify:
    t = np.linspace(0, 20, 101)

    def test_blowup(self):
        assert classify(_trace(self.t[:5], [1, 2, 3, 4, 5], AMPLITUDE_ABORT), 1.0) == BLOWUP

    def test_disperse(self):
        linf = (1 + self.t) ** -0.25
        assert classify(_trace(self.t, linf), 1.0) == DISPERSE

    def test_low_but_rising_is_not_dispersion(self):
        linf = 0.3 + 0.01 * self.t
        assert classify(_trace(self.t, linf), 1.0) == CONVERGE_OSCILLATE

    def test_oscillating(self):
        linf = 1.5 + 0.2 * np.sin(3 * self.t)
        assert classify(_trace(self.t, linf), 1.0) == CONVERGE_OSCILLATE

    def test_rule_validation(self):
        for kw in (dict(amplitude_factor=1.0), dict(disperse_ratio=1.0), dict(trend_fraction=0.0)):
            with pytest.raises(ConfigurationError):
                VerdictRule(**kw)


def test_experiment_rejects_zero_data():
    g = Grid(5.0, 64)
    with pytest.raises(ConfigurationError):
        perturbation_experiment(Field(g, np.zeros(64)), 8.0, 0.0)


def test_small_data_disperses():
    g = Grid(20.0, 512)
    u0 = initial_data("gaussian", 0.3, g)
    res = perturbation_experiment(u0, 8.0, 0.0, t_span=(0.0, 5.0), n_steps=1000)
    assert res.verdict == DISPERSE
    assert res.final_linf < 0.6 * res.initial_linf
    assert res.max_energy_drift < 1e-6


def test_large_data_blows_up():
    g = Grid(5.0, 512)
    u0 = initial_data("gaussian", 3.0, g)
    res = perturbation_experiment(u0, 8.0, 0.0, t_span=(0.0, 1.0), n_steps=2000)
    assert res.verdict == BLOWUP
