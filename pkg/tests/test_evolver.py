import math

import numpy as np
import pytest

from nlslab.errors import FitIllConditioned, InsufficientSamples, NumericalOverflow, UnsupportedDimension
from nlslab.evolver import (StepControls, StopReason, _SpectralLinear, _strang, blowup_rate_fit, evolve,
                            half_derivative_growth, propagate, self_convergence_order, step,
                            virial_consistency)
from nlslab.fields import NlsParams, RadialGrid

from conftest import CUBIC, gaussian


def free_gaussian(r, t):
    """Exact solution of ``i u_t + Delta u = 0`` in R^3 from ``exp(-r^2/2)``."""
    z = 1 + 2j * t
    return z ** -1.5 * np.exp(-r ** 2 / (2 * z))


@pytest.mark.parametrize("scheme,tol", [("spectral", 1e-12), ("cn", 2e-4)])
def test_free_dispersion_oracle(scheme, tol):
    eps = 1e-7  # nonlinear phase eps^2 t is below roundoff
    grid = RadialGrid.from_spacing(0.02, 40.0)
    u = propagate(gaussian(eps, grid), 0.5, 0.01, scheme)
    err = np.max(np.abs(u.values / eps - free_gaussian(grid.r, 0.5)))
    assert err < tol


def test_time_reversibility():
    u0 = gaussian(1.5, RadialGrid.from_spacing(0.02, 20.0))
    u = u0
    for _ in range(50):
        u = step(u, 2e-3)
    for _ in range(50):
        u = step(u, -2e-3)
    assert np.max(np.abs(u.values - u0.values)) < 1e-11


@pytest.mark.parametrize("N,p,scheme", [(3, 3.0, "spectral"), (3, 3.0, "cn"), (2, 4.0, "cn")])
def test_strang_second_order(N, p, scheme):
    u0 = gaussian(1.5, RadialGrid.from_spacing(0.02, 15.0), NlsParams(N, p))
    assert self_convergence_order(u0, 0.2, 0.01, scheme) >= 1.9


def test_spectral_requires_n3():
    with pytest.raises(UnsupportedDimension):
        step(gaussian(1.0, RadialGrid.from_spacing(0.02, 10.0), NlsParams(2, 4.0)), 1e-3, "spectral")


def test_linear_step_is_unitary():
    grid = RadialGrid.from_spacing(0.05, 10.0)
    lin = _SpectralLinear(grid)
    rng = np.random.default_rng(1)
    v = rng.normal(size=grid.n) + 1j * rng.normal(size=grid.n)
    w = lin(v, 0.37)
    assert np.sum(np.abs(grid.r * w) ** 2) == pytest.approx(np.sum(np.abs(grid.r * v) ** 2), rel=1e-12)


def test_overflow_guard():
    grid = RadialGrid.from_spacing(0.1, 5.0)
    with pytest.raises(NumericalOverflow):
        _strang(np.full(grid.n, 1e151 + 0j), 1e-300, 2.0, _SpectralLinear(grid))


def test_controls_validation():
    with pytest.raises(ValueError):
        StepControls(dt0=0.0)
    with pytest.raises(ValueError):
        StepControls(sample_dt=-1.0)


def test_soliton_fidelity(soliton_run):
    u0, gs, trace = soliton_run
    ref = np.abs(u0.values)
    dev = max(np.max(np.abs(np.abs(u.values) - ref)) for _, u in trace.snapshots)
    assert trace.stop_reason is StopReason.HORIZON
    assert trace.times[-1] == pytest.approx(1.0)
    assert dev < 1e-4
    M, E = trace.series("mass"), trace.series("energy")
    assert np.ptp(M) / M[0] < 1e-10
    assert np.ptp(E) / abs(E[0]) < 1e-6


def test_soliton_phase_rotates_at_frequency(soliton_run):
    u0, gs, trace = soliton_run
    t, u = trace.snapshots[-1]
    j = 0
    phase = np.angle(u.values[j] / u0.values[j])
    expected = (gs.soliton_frequency * t + math.pi) % (2 * math.pi) - math.pi
    assert phase == pytest.approx(expected, abs=1e-4)


def test_lattice_is_hit_exactly(gaussian_run):
    _, trace = gaussian_run
    lat = trace.lattice().times
    np.testing.assert_allclose(lat, 0.01 * np.arange(lat.size), atol=1e-12)
    assert lat[-1] == pytest.approx(0.5)


def test_virial_identity_online(gaussian_run):
    _, trace = gaussian_run
    chk = virial_consistency(trace)
    assert chk.relative < 1e-2
    assert chk.second_residual / chk.second_scale < 1e-4


def test_virial_needs_samples():
    u0 = gaussian(1.0, RadialGrid.from_spacing(0.05, 15.0))
    trace = evolve(u0, StepControls(dt0=1e-3, t_max=0.02, sample_dt=0.01))
    with pytest.raises(InsufficientSamples):
        virial_consistency(trace)


def test_small_data_disperses(small_gaussian_run):
    _, trace = small_gaussian_run
    assert trace.stop_reason is StopReason.HORIZON
    assert trace.times[-1] == pytest.approx(2.0)
    assert np.max(trace.grad_norm) <= trace.grad_norm[0] * (1 + 1e-9)


@pytest.mark.slow
def test_negative_energy_blowup(blowup_run):
    u0, trace = blowup_run
    assert trace.stop_reason is StopReason.BLOWUP
    assert trace.grad_norm[-1] / trace.grad_norm[0] >= 10
    M = trace.series("mass")
    assert np.ptp(M) / M[0] < 1e-9
    fit = blowup_rate_fit(trace.times, trace.grad_norm)
    assert fit.T_est > trace.times[-1]
    assert fit.lower_bound_ok
    assert fit.exponent <= -0.25 + 2 * fit.stderr


def _synthetic(b, T=1.0, n=300):
    t = np.sort(T - np.logspace(-7, -0.01, n))
    return t, 3.0 * (T - t) ** b


@pytest.mark.parametrize("b,ok", [(-0.5, True), (-1 / 3, True), (-0.25, True), (-0.125, False)])
def test_rate_fit_synthetic(b, ok):
    t, g = _synthetic(b)
    fit = blowup_rate_fit(t, g)
    assert fit.exponent == pytest.approx(b, abs=1e-6)
    assert fit.T_est == pytest.approx(1.0, abs=1e-8)
    assert fit.lower_bound_ok is ok


def test_rate_fit_needs_growth():
    t = np.linspace(0, 1, 50)
    with pytest.raises(FitIllConditioned):
        blowup_rate_fit(t, np.ones_like(t))


@pytest.mark.slow
def test_half_derivative_grows_along_blowup(blowup_run):
    _, trace = blowup_run
    snaps = trace.snapshots[::10] + [(trace.times[-1], trace.final)]
    fit = blowup_rate_fit(trace.times, trace.grad_norm)
    rep = half_derivative_growth(snaps, fit.T_est)
    h = rep["half_norm"]
    assert h[-1] > h[0]
    assert np.all(np.isfinite(rep["log_inv_tau"]))
