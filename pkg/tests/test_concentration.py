import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad
from scipy.special import gammainc

from nlslab.concentration import (CHI_INNER, CHI_OUTER, Cutoffs, ball_integral, check_bounds,
                                  concentration_report, decompose, scenario_flags, smallness_constant,
                                  snapshot_report, strauss_exterior, thread_cap, windows)
from nlslab.errors import UnsupportedDimension, ZeroField
from nlslab.fields import ComplexField, NlsParams, RadialGrid, grad_sq, lp_norm, mass, radial_inverse
from nlslab.sphere import derive_params, fit_exponent, profile_field

from conftest import CUBIC, gaussian

GRID = RadialGrid.from_spacing(0.01, 20.0)


def test_window_formula():
    # ||u0||_2 = 1, ||grad u||_2 = 4, c1 = c2 = 1 -> R = 1/2, rho = 16
    A = math.sqrt(16 / (1.5 * math.pi ** 1.5))
    u = gaussian(A, GRID)
    R, rho = windows(u, 1.0, Cutoffs(1.0, 1.0))
    assert R == pytest.approx(0.5, rel=1e-10)
    assert rho == pytest.approx(16.0, rel=1e-10)


def test_window_homogeneity():
    u = gaussian(1.0, GRID)
    R1, rho1 = windows(u, 2.0, Cutoffs(3.0, 0.5))
    R2, rho2 = windows(u * 2.0, 2.0, Cutoffs(3.0, 0.5))
    assert R2 == pytest.approx(R1 / math.sqrt(2), rel=1e-12)
    assert rho2 == pytest.approx(4 * rho1, rel=1e-12)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.5, 2.0))
def test_window_covariance_under_nls_scaling(lam):
    """``u_lam(x) = lam u(lam x)`` maps ``R -> R/lam`` and ``rho -> lam rho`` (cubic, 3-D)."""
    grid = RadialGrid.from_spacing(0.005, 30.0)
    u = gaussian(1.0, grid)
    v = ComplexField.from_function(lambda r: lam * np.exp(-(lam * r) ** 2 / 2), grid, CUBIC)
    cut = Cutoffs(2.0, 3.0)
    R, rho = windows(u, mass(u), cut)
    Rl, rhol = windows(v, mass(v), cut)
    assert Rl == pytest.approx(R / lam, rel=1e-9)
    assert rhol == pytest.approx(lam * rho, rel=1e-9)


def test_zero_field():
    z = ComplexField.zeros(GRID, CUBIC)
    with pytest.raises(ZeroField):
        windows(z, 1.0, Cutoffs())
    checks = check_bounds(z, (z, z, z), 0.0, Cutoffs())
    assert all(v == (0.0, 0.0, True) for v in checks.values())


def test_cutoff_shapes():
    r = np.linspace(0, 3, 3001)
    phi = Cutoffs.phi(r)
    assert np.all((0 <= phi) & (phi <= 1))
    assert np.all(phi[r <= 1] == 1) and np.all(phi[r >= 2] == 0)
    rc = np.linspace(0, 0.3, 3001)
    chi = Cutoffs.chi(rc)
    assert np.all(chi[rc <= CHI_INNER] == 1) and np.all(chi[rc >= CHI_OUTER] == 0)
    assert np.all(np.diff(chi) <= 0)
    assert Cutoffs.multiplier(0.0)[0] == 1.0


def test_multiplier_small_frequency_bound():
    xi = GRID.wavenumbers / (2 * math.pi)
    assert smallness_constant(xi) <= 2
    assert smallness_constant(np.linspace(1e-4, 100, 20000)) <= 2


def test_chi_hat_matches_direct_quadrature():
    for xi in (0.3, 2.0, 7.5):
        direct = quad(lambda r: Cutoffs.chi(r) * r * math.sin(2 * math.pi * xi * r), 0, CHI_OUTER,
                      limit=200, epsabs=1e-14)[0] * 2 / xi
        assert Cutoffs.chi_hat(xi)[0] == pytest.approx(direct, rel=1e-10, abs=1e-14)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.3, 3.0), st.floats(0.0, 5.0), st.floats(0.2, 4.0), st.floats(0.1, 50.0))
def test_partition_identity(A, c, R, rho):
    u = ComplexField.from_function(lambda r: A * np.exp(-(r - c) ** 2) * np.exp(1j * r), GRID, CUBIC)
    u1L, u1H, u2 = decompose(u, R, rho, Cutoffs())
    assert np.max(np.abs(u.values - (u1L.values + u1H.values + u2.values))) < 1e-10


def test_supported_field_has_no_exterior_part():
    u = ComplexField.from_function(lambda r: np.where(r < 0.9, np.cos(r) * (0.9 - r) ** 4, 0.0), GRID, CUBIC)
    _, _, u2 = decompose(u, 1.0, 10.0, Cutoffs())
    assert np.all(u2.values == 0)


def test_band_limited_field_has_no_high_part():
    grid = RadialGrid.from_spacing(0.01, 40.0)
    rho = 50.0
    xi = grid.wavenumbers / (2 * math.pi)
    band = 5e-4 * rho
    u1 = radial_inverse(np.where(xi <= band, np.exp(-3 * (xi / band) ** 2), 0.0), grid, CUBIC)
    _, u1H, _ = decompose(u1, 1e9, rho, Cutoffs())
    assert np.max(np.abs(u1H.values)) / np.max(np.abs(u1.values)) < 1e-8


def test_decompose_needs_3d():
    with pytest.raises(UnsupportedDimension):
        decompose(gaussian(1.0, GRID, NlsParams(2, 4.0)), 1.0, 1.0, Cutoffs())


def _random_bump(rng, grid):
    a, b, w = rng.uniform(0.2, 3.0), rng.uniform(0.0, 5.0), rng.uniform(0.3, 2.0)
    k = rng.uniform(0, 3)
    return ComplexField.from_function(lambda r: a * np.exp(-(r - b) ** 2 / w ** 2 + 1j * k * r), grid, CUBIC)


def test_strauss_exterior_on_random_bumps():
    rng = np.random.default_rng(20240)
    for _ in range(50):
        v = _random_bump(rng, GRID)
        R = rng.uniform(0.1, 6.0)
        lhs, rhs = strauss_exterior(v, R, 4.0)
        assert lhs <= rhs


def test_ball_integral_gaussian():
    u = gaussian(1.0, GRID)
    # int_{|x|<a} exp(-3 r^2/2) dx = (2 pi / 3)^(3/2) P(3/2, 3 a^2 / 2)
    for a in (0.5, 1.0, 2.5):
        exact = (2 * math.pi / 3) ** 1.5 * gammainc(1.5, 1.5 * a * a)
        assert ball_integral(u, a) == pytest.approx(exact, rel=1e-7)
    assert ball_integral(u, 100.0) == pytest.approx(lp_norm(u, 3) ** 3, rel=1e-10)


def test_bounds_on_blowup_snapshot(blowup_run):
    u0, trace = blowup_run
    rep = snapshot_report(trace.times[-1], trace.final, mass(u0), Cutoffs(1.0, 1.0))
    assert rep.partition_error < 1e-10
    assert all(ok for _, _, ok in rep.bound_checks.values())
    lhs, rhs, ok = rep.bound_checks["u1L_lower"]
    assert ok and lhs == pytest.approx(grad_sq(trace.final))


def test_blowup_run_concentrates_at_origin(blowup_run):
    u0, trace = blowup_run
    snaps = trace.snapshots[len(trace.snapshots) // 2::4] + [(trace.times[-1], trace.final)]
    flags = scenario_flags(concentration_report(snaps, Cutoffs(1.0, 1.0), mass(u0)))
    assert flags.tight_bounded_below
    assert flags.scenario == "tight"


SPHERE_TAUS = (1e-3, 1e-4, 1e-5, 1e-6)


def test_sphere_ladder_wide_without_tight():
    sp = derive_params(1.0)
    snaps = [(sp.T - tau, profile_field(sp, sp.T - tau)) for tau in SPHERE_TAUS]
    reps = concentration_report(snaps, Cutoffs(1.0, 1.0), sp.mass)
    wide = [r.l3_wide_window for r in reps]
    tight = [r.l3_tight_window for r in reps]
    assert all(np.diff(wide) > 0)
    assert all(np.diff(tight) < 0) and tight[-1] < 1e-8 * wide[-1]
    flags = scenario_flags(reps)
    assert flags.wide_growing and not flags.tight_bounded_below
    assert flags.scenario == "wide"
    assert all(r.partition_error < 1e-10 for r in reps)


def test_origin_mock_keeps_tight_window():
    reps = []
    for tau in (1e-2, 1e-3, 1e-4, 1e-5):
        lam = math.sqrt(tau)
        grid = RadialGrid.from_spacing(lam / 40, 40 * lam)
        u = ComplexField.from_function(lambda r: 1 / (lam * np.cosh(r / lam)), grid, CUBIC)
        reps.append(snapshot_report(1 - tau, u, mass(u), Cutoffs()))
    tight = [r.l3_tight_window for r in reps]
    assert min(tight) > 0.5 * max(tight)
    assert scenario_flags(reps).scenario == "tight"


def test_sphere_l3_rate():
    sp = derive_params(1.0)
    taus = np.array([1e-9, 1e-10, 1e-11, 1e-12])
    vals = [lp_norm(profile_field(sp, sp.T - tau), 3) for tau in taus]
    slope, _ = fit_exponent(taus, vals)
    assert slope == pytest.approx(-2 / 9, abs=0.02)


def test_report_series_keeps_order(monkeypatch):
    monkeypatch.setenv("NLS_LAB_THREADS", "3")
    assert thread_cap() == 3
    snaps = [(0.1 * k, gaussian(1.0 + 0.1 * k, GRID)) for k in range(6)]
    reps = concentration_report(snaps, Cutoffs())
    assert [r.t for r in reps] == [s[0] for s in snaps]
    assert reps[3].grad_sq == pytest.approx(grad_sq(snaps[3][1]))
    assert set(reps[0].row()) >= {"R", "rho", "l3_tight_window", "l3_wide_window", "u1L_lower_ok"}
