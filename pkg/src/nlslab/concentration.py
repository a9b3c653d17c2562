"""Space-frequency decomposition and L^3 concentration windows for radial 3-D fields.

A field is split as ``u = u1L + u1H + u2``: ``u1 = phi(x/R) u`` keeps the
ball of radius ``R = c1 ||u0||^(3/2) ||grad u||^(-1/2)`` and ``u1L`` keeps the
frequencies of ``u1`` below ``rho = c2 ||grad u||^2`` through the multiplier
``chi_hat(xi/rho)``.  Fourier transforms use the ``exp(-2 pi i x.xi)``
convention; the sine mode ``k_m`` of the radial grid sits at ``|xi| = k_m/(2 pi)``.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.interpolate import CubicSpline
from scipy.stats import linregress

from .errors import UnsupportedDimension, ZeroField
from .fields import (ComplexField, grad_sq, lp_norm, mass, radial_derivative, radial_integral,
                     radial_inverse, radial_transform)

CHI_INNER = 1 / (8 * math.pi)
CHI_OUTER = 1 / (2 * math.pi)


def smooth_step(x):
    """C-infinity step: 0 for ``x <= 0``, 1 for ``x >= 1``."""
    x = np.asarray(x, dtype=float)

    def psi(z):
        zs = np.where(z > 0, z, 1.0)
        return np.where(z > 0, np.exp(-1.0 / zs), 0.0)

    a, b = psi(x), psi(1.0 - x)
    return a / (a + b)


def smooth_bump(r, inner: float, outer: float):
    """1 for ``r <= inner``, 0 for ``r >= outer``, smooth and monotone between."""
    return 1.0 - smooth_step((np.asarray(r, dtype=float) - inner) / (outer - inner))


_GL_X, _GL_W = np.polynomial.legendre.leggauss(400)


@dataclass(frozen=True)
class Cutoffs:
    """Spatial cutoff ``phi``, frequency mollifier ``chi`` and window constants.

    ``c1`` scales ``R`` and the tight window; ``c2`` scales ``rho`` and the wide
    window.  ``c`` is the constant used in the reported inequalities.
    """

    c1: float = 1.0
    c2: float = 1.0
    c: float = 4.0

    def __post_init__(self):
        for name in ("c1", "c2", "c"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @staticmethod
    def phi(r):
        return smooth_bump(r, 1.0, 2.0)

    @staticmethod
    def chi(r):
        return smooth_bump(r, CHI_INNER, CHI_OUTER)

    @staticmethod
    def chi_hat(xi):
        """Radial 3-D transform ``(2/|xi|) int chi(r) r sin(2 pi |xi| r) dr``."""
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        r = 0.5 * CHI_OUTER * (_GL_X + 1)
        w = 0.5 * CHI_OUTER * _GL_W
        base = Cutoffs.chi(r) * r
        out = np.empty_like(xi)
        small = np.abs(xi) < 1e-12
        out[small] = 4 * math.pi * np.sum(w * base * r)
        k = np.abs(xi[~small])[:, None]
        out[~small] = (2 / k[:, 0]) * np.sum(w * base * np.sin(2 * math.pi * k * r), axis=1)
        return out

    @staticmethod
    def multiplier(xi):
        """``chi_hat(xi) / chi_hat(0)``; equal to 1 at zero frequency."""
        return Cutoffs.chi_hat(xi) / Cutoffs.chi_hat(0.0)[0]


def smallness_constant(xi) -> float:
    """Smallest ``c`` with ``|1 - m(xi)| <= c min(|xi|, 1)`` on the given frequencies."""
    xi = np.abs(np.asarray(xi, dtype=float))
    xi = xi[xi > 0]
    return float(np.max(np.abs(1 - Cutoffs.multiplier(xi)) / np.minimum(xi, 1.0)))


def _require_3d(u: ComplexField):
    if u.params.N != 3:
        raise UnsupportedDimension(f"concentration diagnostics need N = 3, got N = {u.params.N}")


def windows(u: ComplexField, u0_mass: float, cutoffs: Cutoffs) -> tuple[float, float]:
    """``(R, rho)`` with ``R = c1 M^(3/4) G^(-1/4)`` and ``rho = c2 G``."""
    G = grad_sq(u)
    if not G > 0:
        raise ZeroField("window radii need a nonzero gradient")
    return cutoffs.c1 * u0_mass ** 0.75 * G ** -0.25, cutoffs.c2 * G


def decompose(u: ComplexField, R: float, rho: float, cutoffs: Cutoffs):
    """``(u1L, u1H, u2)`` with ``u = u1L + u1H + u2``."""
    _require_3d(u)
    phi = cutoffs.phi(u.r / R)
    u1 = u.with_values(phi * u.values)
    u2 = u.with_values(u.values - u1.values)
    xi = u.grid.wavenumbers / (2 * math.pi)
    coeffs = radial_transform(u1) * cutoffs.multiplier(xi / rho)
    u1L = radial_inverse(coeffs, u.grid, u.params)
    u1H = u.with_values(u1.values - u1L.values)
    return u1L, u1H, u2


def _exterior(u: ComplexField, R: float, power: float, values=None) -> float:
    vals = u.values if values is None else values
    dens = np.where(u.r > R, np.abs(vals) ** power, 0.0)
    return radial_integral(dens, u.grid, 3)


def strauss_exterior(v: ComplexField, R: float, c: float = 4.0) -> tuple[float, float]:
    """Both sides of ``||v||_{L^4(|x|>R)}^4 <= (c/R^2) ||v||_{L^2(|x|>R)}^3 ||grad v||_{L^2(|x|>R)}``."""
    _require_3d(v)
    dv = radial_derivative(v)
    lhs = _exterior(v, R, 4)
    rhs = c / R ** 2 * _exterior(v, R, 2) ** 1.5 * math.sqrt(_exterior(v, R, 2, dv))
    return lhs, rhs


def check_bounds(u: ComplexField, parts, u0_mass: float, cutoffs: Cutoffs,
                 R: float | None = None, rho: float | None = None) -> dict:
    """Evaluate both sides of the decomposition estimates; report without raising.

    ``u2_quarter`` and ``u1H_quarter`` compare the pieces with ``G/4``;
    ``u1L_lower`` is ``G <= c ||u1L||_4^4``.  ``u2_strauss``, ``u1H_sobolev``
    and ``energy`` are the intermediate steps with constant ``c``.
    """
    G = grad_sq(u)
    if G == 0:
        zero = (0.0, 0.0, True)
        return {k: zero for k in ("u2_quarter", "u1H_quarter", "u1L_lower",
                                  "u2_strauss", "u1H_sobolev", "energy")}
    if R is None or rho is None:
        R, rho = windows(u, u0_mass, cutoffs)
    u1L, u1H, u2 = parts
    c = cutoffs.c
    q2 = lp_norm(u2, 4) ** 4
    qH = lp_norm(u1H, 4) ** 4
    qL = lp_norm(u1L, 4) ** 4
    out = {
        "u2_quarter": (q2, 0.25 * G),
        "u1H_quarter": (qH, 0.25 * G),
        "u1L_lower": (G, c * qL),
        "u2_strauss": (q2, c / R ** 2 * u0_mass ** 1.5 * math.sqrt(G)),
        "u1H_sobolev": (qH, c / rho * G ** 2),
        "energy": (G, lp_norm(u, 4) ** 4),
    }
    return {k: (float(a), float(b), bool(a <= b)) for k, (a, b) in out.items()}


def ball_integral(u: ComplexField, radius: float, power: float = 3.0) -> float:
    """``int_{|x| <= radius} |u|^power dx`` by cumulative Simpson and cubic interpolation."""
    r = np.concatenate(([0.0], u.r, [u.grid.r_max]))
    f = np.concatenate(([0.0], np.abs(u.values) ** power * u.r ** 2, [0.0]))
    cum = 4 * math.pi * cumulative_simpson(f, x=r, initial=0.0)
    if radius >= r[-1]:
        return float(cum[-1])
    # the spline can dip below zero by roundoff inside the first cells
    return max(float(CubicSpline(r, cum)(max(radius, 0.0))), 0.0)


@dataclass
class ConcentrationReport:
    t: float
    grad_sq: float
    R: float
    rho: float
    l3_u1L: float
    l3_u1: float
    l3_tight_window: float
    l3_wide_window: float
    tight_radius: float
    wide_radius: float
    partition_error: float
    bound_checks: dict = field(default_factory=dict)

    def row(self) -> dict:
        d = {k: getattr(self, k) for k in (
            "t", "grad_sq", "R", "rho", "l3_u1L", "l3_u1", "l3_tight_window", "l3_wide_window",
            "tight_radius", "wide_radius", "partition_error")}
        for name, (lhs, rhs, ok) in self.bound_checks.items():
            d[f"{name}_lhs"] = lhs
            d[f"{name}_rhs"] = rhs
            d[f"{name}_ok"] = int(ok)
        return d


def snapshot_report(t: float, u: ComplexField, u0_mass: float, cutoffs: Cutoffs) -> ConcentrationReport:
    """Windows, decomposition, bound checks and window integrals of one snapshot.

    ``l3_tight_window`` integrates ``|u|^3`` over ``|x| <= c1^2 / G`` and
    ``l3_wide_window`` over ``|x| <= c2 M^(3/4) G^(-1/4)``.
    """
    _require_3d(u)
    G = grad_sq(u)
    R, rho = windows(u, u0_mass, cutoffs)
    parts = decompose(u, R, rho, cutoffs)
    u1L, u1H, u2 = parts
    err = float(np.max(np.abs(u.values - (u1L.values + u1H.values + u2.values))))
    u1 = u.with_values(u1L.values + u1H.values)
    tight = cutoffs.c1 ** 2 / G
    wide = cutoffs.c2 * u0_mass ** 0.75 * G ** -0.25
    return ConcentrationReport(
        t=float(t), grad_sq=G, R=R, rho=rho,
        l3_u1L=lp_norm(u1L, 3), l3_u1=lp_norm(u1, 3),
        l3_tight_window=ball_integral(u, tight), l3_wide_window=ball_integral(u, wide),
        tight_radius=tight, wide_radius=wide, partition_error=err,
        bound_checks=check_bounds(u, parts, u0_mass, cutoffs, R, rho),
    )


def thread_cap() -> int:
    env = os.environ.get("NLS_LAB_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def concentration_report(snapshots, cutoffs: Cutoffs, u0_mass: float | None = None) -> list:
    """Per-snapshot reports for ``(t, field)`` pairs, computed in parallel and kept in order."""
    snapshots = list(snapshots)
    if not snapshots:
        return []
    if u0_mass is None:
        u0_mass = mass(snapshots[0][1])
    with ThreadPoolExecutor(max_workers=min(thread_cap(), len(snapshots))) as pool:
        return list(pool.map(lambda s: snapshot_report(s[0], s[1], u0_mass, cutoffs), snapshots))


@dataclass
class ScenarioFlags:
    wide_slope: float
    tight_slope: float
    wide_growing: bool
    tight_bounded_below: bool

    @property
    def scenario(self) -> str:
        """``"tight"`` when the tight window keeps its share, ``"wide"`` when only the wide one grows."""
        if self.tight_bounded_below:
            return "tight"
        if self.wide_growing:
            return "wide"
        return "undetermined"


def scenario_flags(reports, slope_tol: float = 0.1) -> ScenarioFlags:
    """Log-log slopes of the window integrals against ``||grad u||^2`` along a focusing series.

    The tight window counts as bounded below when its slope is above
    ``-slope_tol``; the wide window grows when its slope exceeds ``slope_tol``.
    """
    if len(reports) < 3:
        raise ValueError("need at least three snapshots to read a trend")
    G = np.log([r.grad_sq for r in reports])
    tiny = np.finfo(float).tiny
    wide = np.log([max(r.l3_wide_window, tiny) for r in reports])
    tight = np.log([max(r.l3_tight_window, tiny) for r in reports])
    ws = float(linregress(G, wide).slope)
    ts = float(linregress(G, tight).slope)
    return ScenarioFlags(ws, ts, ws > slope_tol, ts > -slope_tol)
