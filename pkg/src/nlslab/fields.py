"""Radial grids, complex fields and the functionals evaluated on them.

Every radial integral uses the same rule: nodes ``r_j = j*dr`` for
``j = 1..n`` plus the two Dirichlet end points ``r = 0`` and ``r = r_max``.
For ``N >= 2`` the ``r**(N-1)`` weight kills the origin contribution, so the
composite trapezoid rule reduces to ``dr * sum(f_j)``.  For odd ``N`` the
weighted integrand of a smooth radial field is even in ``r`` and the rule is
spectrally accurate; for even ``N`` it is second order.

The three-dimensional spectral path works with ``v = r*u``.  The radial
Laplacian becomes ``v''`` with Dirichlet ends, which is diagonalised by the
type-I discrete sine transform.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np
import scipy.fft
from scipy.integrate import simpson
from scipy.special import gamma as gamma_fn

from .errors import TailNotResolved, UnsupportedDimension


def sphere_area(N: int) -> float:
    """Surface measure of the unit sphere in R^N (2 for N = 1)."""
    return 2.0 * math.pi ** (N / 2) / gamma_fn(N / 2)


@dataclass(frozen=True)
class NlsParams:
    """Dimension and nonlinearity of ``i u_t + Lap u + |u|^(p-1) u = 0``."""

    N: int
    p: float
    allow_supercritical: bool = False

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"dimension must be a positive integer, got {self.N}")
        if not self.p > 1:
            raise ValueError(f"nonlinearity exponent must exceed 1, got {self.p}")

    @property
    def s_c(self) -> float:
        return self.N / 2 - 2 / (self.p - 1)

    @property
    def intercritical(self) -> bool:
        return 0 < self.s_c < 1

    def require_intercritical(self):
        sc = self.s_c
        if sc <= 0:
            raise ValueError(f"(N, p) = ({self.N}, {self.p}) is not mass supercritical (s_c = {sc})")
        if sc >= 1 and not self.allow_supercritical:
            raise ValueError(
                f"(N, p) = ({self.N}, {self.p}) has s_c = {sc} >= 1; pass allow_supercritical=True"
            )


@dataclass(frozen=True)
class RadialGrid:
    """Uniform interior nodes ``r_j = j*dr``, ``j = 1..n``, with ``dr = r_max/(n+1)``."""

    r_max: float
    n: int

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("a radial grid needs at least two interior nodes")
        if not self.r_max > 0:
            raise ValueError("r_max must be positive")

    @classmethod
    def from_spacing(cls, dr: float, r_max: float) -> "RadialGrid":
        """Grid with spacing ``dr`` whose truncation radius is the nearest multiple of ``dr``."""
        n = int(round(r_max / dr)) - 1
        return cls(r_max=(n + 1) * dr, n=n)

    @property
    def dr(self) -> float:
        return self.r_max / (self.n + 1)

    @property
    def r(self) -> np.ndarray:
        return self.dr * np.arange(1, self.n + 1)

    @property
    def wavenumbers(self) -> np.ndarray:
        """Angular wavenumbers ``k_m = pi*m/r_max`` of the sine modes, ``m = 1..n``."""
        return math.pi * np.arange(1, self.n + 1) / self.r_max


@dataclass(frozen=True)
class ComplexField:
    """Complex samples ``u(r_j)`` of a radial field; the array is read-only."""

    grid: RadialGrid
    values: np.ndarray
    params: NlsParams

    def __post_init__(self):
        vals = np.array(self.values, dtype=complex)
        if vals.shape != (self.grid.n,):
            raise ValueError(f"expected {self.grid.n} samples, got shape {vals.shape}")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_function(cls, func: Callable[[np.ndarray], np.ndarray], grid: RadialGrid,
                      params: NlsParams) -> "ComplexField":
        return cls(grid, func(grid.r), params)

    @classmethod
    def zeros(cls, grid: RadialGrid, params: NlsParams) -> "ComplexField":
        return cls(grid, np.zeros(grid.n), params)

    def with_values(self, values) -> "ComplexField":
        return ComplexField(self.grid, values, self.params)

    def __mul__(self, scalar) -> "ComplexField":
        return self.with_values(self.values * scalar)

    __rmul__ = __mul__

    @property
    def r(self) -> np.ndarray:
        return self.grid.r

    @property
    def linf(self) -> float:
        return float(np.max(np.abs(self.values)))


# -- quadrature ---------------------------------------------------------------

def radial_integral(f: np.ndarray, grid: RadialGrid, N: int, rule: str = "trapezoid",
                    origin_value: float | None = None) -> float:
    """``|S^{N-1}| * int_0^r_max f(r) r^(N-1) dr`` from node samples ``f_j``.

    ``f`` vanishes at ``r_max``.  For ``N = 1`` the origin value is taken from
    ``origin_value`` or, failing that, the even extrapolation ``(4 f_1 - f_2)/3``.
    """
    f = np.asarray(f)
    r = grid.r
    if N == 1:
        f0 = (4 * f[0] - f[1]) / 3 if origin_value is None else origin_value
    else:
        f0 = 0.0
    weighted = f * r ** (N - 1)
    if rule == "trapezoid":
        total = grid.dr * (np.sum(weighted) + 0.5 * f0)
    elif rule == "simpson":
        full = np.concatenate(([f0], weighted, [0.0]))
        total = simpson(full, dx=grid.dr)
    else:
        raise ValueError(f"unknown quadrature rule {rule!r}")
    return float(total) * sphere_area(N)


# -- spectral machinery (N = 3) -----------------------------------------------

def _require_spectral(u: ComplexField):
    if u.params.N != 3:
        raise UnsupportedDimension(f"spectral path needs N = 3, got N = {u.params.N}")


def radial_transform(u: ComplexField) -> np.ndarray:
    """Orthonormal DST-I coefficients of ``v = r*u``."""
    _require_spectral(u)
    return scipy.fft.dst(u.r * u.values, type=1, norm="ortho")


def radial_inverse(coeffs: np.ndarray, grid: RadialGrid, params: NlsParams) -> ComplexField:
    if params.N != 3:
        raise UnsupportedDimension(f"spectral path needs N = 3, got N = {params.N}")
    v = scipy.fft.idst(np.asarray(coeffs, dtype=complex), type=1, norm="ortho")
    return ComplexField(grid, v / grid.r, params)


def _v_prime(coeffs: np.ndarray, grid: RadialGrid) -> np.ndarray:
    # DCT-I over the padded index range 0..n+1 evaluates the cosine series on the nodes.
    ck = np.concatenate(([0.0], coeffs * grid.wavenumbers, [0.0]))
    vals = scipy.fft.dct(ck, type=1)
    return math.sqrt(2.0 / (grid.n + 1)) * 0.5 * vals[1:-1]


def sobolev_seminorm_sq(u: ComplexField, s: float) -> float:
    """Homogeneous ``H^s`` seminorm squared, ``int |xi|^(2s) |u_hat|^2``, for N = 3."""
    c = radial_transform(u)
    k = u.grid.wavenumbers
    return float(4 * math.pi * u.grid.dr * np.sum(k ** (2 * s) * np.abs(c) ** 2))


# -- derivatives --------------------------------------------------------------

def radial_derivative(u: ComplexField) -> np.ndarray:
    """``du/dr`` on the nodes by centred differences, one-sided at ``r_1``, ``u(r_max) = 0``."""
    padded = np.concatenate((u.values, [0.0]))
    return np.gradient(padded, u.grid.dr, edge_order=2)[:-1]


# -- functionals --------------------------------------------------------------

def mass(u: ComplexField, rule: str = "trapezoid") -> float:
    return radial_integral(np.abs(u.values) ** 2, u.grid, u.params.N, rule)


def grad_sq(u: ComplexField, method: str | None = None, rule: str = "trapezoid") -> float:
    """``||grad u||_2^2``.

    ``method='spectral'`` (default for N = 3) uses ``int |u_r|^2 r^2 dr = int |v'|^2 dr``
    evaluated exactly on the sine modes; ``'fd'`` differentiates on the grid.
    """
    if method is None:
        method = "spectral" if u.params.N == 3 else "fd"
    if method == "spectral":
        c = radial_transform(u)
        return float(4 * math.pi * u.grid.dr * np.sum(u.grid.wavenumbers ** 2 * np.abs(c) ** 2))
    if method == "fd":
        du = radial_derivative(u)
        return radial_integral(np.abs(du) ** 2, u.grid, u.params.N, rule, origin_value=0.0)
    raise ValueError(f"unknown gradient method {method!r}")


def lp_norm(u: ComplexField, q: float, rule: str = "trapezoid") -> float:
    return radial_integral(np.abs(u.values) ** q, u.grid, u.params.N, rule) ** (1.0 / q)


def potential_term(u: ComplexField, rule: str = "trapezoid") -> float:
    """``||u||_{p+1}^{p+1}``."""
    return radial_integral(np.abs(u.values) ** (u.params.p + 1), u.grid, u.params.N, rule)


def energy(u: ComplexField, method: str | None = None, rule: str = "trapezoid") -> float:
    p = u.params.p
    return 0.5 * grad_sq(u, method, rule) - potential_term(u, rule) / (p + 1)


def tail_ratio(u: ComplexField, weight_power: float, fraction: float = 0.9) -> float:
    """Share of ``int r^weight_power |u|^2 dr`` coming from ``r > fraction*r_max``."""
    dens = np.abs(u.values) ** 2 * u.r ** weight_power
    total = np.sum(dens)
    if total == 0:
        return 0.0
    return float(np.sum(dens[u.r > fraction * u.grid.r_max]) / total)


def virial_moment(u: ComplexField, warn: bool = True, rule: str = "trapezoid") -> float:
    """``V[u] = int |x|^2 |u|^2 dx``; warns with :class:`TailNotResolved` if the outer tenth of
    the domain carries more than 1e-6 of it."""
    N = u.params.N
    if warn:
        ratio = tail_ratio(u, N + 1)
        if ratio > 1e-6:
            warnings.warn(f"outer decade holds {ratio:.2e} of the virial moment", TailNotResolved,
                          stacklevel=2)
    return radial_integral(np.abs(u.values) ** 2 * u.r ** 2, u.grid, N, rule)


def virial_rate(u: ComplexField, method: str | None = None, rule: str = "trapezoid") -> float:
    """``dV/dt = 4 Im int r ubar u_r dx`` (``4*pi*4 Im int r^3 ubar u_r dr`` for N = 3)."""
    N = u.params.N
    if method is None:
        method = "spectral" if N == 3 else "fd"
    if method == "spectral":
        c = radial_transform(u)
        v = u.r * u.values
        vp = _v_prime(c, u.grid)
        integrand = (u.r * np.conj(v) * vp).imag
        return float(4 * math.pi * 4 * u.grid.dr * np.sum(integrand))
    du = radial_derivative(u)
    integrand = (np.conj(u.values) * du).imag * u.r
    return 4 * radial_integral(integrand, u.grid, N, rule, origin_value=0.0)


@dataclass
class FunctionalSet:
    mass: float
    energy: float
    grad_sq: float
    lp_norms: dict = field(default_factory=dict)
    virial: float = 0.0
    virial_rate: float = 0.0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lp_norms"] = {str(k): v for k, v in self.lp_norms.items()}
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def functionals(u: ComplexField, extra_exponents=(), method: str | None = None,
                rule: str = "trapezoid") -> FunctionalSet:
    """All monitored functionals of one field, sharing one quadrature rule."""
    p = u.params.p
    g = grad_sq(u, method, rule)
    norms = {p + 1: lp_norm(u, p + 1, rule)}
    for q in extra_exponents:
        norms[q] = lp_norm(u, q, rule)
    e = 0.5 * g - norms[p + 1] ** (p + 1) / (p + 1)
    return FunctionalSet(
        mass=mass(u, rule),
        energy=e,
        grad_sq=g,
        lp_norms=norms,
        virial=virial_moment(u, warn=False, rule=rule),
        virial_rate=virial_rate(u, method, rule),
    )
