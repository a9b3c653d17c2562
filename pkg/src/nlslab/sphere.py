"""The contracting-sphere blow-up profile of the 3-D cubic equation and its audits.

With ``tau = T - t`` the profile is

    u(r, t) = exp(i theta) exp(i nu s) exp(i kappa y / 2) P(y) / lambda,
    y = (r - r0) / lambda,  r0 = alpha tau^(1/3),  lambda = beta tau^(2/3),
    s = s_coeff tau^(-1/3),  P(y) = sqrt(2 sigma) sech(sqrt(sigma) y).

All constants follow from the mass ``M``.  In the rescaled frame
``w(y, s) = lambda u(lambda y + r0, t)`` the profile is exactly
``exp(i theta) exp(i nu s) exp(i kappa y/2) P(y)``; one-dimensional
functionals of ``w`` are integrated over ``|y| <= y_cut`` and ignore the
boundary at ``y_L = -r0/lambda`` (its size is reported separately), while
three-dimensional functionals of ``u`` integrate over ``r > 0``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np
from scipy.integrate import trapezoid
from scipy.stats import linregress

from .errors import AuditFailure, CancellationFailure, FitIllConditioned, NotSupercritical
from .fields import ComplexField, NlsParams, RadialGrid, sobolev_seminorm_sq

SIGMA = (3 / (32 * math.pi)) ** (2 / 3)
DEFAULT_LADDER = tuple(10.0 ** -k for k in range(2, 7))
# the 3-D norms follow their power laws only once lambda/r0 = (beta/alpha) tau^(1/3) is small
RATE_LADDER = tuple(10.0 ** -k for k in range(9, 13))


@dataclass(frozen=True)
class SphereParams:
    mass: float
    T: float
    theta: float
    alpha: float
    beta: float
    kappa: float
    sigma: float
    nu: float
    s_coeff: float

    @property
    def kappa_from_sigma(self) -> float:
        """``|kappa|`` recomputed from ``sigma = (3/4) kappa^2``."""
        return 2 * math.sqrt(self.sigma / 3)

    @property
    def y_cut(self) -> float:
        return 40 / math.sqrt(self.sigma)

    def to_dict(self) -> dict:
        return asdict(self)


def derive_params(mass: float, T: float = 1.0, theta: float = 0.0) -> SphereParams:
    """All profile constants for mass ``M``; ``kappa < 0`` so the radius shrinks."""
    if not mass > 0:
        raise ValueError(f"mass must be positive, got {mass}")
    if not T > 0:
        raise ValueError(f"blow-up time must be positive, got {T}")
    alpha = 3 ** (1 / 6) * mass ** (1 / 3) / (2 * math.pi ** (1 / 3))
    beta = (18 / mass) ** (1 / 3)
    kappa = -alpha * beta / 3
    return SphereParams(
        mass=mass, T=T, theta=theta, alpha=alpha, beta=beta, kappa=kappa,
        sigma=SIGMA, nu=kappa ** 2, s_coeff=3 * mass ** (2 / 3) / 18 ** (2 / 3),
    )


# -- frame --------------------------------------------------------------------

def _tau(t, sp: SphereParams):
    tau = sp.T - np.asarray(t, dtype=float)
    if np.any(tau <= 0):
        raise ValueError("profile is defined only for t < T")
    return tau


def r0_of(t, sp: SphereParams):
    return sp.alpha * _tau(t, sp) ** (1 / 3)


def lambda_of(t, sp: SphereParams):
    return sp.beta * _tau(t, sp) ** (2 / 3)


def s_of(t, sp: SphereParams):
    return sp.s_coeff * _tau(t, sp) ** (-1 / 3)


def lambda_s_over_lambda(t, sp: SphereParams):
    """``lambda_s / lambda = lambda_t lambda = -(2/3) beta^2 tau^(1/3)``."""
    return -(2 / 3) * sp.beta ** 2 * _tau(t, sp) ** (1 / 3)


def r0_s_over_lambda(t, sp: SphereParams):
    """``(r0)_s / lambda = (r0)_t lambda``; equals ``kappa`` for every ``t``."""
    tau = _tau(t, sp)
    return -(sp.alpha / 3) * tau ** (-2 / 3) * sp.beta * tau ** (2 / 3)


# -- profile ------------------------------------------------------------------

def soliton_P(y, sigma: float = SIGMA):
    return math.sqrt(2 * sigma) / np.cosh(math.sqrt(sigma) * np.asarray(y, dtype=float))


def soliton_P_prime(y, sigma: float = SIGMA):
    k = math.sqrt(sigma)
    y = np.asarray(y, dtype=float)
    return -k * np.tanh(k * y) * soliton_P(y, sigma)


def w_profile(y, s, sp: SphereParams):
    """Rescaled-frame profile ``w(y, s)``."""
    y = np.asarray(y, dtype=float)
    return np.exp(1j * (sp.theta + sp.nu * s + 0.5 * sp.kappa * y)) * soliton_P(y, sp.sigma)


def w_profile_dy(y, s, sp: SphereParams):
    y = np.asarray(y, dtype=float)
    phase = np.exp(1j * (sp.theta + sp.nu * s + 0.5 * sp.kappa * y))
    return phase * (0.5j * sp.kappa * soliton_P(y, sp.sigma) + soliton_P_prime(y, sp.sigma))


def w_profile_dyy(y, s, sp: SphereParams):
    y = np.asarray(y, dtype=float)
    P = soliton_P(y, sp.sigma)
    Pp = soliton_P_prime(y, sp.sigma)
    Ppp = sp.sigma * P - P ** 3
    phase = np.exp(1j * (sp.theta + sp.nu * s + 0.5 * sp.kappa * y))
    return phase * (-0.25 * sp.kappa ** 2 * P + 1j * sp.kappa * Pp + Ppp)


def profile(r, t, sp: SphereParams):
    """The three-dimensional profile ``u(r, t)``."""
    lam = lambda_of(t, sp)
    y = (np.asarray(r, dtype=float) - r0_of(t, sp)) / lam
    return w_profile(y, s_of(t, sp), sp) / lam


def profile_dr(r, t, sp: SphereParams):
    lam = lambda_of(t, sp)
    y = (np.asarray(r, dtype=float) - r0_of(t, sp)) / lam
    return w_profile_dy(y, s_of(t, sp), sp) / lam ** 2


def profile_field(sp: SphereParams, t: float, grid: RadialGrid | None = None,
                  points_per_width: int = 20) -> ComplexField:
    """Sample the profile on ``grid``, or on a grid sized to resolve it at time ``t``."""
    if grid is None:
        lam, r0 = float(lambda_of(t, sp)), float(r0_of(t, sp))
        grid = RadialGrid.from_spacing(lam / points_per_width, r0 + sp.y_cut * lam)
    return ComplexField(grid, profile(grid.r, t, sp), NlsParams(3, 3.0))


# -- quadrature ---------------------------------------------------------------

def _y_nodes(sp: SphereParams, lo: float | None = None, n: int = 40001):
    lo = -sp.y_cut if lo is None else max(lo, -sp.y_cut)
    return np.linspace(lo, sp.y_cut, n)


def w_functionals(sp: SphereParams, s: float = 0.0, n: int = 40001) -> dict:
    """Mass, momentum, energies and ``int |w_y|^2`` of ``w`` by 1-D quadrature."""
    y = _y_nodes(sp, n=n)
    w = w_profile(y, s, sp)
    wy = w_profile_dy(y, s, sp)
    P = soliton_P(y, sp.sigma)
    Pp = soliton_P_prime(y, sp.sigma)
    M = trapezoid(np.abs(w) ** 2, y)
    mom = trapezoid((w * np.conj(wy)).imag, y)
    dy_sq = trapezoid(np.abs(wy) ** 2, y)
    E_w = 0.5 * dy_sq - 0.25 * trapezoid(np.abs(w) ** 4, y)
    E_P = 0.5 * trapezoid(Pp ** 2, y) - 0.25 * trapezoid(P ** 4, y)
    return {"M_w": float(M), "P_w": float(mom), "dy_sq": float(dy_sq), "E_w": float(E_w),
            "M_P": float(trapezoid(P ** 2, y)), "E_P": float(E_P)}


def sphere_functionals(sp: SphereParams, t: float, n: int = 40001) -> dict:
    """Three-dimensional mass, gradient, ``L^3`` norm and virial of ``u(., t)`` over ``r > 0``."""
    lam, r0 = float(lambda_of(t, sp)), float(r0_of(t, sp))
    y = _y_nodes(sp, lo=-r0 / lam, n=n)
    r = r0 + lam * y
    u = profile(r, t, sp)
    ur = profile_dr(r, t, sp)
    w4 = 4 * math.pi
    mass = w4 * trapezoid(np.abs(u) ** 2 * r ** 2, r)
    grad = w4 * trapezoid(np.abs(ur) ** 2 * r ** 2, r)
    l3 = (w4 * trapezoid(np.abs(u) ** 3 * r ** 2, r)) ** (1 / 3)
    virial = w4 * trapezoid(np.abs(u) ** 2 * r ** 4, r)
    return {"mass": float(mass), "grad_sq": float(grad), "l3": float(l3), "virial": float(virial),
            "r0": r0, "lambda": lam}


def half_derivative_norm(sp: SphereParams, t: float, points_per_width: int = 20) -> float:
    """``||u||_{H^{1/2}-dot}`` through the sine-mode representation."""
    return math.sqrt(sobolev_seminorm_sq(profile_field(sp, t, points_per_width=points_per_width), 0.5))


def boundary_weight(sp: SphereParams, t: float) -> float:
    """``int_{y < y_L} |w|^2 dy``: the part of the 1-D profile lying beyond ``r = 0``."""
    yl = float(-r0_of(t, sp) / lambda_of(t, sp))
    k = math.sqrt(sp.sigma)
    # int_{-inf}^{yl} 2 sigma sech^2(k y) dy = 2 k (1 + tanh(k yl))
    return 2 * k * (1 + math.tanh(k * yl))


# -- audits -------------------------------------------------------------------

@dataclass
class Check:
    name: str
    value: float
    expected: float
    tol: float
    relative: bool = True

    @property
    def residual(self) -> float:
        diff = abs(self.value - self.expected)
        if self.relative and self.expected != 0:
            return diff / abs(self.expected)
        return diff

    @property
    def ok(self) -> bool:
        return self.residual <= self.tol

    def to_dict(self) -> dict:
        d = asdict(self)
        d.update(residual=self.residual, ok=self.ok)
        return d


@dataclass
class AuditReport:
    params: SphereParams
    checks: list = field(default_factory=list)
    per_time: list = field(default_factory=list)
    rates: dict = field(default_factory=dict)
    # reported only: no pass/fail bar
    drift: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    def failures(self):
        return [(c.name, c.residual) for c in self.checks if not c.ok]

    def to_dict(self) -> dict:
        return {"params": self.params.to_dict(), "ok": self.ok,
                "checks": [c.to_dict() for c in self.checks],
                "per_time": self.per_time, "rates": self.rates, "drift": self.drift}


def closed_form_checks(sp: SphereParams) -> list:
    """Cross-checks among the closed-form constants (no quadrature)."""
    M = sp.mass
    s32 = sp.sigma ** 1.5
    kap = abs(sp.kappa)
    return [
        Check("kappa_ab_vs_sigma", sp.alpha * sp.beta / 3, sp.kappa_from_sigma, 1e-12),
        Check("nu_is_four_thirds_sigma", sp.nu, 4 / 3 * sp.sigma, 1e-12),
        Check("E_P_closed_form", -2 / 3 * s32, -1 / (16 * math.pi), 1e-12),
        Check("M_w_closed_form", 18 ** (1 / 3) * M ** (2 / 3) / (4 * math.pi * sp.alpha ** 2),
              4 * math.sqrt(sp.sigma), 1e-10),
        Check("P_w_closed_form", (12 * M) ** (1 / 3) / (8 * math.pi * sp.alpha),
              2 * kap * math.sqrt(sp.sigma), 1e-10),
        Check("zero_energy_phase_closed_form", sp.kappa ** 2 / 8 * 4 * math.sqrt(sp.sigma) - 2 / 3 * s32,
              0.0, 1e-12, relative=False),
        Check("momentum_coefficients", sp.beta / (sp.alpha * math.pi),
              sp.beta ** 4 * M / (18 * math.pi * sp.alpha), 1e-12),
    ]


def quadrature_checks(sp: SphereParams) -> list:
    f = w_functionals(sp)
    kap = abs(sp.kappa)
    e_tilde = 0.5 * (sp.kappa / 2) ** 2 * f["M_w"] + 0.5 * sp.kappa * f["P_w"] + f["E_w"]
    return [
        Check("M_P_quadrature", f["M_P"], 4 * math.sqrt(sp.sigma), 1e-10),
        Check("E_P_quadrature", f["E_P"], -1 / (16 * math.pi), 1e-8),
        Check("M_w_quadrature", f["M_w"], 4 * math.sqrt(sp.sigma), 1e-10),
        Check("P_w_quadrature", f["P_w"], 2 * kap * math.sqrt(sp.sigma), 1e-10),
        Check("zero_energy_phase_quadrature", sp.kappa ** 2 / 8 * f["M_P"] + f["E_P"], 0.0, 1e-8,
              relative=False),
        Check("E_w_quadrature", f["E_w"], 0.0, 1e-8, relative=False),
        Check("E_wtilde_recombined", e_tilde, -1 / (16 * math.pi), 1e-8),
        Check("dy_sq_quadrature", f["dy_sq"], 1 / (4 * math.pi), 1e-8),
    ]


def fit_exponent(taus, values) -> tuple[float, float]:
    """Slope and its standard error of ``log values`` against ``log taus``."""
    taus = np.asarray(taus, dtype=float)
    values = np.asarray(values, dtype=float)
    if taus.size < 3 or np.ptp(np.log10(taus)) < 1:
        raise FitIllConditioned("need at least 3 times spanning one decade of T - t")
    if np.any(values <= 0):
        raise FitIllConditioned("non-positive values cannot be fitted on a log scale")
    fit = linregress(np.log(taus), np.log(values))
    return float(fit.slope), float(fit.stderr)


RATE_EXPONENTS = {"l3": -2 / 9, "half": -1 / 3, "grad": -2 / 3}


def rate_fits(sp: SphereParams, taus, points_per_width: int = 20) -> dict:
    """Fitted exponents of ``||u||_3``, ``||u||_{H^{1/2}-dot}``, ``||grad u||_2`` against ``T - t``."""
    taus = np.asarray(taus, dtype=float)
    l3, half, grad = [], [], []
    for tau in taus:
        t = sp.T - tau
        f = sphere_functionals(sp, t)
        l3.append(f["l3"])
        grad.append(math.sqrt(f["grad_sq"]))
        half.append(half_derivative_norm(sp, t, points_per_width))
    out = {}
    for name, vals in (("l3", l3), ("half", half), ("grad", grad)):
        slope, err = fit_exponent(taus, vals)
        out[name] = {"exponent": slope, "stderr": err, "expected": RATE_EXPONENTS[name]}
    return out


def conservation_audit(sp: SphereParams, t_list=None, rate_taus=None, rate_tol: float = 0.02,
                       raise_on_failure: bool = True) -> AuditReport:
    """Audit the asymptotic conservation laws on the analytic profile.

    ``t_list`` must span at least two decades of ``T - t``.  Per-time entries
    record the recovered 3-D mass, its relative error next to ``lambda/r0``,
    and the weight of the profile beyond the origin.  The three rate
    exponents are fitted over ``rate_taus`` (``T - t`` values, default
    :data:`RATE_LADDER`).
    """
    if t_list is None:
        t_list = [sp.T - tau for tau in DEFAULT_LADDER]
    taus = sp.T - np.asarray(t_list, dtype=float)
    if np.any(taus <= 0):
        raise ValueError("audit times must lie before T")
    if np.ptp(np.log10(taus)) < 2:
        raise ValueError("audit times must span at least two decades of T - t")
    rep = AuditReport(params=sp)
    rep.checks.extend(closed_form_checks(sp))
    rep.checks.extend(quadrature_checks(sp))
    for t in t_list:
        f = sphere_functionals(sp, t)
        ratio = f["lambda"] / f["r0"]
        mass_law = 4 * math.pi * f["r0"] ** 2 * 4 * math.sqrt(sp.sigma) / f["lambda"]
        rep.per_time.append({
            "t": float(t), "tau": float(sp.T - t), "mass_3d": f["mass"],
            "mass_rel_error": abs(f["mass"] / sp.mass - 1), "lambda_over_r0": ratio,
            "mass_law": mass_law, "boundary_weight": boundary_weight(sp, t),
            "grad_sq": f["grad_sq"], "l3": f["l3"],
        })
        rep.checks.append(Check(f"mass_law_t={t:.17g}", mass_law, sp.mass, 1e-12))
    deepest = min(rep.per_time, key=lambda row: row["tau"])
    rep.checks.append(Check("mass_recovery_within_lambda_over_r0", deepest["mass_rel_error"], 0.0,
                            deepest["lambda_over_r0"], relative=False))
    a = math.sqrt(3) / 2 * abs(sp.kappa)
    rep.drift["tail_mass_fraction"] = 2 / (math.exp(2 * a * sp.y_cut) + 1)
    try:
        b, _ = fit_exponent([row["tau"] for row in rep.per_time], [row["mass_rel_error"] for row in rep.per_time])
        rep.drift["mass_error_exponent"] = b
    except FitIllConditioned:
        rep.drift["mass_error_exponent"] = None
    rate_taus = np.asarray(RATE_LADDER if rate_taus is None else rate_taus, dtype=float)
    rep.rates = rate_fits(sp, rate_taus)
    for name, r in rep.rates.items():
        rep.checks.append(Check(f"rate_{name}", r["exponent"], r["expected"], rate_tol, relative=False))
    if raise_on_failure and not rep.ok:
        raise AuditFailure(rep.failures())
    return rep


def dropped_terms(sp: SphereParams, t: float, n: int = 40001) -> dict:
    """``L^2(dy)`` sizes of the terms of the rescaled equation at time ``t``.

    ``radial`` is ``(2 lambda/r) w_y`` with ``r`` replaced by ``r0`` and
    ``scaling`` is ``(lambda_s/lambda) Lambda w``.  ``radial_exact`` keeps the
    true ``1/r`` but only over ``r >= r0/2``.  ``retained`` is the residual of
    the reduced equation, which the profile solves exactly, and ``full`` is
    the residual of the complete equation.
    """
    lam, r0 = float(lambda_of(t, sp)), float(r0_of(t, sp))
    s = float(s_of(t, sp))
    y = _y_nodes(sp, n=n)
    w = w_profile(y, s, sp)
    wy = w_profile_dy(y, s, sp)
    wyy = w_profile_dyy(y, s, sp)
    ls = float(lambda_s_over_lambda(t, sp))
    rs = float(r0_s_over_lambda(t, sp))
    dw_ds = 1j * sp.nu * w
    t_radial = 2 * lam / r0 * wy
    t_scaling = -1j * ls * (w + y * wy)
    retained = 1j * dw_ds + wyy - 1j * rs * wy + np.abs(w) ** 2 * w

    def norm(f, mask=None):
        g = np.abs(f) ** 2 if mask is None else np.where(mask, np.abs(f) ** 2, 0.0)
        return math.sqrt(trapezoid(g, y))

    r = r0 + lam * y
    inner = r >= 0.5 * r0
    exact = np.where(inner, 2 * lam / np.where(inner, r, 1.0) * wy, 0.0)
    return {
        "tau": sp.T - t,
        "radial": norm(t_radial),
        "scaling": norm(t_scaling),
        "radial_exact": norm(exact),
        "retained": norm(retained),
        "full": norm(retained + t_radial + t_scaling),
        "lambda_over_r0": lam / r0,
    }


def residual_scaling(sp: SphereParams, t_list=None) -> dict:
    """Fitted decay exponents in ``T - t`` of the dropped terms of the rescaled equation."""
    if t_list is None:
        t_list = [sp.T - tau for tau in DEFAULT_LADDER]
    rows = [dropped_terms(sp, t) for t in t_list]
    taus = np.array([r["tau"] for r in rows])
    out = {"rows": rows}
    for key in ("radial", "scaling", "radial_exact", "full", "lambda_over_r0"):
        slope, err = fit_exponent(taus, [r[key] for r in rows])
        out[key] = {"exponent": slope, "stderr": err}
    out["retained_max"] = max(r["retained"] for r in rows)
    return out


@dataclass
class CancellationReport:
    t: float
    mass_terms: tuple
    momentum_terms: tuple
    dy_sq: float

    @staticmethod
    def _rel(pair) -> float:
        return abs(pair[0] + pair[1]) / max(abs(pair[0]), abs(pair[1]))

    @property
    def mass_residual(self) -> float:
        return self._rel(self.mass_terms)

    @property
    def momentum_residual(self) -> float:
        return self._rel(self.momentum_terms)

    def to_dict(self) -> dict:
        return {"t": self.t, "mass_terms": list(self.mass_terms),
                "momentum_terms": list(self.momentum_terms), "dy_sq": self.dy_sq,
                "mass_residual": self.mass_residual, "momentum_residual": self.momentum_residual}


def refined_cancellation(sp: SphereParams, t: float, rtol: float = 1e-8) -> CancellationReport:
    """Second-order drift terms of ``M[w]`` and ``P[w]``, which cancel in pairs.

    Mass: ``(2 lambda/r0) P[w] + (lambda_s/2 lambda) M[w] = 0``.
    Momentum: ``(4 lambda/r0) int |w_y|^2 + (2 lambda_s/lambda) P[w] = 0``.
    """
    f = w_functionals(sp, float(s_of(t, sp)))
    lam_r0 = float(lambda_of(t, sp) / r0_of(t, sp))
    ls = float(lambda_s_over_lambda(t, sp))
    rep = CancellationReport(
        t=t,
        mass_terms=(2 * lam_r0 * f["P_w"], 0.5 * ls * f["M_w"]),
        momentum_terms=(4 * lam_r0 * f["dy_sq"], 2 * ls * f["P_w"]),
        dy_sq=f["dy_sq"],
    )
    if rep.mass_residual > rtol:
        raise CancellationFailure("mass", rep.mass_residual)
    if rep.momentum_residual > rtol:
        raise CancellationFailure("momentum", rep.momentum_residual)
    return rep


# -- general (p, N) -------------------------------------------------------------

class Regime(str, enum.Enum):
    CONTRACTING = "Contracting"
    CONSTANT_RADIUS = "ConstantRadius"
    EXPANDING = "Expanding"


def _rational(x) -> Fraction:
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


@dataclass(frozen=True)
class ExponentRecord:
    p: Fraction
    N: int
    gamma: Fraction
    r0_exponent: Fraction
    regime: Regime

    def to_dict(self) -> dict:
        def enc(q: Fraction):
            return q.numerator if q.denominator == 1 else f"{q.numerator}/{q.denominator}"
        return {"p": enc(self.p), "N": self.N, "gamma": enc(self.gamma),
                "r0_exponent": enc(self.r0_exponent), "regime": self.regime.value}


def general_exponents(p, N: int) -> ExponentRecord:
    """Exact exponents of ``lambda ~ (T-t)^gamma`` and ``r0 ~ (T-t)^e`` for a sphere in R^N."""
    p = _rational(p)
    if int(N) != N or N < 2:
        raise ValueError(f"sphere scenario needs an integer N >= 2, got {N}")
    N = int(N)
    if p <= 1 + Fraction(4, N):
        raise NotSupercritical(f"p = {p} is not mass supercritical in dimension {N}")
    den = (p - 1) * (N - 1) + 5 - p
    gamma = (p - 1) * (N - 1) / den
    r0_exp = (5 - p) / den
    regime = Regime.CONTRACTING if p < 5 else Regime.CONSTANT_RADIUS if p == 5 else Regime.EXPANDING
    return ExponentRecord(p=p, N=N, gamma=gamma, r0_exponent=r0_exp, regime=regime)
