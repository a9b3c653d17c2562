"""Global existence versus blow-up for data below the mass-energy threshold.

The dichotomy rests on the function

    f(x) = x^2/2 - c_gn/(p+1) * ||u0||_2^(2-(N-2)(p-1)/2) * x^(N(p-1)/2),

which bounds the energy from below along the flow.  Its interior maximum
sits at ``x1`` with ``f(x1) = (s_c/N) x1^2``.  Data with ``E < f(x1)`` can
never cross ``||grad u|| = x1``, so the side it starts on decides the
verdict.

For radial data without finite variance a localized virial weight replaces
``|x|^2``; :func:`localized_virial_route` makes the choice of the cutoff
scale ``m`` explicit.
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import PreconditionFailed, TechnicalRestriction
from .fields import ComplexField, energy, grad_sq, mass, radial_integral
from .ground_state import GroundState


class Verdict(str, enum.Enum):
    GLOBAL = "Global"
    FINITE_TIME_BLOWUP = "FiniteTimeBlowup"
    BLOWUP_BARRIER_ONLY = "BlowupBarrierOnly"
    INDETERMINATE = "Indeterminate"


class Route(str, enum.Enum):
    MASS_ENERGY_BELOW = "MassEnergyBelow"
    NEGATIVE_ENERGY = "NegativeEnergy"
    LOCALIZED_VIRIAL = "LocalizedVirial"
    THRESHOLD_FAIL = "ThresholdFail"


@dataclass
class ClassificationReport:
    s_c: float
    lambda0: float
    grad_mass_product: float
    x1: float
    f_at_x1: float
    verdict: Verdict | None = None
    route: Route | None = None
    delta: float | None = None
    delta_tilde: float | None = None
    mass: float = math.nan
    energy: float = math.nan
    grad_norm: float = math.nan
    lambda_threshold: float = math.nan
    sigma_pn: float = math.nan
    epsilon: float | None = None
    m_threshold: float | None = None

    @property
    def energy_gap(self) -> float:
        """``f(x1) - E[u0]``; positive whenever the data lies below the threshold."""
        return self.f_at_x1 - self.energy

    def to_dict(self) -> dict:
        d = asdict(self)
        d["verdict"] = self.verdict.value if self.verdict else None
        d["route"] = self.route.value if self.route else None
        d["energy_gap"] = self.energy_gap
        # NaN is not valid JSON
        return {k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in d.items()}


def f_trap(x, mass_u0: float, gs: GroundState):
    """The lower envelope ``f(x)`` of the energy at gradient norm ``x``."""
    N, p = gs.params.N, gs.params.p
    l2 = math.sqrt(mass_u0)
    return 0.5 * np.asarray(x) ** 2 - gs.c_gn / (p + 1) * l2 ** (2 - (N - 2) * (p - 1) / 2) \
        * np.asarray(x) ** (N * (p - 1) / 2)


def critical_gradient(mass_u0: float, gs: GroundState) -> float:
    """``x1 = sigma^(1/s_c) ||u0||_2^(-(1-s_c)/s_c)``."""
    sc = gs.params.s_c
    return gs.sigma_pn ** (1 / sc) * math.sqrt(mass_u0) ** (-(1 - sc) / sc)


def scaling_invariants(u0: ComplexField, gs: GroundState) -> ClassificationReport:
    """Partial report with the two scale-invariant quantities filled in.

    ``lambda0`` is NaN when the energy is negative; the route is then fixed
    to ``NegativeEnergy``.
    """
    gs.params.require_intercritical()
    sc = gs.params.s_c
    M = mass(u0)
    G = grad_sq(u0)
    E = energy(u0)
    if M == 0:
        x1 = math.inf
        fx1 = math.inf
    else:
        x1 = critical_gradient(M, gs)
        fx1 = float(f_trap(x1, M, gs))
    report = ClassificationReport(
        s_c=sc,
        lambda0=E ** sc * M ** (1 - sc) if E >= 0 else math.nan,
        grad_mass_product=math.sqrt(G) ** sc * math.sqrt(M) ** (1 - sc),
        x1=x1,
        f_at_x1=fx1,
        mass=M,
        energy=E,
        grad_norm=math.sqrt(G),
        lambda_threshold=gs.lambda_threshold,
        sigma_pn=gs.sigma_pn,
    )
    if E < 0:
        report.route = Route.NEGATIVE_ENERGY
    return report


def classify(u0: ComplexField, gs: GroundState, finite_variance: bool = False,
             radial: bool = True, rtol: float = 1e-6, c1: float = 4.0,
             c2: float = 4.0) -> ClassificationReport:
    """Assign a verdict from the threshold dichotomy.

    Equalities within ``rtol`` are reported as Indeterminate since the
    dichotomy needs strict inequalities.  Radial data above ``sigma`` without
    finite variance goes through :func:`localized_virial_route`, using the
    largest admissible ``delta``.
    """
    rep = scaling_invariants(u0, gs)
    sigma, thresh = gs.sigma_pn, gs.lambda_threshold
    if rep.route is Route.NEGATIVE_ENERGY:
        rep.verdict = (Verdict.FINITE_TIME_BLOWUP if (finite_variance or radial)
                       else Verdict.BLOWUP_BARRIER_ONLY)
        return rep
    if rep.lambda0 >= thresh * (1 - rtol):
        rep.route = Route.THRESHOLD_FAIL
        rep.verdict = Verdict.INDETERMINATE
        return rep
    rep.route = Route.MASS_ENERGY_BELOW
    prod = rep.grad_mass_product
    if abs(prod - sigma) <= rtol * sigma:
        rep.verdict = Verdict.INDETERMINATE
    elif prod < sigma:
        rep.verdict = Verdict.GLOBAL
    elif finite_variance:
        rep.verdict = Verdict.FINITE_TIME_BLOWUP
    elif radial:
        delta = 1 - (rep.lambda0 / thresh) ** (1 / rep.s_c)
        try:
            lv = localized_virial_route(u0, gs, delta, c1=c1, c2=c2, _report=rep)
        except TechnicalRestriction:
            rep.verdict = Verdict.BLOWUP_BARRIER_ONLY
        else:
            rep.route = Route.LOCALIZED_VIRIAL
            rep.verdict = lv.verdict
            rep.delta, rep.delta_tilde = lv.delta, lv.delta_tilde
            rep.epsilon, rep.m_threshold = lv.epsilon, lv.m_threshold
    else:
        rep.verdict = Verdict.BLOWUP_BARRIER_ONLY
    return rep


# -- localized virial ----------------------------------------------------------

def localized_weight(r):
    """Radial weight equal to ``r^2`` on ``[0, 1]``, constant ``13/6`` beyond 2.

    On ``[1, 2]`` a quartic in ``s = r - 1`` joins the two with matching value,
    slope and curvature, and the second derivative never exceeds 2.
    """
    r = np.asarray(r, dtype=float)
    s = np.clip(r - 1.0, 0.0, 1.0)
    mid = 1 + 2 * s + s ** 2 - (10 / 3) * s ** 3 + 1.5 * s ** 4
    return np.where(r <= 1.0, r ** 2, mid)


def localized_weight_d2(r):
    r = np.asarray(r, dtype=float)
    s = r - 1.0
    return np.where(r <= 1.0, 2.0, np.where(r >= 2.0, 0.0, 2 - 20 * s + 18 * s ** 2))


def _check_localized_range(N: int, p: float):
    if N < 2:
        raise TechnicalRestriction(f"localized virial needs N >= 2, got N = {N}")
    upper = 5.0 if N == 2 else min(1 + 4 / (N - 2), 5.0)
    if not (1 + 4 / N < p < upper):
        raise TechnicalRestriction(
            f"p = {p} outside the localized virial range ({1 + 4 / N:g}, {upper:g}) for N = {N}")


def exterior_mass(u: ComplexField, m: float) -> float:
    """``int_{|x| > m} |u|^2``."""
    dens = np.where(u.r > m, np.abs(u.values) ** 2, 0.0)
    return radial_integral(dens, u.grid, u.params.N)


def localized_virial_rhs(u: ComplexField, m: float, c1: float = 4.0, c2: float = 4.0) -> float:
    """Upper bound for the second time derivative of ``int phi_m |u|^2``.

    Negative values certify blow-up of a radial solution when they persist.
    """
    N, p = u.params.N, u.params.p
    gam = (N - 1) * (p - 1) / 2
    M = mass(u)
    G = grad_sq(u)
    E = energy(u)
    return (4 * N * (p - 1) * E - (2 * N * (p - 1) - 8) * G
            + c1 * m ** (-gam) * M ** ((p + 3) / 4) * G ** ((p - 1) / 4)
            + c2 * m ** (-2) * exterior_mass(u, m))


def refined_delta_tilde(delta: float, params) -> float:
    """Smallest ``dt > 0`` with ``g(1 + dt) = (1 - delta) g(1)``, ``g(z) = z^2/2 - z^q/q``.

    ``g`` is the trapping function in units of ``x1``; ``q = N(p-1)/2``.
    """
    q = params.N * (params.p - 1) / 2
    g1 = 0.5 - 1 / q
    target = (1 - delta) * g1

    def h(z):
        return 0.5 * z * z - z ** q / q - target

    hi = 2.0
    while h(hi) > 0:
        hi *= 2
    return brentq(h, 1.0, hi, xtol=1e-15, rtol=1e-15) - 1.0


@dataclass
class LocalizedVirialResult:
    delta: float
    delta_tilde: float
    epsilon: float
    m_threshold: float
    leading_bound: float
    certified_bound: float
    verdict: Verdict


def localized_virial_route(u0: ComplexField, gs: GroundState, delta: float,
                           c1: float = 4.0, c2: float = 4.0, _report=None) -> LocalizedVirialResult:
    """Blow-up certificate for radial data of possibly infinite variance.

    All bounds are scaled by ``M^theta``, ``theta = (1-s_c)/s_c``.  ``epsilon``
    is half its admissible upper limit and ``m`` is the smallest radius for
    which each tail term is at most a quarter of the leading (negative) bound.
    """
    params = gs.params
    N, p = params.N, params.p
    _check_localized_range(N, p)
    if not 0 < delta < 1:
        raise PreconditionFailed(f"delta must lie in (0, 1), got {delta}")
    rep = _report if _report is not None else scaling_invariants(u0, gs)
    sc = params.s_c
    sigma2 = gs.sigma_pn ** (2 / sc)
    if rep.energy >= 0 and rep.lambda0 > (1 - delta) ** sc * gs.lambda_threshold * (1 + 1e-12):
        raise PreconditionFailed(
            f"lambda0 = {rep.lambda0} exceeds (1-delta)^s_c times the threshold")
    if not rep.grad_mass_product > gs.sigma_pn:
        raise PreconditionFailed("initial gradient is not above the critical level sigma")

    dtil = refined_delta_tilde(delta, params)
    coef = 2 * N * (p - 1) - 8
    eps = 0.5 * coef * (1 - (1 - delta) / (1 + dtil) ** 2)
    leading = (4 * N * (p - 1) * (1 - delta) * (sc / N) * sigma2
               - (coef - eps) * (1 + dtil) ** 2 * sigma2)

    M = rep.mass
    theta = (1 - sc) / sc
    gam = (N - 1) * (p - 1) / 2
    r, rp = 4 / (p - 1), 4 / (5 - p)
    young = (eps * r) ** (-rp / r) / rp * c1 ** rp
    a3 = young * M ** ((p + 3) / (5 - p) + theta)
    a4 = c2 * M ** (1 + theta)
    budget = abs(leading) / 4
    m3 = (a3 / budget) ** ((5 - p) / (4 * gam))
    m4 = math.sqrt(a4 / budget)
    m = max(m3, m4, 1.0)
    bound = leading + a3 * m ** (-4 * gam / (5 - p)) + a4 * m ** (-2)
    verdict = Verdict.FINITE_TIME_BLOWUP if bound < 0 else Verdict.INDETERMINATE
    return LocalizedVirialResult(delta, dtil, eps, m, leading, bound, verdict)
