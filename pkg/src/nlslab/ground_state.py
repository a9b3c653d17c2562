"""Radial shooting for the ground state and the sharp constants derived from it.

The profile solves

    (N(p-1)/4) Lap Q - (1 - (N-2)(p-1)/4) Q + Q^p = 0,

normalised so that ``||grad Q||_2 = ||Q||_2``.  Shooting integrates
``Q'' + (N-1)/r Q' = a (b Q - Q^p)`` outward from ``Q'(0) = 0`` with a
fixed-step RK4 whose step equals the grid spacing, and bisects on ``Q(0)``:
too large an amplitude overshoots through zero, too small a one turns back up
before reaching zero.  Past the radius where the two bracketing trajectories
separate, the profile is continued with the exact decaying solution of the
linearised equation, ``C r^(-nu) K_nu(k r)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import kv

from .errors import IdentityViolation, NoBracket, TailDivergence
from .fields import ComplexField, NlsParams, RadialGrid, radial_integral

OVERSHOOT = "overshoot"
UNDERSHOOT = "undershoot"


def _coefficients(params: NlsParams):
    N, p = params.N, params.p
    a = 4.0 / (N * (p - 1))
    b = 1.0 - (N - 2) * (p - 1) / 4.0
    return a, b


def _shoot(q0, h, n_steps, N, p, a, b, record=False):
    """Integrate from r = 0; return (outcome, Q, Q') with Q sampled at r = j*h, j = 0..."""
    pm1 = p - 1

    def accel(r, q, dq):
        force = a * (b * q - abs(q) ** pm1 * q)
        if r == 0.0:
            return force / N
        return force - (N - 1) / r * dq

    q, dq, r = q0, 0.0, 0.0
    qs = [q] if record else None
    dqs = [dq] if record else None
    outcome = None
    for j in range(n_steps):
        # substeps keep h*omega small where the nonlinearity is stiff (large Q(0))
        omega = math.sqrt(a * (p * abs(q) ** pm1 + b) + ((N - 1) / (j * h) if j else 0.0))
        n_sub = max(1, math.ceil(h * omega / 0.25))
        hs = h / n_sub
        for i in range(n_sub):
            r = j * h + i * hs
            k1q, k1d = dq, accel(r, q, dq)
            k2q, k2d = dq + 0.5 * hs * k1d, accel(r + 0.5 * hs, q + 0.5 * hs * k1q, dq + 0.5 * hs * k1d)
            k3q, k3d = dq + 0.5 * hs * k2d, accel(r + 0.5 * hs, q + 0.5 * hs * k2q, dq + 0.5 * hs * k2d)
            k4q, k4d = dq + hs * k3d, accel(r + hs, q + hs * k3q, dq + hs * k3d)
            q += hs / 6.0 * (k1q + 2 * k2q + 2 * k3q + k4q)
            dq += hs / 6.0 * (k1d + 2 * k2d + 2 * k3d + k4d)
            if outcome is None:
                if q < 0.0:
                    outcome = OVERSHOOT
                elif dq > 0.0:
                    outcome = UNDERSHOOT
        r = (j + 1) * h
        if outcome is not None and not record:
            break
        if record:
            if abs(q) > 2 * q0:
                # an already classified trajectory that has left the physical range
                pad = n_steps - j
                qs.extend([math.nan] * pad)
                dqs.extend([math.nan] * pad)
                break
            qs.append(q)
            dqs.append(dq)
    if outcome is None:
        # never resolved inside the domain: treat a still-decreasing profile as undershoot
        outcome = UNDERSHOOT
    if record:
        return outcome, np.array(qs), np.array(dqs)
    return outcome, None, None


@dataclass
class GroundState:
    params: NlsParams
    q0: float
    profile: ComplexField
    dprofile: np.ndarray
    mass_Q: float
    grad_Q_sq: float
    lp1_Q: float
    c_gn: float = math.nan
    sigma_pn: float = math.nan
    lambda_threshold: float = math.nan
    match_radius: float = math.nan
    lower_history: list = field(default_factory=list, repr=False)
    upper_history: list = field(default_factory=list, repr=False)

    @property
    def grid(self) -> RadialGrid:
        return self.profile.grid

    @property
    def soliton_frequency(self) -> float:
        """Temporal frequency of ``u_Q(x, t) = exp(i*omega*t) Q(alpha*x)``."""
        return _coefficients(self.params)[1]

    @property
    def soliton_scale(self) -> float:
        N, p = self.params.N, self.params.p
        return math.sqrt(N * (p - 1)) / 2

    def soliton_mass(self) -> float:
        return self.soliton_scale ** (-self.params.N) * self.mass_Q

    def soliton_energy(self) -> float:
        """``E[u_Q]`` from the sampled norms (no identity substituted)."""
        N, p = self.params.N, self.params.p
        al = self.soliton_scale
        return 0.5 * al ** (2 - N) * self.grad_Q_sq - al ** (-N) * self.lp1_Q / (p + 1)

    def to_dict(self) -> dict:
        return {
            "N": self.params.N,
            "p": self.params.p,
            "q0": self.q0,
            "mass": self.mass_Q,
            "grad_sq": self.grad_Q_sq,
            "lp1": self.lp1_Q,
            "c_gn": self.c_gn,
            "sigma_pn": self.sigma_pn,
            "lambda_threshold": self.lambda_threshold,
        }


def solve_ground_state(params: NlsParams, grid: RadialGrid, tol: float = 1e-12,
                       bracket: tuple[float, float] = (0.1, 50.0),
                       tail_tol: float = 1e-8) -> GroundState:
    """Shoot for the ground state on ``grid`` and return it with its constants derived.

    Raises :class:`NoBracket` if the bracket ends do not overshoot/undershoot
    as expected and :class:`TailDivergence` if the continued profile has not
    decayed below ``tail_tol * Q(0)`` at ``r_max``.
    """
    N, p = params.N, params.p
    a, b = _coefficients(params)
    if b <= 0:
        raise ValueError(f"(N, p) = ({N}, {p}) is not energy subcritical; no H^1 ground state")
    h = grid.dr
    n_steps = grid.n + 1
    lo, hi = bracket
    out_lo, _, _ = _shoot(lo, h, n_steps, N, p, a, b)
    out_hi, _, _ = _shoot(hi, h, n_steps, N, p, a, b)
    if out_lo != UNDERSHOOT or out_hi != OVERSHOOT:
        raise NoBracket(f"Q(0) bracket [{lo}, {hi}] gives {out_lo}/{out_hi}")
    lows, highs = [lo], [hi]
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        out, _, _ = _shoot(mid, h, n_steps, N, p, a, b)
        if out == OVERSHOOT:
            hi = mid
        else:
            lo = mid
        lows.append(lo)
        highs.append(hi)

    _, q_lo, dq_lo = _shoot(lo, h, n_steps, N, p, a, b, record=True)
    _, q_hi, dq_hi = _shoot(hi, h, n_steps, N, p, a, b, record=True)
    q = 0.5 * (q_lo + q_hi)
    dq = 0.5 * (dq_lo + dq_hi)

    # trust the shot until the bracketing trajectories separate by 1e-6 relative
    scale = np.maximum(np.abs(q), 1e-300)
    split = np.nonzero(~(np.abs(q_hi - q_lo) <= 1e-6 * scale))[0]
    j_c = int(split[0]) if split.size else n_steps
    j_c = max(j_c - 1, 1)
    r_nodes = h * np.arange(n_steps + 1)
    if j_c < n_steps:
        if q[j_c] > 1e-3 * q[0] or q[j_c] <= 0:
            raise TailDivergence(
                f"shooting loses accuracy at r = {r_nodes[j_c]:.3g} while Q is still "
                f"{q[j_c] / q[0]:.2e} of Q(0); refine the grid or tighten tol"
            )
        k = math.sqrt(a * b)
        nu = (N - 2) / 2
        r_c = r_nodes[j_c]
        C = q[j_c] / (r_c ** (-nu) * kv(nu, k * r_c))
        rt = r_nodes[j_c:]
        q[j_c:] = C * rt ** (-nu) * kv(nu, k * rt)
        dq[j_c:] = -C * k * rt ** (-nu) * kv(nu + 1, k * rt)
    match_radius = r_nodes[min(j_c, n_steps)]

    q_nodes, dq_nodes = q[1:-1], dq[1:-1]
    if abs(q[-1]) >= tail_tol * q[0]:
        raise TailDivergence(
            f"|Q(r_max)| = {abs(q[-1]):.2e} exceeds {tail_tol:g} Q(0); increase r_max"
        )
    profile = ComplexField(grid, q_nodes, params)
    rule = "simpson" if N % 2 == 0 else "trapezoid"
    gs = GroundState(
        params=params,
        q0=float(q[0]),
        profile=profile,
        dprofile=dq_nodes,
        mass_Q=radial_integral(q_nodes ** 2, grid, N, rule, origin_value=q[0] ** 2),
        grad_Q_sq=radial_integral(dq_nodes ** 2, grid, N, rule, origin_value=0.0),
        lp1_Q=radial_integral(np.abs(q_nodes) ** (p + 1), grid, N, rule,
                              origin_value=abs(q[0]) ** (p + 1)),
        match_radius=float(match_radius),
        lower_history=lows,
        upper_history=highs,
    )
    return derive_constants(gs)


def threshold_closed_form(params: NlsParams, mass_Q: float) -> float:
    """Both sides of the mass-energy threshold equivalence, in terms of ``||Q||_2^2``."""
    N, p = params.N, params.p
    sc = params.s_c
    lhs = ((N * (p - 1) - 4) / 8) ** sc * (4 / (N * (p - 1))) ** (N / 2) * mass_Q
    sigma_sq = (4 / (N * (p - 1))) ** (2 / (p - 1)) * mass_Q
    rhs = (sc / N) ** sc * sigma_sq
    return lhs, rhs


def derive_constants(gs: GroundState, rtol: float = 1e-4) -> GroundState:
    """Fill the sharp Gagliardo-Nirenberg constant, ``sigma_{p,N}`` and the threshold."""
    params = gs.params
    N, p = params.N, params.p
    sc = params.s_c
    norm_Q = math.sqrt(gs.mass_Q)
    c_gn = (p + 1) / (2 * norm_Q ** (p - 1))
    sigma = (4 / (N * (p - 1))) ** (1 / (p - 1)) * norm_Q
    thresh = (sc / N) ** sc * sigma ** 2

    lhs, rhs = threshold_closed_form(params, gs.mass_Q)
    if abs(lhs - rhs) > rtol * abs(rhs):
        raise IdentityViolation(f"closed-form threshold mismatch {lhs} vs {rhs}")
    e_uq = gs.soliton_energy()
    if e_uq <= 0:
        raise IdentityViolation(f"soliton energy {e_uq} is not positive")
    product = e_uq ** sc * gs.soliton_mass() ** (1 - sc)
    if abs(product - thresh) > rtol * thresh:
        raise IdentityViolation(
            f"E[u_Q]^s_c M[u_Q]^(1-s_c) = {product} differs from threshold {thresh}"
        )
    return replace(gs, c_gn=c_gn, sigma_pn=sigma, lambda_threshold=thresh)


def gagliardo_nirenberg_ratio(u: ComplexField, gs: GroundState, method: str | None = None) -> float:
    """``||u||_{p+1}^{p+1}`` divided by the sharp Gagliardo-Nirenberg right-hand side (<= 1)."""
    from .fields import grad_sq, mass, potential_term

    N, p = gs.params.N, gs.params.p
    lhs = potential_term(u)
    grad = math.sqrt(grad_sq(u, method))
    l2 = math.sqrt(mass(u))
    rhs = gs.c_gn * grad ** (N * (p - 1) / 2) * l2 ** (2 - (N - 2) * (p - 1) / 2)
    return lhs / rhs


def soliton_field(gs_or_params, grid: RadialGrid, tol: float = 1e-12) -> tuple[ComplexField, GroundState]:
    """Sample ``Q(alpha r)`` on ``grid`` exactly at the nodes.

    The ground state is re-solved on the grid of spacing ``alpha*dr`` so that no
    interpolation enters the initial data.
    """
    params = gs_or_params.params if isinstance(gs_or_params, GroundState) else gs_or_params
    N, p = params.N, params.p
    alpha = math.sqrt(N * (p - 1)) / 2
    scaled = RadialGrid(grid.r_max * alpha, grid.n)
    gs = solve_ground_state(params, scaled, tol=tol)
    return ComplexField(grid, gs.profile.values.real, params), gs
