"""Energy functional of the coupled system, its gradient and identity checks.

The functional on a pair (u, v) is

    E(u, v) = 1/2 (||grad u||^2 + ||grad v||^2)
            + 1/2 int (V1 u^2 + V2 v^2)
            - mu1/(2p) B(u, p) - mu2/(2q) B(v, q)
            - int beta(x) u v,

with B(u, p) = int (K * |u|^p) |u|^p for the Riesz kernel K.  Everything
here is assembled from the same discrete primitives (spectral Laplacian,
padded free-space convolution, midpoint quadrature), so the gradient
returned by ``el_gradient`` is the exact derivative of the discrete energy:
finite differences of ``energy_total`` reproduce it to truncation error.

Identity checks:

* ``lagrange_multipliers`` extracts the frequencies from the constraint
  pairing of the gradient with (u, 0) and (0, v).
* ``pohozaev_residual`` evaluates K - delta_p (mu1 B_u + mu2 B_v)
  + int (x . grad beta) u v, which equals the s-derivative of the energy
  along the dilation fiber at s = 0 and vanishes at critical points (only
  derived for p = q, no potentials, supercritical).
* ``multiplier_sum_identity`` returns both sides of
  lambda1 xi^2 + lambda2 eta^2 = (1/delta_p - 1) K
      + int (2 beta + x . grad beta / delta_p) u v,
  whose gap is |pohozaev_residual| / delta_p.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GridMismatch, ModeMismatch, ZeroMass
from .grid import (
    GridSpec,
    ScalarField,
    StatePair,
    grad_norm_sq_values,
    neg_laplacian_values,
)
from .model import ModelParams, classify, coupling_values, coupling_x_grad_values, potential_values
from .riesz import RieszConvolver, riesz_convolve_values


@dataclass(frozen=True)
class EnergyBreakdown:
    """The five summands of the energy exactly as composed, plus the raw
    ingredients (kinetic norms, B values, coupling integral) that the
    identity checks reuse."""

    kinetic: float
    potential_v1: float
    potential_v2: float
    nonlocal_u: float
    nonlocal_v: float
    coupling: float
    total: float
    grad_sq_u: float
    grad_sq_v: float
    b_u: float
    b_v: float
    pot_u_integral: float
    pot_v_integral: float
    coupling_integral: float


@dataclass(frozen=True)
class Multipliers:
    lambda1: float
    lambda2: float


@dataclass
class SampledModel:
    """Grid samples of the model's spatial data, computed once per solve."""

    grid: GridSpec
    v1: np.ndarray | None
    v2: np.ndarray | None
    beta: np.ndarray | None
    x_grad_beta: np.ndarray | None
    beta_is_constant: bool
    beta0: float


def sample_model(params: ModelParams, grid: GridSpec) -> SampledModel:
    beta = None
    xgb = None
    const = params.coupling.kind == "constant"
    if not (const and params.coupling.beta0 == 0.0):
        beta = coupling_values(params.coupling, grid)
        xgb = coupling_x_grad_values(params.coupling, grid)
    v1 = None if params.v1.is_zero else potential_values(params.v1, grid)
    v2 = None if params.v2.is_zero else potential_values(params.v2, grid)
    return SampledModel(
        grid=grid,
        v1=v1,
        v2=v2,
        beta=beta,
        x_grad_beta=xgb,
        beta_is_constant=const,
        beta0=params.coupling.beta0 if const else float("nan"),
    )


def _quad(grid: GridSpec, arr: np.ndarray) -> float:
    return float(grid.cell_volume * np.sum(arr))


def _power_density(values: np.ndarray, p: float) -> np.ndarray:
    """|u|^p, safe for non-integer p at sign changes."""
    if p == 2.0:
        return values * values
    return np.abs(values) ** p


def _power_force(values: np.ndarray, p: float) -> np.ndarray:
    """|u|^{p-2} u as sign(u) |u|^{p-1}, continuous at zeros for p > 1."""
    if p == 2.0:
        return values
    return np.sign(values) * np.abs(values) ** (p - 1.0)


def nonlocal_B(u: ScalarField, p: float, conv: RieszConvolver) -> float:
    """B(u, p) = int (K * |u|^p) |u|^p; nonnegative."""
    if u.grid != conv.grid:
        raise GridMismatch("field grid differs from the convolver's grid")
    dens = _power_density(u.values, p)
    return _quad(u.grid, riesz_convolve_values(conv, dens) * dens)


@dataclass
class StateEval:
    """Cache of everything the energy and gradient share for one state."""

    u: np.ndarray
    v: np.ndarray
    conv_u: np.ndarray | None
    conv_v: np.ndarray | None
    breakdown: EnergyBreakdown


def evaluate_state(
    u_values: np.ndarray,
    v_values: np.ndarray,
    params: ModelParams,
    conv: RieszConvolver,
    sampled: SampledModel,
) -> StateEval:
    grid = conv.grid
    gu = grad_norm_sq_values(grid, u_values)
    gv = grad_norm_sq_values(grid, v_values)

    conv_u = conv_v = None
    b_u = b_v = 0.0
    if np.any(u_values):
        dens_u = _power_density(u_values, params.p)
        conv_u = riesz_convolve_values(conv, dens_u)
        b_u = _quad(grid, conv_u * dens_u)
    if np.any(v_values):
        dens_v = _power_density(v_values, params.q)
        conv_v = riesz_convolve_values(conv, dens_v)
        b_v = _quad(grid, conv_v * dens_v)

    pot_u = _quad(grid, sampled.v1 * u_values**2) if sampled.v1 is not None else 0.0
    pot_v = _quad(grid, sampled.v2 * v_values**2) if sampled.v2 is not None else 0.0
    if sampled.beta is not None:
        coup = _quad(grid, sampled.beta * u_values * v_values)
    elif sampled.beta_is_constant and sampled.beta0 != 0.0:
        coup = sampled.beta0 * _quad(grid, u_values * v_values)
    else:
        coup = 0.0

    kinetic = 0.5 * (gu + gv)
    nl_u = -params.mu1 / (2.0 * params.p) * b_u
    nl_v = -params.mu2 / (2.0 * params.q) * b_v
    breakdown = EnergyBreakdown(
        kinetic=kinetic,
        potential_v1=0.5 * pot_u,
        potential_v2=0.5 * pot_v,
        nonlocal_u=nl_u,
        nonlocal_v=nl_v,
        coupling=-coup,
        total=kinetic + 0.5 * pot_u + 0.5 * pot_v + nl_u + nl_v - coup,
        grad_sq_u=gu,
        grad_sq_v=gv,
        b_u=b_u,
        b_v=b_v,
        pot_u_integral=pot_u,
        pot_v_integral=pot_v,
        coupling_integral=coup,
    )
    return StateEval(u=u_values, v=v_values, conv_u=conv_u, conv_v=conv_v, breakdown=breakdown)


def gradient_values(
    ev: StateEval, params: ModelParams, conv: RieszConvolver, sampled: SampledModel
) -> tuple[np.ndarray, np.ndarray]:
    """Unconstrained gradient fields (dE/du, dE/dv) from a cached evaluation."""
    grid = conv.grid
    gu = neg_laplacian_values(grid, ev.u)
    gv = neg_laplacian_values(grid, ev.v)
    if ev.conv_u is not None:
        gu -= params.mu1 * ev.conv_u * _power_force(ev.u, params.p)
    if ev.conv_v is not None:
        gv -= params.mu2 * ev.conv_v * _power_force(ev.v, params.q)
    if sampled.v1 is not None:
        gu += sampled.v1 * ev.u
    if sampled.v2 is not None:
        gv += sampled.v2 * ev.v
    if sampled.beta is not None:
        gu -= sampled.beta * ev.v
        gv -= sampled.beta * ev.u
    elif sampled.beta_is_constant and sampled.beta0 != 0.0:
        gu -= sampled.beta0 * ev.v
        gv -= sampled.beta0 * ev.u
    return gu, gv


def energy_total(state: StatePair, params: ModelParams, conv: RieszConvolver) -> EnergyBreakdown:
    """Full energy with per-term breakdown; zero potentials reduce it to the
    translation-invariant functional."""
    _check_state(state, conv)
    sampled = sample_model(params, state.grid)
    return evaluate_state(state.u.values, state.v.values, params, conv, sampled).breakdown


def el_gradient(state: StatePair, params: ModelParams, conv: RieszConvolver) -> StatePair:
    """Gradient pair of the energy; the flow direction and residual source."""
    _check_state(state, conv)
    sampled = sample_model(params, state.grid)
    ev = evaluate_state(state.u.values, state.v.values, params, conv, sampled)
    gu, gv = gradient_values(ev, params, conv, sampled)
    return StatePair(ScalarField(state.grid, gu), ScalarField(state.grid, gv))


def _check_state(state: StatePair, conv: RieszConvolver) -> None:
    if state.grid != conv.grid:
        raise GridMismatch("state grid differs from the convolver's grid")


def lagrange_multipliers(
    state: StatePair, params: ModelParams, conv: RieszConvolver
) -> Multipliers:
    """Frequencies from pairing the gradient with (u, 0) and (0, v):

        lambda1 = -(||grad u||^2 + int V1 u^2 - mu1 B(u,p) - int beta u v) / ||u||^2
    and symmetrically for lambda2."""
    _check_state(state, conv)
    mass_u = state.u.mass
    mass_v = state.v.mass
    if mass_u <= 0.0 or mass_v <= 0.0:
        raise ZeroMass("multipliers require both components to carry mass")
    sampled = sample_model(params, state.grid)
    bd = evaluate_state(state.u.values, state.v.values, params, conv, sampled).breakdown
    lam1 = -(bd.grad_sq_u + bd.pot_u_integral - params.mu1 * bd.b_u - bd.coupling_integral) / mass_u
    lam2 = -(bd.grad_sq_v + bd.pot_v_integral - params.mu2 * bd.b_v - bd.coupling_integral) / mass_v
    return Multipliers(lam1, lam2)


def _require_translation_invariant_supercritical(params: ModelParams, what: str) -> None:
    if not (params.v1.is_zero and params.v2.is_zero):
        raise ModeMismatch(f"{what} is only derived without external potentials")
    if params.p != params.q:
        raise ModeMismatch(f"{what} requires p = q")
    if classify(params.dim, params.alpha, params.p) != "supercritical":
        raise ModeMismatch(f"{what} requires the supercritical regime")


def pohozaev_residual(state: StatePair, params: ModelParams, conv: RieszConvolver) -> float:
    """K - delta_p (mu1 B_u + mu2 B_v) + int (x . grad beta) u v.

    Equals d/ds of the fiber energy at s = 0; zero at critical points of the
    constrained problem.  Refuses potential-carrying states: no analogue of
    the identity is available there.
    """
    _check_state(state, conv)
    _require_translation_invariant_supercritical(params, "the dilation identity")
    sampled = sample_model(params, state.grid)
    bd = evaluate_state(state.u.values, state.v.values, params, conv, sampled).breakdown
    return pohozaev_from_breakdown(bd, params, sampled, state.u.values * state.v.values)


def pohozaev_from_breakdown(
    bd: EnergyBreakdown,
    params: ModelParams,
    sampled: SampledModel,
    uv_product: np.ndarray | None,
) -> float:
    res = (bd.grad_sq_u + bd.grad_sq_v) - params.delta_p * (
        params.mu1 * bd.b_u + params.mu2 * bd.b_v
    )
    if sampled.x_grad_beta is not None:
        if uv_product is None:
            raise ValueError("u*v product required for non-constant coupling")
        res += _quad(sampled.grid, sampled.x_grad_beta * uv_product)
    return res


def multiplier_sum_identity(
    state: StatePair, params: ModelParams, conv: RieszConvolver
) -> tuple[float, float]:
    """(lhs, rhs) of the multiplier-sum identity.

    lhs = lambda1 xi^2 + lambda2 eta^2 assembled directly from the pairing
    relations (well-defined even for vanishing components); rhs is the
    kinetic/coupling form.  The two agree exactly when the dilation identity
    holds: lhs - rhs = -pohozaev_residual / delta_p.
    """
    _check_state(state, conv)
    _require_translation_invariant_supercritical(params, "the multiplier-sum identity")
    sampled = sample_model(params, state.grid)
    bd = evaluate_state(state.u.values, state.v.values, params, conv, sampled).breakdown
    k = bd.grad_sq_u + bd.grad_sq_v
    lhs = -k + params.mu1 * bd.b_u + params.mu2 * bd.b_v + 2.0 * bd.coupling_integral
    dp = params.delta_p
    rhs = (1.0 / dp - 1.0) * k
    uv = state.u.values * state.v.values
    if sampled.beta is not None:
        combo = 2.0 * sampled.beta + sampled.x_grad_beta / dp
        rhs += _quad(state.grid, combo * uv)
    elif sampled.beta_is_constant and sampled.beta0 != 0.0:
        rhs += 2.0 * sampled.beta0 * _quad(state.grid, uv)
    return lhs, rhs
