"""
Continuum whip on the grid s_j = j/m.

The tension solves the two-point problem
    -σ'' + κ² σ = θ_t²,   σ_s(0) = g sin θ(0),   σ(1) = 0
and the angle evolves by θ_tt = 2 σ_s θ_s + σ θ_ss. Unknowns are u_0..u_{m-1}; u_m = 0 is the
free-end condition. The fixed-end row is either the ghost-point half-cell balance
    (u_0 - u_1)/h² + κ_0² u_0 / 2 = f_0 / 2 - σ_s(0) / h
or the one-sided difference (-3u_0 + 4u_1 - u_2) / 2h = σ_s(0).

The angle is clamped at s = 0 with θ_s(0) = 0 when g = 0 and with σ(0) θ_s(0) = g cos θ(0) when g > 0,
the condition that keeps the fixed end at rest (see doc/formula_errata.md.txt).
"""
import logging
import math
from typing import List, Tuple

import numpy as np
from scipy import integrate
from scipy.linalg import solve_banded

from whipchain.constants import NeumannScheme
from whipchain.datatypes import CFLViolationError, LengthMismatchError, NonFiniteStateError, NumericalFailure, \
    ValidationError, as_readonly_array
from whipchain.whip.classes import ContinuumCurve, GreenTable, unit_grid

logger = logging.getLogger(__name__)

DEFAULT_SCHEME = NeumannScheme.GHOST_POINT


def _grid_kappa(kappa) -> np.ndarray:
    kappa = as_readonly_array(kappa, "kappa")
    if kappa.size < 3:
        raise ValidationError("κ must be sampled on at least m = 2 intervals")
    return kappa


def _bands(kappa: np.ndarray, scheme: NeumannScheme) -> np.ndarray:
    """ Banded storage (l = 1, u = 2) of the operator on u_0..u_{m-1} """
    m = kappa.size - 1
    h2 = (1.0 / m) ** 2
    ab = np.zeros((4, m))
    # ab[2 + i - j, j] = A[i, j]
    ab[2, :] = 2.0 / h2 + kappa[:m] ** 2
    ab[1, 1:] = -1.0 / h2
    ab[3, :-1] = -1.0 / h2
    if scheme == NeumannScheme.GHOST_POINT:
        ab[2, 0] = 1.0 / h2 + 0.5 * kappa[0] ** 2
    else:
        h = 1.0 / m
        ab[2, 0] = -3.0 / (2.0 * h)
        ab[1, 1] = 4.0 / (2.0 * h)
        if m > 2:
            ab[0, 2] = -1.0 / (2.0 * h)
    return ab


def _boundary_rows(forcing: np.ndarray, slope: np.ndarray, scheme: NeumannScheme) -> np.ndarray:
    """
    Right-hand side for interior forcing f_j (rows 0..m-1, any trailing column count) and the
    fixed-end slope σ_s(0), one per column.
    """
    m = forcing.shape[0]
    h = 1.0 / m
    rhs = forcing.copy()
    if scheme == NeumannScheme.GHOST_POINT:
        rhs[0] = 0.5 * forcing[0] - slope / h
    else:
        rhs[0] = slope
    return rhs


def _solve(kappa: np.ndarray, forcing: np.ndarray, slope, scheme: NeumannScheme) -> np.ndarray:
    """ Solve on the unknowns and append the free-end zero """
    rhs = _boundary_rows(forcing, np.asarray(slope, dtype=float), scheme)
    interior = solve_banded((1, 2), _bands(kappa, scheme), rhs)
    if not np.all(np.isfinite(interior)):
        raise NumericalFailure("Continuum operator solve produced non-finite values")
    tail = np.zeros((1,) + interior.shape[1:])
    return np.concatenate([interior, tail])


def green_table(kappa, scheme: NeumannScheme = DEFAULT_SCHEME) -> GreenTable:
    """
    Column k solves -G'' + κ² G = δ(s - s_k) with the delta lumped at node k: weight 1/h in the
    interior and the full unit mass in the half cell at s = 0.
    """
    kappa = _grid_kappa(kappa)
    m = kappa.size - 1
    h = 1.0 / m
    forcing = np.zeros((m, m + 1))
    slope = np.zeros(m + 1)
    if scheme == NeumannScheme.GHOST_POINT:
        forcing[np.arange(m), np.arange(m)] = 1.0 / h
        forcing[0, 0] = 2.0 / h
    else:
        forcing[np.arange(1, m), np.arange(1, m)] = 1.0 / h
        # a source at s = 0 is the jump G_s(0+) - G_s(0-) = -1 with nothing to the left
        slope[0] = -1.0
    logger.debug(f"Green table m={m}, scheme={scheme.value}")
    return GreenTable(matrix=_solve(kappa, forcing, slope, scheme), scheme=scheme)


def green_column(kappa, k: int, scheme: NeumannScheme = DEFAULT_SCHEME) -> np.ndarray:
    """ G(s_j, s_k) for j = 0..m """
    kappa = _grid_kappa(kappa)
    m = kappa.size - 1
    if not 0 <= k <= m:
        raise ValidationError(f"Source index must lie in 0..{m}, got {k}")
    if k == m:
        return np.zeros(m + 1)
    h = 1.0 / m
    forcing = np.zeros(m)
    slope = 0.0
    if scheme == NeumannScheme.GHOST_POINT:
        forcing[k] = (2.0 if k == 0 else 1.0) / h
    elif k == 0:
        slope = -1.0
    else:
        forcing[k] = 1.0 / h
    return _solve(kappa, forcing, slope, scheme)


def analytic_green_constant(s, q, c: float):
    """
    Green function for constant κ = c:
        G(s, q) = cosh(c min(s,q)) sinh(c (1 - max(s,q))) / (c cosh c),   1 - max(s,q) for c = 0
    """
    s, q = np.asarray(s, dtype=float), np.asarray(q, dtype=float)
    low, high = np.minimum(s, q), np.maximum(s, q)
    if c == 0.0:
        return 1.0 - high
    return np.cosh(c * low) * np.sinh(c * (1.0 - high)) / (c * math.cosh(c))


def fixed_end_slope(curve: ContinuumCurve) -> float:
    """ σ_s(0) = g sin θ(0) """
    return curve.g * math.sin(curve.theta[0])


def sigma_solve(curve: ContinuumCurve, scheme: NeumannScheme = DEFAULT_SCHEME) -> np.ndarray:
    kappa = curve.kappa
    return _solve(kappa, curve.theta_t[:-1] ** 2, fixed_end_slope(curve), scheme)


def _derivatives(values: np.ndarray, h: float, left_slope: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    First and second differences: central in the interior, ghost value u_{-1} = u_1 - 2h u_s(0)
    at s = 0 and second-order one-sided at s = 1.
    """
    first = np.empty_like(values)
    second = np.empty_like(values)
    first[1:-1] = (values[2:] - values[:-2]) / (2.0 * h)
    second[1:-1] = (values[2:] - 2.0 * values[1:-1] + values[:-2]) / h ** 2
    first[0] = left_slope
    second[0] = 2.0 * (values[1] - values[0] - h * left_slope) / h ** 2
    first[-1] = (3.0 * values[-1] - 4.0 * values[-2] + values[-3]) / (2.0 * h)
    second[-1] = (2.0 * values[-1] - 5.0 * values[-2] + 4.0 * values[-3] - values[-4]) / h ** 2
    return first, second


def clamp_slope(curve: ContinuumCurve, sigma: np.ndarray) -> float:
    """
    θ_s(0) at the fixed end. Without gravity this is the odd-extension clamp θ_s(0) = 0; with gravity,
    η_tt(0) = 0 forces σ(0) θ_s(0) = g cos θ(0).
    """
    if curve.g == 0.0:
        return 0.0
    if sigma[0] <= 0.0:
        raise NumericalFailure(f"Fixed-end tension σ(0) = {sigma[0]:.3e} is not positive")
    return curve.g * math.cos(curve.theta[0]) / sigma[0]


def continuum_acceleration(curve: ContinuumCurve, scheme: NeumannScheme = DEFAULT_SCHEME) -> np.ndarray:
    """ θ_tt = 2 σ_s θ_s + σ θ_ss on the grid """
    sigma = sigma_solve(curve, scheme)
    sigma_s, _ = _derivatives(sigma, curve.h, fixed_end_slope(curve))
    theta_s, theta_ss = _derivatives(curve.theta, curve.h, clamp_slope(curve, sigma))
    return 2.0 * sigma_s * theta_s + sigma * theta_ss


def continuum_energy(curve: ContinuumCurve) -> Tuple[float, float]:
    """
    (kinetic, potential) = (½∫|η_t|² ds, g∫<η, e_2> ds) with η and η_t rebuilt from θ, θ_t by
    cumulative trapezoid quadrature
    """
    s = curve.s
    cos_t, sin_t = np.cos(curve.theta), np.sin(curve.theta)
    eta_y = integrate.cumulative_trapezoid(sin_t, s, initial=0.0)
    vel_x = integrate.cumulative_trapezoid(-curve.theta_t * sin_t, s, initial=0.0)
    vel_y = integrate.cumulative_trapezoid(curve.theta_t * cos_t, s, initial=0.0)
    kinetic = 0.5 * float(integrate.trapezoid(vel_x ** 2 + vel_y ** 2, s))
    potential = curve.g * float(integrate.trapezoid(eta_y, s))
    return kinetic, potential


def cfl_limit(curve: ContinuumCurve, scheme: NeumannScheme = DEFAULT_SCHEME) -> float:
    """ h / (2 sqrt(max σ)); infinite while the curve carries no tension """
    peak = float(np.max(sigma_solve(curve, scheme)))
    if peak <= 0.0:
        return math.inf
    return curve.h / (2.0 * math.sqrt(peak))


def _rk4(curve: ContinuumCurve, dt: float, scheme: NeumannScheme) -> ContinuumCurve:
    def rates(theta: np.ndarray, theta_t: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return theta_t, continuum_acceleration(curve.with_motion(theta, theta_t), scheme)

    theta, theta_t = curve.theta, curve.theta_t
    k1_t, k1_w = rates(theta, theta_t)
    k2_t, k2_w = rates(theta + 0.5 * dt * k1_t, theta_t + 0.5 * dt * k1_w)
    k3_t, k3_w = rates(theta + 0.5 * dt * k2_t, theta_t + 0.5 * dt * k2_w)
    k4_t, k4_w = rates(theta + dt * k3_t, theta_t + dt * k3_w)
    new_theta = theta + dt / 6.0 * (k1_t + 2.0 * k2_t + 2.0 * k3_t + k4_t)
    new_theta_t = theta_t + dt / 6.0 * (k1_w + 2.0 * k2_w + 2.0 * k3_w + k4_w)
    if not (np.all(np.isfinite(new_theta)) and np.all(np.isfinite(new_theta_t))):
        raise NonFiniteStateError("Continuum RK4 step produced non-finite values")
    return curve.with_motion(new_theta, new_theta_t)


def evolve(curve: ContinuumCurve,
           dt: float,
           T: float,
           sample_every: int = 1,
           scheme: NeumannScheme = DEFAULT_SCHEME) -> List[ContinuumCurve]:
    """
    Method of lines with RK4 in time, σ re-solved at every stage. Returns the samples including
    the initial curve. The CFL bound is checked before every step.
    """
    if not dt > 0.0 or not T > 0.0:
        raise ValidationError(f"dt and T must be positive, got dt={dt}, T={T}")
    if sample_every < 1:
        raise ValidationError(f"sample_every must be >= 1, got {sample_every}")
    steps = max(1, int(round(T / dt)))
    logger.info(f"Evolving m={curve.m}, g={curve.g} for {steps} steps of {dt:g}")
    samples = [curve]
    current = curve
    warned = False
    for step in range(1, steps + 1):
        limit = cfl_limit(current, scheme)
        if dt > limit:
            raise CFLViolationError(f"dt={dt:g} exceeds the CFL bound {limit:.4g} at t={(step - 1) * dt:.6g}")
        if not warned and dt > 0.9 * limit:
            logger.warning(f"dt={dt:g} is within 10% of the CFL bound {limit:.4g}")
            warned = True
        try:
            current = _rk4(current, dt, scheme)
        except NonFiniteStateError as e:
            raise NonFiniteStateError(f"Evolution diverged at step {step} (t={step * dt:.6g}): {e}") from e
        if step % sample_every == 0 or step == steps:
            samples.append(current)
    return samples


def _fields(values, m: int, name: str) -> np.ndarray:
    values = as_readonly_array(values, name, ndim=2)
    if values.shape != (m + 1, 2):
        raise LengthMismatchError(f"'{name}' must have shape ({m + 1}, 2), got {values.shape}")
    return values


def _weights(m: int) -> np.ndarray:
    weights = np.full(m + 1, 1.0 / m)
    weights[[0, -1]] *= 0.5
    return weights


def continuum_curvature(curve: ContinuumCurve, Xp, Yp, table: GreenTable = None) -> float:
    """
    ½ ∬ G(s,q) Σ_{i,j} (X'_i(s) Y'_j(q) - X'_j(q) Y'_i(s))² ds dq by the trapezoid rule in both
    variables. `table` defaults to the Green table of the curve's κ.
    """
    m = curve.m
    Xp, Yp = _fields(Xp, m, "Xp"), _fields(Yp, m, "Yp")
    if table is None:
        table = green_table(curve.kappa)
    wedge = Xp[:, None, :, None] * Yp[None, :, None, :] - Yp[:, None, :, None] * Xp[None, :, None, :]
    integrand = table.matrix * np.sum(wedge ** 2, axis=(2, 3))
    w = _weights(m)
    return 0.5 * float(w @ integrand @ w)


def polarized_curvature(curve: ContinuumCurve, Xp, Yp, Wp, table: GreenTable = None) -> float:
    """ ∬ G(s,q) (|X'(q)|² <Y'(s), W'(s)> - <X'(q), Y'(q)> <X'(s), W'(s)>) ds dq """
    m = curve.m
    Xp, Yp, Wp = _fields(Xp, m, "Xp"), _fields(Yp, m, "Yp"), _fields(Wp, m, "Wp")
    if table is None:
        table = green_table(curve.kappa)
    w = _weights(m)
    xx = np.sum(Xp * Xp, axis=1)
    xy = np.sum(Xp * Yp, axis=1)
    yw = np.sum(Yp * Wp, axis=1)
    xw = np.sum(Xp * Wp, axis=1)
    G = table.matrix
    return float((w * yw) @ G @ (w * xx) - (w * xw) @ G @ (w * xy))


def green_identity_check(kappa, scheme: NeumannScheme = DEFAULT_SCHEME) -> float:
    """
    max_q |G(q,q) - ∫ (G_s² + κ² G²) ds| with central-difference G_s and trapezoid quadrature.
    G_s jumps at s = q, so the residual shrinks like 1/m.
    """
    kappa = _grid_kappa(kappa)
    table = green_table(kappa, scheme)
    s = table.s
    G = table.matrix
    G_s = np.gradient(G, s, axis=0)
    energy = integrate.trapezoid(G_s ** 2 + (kappa ** 2)[:, None] * G ** 2, s, axis=0)
    return float(np.max(np.abs(np.diag(G) - energy)))


def constant_kappa(c: float, m: int) -> np.ndarray:
    return np.full(m + 1, float(c))
