"""
Time evolution of the chain in angle coordinates.

    θ''_i = λ_{i+1} sin(θ_{i+1} - θ_i) - λ_{i-1} sin(θ_i - θ_{i-1}),   2 <= i <= n, λ_{n+1} = 0
    θ''_1 = λ_2 sin(θ_2 - θ_1) - n g cos θ_1

with λ re-solved from the tension system at every evaluation. Working in θ keeps the rod
lengths exact, so the integrator is plain explicit RK4.
"""
import logging
import math
from typing import Optional, Tuple

import numpy as np
from scipy import integrate

from whipchain.chain.classes import ChainState, Trajectory
from whipchain.chain.core import angular_momentum, energy, link_directions, reconstruct
from whipchain.chain.tension import tension
from whipchain.datatypes import NonFiniteStateError, ValidationError

logger = logging.getLogger(__name__)


def _acceleration_with_tension(state: ChainState) -> Tuple[np.ndarray, np.ndarray]:
    lam = tension(state).lam
    sin_d = np.sin(np.diff(state.theta))
    acc = np.zeros(state.n)
    # λ_{i+1} sin(θ_{i+1} - θ_i) for i < n
    acc[:-1] += lam[1:] * sin_d
    # -λ_{i-1} sin(θ_i - θ_{i-1}) for i >= 2
    acc[1:] -= lam[:-1] * sin_d
    acc[0] -= state.n * state.g * math.cos(state.theta[0])
    return acc, lam


def acceleration(state: ChainState) -> np.ndarray:
    return _acceleration_with_tension(state)[0]


def cartesian_residual(state: ChainState) -> float:
    """
    Compare with the point-mass form ẍ_i = -g e_2 + λ_{i+1}(x_{i+1} - x_i) + λ_i(x_{i-1} - x_i),
    where ẍ_i comes from differentiating the reconstruction twice.
    """
    acc, lam = _acceleration_with_tension(state)
    tangents, normals = link_directions(state.theta)
    h = state.link_length
    link_acc = h * (acc[:, None] * normals - (state.omega ** 2)[:, None] * tangents)
    point_acc = np.cumsum(link_acc, axis=0)

    x = reconstruct(state).positions
    lam_padded = np.append(lam, 0.0)
    forward = np.vstack([np.diff(x, axis=0)[1:], np.zeros((1, 2))])  # x_{i+1} - x_i, zero past the free end
    backward = x[:-1] - x[1:]  # x_{i-1} - x_i
    force = lam_padded[1:, None] * forward + lam[:, None] * backward
    force[:, 1] -= state.g
    return float(np.max(np.linalg.norm(point_acc - force, axis=1)))


def step_rk4(state: ChainState, dt: float) -> ChainState:
    if not dt > 0.0:
        raise ValidationError(f"Time step must be positive, got {dt}")
    theta, omega = state.theta, state.omega

    def rates(t_theta: np.ndarray, t_omega: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return t_omega, acceleration(state.with_motion(t_theta, t_omega))

    k1_t, k1_w = rates(theta, omega)
    k2_t, k2_w = rates(theta + 0.5 * dt * k1_t, omega + 0.5 * dt * k1_w)
    k3_t, k3_w = rates(theta + 0.5 * dt * k2_t, omega + 0.5 * dt * k2_w)
    k4_t, k4_w = rates(theta + dt * k3_t, omega + dt * k3_w)
    new_theta = theta + dt / 6.0 * (k1_t + 2.0 * k2_t + 2.0 * k3_t + k4_t)
    new_omega = omega + dt / 6.0 * (k1_w + 2.0 * k2_w + 2.0 * k3_w + k4_w)
    if not (np.all(np.isfinite(new_theta)) and np.all(np.isfinite(new_omega))):
        raise NonFiniteStateError("RK4 step produced non-finite angles or rates")
    return state.with_motion(new_theta, new_omega)


def suggested_dt(n: int) -> float:
    """ Advisory step 1e-3 * 50 / n: the fastest modes scale with n since λ ~ n² σ """
    return 1e-3 * 50.0 / n


def _diagnostics(state: ChainState) -> Tuple[float, float, float, float]:
    kinetic, potential = energy(state)
    return kinetic, potential, angular_momentum(state), float(tension(state).lam.min())


def simulate(state: ChainState, dt: float, T: float, sample_every: int = 1) -> Trajectory:
    """ Repeated `step_rk4` from t = 0 to T, sampling diagnostics every `sample_every` steps """
    if not dt > 0.0 or not T > 0.0:
        raise ValidationError(f"dt and T must be positive, got dt={dt}, T={T}")
    if sample_every < 1:
        raise ValidationError(f"sample_every must be >= 1, got {sample_every}")
    steps = max(1, int(round(T / dt)))
    logger.info(f"Simulating n={state.n}, g={state.g} for {steps} steps of {dt:g}")

    times, states, diagnostics = [0.0], [state], [_diagnostics(state)]
    current = state
    for step in range(1, steps + 1):
        try:
            current = step_rk4(current, dt)
        except NonFiniteStateError as e:
            raise NonFiniteStateError(f"Simulation diverged at step {step} (t={step * dt:.6g}): {e}") from e
        if step % sample_every == 0 or step == steps:
            times.append(step * dt)
            states.append(current)
            diagnostics.append(_diagnostics(current))
    kinetic, potential, momentum, min_tension = (np.array(column) for column in zip(*diagnostics))
    return Trajectory(times=np.array(times), states=states, kinetic=kinetic, potential=potential,
                      angular_momentum=momentum, min_tension=min_tension)


def elliptic_period(theta0: float, g: float) -> float:
    """
    Period of the single-link chain released at rest from θ0, by quadrature of the complete
    elliptic integral K(k) with k = sin(φ0 / 2), φ0 = θ0 + π/2 the swing amplitude from hanging.
    """
    if not g > 0.0:
        raise ValidationError("The pendulum period needs g > 0")
    k = math.sin(0.5 * (theta0 + 0.5 * math.pi))
    if abs(k) >= 1.0:
        raise ValidationError("Released from the inverted position the chain never swings back")
    value, _ = integrate.quad(lambda psi: 1.0 / math.sqrt(1.0 - (k * math.sin(psi)) ** 2), 0.0, 0.5 * math.pi,
                              epsabs=1e-14, epsrel=1e-14)
    return 4.0 * value / math.sqrt(g)


def pendulum_period(theta0: float, g: float, dt: float, max_time: Optional[float] = None) -> float:
    """
    Simulated period of the n = 1 chain released at rest from θ0: twice the time until ω next
    changes sign, with the crossing located by linear interpolation.
    """
    if max_time is None:
        max_time = 2.0 * elliptic_period(theta0, g)
    state = ChainState(theta=[theta0], omega=[0.0], g=g)
    previous = step_rk4(state, dt)
    t = dt
    while t < max_time:
        current = step_rk4(previous, dt)
        w0, w1 = previous.omega[0], current.omega[0]
        if w0 != 0.0 and w0 * w1 <= 0.0:
            crossing = t + dt * w0 / (w0 - w1)
            return 2.0 * crossing
        previous, t = current, t + dt
    raise ValidationError(f"No half swing completed within t={max_time}")
