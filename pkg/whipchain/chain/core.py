"""
Cartesian reconstruction, energies and conserved quantities of the discrete chain
"""
import logging
from typing import Optional, Tuple

import numpy as np

from whipchain.chain.classes import CartesianFrame, ChainState
from whipchain.constants import RANDOM_ANGLE_MARGIN
from whipchain.datatypes import LengthMismatchError
from whipchain.utils import planar_cross

logger = logging.getLogger(__name__)


def link_directions(theta: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """ Unit tangents (cos θ, sin θ) and unit normals (-sin θ, cos θ), one row per link """
    cos_t, sin_t = np.cos(theta), np.sin(theta)
    return np.column_stack([cos_t, sin_t]), np.column_stack([-sin_t, cos_t])


def reconstruct(state: ChainState) -> CartesianFrame:
    """
    x_i = x_{i-1} + (1/n)(cos θ_i, sin θ_i) and v_i = v_{i-1} + (1/n) ω_i (-sin θ_i, cos θ_i),
    starting from x_0 = v_0 = 0
    """
    tangents, normals = link_directions(state.theta)
    h = state.link_length
    positions = np.zeros((state.n + 1, 2))
    velocities = np.zeros((state.n + 1, 2))
    positions[1:] = np.cumsum(h * tangents, axis=0)
    velocities[1:] = np.cumsum(h * state.omega[:, None] * normals, axis=0)
    return CartesianFrame(positions=positions, velocities=velocities)


def energy(state: ChainState) -> Tuple[float, float]:
    """ (kinetic, potential) for unit point masses at x_1..x_n; gravity pulls toward -e_2 """
    frame = reconstruct(state)
    kinetic = 0.5 * float(np.sum(frame.velocities[1:] ** 2))
    potential = state.g * float(np.sum(frame.positions[1:, 1]))
    return kinetic, potential


def total_energy(state: ChainState) -> float:
    kinetic, potential = energy(state)
    return kinetic + potential


def angular_momentum(state: ChainState) -> float:
    frame = reconstruct(state)
    return float(np.sum(planar_cross(frame.positions[1:], frame.velocities[1:])))


def _suffix_sums(rows: np.ndarray) -> np.ndarray:
    """ Row j holds sum_{i >= j} rows[i] """
    return np.cumsum(rows[::-1], axis=0)[::-1]


def energy_gradient(state: ChainState) -> Tuple[np.ndarray, np.ndarray]:
    """
    (∂E/∂θ, ∂E/∂ω) of the total energy. With V_j = sum_{i>=j} v_i:
        ∂K/∂ω_j = h <ν_j, V_j>,   ∂K/∂θ_j = -h ω_j <t_j, V_j>,   ∂U/∂θ_j = g h (n - j + 1) cos θ_j
    """
    tangents, normals = link_directions(state.theta)
    h = state.link_length
    V = _suffix_sums(reconstruct(state).velocities[1:])
    weights = np.arange(state.n, 0, -1)
    d_omega = h * np.sum(normals * V, axis=1)
    d_theta = -h * state.omega * np.sum(tangents * V, axis=1) + state.g * h * weights * np.cos(state.theta)
    return d_theta, d_omega


def angular_momentum_gradient(state: ChainState) -> Tuple[np.ndarray, np.ndarray]:
    """
    (∂L/∂θ, ∂L/∂ω). With X_j, V_j the suffix sums of positions and velocities:
        ∂L/∂ω_j = h X_j × ν_j,   ∂L/∂θ_j = h ν_j × V_j - h ω_j X_j × t_j
    """
    tangents, normals = link_directions(state.theta)
    h = state.link_length
    frame = reconstruct(state)
    X, V = _suffix_sums(frame.positions[1:]), _suffix_sums(frame.velocities[1:])
    d_omega = h * planar_cross(X, normals)
    d_theta = h * planar_cross(normals, V) - h * state.omega * planar_cross(X, tangents)
    return d_theta, d_omega


def constraint_residual(frame: CartesianFrame) -> float:
    """ max_i | |x_i - x_{i-1}|² - 1/n² | """
    if frame.positions.shape != frame.velocities.shape:
        raise LengthMismatchError(f"Frame has {frame.positions.shape[0]} positions "
                                  f"but {frame.velocities.shape[0]} velocities")
    n = frame.n
    if n < 1:
        return 0.0
    links = np.diff(frame.positions, axis=0)
    return float(np.max(np.abs(np.sum(links ** 2, axis=1) - 1.0 / n ** 2)))


def velocity_residual(frame: CartesianFrame) -> float:
    """ max_i |<v_i - v_{i-1}, x_i - x_{i-1}>|, the differentiated rod constraint """
    if frame.positions.shape != frame.velocities.shape:
        raise LengthMismatchError("positions and velocities differ in length")
    if frame.n < 1:
        return 0.0
    return float(np.max(np.abs(np.sum(np.diff(frame.velocities, axis=0) * np.diff(frame.positions, axis=0), axis=1))))


def rotate(state: ChainState, angle: float) -> ChainState:
    """ Rigidly rotate the whole chain about the fixed end """
    return state.with_motion(state.theta + angle, state.omega)


def random_state(n: int,
                 rng: np.random.Generator,
                 spread: float = np.pi / 2 - RANDOM_ANGLE_MARGIN,
                 omega_scale: float = 1.0,
                 g: float = 0.0,
                 first_angle: Optional[float] = None) -> ChainState:
    """
    Random chain with consecutive angle differences uniform in [-spread, spread].
    The default spread keeps every a_i = cos(θ_{i+1} - θ_i) positive.
    """
    if first_angle is None:
        first_angle = rng.uniform(-np.pi, np.pi)
    steps = rng.uniform(-spread, spread, size=n - 1)
    theta = first_angle + np.concatenate([[0.0], np.cumsum(steps)])
    omega = rng.normal(scale=omega_scale, size=n)
    return ChainState(theta=theta, omega=omega, g=g)
