"""
Riccati shadow of the elimination pivots, kinked Green functions and negative-tension probes.

The pivots of the tension matrix follow b_i ≈ 1 + f(i/n)/n with f' = κ² - f², f(0) = 0. Across a
kink at s_o the pivot map ε -> ε/(1+ε) sends f to +∞ from the right, so f restarts at
f(s_o + ε) = 1/ε with ε one grid cell, which reproduces 1/(s - s_o) for κ = 0.
"""
import logging
import math
from typing import Callable, List, Optional, Sequence

import numpy as np
from scipy import integrate

from whipchain.chain.classes import ChainState
from whipchain.chain.dynamics import step_rk4
from whipchain.chain.tension import assemble, closed_form_inverse, elimination_pivots, tension
from whipchain.constants import INDEX_OFFSET, NEGATIVE_TENSION_THRESHOLD
from whipchain.datatypes import NumericalFailure, ValidationError, as_readonly_array
from whipchain.utils import parallel_map
from whipchain.whip.classes import KinkGreenSample, KinkSpec, NegativeTensionEvent, unit_grid
from whipchain.whip.profiles import ProfileSpec, chain_from_profile

logger = logging.getLogger(__name__)

# cells are split so that h |f| per substep stays below this
RICCATI_STEP_FRACTION = 0.025


def kink_nodes(kinks: Sequence[KinkSpec], m: int) -> List[int]:
    """ Grid nodes the kinks snap to, checked to be distinct """
    nodes = [kink.snapped(m) for kink in sorted(kinks, key=lambda k: k.s_o)]
    if len(set(nodes)) != len(nodes):
        raise ValidationError(f"Kinks collapse onto the same node at m={m}")
    return nodes


def _riccati_cell(f: float, s: float, h: float, kappa_sq: Callable[[float], float], substeps: int) -> float:
    count = max(substeps, int(math.ceil(abs(f) * h / RICCATI_STEP_FRACTION)))
    dt = h / count

    def rate(t, value):
        return kappa_sq(t) - value * value

    for i in range(count):
        t = s + i * dt
        k1 = rate(t, f)
        k2 = rate(t + 0.5 * dt, f + 0.5 * dt * k1)
        k3 = rate(t + 0.5 * dt, f + 0.5 * dt * k2)
        k4 = rate(t + dt, f + dt * k3)
        f += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return f


def riccati_solve(kappa, kinks: Sequence[KinkSpec] = (), substeps: int = 2) -> np.ndarray:
    """
    f on s_j = j/m for κ sampled on the same grid (κ² is interpolated linearly between nodes).
    Kink nodes hold +inf; integration resumes at the next node with f = 1/h.
    """
    kappa = as_readonly_array(kappa, "kappa")
    m = kappa.size - 1
    if m < 2:
        raise ValidationError("Riccati grid needs m >= 2")
    h = 1.0 / m
    s = unit_grid(m)
    kappa_sq = kappa ** 2

    def interpolated(t: float) -> float:
        return float(np.interp(t, s, kappa_sq))

    blowups = set(kink_nodes(kinks, m))
    f = np.zeros(m + 1)
    for j in range(m):
        if j in blowups:
            f[j] = math.inf
            f[j + 1] = 1.0 / h
            continue
        if j + 1 in blowups:
            continue
        f[j + 1] = _riccati_cell(f[j], s[j], h, interpolated, substeps)
    for node in blowups:
        f[node] = math.inf
    return f


def chain_kappa(state: ChainState, kinks: Sequence[KinkSpec] = ()) -> np.ndarray:
    """
    κ at s_j = j/n estimated from the chain: n (θ_{j+1} - θ_j) at the midpoints with kink jumps removed,
    interpolated onto the nodes
    """
    n = state.n
    if n < 2:
        return np.zeros(n + 1)
    jumps = np.diff(state.theta)
    for kink, node in zip(sorted(kinks, key=lambda k: k.s_o), kink_nodes(kinks, n)):
        jumps[node - 1] -= kink.alpha
    midpoints = (np.arange(1, n) + 0.5) / n
    return np.interp(unit_grid(n), midpoints, n * jumps)


def pivot_residuals(state: ChainState, kinks: Sequence[KinkSpec] = (), kappa=None) -> np.ndarray:
    """ |b_i - 1 - f(i/n)/n| for i = 1..n, NaN where f is infinite """
    op, _ = assemble(state)
    pivots = elimination_pivots(op)
    if kappa is None:
        kappa = chain_kappa(state, kinks)
    f = riccati_solve(kappa, kinks)
    m = f.size - 1
    if m != state.n:
        f = np.interp(np.arange(1, state.n + 1) / state.n, unit_grid(m), f)
        approx = f
    else:
        approx = f[1:]
    with np.errstate(invalid="ignore"):
        residual = np.abs(pivots - 1.0 - approx / state.n)
    residual[~np.isfinite(approx)] = np.nan
    return residual


def pivot_approximation_residual(state: ChainState,
                                 kinks: Sequence[KinkSpec] = (),
                                 exclude: int = 2,
                                 kappa=None) -> float:
    """ max_i |b_i - 1 - f(i/n)/n| skipping links within `exclude` cells of a kink """
    residual = pivot_residuals(state, kinks, kappa)
    mask = np.isfinite(residual)
    index = np.arange(1, state.n + 1)
    for node in kink_nodes(kinks, state.n):
        mask &= np.abs(index - node) > exclude
    if not np.any(mask):
        raise ValidationError("Every link lies within the excluded band around a kink")
    return float(np.max(residual[mask]))


def _phi(x: float, s: np.ndarray, kinks: Sequence[KinkSpec], positions: Sequence[float]) -> np.ndarray:
    """ Product of cos α over the kinks with x < s_o < s """
    result = np.ones_like(s)
    for kink, s_o in zip(kinks, positions):
        if x < s_o:
            result = np.where(s > s_o, result * math.cos(kink.alpha), result)
    return result


def kink_green(x: float, y: float, kappa, kinks: Sequence[KinkSpec] = ()) -> float:
    """
    G(x,y) = ∫_{max(x,y)}^1 φ(x,s) φ(y,s) exp(-∫_x^s f) exp(-∫_y^s f) ds

    f comes from `riccati_solve`; the diverging part of ∫f next to a kink is cut off one grid cell
    past s_o, so the value for pairs separated by a kink decays like that cell width.
    """
    for name, value in (("x", x), ("y", y)):
        if not 0.0 <= value <= 1.0:
            raise ValidationError(f"'{name}' must lie in [0, 1], got {value}")
    kinks = sorted(kinks, key=lambda k: k.s_o)
    f = riccati_solve(kappa, kinks)
    m = f.size - 1
    h = 1.0 / m
    s = unit_grid(m)
    nodes = kink_nodes(kinks, m)
    positions = [s[node] for node in nodes]

    cells = 0.5 * h * (f[:-1] + f[1:])
    for node in nodes:
        # left of the kink: hold the last finite value; right of it: truncated
        cells[node - 1] = h * f[node - 1]
        cells[node] = 0.0
    F = np.concatenate([[0.0], np.cumsum(cells)])

    start = max(x, y)
    tail = s[s > start]
    points = np.concatenate([[start], tail])
    if points.size < 2:
        return 0.0
    F_points = np.interp(points, s, F)
    F_x, F_y = np.interp(x, s, F), np.interp(y, s, F)
    integrand = (_phi(x, points, kinks, positions) * _phi(y, points, kinks, positions)
                 * np.exp(-(F_points - F_x)) * np.exp(-(F_points - F_y)))
    return float(integrate.trapezoid(integrand, points))


def kink_green_trend(x: float,
                     y: float,
                     kappa: Callable[[np.ndarray], np.ndarray],
                     kinks: Sequence[KinkSpec],
                     m_list: Sequence[int]) -> List[KinkGreenSample]:
    """ kink_green at each m with κ = kappa(s_j); `truncated` marks pairs whose path crosses a kink """
    low = min(x, y)
    crossing = any(kink.s_o > low for kink in kinks)
    if crossing:
        logger.warning("Kink truncation in effect: ∫f diverges across a kink and is cut off one cell past it")

    def evaluate(m: int) -> KinkGreenSample:
        value = kink_green(x, y, kappa(unit_grid(m)), kinks)
        return KinkGreenSample(m=m, epsilon=1.0 / m, value=value, truncated=crossing)

    return parallel_map(evaluate, m_list)


def discrete_green_limit(profile: ProfileSpec, x: float, y: float, n_list: Sequence[int]) -> List[float]:
    """ (1/n) M^{ij} with i = ⌊nx⌋, j = ⌊ny⌋ (1-based) for each n """
    if not (0.0 < x <= 1.0 and 0.0 < y <= 1.0):
        raise ValidationError(f"x and y must lie in (0, 1], got {x}, {y}")
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ValidationError("n_list must be increasing")

    def evaluate(n: int) -> float:
        i, j = int(math.floor(n * x)), int(math.floor(n * y))
        if i < 1 or j < 1:
            raise ValidationError(f"n={n} is too coarse to resolve x={x}, y={y}")
        op, _ = assemble(chain_from_profile(profile, n))
        inverse = closed_form_inverse(op)
        return float(inverse[i - INDEX_OFFSET, j - INDEX_OFFSET] / n)

    return parallel_map(evaluate, n_list)


def gravity_negative_tension_probe(theta1: float, n: int) -> float:
    """
    λ_1 of a straight chain at rest at angle θ_1 with g = 1, which equals -n g M^{11} sin θ_1.
    Raises when the sign disagrees with -sin θ_1.
    """
    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n}")
    state = ChainState.straight(n, theta1, g=1.0)
    lam_1 = float(tension(state).lam[0])
    op, _ = assemble(state)
    expected = -n * state.g * closed_form_inverse(op)[0, 0] * math.sin(theta1)
    if abs(lam_1 - expected) > 1e-10 * max(1.0, abs(expected)):
        raise NumericalFailure(f"λ_1 = {lam_1!r} disagrees with -n g M^11 sin θ_1 = {expected!r}")
    if abs(lam_1) > 1e-12 and np.sign(lam_1) != -np.sign(math.sin(theta1)):
        raise NumericalFailure(f"λ_1 = {lam_1!r} has the sign of sin θ_1 = {math.sin(theta1)!r}")
    return lam_1


def first_negative_tension(state: ChainState, dt: float, T: float) -> Optional[NegativeTensionEvent]:
    """ Step the chain until some λ_i drops below the negativity threshold; None if it never does """
    steps = max(1, int(round(T / dt)))
    current = state
    for step in range(steps + 1):
        lam = tension(current).lam
        link = int(np.argmin(lam))
        if lam[link] < NEGATIVE_TENSION_THRESHOLD:
            logger.info(f"Tension of link {link + INDEX_OFFSET} turned negative at t={step * dt:.6g}")
            return NegativeTensionEvent(time=step * dt, step=step, link=link + INDEX_OFFSET, tension=float(lam[link]))
        if step < steps:
            current = step_rk4(current, dt)
    return None
