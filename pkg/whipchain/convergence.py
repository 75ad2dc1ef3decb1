"""
Discrete-to-continuum verification: truncation residuals of the scaled chain equations,
refinement studies of chain runs, and tension / acceleration comparisons.

Under θ_k = θ(k/n) and λ_k = n² σ(k/n) the chain equations read
    n² σ(x+h) sin(θ(x+h) - θ(x)) - n² σ(x-h) sin(θ(x) - θ(x-h))  ≈  σ θ'' + 2 σ' θ'
    -n² cos(Δ+) σ(x+h) + 2 n² σ(x) - n² cos(Δ-) σ(x-h)            ≈  θ'² σ - σ''
with h = 1/n and remainders governed by the C⁴ norms of θ and σ.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.polynomial import Polynomial

from whipchain.chain.classes import ChainState
from whipchain.chain.dynamics import acceleration, simulate
from whipchain.chain.tension import tension
from whipchain.constants import ROUNDING_ERROR_FLOOR, StudyReference
from whipchain.datatypes import Serializable, ValidationError, require_fields
from whipchain.utils import observed_order, parallel_map, write_csv
from whipchain.whip.classes import ContinuumCurve
from whipchain.whip.continuum import continuum_acceleration, evolve, sigma_solve
from whipchain.whip.profiles import ProfileSpec, chain_from_profile, curve_from_profile

logger = logging.getLogger(__name__)

ScalarField = Callable[[np.ndarray], np.ndarray]


@dataclass
class AnalyticProfile:
    """ A closed-form function of s with its first two derivatives """
    value: ScalarField
    first: ScalarField
    second: ScalarField

    @classmethod
    def polynomial(cls, coefficients: Sequence[float]) -> "AnalyticProfile":
        """ Coefficients in increasing degree """
        p = Polynomial(coefficients)
        return cls(value=p, first=p.deriv(1), second=p.deriv(2))

    @classmethod
    def sine(cls, amplitude: float = 1.0, frequency: float = 1.0, phase: float = 0.0,
             offset: float = 0.0) -> "AnalyticProfile":
        """ offset + amplitude sin(π frequency s + phase) """
        w = math.pi * frequency
        return cls(value=lambda s: offset + amplitude * np.sin(w * s + phase),
                   first=lambda s: amplitude * w * np.cos(w * s + phase),
                   second=lambda s: -amplitude * w * w * np.sin(w * s + phase))

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "AnalyticProfile":
        kind = data.get("type", "polynomial")
        if kind == "polynomial":
            require_fields(data, cls.__name__, "coefficients")
            return cls.polynomial([float(c) for c in data["coefficients"]])
        if kind == "sine":
            return cls.sine(amplitude=float(data.get("amplitude", 1.0)),
                            frequency=float(data.get("frequency", 1.0)),
                            phase=float(data.get("phase", 0.0)),
                            offset=float(data.get("offset", 0.0)))
        raise ValidationError(f"Unknown analytic profile type '{kind}'")


@dataclass
class RefinementReport(Serializable):
    """ (resolution, error) levels and the least-squares order of error against resolution """
    levels: List[Tuple[float, float]]
    observed_order: float = float("nan")
    label: str = ""
    reference: str = StudyReference.FINEST.value
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if len(self.levels) < 3:
            raise ValidationError(f"A refinement report needs at least 3 levels, got {len(self.levels)}")
        if any(not error >= 0.0 for _, error in self.levels):
            raise ValidationError("Refinement errors must be finite and nonnegative")

    @classmethod
    def from_levels(cls, resolutions: Sequence[float], errors: Sequence[float], **kwargs) -> "RefinementReport":
        levels = [(float(r), float(e)) for r, e in zip(resolutions, errors)]
        order = float("nan")
        if any(e <= ROUNDING_ERROR_FLOOR for e in errors):
            logger.warning("Refinement errors reached rounding level; observed order is undefined")
        else:
            order = observed_order(resolutions, errors)
        return cls(levels=levels, observed_order=order, **kwargs)

    @property
    def resolutions(self) -> np.ndarray:
        return np.array([r for r, _ in self.levels])

    @property
    def errors(self) -> np.ndarray:
        return np.array([e for _, e in self.levels])

    @property
    def exact(self) -> bool:
        return bool(np.all(self.errors <= ROUNDING_ERROR_FLOOR))

    def meets(self, threshold: float) -> bool:
        """ True when every level is exact to rounding or the observed order reaches `threshold` """
        return self.exact or (not math.isnan(self.observed_order) and self.observed_order >= threshold)

    def to_csv(self, file_path: str):
        write_csv(file_path, ["resolution", "error"], [self.resolutions, self.errors])

    def __str__(self):
        return f"RefinementReport {self.label} ({len(self.levels)} levels, order {self.observed_order:.3f})"


def truncation_residual(theta: AnalyticProfile, sigma: AnalyticProfile, n: int) -> Tuple[float, float]:
    """
    Max-norm residuals of the scaled evolution and tension equations at x = k/n, k = 1..n-1
    """
    if n < 2:
        raise ValidationError(f"n must be >= 2, got {n}")
    h = 1.0 / n
    x = np.arange(1, n) * h
    t_mid, t_up, t_down = theta.value(x), theta.value(x + h), theta.value(x - h)
    s_mid, s_up, s_down = sigma.value(x), sigma.value(x + h), sigma.value(x - h)
    forward, backward = t_up - t_mid, t_mid - t_down
    n2 = float(n * n)

    evol = n2 * s_up * np.sin(forward) - n2 * s_down * np.sin(backward)
    evol_exact = sigma.value(x) * theta.second(x) + 2.0 * sigma.first(x) * theta.first(x)
    tens = -n2 * np.cos(forward) * s_up + 2.0 * n2 * s_mid - n2 * np.cos(backward) * s_down
    tens_exact = theta.first(x) ** 2 * s_mid - sigma.second(x)
    return float(np.max(np.abs(evol - evol_exact))), float(np.max(np.abs(tens - tens_exact)))


def truncation_study(theta: AnalyticProfile, sigma: AnalyticProfile,
                     n_list: Sequence[int]) -> Tuple[RefinementReport, RefinementReport]:
    residuals = [truncation_residual(theta, sigma, n) for n in n_list]
    evol = RefinementReport.from_levels(n_list, [r[0] for r in residuals], label="evolution truncation")
    tens = RefinementReport.from_levels(n_list, [r[1] for r in residuals], label="tension truncation")
    return evol, tens


def default_dt_rule(n: int) -> float:
    return min(1e-3, 0.2 / n)


def _fitted_dt(T: float, dt: float) -> float:
    """ Largest step not above dt that divides T evenly """
    return T / math.ceil(T / dt - 1e-12)


def _chain_final_angles(profile: ProfileSpec, n: int, T: float, dt_rule: Callable[[int], float]) -> np.ndarray:
    state = chain_from_profile(profile, n)
    dt = _fitted_dt(T, dt_rule(n))
    trajectory = simulate(state, dt, T, sample_every=max(1, int(round(T / dt))))
    return trajectory.final_state.theta


def refinement_study(profile: ProfileSpec,
                     n_list: Sequence[int],
                     T: float,
                     dt_rule: Callable[[int], float] = default_dt_rule,
                     reference: StudyReference = StudyReference.FINEST,
                     m: Optional[int] = None) -> RefinementReport:
    """
    Run the chain from the sampled profile at every n and measure the max angle error at time T on
    the common points s = k/n, either against the finest n or against the continuum evolved at m.
    """
    n_list = sorted(int(n) for n in n_list)
    if not T > 0.0:
        raise ValidationError(f"T must be positive, got {T}")
    if reference == StudyReference.FINEST and any(n_list[-1] % n for n in n_list):
        raise ValidationError(f"Every level must divide the finest level {n_list[-1]}")
    finals = parallel_map(lambda n: _chain_final_angles(profile, n, T, dt_rule), n_list)

    if reference == StudyReference.FINEST:
        finest, reference_angles = n_list[-1], finals[-1]
        levels, errors = [], []
        for n, angles in zip(n_list[:-1], finals[:-1]):
            ratio = finest // n
            errors.append(float(np.max(np.abs(angles - reference_angles[ratio - 1::ratio]))))
            levels.append(n)
    else:
        if m is None:
            m = int(np.lcm.reduce(n_list))
        if any(m % n for n in n_list):
            raise ValidationError(f"m={m} must be a multiple of every n")
        curve = curve_from_profile(profile, m)
        final_curve = evolve(curve, _fitted_dt(T, dt_rule(m)), T, sample_every=10 ** 9)[-1]
        levels, errors = list(n_list), []
        for n, angles in zip(n_list, finals):
            ratio = m // n
            errors.append(float(np.max(np.abs(angles - final_curve.theta[ratio::ratio]))))
    report = RefinementReport.from_levels(levels, errors, label="chain refinement", reference=reference.value,
                                          metadata={"T": T, "n_list": n_list})
    logger.info(f"{report}")
    return report


SigmaSource = Union[Callable[[np.ndarray], np.ndarray], ContinuumCurve, np.ndarray]


def _sample(source, s: np.ndarray) -> np.ndarray:
    if isinstance(source, ContinuumCurve):
        return np.interp(s, source.s, sigma_solve(source))
    if callable(source):
        return np.asarray(source(s), dtype=float) * np.ones_like(s)
    values = np.asarray(source, dtype=float)
    return np.interp(s, np.linspace(0.0, 1.0, values.size), values)


def tension_comparison(state: ChainState, sigma: SigmaSource) -> float:
    """ max_k |λ_k / n² - σ(k/n)|; σ may be a callable, grid values on [0, 1] or a curve to solve on """
    s = np.arange(1, state.n + 1) / state.n
    return float(np.max(np.abs(tension(state).sigma - _sample(sigma, s))))


def acceleration_comparison(state: ChainState, curve: ContinuumCurve, interior: float = 0.0) -> float:
    """
    max_k |θ''_k - θ_tt(k/n)| over links with k/n >= interior. The chain's fixed end acts half a link
    in from s = 0, so the first few links carry an O(1) mismatch on sampled data.
    """
    s = np.arange(1, state.n + 1) / state.n
    chain = acceleration(state)
    whip = np.interp(s, curve.s, continuum_acceleration(curve))
    mask = s >= interior
    if not np.any(mask):
        raise ValidationError(f"No link lies beyond s={interior}")
    return float(np.max(np.abs(chain - whip)[mask]))


def comparison_study(profile: ProfileSpec, n_list: Sequence[int], m: int,
                     interior: float = 0.0) -> Tuple[RefinementReport, RefinementReport]:
    """ Tension and acceleration of the sampled chain against the continuum on the same profile """
    curve = curve_from_profile(profile, m)
    states = [chain_from_profile(profile, n) for n in n_list]
    tensions = [tension_comparison(state, curve) for state in states]
    accelerations = [acceleration_comparison(state, curve, interior) for state in states]
    return (RefinementReport.from_levels(n_list, tensions, label="tension"),
            RefinementReport.from_levels(n_list, accelerations, label="acceleration"))
