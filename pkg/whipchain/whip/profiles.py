"""
Initial-data profiles shared by the chain and the whip.

A profile document looks like
    {"type": "sine", "angle": -1.5708, "amplitude": 0.1, "frequency": 1, "phase": 1.5708,
     "omega": 0.0, "g": 9.8, "kinks": [{"s_o": 0.5, "alpha": 1.0472}]}
with θ(s) = angle + amplitude sin(π frequency s + phase) for "sine", θ(s) = angle for
"straight", and a cubic spline through uniformly spaced "values" for "custom".
θ_t(s) = omega throughout.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional

import numpy as np
from scipy.interpolate import CubicSpline

from whipchain.chain.classes import ChainState
from whipchain.constants import ProfileType
from whipchain.datatypes import Serializable, ValidationError
from whipchain.whip.classes import ContinuumCurve, KinkSpec, unit_grid

logger = logging.getLogger(__name__)


@dataclass
class ProfileSpec(Serializable):
    type: ProfileType = ProfileType.STRAIGHT
    angle: float = 0.0
    amplitude: float = 1.0
    frequency: float = 1.0
    phase: float = 0.0
    values: Optional[List[float]] = None
    omega: float = 0.0
    g: float = 0.0
    kinks: List[KinkSpec] = field(default_factory=list)

    def __post_init__(self):
        if self.type == ProfileType.CUSTOM and (not self.values or len(self.values) < 2):
            raise ValidationError("A custom profile needs at least two 'values'")
        if self.g < 0.0:
            raise ValidationError(f"Gravity must be >= 0, got {self.g}")
        self.kinks = sorted(self.kinks, key=lambda k: k.s_o)
        positions = [k.s_o for k in self.kinks]
        if len(set(positions)) != len(positions):
            raise ValidationError("Kink positions must be distinct")
        self._spline = CubicSpline(unit_grid(len(self.values) - 1), self.values) if self.values else None

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ProfileSpec":
        try:
            profile_type = ProfileType(data.get("type", ProfileType.STRAIGHT.value))
        except ValueError:
            raise ValidationError(f"Unknown profile type '{data.get('type')}'")
        return cls(type=profile_type,
                   angle=float(data.get("angle", 0.0)),
                   amplitude=float(data.get("amplitude", 1.0)),
                   frequency=float(data.get("frequency", 1.0)),
                   phase=float(data.get("phase", 0.0)),
                   values=[float(v) for v in data["values"]] if "values" in data else None,
                   omega=float(data.get("omega", 0.0)),
                   g=float(data.get("g", 0.0)),
                   kinks=[KinkSpec.from_dict(k) for k in data.get("kinks", [])])

    def to_dict(self) -> Dict[str, Any]:
        result = super().to_dict()
        result["type"] = self.type.value
        return result

    @classmethod
    def sine(cls, amplitude: float = 1.0, **kwargs) -> "ProfileSpec":
        return cls(type=ProfileType.SINE, amplitude=amplitude, **kwargs)

    def smooth_theta(self) -> Callable[[np.ndarray], np.ndarray]:
        """ θ(s) without the kink jumps """
        if self.type == ProfileType.STRAIGHT:
            return lambda s: np.full_like(np.asarray(s, dtype=float), self.angle)
        if self.type == ProfileType.SINE:
            return lambda s: self.angle + self.amplitude * np.sin(math.pi * self.frequency * np.asarray(s) + self.phase)
        return lambda s: self._spline(np.asarray(s, dtype=float))

    def smooth_kappa(self) -> Callable[[np.ndarray], np.ndarray]:
        """ θ_s(s) without the kink deltas """
        if self.type == ProfileType.STRAIGHT:
            return lambda s: np.zeros_like(np.asarray(s, dtype=float))
        if self.type == ProfileType.SINE:
            w = math.pi * self.frequency
            return lambda s: self.amplitude * w * np.cos(w * np.asarray(s) + self.phase)
        derivative = self._spline.derivative()
        return lambda s: derivative(np.asarray(s, dtype=float))

    def theta(self) -> Callable[[np.ndarray], np.ndarray]:
        """ θ(s) including a jump of α just right of every kink """
        smooth = self.smooth_theta()

        def sampler(s):
            s = np.asarray(s, dtype=float)
            result = smooth(s)
            for kink in self.kinks:
                result = result + kink.alpha * (s > kink.s_o)
            return result

        return sampler


def chain_from_profile(profile: ProfileSpec, n: int) -> ChainState:
    """
    θ_k = θ(k/n), ω_k = omega. Each kink is snapped to the nearest link boundary k_o/n and adds α to
    every link past it, so that cos(θ_{k_o+1} - θ_{k_o}) carries the kink angle.
    """
    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n}")
    theta = profile.smooth_theta()(np.arange(1, n + 1) / n)
    for kink in profile.kinks:
        if n < 2:
            raise ValidationError("A kinked chain needs at least two links")
        theta[kink.snapped(n):] += kink.alpha
    return ChainState(theta=theta, omega=np.full(n, profile.omega), g=profile.g)


def curve_from_profile(profile: ProfileSpec, m: int) -> ContinuumCurve:
    if profile.kinks:
        raise ValidationError("Continuum curves are smooth; kinks are only handled by the kink module")
    s = unit_grid(m)
    return ContinuumCurve(theta=profile.smooth_theta()(s), theta_t=np.full(m + 1, profile.omega), g=profile.g)


def kappa_on_grid(profile: ProfileSpec, m: int) -> np.ndarray:
    """ Smooth part of κ sampled at s_j = j/m """
    return np.asarray(profile.smooth_kappa()(unit_grid(m)), dtype=float)
