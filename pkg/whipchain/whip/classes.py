"""
Value classes of the continuum whip: grid-sampled curves on s_j = j/m, Green tables and kinks
"""
import math
from dataclasses import dataclass, replace
from typing import Any, Dict

import numpy as np

from whipchain.constants import NeumannScheme
from whipchain.datatypes import LengthMismatchError, Serializable, ValidationError, as_readonly_array, require_fields
from whipchain.utils import write_csv


def unit_grid(m: int) -> np.ndarray:
    return np.linspace(0.0, 1.0, m + 1)


@dataclass(frozen=True, eq=False)
class ContinuumCurve(Serializable):
    """ θ(s) and θ_t(s) on the grid s_j = j/m, j = 0..m, with gravity g """
    theta: np.ndarray
    theta_t: np.ndarray
    g: float = 0.0

    def __post_init__(self):
        theta = as_readonly_array(self.theta, "theta")
        theta_t = as_readonly_array(self.theta_t, "theta_t")
        if theta.shape != theta_t.shape:
            raise LengthMismatchError(f"theta has {theta.size} samples but theta_t has {theta_t.size}")
        if theta.size < 4:
            raise ValidationError("A continuum curve needs m >= 3 grid intervals")
        g = float(self.g)
        if not math.isfinite(g) or g < 0.0:
            raise ValidationError(f"Gravity must be finite and >= 0, got {self.g}")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "theta_t", theta_t)
        object.__setattr__(self, "g", g)

    @property
    def m(self) -> int:
        return int(self.theta.size) - 1

    @property
    def h(self) -> float:
        return 1.0 / self.m

    @property
    def s(self) -> np.ndarray:
        return unit_grid(self.m)

    @property
    def kappa(self) -> np.ndarray:
        """ κ = θ_s by second-order central differences, one-sided at the ends """
        return np.gradient(self.theta, self.s, edge_order=2)

    def with_motion(self, theta: np.ndarray, theta_t: np.ndarray) -> "ContinuumCurve":
        return replace(self, theta=theta, theta_t=theta_t)

    def to_dict(self) -> Dict[str, Any]:
        return {"m": self.m, "theta": self.theta.tolist(), "theta_t": self.theta_t.tolist(), "g": self.g}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ContinuumCurve":
        require_fields(data, cls.__name__, "theta", "theta_t")
        result = cls(theta=data["theta"], theta_t=data["theta_t"], g=data.get("g", 0.0))
        if "m" in data and int(data["m"]) != result.m:
            raise LengthMismatchError(f"Declared m={data['m']} but {result.m + 1} samples were given")
        return result

    def to_csv(self, file_path: str):
        write_csv(file_path, ["s", "theta", "theta_t", "kappa"], [self.s, self.theta, self.theta_t, self.kappa])

    def __str__(self):
        return f"ContinuumCurve m={self.m} g={self.g}"


@dataclass(frozen=True, eq=False)
class GreenTable:
    """ G[j, k] ≈ G(s_j, s_k) of -∂_s² + κ² with G_s(0, q) = 0 and G(1, q) = 0 """
    matrix: np.ndarray
    scheme: NeumannScheme = NeumannScheme.GHOST_POINT

    def __post_init__(self):
        matrix = as_readonly_array(self.matrix, "matrix", ndim=2)
        if matrix.shape[0] != matrix.shape[1]:
            raise ValidationError(f"Green table must be square, got {matrix.shape}")
        object.__setattr__(self, "matrix", matrix)

    @property
    def m(self) -> int:
        return int(self.matrix.shape[0]) - 1

    @property
    def s(self) -> np.ndarray:
        return unit_grid(self.m)

    def symmetry_error(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.T)))

    def at(self, x: float, y: float) -> float:
        """ Bilinear interpolation between grid nodes """
        s = self.s
        rows = np.array([np.interp(x, s, self.matrix[:, k]) for k in range(self.m + 1)])
        return float(np.interp(y, s, rows))

    def to_csv(self, file_path: str):
        """ First column s_j, then one column per source point s_k """
        header = ["s"] + [f"G_{k}" for k in range(self.m + 1)]
        write_csv(file_path, header, [self.s] + list(self.matrix.T))


@dataclass(frozen=True)
class KinkSpec(Serializable):
    """ Jump of α radians in the tangent angle at s_o """
    s_o: float
    alpha: float

    def __post_init__(self):
        if not 0.0 < self.s_o < 1.0:
            raise ValidationError(f"Kink position must lie in (0, 1), got {self.s_o}")
        if not (self.alpha != 0.0 and abs(self.alpha) < math.pi):
            raise ValidationError(f"Kink angle must satisfy 0 < |alpha| < pi, got {self.alpha}")

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "KinkSpec":
        require_fields(data, cls.__name__, "s_o", "alpha")
        return cls(s_o=float(data["s_o"]), alpha=float(data["alpha"]))

    def snapped(self, n: int) -> int:
        """ Index k of the link boundary k/n nearest to s_o, kept inside 1..n-1 """
        return min(max(int(round(self.s_o * n)), 1), n - 1)


@dataclass
class KinkGreenSample(Serializable):
    """ Truncated kinked Green value at one grid size; epsilon is the excluded distance past each kink """
    m: int
    epsilon: float
    value: float
    truncated: bool


@dataclass
class NegativeTensionEvent(Serializable):
    """ First sample of a chain run whose smallest tension fell below the negativity threshold """
    time: float
    step: int
    link: int
    tension: float
