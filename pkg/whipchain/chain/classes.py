"""
Value classes of the discrete chain: n + 1 point masses joined by rigid rods of length 1/n,
point 0 fixed at the origin and point n free.
"""
import math
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from whipchain.constants import INDEX_OFFSET
from whipchain.datatypes import LengthMismatchError, Serializable, ValidationError, as_readonly_array, require_fields
from whipchain.utils import write_csv


@dataclass(frozen=True, eq=False)
class ChainState(Serializable):
    """
    Link angles θ_i (unwrapped radians, measured from e_1), angular rates ω_i and gravity g.
    theta[k] is the angle of link k + 1.
    """
    theta: np.ndarray
    omega: np.ndarray
    g: float = 0.0

    def __post_init__(self):
        theta = as_readonly_array(self.theta, "theta")
        omega = as_readonly_array(self.omega, "omega")
        if theta.size < 1:
            raise ValidationError("A chain needs at least one link")
        if theta.shape != omega.shape:
            raise LengthMismatchError(f"theta has {theta.size} entries but omega has {omega.size}")
        g = float(self.g)
        if not math.isfinite(g) or g < 0.0:
            raise ValidationError(f"Gravity must be finite and >= 0, got {self.g}")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "g", g)

    @property
    def n(self) -> int:
        return int(self.theta.size)

    @property
    def link_length(self) -> float:
        return 1.0 / self.n

    def with_motion(self, theta: np.ndarray, omega: np.ndarray) -> "ChainState":
        return replace(self, theta=theta, omega=omega)

    def to_dict(self) -> Dict[str, Any]:
        return {"n": self.n, "theta": self.theta.tolist(), "omega": self.omega.tolist(), "g": self.g}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ChainState":
        require_fields(data, cls.__name__, "theta", "omega")
        result = cls(theta=data["theta"], omega=data["omega"], g=data.get("g", 0.0))
        if "n" in data and int(data["n"]) != result.n:
            raise LengthMismatchError(f"Declared n={data['n']} but {result.n} angles were given")
        return result

    @classmethod
    def at_rest(cls, theta, g: float = 0.0) -> "ChainState":
        theta = np.asarray(theta, dtype=float)
        return cls(theta=theta, omega=np.zeros_like(theta), g=g)

    @classmethod
    def straight(cls, n: int, angle: float, omega: float = 0.0, g: float = 0.0) -> "ChainState":
        return cls(theta=np.full(n, float(angle)), omega=np.full(n, float(omega)), g=g)

    def __str__(self):
        return f"ChainState n={self.n} g={self.g} θ∈[{self.theta.min():.4g}, {self.theta.max():.4g}]"


@dataclass(frozen=True, eq=False)
class CartesianFrame:
    """
    Positions x_0..x_n and velocities v_0..v_n as (k, 2) arrays. Externally supplied frames may
    violate the rod constraints; `core.constraint_residual` measures by how much.
    """
    positions: np.ndarray
    velocities: np.ndarray

    def __post_init__(self):
        positions = as_readonly_array(self.positions, "positions", ndim=2)
        velocities = as_readonly_array(self.velocities, "velocities", ndim=2)
        for name, array in (("positions", positions), ("velocities", velocities)):
            if array.shape[1] != 2:
                raise ValidationError(f"'{name}' must hold planar points, got shape {array.shape}")
        object.__setattr__(self, "positions", positions)
        object.__setattr__(self, "velocities", velocities)

    @property
    def n(self) -> int:
        return int(self.positions.shape[0]) - 1

    def to_csv(self, file_path: str):
        """ One row per point: i, x, y, vx, vy """
        if self.positions.shape != self.velocities.shape:
            raise LengthMismatchError("positions and velocities differ in length")
        index = np.arange(self.positions.shape[0])
        write_csv(file_path, ["i", "x", "y", "vx", "vy"],
                  [index, self.positions[:, 0], self.positions[:, 1], self.velocities[:, 0], self.velocities[:, 1]])


@dataclass(frozen=True, eq=False)
class TridiagonalOperator:
    """
    The symmetric tension matrix M: diag = (1, 2, ..., 2), off[i] = -a_i with
    a_i = cos(θ_{i+1} - θ_i).
    """
    diag: np.ndarray
    off: np.ndarray

    def __post_init__(self):
        diag = as_readonly_array(self.diag, "diag")
        off = as_readonly_array(self.off, "off")
        if diag.size < 1 or off.size != diag.size - 1:
            raise LengthMismatchError(f"Need n diagonal and n-1 off-diagonal entries, got {diag.size} and {off.size}")
        object.__setattr__(self, "diag", diag)
        object.__setattr__(self, "off", off)

    @property
    def n(self) -> int:
        return int(self.diag.size)

    @property
    def a(self) -> np.ndarray:
        return -self.off

    def to_dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.off, 1) + np.diag(self.off, -1)


@dataclass(frozen=True, eq=False)
class TensionVector:
    """ Discrete tensions λ_1..λ_n (λ_{n+1} = 0 implied) and the elimination pivots b_1..b_n """
    lam: np.ndarray
    pivots: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lam", as_readonly_array(self.lam, "lambda"))
        object.__setattr__(self, "pivots", as_readonly_array(self.pivots, "pivots"))

    @property
    def n(self) -> int:
        return int(self.lam.size)

    @property
    def sigma(self) -> np.ndarray:
        """ Continuum-scaled tension σ_k = λ_k / n² """
        return self.lam / self.n ** 2

    def padded(self) -> np.ndarray:
        """ λ_1..λ_n followed by the free-end λ_{n+1} = 0 """
        return np.append(self.lam, 0.0)

    def to_csv(self, file_path: str):
        index = np.arange(self.n) + INDEX_OFFSET
        write_csv(file_path, ["i", "lambda_i", "sigma_i"], [index, self.lam, self.sigma])


@dataclass(frozen=True, eq=False)
class TangentVector:
    """ Normal components η_k of a tangent vector: u_k - u_{k-1} = (1/n) η_k (-sin θ_k, cos θ_k) """
    eta: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "eta", as_readonly_array(self.eta, "eta"))

    @property
    def n(self) -> int:
        return int(self.eta.size)

    def scaled(self, factor: float) -> "TangentVector":
        return TangentVector(self.eta * factor)


@dataclass
class TensionSignReport(Serializable):
    """
    Outcome of sweeping unit angular velocities ω = e_j through the tension solve.
    Pairs are 1-based (i, j, λ_i) with λ_i below the negativity threshold.
    """
    n: int
    g: float
    negative_pairs: List[Tuple[int, int, float]] = field(default_factory=list)
    min_probe_tension: float = 0.0
    rest_tension: Optional[np.ndarray] = None

    @property
    def has_negative_tension(self) -> bool:
        return bool(self.negative_pairs) or (self.rest_tension is not None and bool(np.any(self.rest_tension < 0.0)))


@dataclass
class Trajectory:
    """ Samples of a chain run with per-sample diagnostics """
    times: np.ndarray
    states: List[ChainState]
    kinetic: np.ndarray
    potential: np.ndarray
    angular_momentum: np.ndarray
    min_tension: np.ndarray

    def __post_init__(self):
        if self.states:
            n, g = self.states[0].n, self.states[0].g
            if any(s.n != n or s.g != g for s in self.states):
                raise ValidationError("Trajectory states must share n and g")
        if np.any(np.diff(self.times) <= 0.0):
            raise ValidationError("Trajectory times must be strictly increasing")

    @property
    def total_energy(self) -> np.ndarray:
        return self.kinetic + self.potential

    @property
    def final_state(self) -> ChainState:
        return self.states[-1]

    def to_csv(self, file_path: str):
        """ Columns t, theta_1..theta_n, omega_1..omega_n, K, U, L, lambda_min """
        n = self.states[0].n
        header = (["t"]
                  + [f"theta_{i + INDEX_OFFSET}" for i in range(n)]
                  + [f"omega_{i + INDEX_OFFSET}" for i in range(n)]
                  + ["K", "U", "L", "lambda_min"])
        thetas = np.array([s.theta for s in self.states])
        omegas = np.array([s.omega for s in self.states])
        columns = ([self.times] + list(thetas.T) + list(omegas.T)
                   + [self.kinetic, self.potential, self.angular_momentum, self.min_tension])
        write_csv(file_path, header, columns)

    def __str__(self):
        return f"Trajectory ({len(self.states)} samples, t={self.times[0]:.4g}..{self.times[-1]:.4g})"


@dataclass
class CurvatureSample(Serializable):
    """ One evaluated section: ⟨R(u,v)v,u⟩, the Gram determinant of (u, v) and their ratio K """
    numerator: float
    denominator: float
    K: float


@dataclass
class CurvatureExtremes(Serializable):
    """ Largest and smallest sampled sectional curvature at one chain size """
    n: int
    samples: int
    max_K: float
    min_K: float
