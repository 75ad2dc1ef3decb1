"""
Second fundamental form and sectional curvature of the chain configuration space, seen as a
submanifold of the flat space of point positions.

A tangent vector is given by the normal components η_k of its link increments,
u_k - u_{k-1} = (1/n) η_k (-sin θ_k, cos θ_k). Its second fundamental form has tension
coefficients λ(u, v)_i = Σ_j M^{ij} η_j ξ_j and ambient value
    B_k = λ_{k+1} (x_{k+1} - x_k) + λ_k (x_{k-1} - x_k).
"""
import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np

from whipchain.chain.classes import ChainState, CurvatureExtremes, CurvatureSample, TangentVector
from whipchain.chain.core import link_directions, random_state, reconstruct
from whipchain.chain.tension import assemble, closed_form_inverse, solve_tension
from whipchain.constants import DEGENERATE_PLANE_THRESHOLD, NEGATIVE_TENSION_THRESHOLD
from whipchain.datatypes import DegeneratePlaneError, LengthMismatchError
from whipchain.utils import parallel_map

logger = logging.getLogger(__name__)


def _check_lengths(state: ChainState, *vectors: TangentVector):
    for tv in vectors:
        if tv.n != state.n:
            raise LengthMismatchError(f"Tangent vector has {tv.n} components, chain has n={state.n}")


def _inverse(state: ChainState) -> np.ndarray:
    op, _ = assemble(state)
    return closed_form_inverse(op)


def ambient_lift(state: ChainState, tv: TangentVector) -> np.ndarray:
    """ u_1..u_n as an (n, 2) array; u_0 = 0 is implied """
    _check_lengths(state, tv)
    _, normals = link_directions(state.theta)
    return np.cumsum(state.link_length * tv.eta[:, None] * normals, axis=0)


def metric_inner(state: ChainState, u: TangentVector, v: TangentVector) -> float:
    """ Kinetic-energy metric Σ_k <u_k, v_k> """
    return float(np.sum(ambient_lift(state, u) * ambient_lift(state, v)))


def second_fundamental_form(state: ChainState, u: TangentVector, v: TangentVector) -> np.ndarray:
    _check_lengths(state, u, v)
    return _inverse(state) @ (u.eta * v.eta)


def ambient_second_fundamental_form(state: ChainState, u: TangentVector, v: TangentVector) -> np.ndarray:
    """
    B(u, v) at x_1..x_n as an (n, 2) array. The coefficients come from a tridiagonal solve,
    not from the closed-form inverse.
    """
    _check_lengths(state, u, v)
    op, _ = assemble(state)
    lam = np.append(solve_tension(op, u.eta * v.eta).lam, 0.0)
    x = reconstruct(state).positions
    forward = np.vstack([x[2:] - x[1:-1], np.zeros((1, 2))])
    backward = x[:-1] - x[1:]
    return lam[1:, None] * forward + lam[:-1, None] * backward


def curvature_numerator(state: ChainState, u: TangentVector, v: TangentVector) -> float:
    """ <R(u,v)v,u> = (1/2n²) Σ_{i,j} M^{ij} (η_i ξ_j - η_j ξ_i)² """
    _check_lengths(state, u, v)
    wedge = np.outer(u.eta, v.eta) - np.outer(v.eta, u.eta)
    return float(np.sum(_inverse(state) * wedge ** 2) / (2.0 * state.n ** 2))


def gauss_codazzi_oracle(state: ChainState, u: TangentVector, v: TangentVector) -> float:
    """ <B(u,u), B(v,v)> - |B(u,v)|² from the ambient vectors alone """
    b_uu = ambient_second_fundamental_form(state, u, u)
    b_vv = ambient_second_fundamental_form(state, v, v)
    b_uv = ambient_second_fundamental_form(state, u, v)
    return float(np.sum(b_uu * b_vv) - np.sum(b_uv * b_uv))


def gram_determinant(state: ChainState, u: TangentVector, v: TangentVector) -> float:
    uu, vv, uv = metric_inner(state, u, u), metric_inner(state, v, v), metric_inner(state, u, v)
    return uu * vv - uv ** 2


def sectional_curvature(state: ChainState, u: TangentVector, v: TangentVector) -> float:
    return evaluate_section(state, u, v).K


def evaluate_section(state: ChainState, u: TangentVector, v: TangentVector) -> CurvatureSample:
    denominator = gram_determinant(state, u, v)
    if denominator <= DEGENERATE_PLANE_THRESHOLD:
        raise DegeneratePlaneError(f"Section is degenerate, Gram determinant {denominator:.3e}")
    numerator = curvature_numerator(state, u, v)
    return CurvatureSample(numerator=numerator, denominator=denominator, K=numerator / denominator)


def coordinate_negative_section(state: ChainState) -> Optional[Tuple[TangentVector, TangentVector, float]]:
    """
    Search coordinate sections η = e_i, ξ = e_j, whose numerator is M^{ij} / n².
    Returns the most negative one, or None when every coordinate section is nonnegative.
    """
    inverse = _inverse(state)
    upper = np.triu(inverse, 1)
    if state.n < 2 or upper.min() >= NEGATIVE_TENSION_THRESHOLD:
        return None
    i, j = np.unravel_index(int(np.argmin(upper)), upper.shape)
    u, v = TangentVector(np.eye(state.n)[i]), TangentVector(np.eye(state.n)[j])
    value = curvature_numerator(state, u, v)
    logger.debug(f"Negative coordinate section ({i + 1}, {j + 1}): {value:.3e}")
    return u, v, value


def random_section(n: int, rng: np.random.Generator) -> Tuple[TangentVector, TangentVector]:
    return TangentVector(rng.normal(size=n)), TangentVector(rng.normal(size=n))


def curvature_extremes(n_list: Sequence[int], samples: int, rng: np.random.Generator) -> List[CurvatureExtremes]:
    """
    Sample random states (all a_i > 0) and random sections at each n and report the largest and
    smallest sectional curvature seen. All draws happen up front so the result only depends on rng.
    """
    draws = [(n, [(random_state(n, rng, omega_scale=0.0),) + random_section(n, rng) for _ in range(samples)])
             for n in n_list]

    def extremes(item) -> CurvatureExtremes:
        n, sections = item
        values = []
        for state, u, v in sections:
            try:
                values.append(sectional_curvature(state, u, v))
            except DegeneratePlaneError:
                logger.warning(f"Skipping a degenerate random section at n={n}")
        return CurvatureExtremes(n=n, samples=len(values), max_K=float(np.max(values)), min_K=float(np.min(values)))

    return parallel_map(extremes, draws)
