"""
Tension (Lagrange multiplier) system of the chain.

The constraint equations give M λ = rhs with
    M = tridiag(-a_{i-1}, d_i, -a_i),  d_1 = 1, d_i = 2 (i >= 2),  a_i = cos(θ_{i+1} - θ_i)
    rhs_i = ω_i² - n g sin θ_1 [i = 1]
Elimination pivots follow b_1 = d_1, b_{i+1} = d_{i+1} - off_i² / b_i.
"""
import logging
from typing import Tuple

import numpy as np

from whipchain.chain.classes import CartesianFrame, ChainState, TensionSignReport, TensionVector, TridiagonalOperator
from whipchain.constants import INDEX_OFFSET, NEGATIVE_TENSION_THRESHOLD, SINGULAR_PIVOT_THRESHOLD
from whipchain.datatypes import LengthMismatchError, SingularPivotError

logger = logging.getLogger(__name__)


def link_cosines(theta: np.ndarray) -> np.ndarray:
    """ a_i = cos(θ_{i+1} - θ_i), i = 1..n-1 """
    return np.cos(np.diff(theta))


def assemble(state: ChainState) -> Tuple[TridiagonalOperator, np.ndarray]:
    n = state.n
    diag = np.full(n, 2.0)
    diag[0] = 1.0
    op = TridiagonalOperator(diag=diag, off=-link_cosines(state.theta))
    rhs = state.omega ** 2
    rhs[0] -= n * state.g * np.sin(state.theta[0])
    return op, rhs


def cartesian_assemble(frame: CartesianFrame, g: float) -> Tuple[TridiagonalOperator, np.ndarray]:
    """
    The multiplier equations written with positions and velocities,
        |v_i - v_{i-1}|² = -λ_{i+1} <x_i - x_{i-1}, x_{i+1} - x_i> + (2/n²) λ_i - λ_{i-1} <x_i - x_{i-1}, x_{i-1} - x_{i-2}>
    (first row: |v_1|² - g <x_1, e_2> = -λ_2 <x_1, x_2 - x_1> + (1/n²) λ_1), rescaled by n² so that the result
    is directly comparable with `assemble`.
    """
    if frame.positions.shape != frame.velocities.shape:
        raise LengthMismatchError("positions and velocities differ in length")
    n = frame.n
    links = np.diff(frame.positions, axis=0)
    rates = np.diff(frame.velocities, axis=0)
    scale = float(n ** 2)
    diag = np.full(n, 2.0)
    diag[0] = 1.0
    off = -scale * np.sum(links[:-1] * links[1:], axis=1)
    rhs = scale * np.sum(rates ** 2, axis=1)
    rhs[0] -= scale * g * frame.positions[1, 1]
    return TridiagonalOperator(diag=diag, off=off), rhs


def elimination_pivots(op: TridiagonalOperator) -> np.ndarray:
    pivots = np.empty(op.n)
    pivots[0] = op.diag[0]
    for i in range(op.n - 1):
        if pivots[i] < SINGULAR_PIVOT_THRESHOLD:
            raise SingularPivotError(f"Pivot b_{i + INDEX_OFFSET} = {pivots[i]:.3e} is singular")
        pivots[i + 1] = op.diag[i + 1] - op.off[i] ** 2 / pivots[i]
    if pivots[-1] < SINGULAR_PIVOT_THRESHOLD:
        raise SingularPivotError(f"Pivot b_{op.n} = {pivots[-1]:.3e} is singular")
    return pivots


def solve_tension(op: TridiagonalOperator, rhs) -> TensionVector:
    """ Forward elimination with the b-recurrence followed by back substitution, O(n) """
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape != (op.n,):
        raise LengthMismatchError(f"rhs has shape {rhs.shape}, operator has n={op.n}")
    pivots = elimination_pivots(op)
    off = op.off
    y = rhs.copy()
    for i in range(op.n - 1):
        y[i + 1] -= off[i] / pivots[i] * y[i]
    lam = np.empty(op.n)
    lam[-1] = y[-1] / pivots[-1]
    for i in range(op.n - 2, -1, -1):
        lam[i] = (y[i] - off[i] * lam[i + 1]) / pivots[i]
    return TensionVector(lam=lam, pivots=pivots)


def tension(state: ChainState) -> TensionVector:
    op, rhs = assemble(state)
    return solve_tension(op, rhs)


def closed_form_inverse(op: TridiagonalOperator) -> np.ndarray:
    """
    M^{ij} = sum_{m=max(i,j)}^{n} (1/b_m) prod_{k=i}^{m-1} (a_k/b_k) prod_{l=j}^{m-1} (a_l/b_l)

    Built as L diag(1/b) L^T where L[i, m] = prod_{k=i}^{m-1} a_k/b_k for m >= i (zero below).
    """
    pivots = elimination_pivots(op)
    ratios = op.a / pivots[:-1]
    n = op.n
    products = np.zeros((n, n))
    products[0, 0] = 1.0
    for m in range(1, n):
        products[:m, m] = products[:m, m - 1] * ratios[m - 1]
        products[m, m] = 1.0
    return (products / pivots) @ products.T


def dense_inverse(op: TridiagonalOperator) -> np.ndarray:
    """ Gauss-Jordan elimination with partial pivoting on the dense matrix """
    n = op.n
    work = np.hstack([op.to_dense(), np.eye(n)])
    for col in range(n):
        pivot_row = col + int(np.argmax(np.abs(work[col:, col])))
        if abs(work[pivot_row, col]) < SINGULAR_PIVOT_THRESHOLD:
            raise SingularPivotError(f"Dense elimination hit a zero column at {col + INDEX_OFFSET}")
        if pivot_row != col:
            work[[col, pivot_row]] = work[[pivot_row, col]]
        work[col] /= work[col, col]
        others = np.arange(n) != col
        work[others] -= np.outer(work[others, col], work[col])
    return work[:, n:]


def tension_sign_probe(state: ChainState) -> TensionSignReport:
    """
    Solve the tension for every unit velocity ω = e_j (gravity as given) and collect negative entries.
    The ω field of `state` is ignored.
    """
    op, _ = assemble(state)
    n = state.n
    gravity_rhs = np.zeros(n)
    gravity_rhs[0] = -n * state.g * np.sin(state.theta[0])
    report = TensionSignReport(n=n, g=state.g)
    minimum = np.inf
    for j in range(n):
        rhs = gravity_rhs.copy()
        rhs[j] += 1.0
        lam = solve_tension(op, rhs).lam
        minimum = min(minimum, float(lam.min()))
        for i in np.flatnonzero(lam < NEGATIVE_TENSION_THRESHOLD):
            report.negative_pairs.append((int(i) + INDEX_OFFSET, j + INDEX_OFFSET, float(lam[i])))
    report.min_probe_tension = minimum
    if state.g > 0.0:
        report.rest_tension = solve_tension(op, gravity_rhs).lam
    logger.debug(f"Sign probe n={n}: {len(report.negative_pairs)} negative (i, j) pairs, min {minimum:.3e}")
    return report
