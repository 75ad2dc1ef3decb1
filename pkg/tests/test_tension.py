"""
Tension system: assembly, the O(n) solve, the closed-form inverse and the sign probe
"""
import numpy as np
import pytest

from whipchain.chain.classes import ChainState, TridiagonalOperator
from whipchain.chain.core import random_state, reconstruct
from whipchain.chain.tension import assemble, cartesian_assemble, closed_form_inverse, dense_inverse, \
    elimination_pivots, solve_tension, tension, tension_sign_probe
from whipchain.datatypes import LengthMismatchError, SingularPivotError


class TestAssemble:
    def test_straight_pair(self):
        op, rhs = assemble(ChainState.straight(2, 0.0))
        assert op.diag == pytest.approx([1.0, 2.0])
        assert op.off == pytest.approx([-1.0])
        assert rhs == pytest.approx([0.0, 0.0])

    def test_right_angle_decouples(self):
        op, _ = assemble(ChainState.at_rest([0.0, np.pi / 2]))
        assert op.off == pytest.approx([0.0], abs=1e-15)

    def test_hanging_gravity_row(self):
        _, rhs = assemble(ChainState.straight(2, -np.pi / 2, g=1.0))
        assert rhs == pytest.approx([2.0, 0.0])

    def test_cartesian_form_agrees(self, rng):
        for _ in range(20):
            state = random_state(int(rng.integers(2, 40)), rng, g=9.8)
            op, rhs = assemble(state)
            cart_op, cart_rhs = cartesian_assemble(reconstruct(state), state.g)
            assert np.max(np.abs(cart_op.off - op.off)) <= 1e-12
            assert np.max(np.abs(cart_rhs - rhs)) <= 1e-12 * max(1.0, np.max(np.abs(rhs)))

    def test_operator_shape_checked(self):
        with pytest.raises(LengthMismatchError):
            TridiagonalOperator(diag=[1.0, 2.0], off=[-1.0, -1.0])


class TestSolve:
    def test_hanging_pair(self):
        lam = tension(ChainState.straight(2, -np.pi / 2, g=1.0)).lam
        assert lam == pytest.approx([4.0, 2.0])

    def test_spinning_pair(self):
        lam = tension(ChainState.straight(2, 0.0, omega=1.0)).lam
        assert lam == pytest.approx([3.0, 2.0])

    def test_right_angle_pair(self):
        lam = tension(ChainState(theta=[0.0, np.pi / 2], omega=[0.0, 1.0])).lam
        assert lam == pytest.approx([0.0, 0.5], abs=1e-15)

    def test_hanging_chain_closed_form(self, hanging_chain):
        n, g = hanging_chain.n, hanging_chain.g
        expected = n * g * (n + 1 - np.arange(1, n + 1))
        assert tension(hanging_chain).lam == pytest.approx(expected, rel=1e-12)

    def test_rigid_rotation_closed_form(self):
        n = 20
        k = np.arange(1, n + 1)
        expected = 0.5 * (n * (n + 1) - k * (k - 1))
        assert tension(ChainState.straight(n, 1.1, omega=1.0)).lam == pytest.approx(expected, rel=1e-12)

    def test_residual(self, rng):
        for _ in range(50):
            state = random_state(int(rng.integers(1, 60)), rng, g=9.8)
            op, rhs = assemble(state)
            lam = solve_tension(op, rhs).lam
            assert np.max(np.abs(op.to_dense() @ lam - rhs)) <= 1e-10 * max(1.0, np.max(np.abs(rhs)))

    def test_rhs_length_checked(self):
        op, _ = assemble(ChainState.straight(3, 0.0))
        with pytest.raises(LengthMismatchError):
            solve_tension(op, [1.0, 2.0])

    def test_singular_pivot(self):
        op = TridiagonalOperator(diag=[1.0, 1.0], off=[-1.0])
        with pytest.raises(SingularPivotError):
            elimination_pivots(op)


class TestPivots:
    def test_bounds(self, rng):
        for _ in range(50):
            pivots = tension(random_state(int(rng.integers(1, 80)), rng, spread=np.pi)).pivots
            assert np.all(pivots >= 1.0 - 1e-12)
            assert np.all(pivots <= 2.0 + 1e-12)

    def test_straight_chain_pivots_are_one(self):
        assert tension(ChainState.straight(30, 0.4)).pivots == pytest.approx(np.ones(30), abs=1e-12)


class TestInverse:
    def test_straight_triple(self):
        inverse = closed_form_inverse(assemble(ChainState.straight(3, 0.0))[0])
        assert inverse == pytest.approx(np.array([[3.0, 2.0, 1.0], [2.0, 2.0, 1.0], [1.0, 1.0, 1.0]]))

    def test_straight_chain_min_form(self):
        n = 12
        i = np.arange(1, n + 1)
        inverse = closed_form_inverse(assemble(ChainState.straight(n, 0.0))[0])
        assert inverse == pytest.approx(n + 1 - np.maximum.outer(i, i))

    def test_right_angle_pair(self):
        inverse = closed_form_inverse(assemble(ChainState.at_rest([0.0, np.pi / 2]))[0])
        assert inverse == pytest.approx(np.diag([1.0, 0.5]), abs=1e-15)

    def test_matches_dense_inverse(self, rng):
        for _ in range(100):
            op, _ = assemble(random_state(int(rng.integers(2, 201)), rng))
            closed, dense = closed_form_inverse(op), dense_inverse(op)
            assert np.max(np.abs(closed - dense)) <= 1e-10
            assert np.max(np.abs(closed @ op.to_dense() - np.eye(op.n))) <= 1e-10

    def test_symmetric_and_positive_for_positive_cosines(self, rng):
        inverse = closed_form_inverse(assemble(random_state(25, rng))[0])
        assert np.max(np.abs(inverse - inverse.T)) <= 1e-12
        assert np.all(inverse > 0.0)
        assert np.all(np.linalg.eigvalsh(inverse) > 0.0)


class TestSignProbe:
    def test_obtuse_joint_gives_negative_tension(self):
        report = tension_sign_probe(ChainState.at_rest([0.0, 2 * np.pi / 3]))
        assert report.has_negative_tension
        assert report.negative_pairs
        i, j, value = report.negative_pairs[0]
        assert {i, j} == {1, 2}
        assert value < 0.0

    def test_positive_cosines_stay_nonnegative(self, rng):
        report = tension_sign_probe(random_state(15, rng, omega_scale=0.0))
        assert not report.has_negative_tension
        assert report.min_probe_tension >= 0.0

    def test_gravity_pushes_from_above(self):
        report = tension_sign_probe(ChainState.straight(2, np.pi / 2, g=1.0))
        assert report.rest_tension is not None
        assert report.rest_tension[0] == pytest.approx(-4.0)
        assert report.has_negative_tension

    def test_report_serializes(self, tmp_path):
        report = tension_sign_probe(ChainState.straight(3, np.pi / 2, g=1.0))
        report.save(str(tmp_path / "probe.json"))
        assert (tmp_path / "probe.json").read_text().startswith("{")
