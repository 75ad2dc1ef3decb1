"""
Second fundamental form and sectional curvature of the chain configuration space
"""
import numpy as np
import pytest

from whipchain.chain.classes import ChainState, TangentVector
from whipchain.chain.core import random_state
from whipchain.chain.curvature import ambient_lift, ambient_second_fundamental_form, coordinate_negative_section, \
    curvature_extremes, curvature_numerator, evaluate_section, gauss_codazzi_oracle, gram_determinant, metric_inner, \
    random_section, second_fundamental_form, sectional_curvature
from whipchain.chain.tension import assemble, closed_form_inverse
from whipchain.datatypes import DegeneratePlaneError, LengthMismatchError


@pytest.fixture
def straight_pair():
    return ChainState.straight(2, 0.0)


class TestMetric:
    def test_straight_pair(self, straight_pair):
        e1, e2 = TangentVector([1.0, 0.0]), TangentVector([0.0, 1.0])
        assert metric_inner(straight_pair, e1, e1) == pytest.approx(0.5)
        assert metric_inner(straight_pair, e1, e2) == pytest.approx(0.25)
        assert metric_inner(straight_pair, e2, e2) == pytest.approx(0.25)

    def test_length_checked(self, straight_pair):
        with pytest.raises(LengthMismatchError):
            metric_inner(straight_pair, TangentVector([1.0]), TangentVector([1.0]))


class TestSecondFundamentalForm:
    def test_straight_pair(self, straight_pair):
        e2 = TangentVector([0.0, 1.0])
        assert second_fundamental_form(straight_pair, e2, e2) == pytest.approx([1.0, 1.0])

    def test_symmetric_in_arguments(self, rng):
        state = random_state(9, rng)
        u, v = random_section(9, rng)
        assert second_fundamental_form(state, u, v) == pytest.approx(second_fundamental_form(state, v, u))

    def test_ambient_form_is_normal(self, rng):
        # B(u, v) is orthogonal to every tangent vector
        state = random_state(11, rng)
        u, v = random_section(11, rng)
        b = ambient_second_fundamental_form(state, u, v)
        for _ in range(5):
            w = TangentVector(rng.normal(size=11))
            assert float(np.sum(b * ambient_lift(state, w))) == pytest.approx(0.0, abs=1e-10)


class TestSectionalCurvature:
    def test_straight_pair(self, straight_pair):
        e1, e2 = TangentVector([1.0, 0.0]), TangentVector([0.0, 1.0])
        sample = evaluate_section(straight_pair, e1, e2)
        assert sample.numerator == pytest.approx(0.25)
        assert sample.denominator == pytest.approx(1.0 / 16)
        assert sample.K == pytest.approx(4.0)
        assert gauss_codazzi_oracle(straight_pair, e1, e2) == pytest.approx(0.25)

    def test_matches_gauss_equation(self, rng):
        for _ in range(1000):
            n = int(rng.integers(2, 61))
            state = random_state(n, rng, omega_scale=0.0)
            u, v = random_section(n, rng)
            numerator = curvature_numerator(state, u, v)
            oracle = gauss_codazzi_oracle(state, u, v)
            # the oracle is a difference of two terms of this size
            scale = (np.linalg.norm(ambient_second_fundamental_form(state, u, u))
                     * np.linalg.norm(ambient_second_fundamental_form(state, v, v))
                     + np.linalg.norm(ambient_second_fundamental_form(state, u, v)) ** 2)
            assert abs(numerator - oracle) <= 1e-10 * scale

    def test_nonnegative_for_positive_cosines(self, rng):
        for _ in range(200):
            n = int(rng.integers(2, 30))
            u, v = random_section(n, rng)
            assert sectional_curvature(random_state(n, rng), u, v) >= 0.0

    def test_invariant_under_rescaling(self, rng):
        state = random_state(10, rng)
        u, v = random_section(10, rng)
        base = sectional_curvature(state, u, v)
        assert sectional_curvature(state, u.scaled(3.0), v.scaled(-0.5)) == pytest.approx(base, rel=1e-10)
        assert curvature_numerator(state, u.scaled(2.0), v) == pytest.approx(4.0 * curvature_numerator(state, u, v),
                                                                            rel=1e-12)

    def test_invariant_under_basis_change(self, rng):
        state = random_state(10, rng)
        u, v = random_section(10, rng)
        mixed = TangentVector(u.eta + 0.7 * v.eta)
        assert sectional_curvature(state, mixed, v) == pytest.approx(sectional_curvature(state, u, v), rel=1e-9)

    def test_degenerate_plane(self, straight_pair):
        u = TangentVector([1.0, 2.0])
        with pytest.raises(DegeneratePlaneError):
            evaluate_section(straight_pair, u, u.scaled(2.0))

    def test_gram_determinant_positive(self, rng):
        state = random_state(6, rng)
        u, v = random_section(6, rng)
        assert gram_determinant(state, u, v) > 0.0


class TestNegativeCurvature:
    def test_obtuse_joint(self):
        state = ChainState.at_rest([0.0, 2 * np.pi / 3])
        found = coordinate_negative_section(state)
        assert found is not None
        u, v, value = found
        assert value < 0.0
        assert sectional_curvature(state, u, v) < 0.0

    def test_numerator_of_coordinate_section(self):
        state = ChainState.at_rest([0.0, 2 * np.pi / 3, 0.4])
        inverse = closed_form_inverse(assemble(state)[0])
        e1, e2 = TangentVector([1.0, 0.0, 0.0]), TangentVector([0.0, 1.0, 0.0])
        assert curvature_numerator(state, e1, e2) == pytest.approx(inverse[0, 1] / 9.0)

    def test_every_obtuse_joint_is_found(self, rng):
        for _ in range(20):
            state = random_state(12, rng)
            theta = state.theta.copy()
            joint = int(rng.integers(1, 12))
            theta[joint:] += np.pi
            found = coordinate_negative_section(state.with_motion(theta, state.omega))
            assert found is not None
            assert found[2] < 0.0

    def test_positive_cosines_have_none(self, rng):
        assert coordinate_negative_section(random_state(20, rng)) is None


class TestExtremes:
    def test_reproducible_and_bounded(self):
        first = curvature_extremes([4, 8], 20, np.random.default_rng(7))
        second = curvature_extremes([4, 8], 20, np.random.default_rng(7))
        assert [e.to_dict() for e in first] == [e.to_dict() for e in second]
        for extremes in first:
            assert extremes.samples == 20
            assert 0.0 <= extremes.min_K <= extremes.max_K
