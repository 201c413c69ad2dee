import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.interpolate import BSpline

from npgraph import bspline
from npgraph.errors import DomainError, InvalidArgument


def cox_de_boor(knots, j, k, x):
    """Textbook recursion for B_{j,k} (order k), right-closed at the last knot."""
    t = knots
    if k == 1:
        if t[j] <= x < t[j + 1]:
            return 1.0
        # include x = 1 in the last non-degenerate interval
        return 1.0 if (x == t[-1] and t[j] < t[j + 1] == t[-1]) else 0.0
    left = 0.0 if t[j + k - 1] == t[j] else (x - t[j]) / (t[j + k - 1] - t[j]) * cox_de_boor(t, j, k - 1, x)
    right = 0.0 if t[j + k] == t[j + 1] else (t[j + k] - x) / (t[j + k] - t[j + 1]) * cox_de_boor(t, j + 1, k - 1, x)
    return left + right


def bernstein(x):
    return np.array([(1 - x) ** 3, 3 * x * (1 - x) ** 2, 3 * x**2 * (1 - x), x**3])


class TestBuildBasis:
    def test_bernstein_knots(self):
        spec = bspline.build_basis(4)
        assert np.array_equal(spec.knots, [0, 0, 0, 0, 1, 1, 1, 1])

    def test_one_interior_knot(self):
        assert np.allclose(bspline.build_basis(5).interior_knots, [0.5])

    def test_three_interior_knots(self):
        assert np.allclose(bspline.build_basis(7).interior_knots, [0.25, 0.5, 0.75])

    @pytest.mark.parametrize("J", [0, 3, -2])
    def test_rejects_small_J(self, J):
        with pytest.raises(InvalidArgument):
            bspline.build_basis(J)

    @given(st.integers(4, 60))
    def test_knot_vector_shape(self, J):
        spec = bspline.build_basis(J)
        assert spec.knots.size == J + bspline.ORDER
        assert np.all(np.diff(spec.knots) >= 0)
        inner = spec.interior_knots
        assert np.all((inner > 0) & (inner < 1))
        if inner.size > 1:
            assert np.allclose(np.diff(inner), 1.0 / (J - 3))


class TestEvalBasis:
    def test_left_endpoint(self):
        assert np.allclose(bspline.eval_basis(bspline.build_basis(4), 0.0), [1, 0, 0, 0], atol=1e-9)

    def test_midpoint_matches_bernstein(self):
        v = bspline.eval_basis(bspline.build_basis(4), 0.5)
        assert np.allclose(v, [0.125, 0.375, 0.375, 0.125], atol=1e-15)

    @given(st.floats(0.0, 1.0))
    def test_cubic_bernstein_form(self, x):
        xc = min(max(x, bspline.EDGE_CLAMP), 1 - bspline.EDGE_CLAMP)
        v = bspline.eval_basis(bspline.build_basis(4), x)
        assert np.allclose(v, bernstein(xc), atol=1e-13)

    @pytest.mark.parametrize("x", [-1e-3, 1.0 + 1e-9, np.nan])
    def test_domain(self, x):
        with pytest.raises(DomainError):
            bspline.eval_basis(bspline.build_basis(6), x)

    def test_scalar_and_vector_shapes(self):
        spec = bspline.build_basis(9)
        assert bspline.eval_basis(spec, 0.3).shape == (9,)
        assert bspline.eval_basis(spec, np.array([0.3, 0.4])).shape == (2, 9)

    @pytest.mark.parametrize("J", [4, 5, 8, 13, 30])
    def test_matches_cox_de_boor(self, J, rng):
        spec = bspline.build_basis(J)
        xs = np.r_[rng.random(60), spec.interior_knots, 1e-10, 1 - 1e-10]
        B = bspline.eval_basis(spec, xs)
        ref = np.array([[cox_de_boor(spec.knots, j, 4, x) for j in range(J)] for x in xs])
        assert np.abs(B - ref).max() < 1e-12

    @pytest.mark.parametrize("J", [4, 7, 16, 50])
    def test_matches_scipy(self, J, rng):
        spec = bspline.build_basis(J)
        xs = np.sort(rng.uniform(1e-10, 1 - 1e-10, 500))
        ref = BSpline.design_matrix(xs, spec.knots, 3).toarray()
        assert np.abs(bspline.eval_basis(spec, xs) - ref).max() < 1e-13

    @given(st.integers(4, 80), st.lists(st.floats(0, 1), min_size=1, max_size=30))
    def test_partition_of_unity_and_support(self, J, xs):
        B = bspline.eval_basis(bspline.build_basis(J), np.array(xs))
        assert np.all(B >= 0)
        assert np.abs(B.sum(axis=1) - 1).max() < 1e-12
        assert np.all((B > 0).sum(axis=1) <= bspline.ORDER)


class TestConstraintSystem:
    def test_bernstein_rows(self):
        sys_ = bspline.constraint_system(bspline.build_basis(4))
        assert np.allclose(sys_.A[0], [0.125, 0.375, 0.375, 0.125], atol=1e-15)
        assert np.allclose(sys_.A[1], [-0.40625, -0.28125, 0.28125, 0.40625], atol=1e-15)
        assert np.array_equal(sys_.c, [0.0, 1.0])

    def test_bernstein_pivots(self):
        sys_ = bspline.constraint_system(bspline.build_basis(4))
        assert tuple(sys_.pivots) == (0, 1)

    @pytest.mark.parametrize("J", [4, 5, 9, 20, 64])
    def test_shapes_and_rank(self, J):
        s = bspline.constraint_system(bspline.build_basis(J))
        assert s.A.shape == (2, J) and s.F.shape == (J - 1, J)
        assert s.W.shape == (2, J - 2) and s.q.shape == (2,)
        assert s.Fbar.shape == (J - 1, J - 2) and s.gbar.shape == (J - 1,)
        assert np.linalg.matrix_rank(s.A[:, list(s.pivots)]) == 2
        assert sorted(list(s.pivots) + list(s.free)) == list(range(J))

    @given(st.integers(4, 40), st.integers(0, 2**32 - 1))
    def test_reconstitution_satisfies_constraints(self, J, seed):
        s = bspline.constraint_system(bspline.build_basis(J))
        tb = np.random.default_rng(seed).normal(scale=3.0, size=(50, J - 2))
        theta = s.reconstitute(tb)
        assert np.abs(theta @ s.A.T - s.c).max() < 1e-10
        assert np.allclose(s.reduce(theta), tb)

    @given(st.integers(4, 30), st.integers(0, 2**32 - 1))
    def test_sign_pattern_equivalence(self, J, seed):
        s = bspline.constraint_system(bspline.build_basis(J))
        tb = np.random.default_rng(seed).normal(size=(200, J - 2))
        full = s.reconstitute(tb) @ s.F.T
        reduced = tb @ s.Fbar.T + s.gbar
        assert np.allclose(full, reduced, atol=1e-10)
        # exclude values within rounding of zero, where sign is not meaningful
        clear = np.abs(full) > 1e-9
        assert np.array_equal((full > 0)[clear], (reduced > 0)[clear])

    @pytest.mark.parametrize("J", [4, 8, 25])
    def test_feasible_reduced_gives_increasing_theta(self, J):
        s = bspline.constraint_system(bspline.build_basis(J))
        base = s.reduce(bspline.linear_coeffs(s.basis))
        rng = np.random.default_rng(J)
        n_hit = 0
        for _ in range(500):
            tb = base + rng.normal(scale=0.2 / J, size=J - 2)
            if np.all(s.Fbar @ tb + s.gbar > 0):
                n_hit += 1
                assert np.all(np.diff(s.reconstitute(tb)) > 0)
        assert n_hit > 0

    @given(st.integers(4, 50))
    def test_linear_coeffs_reproduce_line(self, J):
        spec = bspline.build_basis(J)
        x = np.linspace(0, 1, 23)
        assert np.allclose(bspline.spline_values(spec, bspline.linear_coeffs(spec), x), 2 * x - 1, atol=1e-9)
