import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose, assert_array_equal

from rcrdesign.model import (
    BasisSpec,
    Design,
    DesignError,
    PopulationSetup,
    WeightMeasure,
    evaluate_basis,
    information_matrix,
    monomial_moments,
    v_matrix,
    validate_design,
)


class TestEvaluateBasis:
    def test_linear_at_zero(self, linear):
        assert_array_equal(evaluate_basis(linear, 0.0), [1.0, 0.0])

    def test_quadratic_at_minus_one(self, quadratic):
        assert_array_equal(evaluate_basis(quadratic, -1.0), [1.0, -1.0, 1.0])

    def test_outside_region(self, linear):
        with pytest.raises(DesignError, match="outside region"):
            evaluate_basis(linear, 1.5)

    def test_boundary_tolerance(self, linear):
        evaluate_basis(linear, 1.0 + 5e-13)
        with pytest.raises(DesignError):
            evaluate_basis(linear, 1.0 + 1e-10)

    @pytest.mark.parametrize("p", range(1, 12))
    def test_powers_of_two_exact(self, p):
        f = evaluate_basis(BasisSpec(p, (0.0, 3.0)), 2.0)
        assert f.tolist() == [2.0**t for t in range(p)]

    def test_vector_input_gives_vandermonde(self, quadratic):
        F = evaluate_basis(quadratic, [-1, 0, 1])
        assert_array_equal(F, [[1, -1, 1], [1, 0, 0], [1, 1, 1]])


class TestBasisSpec:
    @pytest.mark.parametrize("p, region", [(0, (0, 1)), (2, (1, 1)), (2, (1, 0)), (1.5, (0, 1))])
    def test_rejects(self, p, region):
        with pytest.raises(DesignError):
            BasisSpec(p, region)

    def test_named_bases(self):
        assert BasisSpec.linear() == BasisSpec(2, (0, 1))
        assert BasisSpec.quadratic().region == (-1.0, 1.0)
        assert BasisSpec.quadratic().degree == 2


class TestValidateDesign:
    def test_unchanged(self):
        d = validate_design([0, 1], [0.3, 0.7])
        assert d.support.tolist() == [0, 1]
        assert d.weights.tolist() == [0.3, 0.7]

    def test_sorted(self):
        d = validate_design([1, 0], [0.7, 0.3])
        assert d.support.tolist() == [0, 1]
        assert d.weights.tolist() == [0.3, 0.7]

    def test_sum_too_large(self):
        with pytest.raises(DesignError, match="sum"):
            validate_design([0, 1], [0.5, 0.6])

    def test_negative(self):
        with pytest.raises(DesignError, match="negative"):
            validate_design([0, 1], [-0.1, 1.1])

    def test_empty(self):
        with pytest.raises(DesignError, match="empty"):
            validate_design([], [])

    def test_small_drift_rescaled(self):
        d = validate_design([0, 0.5, 1], [0.2, 0.3, 0.5 + 5e-10])
        assert abs(d.weights.sum() - 1) < 1e-15

    def test_drift_beyond_threshold(self):
        with pytest.raises(DesignError):
            validate_design([0, 1], [0.5, 0.5 + 2e-9])

    def test_duplicates_merged(self):
        d = validate_design([0.5, 0, 0.5], [0.25, 0.5, 0.25])
        assert d.support.tolist() == [0, 0.5]
        assert_allclose(d.weights, [0.5, 0.5])

    def test_design_is_immutable(self):
        d = validate_design([0, 1], [0.5, 0.5])
        with pytest.raises(ValueError):
            d.weights[0] = 1.0

    def test_design_constructor_checks(self):
        with pytest.raises(DesignError, match="distinct"):
            Design([0, 0], [0.5, 0.5])
        with pytest.raises(DesignError):
            Design([0, 1], [0.5, 0.4])


class TestInformationMatrix:
    def test_two_point(self, linear):
        M = information_matrix(validate_design([0, 1], [0.5, 0.5]), linear)
        assert_allclose(M, [[1, 0.5], [0.5, 0.5]], atol=1e-15)

    def test_three_point(self, quadratic):
        M = information_matrix(validate_design([-1, 0, 1], [0.25, 0.5, 0.25]), quadratic)
        assert_allclose(M, [[1, 0, 0.5], [0, 0.5, 0], [0.5, 0, 0.5]], atol=1e-15)

    def test_single_point_rank_one(self, linear):
        M = information_matrix(validate_design([1], [1]), linear)
        assert_array_equal(M, [[1, 1], [1, 1]])
        assert np.linalg.matrix_rank(M) == 1

    @settings(max_examples=200, deadline=None)
    @given(
        p=st.integers(1, 5),
        data=st.data(),
    )
    def test_symmetric_psd_and_vandermonde_rank(self, p, data):
        basis = BasisSpec(p, (-1.0, 2.0))
        k = data.draw(st.integers(1, 7))
        grid = np.linspace(-1, 2, 13)
        idx = data.draw(st.lists(st.integers(0, 12), min_size=k, max_size=k, unique=True))
        positive = data.draw(st.lists(st.booleans(), min_size=k, max_size=k).filter(any))
        raw = np.array([data.draw(st.floats(0.05, 1.0)) if on else 0.0 for on in positive])
        design = validate_design(grid[idx], raw / raw.sum())
        M = information_matrix(design, basis)
        assert np.max(np.abs(M - M.T)) <= 1e-14
        assert np.min(np.linalg.eigvalsh(M)) >= -1e-12
        n_pos = int(np.count_nonzero(design.weights > 0))
        assert np.linalg.matrix_rank(M, tol=1e-10) == min(n_pos, p)


class TestVMatrix:
    def test_linear_unit_interval(self, linear):
        assert_allclose(v_matrix(linear, WeightMeasure.uniform(0, 1)), [[1, 0.5], [0.5, 1 / 3]], rtol=1e-15)

    def test_quadratic_symmetric(self, quadratic):
        V = v_matrix(quadratic, WeightMeasure.uniform(-1, 1))
        assert_allclose(V, [[1, 0, 1 / 3], [0, 1 / 3, 0], [1 / 3, 0, 1 / 5]], rtol=1e-15, atol=0)

    def test_default_measure_is_uniform_on_region(self, quadratic):
        assert_array_equal(v_matrix(quadratic), v_matrix(quadratic, WeightMeasure.uniform(-1, 1)))

    def test_discrete_equals_information_matrix(self, linear):
        V = v_matrix(linear, WeightMeasure.discrete([0, 1], [0.5, 0.5]))
        assert_allclose(V, information_matrix(validate_design([0, 1], [0.5, 0.5]), linear))

    def test_discrete_outside_region(self, linear):
        with pytest.raises(DesignError):
            v_matrix(linear, WeightMeasure.discrete([0, 2], [0.5, 0.5]))

    @pytest.mark.parametrize("p, region", [(2, (0, 1)), (3, (-1, 1)), (4, (0.5, 3.0)), (5, (-2, 1))])
    def test_uniform_is_limit_of_refining_grids(self, p, region):
        basis = BasisSpec(p, region)
        a, b = region
        N = 10**4
        pts = a + (b - a) * (np.arange(N) + 0.5) / N
        Vd = v_matrix(basis, WeightMeasure.discrete(pts, np.full(N, 1 / N)))
        Vu = v_matrix(basis, WeightMeasure.uniform(a, b))
        assert np.max(np.abs(Vd - Vu) / np.abs(Vu).max()) <= 1e-3

    def test_uniform_positive_definite(self):
        for p in range(1, 7):
            assert np.min(np.linalg.eigvalsh(v_matrix(BasisSpec(p, (0, 1))))) > 0

    def test_moments(self):
        assert_allclose(monomial_moments(-1, 1, 4), [1, 0, 1 / 3, 0, 1 / 5])


class TestMeasureAndSetup:
    def test_mass_must_be_one(self):
        with pytest.raises(DesignError):
            WeightMeasure.discrete([0, 1], [0.5, 0.6])

    def test_negative_mass(self):
        with pytest.raises(DesignError):
            WeightMeasure.discrete([0, 1], [-0.5, 1.5])

    @pytest.mark.parametrize("n, m", [(0, 1), (1, 0), (2.5, 1)])
    def test_setup_rejects(self, n, m):
        with pytest.raises(DesignError):
            PopulationSetup(n, m)
