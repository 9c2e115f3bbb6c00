import numpy as np
import pytest

from iic_lab import DegreeExhausted, RFFConfig, apply_map, median_bandwidth, poly_map, rff_map


@pytest.fixture
def base_rows():
    rng = np.random.default_rng(1)
    return rng.standard_normal((12, 3))


class TestRFF:
    def test_rows_on_unit_sphere(self, base_rows):
        fm = rff_map(base_rows, RFFConfig(target_dim=10, sigma=1.5, seed=0))
        norms = np.linalg.norm(fm.Z, axis=1)
        np.testing.assert_allclose(norms, 1.0, atol=1e-12)

    def test_zero_input_row_pattern(self):
        fm = rff_map(np.zeros((1, 2)), RFFConfig(target_dim=6, sigma=1.0, seed=0))
        expected = np.array([[1, 0, 1, 0, 1, 0]]) / np.sqrt(3)
        np.testing.assert_allclose(fm.Z, expected, atol=1e-15)

    def test_bitwise_determinism(self, base_rows):
        cfg = RFFConfig(target_dim=8, sigma=2.0, seed=7)
        a = rff_map(base_rows, cfg)
        b = rff_map(base_rows, cfg)
        np.testing.assert_array_equal(a.Z, b.Z)

    def test_nested_sweep_prefix_bitwise(self, base_rows):
        # d_h = 4 and 16: the 1/sqrt(d_h) scales are exact powers of two, so
        # the nested-draw property is visible bitwise through the rescale
        narrow = rff_map(base_rows, RFFConfig(target_dim=8, sigma=2.0, seed=3))
        wide = rff_map(base_rows, RFFConfig(target_dim=32, sigma=2.0, seed=3))
        np.testing.assert_array_equal(narrow.Z, 2.0 * wide.Z[:, :8])

    def test_nested_sweep_prefix_general(self, base_rows):
        narrow = rff_map(base_rows, RFFConfig(target_dim=8, sigma=2.0, seed=3))
        wide = rff_map(base_rows, RFFConfig(target_dim=16, sigma=2.0, seed=3))
        np.testing.assert_allclose(narrow.Z, np.sqrt(2.0) * wide.Z[:, :8], rtol=1e-15)

    def test_odd_target_dim(self, base_rows):
        fm = rff_map(base_rows, RFFConfig(target_dim=9, sigma=1.0, seed=0))
        assert fm.Z.shape == (12, 8)  # effective dimension 2 * floor(9/2)

    def test_apply_map_reuses_frequencies(self, base_rows):
        cfg = RFFConfig(target_dim=8, sigma=2.0, seed=3)
        fm = rff_map(base_rows, cfg)
        np.testing.assert_array_equal(apply_map(fm, base_rows), fm.Z)
        other = np.ones((2, 3))
        direct = rff_map(other, cfg).Z
        np.testing.assert_array_equal(apply_map(fm, other), direct)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            RFFConfig(target_dim=1, sigma=1.0)
        with pytest.raises(ValueError):
            RFFConfig(target_dim=4, sigma=0.0)


class TestMedianBandwidth:
    def test_two_points(self):
        assert median_bandwidth([[0.0], [3.0]]) == pytest.approx(3.0)

    def test_positive_on_random(self):
        rng = np.random.default_rng(2)
        assert median_bandwidth(rng.standard_normal((20, 4))) > 0


class TestPolyMap:
    def test_univariate_graded(self):
        X0 = np.array([[1.0], [2.0], [3.0]])
        fm = poly_map(X0, degree=3, target_dim=2)
        raw_x = X0[:, 0]
        raw_x2 = raw_x**2
        for j, raw in enumerate([raw_x, raw_x2]):
            expected = raw / np.sqrt(np.mean(raw**2))
            np.testing.assert_allclose(fm.Z[:, j], expected, atol=1e-12)

    def test_bivariate_graded_lex_order(self):
        rng = np.random.default_rng(3)
        X0 = rng.standard_normal((10, 2))
        fm = poly_map(X0, degree=2, target_dim=5)
        assert fm.provenance["exponents"] == [(0,), (1,), (0, 0), (0, 1), (1, 1)]

    def test_constant_column_dropped(self):
        X0 = np.column_stack([np.ones(5), np.arange(5.0)])
        fm = poly_map(X0, degree=2, target_dim=3)
        # x1 is constant: kept monomials skip it and move on
        assert (0,) not in fm.provenance["exponents"]
        assert fm.Z.shape == (5, 3)

    def test_degree_exhausted(self):
        X0 = np.arange(4.0).reshape(-1, 1)
        with pytest.raises(DegreeExhausted):
            poly_map(X0, degree=2, target_dim=5)

    def test_apply_map_uses_train_standardization(self):
        rng = np.random.default_rng(4)
        train = rng.standard_normal((8, 2))
        test = rng.standard_normal((3, 2))
        fm = poly_map(train, degree=2, target_dim=4)
        Z_test = apply_map(fm, test)
        for j, idx in enumerate(fm.provenance["exponents"]):
            raw = np.prod(test[:, idx], axis=1)
            expected = raw / fm.provenance["scales"][j]
            np.testing.assert_allclose(Z_test[:, j], expected, atol=1e-12)
