import numpy as np
import pytest

from iic_lab import (
    NotUnique,
    SolverOptions,
    detect_support,
    kernel_basis,
    min_norm_l1,
    min_norm_l2,
    min_norm_lp,
    uniqueness_certificate,
    validate_design,
)
from util import enumerate_l1, random_design


class TestMinNormL2:
    def test_closed_form(self):
        D = validate_design([[3, 4]])
        interp = min_norm_l2(D, [5])
        np.testing.assert_allclose(interp.theta, [0.6, 0.8], atol=1e-12)
        assert np.linalg.norm(interp.theta) == pytest.approx(1.0, abs=1e-12)

    def test_identity(self):
        interp = min_norm_l2(validate_design(np.eye(2)), [1, 2])
        np.testing.assert_allclose(interp.theta, [1, 2], atol=1e-12)

    def test_symmetry(self):
        interp = min_norm_l2(validate_design([[1, 1]]), [2])
        np.testing.assert_allclose(interp.theta, [1, 1], atol=1e-12)
        assert interp.theta @ interp.theta == pytest.approx(2.0, abs=1e-12)


class TestMinNormLp:
    def test_symmetry_p4(self):
        interp = min_norm_lp(validate_design([[1, 1]]), [2], 4)
        np.testing.assert_allclose(interp.theta, [1, 1], atol=1e-10)

    def test_p2_matches_l2(self):
        rng = np.random.default_rng(21)
        for _ in range(10):
            n = rng.integers(1, 5)
            d = rng.integers(n + 1, 10)
            D = random_design(rng, n, d)
            Y = rng.standard_normal(n)
            a = min_norm_lp(D, Y, 2).theta
            b = min_norm_l2(D, Y).theta
            np.testing.assert_allclose(a, b, atol=1e-8)

    def test_p3_against_line_search_oracle(self):
        # 1-d kernel: brute-force the kernel coordinate to 1e-6
        D = validate_design([[3, 4]])
        Y = [5]
        interp = min_norm_lp(D, Y, 3)
        Q = kernel_basis(D).Q
        theta0 = min_norm_l2(D, Y).theta
        grid = np.linspace(-3, 3, 20001)
        vals = np.sum(np.abs(theta0[None, :] + np.outer(grid, Q.ravel())) ** 3, axis=1)
        w_best = grid[np.argmin(vals)]
        theta_grid = theta0 + Q.ravel() * w_best
        assert np.sum(np.abs(interp.theta) ** 3) <= np.min(vals) + 1e-9
        np.testing.assert_allclose(interp.theta, theta_grid, atol=1e-3)
        np.testing.assert_allclose(D.X @ interp.theta, Y, atol=1e-10)

    def test_kkt_stationarity(self):
        rng = np.random.default_rng(33)
        for p in (2.0, 2.5, 3.0, 4.0):
            for _ in range(8):
                n = rng.integers(1, 5)
                d = rng.integers(n + 1, 11)
                D = random_design(rng, n, d)
                Y = rng.standard_normal(n)
                interp = min_norm_lp(D, Y, p)
                Q = kernel_basis(D).Q
                a = np.abs(interp.theta)
                grad = p * (Q.T @ (a ** (p - 1) * np.sign(interp.theta)))
                h = float(np.sum(a**p))
                assert np.max(np.abs(grad)) <= 1e-9 * max(1.0, h)

    def test_perturbation_optimality(self):
        rng = np.random.default_rng(44)
        for p in (2.0, 3.0, 4.0):
            D = random_design(rng, 3, 8)
            Y = rng.standard_normal(3)
            interp = min_norm_lp(D, Y, p)
            Q = kernel_basis(D).Q
            base = np.sum(np.abs(interp.theta) ** p) ** (1.0 / p)
            for _ in range(100):
                eps = rng.standard_normal(Q.shape[1])
                eps *= rng.uniform(0, 0.1) / max(np.linalg.norm(eps), 1e-12)
                perturbed = interp.theta + Q @ eps
                assert np.sum(np.abs(perturbed) ** p) ** (1.0 / p) >= base - 1e-9

    def test_positive_homogeneity(self):
        rng = np.random.default_rng(55)
        D = random_design(rng, 2, 6)
        Y = rng.standard_normal(2)
        for p in (2.0, 3.0):
            theta = min_norm_lp(D, Y, p).theta
            theta_scaled = min_norm_lp(D, 7.0 * np.asarray(Y), p).theta
            np.testing.assert_allclose(theta_scaled, 7.0 * theta, rtol=1e-7, atol=1e-9)

    def test_rejects_small_p(self):
        with pytest.raises(ValueError):
            min_norm_lp(validate_design([[1, 1]]), [1], 1.5)


class TestMinNormL1:
    def test_holder_instance(self):
        D = validate_design([[2, 1]])
        interp = min_norm_l1(D, [2])
        np.testing.assert_allclose(interp.theta, [1, 0], atol=1e-10)
        assert interp.support.tolist() == [0]
        assert interp.signs.tolist() == [1.0]
        assert np.sum(np.abs(interp.theta)) == pytest.approx(1.0, abs=1e-10)

    def test_symmetric_tie_not_unique(self):
        with pytest.raises(NotUnique):
            min_norm_l1(validate_design([[1, 1]]), [1])

    def test_square_invertible(self):
        interp = min_norm_l1(validate_design(np.eye(2)), [1, -2])
        np.testing.assert_allclose(interp.theta, [1, -2], atol=1e-10)
        assert interp.support.tolist() == [0, 1]
        assert interp.signs.tolist() == [1.0, -1.0]

    def test_zero_rhs(self):
        interp = min_norm_l1(validate_design([[2, 1]]), [0.0])
        np.testing.assert_allclose(interp.theta, [0, 0])
        assert interp.support.size == 0

    def test_matches_enumeration_on_tiny_instances(self):
        rng = np.random.default_rng(66)
        checked = 0
        while checked < 30:
            n = int(rng.integers(1, 4))
            d = int(rng.integers(n + 1, 7))
            D = random_design(rng, n, d)
            Y = rng.standard_normal(n)
            best, argmins = enumerate_l1(D.X, Y)
            if len(argmins) > 1:
                with pytest.raises(NotUnique):
                    min_norm_l1(D, Y)
            else:
                interp = min_norm_l1(D, Y)
                assert np.sum(np.abs(interp.theta)) == pytest.approx(best, abs=1e-8)
            checked += 1

    def test_certificate_soundness_across_seeds(self):
        rng = np.random.default_rng(77)
        D = random_design(rng, 3, 6)
        Y = rng.standard_normal(3)
        ref = min_norm_l1(D, Y, SolverOptions(seed=0))
        assert ref.certificate is not None and ref.certificate.unique
        for seed in range(1, 11):
            again = min_norm_l1(D, Y, SolverOptions(seed=seed))
            np.testing.assert_allclose(again.theta, ref.theta, atol=1e-6)

    def test_homogeneity(self):
        rng = np.random.default_rng(88)
        D = random_design(rng, 2, 5)
        Y = rng.standard_normal(2)
        theta = min_norm_l1(D, Y).theta
        theta_scaled = min_norm_l1(D, 3.0 * Y).theta
        np.testing.assert_allclose(theta_scaled, 3.0 * theta, rtol=1e-7, atol=1e-9)

    def test_interpolation_residuals(self):
        rng = np.random.default_rng(99)
        for p in (1.0, 2.0, 3.0):
            D = random_design(rng, 3, 9)
            Y = rng.standard_normal(3)
            if p == 1:
                interp = min_norm_l1(D, Y)
            elif p == 2:
                interp = min_norm_l2(D, Y)
            else:
                interp = min_norm_lp(D, Y, p)
            assert interp.residual <= 1e-8 * max(1.0, np.linalg.norm(Y))


class TestDetectSupport:
    def test_basic(self):
        support, signs = detect_support(np.array([1.0, 0.0, -3.0]))
        assert support.tolist() == [0, 2]
        assert signs.tolist() == [1.0, -1.0]

    def test_below_threshold(self):
        support, _ = detect_support(np.array([1e-12, 1.0]))
        assert support.tolist() == [1]

    def test_zero_vector(self):
        support, signs = detect_support(np.zeros(4))
        assert support.size == 0 and signs.size == 0


class TestUniquenessCertificate:
    def test_scalar_solve(self):
        D = validate_design([[2, 1]])
        report = uniqueness_certificate(D, [0], [1.0])
        assert report.mu[0] == pytest.approx(0.5, abs=1e-12)
        assert report.max_abs_offsupport == pytest.approx(0.5, abs=1e-12)
        assert report.unique

    def test_tie_margin_zero(self):
        report = uniqueness_certificate(validate_design([[1, 1]]), [0], [1.0])
        assert report.max_abs_offsupport == pytest.approx(1.0, abs=1e-12)
        assert not report.unique

    def test_full_support_identity(self):
        report = uniqueness_certificate(validate_design(np.eye(2)), [0, 1], [1.0, 1.0])
        np.testing.assert_allclose(report.mu, [1, 1], atol=1e-12)
        assert report.max_abs_offsupport == 0.0
        assert report.unique
