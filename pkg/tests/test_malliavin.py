"""Unit tests for the iterated Malliavin matrix machinery.

The worked pair used throughout: d = 2, F = I_2(e1 x e1) = xi1^2 - 1 and
G = I_2(sym(e1 x e2)) = xi1 xi2, whose determinant at k = 1 is 4 xi1^4
with expectation 12, and whose covariance determinant is 2.
"""

import itertools
import math

import numpy as np
import pytest
from numpy.polynomial.hermite_e import hermegauss

from chaoskit.chaos import evaluate, expectation
from chaoskit.malliavin import (
    MalliavinPair,
    Verdict,
    combinatorial_coefficients,
    cov_det,
    covariance_inequality,
    density_check,
    det_chaos,
    det_gram_eval,
    expected_det,
    expected_det_chaos,
    expected_det_closed_form,
    gram_chaos,
    random_pair,
    sum_of_squares_eval,
    t0_term,
    tr_term,
    tr_term_direct,
)
from chaoskit.tensor import (
    basis_tensor,
    basis_vector,
    inner,
    random_symmetric,
    symmetrize,
)


@pytest.fixture
def worked_pair():
    f = basis_tensor(2, (0, 0))
    g = symmetrize(basis_tensor(2, (0, 1)))
    return MalliavinPair(f, g)


def quadrature_expected_det(pair, k, nodes=11):
    """Independent oracle: Gauss-Hermite quadrature of the pointwise
    determinant, exact for polynomials of the sizes used here."""
    x, w = hermegauss(nodes)
    w = w / math.sqrt(2 * math.pi)
    d = pair.dim
    grid = np.array(list(itertools.product(x, repeat=d)))
    weights = np.prod(np.array(list(itertools.product(w, repeat=d))), axis=1)
    vals = sum_of_squares_eval(pair, k, grid)
    return float(np.sum(weights * vals))


class TestPairValidation:
    def test_requires_symmetric(self):
        from chaoskit.tensor import Tensor

        raw = Tensor(2, 2, np.array([[0.0, 1.0], [0.0, 0.0]]))
        with pytest.raises(ValueError):
            MalliavinPair(raw, raw)

    def test_requires_positive_order(self):
        from chaoskit.tensor import Tensor

        with pytest.raises(ValueError):
            MalliavinPair(Tensor.scalar(2, 1.0), basis_vector(2, 0))

    def test_dim_mismatch(self):
        with pytest.raises(ValueError):
            MalliavinPair(basis_vector(2, 0), basis_vector(3, 0))

    def test_random_pair_reproducible(self):
        a = random_pair(2, 2, 3, 99)
        b = random_pair(2, 2, 3, 99)
        assert np.array_equal(a.f.coeffs, b.f.coeffs)
        assert np.array_equal(a.g.coeffs, b.g.coeffs)


class TestGramChaos:
    def test_first_derivative_energy(self):
        # E ||D I_n(f)||^2 = n * E F^2 = n * n! * ||f||^2
        for n, seed in [(1, 1), (2, 2), (3, 3)]:
            f = random_symmetric(2, n, seed)
            pair = MalliavinPair(f, f)
            a, b, c = gram_chaos(pair, 1)
            target = n * math.factorial(n) * inner(f, f)
            assert expectation(a) == pytest.approx(target, rel=1e-12)

    def test_worked_value(self):
        f = basis_tensor(2, (0, 0))
        pair = MalliavinPair(f, f)
        a, _, _ = gram_chaos(pair, 1)
        assert expectation(a) == pytest.approx(4.0)

    def test_equal_components_collapse(self):
        f = random_symmetric(2, 3, 5)
        pair = MalliavinPair(f, f)
        a, b, c = gram_chaos(pair, 2)
        for k in a.terms:
            assert np.allclose(a.terms[k].coeffs, b.terms[k].coeffs)
            assert np.allclose(a.terms[k].coeffs, c.terms[k].coeffs)

    def test_first_chaos_gradient_is_constant(self):
        f = basis_vector(3, 0) + basis_vector(3, 2).scaled(2.0)
        pair = MalliavinPair(f, f)
        a, _, _ = gram_chaos(pair, 1)
        assert set(a.terms) == {0}
        assert expectation(a) == pytest.approx(inner(f, f))

    def test_k_range(self, worked_pair):
        with pytest.raises(ValueError):
            gram_chaos(worked_pair, 0)
        with pytest.raises(ValueError):
            gram_chaos(worked_pair, 3)


class TestSymbolicDeterminant:
    def test_proportional_components_vanish(self):
        f = random_symmetric(2, 2, 8)
        pair = MalliavinPair(f, f.scaled(1.5))
        for k in (1, 2):
            assert expected_det_chaos(pair, k) == pytest.approx(0.0, abs=1e-10)

    def test_worked_value(self, worked_pair):
        assert expected_det_chaos(worked_pair, 1) == pytest.approx(12.0)

    def test_first_chaos_is_gram_determinant(self):
        f = basis_vector(2, 0)
        g = basis_vector(2, 0) + basis_vector(2, 1).scaled(2.0)
        pair = MalliavinPair(f, g)
        det = det_chaos(pair, 1)
        assert set(det.terms) == {0}
        want = inner(f, f) * inner(g, g) - inner(f, g) ** 2
        assert expectation(det) == pytest.approx(want)

    def test_expected_matches_constant_term(self):
        pair = random_pair(2, 2, 3, 17)
        for k in (1, 2):
            full = expectation(det_chaos(pair, k))
            assert expected_det_chaos(pair, k) == pytest.approx(full, rel=1e-12)


class TestSumOfSquares:
    def test_equal_components_zero(self):
        f = random_symmetric(2, 2, 9)
        pair = MalliavinPair(f, f)
        pts = np.random.default_rng(0).standard_normal((50, 2))
        assert np.allclose(sum_of_squares_eval(pair, 1, pts), 0.0)

    def test_worked_point(self, worked_pair):
        assert sum_of_squares_eval(worked_pair, 1, np.array([1.0, 0.0])) == pytest.approx(4.0)
        assert sum_of_squares_eval(worked_pair, 1, np.array([2.0, -1.0])) == pytest.approx(64.0)

    def test_matches_symbolic_polynomial(self):
        pair = random_pair(2, 2, 2, 23)
        pts = np.random.default_rng(1).standard_normal((100, 2))
        sos = sum_of_squares_eval(pair, 1, pts)
        sym = evaluate(det_chaos(pair, 1), pts)
        assert np.allclose(sos, sym, rtol=1e-9, atol=1e-9)
        assert np.all(sos >= 0)

    def test_gram_determinant_path_agrees(self):
        pair = random_pair(3, 2, 3, 29)
        pts = np.random.default_rng(2).standard_normal((40, 3))
        a = sum_of_squares_eval(pair, 1, pts)
        b = det_gram_eval(pair, 1, pts)
        assert np.allclose(a, b, rtol=1e-9, atol=1e-9)


class TestClosedFormTerms:
    def test_t0_vanishes_at_top_order_for_equal_components(self):
        f = random_symmetric(2, 3, 31)
        pair = MalliavinPair(f, f)
        assert t0_term(pair, 3) == pytest.approx(0.0, abs=1e-10)

    def test_t0_worked_value(self, worked_pair):
        assert t0_term(worked_pair, 1) == pytest.approx(8.0)

    def test_t0_matches_direct_form(self):
        for seed in range(4):
            pair = random_pair(2, 2, 3, 40 + seed)
            for k in (1, 2):
                assert t0_term(pair, k) == pytest.approx(
                    tr_term_direct(pair, k, 0), rel=1e-10
                )

    def test_tr_worked_value(self, worked_pair):
        assert tr_term(worked_pair, 1, 1) == pytest.approx(4.0)

    def test_tr_proportional_vanishes(self):
        f = random_symmetric(2, 3, 51)
        pair = MalliavinPair(f, f.scaled(-2.0))
        for r in (1, 2):
            assert tr_term(pair, 1, r) == pytest.approx(0.0, abs=1e-9)

    def test_tr_matches_direct_form(self):
        for seed in range(3):
            pair = random_pair(2, 3, 3, 60 + seed)
            for k in (1, 2):
                for r in range(1, 3 - k + 1):
                    assert tr_term(pair, k, r) == pytest.approx(
                        tr_term_direct(pair, k, r), rel=1e-10
                    )

    def test_tr_top_value_formula(self):
        from chaoskit.tensor import contract

        pair = random_pair(2, 3, 3, 71)
        f, g, n = pair.f, pair.g, 3
        for k in (1, 2):
            r = n - k
            c_fg = contract(f, g, r)
            c_gf = contract(g, f, r)
            want = (
                math.factorial(n) ** 4
                / math.factorial(n - k) ** 2
                * (inner(c_fg, c_fg) - inner(c_fg, c_gf))
            )
            assert tr_term(pair, k, r) == pytest.approx(want, rel=1e-12)

    def test_r_range_errors(self, worked_pair):
        with pytest.raises(ValueError):
            tr_term(worked_pair, 1, 0)
        with pytest.raises(ValueError):
            tr_term(worked_pair, 1, 2)
        with pytest.raises(ValueError):
            tr_term_direct(worked_pair, 1, 2)


class TestExpectedDet:
    def test_worked_breakdown(self, worked_pair):
        b = expected_det_closed_form(worked_pair, 1)
        assert b.t0 == pytest.approx(8.0)
        assert b.tr == pytest.approx((4.0,))
        assert b.remainder == pytest.approx(4.0)
        assert b.closed_form == pytest.approx(12.0)
        assert b.symbolic == pytest.approx(12.0)
        assert b.mc is None

    def test_proportional_zero_for_all_k(self):
        f = random_symmetric(3, 3, 81)
        pair = MalliavinPair(f, f.scaled(4.0))
        scale = math.factorial(3) ** 4 * inner(f, f) * inner(pair.g, pair.g)
        for k in (1, 2, 3):
            assert abs(expected_det(pair, k)) <= 1e-12 * scale

    def test_top_order_reduces_to_covariance(self):
        for seed in range(3):
            pair = random_pair(2, 3, 3, 90 + seed)
            want = math.factorial(3) ** 2 * cov_det(pair)
            assert expected_det(pair, 3) == pytest.approx(want, rel=1e-10)

    def test_against_quadrature_oracle(self):
        cases = [(2, 2, 2), (2, 2, 3), (2, 3, 3), (3, 2, 3), (2, 4, 4)]
        for i, (d, n, m) in enumerate(cases):
            pair = random_pair(d, n, m, 100 + i)
            for k in range(1, min(n, m) + 1):
                oracle = quadrature_expected_det(pair, k, nodes=13)
                assert expected_det(pair, k) == pytest.approx(oracle, rel=1e-9)

    def test_closed_matches_symbolic_including_unequal_orders(self):
        for i, (d, n, m) in enumerate([(2, 2, 3), (3, 1, 4), (2, 4, 3)]):
            pair = random_pair(d, n, m, 120 + i)
            for k in range(1, min(n, m) + 1):
                sym = expected_det_chaos(pair, k)
                assert abs(expected_det(pair, k) - sym) <= 1e-8 * (1 + abs(sym))


class TestCovDet:
    def test_equal_components(self):
        f = random_symmetric(2, 2, 130)
        assert cov_det(MalliavinPair(f, f)) == pytest.approx(0.0, abs=1e-12)

    def test_worked_value(self, worked_pair):
        assert cov_det(worked_pair) == pytest.approx(2.0)

    def test_orthonormal_first_chaos(self):
        pair = MalliavinPair(basis_vector(2, 0), basis_vector(2, 1))
        assert cov_det(pair) == pytest.approx(1.0)

    def test_rejects_unequal_orders(self):
        pair = random_pair(2, 2, 3, 131)
        with pytest.raises(ValueError):
            cov_det(pair)


class TestCovarianceInequality:
    def test_worked_pair(self, worked_pair):
        res = covariance_inequality(worked_pair)
        assert res.lhs == pytest.approx(12.0)
        assert res.rhs == pytest.approx(8.0)
        assert res.holds

    def test_proportional_pair(self):
        f = random_symmetric(2, 2, 140)
        res = covariance_inequality(MalliavinPair(f, f.scaled(0.5)))
        assert res.holds
        assert res.lhs == pytest.approx(0.0, abs=1e-9)
        assert res.rhs == pytest.approx(0.0, abs=1e-9)

    @pytest.mark.parametrize("n,const", [(2, 4.0), (3, 9.0 / 4.0), (4, 16.0 / 9.0)])
    def test_direct_constants(self, n, const):
        for seed in range(10):
            pair = random_pair(2, n, n, 150 + seed)
            e1 = expected_det(pair, 1)
            bound = const * cov_det(pair)
            assert e1 >= bound - 1e-9 * max(1.0, e1, bound)

    def test_higher_order_term_participates(self):
        # from n = 5 on, the second iterated determinant enters the bound
        pair = random_pair(2, 5, 5, 160)
        res = covariance_inequality(pair)
        expected_lhs = 16.0 * expected_det(pair, 1) + (5 * 1 / 4.0) * expected_det(pair, 2)
        assert res.lhs == pytest.approx(expected_lhs, rel=1e-12)
        assert res.holds

    def test_rejects_first_order(self):
        pair = MalliavinPair(basis_vector(2, 0), basis_vector(2, 1))
        with pytest.raises(ValueError):
            covariance_inequality(pair)


class TestDensityCheck:
    def test_proportional_is_degenerate(self):
        f = random_symmetric(2, 3, 170)
        report = density_check(MalliavinPair(f, f.scaled(3.0)))
        assert report.verdict is Verdict.DEGENERATE
        assert report.consistent
        assert max(abs(v) for v in report.expected_dets) <= report.tol_abs

    def test_worked_pair_has_density(self, worked_pair):
        report = density_check(worked_pair)
        assert report.verdict is Verdict.ABSOLUTELY_CONTINUOUS
        assert report.consistent
        assert report.expected_dets == pytest.approx((12.0, 8.0))

    def test_independent_components(self):
        for n in (1, 2, 3):
            f = basis_tensor(2, (0,) * n)
            g = basis_tensor(2, (1,) * n)
            pair = MalliavinPair(f, g)
            report = density_check(pair)
            assert report.verdict is Verdict.ABSOLUTELY_CONTINUOUS
            assert report.cov_det == pytest.approx(float(math.factorial(n) ** 2))

    def test_rejects_unequal_orders(self):
        with pytest.raises(ValueError):
            density_check(random_pair(2, 2, 3, 171))

    def test_tol_must_be_positive(self, worked_pair):
        with pytest.raises(ValueError):
            density_check(worked_pair, tol_abs=0.0)


class TestCombinatorialCoeffs:
    def test_alpha_worked_value(self):
        c = combinatorial_coefficients(2, 2, 1, 0, 0)
        assert c.alpha == 32  # (2! 2! / 1! 1! 0!)^2 * 2!

    def test_gamma_zero_at_even_split(self):
        assert combinatorial_coefficients(4, 4, 1, 0, 2).gamma == 0

    def test_gamma_sign(self):
        for n in range(2, 7):
            for s in range(0, n // 2 + 1):
                gamma = combinatorial_coefficients(n, n, 1, 0, s).gamma
                if s <= (n - 1) // 2:
                    assert gamma >= 0

    def test_beta_positive(self):
        for n, m, k, r in [(3, 3, 1, 1), (4, 3, 1, 2), (4, 4, 2, 2)]:
            assert combinatorial_coefficients(n, m, k, r, 0).beta > 0

    def test_range_validation(self):
        with pytest.raises(ValueError):
            combinatorial_coefficients(2, 2, 0, 0, 0)
        with pytest.raises(ValueError):
            combinatorial_coefficients(2, 2, 1, 2, 0)

    def test_cap(self):
        from chaoskit.chaos import CoefficientCapError

        with pytest.raises(CoefficientCapError):
            combinatorial_coefficients(15, 15, 1, 0, 0)


class TestOrderEquivalence:
    """All iterated determinants vanish together or are positive together."""

    def test_random_pairs(self):
        for seed in range(10):
            rng = np.random.default_rng(seed)
            d = int(rng.integers(2, 4))
            n = int(rng.integers(2, 5))
            pair = random_pair(d, n, n, 200 + seed)
            dets = [expected_det(pair, k) for k in range(1, n + 1)]
            assert min(dets) > 0

    def test_proportional_pairs(self):
        for seed in range(5):
            f = random_symmetric(2, 3, 220 + seed)
            pair = MalliavinPair(f, f.scaled(2.0))
            scale = math.factorial(3) ** 4 * inner(f, f) * inner(pair.g, pair.g)
            dets = [expected_det(pair, k) for k in (1, 2, 3)]
            assert max(abs(v) for v in dets) <= 1e-12 * scale
