"""Unit tests for chaos-expansion arithmetic."""

import math

import numpy as np
import pytest
from numpy.polynomial.hermite_e import hermeval

from chaoskit.chaos import (
    ChaosExpansion,
    CoefficientCapError,
    derivative,
    divergence,
    evaluate,
    expectation,
    hermite,
    l2_inner,
    multiply,
)
from chaoskit.tensor import (
    Tensor,
    basis_tensor,
    basis_vector,
    random_symmetric,
    symmetrize,
    tensors_allclose,
)


def I(t):
    return ChaosExpansion.integral(t)


@pytest.fixture
def e1():
    return basis_vector(2, 0)


@pytest.fixture
def e2():
    return basis_vector(2, 1)


class TestConstruction:
    def test_drops_zero_terms(self):
        F = ChaosExpansion(2, {1: Tensor.zeros(2, 1), 0: Tensor.scalar(2, 1.0)})
        assert list(F.terms) == [0]

    def test_rejects_asymmetric_terms(self):
        raw = Tensor(2, 2, np.array([[0.0, 1.0], [0.0, 0.0]]))
        with pytest.raises(ValueError):
            ChaosExpansion(2, {2: raw})

    def test_rejects_order_above_cap(self):
        with pytest.raises(CoefficientCapError):
            ChaosExpansion(2, {21: Tensor.zeros(2, 21)})

    def test_linear_ops(self, e1):
        F = I(e1)
        zero = ChaosExpansion.zero(2)
        assert (F + zero).terms == F.terms
        assert not (0.0 * F).terms
        G = 2.0 * F
        assert tensors_allclose(G.terms[1], e1.scaled(2.0))


class TestMultiply:
    def test_square_of_first_chaos(self, e1):
        # H_1(x)^2 = H_2(x) + 1
        out = multiply(I(e1), I(e1))
        assert set(out.terms) == {0, 2}
        assert out.terms[0].item() == pytest.approx(1.0)
        assert tensors_allclose(out.terms[2], basis_tensor(2, (0, 0)))

    def test_orthogonal_first_chaos(self, e1, e2):
        out = multiply(I(e1), I(e2))
        assert set(out.terms) == {2}
        assert tensors_allclose(out.terms[2], symmetrize(basis_tensor(2, (0, 1))))

    def test_second_chaos_product(self):
        # (xi1^2 - 1) * (xi1 xi2): no constant term, order-2 part 2*sym(e1 x e2)
        f = basis_tensor(2, (0, 0))
        g = symmetrize(basis_tensor(2, (0, 1)))
        out = multiply(I(f), I(g))
        assert set(out.terms) == {2, 4}
        assert expectation(out) == 0.0
        assert tensors_allclose(out.terms[2], g.scaled(2.0))

    def test_commutative(self):
        F = I(random_symmetric(3, 2, 1))
        G = I(random_symmetric(3, 3, 2))
        left, right = multiply(F, G), multiply(G, F)
        assert set(left.terms) == set(right.terms)
        for k in left.terms:
            assert tensors_allclose(left.terms[k], right.terms[k], rel=1e-12)

    def test_associative(self):
        F = I(random_symmetric(2, 2, 3))
        G = I(random_symmetric(2, 1, 4))
        H = I(random_symmetric(2, 2, 5))
        a = multiply(multiply(F, G), H)
        b = multiply(F, multiply(G, H))
        assert set(a.terms) == set(b.terms)
        for k in a.terms:
            assert tensors_allclose(a.terms[k], b.terms[k], rel=1e-10, abs_tol=1e-12)

    def test_cap(self):
        F = I(random_symmetric(2, 11, 1))
        with pytest.raises(CoefficientCapError):
            multiply(F, F)

    def test_dim_mismatch(self, e1):
        with pytest.raises(ValueError):
            multiply(I(e1), I(basis_vector(3, 0)))


class TestExpectation:
    def test_centered(self):
        for n in (1, 2, 3):
            assert expectation(I(random_symmetric(2, n, n))) == 0.0

    def test_constant(self):
        assert expectation(ChaosExpansion.constant(2, 4.5)) == 4.5

    def test_isometry_first_chaos(self, e1):
        assert expectation(multiply(I(e1), I(e1))) == pytest.approx(1.0)


class TestL2Inner:
    def test_diagonal(self):
        f = basis_tensor(2, (0, 0))
        assert l2_inner(I(f), I(f)) == pytest.approx(2.0)

    def test_cross_order_vanishes(self, e1):
        F = I(e1)
        G = I(random_symmetric(2, 2, 6))
        assert l2_inner(F, G) == 0.0

    def test_matches_product_expectation(self):
        rng = np.random.default_rng(7)
        f = random_symmetric(2, 2, 10)
        g = random_symmetric(2, 1, 11)
        F = I(f) + I(g) + ChaosExpansion.constant(2, float(rng.standard_normal()))
        assert l2_inner(F, F) == pytest.approx(expectation(multiply(F, F)), rel=1e-12)


class TestDerivative:
    def test_first_chaos(self, e1):
        dF = derivative(I(e1), 1)
        assert expectation(dF[(0,)]) == pytest.approx(1.0)
        assert not dF[(1,)].terms

    def test_second_chaos(self):
        # d/dxi1 of H_2(xi1) = 2 xi1
        dF = derivative(I(basis_tensor(2, (0, 0))), 1)
        entry = dF[(0,)]
        assert set(entry.terms) == {1}
        assert tensors_allclose(entry.terms[1], basis_vector(2, 0).scaled(2.0))

    def test_constant_has_zero_derivative(self):
        dF = derivative(ChaosExpansion.constant(2, 3.0), 1)
        assert all(not e.terms for e in dF.entries.values())

    def test_requires_positive_order(self, e1):
        with pytest.raises(ValueError):
            derivative(I(e1), 0)

    def test_entries_shared_within_orbit(self):
        dF = derivative(I(random_symmetric(2, 3, 12)), 2)
        assert dF[(0, 1)] is dF[(1, 0)]


class TestDivergence:
    def test_constant_field(self):
        entries = {
            (0,): ChaosExpansion.constant(2, 2.0),
            (1,): ChaosExpansion.constant(2, -1.0),
        }
        from chaoskit.chaos import HValuedChaos

        u = HValuedChaos(2, 1, entries)
        out = divergence(u)
        assert set(out.terms) == {1}
        assert np.allclose(out.terms[1].coeffs, [2.0, -1.0])

    @pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
    def test_recovers_scaled_integral(self, n):
        f = random_symmetric(2, n, 20 + n)
        F = I(f)
        out = divergence(derivative(F, 1))
        assert set(out.terms) == {n}
        assert tensors_allclose(out.terms[n], f.scaled(float(n)), rel=1e-12)

    def test_rejects_higher_tensor_order(self):
        u = derivative(I(random_symmetric(2, 2, 1)), 2)
        with pytest.raises(ValueError):
            divergence(u)


class TestEvaluate:
    def test_hermite_second_order(self):
        F = I(basis_tensor(2, (0, 0)))
        assert evaluate(F, np.array([2.0, 0.0])) == pytest.approx(3.0)  # 4 - 1

    def test_mixed_term(self):
        F = I(symmetrize(basis_tensor(2, (0, 1))))
        assert evaluate(F, np.array([1.5, -2.0])) == pytest.approx(-3.0)

    def test_constant(self):
        assert evaluate(ChaosExpansion.constant(3, 7.5), np.zeros(3)) == 7.5

    def test_batch_shape(self):
        F = I(random_symmetric(2, 2, 30))
        pts = np.random.default_rng(0).standard_normal((17, 2))
        out = evaluate(F, pts)
        assert out.shape == (17,)
        assert out[3] == pytest.approx(evaluate(F, pts[3]))

    def test_length_mismatch(self):
        F = I(random_symmetric(2, 2, 31))
        with pytest.raises(ValueError):
            evaluate(F, np.zeros(3))

    @pytest.mark.parametrize("seed", range(6))
    def test_product_formula_pointwise(self, seed):
        rng = np.random.default_rng(seed)
        d = int(rng.integers(2, 5))
        n = int(rng.integers(1, 5))
        m = int(rng.integers(1, 5))
        F = I(random_symmetric(d, n, 40 + seed))
        G = I(random_symmetric(d, m, 50 + seed))
        pts = rng.standard_normal((25, d))
        lhs = evaluate(multiply(F, G), pts)
        rhs = evaluate(F, pts) * evaluate(G, pts)
        assert np.allclose(lhs, rhs, rtol=1e-9, atol=1e-9)

    def test_derivative_matches_finite_difference(self):
        F = I(random_symmetric(3, 3, 60)) + ChaosExpansion.constant(3, 0.7)
        dF = derivative(F, 1)
        xi = np.array([0.3, -1.2, 0.8])
        h = 1e-5
        for j in range(3):
            up, down = xi.copy(), xi.copy()
            up[j] += h
            down[j] -= h
            fd = (evaluate(F, up) - evaluate(F, down)) / (2 * h)
            assert evaluate(dF[(j,)], xi) == pytest.approx(fd, rel=1e-5, abs=1e-7)


class TestHermite:
    def test_small_cases(self):
        x = 1.7
        assert hermite(0, x) == 1.0
        assert hermite(1, x) == x
        assert hermite(2, x) == pytest.approx(x * x - 1.0)
        assert hermite(3, 0.0) == 0.0
        assert hermite(4, 1.0) == pytest.approx(-2.0)  # 1 - 6 + 3

    @pytest.mark.parametrize("n", range(8))
    def test_matches_reference_series(self, n):
        xs = np.linspace(-3, 3, 11)
        coef = [0.0] * n + [1.0]
        assert np.allclose(hermite(n, xs), hermeval(xs, coef), rtol=1e-12, atol=1e-12)

    def test_isometry_scaling(self):
        # E[I_n(h^{x n})^2] = n! for a unit h forces this normalization
        nodes_w = np.polynomial.hermite_e.hermegauss(24)
        nodes, w = nodes_w
        w = w / math.sqrt(2 * math.pi)
        for n in range(6):
            vals = np.asarray(hermite(n, nodes))
            assert float(np.sum(w * vals * vals)) == pytest.approx(
                math.factorial(n), rel=1e-10
            )

    def test_negative_degree(self):
        with pytest.raises(ValueError):
            hermite(-1, 0.0)
