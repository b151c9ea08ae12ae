import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pencilcross.polynomial import (
    ComplexPolynomial,
    PolynomialError,
    RootFindingError,
    aberth,
    characteristic_polynomial,
    charpoly_coeffs,
    cluster_roots,
    eigenvalues,
    eigenvalues_batch,
    fit_on_circle,
    interpolate,
    roots,
)


def _match(a, b):
    """Max distance after optimal matching of two small root lists."""
    a, b = np.asarray(a), np.asarray(b)
    cost = np.abs(a[:, None] - b[None, :])
    best = np.inf
    for p in itertools.permutations(range(len(b))):
        best = min(best, cost[np.arange(len(a)), p].max())
    return best


def _cofactor_det(m):
    n = m.shape[0]
    if n == 1:
        return m[0, 0]
    return sum((-1) ** j * m[0, j] * _cofactor_det(np.delete(m[1:], j, axis=1)) for j in range(n))


def _unitary(rng, n):
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


class TestComplexPolynomial:
    def test_strips_leading_zeros(self):
        p = ComplexPolynomial([1, 2, 0, 0])
        assert p.degree == 1
        assert ComplexPolynomial([0, 0]).degree == -1

    def test_rejects_nonfinite(self):
        with pytest.raises(PolynomialError):
            ComplexPolynomial([1, np.nan])

    def test_evaluate_and_derivative(self):
        p = ComplexPolynomial([1, 0, 1])  # t^2 + 1
        assert p(1j) == 0
        assert p.derivative().allclose([0, 2])

    def test_product_of_factors(self):
        p = ComplexPolynomial([1, 1]) * ComplexPolynomial([2, 1])
        assert p.allclose([2, 3, 1])


class TestCharacteristicPolynomial:
    def test_zero_matrix(self):
        assert characteristic_polynomial(np.zeros((2, 2))).allclose([0, 0, 1])

    def test_diagonal(self):
        assert characteristic_polynomial(np.diag([1.0, 2.0])).allclose([2, 3, 1])

    def test_matches_cofactor_expansion(self):
        rng = np.random.default_rng(3)
        m = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        p = characteristic_polynomial(m)
        for t in np.exp(2j * np.pi * np.arange(5) / 5) * 1.3:
            ref = _cofactor_det(m + t * np.eye(4))
            assert abs(p(t) - ref) <= 1e-10 * abs(ref)

    def test_non_square(self):
        with pytest.raises((ValueError, PolynomialError)):
            characteristic_polynomial(np.zeros((2, 3)))

    def test_vanishes_at_negated_power_iteration_eigenvalue(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            x = rng.standard_normal((3, 3))
            m = x @ x.T + np.diag([3.0, 0, 0])  # symmetric with a dominant eigenvalue
            v = np.ones(3)
            for _ in range(2000):
                v = m @ v
                v /= np.linalg.norm(v)
            mu = v @ m @ v
            p = characteristic_polynomial(m)
            assert abs(p(-mu)) <= 1e-8 * max(1.0, abs(mu)) ** 3

    def test_batched_matches_single(self):
        rng = np.random.default_rng(1)
        m = rng.standard_normal((6, 3, 3))
        c = charpoly_coeffs(m)
        for k in range(6):
            assert characteristic_polynomial(m[k]).allclose(c[k])


class TestRoots:
    def test_quadratic(self):
        assert _match(roots(ComplexPolynomial([2, 3, 1])), [-1, -2]) < 1e-12

    def test_expand_and_solve(self):
        r = np.array([1 + 2j, 3, -0.5j])
        assert _match(roots(ComplexPolynomial.from_roots(r)), r) < 1e-10

    def test_integers_one_to_twelve(self):
        z = np.sort(roots(ComplexPolynomial.from_roots(np.arange(1, 13))).real)
        assert np.abs(z - np.arange(1, 13)).max() < 1e-6

    def test_residual_bound(self):
        rng = np.random.default_rng(2)
        c = rng.standard_normal(20) + 1j * rng.standard_normal(20)
        p = ComplexPolynomial(c)
        tol = 1e-12
        for z in roots(p, tol=tol):
            assert abs(p(z)) <= tol * (1 + abs(z)) ** p.degree * np.abs(c).max()

    def test_needs_degree_one(self):
        with pytest.raises(PolynomialError):
            roots(ComplexPolynomial([3.0]))

    def test_failure_keeps_partial_roots(self):
        rng = np.random.default_rng(12)
        p = ComplexPolynomial(rng.standard_normal(41) + 1j * rng.standard_normal(41))
        with pytest.raises(RootFindingError) as err:
            roots(p, max_iter=2)
        assert len(err.value.roots) == 40

    def test_batched_degree_ninety(self):
        rng = np.random.default_rng(4)
        r = np.exp(2j * np.pi * rng.random(90)) * rng.uniform(0.3, 3, 90)
        z, ok, _ = aberth(ComplexPolynomial.from_roots(r).coeffs[None])
        assert ok[0]
        # chordal accuracy on well separated random roots
        assert _match_sorted(z[0], r) < 1e-8

    def test_multiple_root_clusters(self):
        z = roots(ComplexPolynomial.from_roots([2, 2, -1]))
        mult = sorted(m for _, m in cluster_roots(z, rel=1e-6))
        assert mult == [1, 2]


def _match_sorted(a, b):
    from scipy.optimize import linear_sum_assignment

    cost = np.abs(a[:, None] - b[None, :])
    i, j = linear_sum_assignment(cost)
    return cost[i, j].max()


class TestEigenvalues:
    def test_diagonal(self):
        assert _match(eigenvalues(np.diag([1.0, 2.0, 3.0])), [1, 2, 3]) < 1e-12

    def test_hermitian_against_cofactor_oracle(self):
        rng = np.random.default_rng(7)
        z = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        h = (z + z.conj().T) / 2
        mu = eigenvalues(h)
        assert np.abs(mu.imag).max() <= 1e-9 * (1 + np.linalg.norm(h))
        # the cofactor determinant of h + tI at 4 points fixes the cubic
        ts = np.array([0, 1, -1, 2.0])
        vals = [_cofactor_det(h + t * np.eye(3)) for t in ts]
        ref, _ = interpolate(ts, vals, 3)
        assert _match(mu, -roots(ref)) < 1e-8

    def test_similarity_invariance(self):
        rng = np.random.default_rng(8)
        m = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
        q = _unitary(rng, 5)
        assert _match(eigenvalues(m), eigenvalues(q @ m @ q.conj().T)) < 1e-8

    def test_batch_against_lapack(self):
        rng = np.random.default_rng(9)
        m = rng.standard_normal((200, 4, 4)) + 1j * rng.standard_normal((200, 4, 4))
        mu = eigenvalues_batch(m)
        ref = np.linalg.eigvals(m)
        assert max(_match_sorted(mu[k], ref[k]) for k in range(200)) < 1e-10


class TestInterpolate:
    def test_quadratic_five_nodes(self):
        x = np.array([0, 1, -1, 2, 1j])
        p, res = interpolate(x, x ** 2 + 1, 4)
        assert p.allclose([1, 0, 1], atol=1e-12)
        assert res < 1e-12

    def test_constant(self):
        x = np.exp(2j * np.pi * np.arange(7) / 7)
        p, _ = interpolate(x, np.full(7, 2.5), 3)
        assert p.allclose([2.5], atol=1e-13)
        assert ComplexPolynomial(np.round(p.coeffs, 12)).degree == 0

    def test_degree_six_on_circle(self):
        rng = np.random.default_rng(10)
        c = rng.standard_normal(7) + 1j * rng.standard_normal(7)
        x = np.exp(2j * np.pi * np.arange(13) / 13)
        p, _ = interpolate(x, ComplexPolynomial(c)(x), 6)
        assert np.abs(p.coeffs - c).max() < 1e-10

    def test_duplicate_nodes(self):
        with pytest.raises(PolynomialError):
            interpolate([1, 1, 2], [0, 0, 0], 1)

    def test_circle_fit_matches_lstsq(self):
        rng = np.random.default_rng(11)
        c = rng.standard_normal(5)
        x = np.exp(2j * np.pi * np.arange(11) / 11)
        coef, res = fit_on_circle(ComplexPolynomial(c)(x), 4)
        assert np.abs(coef - c).max() < 1e-13 and res < 1e-13


roots_strategy = st.lists(
    st.tuples(st.floats(0.2, 3.0), st.floats(0, 2 * np.pi)), min_size=1, max_size=30
)


@settings(max_examples=40, deadline=None)
@given(roots_strategy)
def test_roots_of_expansion_recovers_separated_roots(polar):
    r = np.array([m * np.exp(1j * t) for m, t in polar])
    gaps = np.abs(r[:, None] - r[None, :]) + np.eye(len(r)) * 9
    if gaps.min() < 0.3:
        return  # only well separated configurations are in scope
    z = roots(ComplexPolynomial.from_roots(r))
    assert _match_sorted(z, r) < 1e-6


@settings(max_examples=40, deadline=None)
@given(st.integers(-20, 20), st.integers(1, 15), st.integers(0, 2**32 - 1))
def test_scaling_by_power_of_two_is_exact(e, deg, seed):
    rng = np.random.default_rng(seed)
    c = rng.standard_normal(deg + 1) + 1j * rng.standard_normal(deg + 1)
    p = ComplexPolynomial(c)
    assert np.array_equal(roots(p), roots(p * 2.0 ** e))


@settings(max_examples=30, deadline=None)
@given(st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False),
       st.integers(0, 2**32 - 1))
def test_scaling_by_complex_constant_within_tolerance(c, seed):
    if abs(c) < 1e-3:
        return
    rng = np.random.default_rng(seed)
    p = ComplexPolynomial(rng.standard_normal(8) + 1j * rng.standard_normal(8))
    assert _match_sorted(roots(p), roots(p * c)) < 1e-9
