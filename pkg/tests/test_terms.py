import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ipds_admm.linblock import mat, vec
from ipds_admm.terms import (
    ProxError,
    group_l21,
    indicator_cardinality,
    indicator_nonneg,
    indicator_orthogonality,
    l0,
    l1,
    prox_cardinality,
    prox_generic_check,
    prox_indicator_orthogonality,
    prox_l0,
    prox_l1,
    quadratic,
    zero,
)
from oracles import best_support, central_difference, grid_argmin_1d, random_orthonormal

vectors = arrays(np.float64, st.integers(1, 6), elements=st.floats(-20, 20, allow_nan=False))
steps = st.floats(1e-3, 10.0)


def convex_catalog():
    return [l1(0.7, 6), group_l21(0.4, 3, 2), indicator_nonneg(), zero()]


class TestSoftThreshold:
    def test_zero_fixed_point(self):
        assert np.array_equal(prox_l1(np.zeros(3), 1.0, 1.0), np.zeros(3))

    @pytest.mark.parametrize("x, expected", [(3.0, 2.0), (0.5, 0.0)])
    def test_scalar_against_grid(self, x, expected):
        got = prox_l1(np.array([x]), 1.0, 1.0)[0]
        best, _ = grid_argmin_1d(lambda y: abs(y) + 0.5 * (y - x) ** 2, -5.0, 5.0, 1e-4)
        assert got == expected
        assert abs(got - best) <= 1e-4

    def test_nonfinite_input(self):
        with pytest.raises(ValueError):
            prox_l1(np.array([np.inf]), 1.0, 1.0)

    def test_bad_parameters(self):
        with pytest.raises(ValueError):
            prox_l1(np.ones(2), -1.0, 1.0)
        with pytest.raises(ValueError):
            prox_l1(np.ones(2), 1.0, 0.0)


class TestHardThreshold:
    def test_threshold_boundary_is_zeroed(self):
        # |x| = sqrt(2 rho tau) exactly: both 0 and x are minimizers, we pick 0
        out = prox_l0(np.array([2.0, 2.0 + 1e-12, -3.0]), 2.0, 1.0)
        assert np.array_equal(out, np.array([0.0, 2.0 + 1e-12, -3.0]))

    @given(x=vectors, tau=steps)
    def test_entrywise_minimizer(self, x, tau):
        rho = 0.8
        p = prox_l0(x, rho, tau)
        for xj, pj in zip(x, p):
            keep, drop = rho, 0.5 * xj * xj / tau
            chosen = rho * (pj != 0) + 0.5 * (pj - xj) ** 2 / tau
            assert pj in (0.0, xj)
            assert chosen <= min(keep, drop) + 1e-12


class TestOrthogonality:
    def test_fixed_point(self):
        Q = random_orthonormal(np.random.default_rng(0), 5, 3)
        np.testing.assert_allclose(prox_indicator_orthogonality(vec(Q), 5, 3), vec(Q), atol=1e-14)

    def test_scaled_orthonormal(self):
        Q = random_orthonormal(np.random.default_rng(1), 4, 2)
        np.testing.assert_allclose(prox_indicator_orthogonality(vec(2.0 * Q), 4, 2), vec(Q), atol=1e-14)

    @pytest.mark.parametrize("seed", range(3))
    def test_dominates_random_candidates(self, seed):
        rng = np.random.default_rng(seed)
        Vp = rng.standard_normal((4, 2))
        W = mat(prox_indicator_orthogonality(vec(Vp), 4, 2), 4, 2)
        assert np.linalg.norm(W.T @ W - np.eye(2)) <= 1e-10
        dist = np.linalg.norm(Vp - W)
        for _ in range(1000):
            U = random_orthonormal(rng, 4, 2)
            assert dist <= np.linalg.norm(Vp - U) + 1e-12

    def test_step_size_ignored(self):
        x = np.random.default_rng(2).standard_normal(6)
        assert np.array_equal(prox_indicator_orthogonality(x, 3, 2, 0.1), prox_indicator_orthogonality(x, 3, 2, 10.0))

    def test_shape_errors(self):
        with pytest.raises(ValueError):
            prox_indicator_orthogonality(np.ones(6), 2, 3)
        with pytest.raises(ValueError):
            prox_indicator_orthogonality(np.ones(5), 3, 2)

    def test_svd_failure_wrapped(self, monkeypatch):
        def boom(*a, **k):
            raise np.linalg.LinAlgError("SVD did not converge after 75 sweeps")

        monkeypatch.setattr(np.linalg, "svd", boom)
        with pytest.raises(ProxError, match="75"):
            prox_indicator_orthogonality(np.ones(4), 2, 2)


class TestCardinality:
    def test_inactive_and_empty(self):
        x = np.array([1.0, -3.0, 2.0])
        assert np.array_equal(prox_cardinality(x, 3), x)
        assert np.array_equal(prox_cardinality(x, 0), np.zeros(3))

    def test_example_against_enumeration(self):
        x = np.array([1.0, -3.0, 2.0])
        out = prox_cardinality(x, 2)
        assert np.array_equal(out, np.array([0.0, -3.0, 2.0]))
        assert np.array_equal(out, best_support(x, 2))

    def test_ties_go_to_lowest_index(self):
        assert np.array_equal(prox_cardinality(np.array([1.0, -1.0, 1.0]), 2), np.array([1.0, -1.0, 0.0]))

    @given(x=arrays(np.float64, st.integers(1, 6), elements=st.integers(-4, 4).map(float)), data=st.data())
    def test_matches_enumeration_distance(self, x, data):
        s = data.draw(st.integers(0, x.size))
        p = prox_cardinality(x, s)
        assert np.count_nonzero(p) <= s
        assert np.sum((p - x) ** 2) == pytest.approx(np.sum((best_support(x, s) - x) ** 2), abs=1e-12)

    def test_bad_s(self):
        with pytest.raises(ValueError):
            prox_cardinality(np.ones(3), 4)


class TestGenericDispatch:
    def test_zero_is_identity(self):
        x = np.array([1.5, -2.0])
        assert np.array_equal(prox_generic_check(zero(), x, 0.3), x)

    def test_nonneg_clamp(self):
        assert np.array_equal(prox_generic_check(indicator_nonneg(), np.array([-1.0, 2.0]), 1.0), np.array([0.0, 2.0]))

    @given(x=vectors, tau=steps)
    def test_l1_paths_agree(self, x, tau):
        a = prox_generic_check(l1(3.0), x, tau)
        b = prox_l1(x, 3.0, tau)
        assert np.max(np.abs(a - b), initial=0.0) <= 1e-14

    def test_shape_change_detected(self):
        from ipds_admm.terms import ProxTerm

        bad = ProxTerm(value=lambda x: 0.0, prox=lambda x, t: x[:1], is_convex=True, name="bad")
        with pytest.raises(ProxError):
            prox_generic_check(bad, np.ones(3), 1.0)

    def test_rejects_bad_step(self):
        with pytest.raises(ValueError):
            prox_generic_check(zero(), np.ones(2), -1.0)


def _objective(h, x, tau):
    return lambda y: h.value(y) + float(np.sum((y - x) ** 2)) / (2.0 * tau)


class TestProxInvariants:
    @pytest.mark.parametrize("h", convex_catalog(), ids=lambda h: h.name)
    @given(seed=st.integers(0, 2**16), tau=steps)
    def test_optimality_against_nearby_points(self, h, seed, tau):
        rng = np.random.default_rng(seed)
        x = 3.0 * rng.standard_normal(6)
        p = h.prox(x, tau)
        F = _objective(h, x, tau)
        fp = F(p)
        for _ in range(100):
            y = p + 0.1 * rng.standard_normal(6) * rng.choice([1e-3, 1e-1, 1.0])
            if h.is_indicator:
                y = h.prox(y, tau)
            assert F(y) >= fp - 1e-9 * max(1.0, abs(fp))

    @pytest.mark.parametrize("h", [l0(0.5), indicator_cardinality(2), indicator_orthogonality(3, 2)], ids=lambda h: h.name)
    @given(seed=st.integers(0, 2**16))
    def test_nonconvex_prox_beats_feasible_samples(self, h, seed):
        rng = np.random.default_rng(seed)
        x = 2.0 * rng.standard_normal(6)
        p = h.prox(x, 1.0)
        F = _objective(h, x, 1.0)
        assert math.isfinite(F(p))
        for _ in range(50):
            y = h.prox(p + rng.standard_normal(6), 1.0)
            assert F(y) >= F(p) - 1e-10

    @pytest.mark.parametrize("h", convex_catalog(), ids=lambda h: h.name)
    @given(seed=st.integers(0, 2**16), tau=steps)
    def test_nonexpansive(self, h, seed, tau):
        rng = np.random.default_rng(seed)
        x, y = 3.0 * rng.standard_normal(6), 3.0 * rng.standard_normal(6)
        assert np.linalg.norm(h.prox(x, tau) - h.prox(y, tau)) <= np.linalg.norm(x - y) * (1 + 1e-12)

    @pytest.mark.parametrize(
        "h", [indicator_nonneg(), indicator_cardinality(2), indicator_orthogonality(3, 2)], ids=lambda h: h.name
    )
    @given(seed=st.integers(0, 2**16))
    def test_indicator_idempotent(self, h, seed):
        x = 2.0 * np.random.default_rng(seed).standard_normal(6)
        p = h.prox(x, 1.0)
        if h.name == "orthogonality":
            # the SVD of an already orthonormal matrix reproduces it to rounding
            np.testing.assert_allclose(h.prox(p, 1.0), p, atol=1e-14)
        else:
            assert np.array_equal(h.prox(p, 1.0), p)
        assert h.value(p) == 0.0

    @pytest.mark.parametrize("h", [l1(0.7, 6), group_l21(0.4, 3, 2)], ids=lambda h: h.name)
    @given(seed=st.integers(0, 2**16))
    def test_subgradient_norm_bounded(self, h, seed):
        x = np.random.default_rng(seed).standard_normal(6)
        x[::2] = 0.0
        assert np.linalg.norm(h.subgradient(x)) <= h.lipschitz_const * (1 + 1e-12)

    @pytest.mark.parametrize("h", [l1(0.7, 6), group_l21(0.4, 3, 2)], ids=lambda h: h.name)
    def test_lipschitz_constant_is_attained(self, h):
        x = np.ones(6)
        assert np.linalg.norm(h.subgradient(x)) == pytest.approx(h.lipschitz_const, rel=1e-12)

    def test_group_shrinks_rows(self):
        X = np.array([[3.0, 4.0], [0.1, 0.0], [0.0, -2.0]])
        out = mat(group_l21(1.0, 3, 2).prox(vec(X), 1.0), 3, 2)
        np.testing.assert_allclose(out, np.array([[2.4, 3.2], [0.0, 0.0], [0.0, -1.0]]), atol=1e-15)


class TestSmooth:
    @given(seed=st.integers(0, 2**16))
    def test_quadratic_gradient_and_lipschitz(self, seed):
        rng = np.random.default_rng(seed)
        B = rng.standard_normal((4, 4))
        f = quadratic(B + B.T, rng.standard_normal(4))
        for _ in range(20):
            x = rng.standard_normal(4)
            g = f.gradient(x)
            fd = central_difference(f.value, x)
            assert np.linalg.norm(g - fd) <= 1e-5 * max(1.0, np.linalg.norm(g))
        x, y = rng.standard_normal(4), rng.standard_normal(4)
        assert np.linalg.norm(f.gradient(x) - f.gradient(y)) <= f.lipschitz * np.linalg.norm(x - y) * (1 + 1e-12)

    def test_negative_lipschitz_rejected(self):
        from ipds_admm.terms import SmoothTerm

        with pytest.raises(ValueError):
            SmoothTerm(lambda x: 0.0, lambda x: x, -1.0)
