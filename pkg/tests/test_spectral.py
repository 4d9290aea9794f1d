"""Sector classification and the scaled block transform."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracstab import linearized_classify, scaled_block_transform, sector_classify
from fracstab.errors import NotAnEquilibriumError


class TestSectorClassify:
    def test_negative_real_always_stable(self):
        for a in (0.3, 0.9, 1.5, 1.99):
            v = sector_classify(a, [[-1.0]])
            assert v.stable
            assert v.records[0].label == "stable"

    def test_positive_real_always_unstable(self):
        for a in (0.3, 1.0, 1.9):
            assert sector_classify(a, [[2.0]]).overall == "unstable"

    def test_imaginary_axis_depends_on_order(self):
        # arg(i) = pi/2: inside the sector for alpha < 1, outside above
        A = [[0.0, 1.0], [-1.0, 0.0]]  # eigenvalues +-i
        assert sector_classify(0.8, A).stable
        assert sector_classify(1.2, A).overall == "unstable"
        assert sector_classify(1.0, A).overall == "critical"

    def test_zero_eigenvalue_is_critical(self):
        v = sector_classify(0.5, [[0.0]])
        assert v.overall == "critical"

    def test_mixed_spectrum(self):
        A = np.diag([-1.0, 3.0])
        assert sector_classify(0.7, A).overall == "unstable"

    def test_margin_value(self):
        v = sector_classify(0.5, [[-1.0]])
        assert math.isclose(v.margin, math.pi - 0.5 * math.pi / 2.0, rel_tol=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(
        re=st.floats(-5.0, 5.0),
        im=st.floats(0.1, 5.0),
        alpha=st.floats(0.2, 1.9),
        scale=st.floats(0.01, 100.0),
    )
    def test_scale_invariance_and_conjugacy(self, re, im, alpha, scale):
        # |arg| is invariant under positive scaling and conjugation, so a
        # real matrix with the conjugate pair and its scaled copy agree
        A = np.array([[re, im], [-im, re]])
        v1 = sector_classify(alpha, A)
        v2 = sector_classify(alpha, scale * A)
        assert v1.overall == v2.overall
        assert v1.records[0].label == v1.records[1].label

    @settings(max_examples=30, deadline=None)
    @given(
        re=st.floats(-5.0, -0.1),
        im=st.floats(0.0, 5.0),
        a_small=st.floats(0.2, 1.0),
        a_big=st.floats(1.0, 1.9),
    )
    def test_order_monotonicity(self, re, im, a_small, a_big):
        # the sector shrinks as alpha grows: stable at a_big implies
        # stable at a_small <= a_big
        lam = complex(re, im)
        A = np.array([[lam.real, lam.imag], [-lam.imag, lam.real]])
        if sector_classify(a_big, A).stable:
            assert sector_classify(a_small, A).stable


class TestBlockTransform:
    def test_diagonalizable_gives_zero_coupling(self):
        A = np.array([[-1.0, 2.0], [0.5, -3.0]])
        bt = scaled_block_transform(A, gamma=0.1)
        assert np.linalg.norm(bt.N, 2) == 0.0
        B = bt.basis
        rec = B @ (bt.D + bt.N) @ np.linalg.inv(B)
        assert np.linalg.norm(rec - A, 2) < 1e-10

    def test_jordan_coupling_bounded_by_gamma(self):
        A = np.array([[-1.0, 1.0], [0.0, -1.0]])
        for gamma in (0.5, 0.1, 0.01):
            bt = scaled_block_transform(A, gamma=gamma)
            assert np.linalg.norm(bt.N, 2) <= gamma * (1.0 + 1e-12)
            assert np.allclose(np.diag(bt.D), [-1.0, -1.0])

    def test_strictly_upper(self):
        A = np.array([[2.0, 1.0, 0.0], [0.0, 2.0, 1.0], [0.0, 0.0, 2.0]])
        bt = scaled_block_transform(A, gamma=0.05)
        assert np.allclose(np.tril(bt.N), 0.0)

    def test_reconstruction_random(self):
        rng = np.random.default_rng(7)
        A = rng.standard_normal((4, 4))
        bt = scaled_block_transform(A, gamma=0.2)
        B = bt.basis
        rec = B @ (bt.D + bt.N) @ np.linalg.inv(B)
        limit = 1e-8 * np.linalg.cond(B)
        assert np.linalg.norm(rec - A, 2) <= max(limit, 1e-12)

    def test_invalid_gamma(self):
        with pytest.raises(ValueError):
            scaled_block_transform(np.eye(2), gamma=0.0)


class TestLinearizedClassify:
    def test_stable_equilibrium(self):
        f = lambda x: np.array([-x[0] + x[1] ** 2, -2.0 * x[1]])
        v = sector_classify(0.8, [[-1.0, 0.0], [0.0, -2.0]])
        got = linearized_classify(f, np.zeros(2), 0.8)
        assert got.overall == v.overall == "stable"

    def test_unstable_equilibrium(self):
        f = lambda x: np.array([x[0] - x[0] ** 3])
        got = linearized_classify(f, np.array([0.0]), 0.5)
        assert got.overall == "unstable"
        # the nonzero equilibria x = +-1 have f'(x) = 1 - 3x^2 = -2
        got1 = linearized_classify(f, np.array([1.0]), 0.5)
        assert got1.stable

    def test_rejects_non_equilibrium(self):
        f = lambda x: np.array([-x[0] + 1.0])
        with pytest.raises(NotAnEquilibriumError):
            linearized_classify(f, np.zeros(1), 0.5)

    def test_explicit_jacobian(self):
        f = lambda x: np.array([-3.0 * x[0]])
        got = linearized_classify(
            f, np.zeros(1), 0.9, jacobian=lambda x: np.array([[-3.0]])
        )
        assert got.stable
