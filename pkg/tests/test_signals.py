"""Signal constructors, evaluation contracts, and validation."""

import math

import numpy as np
import pytest

from fracstab import Signal
from fracstab.errors import DomainError, ValidationError


class TestConstant:
    def test_scalar(self):
        s = Signal.constant(-2.5)
        assert s(0.0) == -2.5
        assert s(100.0) == -2.5
        assert s.declared_bound == 2.5

    def test_matrix_bound_is_operator_norm(self):
        A = np.array([[0.0, 3.0], [0.0, 0.0]])
        s = Signal.constant(A)
        assert s.shape == (2, 2)
        assert math.isclose(s.declared_bound, 3.0)

    def test_vector_bound(self):
        s = Signal.constant([3.0, 4.0])
        assert math.isclose(s.declared_bound, 5.0)


class TestClosedForm:
    def test_sin(self):
        s = Signal.closed_form("sin", omega=2.0, amplitude=0.3)
        assert math.isclose(s(1.0), 0.3 * math.sin(2.0))
        assert s.declared_bound == pytest.approx(0.3)

    def test_matrix_coefficient(self):
        s = Signal.closed_form("cos", coeff=np.eye(2) * 0.2)
        v = s(0.0)
        assert np.allclose(v, 0.2 * np.eye(2))

    def test_exp_growing_has_no_bound(self):
        s = Signal.closed_form("exp", rate=0.5)
        assert s.declared_bound is None

    def test_unknown_tag(self):
        with pytest.raises(ValidationError):
            Signal.closed_form("tanh")


class TestSampled:
    def test_linear_interpolation(self):
        s = Signal.sampled([0.0, 1.0, 2.0], [0.0, 2.0, 0.0])
        assert s(0.5) == pytest.approx(1.0)
        assert s(1.5) == pytest.approx(1.0)
        assert s.horizon == 2.0

    def test_vector_samples(self):
        s = Signal.sampled([0.0, 1.0], [[1.0, 0.0], [0.0, 1.0]])
        assert np.allclose(s(0.5), [0.5, 0.5])

    def test_rejects_decreasing_grid(self):
        with pytest.raises(ValidationError):
            Signal.sampled([0.0, 2.0, 1.0], [0.0, 1.0, 2.0])

    def test_rejects_nonzero_start(self):
        with pytest.raises(ValidationError):
            Signal.sampled([1.0, 2.0], [0.0, 1.0])

    def test_beyond_horizon(self):
        s = Signal.sampled([0.0, 1.0], [0.0, 1.0])
        with pytest.raises(DomainError):
            s(5.0)


class TestPulse:
    def test_profile(self):
        s = Signal.pulse(amplitude=2.0, duty=0.25, period=4.0)
        assert s(0.5) == 2.0
        assert s(2.0) == 0.0
        assert s(4.5) == 2.0  # periodic
        assert s.declared_bound == 2.0

    def test_full_duty_is_constant(self):
        s = Signal.pulse(amplitude=1.0, duty=1.0, period=2.0)
        assert all(s(t) == 1.0 for t in np.linspace(0.0, 10.0, 21))

    def test_validation(self):
        with pytest.raises(ValidationError):
            Signal.pulse(amplitude=-1.0, duty=0.5, period=1.0)
        with pytest.raises(ValidationError):
            Signal.pulse(amplitude=1.0, duty=1.5, period=1.0)
        with pytest.raises(ValidationError):
            Signal.pulse(amplitude=1.0, duty=0.5, period=0.0)


class TestPiecewise:
    def test_local_time_and_switches(self):
        a = Signal.constant(1.0)
        b = Signal.closed_form("sin")
        s = Signal.piecewise([(0.0, 2.0, a), (2.0, 5.0, b)])
        assert s(1.0) == 1.0
        assert s(3.0) == pytest.approx(math.sin(1.0))  # local time t - 2
        assert s.switch_times == (2.0,)
        assert s.horizon == 5.0

    def test_gap_rejected(self):
        a = Signal.constant(1.0)
        with pytest.raises(ValidationError):
            Signal.piecewise([(0.0, 1.0, a), (1.5, 2.0, a)])

    def test_overlap_rejected(self):
        a = Signal.constant(1.0)
        with pytest.raises(ValidationError):
            Signal.piecewise([(0.0, 2.0, a), (1.0, 3.0, a)])

    def test_bound_is_max(self):
        s = Signal.piecewise(
            [(0.0, 1.0, Signal.constant(0.5)), (1.0, 2.0, Signal.constant(-3.0))]
        )
        assert s.declared_bound == 3.0


class TestEvaluation:
    def test_negative_time(self):
        with pytest.raises(DomainError):
            Signal.constant(1.0)(-0.1)

    def test_non_finite_value(self):
        s = Signal.from_callable(lambda t: math.inf, shape=())
        with pytest.raises(DomainError):
            s(0.0)

    def test_norm_at(self):
        s = Signal.constant(np.array([[0.0, 2.0], [0.0, 0.0]]))
        assert s.norm_at(1.0) == pytest.approx(2.0)

    def test_scaled(self):
        s = Signal.closed_form("sin").scaled(3.0)
        assert s(1.0) == pytest.approx(3.0 * math.sin(1.0))
        assert s.declared_bound == pytest.approx(3.0)
