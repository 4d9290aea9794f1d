"""Piecewise-continuous time-dependent signals.

A Signal wraps a scalar-, vector- or matrix-valued function of time with
the metadata the certificate machinery needs: declared switch times, an
optional sup-norm bound, and a value shape.  Signals are immutable after
construction and cheap to evaluate pointwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DomainError, ValidationError

__all__ = ["Signal"]


def _as_array(v):
    a = np.asarray(v, dtype=float)
    return a


def _shape_of(v) -> tuple:
    return np.shape(np.asarray(v, dtype=float))


@dataclass(frozen=True)
class Signal:
    """A time-dependent value defined on [0, horizon).

    ``kind`` is one of ``constant``, ``closed_form``, ``sampled``,
    ``pulse``, ``piecewise`` or ``callable``.  ``horizon`` is +inf unless
    the signal is only defined on a finite window (sampled grids,
    piecewise lists).
    """

    kind: str
    shape: tuple
    switch_times: tuple = ()
    declared_bound: float | None = None
    horizon: float = math.inf
    params: dict = field(default_factory=dict)
    _eval: Callable[[float], np.ndarray] | None = field(
        default=None, repr=False, compare=False
    )

    # -- constructors -------------------------------------------------

    @staticmethod
    def constant(value, declared_bound: float | None = None) -> "Signal":
        arr = _as_array(value)
        bound = declared_bound
        if bound is None:
            if arr.ndim == 0:
                bound = abs(float(arr))
            elif arr.ndim == 1:
                bound = float(np.linalg.norm(arr))
            else:
                bound = float(np.linalg.norm(arr, 2))
        return Signal(
            kind="constant",
            shape=arr.shape,
            declared_bound=bound,
            params={"value": arr},
            _eval=lambda t, a=arr: a,
        )

    @staticmethod
    def closed_form(
        tag: str,
        coeff=1.0,
        offset=0.0,
        amplitude: float = 1.0,
        omega: float = 1.0,
        phase: float = 0.0,
        rate: float = -1.0,
        declared_bound: float | None = None,
    ) -> "Signal":
        """``offset + coeff * g(t)`` for a tagged scalar profile g.

        Tags: ``sin`` (amplitude*sin(omega*t+phase)), ``cos``, ``exp``
        (amplitude*exp(rate*t)), ``const`` (g = amplitude).
        """
        coeff_a = _as_array(coeff)
        offset_a = _as_array(offset)
        if offset_a.shape not in ((), coeff_a.shape):
            raise ValidationError("closed-form offset shape mismatch")
        if tag == "sin":
            g = lambda t: amplitude * math.sin(omega * t + phase)
            gmax = abs(amplitude)
        elif tag == "cos":
            g = lambda t: amplitude * math.cos(omega * t + phase)
            gmax = abs(amplitude)
        elif tag == "exp":
            g = lambda t: amplitude * math.exp(rate * t)
            gmax = abs(amplitude) if rate <= 0 else math.inf
        elif tag == "const":
            g = lambda t: amplitude
            gmax = abs(amplitude)
        else:
            raise ValidationError(f"unknown closed-form tag {tag!r}")
        bound = declared_bound
        if bound is None and math.isfinite(gmax):
            bound = float(
                np.linalg.norm(np.atleast_1d(offset_a), 2)
                + gmax * np.linalg.norm(np.atleast_1d(coeff_a), 2)
            )
        params = {
            "tag": tag,
            "coeff": coeff_a,
            "offset": offset_a,
            "amplitude": amplitude,
            "omega": omega,
            "phase": phase,
            "rate": rate,
        }
        return Signal(
            kind="closed_form",
            shape=coeff_a.shape,
            declared_bound=bound,
            params=params,
            _eval=lambda t: offset_a + coeff_a * g(t),
        )

    @staticmethod
    def sampled(times, values, declared_bound: float | None = None) -> "Signal":
        """Linear interpolation of row-major samples on a strictly
        increasing time grid starting at 0."""
        ts = np.asarray(times, dtype=float)
        vs = np.asarray(values, dtype=float)
        if ts.ndim != 1 or len(ts) < 2:
            raise ValidationError("sampled signal needs >= 2 time points")
        if ts[0] != 0.0 or np.any(np.diff(ts) <= 0):
            raise ValidationError(
                "sample times must be strictly increasing and start at 0"
            )
        if vs.shape[0] != len(ts):
            raise ValidationError("sample count mismatch between times and values")
        if not np.all(np.isfinite(vs)):
            raise ValidationError("sampled values must be finite")
        shape = vs.shape[1:]
        flat = vs.reshape(len(ts), -1)

        def ev(t, ts=ts, flat=flat, shape=shape):
            cols = [np.interp(t, ts, flat[:, j]) for j in range(flat.shape[1])]
            return np.array(cols).reshape(shape) if shape else float(cols[0])

        bound = declared_bound
        if bound is None:
            bound = float(np.max(np.linalg.norm(flat, axis=1)))
        return Signal(
            kind="sampled",
            shape=shape,
            declared_bound=bound,
            horizon=float(ts[-1]),
            params={"times": ts, "values": vs},
            _eval=ev,
        )

    @staticmethod
    def pulse(
        amplitude: float, duty: float, period: float, declared_bound=None
    ) -> "Signal":
        """Non-negative periodic rectangular pulse: ``amplitude`` on the
        first ``duty`` fraction of each period, 0 otherwise."""
        if amplitude < 0:
            raise ValidationError("pulse amplitude must be non-negative")
        if not (0.0 <= duty <= 1.0):
            raise ValidationError("duty fraction must lie in [0, 1]")
        if period <= 0:
            raise ValidationError("pulse period must be positive")

        def ev(t):
            return amplitude if (t % period) < duty * period - 1e-15 or duty == 1.0 else 0.0

        return Signal(
            kind="pulse",
            shape=(),
            declared_bound=amplitude,
            params={"amplitude": amplitude, "duty": duty, "period": period},
            switch_times=(),
            _eval=ev,
        )

    @staticmethod
    def piecewise(segments: list) -> "Signal":
        """``segments`` is a list of (start, end, Signal) covering
        [0, horizon) without gaps or overlap; each inner signal is
        evaluated in local time t - start."""
        if not segments:
            raise ValidationError("piecewise signal needs at least one segment")
        segs = sorted(segments, key=lambda s: s[0])
        if segs[0][0] != 0.0:
            raise ValidationError("piecewise segments must start at 0")
        prev_end = 0.0
        shape = segs[0][2].shape
        for start, end, sig in segs:
            if not math.isclose(start, prev_end, abs_tol=1e-12):
                raise ValidationError(
                    f"piecewise segments leave a gap or overlap at t = {start}"
                )
            if end <= start:
                raise ValidationError("segment end must exceed its start")
            if sig.shape != shape:
                raise ValidationError("piecewise segments disagree on value shape")
            prev_end = end
        horizon = prev_end
        switch = tuple(s[0] for s in segs[1:])
        bounds = [s[2].declared_bound for s in segs]
        bound = max(bounds) if all(b is not None for b in bounds) else None

        def ev(t, segs=segs, horizon=horizon):
            for start, end, sig in segs:
                if start <= t < end or (t == horizon and end == horizon):
                    return sig(t - start)
            raise DomainError(f"piecewise signal undefined at t = {t}")

        return Signal(
            kind="piecewise",
            shape=shape,
            declared_bound=bound,
            horizon=horizon,
            switch_times=switch,
            params={"segments": segs},
            _eval=ev,
        )

    @staticmethod
    def from_callable(
        fn: Callable[[float], np.ndarray],
        shape: tuple,
        switch_times=(),
        declared_bound: float | None = None,
        horizon: float = math.inf,
        label: str = "callable",
    ) -> "Signal":
        return Signal(
            kind="callable",
            shape=tuple(shape),
            switch_times=tuple(switch_times),
            declared_bound=declared_bound,
            horizon=horizon,
            params={"label": label},
            _eval=fn,
        )

    # -- evaluation ---------------------------------------------------

    def __call__(self, t: float):
        if t < 0:
            raise DomainError(f"signal evaluated at negative time t = {t}")
        if t > self.horizon * (1.0 + 1e-12):
            raise DomainError(
                f"signal defined on [0, {self.horizon}) evaluated at t = {t}"
            )
        v = self._eval(t)
        if np.isscalar(v) or np.ndim(v) == 0:
            if not math.isfinite(float(v)):
                raise DomainError(f"signal value non-finite at t = {t}")
            return float(v)
        a = np.asarray(v, dtype=float)
        if not np.all(np.isfinite(a)):
            raise DomainError(f"signal value non-finite at t = {t}")
        return a

    def norm_at(self, t: float) -> float:
        """Operator 2-norm (matrix), Euclidean norm (vector) or absolute
        value (scalar) of the signal at t."""
        v = self(t)
        if np.ndim(v) == 0:
            return abs(float(v))
        if np.ndim(v) == 1:
            return float(np.linalg.norm(v))
        return float(np.linalg.norm(v, 2))

    def scaled(self, c: float) -> "Signal":
        """Pointwise scaling by a constant."""
        return Signal.from_callable(
            lambda t, s=self: c * s(t),
            shape=self.shape,
            switch_times=self.switch_times,
            declared_bound=None
            if self.declared_bound is None
            else abs(c) * self.declared_bound,
            horizon=self.horizon,
            label=f"scaled({c})",
        )
