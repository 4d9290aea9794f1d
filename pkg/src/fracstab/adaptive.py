"""Fractional adaptive error models.

Type I is the gradient parameter law D^alpha phi = -gamma e w with
e = phi' w + nu; type II augments it with output dynamics
D^alpha e = A e + w' phi + nu, D^beta phi = -e w.  Both are assembled
into SystemSpec objects carrying a constructive A/Q split, so the
robustness certificates and the simulation verdicts can be compared side
by side in an ExperimentReport.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .certificates import (
    PEResult,
    QResult,
    SmallGainResult,
    pe_estimate,
    q_certificate,
    small_gain,
)
from .errors import DomainError, ValidationError
from .signals import Signal
from .solver import (
    SystemSpec,
    Trajectory,
    asymptotic_verdict,
    solve_ivp,
)
from .spectral import SectorVerdict, sector_classify

__all__ = [
    "AdaptiveScenario",
    "ExperimentReport",
    "DestabilizingResult",
    "build_error_model_1",
    "build_error_model_2",
    "run_scenario",
    "destabilizing_benchmark",
]

_DEFAULT_T0_CANDIDATES = (math.pi, 2.0 * math.pi, 5.0)


@dataclass(frozen=True)
class AdaptiveScenario:
    """A runnable adaptive-control experiment.

    ``alpha`` holds the parameter-law orders (and, for type II, the
    output-error orders with ``beta`` taking the parameter law).
    """

    model: str  # "type-I" | "type-II"
    w: Signal
    alpha: tuple
    nu: Signal | None = None
    beta: tuple | None = None
    gamma: float = 1.0
    normalize: bool = False
    A: object = None  # type-II output dynamics (scalar e: 1x1)
    phi0: object = 0.0
    e0: object = None
    horizon: float = 100.0
    step: float = 0.01
    T0_candidates: tuple = _DEFAULT_T0_CANDIDATES
    pe_horizon: float | None = None

    def __post_init__(self):
        if self.model not in ("type-I", "type-II"):
            raise ValidationError(f"unknown model {self.model!r}")
        if self.gamma <= 0:
            raise ValidationError("gamma must be positive")
        if self.w.declared_bound is None and not self.normalize:
            raise ValidationError(
                "w needs a declared bound unless normalize is set"
            )
        a = np.atleast_1d(np.asarray(self.alpha, dtype=float))
        if np.any(a <= 0) or np.any(a >= 2):
            raise ValidationError("orders must lie in (0, 2)")
        object.__setattr__(self, "alpha", tuple(float(x) for x in a))
        if self.beta is not None:
            b = np.atleast_1d(np.asarray(self.beta, dtype=float))
            if np.any(b <= 0) or np.any(b >= 2):
                raise ValidationError("orders must lie in (0, 2)")
            object.__setattr__(self, "beta", tuple(float(x) for x in b))
        if self.model == "type-II":
            if self.A is None:
                raise ValidationError("type-II scenarios need the A block")
            if self.beta is None:
                raise ValidationError(
                    "type-II scenarios need beta (parameter-law orders)"
                )
        if self.horizon <= 0 or self.step <= 0:
            raise ValidationError("horizon and step must be positive")

    @property
    def n_w(self) -> int:
        return 1 if self.w.shape == () else int(np.prod(self.w.shape))


def _w_vec(w: Signal, t: float) -> np.ndarray:
    v = w(t)
    return np.atleast_1d(np.asarray(v, dtype=float))


def _gain_at(scn: AdaptiveScenario, t: float) -> float:
    if not scn.normalize:
        return scn.gamma
    wv = _w_vec(scn.w, t)
    return scn.gamma / (1.0 + float(wv @ wv))


def _split_epsilon(scn: AdaptiveScenario, pe: PEResult) -> float:
    """Constructive epsilon for the A/Q split: 90% of the PE level, scaled
    by the (worst-case) effective gain."""
    g = scn.gamma
    if scn.normalize and scn.w.declared_bound is not None:
        g = scn.gamma / (1.0 + scn.w.declared_bound**2)
    return 0.9 * g * pe.epsilon


def build_error_model_1(
    scn: AdaptiveScenario, pe: PEResult | None = None
) -> SystemSpec:
    """SystemSpec for D^alpha phi = -gamma w w' phi - gamma w nu, with the
    constructive A/Q split A = -eps I, Q(t) = -gamma w w' + eps I attached
    when w is persistently exciting."""
    if scn.model != "type-I":
        raise ValidationError("scenario is not type-I")
    n = scn.n_w
    if len(scn.alpha) not in (1, n):
        raise ValidationError(
            f"expected 1 or {n} parameter-law orders, got {len(scn.alpha)}"
        )
    orders = scn.alpha if len(scn.alpha) == n else scn.alpha * n

    if pe is None:
        pe_h = scn.pe_horizon
        if pe_h is None:
            pe_h = min(scn.horizon, 50.0)
        pe = pe_estimate(scn.w, scn.T0_candidates, horizon=pe_h)
    eps = _split_epsilon(scn, pe) if pe.pe else 0.0

    def coeff(t):
        wv = _w_vec(scn.w, t)
        return -_gain_at(scn, t) * np.outer(wv, wv) + eps * np.eye(n)

    Q = Signal.from_callable(
        coeff,
        shape=(n, n),
        switch_times=scn.w.switch_times,
        horizon=scn.w.horizon,
        label="-gamma*w*w' + eps*I",
    )
    nu_sys = None
    if scn.nu is not None:
        nu_sys = Signal.from_callable(
            lambda t: -_gain_at(scn, t) * _w_vec(scn.w, t) * float(scn.nu(t)),
            shape=(n,),
            switch_times=tuple(
                sorted(set(scn.w.switch_times) | set(scn.nu.switch_times))
            ),
            horizon=min(scn.w.horizon, scn.nu.horizon),
            label="-gamma*w*nu",
        )
    phi0 = np.atleast_1d(np.asarray(scn.phi0, dtype=float))
    if phi0.size == 1 and n > 1:
        phi0 = np.full(n, float(phi0[0]))
    return SystemSpec(
        orders=orders,
        A=-eps * np.eye(n),
        Q=Q,
        nu=nu_sys,
        x0=phi0,
        xdot0=np.zeros(n) if any(a > 1.0 for a in orders) else None,
        split={
            "kind": "pe",
            "epsilon": eps,
            "pe": pe,
            "provenance": "A = -0.9*gamma*eps_pe*I from the PE estimate"
            if pe.pe
            else "no PE level found; split degenerate (A = 0)",
        },
    )


def build_error_model_2(
    scn: AdaptiveScenario, w_mean: np.ndarray | None = None
) -> SystemSpec:
    """SystemSpec on the stacked state (e, phi) with block coefficient
    [[A, w'],[-w, 0]], forcing (nu, 0), and the Lambda + Q split built
    from the w-mean."""
    if scn.model != "type-II":
        raise ValidationError("scenario is not type-II")
    A_e = np.atleast_2d(np.asarray(scn.A, dtype=float))
    if A_e.shape != (1, 1):
        raise ValidationError(
            "type-II is implemented for scalar output error e (1x1 A block)"
        )
    n_w = scn.n_w
    n = 1 + n_w
    if len(scn.alpha) != 1:
        raise ValidationError("scalar e takes exactly one alpha order")
    orders_phi = scn.beta if len(scn.beta) == n_w else scn.beta * n_w
    orders = tuple(scn.alpha) + tuple(orders_phi)

    if w_mean is None:
        ts = np.linspace(0.0, min(scn.horizon, scn.w.horizon), 2001)
        w_mean = np.mean([_w_vec(scn.w, t) for t in ts], axis=0)
    w_mean = np.atleast_1d(np.asarray(w_mean, dtype=float))
    Lam = np.zeros((n, n))
    Lam[0, 0] = A_e[0, 0]
    Lam[0, 1:] = w_mean
    Lam[1:, 0] = -w_mean

    def coeff(t):
        wv = _w_vec(scn.w, t)
        M = np.zeros((n, n))
        M[0, 0] = A_e[0, 0]
        M[0, 1:] = wv
        M[1:, 0] = -scn.gamma * wv
        return M

    Q = Signal.from_callable(
        lambda t: coeff(t) - Lam,
        shape=(n, n),
        switch_times=scn.w.switch_times,
        horizon=scn.w.horizon,
        label="block(w) - Lambda",
    )
    M_sig = Signal.from_callable(
        coeff,
        shape=(n, n),
        switch_times=scn.w.switch_times,
        horizon=scn.w.horizon,
        label="[[A, w'],[-gamma*w, 0]]",
    )
    nu_sys = None
    if scn.nu is not None:
        nu_sys = Signal.from_callable(
            lambda t: np.concatenate([[float(scn.nu(t))], np.zeros(n_w)]),
            shape=(n,),
            switch_times=scn.nu.switch_times,
            horizon=scn.nu.horizon,
            label="(nu, 0)",
        )
    e0 = 0.0 if scn.e0 is None else float(np.atleast_1d(scn.e0)[0])
    phi0 = np.atleast_1d(np.asarray(scn.phi0, dtype=float))
    if phi0.size == 1 and n_w > 1:
        phi0 = np.full(n_w, float(phi0[0]))
    x0 = np.concatenate([[e0], phi0])
    return SystemSpec(
        orders=orders,
        A=np.zeros((n, n)),
        Q=M_sig,
        nu=nu_sys,
        x0=x0,
        xdot0=np.zeros(n) if any(a > 1.0 for a in orders) else None,
        split={
            "kind": "lambda",
            "Lambda": Lam,
            "Q_signal": Q,
            "w_mean": w_mean,
            "provenance": "Lambda from the time-average of w",
        },
    )


@dataclass(frozen=True)
class ExperimentReport:
    scenario: AdaptiveScenario
    spec: SystemSpec
    trajectory: Trajectory
    e_values: np.ndarray
    pe: PEResult | None
    sector: SectorVerdict | None
    q: QResult | None
    small_gain: SmallGainResult | None
    verdict_phi: str
    verdict_e: str
    notes: tuple = field(default_factory=tuple)


def _type1_e(scn: AdaptiveScenario, traj: Trajectory) -> np.ndarray:
    e = np.empty(len(traj.grid))
    for i, t in enumerate(traj.grid):
        wv = _w_vec(scn.w, t)
        e[i] = float(traj.values[i] @ wv)
        if scn.nu is not None:
            e[i] += float(scn.nu(t))
    return e


def run_scenario(scn: AdaptiveScenario) -> ExperimentReport:
    """Build the model, chain the certificates, simulate, and report."""
    notes = []
    pe_h = scn.pe_horizon if scn.pe_horizon is not None else min(scn.horizon, 50.0)
    pe = pe_estimate(scn.w, scn.T0_candidates, horizon=pe_h)

    if scn.model == "type-I":
        spec = build_error_model_1(scn, pe=pe)
        split_A = spec.A
        split_Q = spec.Q
        alpha_vec = spec.orders.alpha
    else:
        spec = build_error_model_2(scn)
        split_A = spec.split["Lambda"]
        split_Q = spec.split["Q_signal"]
        alpha_vec = spec.orders.alpha

    sector = None
    q_res = None
    sg = None
    alpha_M = float(np.max(alpha_vec))
    commensurate = bool(np.all(alpha_vec == alpha_vec[0]))
    if np.any(split_A):
        sector = sector_classify(alpha_M, split_A)
        if sector.overall == "stable":
            try:
                cert_alpha = alpha_vec[0] if commensurate else alpha_vec
                if scn.model == "type-II":
                    # conservative Frobenius bound 2*sup|w - w_mean| on the coupling
                    ts = np.linspace(0.0, min(scn.horizon, scn.w.horizon), 2001)
                    wm = spec.split["w_mean"]
                    dev = max(
                        float(np.linalg.norm(_w_vec(scn.w, t) - wm)) for t in ts
                    )
                    # a loose horizon/tolerance is plenty: the test only
                    # compares sup||Q|| against 1/C with wide margins
                    sg = small_gain(
                        cert_alpha,
                        split_A,
                        2.0 * dev,
                        horizon=min(scn.horizon, 200.0),
                        quad_tol=1e-6,
                    )
                else:
                    q_res = q_certificate(
                        cert_alpha,
                        split_A,
                        split_Q,
                        horizon=min(scn.horizon, 100.0),
                    )
            except ValidationError as exc:
                notes.append(f"certificate skipped: {exc}")
        else:
            notes.append(f"split matrix is {sector.overall}; no gain certificate")
    else:
        notes.append("degenerate A/Q split (no PE); certificates not applicable")

    traj = solve_ivp(spec, t_end=scn.horizon, step=scn.step)
    if scn.model == "type-I":
        e_vals = _type1_e(scn, traj)
        phi_vals = traj.values
    else:
        e_vals = traj.values[:, 0]
        phi_vals = traj.values[:, 1:]

    phi_traj = Trajectory(
        grid=traj.grid, values=np.atleast_2d(phi_vals), diverged=traj.diverged
    )
    e_traj = Trajectory(
        grid=traj.grid, values=e_vals[:, None], diverged=traj.diverged
    )
    return ExperimentReport(
        scenario=scn,
        spec=spec,
        trajectory=traj,
        e_values=e_vals,
        pe=pe,
        sector=sector,
        q=q_res,
        small_gain=sg,
        verdict_phi=asymptotic_verdict(phi_traj),
        verdict_e=asymptotic_verdict(e_traj),
        notes=tuple(notes),
    )


@dataclass(frozen=True)
class DestabilizingResult:
    trajectory: Trajectory
    e_values: np.ndarray
    exact: np.ndarray | None  # alpha = 1 closed form on the same grid


def destabilizing_benchmark(
    alpha: float, phi0: float, t_end: float, step: float
) -> DestabilizingResult:
    """The closed destabilizing loop D^alpha phi = -1/(1 - phi)^2 with
    e = 1/(1 - phi); phi drifts to -inf while e vanishes.

    For alpha = 1 the exact solution phi = 1 - (3t + (1-phi0)^3)^(1/3) is
    returned for pointwise comparison.
    """
    if phi0 >= 1.0:
        raise DomainError("phi0 must be below 1 (e = 1/(1-phi) must exist)")

    def f(x):
        d = 1.0 - x[0]
        if d <= 0.0:
            return np.array([-np.inf])
        return np.array([-1.0 / (d * d)])

    spec = SystemSpec(orders=[alpha], A=[[0.0]], f=f, x0=[phi0])
    traj = solve_ivp(spec, t_end=t_end, step=step)
    phi = traj.values[:, 0]
    e = 1.0 / (1.0 - phi)
    exact = None
    if alpha == 1.0:
        exact = 1.0 - (3.0 * traj.grid + (1.0 - phi0) ** 3) ** (1.0 / 3.0)
    return DestabilizingResult(trajectory=traj, e_values=e, exact=exact)
