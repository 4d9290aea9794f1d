"""Quantitative robustness certificates for perturbed fractional systems.

Implements the kernel gain C(alpha, A), the contraction constant q of the
perturbation integral, the small-gain test sup||Q|| < 1/C, the
quadratic-form comparison test with its scalar majorant, the sliding-window
persistent-excitation estimator, and the admissible-pulse search.

All "sup over t >= 0" quantities are truncated to a finite horizon and
carry an explicit algebraic tail bound derived from the t^(-alpha-1) decay
of the stable kernel, so the truncation error is always visible in the
report.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy import linalg as sla

from .errors import DivergenceError, DomainError, ValidationError
from .ml import ml_kernel_antiderivative, ml_matrix, ml_scalar
from .signals import Signal
from .spectral import SectorVerdict, sector_classify

__all__ = [
    "CResult",
    "QResult",
    "SmallGainResult",
    "ComparisonResult",
    "PEResult",
    "PulseSearchResult",
    "CertificateReport",
    "c_of_alpha_A",
    "q_certificate",
    "small_gain",
    "comparison_check",
    "pe_estimate",
    "pulse_margin",
    "pulse_search",
]

_EIG_COND_LIMIT = 1e8


def _mat_norm(M: np.ndarray, which: str = "2") -> float:
    M = np.atleast_2d(M)
    if which == "2":
        return float(np.linalg.norm(M, 2))
    if which == "inf":
        return float(np.linalg.norm(M, np.inf))
    raise ValueError(f"unknown norm {which!r}")


def _order_vector(alpha, n: int) -> np.ndarray:
    a = np.atleast_1d(np.asarray(alpha, dtype=float))
    if a.size == 1:
        a = np.full(n, float(a[0]))
    if a.size != n:
        raise ValidationError(f"expected {n} orders, got {a.size}")
    if np.any(a <= 0) or np.any(a >= 2):
        raise ValidationError("all orders must lie in (0, 2)")
    return a


class _KernelGain:
    """Shared evaluator for the stable kernel t^(a-1) E_{a,a}(t^a A):
    pointwise norms and exact running integrals (antiderivatives).

    Commensurate orders accept any square A (eigendecomposition fast path);
    genuinely mixed orders require a diagonal A, where the kernel is the
    diagonal of independent scalar kernels.
    """

    def __init__(self, alpha, A, norm: str = "2"):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        if A.shape[0] != A.shape[1]:
            raise ValidationError("A must be square")
        self.n = A.shape[0]
        self.A = A
        self.norm = norm
        self.alpha = _order_vector(alpha, self.n)
        self.commensurate = bool(np.all(self.alpha == self.alpha[0]))
        self.alpha_max = float(np.max(self.alpha))
        self.alpha_min = float(np.min(self.alpha))
        if not self.commensurate:
            if np.any(A != np.diag(np.diag(A))):
                raise ValidationError(
                    "mixed-order kernel gains require a diagonal A"
                )
            self.lams = np.diag(A).astype(complex)
        else:
            lam, V = np.linalg.eig(A.astype(complex))
            if np.linalg.cond(V) < _EIG_COND_LIMIT:
                self._V, self._Vinv, self._lam = V, np.linalg.inv(V), lam
            else:
                self._V = None

    # -- verdicts ------------------------------------------------------

    def sector(self) -> SectorVerdict:
        return sector_classify(self.alpha_max, self.A)

    def require_stable(self):
        v = self.sector()
        if v.overall != "stable":
            raise DivergenceError(
                f"kernel gain diverges: spectrum is {v.overall} for "
                f"alpha_max = {self.alpha_max}"
            )

    # -- pointwise kernel ----------------------------------------------

    def kernel_matrix(self, t: float) -> np.ndarray:
        if self.commensurate:
            a = self.alpha[0]
            if self._V is not None:
                d = np.array(
                    [ml_scalar(a, a, complex(t**a * l)) for l in self._lam]
                )
                K = (self._V * (t ** (a - 1.0) * d)) @ self._Vinv
                return K.real if np.max(np.abs(K.imag)) < 1e-10 * max(
                    1.0, np.max(np.abs(K.real))
                ) else K
            return t ** (self.alpha[0] - 1.0) * ml_matrix(a, a, self.A, t)
        vals = [
            t ** (a - 1.0) * ml_scalar(a, a, complex(t**a * l)).real
            for a, l in zip(self.alpha, self.lams)
        ]
        return np.diag(vals)

    def kernel_norm(self, t: float) -> float:
        return _mat_norm(self.kernel_matrix(t), self.norm)

    # -- exact running integral -----------------------------------------

    def antiderivative(self, t: float) -> np.ndarray:
        """Phi(t) = integral of the kernel matrix over (0, t]."""
        if self.commensurate:
            a = self.alpha[0]
            if self._V is not None:
                d = np.array(
                    [
                        (ml_scalar(a, 1.0, complex(t**a * l)) - 1.0) / l
                        for l in self._lam
                    ]
                )
                Phi = (self._V * d) @ self._Vinv
                return Phi.real if np.max(np.abs(Phi.imag)) < 1e-10 * max(
                    1.0, np.max(np.abs(Phi.real))
                ) else Phi
            return np.atleast_2d(
                ml_kernel_antiderivative(a, self.A, t)
            )
        vals = [
            ((ml_scalar(a, 1.0, complex(t**a * l)) - 1.0) / l).real
            for a, l in zip(self.alpha, self.lams)
        ]
        return np.diag(vals)

    # -- algebraic tail bound --------------------------------------------

    def tail_bound(self, horizon: float) -> float:
        """Bound on the kernel-norm integral over (horizon, inf) from the
        leading large-time asymptotics ||K(t)|| ~ c * t^(-alpha-1)."""
        if self.commensurate:
            a = self.alpha[0]
            if a == 1.0:
                # exponential tail: || A^{-1} e^{HA} ||
                E = sla.expm(horizon * self.A)
                return _mat_norm(np.linalg.solve(self.A, E), self.norm)
            c = _mat_norm(
                np.linalg.matrix_power(np.linalg.inv(self.A), 2), self.norm
            ) / abs(math.gamma(-a))
            return c * horizon ** (-a) / a
        worst = 0.0
        for a, l in zip(self.alpha, self.lams):
            if a == 1.0:
                worst = max(worst, abs(math.exp(horizon * l.real) / l))
            else:
                c = abs(l) ** (-2) / abs(math.gamma(-a))
                worst = max(worst, c * horizon ** (-a) / a)
        return worst

    def default_horizon(self, target: float = 2e-6) -> float:
        """Horizon making the *residual* truncation error (next asymptotic
        order, ~ t^(-2 alpha)) smaller than target."""
        h = 50.0
        for a in self.alpha:
            if a < 1.0:
                h = max(h, target ** (-1.0 / (2.0 * a)))
        return h


@dataclass(frozen=True)
class CResult:
    value: float
    tail_bound: float
    horizon: float
    integral: float
    norm: str = "2"


@dataclass(frozen=True)
class QResult:
    q: float
    q_pathwise: float  # the sup of int ||kernel * Q|| (informational)
    satisfied: bool
    safety_margin: float
    horizon: float
    grid_n: int
    argmax_t: float
    norm: str = "2"


@dataclass(frozen=True)
class SmallGainResult:
    threshold: float
    sup_Q: float
    satisfied: bool
    c: CResult
    T: float = 0.0


@dataclass(frozen=True)
class ComparisonResult:
    ordering_ok: bool
    worst_time: float
    worst_violation: float
    lambda_M: Signal
    majorant: object  # Trajectory of the scalar majorant
    majorant_q: QResult
    verdict: str


@dataclass(frozen=True)
class PEResult:
    pe: bool
    epsilon: float
    T0: float
    per_candidate: dict = field(default_factory=dict)


@dataclass(frozen=True)
class PulseSearchResult:
    found: bool
    pulse: Signal | None
    margin: float
    duty: float
    amplitude: float


@dataclass(frozen=True)
class CertificateReport:
    sector: SectorVerdict | None = None
    c: CResult | None = None
    q: QResult | None = None
    small_gain: SmallGainResult | None = None
    pe: PEResult | None = None
    mu: float | None = None
    notes: tuple = ()


# ---------------------------------------------------------------------------
# C(alpha, A)


def c_of_alpha_A(
    alpha,
    A,
    horizon: float | None = None,
    quad_tol: float = 1e-8,
    norm: str = "2",
) -> CResult:
    """C(alpha, A) = sup_t int_0^t ||kernel|| dtau, via singularity-aware
    quadrature on (0, horizon] plus an algebraic tail bound.

    The integrand is non-negative, so the supremum is the full integral;
    the returned value is quadrature + tail bound, with the tail reported
    separately.
    """
    gain = _KernelGain(alpha, A, norm=norm)
    gain.require_stable()
    if horizon is None:
        horizon = gain.default_horizon()
    if horizon <= 0:
        raise DomainError("horizon must be positive")

    # substitute tau = u^(1/a_min); the Jacobian absorbs the tau^(a-1)
    # endpoint singularity of every component
    am = gain.alpha_min

    def integrand(u: float) -> float:
        if u <= 0.0:
            u = 1e-300
        tau = u ** (1.0 / am)
        return gain.kernel_norm(tau) * (1.0 / am) * u ** (1.0 / am - 1.0)

    u_max = horizon**am
    # log-spaced panels keep the adaptive rule honest over wide ranges
    edges = [0.0, min(1.0, u_max)]
    while edges[-1] < u_max:
        edges.append(min(edges[-1] * 10.0, u_max))
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, _ = integrate.quad(
            integrand,
            lo,
            hi,
            epsabs=quad_tol / max(1, len(edges) - 1),
            epsrel=quad_tol,
            limit=200,
        )
        total += val
    tail = gain.tail_bound(horizon)
    return CResult(
        value=total + tail,
        tail_bound=tail,
        horizon=float(horizon),
        integral=total,
        norm=norm,
    )


# ---------------------------------------------------------------------------
# q-certificate


def _q_signal_value(Q: Signal, t: float, n: int) -> np.ndarray:
    v = Q(t)
    if np.ndim(v) == 0:
        return float(v) * np.eye(n)
    v = np.atleast_2d(np.asarray(v, dtype=float))
    if v.shape != (n, n):
        raise ValidationError(
            f"perturbation signal shape {v.shape} incompatible with n = {n}"
        )
    return v


def q_certificate(
    alpha,
    A,
    Q: Signal,
    horizon: float,
    grid_n: int = 400,
    t_grid=None,
    safety: float = 0.01,
    norm: str = "2",
) -> QResult:
    """q = sup_t || int_0^t kernel(tau) Q(t - tau) dtau || over a time grid.

    Product integration with exact kernel cell moments: the kernel integral
    over each cell is computed in closed form, the perturbation is sampled
    at the cell midpoint (reflected), so the only discretization error is
    in Q's variation.  The pathwise variant sup_t int ||kernel * Q|| is
    reported alongside (it bounds the certified form from above).
    """
    if horizon <= 0:
        raise DomainError("horizon must be positive")
    if Q.horizon < horizon * (1.0 - 1e-12):
        raise DomainError(
            f"perturbation signal only defined on [0, {Q.horizon}), "
            f"horizon is {horizon}"
        )
    gain = _KernelGain(alpha, A, norm=norm)
    gain.require_stable()
    n = gain.n

    nodes = np.linspace(0.0, horizon, grid_n + 1)
    sw = [s for s in Q.switch_times if 0.0 < s < horizon]
    nodes = np.unique(np.concatenate([nodes, np.asarray(sw, dtype=float)]))
    Phi = [gain.antiderivative(t) for t in nodes]
    moments = [Phi[j + 1] - Phi[j] for j in range(len(nodes) - 1)]
    mids = 0.5 * (nodes[:-1] + nodes[1:])

    if t_grid is None and not sw:
        # uniform grid: the reflected midpoints t_i - mids[j] coincide with
        # mids[i-1-j], so Q is sampled once and the cell sums batch up
        m = len(mids)
        Qs = np.stack([_q_signal_value(Q, t, n) for t in mids])
        M = np.stack(moments)
        ord_ = 2 if norm == "2" else np.inf
        q22 = 0.0
        qpath = 0.0
        argmax = 0.0
        if n == 1:
            k = M[:, 0, 0]
            qv = Qs[:, 0, 0]
            sums = np.convolve(k, qv)[:m]
            paths = np.convolve(np.abs(k), np.abs(qv))[:m]
            vals = np.abs(sums)
        else:
            vals = np.empty(m)
            paths = np.empty(m)
            for i in range(1, m + 1):
                terms = np.einsum("jab,jbc->jac", M[:i], Qs[i - 1 :: -1])
                vals[i - 1] = np.linalg.norm(terms.sum(axis=0), ord_)
                paths[i - 1] = float(
                    np.sum(np.linalg.norm(terms, ord_, axis=(1, 2)))
                )
        imax = int(np.argmax(vals))
        q22 = float(vals[imax])
        argmax = float(nodes[imax + 1])
        qpath = float(np.max(paths))
        return QResult(
            q=q22,
            q_pathwise=qpath,
            satisfied=bool(q22 < 1.0 - safety),
            safety_margin=safety,
            horizon=float(horizon),
            grid_n=int(len(nodes) - 1),
            argmax_t=argmax,
            norm=norm,
        )

    eval_ts = np.asarray(t_grid, dtype=float) if t_grid is not None else nodes[1:]
    q22 = 0.0
    qpath = 0.0
    argmax = 0.0
    for t in eval_ts:
        if t <= 0.0 or t > horizon * (1.0 + 1e-12):
            raise DomainError(f"evaluation time {t} outside (0, horizon]")
        acc = np.zeros((n, n))
        path = 0.0
        j = 0
        while j < len(mids) and nodes[j + 1] <= t * (1.0 + 1e-12):
            term = moments[j] @ _q_signal_value(Q, t - mids[j], n)
            acc += term
            path += _mat_norm(term, norm)
            j += 1
        if j < len(mids) and nodes[j] < t:
            # partial last cell for off-grid evaluation times
            Mpart = gain.antiderivative(t) - Phi[j]
            term = Mpart @ _q_signal_value(Q, (t - 0.5 * (nodes[j] + t)), n)
            acc += term
            path += _mat_norm(term, norm)
        v = _mat_norm(acc, norm)
        if v > q22:
            q22, argmax = v, float(t)
        qpath = max(qpath, path)
    return QResult(
        q=q22,
        q_pathwise=qpath,
        satisfied=bool(q22 < 1.0 - safety),
        safety_margin=safety,
        horizon=float(horizon),
        grid_n=int(len(nodes) - 1),
        argmax_t=argmax,
        norm=norm,
    )


def small_gain(
    alpha,
    A,
    sup_Q: float,
    T: float = 0.0,
    horizon: float | None = None,
    quad_tol: float = 1e-8,
    norm: str = "2",
) -> SmallGainResult:
    """Uniform-bound test sup_{t >= T} ||Q(t)|| < 1 / C(alpha, A)."""
    if sup_Q < 0:
        raise DomainError("sup_Q must be non-negative")
    c = c_of_alpha_A(alpha, A, horizon=horizon, quad_tol=quad_tol, norm=norm)
    threshold = 1.0 / c.value
    return SmallGainResult(
        threshold=threshold,
        sup_Q=float(sup_Q),
        satisfied=bool(sup_Q < threshold),
        c=c,
        T=float(T),
    )


# ---------------------------------------------------------------------------
# comparison test


def comparison_check(
    A_sig: Signal,
    epsilon: float,
    Q_sig: Signal,
    t_grid,
    alpha: float,
    tol: float = 1e-10,
) -> ComparisonResult:
    """Verify the quadratic-form ordering A(t) <= -eps I + Q(t) on a grid
    and solve the induced scalar majorant (1/2) D^alpha y = -eps y + lam_M y.

    The matrix inequality is read through symmetric parts, the only sense
    in which x'Ax <= x'(-eps I + Q)x holds.
    """
    from .solver import SystemSpec, asymptotic_verdict, solve_ivp

    if epsilon <= 0:
        raise DomainError("epsilon must be positive")
    ts = np.asarray(t_grid, dtype=float)
    worst_t, worst_v = 0.0, -math.inf
    lamM = np.zeros(len(ts))
    for i, t in enumerate(ts):
        At = np.atleast_2d(np.asarray(A_sig(t), dtype=float))
        Qt = np.atleast_2d(np.asarray(Q_sig(t), dtype=float))
        n = At.shape[0]
        S = 0.5 * (At + At.T) + epsilon * np.eye(n) - 0.5 * (Qt + Qt.T)
        v = float(np.max(np.linalg.eigvalsh(S)))
        if v > worst_v:
            worst_v, worst_t = v, float(t)
        lamM[i] = float(np.max(np.linalg.eigvalsh(0.5 * (Qt + Qt.T))))
    ok = worst_v <= tol

    lam_sig = Signal.sampled(ts, lamM)
    horizon = float(ts[-1])
    # (1/2) D^a y = (-eps + lam_M) y  <=>  D^a y = 2(-eps + lam_M) y
    maj_spec = SystemSpec(
        orders=[alpha],
        A=[[-2.0 * epsilon]],
        Q=Signal.from_callable(
            lambda t: np.array([[2.0 * lam_sig(min(t, horizon))]]),
            shape=(1, 1),
            label="2*lambda_M",
        ),
        x0=[1.0],
    )
    step = max(horizon / 4000.0, 1e-3)
    maj = solve_ivp(maj_spec, t_end=horizon, step=step)
    maj_q = q_certificate(
        alpha,
        [[-2.0 * epsilon]],
        Signal.from_callable(
            lambda t: 2.0 * lam_sig(min(t, horizon)), shape=(), label="2*lambda_M"
        ),
        horizon=horizon,
    )
    verdict = asymptotic_verdict(maj)
    return ComparisonResult(
        ordering_ok=bool(ok),
        worst_time=worst_t,
        worst_violation=worst_v,
        lambda_M=lam_sig,
        majorant=maj,
        majorant_q=maj_q,
        verdict=verdict,
    )


# ---------------------------------------------------------------------------
# persistent excitation


def pe_estimate(
    w: Signal,
    T0_candidates,
    horizon: float,
    quad_tol: float = 1e-8,
    pe_tol: float = 1e-6,
) -> PEResult:
    """Sliding-window Gramian test: smallest eigenvalue of
    (1/T0) int_t^{t+T0} w w' dtau, infimum over t in [0, horizon]."""
    cands = list(T0_candidates)
    if not cands:
        raise ValidationError("T0 candidate list must be non-empty")
    if any(c <= 0 for c in cands):
        raise ValidationError("window lengths must be positive")
    tmax = horizon + max(cands)
    if w.horizon < tmax * (1.0 - 1e-12):
        raise DomainError(
            f"signal defined on [0, {w.horizon}) but windows reach {tmax}"
        )
    dt = min(cands) / 512.0
    m = int(math.ceil(tmax / dt))
    ts = np.linspace(0.0, tmax, m + 1)
    w0 = np.atleast_1d(np.asarray(w(0.0), dtype=float))
    n = w0.size
    outer = np.empty((m + 1, n, n))
    for i, t in enumerate(ts):
        wi = np.atleast_1d(np.asarray(w(t), dtype=float))
        outer[i] = np.outer(wi, wi)
    # cumulative trapezoid of every Gramian entry
    cum = np.zeros_like(outer)
    cum[1:] = np.cumsum(0.5 * (outer[1:] + outer[:-1]), axis=0) * (ts[1] - ts[0])

    per = {}
    best_eps, best_T0 = -math.inf, cands[0]
    for T0 in cands:
        k = int(round(T0 / (ts[1] - ts[0])))
        k = max(k, 1)
        i_last = np.searchsorted(ts, horizon, side="right") - 1
        i_last = min(i_last, m - k)
        inf_eig = math.inf
        for i in range(0, i_last + 1):
            G = (cum[i + k] - cum[i]) / (ts[i + k] - ts[i])
            inf_eig = min(inf_eig, float(np.min(np.linalg.eigvalsh(G))))
        per[float(T0)] = inf_eig
        if inf_eig > best_eps:
            best_eps, best_T0 = inf_eig, float(T0)
    pe = best_eps > pe_tol
    return PEResult(
        pe=bool(pe),
        epsilon=float(best_eps),
        T0=float(best_T0),
        per_candidate=per,
    )


# ---------------------------------------------------------------------------
# pulses


def pulse_margin(
    alpha: float,
    epsilon: float,
    pulse: Signal,
    horizon: float | None = None,
    grid_n: int | None = None,
) -> float:
    """sup_t of the convolution of the rate -eps stable scalar kernel with
    the (non-negative) pulse; admissible pulses keep this below 1."""
    if epsilon <= 0:
        raise DomainError("epsilon must be positive")
    period = pulse.params.get("period", 1.0)
    if horizon is None:
        horizon = max(30.0 / epsilon, 10.0 * period)
    if grid_n is None:
        grid_n = max(600, int(40.0 * horizon / period))
        grid_n = min(grid_n, 4000)
    res = q_certificate(
        alpha, [[-epsilon]], pulse, horizon=horizon, grid_n=grid_n
    )
    # the kernel mass beyond the horizon still sees the (bounded) pulse;
    # adding the algebraic tail keeps the margin an upper estimate
    amp = pulse.declared_bound if pulse.declared_bound is not None else 0.0
    tail = _KernelGain(alpha, [[-epsilon]]).tail_bound(horizon)
    return res.q + amp * tail


def pulse_search(
    alpha: float,
    epsilon: float,
    period: float,
    max_amp: float,
    safety: float = 0.05,
    bisect_iters: int = 18,
) -> PulseSearchResult:
    """Find an admissible periodic pulse by bisection: widest duty fraction
    first, then amplitude reduction if even a narrow duty fails."""
    if max_amp <= 0 or period <= 0:
        raise DomainError("period and max_amp must be positive")
    target = 1.0 - safety

    # the kernel moments do not depend on the pulse, so they are computed
    # once; each bisection step is then a single discrete convolution
    horizon = max(30.0 / epsilon, 10.0 * period)
    grid_n = min(max(600, int(40.0 * horizon / period)), 4000)
    gain = _KernelGain(alpha, [[-epsilon]])
    nodes = np.linspace(0.0, horizon, grid_n + 1)
    Phi = np.array([gain.antiderivative(t)[0, 0] for t in nodes])
    K = Phi[1:] - Phi[:-1]
    mids = 0.5 * (nodes[:-1] + nodes[1:])
    tail = gain.tail_bound(horizon)

    def margin_of(amp: float, duty: float) -> float:
        p = Signal.pulse(amp, duty, period)
        P = np.array([p(t) for t in mids])
        conv = np.convolve(K, P)[: len(mids)]
        return float(np.max(conv)) + amp * tail

    m_full = margin_of(max_amp, 1.0)
    if m_full <= target:
        return PulseSearchResult(
            True, Signal.pulse(max_amp, 1.0, period), m_full, 1.0, max_amp
        )
    duty_min = 1.0 / 64.0
    amp = max_amp
    m_min = margin_of(amp, duty_min)
    if m_min > target:
        # margin is homogeneous in the amplitude
        amp = 0.95 * amp * target / m_min
        if amp <= 0:
            return PulseSearchResult(False, None, m_min, duty_min, max_amp)
        m_min = margin_of(amp, duty_min)
        if m_min > target:
            return PulseSearchResult(False, None, m_min, duty_min, amp)
    lo, hi = duty_min, 1.0  # margin(lo) <= target < margin(hi)
    for _ in range(bisect_iters):
        mid = 0.5 * (lo + hi)
        if margin_of(amp, mid) <= target:
            lo = mid
        else:
            hi = mid
    m = margin_of(amp, lo)
    return PulseSearchResult(True, Signal.pulse(amp, lo, period), m, lo, amp)
