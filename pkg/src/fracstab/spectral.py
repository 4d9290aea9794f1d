"""Spectral classification against the fractional stability sectors and
block transforms for mixed-order systems.

An eigenvalue lambda of the coefficient matrix is stabilizing for order
alpha when |arg(lambda)| > alpha*pi/2; the margin field records the signed
distance to that boundary.  Boundary cases are reported as "critical"
rather than silently rounded.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg as sla

from .errors import ConditioningError, NotAnEquilibriumError
from .ml import _cluster_diag  # shared eigenvalue clustering heuristic

__all__ = [
    "EigenRecord",
    "SectorVerdict",
    "BlockTransform",
    "sector_classify",
    "scaled_block_transform",
    "linearized_classify",
]

DEFAULT_TOL_ARG = 1e-9
_COND_LIMIT = 1e8


@dataclass(frozen=True)
class EigenRecord:
    eigenvalue: complex
    argument: float
    margin: float
    label: str  # stable | unstable | critical


@dataclass(frozen=True)
class SectorVerdict:
    alpha_max: float
    tol_arg: float
    records: tuple
    overall: str  # stable | unstable | critical | mixed

    @property
    def stable(self) -> bool:
        return self.overall == "stable"

    @property
    def margin(self) -> float:
        """Smallest per-eigenvalue margin (worst case)."""
        return min(r.margin for r in self.records)


@dataclass(frozen=True)
class BlockTransform:
    T: np.ndarray
    P: np.ndarray
    gamma: float
    blocks: tuple  # (eigenvalue, multiplicity, nilpotent flag)
    N: np.ndarray
    D: np.ndarray = field(repr=False, default=None)

    @property
    def basis(self) -> np.ndarray:
        return self.T @ self.P


def _classify_one(lam: complex, alpha_max: float, tol_arg: float) -> EigenRecord:
    if lam == 0:
        # the sector excludes the origin; arg(0) is undefined
        return EigenRecord(lam, 0.0, -alpha_max * math.pi / 2.0, "critical")
    arg = abs(cmath.phase(lam))
    margin = arg - alpha_max * math.pi / 2.0
    if margin > tol_arg:
        label = "stable"
    elif margin < -tol_arg:
        label = "unstable"
    else:
        label = "critical"
    return EigenRecord(complex(lam), arg, margin, label)


def sector_classify(
    alpha_max: float, A: np.ndarray, tol_arg: float = DEFAULT_TOL_ARG
) -> SectorVerdict:
    """Classify the spectrum of A against the order-alpha_max sector."""
    if not (0.0 < alpha_max < 2.0):
        raise ValueError(f"alpha_max must lie in (0, 2), got {alpha_max}")
    A = np.atleast_2d(np.asarray(A, dtype=complex))
    if A.shape[0] != A.shape[1]:
        raise ValueError("A must be square")
    lams = np.linalg.eigvals(A)
    order = np.lexsort((lams.imag, lams.real))
    recs = tuple(_classify_one(complex(lams[i]), alpha_max, tol_arg) for i in order)
    labels = {r.label for r in recs}
    if labels == {"stable"}:
        overall = "stable"
    elif "unstable" in labels:
        overall = "unstable"
    elif labels == {"critical"}:
        overall = "critical"
    else:
        overall = "mixed"
    return SectorVerdict(alpha_max, tol_arg, recs, overall)


def scaled_block_transform(A: np.ndarray, gamma: float) -> BlockTransform:
    """Factor A as (TP)^{-1} A (TP) = D + N with diagonal D and strictly
    upper N whose norm is at most gamma.

    Diagonalizable matrices get N = 0 through the eigenbasis; otherwise a
    complex Schur form is scaled by P = diag(1, g, g^2, ...) until the
    coupling is small enough, guarded by a conditioning limit.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    A = np.atleast_2d(np.asarray(A, dtype=complex))
    n = A.shape[0]
    if A.shape[0] != A.shape[1]:
        raise ValueError("A must be square")

    lam, V = np.linalg.eig(A)
    if np.linalg.cond(V) < _COND_LIMIT:
        D = np.diag(lam)
        blocks = tuple((complex(l), 1, False) for l in lam)
        return BlockTransform(
            T=V,
            P=np.eye(n),
            gamma=gamma,
            blocks=blocks,
            N=np.zeros((n, n), dtype=complex),
            D=D,
        )

    T_schur, Z = sla.schur(A, output="complex")
    diag = np.diag(T_schur)
    clusters = _cluster_diag(diag)
    blocks = []
    for c in clusters:
        idx = sorted(c)
        sub = T_schur[np.ix_(idx, idx)]
        nilp = bool(np.any(np.abs(np.triu(sub, 1)) > 1e-12))
        blocks.append((complex(np.mean(diag[idx])), len(idx), nilp))

    U = np.triu(T_schur, 1)
    D = np.diag(diag)
    g = min(gamma, 1.0)
    for _ in range(60):
        P = np.diag(g ** np.arange(n))
        N = np.linalg.solve(P, U @ P)  # entries U_ij * g**(j-i)
        nrm = np.linalg.norm(N, 2)
        if nrm <= gamma:
            break
        g *= min(0.5, 0.9 * gamma / nrm)
    else:
        raise ConditioningError(
            "could not scale the Schur coupling below gamma; matrix too "
            "defective for a well-conditioned block transform"
        )
    if np.linalg.cond(Z @ P) > _COND_LIMIT:
        raise ConditioningError(
            f"block transform condition number exceeds {_COND_LIMIT:.0e}; "
            "simulate the system directly instead"
        )
    return BlockTransform(
        T=Z, P=P, gamma=gamma, blocks=tuple(blocks), N=N, D=D
    )


def _fd_jacobian(f, x, step: float) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    n = x.size
    fx0 = np.atleast_1d(np.asarray(f(x), dtype=float))
    J = np.zeros((fx0.size, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = step
        fp = np.atleast_1d(np.asarray(f(x + e), dtype=float))
        fm = np.atleast_1d(np.asarray(f(x - e), dtype=float))
        J[:, j] = (fp - fm) / (2.0 * step)
    return J


def linearized_classify(
    f,
    x_star,
    alpha_max: float,
    fd_step: float = 1e-5,
    jacobian=None,
    tol_eq: float = 1e-8,
    tol_arg: float = DEFAULT_TOL_ARG,
) -> SectorVerdict:
    """Sector verdict of the Jacobian of f at an equilibrium x_star.

    A stable verdict certifies local asymptotic stability; any unstable
    eigenvalue certifies instability of the equilibrium.
    """
    x_star = np.atleast_1d(np.asarray(x_star, dtype=float))
    resid = float(np.linalg.norm(np.atleast_1d(np.asarray(f(x_star), dtype=float))))
    if resid > tol_eq:
        raise NotAnEquilibriumError(
            f"||f(x_star)|| = {resid:.3g} exceeds tolerance {tol_eq:.3g}"
        )
    J = (
        np.atleast_2d(np.asarray(jacobian(x_star), dtype=float))
        if jacobian is not None
        else _fd_jacobian(f, x_star, fd_step)
    )
    return sector_classify(alpha_max, J, tol_arg=tol_arg)
