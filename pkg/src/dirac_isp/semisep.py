"""Explicit inversion of the semiseparable operator S_l.

On each delay segment [d~_m, d~_{m+1}] the fundamental solution of
U' = B C U is

    U(x) = Omega_m exp(-x A) exp(x A_m^x) Xi_m^{-1} U(d~_m),

so evaluating U costs two matrix exponentials and no ODE integration.
The resolvent kernel T(x, t) of S_l^{-1} - I follows from U(l) through the
projector P^x.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import OutOfRange, U22Singular
from .matrix_core import mat_exp, rcond
from .policy import POLICY, NumericalPolicy
from .transform import KernelModel

SQRT2 = np.sqrt(2.0)


def j_matrix(n: int) -> np.ndarray:
    """J = [[0, -I], [I, 0]]."""
    J = np.zeros((2 * n, 2 * n))
    J[:n, n:] = -np.eye(n)
    J[n:, :n] = np.eye(n)
    return J


def script_a(KM: KernelModel) -> np.ndarray:
    """A = 2i diag(beta, beta^*)."""
    n = KM.n
    beta = KM.W.beta
    A = np.zeros((2 * n, 2 * n), dtype=complex)
    A[:n, :n] = 2j * beta
    A[n:, n:] = 2j * beta.conj().T
    return A


def y_matrix(KM: KernelModel, m: int) -> np.ndarray:
    """Y_m = [Zt_m; I] theta1 theta1^* [I, -Zt_m]."""
    n = KM.n
    th = KM.W.theta1
    left = np.vstack([KM.Zt[m], np.eye(n)]) @ th
    right = th.conj().T @ np.hstack([np.eye(n), -KM.Zt[m]])
    return left @ right


def omega(KM: KernelModel, m: int, inverse: bool = False) -> np.ndarray:
    n = KM.n
    O = np.eye(2 * n, dtype=complex)
    O[:n, n:] = KM.Z[m] if inverse else -KM.Z[m]
    return O


def B_of(KM: KernelModel, x: float) -> np.ndarray:
    """B(x) = sqrt2 [e^{-2ix beta} Zt_m - Z_m e^{-2ix beta*}; e^{-2ix beta*}] theta1 (2n x p)."""
    m = KM.segment_index(x)
    beta, th = KM.W.beta, KM.W.theta1
    e_minus = mat_exp(-2j * x * beta)
    e_star = mat_exp(2j * x * beta).conj().T       # e^{-2ix beta*}
    top = e_minus @ KM.Zt[m] - KM.Z[m] @ e_star
    return SQRT2 * np.vstack([top, e_star]) @ th


def C_of(KM: KernelModel, x: float) -> np.ndarray:
    """C(x) = sqrt2 theta1^* [e^{2ix beta}, e^{2ix beta} Z_m - Zt_m e^{2ix beta*}] (p x 2n)."""
    m = KM.segment_index(x)
    beta, th = KM.W.beta, KM.W.theta1
    e = mat_exp(2j * x * beta)
    e_star = mat_exp(2j * x * beta.conj().T)
    return SQRT2 * th.conj().T @ np.hstack([e, e @ KM.Z[m] - KM.Zt[m] @ e_star])


def H_of(KM: KernelModel, x: float) -> np.ndarray:
    return B_of(KM, x) @ C_of(KM, x)


@dataclass(frozen=True, eq=False)
class SegmentData:
    m: int
    start: float
    end: float
    A_cross: np.ndarray
    Omega: np.ndarray
    Xi: np.ndarray
    U_start: np.ndarray
    # Xi_m^{-1} U(d~_m), the constant right factor of U on the segment
    right: np.ndarray
    U_start_inv: np.ndarray


@dataclass(frozen=True, eq=False)
class FundamentalSolution:
    KM: KernelModel
    segments: tuple[SegmentData, ...]
    l: float
    A: np.ndarray
    J: np.ndarray

    def segment_for(self, x: float) -> SegmentData:
        m = self.KM.segment_index(x)
        if m >= len(self.segments):
            raise OutOfRange(f"x={x} lies beyond the built segments (l={self.l})")
        return self.segments[m]


def _segment(KM: KernelModel, m: int, start: float, end: float, U_start: np.ndarray,
             A: np.ndarray, J: np.ndarray) -> SegmentData:
    A_cross = A + 2.0 * y_matrix(KM, m)
    Om = omega(KM, m)
    Om_inv = omega(KM, m, inverse=True)
    e_mA = mat_exp(-start * A)
    e_Ac = mat_exp(start * A_cross)
    Xi = Om @ e_mA @ e_Ac
    # Xi^{-1} = e^{-d A_cross} e^{d A} Omega^{-1}, no linear solve needed
    Xi_inv = mat_exp(-start * A_cross) @ mat_exp(start * A) @ Om_inv
    U_start_inv = J @ U_start.conj().T @ J.T
    return SegmentData(m, start, end, A_cross, Om, Xi, U_start, Xi_inv @ U_start, U_start_inv)


def _eval_segment(seg: SegmentData, A: np.ndarray, x: float,
                  policy: NumericalPolicy = POLICY) -> np.ndarray:
    e_cross = mat_exp(x * seg.A_cross)
    big = np.linalg.norm(e_cross, 1)
    if big > policy.expm_overflow_guard:
        warnings.warn(f"||exp(x A_m^x)|| = {big:.2e} at x={x}; U may be inaccurate",
                      RuntimeWarning, stacklevel=3)
    # pair the two oppositely growing exponentials before applying Omega
    return seg.Omega @ (mat_exp(-x * A) @ (e_cross @ seg.right))


def build_U(KM: KernelModel, l: float, base: FundamentalSolution | None = None,
            policy: NumericalPolicy = POLICY) -> FundamentalSolution:
    """Assemble per-segment data of U on [0, l], left to right.

    ``base`` (built to a smaller endpoint) is reused: only segments starting
    at or beyond its last segment are recomputed.
    """
    if l < 0:
        raise OutOfRange(f"l must be >= 0, got {l}")
    n = KM.n
    A = script_a(KM)
    J = j_matrix(n)
    starts = KM.delays.segment_starts()
    last = KM.segment_index(l)
    segs: list[SegmentData] = []
    if base is not None:
        segs = list(base.segments[:-1])
    for m in range(len(segs), last + 1):
        start = starts[m]
        end = starts[m + 1] if m + 1 < len(starts) and starts[m + 1] < l else l
        if m == 0:
            U0 = np.eye(2 * n, dtype=complex)
        else:
            U0 = _eval_segment(segs[-1], A, start, policy)
        segs.append(_segment(KM, m, start, end, U0, A, J))
    # last segment ends at l
    s = segs[-1]
    segs[-1] = SegmentData(s.m, s.start, l, s.A_cross, s.Omega, s.Xi, s.U_start,
                           s.right, s.U_start_inv)
    return FundamentalSolution(KM, tuple(segs), float(l), A, J)


def _check_range(FS: FundamentalSolution, x: float) -> None:
    if x < 0 or x > FS.l * (1 + 1e-14) + 1e-300:
        raise OutOfRange(f"x={x} outside [0, {FS.l}]")


def u_at(FS: FundamentalSolution, x: float, policy: NumericalPolicy = POLICY) -> np.ndarray:
    _check_range(FS, x)
    return _eval_segment(FS.segment_for(x), FS.A, x, policy)


def u_inv_at(FS: FundamentalSolution, x: float) -> np.ndarray:
    """U(x)^{-1} = J U(x)^* J^*."""
    U = u_at(FS, x)
    return FS.J @ U.conj().T @ FS.J.T


def j_unitarity_defect(FS: FundamentalSolution, x: float) -> float:
    U = u_at(FS, x)
    return float(np.linalg.norm(U.conj().T @ FS.J @ U - FS.J, 2))


def p_cross(FS: FundamentalSolution, policy: NumericalPolicy = POLICY) -> np.ndarray:
    """P^x = [[0, 0], [U22(l)^{-1} U21(l), I]]."""
    n = FS.KM.n
    U = u_at(FS, FS.l)
    U21, U22 = U[n:, :n], U[n:, n:]
    rc = rcond(U22)
    if rc < policy.rcond_tol:
        raise U22Singular(f"U22(l) is singular at l={FS.l} (rcond={rc:.3e}); "
                          "S_l is not invertible", rcond=rc)
    P = np.zeros((2 * n, 2 * n), dtype=complex)
    P[n:, :n] = np.linalg.solve(U22, U21)
    P[n:, n:] = np.eye(n)
    return P


@dataclass(frozen=True, eq=False)
class ResolventModel:
    FS: FundamentalSolution
    l: float
    P_cross: np.ndarray

    @property
    def KM(self) -> KernelModel:
        return self.FS.KM


def build_resolvent(KM: KernelModel, l: float, FS: FundamentalSolution | None = None,
                    policy: NumericalPolicy = POLICY) -> ResolventModel:
    """Resolvent data for S_l.  An ``FS`` built to exactly ``l`` is reused as is."""
    if FS is None or FS.l != l:
        FS = build_U(KM, l, base=FS if FS is not None and FS.l <= l else None,
                     policy=policy)
    return ResolventModel(FS, float(l), p_cross(FS, policy))


def F_tilde(FS: FundamentalSolution, x: float) -> np.ndarray:
    """C(x) U(x) = sqrt2 theta1^* [I, -Zt_m] e^{x A_m^x} Xi_m^{-1} U(d~_m)."""
    seg = FS.segment_for(x)
    KM = FS.KM
    n = KM.n
    row = KM.W.theta1.conj().T @ np.hstack([np.eye(n), -KM.Zt[seg.m]])
    return SQRT2 * row @ mat_exp(x * seg.A_cross) @ seg.right


def G_tilde(FS: FundamentalSolution, t: float) -> np.ndarray:
    """U(t)^{-1} B(t) = sqrt2 U(d~_m)^{-1} Xi_m e^{-t A_m^x} [Zt_m; I] theta1."""
    seg = FS.segment_for(t)
    KM = FS.KM
    n = KM.n
    col = np.vstack([KM.Zt[seg.m], np.eye(n)]) @ KM.W.theta1
    return SQRT2 * seg.U_start_inv @ seg.Xi @ mat_exp(-t * seg.A_cross) @ col


def kernel_T(RM: ResolventModel, x: float, t: float) -> np.ndarray:
    """Kernel of S_l^{-1} - I."""
    _check_range(RM.FS, x)
    _check_range(RM.FS, t)
    F = F_tilde(RM.FS, x)
    G = G_tilde(RM.FS, t)
    P = RM.P_cross
    if x >= t:
        return F @ (G - P @ G)
    return -F @ P @ G


def resolvent_matrix(RM: ResolventModel, xs) -> np.ndarray:
    """T(x_i, x_j) for all node pairs, shape (N, N, p, p)."""
    xs = np.asarray(xs, dtype=float)
    F = np.array([F_tilde(RM.FS, x) for x in xs])
    G = np.array([G_tilde(RM.FS, t) for t in xs])
    P = RM.P_cross
    lower = np.einsum("iab,jbc->ijac", F, G - np.einsum("ab,jbc->jac", P, G))
    upper = -np.einsum("iab,jbc->ijac", F, np.einsum("ab,jbc->jac", P, G))
    mask = xs[:, None] >= xs[None, :]
    return np.where(mask[:, :, None, None], lower, upper)
