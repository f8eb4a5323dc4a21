"""The transform s(x), its derivative k(x) and the kernel K(x, t) of S_l.

``kernel_K`` is the closed-form semiseparable kernel built from Hermitian
Sylvester solutions; ``kernel_K_direct`` integrates the defining
r-integral of k numerically and serves as its oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad_vec

from .errors import NegativeArgument, OnBreakpoint
from .matrix_core import exp_integral, mat_exp, solve_sylvester
from .policy import POLICY, NumericalPolicy
from .weyl import DelayStructure, WeylData, validate


def s_of_x(W: WeylData, x: float) -> np.ndarray:
    """s(x) = C(x) R, column m of C being 2 theta1^* int_0^{x-d_m} e^{2it beta} dt theta2_m."""
    if x < 0:
        raise NegativeArgument(f"x must be >= 0, got {x}")
    n, p = W.n, W.p
    C = np.zeros((p, p), dtype=complex)
    cache: dict[float, np.ndarray] = {}
    for m, d in enumerate(W.D):
        if x <= d:
            continue
        if d not in cache:
            cache[d] = exp_integral(2j * W.beta, x - d)
        C[:, m] = 2.0 * W.theta1.conj().T @ cache[d] @ W.theta2[:, m]
    return C @ W.R


def _nu(W: WeylData) -> np.ndarray:
    nu = np.empty((W.n, W.p), dtype=complex)
    cache: dict[float, np.ndarray] = {}
    for m, d in enumerate(W.D):
        if d not in cache:
            cache[d] = mat_exp(-2j * d * W.beta)
        nu[:, m] = cache[d] @ W.theta2[:, m]
    return nu


def _chi(D, x: float, side: str | None) -> np.ndarray:
    D = np.asarray(D)
    if side is None:
        if np.any(D == x):
            raise OnBreakpoint(f"k is discontinuous at x={x}; pass side='left' or 'right'")
        return (x > D).astype(float)
    if side == "right":
        return (x >= D).astype(float)
    if side == "left":
        return (x > D).astype(float)
    raise ValueError(f"side must be None, 'left' or 'right', got {side!r}")


def k_of_x(W: WeylData, x: float, side: str | None = None, nu: np.ndarray | None = None
           ) -> np.ndarray:
    """k(x) = s'(x) = 2 theta1^* e^{2ix beta} nu chi(x) R.

    At a delay ``k`` jumps; ``side`` selects a one-sided limit there.
    """
    if x < 0:
        raise NegativeArgument(f"x must be >= 0, got {x}")
    chi = _chi(W.D, x, side)
    if not chi.any():
        return np.zeros((W.p, W.p), dtype=complex)
    if nu is None:
        nu = _nu(W)
    return 2.0 * W.theta1.conj().T @ mat_exp(2j * x * W.beta) @ (nu * chi[None, :]) @ W.R


@dataclass(frozen=True, eq=False)
class KernelModel:
    W: WeylData
    delays: DelayStructure
    nu: np.ndarray
    Q: tuple[np.ndarray, ...]
    X: tuple[np.ndarray, ...]
    # Z[m], Zt[m] for m = 0..k; Z[0] = Zt[0] = 0
    Z: tuple[np.ndarray, ...]
    Zt: tuple[np.ndarray, ...]

    @property
    def n(self) -> int:
        return self.W.n

    @property
    def p(self) -> int:
        return self.W.p

    @property
    def k(self) -> int:
        return self.delays.k

    def segment_index(self, t: float) -> int:
        return self.delays.segment_index(t)

    def k_of_x(self, x: float, side: str | None = None) -> np.ndarray:
        return k_of_x(self.W, x, side, nu=self.nu)


def build_kernel_model(W: WeylData, policy: NumericalPolicy = POLICY) -> KernelModel:
    ds = validate(W, policy)
    beta = W.beta
    nu = _nu(W)
    n = W.n
    Q, X = [], []
    Z = [np.zeros((n, n), dtype=complex)]
    Zt = [np.zeros((n, n), dtype=complex)]
    for j, d in enumerate(ds.distinct, start=1):
        cols = nu[:, ds.columns[j - 1]]
        Qj = cols @ cols.conj().T
        Xj = solve_sylvester(beta, Qj, policy)
        e = mat_exp(2j * d * beta)
        Q.append(Qj)
        X.append(Xj)
        Z.append(Z[-1] + Xj)
        zt = Zt[-1] + e @ Xj @ e.conj().T
        Zt.append(0.5 * (zt + zt.conj().T))
    return KernelModel(W, ds, nu, tuple(Q), tuple(X), tuple(Z), tuple(Zt))


def _lower_kernel(KM: KernelModel, x: float, t: float) -> np.ndarray:
    m = KM.segment_index(t)
    if m == 0:
        return np.zeros((KM.p, KM.p), dtype=complex)
    beta, th = KM.W.beta, KM.W.theta1
    ex = mat_exp(2j * x * beta)
    et = mat_exp(2j * t * beta)
    # e^{2i(x-t) beta} = e^{2ix beta} e^{-2it beta}; e^{-2it beta*} = (e^{2it beta})^*
    inner = ex @ (KM.Z[m] @ et.conj().T - mat_exp(-2j * t * beta) @ KM.Zt[m])
    return 2.0 * th.conj().T @ inner @ th


def kernel_K(KM: KernelModel, x: float, t: float) -> np.ndarray:
    """Closed-form kernel K(x, t); the x < t half comes from K(x,t) = K(t,x)^*."""
    if x < 0 or t < 0:
        raise NegativeArgument("kernel arguments must be nonnegative")
    if x >= t:
        return _lower_kernel(KM, x, t)
    return _lower_kernel(KM, t, x).conj().T


def kernel_factors(KM: KernelModel, xs) -> tuple[np.ndarray, np.ndarray]:
    """Lower-triangle factors on a grid: K(x_i, x_j) = F[i] @ G[j] for x_i >= x_j."""
    xs = np.asarray(xs, dtype=float)
    beta, th = KM.W.beta, KM.W.theta1
    n, p = KM.n, KM.p
    F = np.empty((len(xs), p, n), dtype=complex)
    G = np.empty((len(xs), n, p), dtype=complex)
    for i, x in enumerate(xs):
        e = mat_exp(2j * x * beta)
        einv = mat_exp(-2j * x * beta)
        m = KM.segment_index(x)
        F[i] = np.sqrt(2.0) * th.conj().T @ e
        G[i] = np.sqrt(2.0) * (KM.Z[m] @ e.conj().T - einv @ KM.Zt[m]) @ th
    return F, G


def kernel_matrix(KM: KernelModel, xs) -> np.ndarray:
    """All blocks K(x_i, x_j) as an array of shape (N, N, p, p)."""
    F, G = kernel_factors(KM, xs)
    N = len(F)
    full = np.einsum("iab,jbc->ijac", F, G)
    lower = np.tril(np.ones((N, N), dtype=bool))
    herm = np.conj(np.swapaxes(np.swapaxes(full, 0, 1), 2, 3))
    return np.where(lower[:, :, None, None], full, herm)


def _crossings(D, x: float, t: float, lo: float, hi: float) -> list[float]:
    pts = set()
    for d in set(D):
        for r in (2 * d - x + t, 2 * d + x - t):
            if lo < r < hi:
                pts.add(r)
    return sorted(pts)


def _k_evaluator(W: WeylData, nu: np.ndarray, max_cond: float = 1e6):
    """Left-continuous k as a function of x, for repeated evaluation.

    When beta has a well conditioned eigenbasis, e^{2ix beta} is taken from
    it (one diagonal scaling per call instead of a matrix exponential).
    """
    left = 2.0 * W.theta1.conj().T
    D = np.asarray(W.D)
    lam, V = np.linalg.eig(W.beta)
    if np.linalg.cond(V) > max_cond:
        return lambda x: k_of_x(W, x, side="left", nu=nu)
    lV = left @ V
    right = np.linalg.solve(V, nu)

    def k(x):
        chi = (x > D).astype(float)
        if not chi.any():
            return np.zeros((W.p, W.p), dtype=complex)
        return (lV * np.exp(2j * x * lam)[None, :]) @ (right * chi[None, :]) @ W.R
    return k


def kernel_K_direct(W: WeylData, x: float, t: float, epsabs: float = 1e-11,
                    nu: np.ndarray | None = None) -> np.ndarray:
    """K(x, t) = 1/2 int_{|x-t|}^{x+t} k((r+x-t)/2) k((r+t-x)/2)^* dr by quadrature.

    The r-range is split wherever either argument of k crosses a delay.
    """
    if x < 0 or t < 0:
        raise NegativeArgument("kernel arguments must be nonnegative")
    p = W.p
    lo, hi = abs(x - t), x + t
    out = np.zeros((p, p), dtype=complex)
    if hi <= lo:
        return out
    if nu is None:
        nu = _nu(W)
    k = _k_evaluator(W, nu)

    def f(r):
        return k(0.5 * (r + x - t)) @ k(0.5 * (r + t - x)).conj().T

    edges = [lo] + _crossings(W.D, x, t, lo, hi) + [hi]
    for a, b in zip(edges, edges[1:]):
        val, _ = quad_vec(f, a, b, epsabs=epsabs, epsrel=1e-10, norm="max")
        out += val
    return 0.5 * out
