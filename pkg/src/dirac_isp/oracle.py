"""Independent numerical oracles.

* dense trapezoid Nystrom discretisation of S_l (positivity, resolvent,
  endpoint value of S_l^{-1} k),
* fixed-step RK4 integration of the Dirac system with a recovered potential
  (Weyl boundedness),
* the discretised operator identity A S - S A^* = i int (I + psi(x) psi~(t)) . dt
  with (A f)(x) = i int_0^x f(t) dt.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import StepSizeUnderflow
from .policy import POLICY, NumericalPolicy
from .recover import PotentialGrid, snap_to_delays
from .transform import (
    KernelModel,
    build_kernel_model,
    kernel_K_direct,
    kernel_matrix,
    s_of_x,
)
from .weyl import WeylData, eval_phi, halfplane_bound


def nystrom_nodes(l: float, N: int, delays=()) -> np.ndarray:
    """Uniform nodes on [0, l] with the nearest interior node moved onto each delay."""
    xs = np.linspace(0.0, l, N)
    taken = {0, N - 1}
    for d in sorted(set(delays)):
        if not 0.0 < d < l:
            continue
        order = np.argsort(np.abs(xs - d), kind="stable")
        i = next(int(j) for j in order if int(j) not in taken)
        xs[i] = d
        taken.add(i)
    xs.sort()
    return xs


def trapezoid_weights(xs) -> np.ndarray:
    xs = np.asarray(xs, dtype=float)
    h = np.diff(xs)
    w = np.zeros_like(xs)
    w[:-1] += 0.5 * h
    w[1:] += 0.5 * h
    return w


def _k_samples(KM: KernelModel, xs: np.ndarray) -> np.ndarray:
    """k at the nodes; at a jump the panel-weighted mean of both limits."""
    N = len(xs)
    out = np.empty((N, KM.p, KM.p), dtype=complex)
    for i, x in enumerate(xs):
        if not KM.delays.is_breakpoint(x):
            out[i] = KM.k_of_x(x)
        elif i == 0:
            out[i] = KM.k_of_x(x, side="right")
        elif i == N - 1:
            out[i] = KM.k_of_x(x, side="left")
        else:
            hl, hr = x - xs[i - 1], xs[i + 1] - x
            out[i] = (hl * KM.k_of_x(x, side="left")
                      + hr * KM.k_of_x(x, side="right")) / (hl + hr)
    return out


def _blocks_to_dense(blocks: np.ndarray) -> np.ndarray:
    N, _, p, _ = blocks.shape
    return blocks.transpose(0, 2, 1, 3).reshape(N * p, N * p)


def _dense_to_blocks(M: np.ndarray, N: int, p: int) -> np.ndarray:
    return M.reshape(N, p, N, p).transpose(0, 2, 1, 3)


@dataclass(eq=False)
class NystromOperator:
    """Trapezoid discretisation of S_l.

    ``S_dense`` is the symmetrised form I + W^{1/2} K W^{1/2}, which is
    Hermitian and similar to the collocation matrix I + K W.
    """

    l: float
    N: int
    nodes: np.ndarray
    weights: np.ndarray
    K: np.ndarray
    S_dense: np.ndarray
    k_samples: np.ndarray
    KM: KernelModel = field(repr=False)

    @property
    def p(self) -> int:
        return self.K.shape[2]

    def _sqrt_w(self) -> np.ndarray:
        return np.repeat(np.sqrt(self.weights), self.p)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.S_dense)

    def min_eigenvalue(self) -> float:
        return float(self.eigenvalues().min())

    def deficit(self, eigs: np.ndarray | None = None) -> float:
        """How far lambda_min falls below 1, beyond eigensolver rounding.

        A backward stable Hermitian solver returns eigenvalues within about
        dim * eps * |S|_2 of the exact ones, so a shortfall below that is
        not resolved and counts as zero.
        """
        eigs = self.eigenvalues() if eigs is None else eigs
        noise = len(eigs) * np.finfo(float).eps * float(np.abs(eigs).max())
        return max(0.0, 1.0 - float(eigs.min()) - noise)

    def hermitian_defect(self) -> float:
        return float(np.linalg.norm(self.S_dense - self.S_dense.conj().T))


def build_nystrom(W: WeylData, l: float, N: int, deep: bool = False,
                  KM: KernelModel | None = None,
                  policy: NumericalPolicy = POLICY) -> NystromOperator:
    if N < 16:
        raise ValueError(f"N must be >= 16, got {N}")
    if not l > 0:
        raise ValueError(f"l must be positive, got {l}")
    if KM is None:
        KM = build_kernel_model(W, policy)
    xs = nystrom_nodes(l, N, KM.delays.distinct)
    w = trapezoid_weights(xs)
    p = KM.p
    if deep:
        K = np.empty((N, N, p, p), dtype=complex)
        for i in range(N):
            for j in range(i + 1):
                K[i, j] = kernel_K_direct(W, xs[i], xs[j], nu=KM.nu)
                K[j, i] = K[i, j].conj().T
    else:
        K = kernel_matrix(KM, xs)
    sw = np.sqrt(w)
    S = np.eye(N * p, dtype=complex) + _blocks_to_dense(
        K * (sw[:, None] * sw[None, :])[:, :, None, None])
    S = 0.5 * (S + S.conj().T)
    return NystromOperator(float(l), N, xs, w, K, S, _k_samples(KM, xs), KM)


def oracle_v(W: WeylData, l: float, N: int, nyo: NystromOperator | None = None,
             KM: KernelModel | None = None) -> np.ndarray:
    """Last-node value of the discrete solution of S_l c = k (columnwise)."""
    if nyo is None:
        nyo = build_nystrom(W, l, N, KM=KM)
    p, N = nyo.p, nyo.N
    sw = np.sqrt(nyo.weights)
    rhs = (nyo.k_samples * sw[:, None, None]).reshape(N * p, p)
    c_hat = np.linalg.solve(nyo.S_dense, rhs).reshape(N, p, p)
    return c_hat[-1] / sw[-1]


def nystrom_resolvent(nyo: NystromOperator) -> np.ndarray:
    """Discrete kernel of S_l^{-1} - I at node pairs, shape (N, N, p, p)."""
    N, p = nyo.N, nyo.p
    M = np.linalg.inv(nyo.S_dense) - np.eye(N * p)
    sw = np.sqrt(nyo.weights)
    return _dense_to_blocks(M, N, p) / (sw[:, None] * sw[None, :])[:, :, None, None]


def positivity(W: WeylData, l: float, Ns=(100, 200, 400), KM: KernelModel | None = None
               ) -> dict:
    """Smallest eigenvalue of the discretised S_l for each N.

    ``deficit`` is max(0, 1 - lambda_min) less the eigensolver error bound.
    """
    if KM is None:
        KM = build_kernel_model(W)
    out = {}
    for N in Ns:
        nyo = build_nystrom(W, l, N, KM=KM)
        eigs = nyo.eigenvalues()
        out[N] = {"min_eig": float(eigs.min()), "deficit": nyo.deficit(eigs)}
    return out


def operator_identity_check(W: WeylData, l: float, N: int,
                            KM: KernelModel | None = None) -> float:
    """Relative residual of the discretised operator identity.

    A is discretised as i times the lower-triangular matrix with entries
    w_j (j < i) and w_i / 2 (j = i); with the weighted adjoint
    A^* = W^{-1} A^H W this makes A - A^* = i 1 w^T hold exactly, so the
    residual vanishes for k = 0.
    """
    if KM is None:
        KM = build_kernel_model(W)
    p = KM.p
    nyo = build_nystrom(W, l, N, KM=KM)
    xs, w = nyo.nodes, nyo.weights
    L = np.tril(np.ones((N, N)), -1) * w[None, :] + np.diag(0.5 * w)
    Ip = np.eye(p)
    A = 1j * np.kron(L, Ip)
    wb = np.repeat(w, p)
    A_adj = (A.conj().T * wb[None, :]) / wb[:, None]
    S = np.eye(N * p, dtype=complex) + _blocks_to_dense(
        nyo.K * w[None, :, None, None])
    psi = np.array([s_of_x(KM.W, x) for x in xs])                 # (N, p, p)
    rhs_blocks = (Ip[None, None] + np.einsum("iab,jcb->ijac", psi, psi.conj()))
    rhs = 1j * _blocks_to_dense(rhs_blocks * w[None, :, None, None])
    res = A @ S - S @ A_adj - rhs
    sw = np.sqrt(wb)
    scale = lambda M: (M * sw[:, None]) / sw[None, :]          # noqa: E731
    return float(np.linalg.norm(scale(res), 2) / np.linalg.norm(scale(S), 2))


def _dirac_rhs(lam: complex, v: np.ndarray) -> np.ndarray:
    p = v.shape[0]
    M = np.zeros((2 * p, 2 * p), dtype=complex)
    M[:p, :p] = 1j * lam * np.eye(p)
    M[p:, p:] = -1j * lam * np.eye(p)
    M[:p, p:] = v
    M[p:, :p] = -v.conj().T
    return M


def forward_solve(grid: PotentialGrid, lam: complex, l: float, steps: int | None = None
                  ) -> tuple[np.ndarray, np.ndarray]:
    """Classical RK4 for u' = (i lam j + j V) u, u(0) = I, with fixed step l/steps.

    v is linearly interpolated from ``grid``.  When the grid is uniform from
    0 and ``steps`` is left at None, the step is twice the grid spacing so
    that every RK4 stage lands on a grid node.
    """
    xs_g = grid.xs
    p = grid.p
    if steps is None:
        hg = np.diff(xs_g)
        if xs_g[0] == 0.0 and np.allclose(hg, hg[0], rtol=1e-12, atol=0.0):
            steps = max(1, int(round(l / (2.0 * hg[0]))))
        else:
            steps = max(16, len(xs_g))
    vmax = float(np.max(grid.norms()[np.isfinite(grid.norms())], initial=0.0))
    stiff = abs(lam) + vmax
    if len(xs_g) < 8 * stiff * l:
        warnings.warn("potential grid is coarse for this lambda", RuntimeWarning,
                      stacklevel=2)
    h = l / steps
    if h <= np.finfo(float).eps * max(1.0, l):
        raise StepSizeUnderflow(f"step {h} underflows")
    # step nodes include every delay so no RK4 step straddles a jump of v
    extra = [d for d in grid.breaks if 0.0 < d < l]
    xs = np.unique(snap_to_delays(np.concatenate([np.linspace(0.0, l, steps + 1), extra]),
                                  extra))
    us = np.empty((len(xs), 2 * p, 2 * p), dtype=complex)
    u = np.eye(2 * p, dtype=complex)
    us[0] = u
    for i in range(len(xs) - 1):
        a, b = xs[i], xs[i + 1]
        hs = b - a
        m0 = _dirac_rhs(lam, grid.v_at(a, side="right"))
        mh = _dirac_rhs(lam, grid.v_at(0.5 * (a + b)))
        m1 = _dirac_rhs(lam, grid.v_at(b, side="left"))
        k1 = m0 @ u
        k2 = mh @ (u + 0.5 * hs * k1)
        k3 = mh @ (u + 0.5 * hs * k2)
        k4 = m1 @ (u + hs * k3)
        u = u + (hs / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        us[i + 1] = u
    return xs, us


@dataclass
class WeylSample:
    lam: complex
    admissible: bool
    g0: float = float("nan")
    g_max: float = float("nan")
    passed: bool = False
    delay_passed: bool | None = None


@dataclass
class WeylCheckReport:
    C: float
    M: float
    samples: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        checked = [s for s in self.samples if s.admissible]
        return bool(checked) and all(
            s.passed and s.delay_passed is not False for s in checked)


def weyl_check(W: WeylData, grid: PotentialGrid, lambdas, l: float, C: float = 10.0,
               steps: int | None = None) -> WeylCheckReport:
    """Boundedness proxy for e^{ix lam} u(x, lam) [phi(lam); I] on [0, l]."""
    M = halfplane_bound(W)
    report = WeylCheckReport(C=C, M=M)
    p = W.p
    for lam in lambdas:
        lam = complex(lam)
        s = WeylSample(lam=lam, admissible=lam.imag < -M - 1.0)
        if not s.admissible:
            report.samples.append(s)
            continue
        phi = eval_phi(W, lam)
        col = np.vstack([phi, np.eye(p)])
        xs, us = forward_solve(grid, lam, l, steps)
        g = np.array([np.linalg.norm(np.exp(1j * x * lam) * (u @ col), 2)
                      for x, u in zip(xs, us)])
        s.g0, s.g_max = float(g[0]), float(g.max())
        s.passed = bool(np.isfinite(s.g_max) and s.g_max <= C * s.g0)
        d1 = min(W.D)
        if d1 > 0:
            ys = np.linspace(0.0, d1, 201)
            h = []
            for y in ys:
                scale = np.concatenate([np.full(p, np.exp(2j * y * lam)), np.ones(p)])
                h.append(np.linalg.norm(scale[:, None] * col, 2))
            h = np.asarray(h)
            s.delay_passed = bool(h.max() <= C * h[0])
        report.samples.append(s)
    return report
