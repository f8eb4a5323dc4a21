"""Recovery of the potential v(l) = (S_l^{-1} k)(l).

Two routes: the closed form, where the t-integral of G~(t) k(t) over each
segment is an exact difference of matrix exponentials, and plain panelwise
quadrature of the same integral.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad_vec

from .errors import BreakpointL, DiracISPError, OutOfRange
from .matrix_core import mat_exp
from .policy import POLICY, NumericalPolicy
from .semisep import (
    SQRT2,
    F_tilde,
    FundamentalSolution,
    G_tilde,
    ResolventModel,
    build_U,
    build_resolvent,
)
from .transform import KernelModel, build_kernel_model
from .weyl import WeylData

log = logging.getLogger(__name__)


def _check_l(KM: KernelModel, RM: ResolventModel, l: float) -> None:
    if l < 0:
        raise OutOfRange(f"l must be >= 0, got {l}")
    if l > 0 and KM.delays.is_breakpoint(l):
        raise BreakpointL(f"l={l} coincides with a delay; evaluate one-sided")
    if RM.l != l:
        raise OutOfRange(f"resolvent model is built for l={RM.l}, not l={l}")


def recover_v_closed(KM: KernelModel, RM: ResolventModel, l: float) -> np.ndarray:
    """v(l) from the explicit sum over delay segments."""
    _check_l(KM, RM, l)
    if l == 0:
        return KM.k_of_x(0.0, side="right")     # S_0 = I
    k_l = KM.k_of_x(l)
    N = KM.segment_index(l)
    if N == 0:
        return k_l
    n, p = KM.n, KM.p
    FS = RM.FS
    A = FS.A
    head = np.zeros((2 * n, n), dtype=complex)
    head[:n] = np.eye(n)
    base = head @ KM.nu
    starts = KM.delays.segment_starts()
    total = np.zeros((2 * n, p), dtype=complex)
    for m in range(1, N + 1):
        seg = FS.segments[m]
        a = starts[m]
        b = starts[m + 1] if m < N else l
        diff = (mat_exp(-a * seg.A_cross) @ mat_exp(a * A)
                - mat_exp(-b * seg.A_cross) @ mat_exp(b * A))
        total += (SQRT2 * seg.U_start_inv @ seg.Xi @ diff @ base
                  @ KM.delays.cumulative_projector(m, p) @ KM.W.R)
    F = F_tilde(FS, l)
    P = RM.P_cross
    return k_l + F @ (total - P @ total)


def recover_v_quadrature(KM: KernelModel, RM: ResolventModel, l: float,
                         epsabs: float = 1e-12) -> np.ndarray:
    """v(l) = k(l) + int_0^l T(l, t) k(t) dt, panels split at the delays."""
    _check_l(KM, RM, l)
    if l == 0:
        return KM.k_of_x(0.0, side="right")
    k_l = KM.k_of_x(l)
    FS = RM.FS
    edges = [0.0] + [d for d in KM.delays.distinct if 0.0 < d < l] + [l]

    def f(t):
        return G_tilde(FS, t) @ KM.k_of_x(t, side="left")

    n, p = KM.n, KM.p
    integral = np.zeros((2 * n, p), dtype=complex)
    for a, b in zip(edges, edges[1:]):
        if b <= a:
            continue
        if KM.segment_index(0.5 * (a + b)) == 0:
            continue        # k vanishes below the first delay
        val, _ = quad_vec(f, a, b, epsabs=epsabs, epsrel=1e-12, norm="max")
        integral += val
    F = F_tilde(FS, l)
    P = RM.P_cross
    return k_l + F @ (integral - P @ integral)


def snap_to_delays(xs: np.ndarray, delays, ulps: float = 64.0) -> np.ndarray:
    """Move grid nodes lying within rounding distance of a delay onto it.

    ``linspace`` rarely hits a delay such as 0.7 exactly; a node one ulp
    off would otherwise be treated as an ordinary point and the jump of v
    there would be smeared by interpolation.
    """
    xs = np.array(xs, dtype=float)
    for d in delays:
        near = np.abs(xs - d) <= ulps * np.finfo(float).eps * (1.0 + d)
        xs[near] = d
    return xs


def breakpoint_shift(KM: KernelModel, l: float) -> float:
    """Right-sided evaluation point for l > 0 sitting on a delay."""
    if l > 0 and KM.delays.is_breakpoint(l):
        return l + 1e-9 * (1.0 + l)
    return l


@dataclass(eq=False)
class PotentialGrid:
    xs: np.ndarray
    evaluated_at: np.ndarray
    v_closed: np.ndarray
    v_quad: np.ndarray | None
    residuals: np.ndarray | None
    errors: list = field(default_factory=list)
    # left limits of v at grid nodes that sit on a delay (v jumps there)
    v_left: dict = field(default_factory=dict)
    breaks: tuple = ()

    @property
    def p(self) -> int:
        return self.v_closed.shape[1]

    @property
    def ok(self) -> bool:
        return all(e is None for e in self.errors)

    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.v_closed, ord=2, axis=(1, 2))

    def negated(self) -> "PotentialGrid":
        """Same grid with v replaced by -v (a wrong potential for control runs)."""
        return PotentialGrid(
            self.xs, self.evaluated_at, -self.v_closed,
            None if self.v_quad is None else -self.v_quad, self.residuals,
            list(self.errors), {i: -v for i, v in self.v_left.items()}, self.breaks)

    def _left(self, i: int) -> np.ndarray:
        return self.v_left.get(i, self.v_closed[i])

    def v_at(self, x: float, side: str = "right") -> np.ndarray:
        """Piecewise-linear interpolation of the closed-form samples.

        Across a node sitting on a delay the interpolant uses the one-sided
        value, so jumps of v are not smeared over a grid cell.
        """
        xs = self.xs
        if x <= xs[0]:
            return self.v_closed[0]
        if x >= xs[-1]:
            return self._left(len(xs) - 1) if side == "left" else self.v_closed[-1]
        i = int(np.searchsorted(xs, x, side="right")) - 1
        if x == xs[i] and side == "left":
            return self._left(i)
        w = (x - xs[i]) / (xs[i + 1] - xs[i])
        return (1 - w) * self.v_closed[i] + w * self._left(i + 1)


def recover_profile(W: WeylData, xs, quadrature: bool = True, reuse: bool = True,
                    KM: KernelModel | None = None,
                    policy: NumericalPolicy = POLICY) -> PotentialGrid:
    """Recover v on an increasing grid of l values.

    With ``reuse`` the segment data of U are shared across l; otherwise every
    point is built from scratch.  A failure at one point is recorded in
    ``errors`` (and its values set to NaN) without stopping the run.
    """
    xs = np.asarray(xs, dtype=float)
    if xs.ndim != 1 or len(xs) == 0 or np.any(np.diff(xs) <= 0) or xs[0] < 0:
        raise OutOfRange("grid must be a nonempty increasing sequence of nonnegative l")
    if KM is None:
        KM = build_kernel_model(W, policy)
    xs = snap_to_delays(xs, KM.delays.distinct)
    p = KM.p
    ls = np.array([breakpoint_shift(KM, l) for l in xs])
    FS: FundamentalSolution | None = None
    if reuse:
        FS = build_U(KM, float(ls[-1]), policy=policy)
    vc = np.full((len(xs), p, p), np.nan, dtype=complex)
    vq = np.full((len(xs), p, p), np.nan, dtype=complex) if quadrature else None
    errors: list = []
    v_left: dict = {}
    for i, l in enumerate(ls):
        try:
            if reuse:
                fs_l = FundamentalSolution(KM, FS.segments[:KM.segment_index(l) + 1],
                                           float(l), FS.A, FS.J)
                RM = build_resolvent(KM, float(l), fs_l, policy)
            else:
                RM = build_resolvent(KM, float(l), policy=policy)
            vc[i] = recover_v_closed(KM, RM, float(l))
            if l != xs[i] and xs[i] > 0:
                v_left[i] = _left_limit(KM, float(xs[i]), policy)
            if quadrature:
                vq[i] = recover_v_quadrature(KM, RM, float(l))
            errors.append(None)
        except DiracISPError as exc:
            log.warning("recovery failed at l=%g: %s", l, exc)
            errors.append(f"{type(exc).__name__}: {exc}")
    res = None
    if quadrature:
        res = np.linalg.norm(vc - vq, ord=2, axis=(1, 2))
    return PotentialGrid(xs, ls, vc, vq, res, errors, v_left, KM.delays.distinct)


def _left_limit(KM: KernelModel, l: float, policy: NumericalPolicy) -> np.ndarray:
    ll = l - 1e-9 * (1.0 + l)
    return recover_v_closed(KM, build_resolvent(KM, ll, policy=policy), ll)
