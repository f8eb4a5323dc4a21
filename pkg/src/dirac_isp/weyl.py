"""Generalized Weyl data and the pseudo-exponential forward map.

A Weyl function of the supported class is

    phi(lambda) = i theta1^* (lambda I - beta)^{-1} theta2 exp(-2 i lambda D) R

with ``beta`` n x n, ``theta1, theta2`` n x p, ``D`` a nondecreasing list of
nonnegative delays and ``R`` unitary.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad_vec

from .errors import (
    NegativeArgument,
    NonUnitaryR,
    PseudoExpIdentityViolated,
    ResolventSingular,
    ShapeError,
    SigmaSingular,
    Singular,
    UnsortedDelays,
)
from .matrix_core import (
    as_cmatrix,
    check_sylvester_condition,
    mat_exp,
    solve_linear,
    spectrum,
)
from .policy import POLICY, NumericalPolicy


@dataclass(frozen=True)
class DelayStructure:
    """Distinct delays ``d~_1 < ... < d~_k`` and the columns belonging to each.

    ``virtual_zero`` is True when ``d~_1 > 0``, in which case the segment
    ``[0, d~_1]`` (index 0) carries no delay group.
    """

    distinct: tuple[float, ...]
    multiplicities: tuple[int, ...]
    columns: tuple[slice, ...]

    @property
    def k(self) -> int:
        return len(self.distinct)

    @property
    def virtual_zero(self) -> bool:
        return self.distinct[0] > 0.0

    def segment_starts(self) -> tuple[float, ...]:
        """Left endpoints ``d~_0 = 0, d~_1, ..., d~_k`` of segments 0..k."""
        return (0.0,) + self.distinct

    def projector(self, j: int, p: int) -> np.ndarray:
        """``P_j`` (1-based group index) as a p x p diagonal 0/1 matrix."""
        P = np.zeros((p, p))
        sl = self.columns[j - 1]
        P[sl, sl] = np.eye(sl.stop - sl.start)
        return P

    def cumulative_projector(self, m: int, p: int) -> np.ndarray:
        """``sum_{j<=m} P_j``."""
        P = np.zeros((p, p))
        if m > 0:
            stop = self.columns[m - 1].stop
            P[:stop, :stop] = np.eye(stop)
        return P

    def segment_index(self, t: float) -> int:
        """Number of distinct delays strictly below ``t``."""
        return int(np.searchsorted(np.asarray(self.distinct), t, side="left"))

    def is_breakpoint(self, x: float) -> bool:
        return any(x == d for d in self.distinct)


@dataclass(frozen=True, eq=False)
class WeylData:
    beta: np.ndarray
    theta1: np.ndarray
    theta2: np.ndarray
    D: tuple[float, ...]
    R: np.ndarray

    @property
    def n(self) -> int:
        return self.beta.shape[0]

    @property
    def p(self) -> int:
        return self.R.shape[0]

    @classmethod
    def create(cls, beta, theta1, theta2, D=None, R=None) -> "WeylData":
        """Build from array-likes; ``D`` defaults to zeros and ``R`` to identity."""
        beta = np.atleast_2d(as_cmatrix(beta, name="beta"))
        n = beta.shape[0]
        if beta.shape[1] != n:
            raise ShapeError(f"beta must be square, got {beta.shape}")
        theta1 = as_cmatrix(theta1, rows=n, name="theta1")
        p = theta1.shape[1]
        theta2 = as_cmatrix(theta2, rows=n, cols=p, name="theta2")
        if R is None:
            R = np.eye(p)
        R = as_cmatrix(R, rows=p, cols=p, name="R")
        if D is None:
            D = (0.0,) * p
        D = tuple(float(d) for d in np.ravel(D))
        if len(D) != p:
            raise ShapeError(f"D must have {p} entries, got {len(D)}")
        return cls(beta, theta1, theta2, D, R)


def group_delays(D) -> DelayStructure:
    distinct: list[float] = []
    mult: list[int] = []
    for d in D:
        # exact equality: delays are configuration values
        if distinct and d == distinct[-1]:
            mult[-1] += 1
        else:
            distinct.append(float(d))
            mult.append(1)
    cols = []
    start = 0
    for m in mult:
        cols.append(slice(start, start + m))
        start += m
    return DelayStructure(tuple(distinct), tuple(mult), tuple(cols))


def validate(W: WeylData, policy: NumericalPolicy = POLICY) -> DelayStructure:
    """Check delays, unitarity of R and the Sylvester condition; group delays."""
    D = W.D
    if any(d < 0 for d in D):
        raise UnsortedDelays(f"delays must be nonnegative, got {D}")
    for a, b in zip(D, D[1:]):
        if b < a:
            raise UnsortedDelays(f"delays must be nondecreasing, got {D}")
    p = W.p
    err = np.linalg.norm(W.R.conj().T @ W.R - np.eye(p))
    if err > policy.unitary_tol:
        raise NonUnitaryR(f"R is not unitary: ||R*R - I|| = {err:.3e}")
    check_sylvester_condition(W.beta, policy)
    return group_delays(D)


def eval_phi(W: WeylData, lam: complex, policy: NumericalPolicy = POLICY) -> np.ndarray:
    n = W.n
    try:
        res = solve_linear(lam * np.eye(n) - W.beta, W.theta2, policy)
    except Singular as exc:
        raise ResolventSingular(
            f"lambda={lam} is (numerically) an eigenvalue of beta", rcond=exc.rcond) from exc
    delay = np.exp(-2j * lam * np.asarray(W.D))
    return 1j * (W.theta1.conj().T @ res) * delay[None, :] @ W.R


def halfplane_bound(W: WeylData) -> float:
    """Smallest admissible M plus a unit margin, so sigma(beta + iM) is in C_+."""
    min_im = float(np.min(spectrum(W.beta).imag))
    return max(0.0, -min_im) + 1.0


def growth_witness(W: WeylData) -> float:
    """A constant c with int_0^inf exp(-c x) ||k(x)|| dx < inf.

    ||k(x)|| grows at most like ||exp(2 i x beta)|| ~ exp(-2 x min Im sigma(beta))
    (times a polynomial for Jordan blocks); the returned c doubles that rate
    and adds one.
    """
    min_im = float(np.min(spectrum(W.beta).imag))
    return 2.0 * max(0.0, -2.0 * min_im) + 1.0


@dataclass(frozen=True, eq=False)
class PseudoExpParams:
    alpha: np.ndarray
    theta1: np.ndarray
    theta2: np.ndarray
    seed: int | None = field(default=None)

    @classmethod
    def create(cls, alpha, theta1, theta2, policy: NumericalPolicy = POLICY,
               seed: int | None = None) -> "PseudoExpParams":
        alpha = as_cmatrix(alpha, name="alpha")
        n = alpha.shape[0]
        theta1 = as_cmatrix(theta1, rows=n, name="theta1")
        theta2 = as_cmatrix(theta2, rows=n, cols=theta1.shape[1], name="theta2")
        P = cls(alpha, theta1, theta2, seed)
        P.check_identity(policy)
        return P

    def identity_residual(self) -> float:
        a, t1, t2 = self.alpha, self.theta1, self.theta2
        return float(np.linalg.norm(a - a.conj().T
                                    - 1j * (t1 @ t1.conj().T + t2 @ t2.conj().T)))

    def check_identity(self, policy: NumericalPolicy = POLICY) -> None:
        scale = 1.0 + np.linalg.norm(self.alpha)
        if self.identity_residual() > policy.unitary_tol * 10 * scale:
            raise PseudoExpIdentityViolated(
                "alpha - alpha* != i(theta1 theta1* + theta2 theta2*)")


def pe_to_weyl(P: PseudoExpParams, policy: NumericalPolicy = POLICY) -> WeylData:
    """Weyl data of a pseudo-exponential potential: beta = alpha - i theta2 theta2*."""
    t1, t2 = P.theta1, P.theta2
    beta = P.alpha - 1j * (t2 @ t2.conj().T)
    lhs = beta - beta.conj().T
    rhs = 1j * (t1 @ t1.conj().T - t2 @ t2.conj().T)
    if np.linalg.norm(lhs - rhs) > policy.unitary_tol * 10 * (1.0 + np.linalg.norm(beta)):
        raise PseudoExpIdentityViolated("beta - beta* != i(theta1 theta1* - theta2 theta2*)")
    W = WeylData.create(beta, t1, t2)
    check_sylvester_condition(W.beta, policy)
    return W


def weyl_to_pe(W: WeylData, policy: NumericalPolicy = POLICY) -> PseudoExpParams:
    """Inverse of :func:`pe_to_weyl`; requires D = 0, R = I and the beta identity."""
    if any(d != 0.0 for d in W.D) or not np.allclose(W.R, np.eye(W.p), atol=1e-14):
        raise PseudoExpIdentityViolated("only D = 0, R = I data come from a pseudo-exponential")
    alpha = W.beta + 1j * (W.theta2 @ W.theta2.conj().T)
    return PseudoExpParams.create(alpha, W.theta1, W.theta2, policy)


def random_pe_params(rng: np.random.Generator, n: int, p: int,
                     policy: NumericalPolicy = POLICY, max_tries: int = 1000,
                     seed: int | None = None) -> PseudoExpParams:
    """Draw admissible parameters.

    theta entries and the Hermitian part of alpha have modulus <= 1; the
    anti-Hermitian part of alpha is then fixed by the identity.  Draws whose
    beta violates the Sylvester condition are rejected.
    """
    def draw(shape):
        return rng.uniform(0, 1, shape) * np.exp(2j * np.pi * rng.uniform(0, 1, shape))

    for _ in range(max_tries):
        t1 = draw((n, p))
        t2 = draw((n, p))
        g = draw((n, n))
        H = 0.5 * (g + g.conj().T)
        alpha = H + 0.5j * (t1 @ t1.conj().T + t2 @ t2.conj().T)
        P = PseudoExpParams(alpha, t1, t2, seed)
        try:
            pe_to_weyl(P, policy)
        except Exception:
            continue
        return P
    raise RuntimeError("could not draw admissible pseudo-exponential parameters")


def _sigma_integrand(P: PseudoExpParams):
    a, t1, t2 = P.alpha, P.theta1, P.theta2

    def f(t):
        g1 = mat_exp(-1j * t * a) @ t1
        g2 = mat_exp(1j * t * a) @ t2
        return g1 @ g1.conj().T - g2 @ g2.conj().T
    return f


def _pe_from_sigma(P: PseudoExpParams, x: float, sigma: np.ndarray,
                   policy: NumericalPolicy) -> np.ndarray:
    smin = np.linalg.svd(sigma, compute_uv=False)[-1]
    if smin < policy.rcond_tol * max(1.0, np.linalg.norm(sigma, 2)):
        raise SigmaSingular(f"Sigma({x}) is singular (smallest singular value {smin:.3e})",
                            rcond=smin)
    inner = np.linalg.solve(sigma, mat_exp(1j * x * P.alpha) @ P.theta2)
    return 2.0 * P.theta1.conj().T @ mat_exp(1j * x * P.alpha.conj().T) @ inner


def pe_potential(P: PseudoExpParams, x: float, policy: NumericalPolicy = POLICY) -> np.ndarray:
    """Pseudo-exponential potential ``v(x)`` with Sigma(x) integrated numerically."""
    if x < 0:
        raise NegativeArgument(f"x must be >= 0, got {x}")
    return pe_potential_profile(P, [x], policy)[0]


def pe_potential_profile(P: PseudoExpParams, xs, policy: NumericalPolicy = POLICY) -> np.ndarray:
    """``v`` on an increasing grid, accumulating Sigma step by step."""
    xs = np.asarray(xs, dtype=float)
    if np.any(xs < 0) or np.any(np.diff(xs) < 0):
        raise NegativeArgument("grid must be nonnegative and nondecreasing")
    f = _sigma_integrand(P)
    n, p = P.theta1.shape
    sigma = np.eye(n, dtype=complex)
    prev = 0.0
    out = np.empty((len(xs), p, p), dtype=complex)
    for i, x in enumerate(xs):
        if x > prev:
            inc, _ = quad_vec(f, prev, x, epsabs=policy.quad_abs_tol * 1e-1,
                              epsrel=1e-13, norm="max")
            sigma = sigma + inc
            prev = x
        out[i] = _pe_from_sigma(P, x, sigma, policy)
    return out
