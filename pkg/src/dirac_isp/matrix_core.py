"""Dense complex matrix algebra shared by every other module.

Matrices are plain ``numpy`` complex arrays.  :func:`as_cmatrix` is the one
place where shape and finiteness are checked on the way in.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg as sla

from .errors import (
    IterationFailure,
    MatrixExpOverflow,
    NegativeArgument,
    NonFiniteEntries,
    NonHermitianQ,
    ShapeError,
    Singular,
    SpectraOverlap,
)
from .policy import POLICY, NumericalPolicy


def as_cmatrix(a, rows: int | None = None, cols: int | None = None,
               name: str = "matrix") -> np.ndarray:
    """Coerce ``a`` to a 2-D complex array, checking shape and finiteness."""
    m = np.array(a, dtype=complex)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    if m.ndim != 2:
        raise ShapeError(f"{name}: expected a 2-D array, got ndim={m.ndim}")
    if rows is not None and m.shape[0] != rows:
        raise ShapeError(f"{name}: expected {rows} rows, got {m.shape[0]}")
    if cols is not None and m.shape[1] != cols:
        raise ShapeError(f"{name}: expected {cols} columns, got {m.shape[1]}")
    if not np.all(np.isfinite(m)):
        raise NonFiniteEntries(f"{name}: non-finite entries")
    return m


def _require_square(a: np.ndarray, name: str) -> None:
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeError(f"{name} must be square, got shape {a.shape}")


def mat_exp(a) -> np.ndarray:
    """Matrix exponential (scaling and squaring with Pade approximants)."""
    a = np.asarray(a, dtype=complex)
    _require_square(a, "mat_exp argument")
    if not np.all(np.isfinite(a)):
        raise NonFiniteEntries("mat_exp argument has non-finite entries")
    with np.errstate(over="ignore", invalid="ignore"):
        e = sla.expm(a)
    if not np.all(np.isfinite(e)):
        raise MatrixExpOverflow(
            f"exp(A) overflowed (||A||_1 = {np.linalg.norm(a, 1):.3e})")
    return e


def exp_integral(b, y: float) -> np.ndarray:
    """Return ``int_0^y exp(t B) dt``.

    Uses the top-right block of ``exp(y [[B, I], [0, 0]])`` so that singular
    ``B`` needs no special handling.
    """
    b = np.asarray(b, dtype=complex)
    _require_square(b, "exp_integral argument")
    if y < 0:
        raise NegativeArgument(f"exp_integral: y must be >= 0, got {y}")
    n = b.shape[0]
    if y == 0:
        return np.zeros((n, n), dtype=complex)
    aug = np.zeros((2 * n, 2 * n), dtype=complex)
    aug[:n, :n] = b
    aug[:n, n:] = np.eye(n)
    return mat_exp(y * aug)[:n, n:]


def spectrum(a) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    _require_square(a, "spectrum argument")
    try:
        return np.linalg.eigvals(a)
    except np.linalg.LinAlgError as exc:
        raise IterationFailure(f"eigenvalue iteration failed: {exc}") from exc


def conjugate_gap(beta) -> tuple[float, tuple[complex, complex] | None]:
    """Smallest ``|mu - conj(nu)|`` over eigenvalues ``mu, nu`` of ``beta``.

    Returns the gap and the pair attaining it.
    """
    ev = spectrum(beta)
    if ev.size == 0:
        return np.inf, None
    d = np.abs(ev[:, None] - np.conj(ev)[None, :])
    i, j = np.unravel_index(np.argmin(d), d.shape)
    return float(d[i, j]), (complex(ev[i]), complex(ev[j]))


def check_sylvester_condition(beta, policy: NumericalPolicy = POLICY) -> float:
    """Raise :class:`SpectraOverlap` unless sigma(beta) and sigma(beta*) are disjoint."""
    beta = np.asarray(beta, dtype=complex)
    gap, pair = conjugate_gap(beta)
    scale = max(1.0, float(np.linalg.norm(beta, 2)))
    if gap <= policy.spectra_gap_tol * scale:
        raise SpectraOverlap(
            f"eigenvalues {pair[0]:.6g} and {pair[1]:.6g} of beta violate "
            f"sigma(beta) & sigma(beta*) = {{}} (gap {gap:.3e})",
            pair=pair, gap=gap)
    return gap


def solve_sylvester(beta, q, policy: NumericalPolicy = POLICY) -> np.ndarray:
    """Solve ``i (beta X - X beta*) = Q`` for Hermitian ``X``.

    The problem is vectorised with Kronecker products; sizes here are tiny.
    """
    beta = np.asarray(beta, dtype=complex)
    q = np.asarray(q, dtype=complex)
    _require_square(beta, "beta")
    n = beta.shape[0]
    if q.shape != (n, n):
        raise ShapeError(f"Q must be {n}x{n}, got {q.shape}")
    qnorm = float(np.linalg.norm(q))
    if np.linalg.norm(q - q.conj().T) > policy.hermitian_tol * (1.0 + qnorm):
        raise NonHermitianQ("Q is not Hermitian")
    check_sylvester_condition(beta, policy)
    if qnorm == 0.0:
        return np.zeros((n, n), dtype=complex)

    eye = np.eye(n)
    # column-major vec: vec(beta X) = (I kron beta) vec X, vec(X beta*) = (conj(beta) kron I) vec X
    lhs = np.kron(eye, beta) - np.kron(beta.conj(), eye)
    rhs = (-1j * q).reshape(-1, order="F")
    x = np.linalg.solve(lhs, rhs).reshape(n, n, order="F")
    x = 0.5 * (x + x.conj().T)

    res = np.linalg.norm(1j * (beta @ x - x @ beta.conj().T) - q)
    if res > policy.solve_tol * (1.0 + qnorm):
        raise Singular(f"Sylvester residual {res:.3e} exceeds tolerance",
                       rcond=1.0 / np.linalg.cond(lhs))
    return x


def rcond(a) -> float:
    """Reciprocal 1-norm condition number (0 for exactly singular input)."""
    a = np.asarray(a, dtype=complex)
    _require_square(a, "rcond argument")
    if a.shape[0] == 0:
        return 1.0
    with np.errstate(all="ignore"):
        c = np.linalg.cond(a, 1)
    if not np.isfinite(c):
        return 0.0
    return float(1.0 / abs(c))


def solve_linear(a, b, policy: NumericalPolicy = POLICY) -> np.ndarray:
    """Solve ``A X = B``; raise :class:`Singular` (with rcond) on a bad pivot."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    _require_square(a, "A")
    if b.shape[0] != a.shape[0]:
        raise ShapeError(f"B has {b.shape[0]} rows, A is {a.shape[0]}x{a.shape[0]}")
    rc = rcond(a)
    if rc < policy.rcond_tol:
        raise Singular(f"matrix is numerically singular (rcond={rc:.3e})", rcond=rc)
    return sla.solve(a, b)
