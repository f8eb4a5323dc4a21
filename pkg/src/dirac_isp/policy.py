"""Central numerical tolerances."""

from __future__ import annotations

import os
from dataclasses import dataclass, replace

ENV_TOL = "DIRAC_ISP_TOL"


@dataclass(frozen=True)
class NumericalPolicy:
    solve_tol: float = 1e-10
    acceptance_tol: float = 1e-8
    unitary_tol: float = 1e-12
    hermitian_tol: float = 1e-12
    # min |mu - conj(nu)| over eigenvalue pairs of beta
    spectra_gap_tol: float = 1e-8
    # reciprocal condition below which a pivot is declared singular
    rcond_tol: float = 1e-12
    quad_abs_tol: float = 1e-11
    expm_overflow_guard: float = 1e150

    def with_overrides(self, **kw: float) -> "NumericalPolicy":
        return replace(self, **kw)


def default_policy() -> NumericalPolicy:
    """Return the default policy, honouring ``DIRAC_ISP_TOL`` if set."""
    raw = os.environ.get(ENV_TOL)
    if raw is None or raw.strip() == "":
        return NumericalPolicy()
    try:
        tol = float(raw)
    except ValueError as exc:
        raise ValueError(f"{ENV_TOL}={raw!r} is not a float") from exc
    if not tol > 0:
        raise ValueError(f"{ENV_TOL} must be positive, got {tol}")
    return NumericalPolicy(acceptance_tol=tol)


POLICY = NumericalPolicy()
