"""Explicit recovery of the potential of a skew-self-adjoint Dirac system
from a generalized Weyl function phi(lambda) = i theta1^* (lambda - beta)^{-1}
theta2 exp(-2 i lambda D) R, with independent numerical oracles."""

from .errors import DiracISPError, NumericalError, ValidationError
from .policy import NumericalPolicy, default_policy
from .weyl import (
    PseudoExpParams,
    WeylData,
    eval_phi,
    halfplane_bound,
    pe_potential,
    pe_to_weyl,
    validate,
)
from .transform import build_kernel_model, k_of_x, kernel_K, kernel_K_direct, s_of_x
from .semisep import build_resolvent, build_U, kernel_T, p_cross, u_at, u_inv_at
from .recover import PotentialGrid, recover_profile, recover_v_closed, recover_v_quadrature

__version__ = "0.1.0"
