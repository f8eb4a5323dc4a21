"""Shared test problems.  Profiles are cached because several acceptance
criteria look at the same recovered potentials."""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from dirac_isp.examples import scalar_pe, scalar_weyl, two_delay_weyl
from dirac_isp.recover import recover_profile
from dirac_isp.transform import build_kernel_model
from dirac_isp.weyl import pe_to_weyl, random_pe_params

SEED = 20240601
GRID = np.linspace(0.0, 2.0, 50)


@lru_cache(maxsize=None)
def random_pe_cases(seed: int = SEED, count: int = 10):
    """``count`` admissible parameter sets with n <= 4, p <= 2."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        n = int(rng.integers(1, 5))
        p = int(rng.integers(1, 3))
        out.append(random_pe_params(rng, n, p, seed=seed))
    return tuple(out)


@lru_cache(maxsize=None)
def all_cases():
    """name -> WeylData for every test problem."""
    cases = {
        "scalar": scalar_weyl(),
        "delayed": scalar_weyl(0.5),
        "two-delay": two_delay_weyl(),
    }
    for i, P in enumerate(random_pe_cases()):
        cases[f"random-pe-{i}"] = pe_to_weyl(P)
    return cases


@lru_cache(maxsize=None)
def kernel_model(name: str):
    return build_kernel_model(all_cases()[name])


@lru_cache(maxsize=None)
def profile(name: str):
    """Recovered potential (both paths) on 50 points of [0, 2]."""
    return recover_profile(all_cases()[name], GRID, quadrature=True, KM=kernel_model(name))


def pe_params(name: str):
    if name == "scalar":
        return scalar_pe()
    return random_pe_cases()[int(name.rsplit("-", 1)[1])]
