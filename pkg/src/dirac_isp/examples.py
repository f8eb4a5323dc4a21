"""Ready-made problems: the scalar worked example, its delayed shift, a
seeded random pseudo-exponential and a two-delay p = 2 case."""

from __future__ import annotations

import numpy as np

from .config import ProblemConfig, default_tolerances
from .weyl import PseudoExpParams, WeylData, pe_to_weyl, random_pe_params

KINDS = ("scalar", "delayed", "random-pe", "two-delay")
DEFAULT_SEED = 20240601

# theta1 = 2, theta2 = 1, alpha = 2.5i  =>  beta = 1.5i,
# v(x) = 20 / (4 e^{5x} + e^{-5x})
SCALAR_PE = dict(alpha=[[2.5j]], theta1=[[2.0]], theta2=[[1.0]])


def scalar_pe() -> PseudoExpParams:
    return PseudoExpParams.create(**SCALAR_PE)


def scalar_v(x):
    x = np.asarray(x, dtype=float)
    return 20.0 / (4.0 * np.exp(5.0 * x) + np.exp(-5.0 * x))


def scalar_weyl(delay: float = 0.0) -> WeylData:
    return WeylData.create([[1.5j]], [[2.0]], [[1.0]], [delay], [[1.0]])


def two_delay_weyl() -> WeylData:
    beta = [[1 + 1.2j, 0.4], [-0.3, -0.5 + 0.9j]]
    theta1 = [[1.0, 0.5j], [0.3, 0.8]]
    theta2 = [[0.6, -0.4], [0.2j, 1.0]]
    R = np.array([[1.0, 1j], [1j, 1.0]]) / np.sqrt(2.0)
    return WeylData.create(beta, theta1, theta2, [0.3, 0.7], R)


def random_pe(seed: int = DEFAULT_SEED, n: int = 2, p: int = 1) -> PseudoExpParams:
    return random_pe_params(np.random.default_rng(seed), n, p, seed=seed)


def _config(W: WeylData, **kw) -> ProblemConfig:
    cfg = ProblemConfig(W.n, W.p, W.beta, W.theta1, W.theta2, W.R, tuple(W.D),
                        l_max=2.0, points=401, nystrom=True, forward=True,
                        identity=True, tolerances=default_tolerances())
    for k, v in kw.items():
        setattr(cfg, k, v)
    return cfg


def generate_example(kind: str, seed: int = DEFAULT_SEED, n: int = 2, p: int = 1
                     ) -> ProblemConfig:
    if kind == "scalar":
        return _config(scalar_weyl(), roundtrip=True, meta={"kind": kind})
    if kind == "delayed":
        return _config(scalar_weyl(0.5), meta={"kind": kind})
    if kind == "random-pe":
        W = pe_to_weyl(random_pe(seed, n, p))
        return _config(W, roundtrip=True, meta={"kind": kind, "seed": seed})
    if kind == "two-delay":
        return _config(two_delay_weyl(), meta={"kind": kind})
    raise ValueError(f"unknown example kind {kind!r} (choose from {', '.join(KINDS)})")
