"""Problem description files for the batch driver.

A config is a JSON object.  Complex matrices are nested lists of
``[re, im]`` pairs, row-major; ``D`` is a plain list of reals::

    {
      "n": 1, "p": 1,
      "beta":   [[[0.0, 1.5]]],
      "theta1": [[[2.0, 0.0]]],
      "theta2": [[[1.0, 0.0]]],
      "R":      [[[1.0, 0.0]]],
      "D": [0.0],
      "grid": {"l_max": 2.0, "points": 401},
      "checks": {"nystrom": {"enabled": true, "N": 200},
                 "forward": {"enabled": true, "lambdas": [[0, -3], [1, -4]]},
                 "identity": true, "roundtrip": true},
      "tolerances": {"two_path": 1e-7}
    }
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .errors import ConfigError
from .policy import NumericalPolicy, default_policy
from .weyl import WeylData

CHECKS = ("nystrom", "forward", "identity", "roundtrip")


def default_tolerances(policy: NumericalPolicy | None = None) -> dict[str, float]:
    policy = policy or default_policy()
    return {
        "two_path": 1e-7,
        "kernel": policy.acceptance_tol,
        "j_unitarity": 1e-9,
        "delay_vanishing": 1e-9,
        "roundtrip": 1e-6,
        "nystrom_v": 5e-4,
        "positivity": 1e-2,
        "weyl_C": 10.0,
    }


@dataclass
class ProblemConfig:
    n: int
    p: int
    beta: np.ndarray
    theta1: np.ndarray
    theta2: np.ndarray
    R: np.ndarray
    D: tuple[float, ...]
    l_max: float
    points: int
    nystrom: bool = False
    nystrom_N: int = 200
    forward: bool = False
    lambdas: tuple[complex, ...] = (-3j, 1 - 4j)
    identity: bool = False
    roundtrip: bool = False
    tolerances: dict = field(default_factory=default_tolerances)
    meta: dict = field(default_factory=dict)

    def weyl_data(self) -> WeylData:
        return WeylData(self.beta, self.theta1, self.theta2, self.D, self.R)

    def grid(self) -> np.ndarray:
        return np.linspace(0.0, self.l_max, self.points)

    def enabled_checks(self) -> list[str]:
        return [c for c in CHECKS if getattr(self, c)]

    def set_checks(self, names) -> None:
        for c in CHECKS:
            setattr(self, c, c in names)

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "n": self.n,
            "p": self.p,
            "beta": _encode(self.beta),
            "theta1": _encode(self.theta1),
            "theta2": _encode(self.theta2),
            "R": _encode(self.R),
            "D": [float(d) for d in self.D],
            "grid": {"l_max": self.l_max, "points": self.points},
            "checks": {
                "nystrom": {"enabled": self.nystrom, "N": self.nystrom_N},
                "forward": {"enabled": self.forward,
                            "lambdas": [[z.real, z.imag] for z in self.lambdas]},
                "identity": self.identity,
                "roundtrip": self.roundtrip,
            },
        }
        defaults = default_tolerances()
        changed = {k: v for k, v in self.tolerances.items() if defaults.get(k) != v}
        if changed:
            out["tolerances"] = changed
        if self.meta:
            out["meta"] = self.meta
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def _encode(M: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in M]


def _number(v, where: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {v!r}")
    if not np.isfinite(v):
        raise ConfigError(f"{where}: non-finite value {v!r}")
    return float(v)


def _complex(v, where: str) -> complex:
    if not isinstance(v, list) or len(v) != 2:
        raise ConfigError(f"{where}: expected a [re, im] pair, got {v!r}")
    return complex(_number(v[0], where + "[0]"), _number(v[1], where + "[1]"))


def _cmatrix(raw: dict, key: str, rows: int, cols: int) -> np.ndarray:
    if key not in raw:
        raise ConfigError(f"{key}: missing")
    M = raw[key]
    if not isinstance(M, list) or len(M) != rows:
        raise ConfigError(f"{key}: expected {rows} rows")
    out = np.empty((rows, cols), dtype=complex)
    for i, row in enumerate(M):
        if not isinstance(row, list) or len(row) != cols:
            raise ConfigError(f"{key}[{i}]: expected {cols} entries")
        for j, z in enumerate(row):
            out[i, j] = _complex(z, f"{key}[{i}][{j}]")
    return out


def _int(raw: dict, key: str, where: str, lo: int) -> int:
    if key not in raw:
        raise ConfigError(f"{where}{key}: missing")
    v = raw[key]
    if isinstance(v, bool) or not isinstance(v, int) or v < lo:
        raise ConfigError(f"{where}{key}: expected an integer >= {lo}, got {v!r}")
    return v


def _flag(raw, where: str) -> tuple[bool, dict]:
    if isinstance(raw, bool):
        return raw, {}
    if isinstance(raw, dict):
        en = raw.get("enabled", True)
        if not isinstance(en, bool):
            raise ConfigError(f"{where}.enabled: expected true/false")
        return en, raw
    raise ConfigError(f"{where}: expected true/false or an object")


def parse_config(raw: dict, policy: NumericalPolicy | None = None) -> ProblemConfig:
    if not isinstance(raw, dict):
        raise ConfigError("top level: expected a JSON object")
    n = _int(raw, "n", "", 1)
    p = _int(raw, "p", "", 1)
    beta = _cmatrix(raw, "beta", n, n)
    theta1 = _cmatrix(raw, "theta1", n, p)
    theta2 = _cmatrix(raw, "theta2", n, p)
    R = _cmatrix(raw, "R", p, p) if "R" in raw else np.eye(p, dtype=complex)
    D_raw = raw.get("D", [0.0] * p)
    if not isinstance(D_raw, list) or len(D_raw) != p:
        raise ConfigError(f"D: expected a list of {p} reals")
    D = tuple(_number(d, f"D[{i}]") for i, d in enumerate(D_raw))
    if any(d < 0 for d in D):
        raise ConfigError(f"D: delays must be nonnegative, got {list(D)}")

    g = raw.get("grid")
    if not isinstance(g, dict):
        raise ConfigError("grid: expected an object with l_max and points")
    l_max = _number(g.get("l_max"), "grid.l_max")
    if not l_max > 0:
        raise ConfigError(f"grid.l_max: must be > 0, got {l_max}")
    points = _int(g, "points", "grid.", 2)

    cfg = ProblemConfig(n, p, beta, theta1, theta2, R, D, l_max, points,
                        tolerances=default_tolerances(policy))
    checks = raw.get("checks", {})
    if not isinstance(checks, dict):
        raise ConfigError("checks: expected an object")
    unknown = set(checks) - set(CHECKS)
    if unknown:
        raise ConfigError(f"checks: unknown entries {sorted(unknown)}")
    if "nystrom" in checks:
        cfg.nystrom, sub = _flag(checks["nystrom"], "checks.nystrom")
        if "N" in sub:
            cfg.nystrom_N = _int(sub, "N", "checks.nystrom.", 16)
    if "forward" in checks:
        cfg.forward, sub = _flag(checks["forward"], "checks.forward")
        if "lambdas" in sub:
            lams = sub["lambdas"]
            if not isinstance(lams, list) or not lams:
                raise ConfigError("checks.forward.lambdas: expected a nonempty list")
            cfg.lambdas = tuple(_complex(z, f"checks.forward.lambdas[{i}]")
                                for i, z in enumerate(lams))
    for name in ("identity", "roundtrip"):
        if name in checks:
            setattr(cfg, name, _flag(checks[name], f"checks.{name}")[0])

    tol = raw.get("tolerances", {})
    if not isinstance(tol, dict):
        raise ConfigError("tolerances: expected an object")
    for k, v in tol.items():
        if k not in cfg.tolerances:
            raise ConfigError(f"tolerances.{k}: unknown tolerance "
                              f"(known: {', '.join(sorted(cfg.tolerances))})")
        v = _number(v, f"tolerances.{k}")
        if not v > 0:
            raise ConfigError(f"tolerances.{k}: must be positive")
        cfg.tolerances[k] = v
    meta = raw.get("meta", {})
    cfg.meta = meta if isinstance(meta, dict) else {}
    return cfg


def load_config(path, policy: NumericalPolicy | None = None) -> ProblemConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read ({exc.strerror})") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return parse_config(raw, policy)
