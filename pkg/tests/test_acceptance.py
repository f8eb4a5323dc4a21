"""Acceptance criteria, one test each.

Every test records a PASS/FAIL line; ``conftest.py`` prints them at the end
of the pytest run.  Run this file directly to get just the ten lines:

    python tests/test_acceptance.py
"""

from __future__ import annotations

import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from _cases import GRID, SEED, all_cases, kernel_model, pe_params, profile  # noqa: E402
from dirac_isp.oracle import (  # noqa: E402
    build_nystrom,
    nystrom_resolvent,
    operator_identity_check,
    oracle_v,
    positivity,
    weyl_check,
)
from dirac_isp.recover import recover_profile, recover_v_closed  # noqa: E402
from dirac_isp.semisep import (  # noqa: E402
    build_resolvent,
    build_U,
    j_unitarity_defect,
    resolvent_matrix,
)
from dirac_isp.transform import kernel_K, kernel_K_direct  # noqa: E402
from dirac_isp.weyl import WeylData, pe_potential_profile  # noqa: E402

RESULTS: dict[int, tuple[bool, str]] = {}

PE_CASES = ["scalar"] + [f"random-pe-{i}" for i in range(10)]


def record(n: int, ok: bool, detail: str) -> None:
    RESULTS[n] = (bool(ok), detail)
    assert ok, f"criterion {n}: {detail}"


def report_lines() -> list[str]:
    out = []
    for n in sorted(RESULTS):
        ok, detail = RESULTS[n]
        out.append(f"ACCEPTANCE {n:2d} {'PASS' if ok else 'FAIL'}  {detail}")
    return out


def test_c1_pseudo_exponential_round_trip():
    t0 = time.perf_counter()
    worst = 0.0
    for name in PE_CASES:
        W = all_cases()[name]
        g = recover_profile(W, GRID, quadrature=False)
        ref = pe_potential_profile(pe_params(name), GRID)
        err = np.linalg.norm(g.v_closed - ref, 2, axis=(1, 2)).max()
        worst = max(worst, err / np.linalg.norm(ref, 2, axis=(1, 2)).max())
    dt = time.perf_counter() - t0
    record(1, worst <= 1e-6 and dt < 10.0,
           f"max rel error {worst:.2e} (tol 1e-6) over {len(PE_CASES)} cases, {dt:.1f} s (< 10 s)")


def test_c2_kernel_equivalence():
    t0 = time.perf_counter()
    xs = np.linspace(0.05, 1.95, 20) + 0.0123
    worst = {}
    for name in ("delayed", "two-delay"):
        W, KM = all_cases()[name], kernel_model(name)
        assert not any(KM.delays.is_breakpoint(x) for x in xs)
        e = 0.0
        for i, x in enumerate(xs):
            for t in xs[: i + 1]:
                d = kernel_K_direct(W, x, t, nu=KM.nu)
                e = max(e, np.linalg.norm(kernel_K(KM, x, t) - d, 2))
                # upper triangle: the direct value there is the adjoint of
                # the one at (t, x)
                if t != x:
                    e = max(e, np.linalg.norm(kernel_K(KM, t, x) - d.conj().T, 2))
        worst[name] = e
    dt = time.perf_counter() - t0
    e = max(worst.values())
    record(2, e <= 1e-8 and dt < 5.0,
           f"max error {e:.2e} (tol 1e-8) on 20x20 grid "
           + ", ".join(f"{k} {v:.1e}" for k, v in worst.items()) + f", {dt:.1f} s (< 5 s)")


def test_c3_resolvent_convergence():
    t0 = time.perf_counter()
    bad, ratios = [], []
    for name, W in all_cases().items():
        KM = kernel_model(name)
        RM = build_resolvent(KM, 1.0)
        errs = []
        for N in (100, 200, 400):
            nyo = build_nystrom(W, 1.0, N, KM=KM)
            errs.append(np.abs(nystrom_resolvent(nyo) - resolvent_matrix(RM, nyo.nodes)).max())
        r = [errs[0] / errs[1], errs[1] / errs[2]]
        ratios += r
        if not all(3.2 <= x <= 4.8 for x in r):
            bad.append(f"{name} {r[0]:.2f}/{r[1]:.2f}")
    dt = time.perf_counter() - t0
    record(3, not bad and dt < 30.0,
           f"error ratios in [{min(ratios):.2f}, {max(ratios):.2f}] (need [3.2, 4.8]) "
           f"over {len(all_cases())} cases, l = 1, {dt:.1f} s (< 30 s)"
           + (f"; out of range: {', '.join(bad)}" if bad else ""))


def test_c4_two_path_agreement():
    worst = {name: float(np.nanmax(profile(name).residuals)) for name in all_cases()}
    ok = all(profile(name).ok for name in all_cases()) and max(worst.values()) <= 1e-7
    name = max(worst, key=worst.get)
    record(4, ok, f"max |closed - quadrature| {worst[name]:.2e} ({name}), tol 1e-7, "
                  f"{len(worst)} cases x {len(GRID)} points")


def _j_defects(l: float) -> dict:
    rng = np.random.default_rng(SEED)
    out = {}
    for name in all_cases():
        FS = build_U(kernel_model(name), l)
        xs = rng.uniform(0.0, l, 100)
        out[name] = max(j_unitarity_defect(FS, float(x)) for x in xs)
    return out


def test_c5_j_unitarity():
    d2 = _j_defects(2.0)
    d1 = _j_defects(1.0)
    bad = {k: v for k, v in d2.items() if v > 1e-9}
    record(5, not bad,
           f"max defect on [0, 2] {max(d2.values()):.1e} (tol 1e-9)"
           + (f", over tol: {', '.join(f'{k} {v:.1e}' for k, v in bad.items())}" if bad else "")
           + f"; on [0, 1] max {max(d1.values()):.1e}")


def test_c6_positivity():
    lows, raw, bad = [], [], []
    for name, W in all_cases().items():
        rep = positivity(W, 2.0, Ns=(100, 200, 400), KM=kernel_model(name))
        lows.append(rep[200]["min_eig"])
        raw += [1.0 - r["min_eig"] for r in rep.values()]
        defs = [rep[N]["deficit"] for N in (100, 200, 400)]
        if rep[200]["min_eig"] < 1 - 1e-2 or not all(b <= a for a, b in zip(defs, defs[1:])):
            bad.append(name)
    record(6, not bad, f"min eig at N=200 is {min(lows):.6f} (need >= 0.99), "
                       f"deficit nonincreasing over N = 100, 200, 400 "
                       f"(largest raw 1 - min eig {max(raw):.1e}, within eigensolver rounding)"
                       + (f"; failing: {', '.join(bad)}" if bad else ""))


def test_c7_operator_identity():
    Ns = (50, 100, 200, 400)
    bad = []
    for name, W in all_cases().items():
        res = [operator_identity_check(W, 1.0, N, KM=kernel_model(name)) for N in Ns]
        if not all(b < a for a, b in zip(res, res[1:])):
            bad.append(name)
    trivial = operator_identity_check(WeylData.create([[1.5j]], [[2.0]], [[0.0]]), 1.0, 100)
    record(7, not bad and trivial <= 1e-10,
           f"residual decreasing over N = {Ns} for {len(all_cases()) - len(bad)}"
           f"/{len(all_cases())} cases; psi = 0 residual {trivial:.1e} (tol 1e-10)")


def test_c8_delay_vanishing():
    KM = kernel_model("delayed")
    xs = np.linspace(0.0, 0.5, 102)[1:-1]
    g = recover_profile(all_cases()["delayed"], xs, quadrature=False, KM=KM)
    worst = float(g.norms().max())
    record(8, worst <= 1e-9, f"max |v(l)| on (0, 0.5) is {worst:.1e} (tol 1e-9), d1 = 0.5")


def test_c9_weyl_property():
    t0 = time.perf_counter()
    lams = [-3j, 1 - 4j]
    xs = np.linspace(0.0, 2.0, 401)
    rows, ok = [], True
    for name in ("scalar", "delayed", "two-delay"):
        W = all_cases()[name]
        g = recover_profile(W, xs, quadrature=False, KM=kernel_model(name))
        rep = weyl_check(W, g, lams, 2.0)
        neg = weyl_check(W, g.negated(), lams, 2.0)
        ratio = max(s.g_max / s.g0 for s in rep.samples)
        neg_ratio = max(s.g_max / s.g0 for s in neg.samples)
        ok &= rep.passed and not neg.passed
        rows.append(f"{name} {ratio:.2f} (control {neg_ratio:.1e})")
    dt = time.perf_counter() - t0
    record(9, ok and dt < 10.0,
           "max g/g(0): " + ", ".join(rows) + f", bound 10, {dt:.1f} s (< 10 s)")


def test_c10_oracle_endpoint():
    W = all_cases()["scalar"]
    KM = kernel_model("scalar")
    v = recover_v_closed(KM, build_resolvent(KM, 1.0), 1.0)
    errs = [float(np.linalg.norm(oracle_v(W, 1.0, N, KM=KM) - v)) for N in (100, 200, 400)]
    r = [errs[0] / errs[1], errs[1] / errs[2]]
    ok = errs[-1] <= 5e-4 and all(3.2 <= x <= 4.8 for x in r)
    record(10, ok, f"N=400 error {errs[-1]:.2e} (tol 5e-4), ratios {r[0]:.2f}, {r[1]:.2f}")


def main() -> int:
    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_c")]
    tests.sort(key=lambda f: int(f.__name__.split("_")[1][1:]))
    for f in tests:
        try:
            f()
        except AssertionError:
            pass
    for line in report_lines():
        print(line)
    return 0 if all(ok for ok, _ in RESULTS.values()) else 1


if __name__ == "__main__":
    sys.exit(main())
