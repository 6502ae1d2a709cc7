"""Acceptance suite: one pass/fail line per criterion.

Run with pytest (the lines are repeated in the terminal summary) or
directly with ``python3 tests/test_acceptance.py``.
"""

from __future__ import annotations

import math
import time
from functools import lru_cache

import numpy as np
from scipy.special import gamma

from klee.construction import (
    build_K,
    construct_L,
    critical_epsilon_K,
    curvature_profile,
    profile_body,
    verify_counterexample,
)
from klee.core import fit_gegenbauer_values, kappa, omega
from klee.radon import (
    HomogeneousExtension,
    ZonalFunction,
    fourier_homogeneous,
    gegenbauer_index,
    radon_inverse_fourier,
    radon_inverse_spectral,
    radon_multipliers,
    spherical_radon,
)
from klee.sections import parallel_section_area, perturbation_diagnostics, section_area_mc_oracle

DIMS = (3, 4, 5)
EPSILONS = (0.02, 0.05, 0.1)
DEGREE = 64
MATRIX_BUDGET = 300.0

ACCEPTANCE_RESULTS: dict[int, tuple[bool, str]] = {}


def record(k: int, ok: bool, detail: str) -> tuple[bool, str]:
    ACCEPTANCE_RESULTS[k] = (bool(ok), detail)
    print(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
    return bool(ok), detail


@lru_cache(maxsize=1)
def matrix():
    start = time.perf_counter()
    reports = {(n, e): verify_counterexample(e, n, DEGREE) for n in DIMS for e in EPSILONS}
    return reports, time.perf_counter() - start


def trig_poly(coeffs):
    coeffs = np.asarray(coeffs, dtype=float)
    k = 2 * np.arange(len(coeffs))
    return lambda phi: np.cos(np.multiply.outer(np.asarray(phi, dtype=float), k)) @ coeffs


def criterion_1():
    reports, elapsed = matrix()
    worst = 0.0
    ok = elapsed < MATRIX_BUDGET
    for (n, e), r in reports.items():
        ratio = r.m_mismatch / kappa(n - 1)
        worst = max(worst, ratio if math.isfinite(ratio) else math.inf)
        ok &= r.passed and r.m_mismatch <= 1e-6 * kappa(n - 1)
    return record(1, ok, f"max mMismatch/kappa_(n-1) = {worst:.2e} (<= 1e-6) over 9 cells; "
                         f"matrix runtime {elapsed:.0f}s (< {MATRIX_BUDGET:.0f}s)")


def criterion_2():
    reports, _ = matrix()
    ok = True
    margin = math.inf
    sym = 0.0
    for r in reports.values():
        if not r.passed:
            continue
        ok &= r.central_symmetry_defect_K >= 10 * r.defect_noise_K
        ok &= r.origin_symmetry_defect_L <= 1e-9
        margin = min(margin, r.central_symmetry_defect_K / r.defect_noise_K)
        sym = max(sym, r.origin_symmetry_defect_L)
    ok &= all(r.passed for r in reports.values())
    return record(2, ok, f"min defect_K / grid noise = {margin:.2e} (>= 10); max origin-symmetry defect of L = "
                         f"{sym:.1e} (<= 1e-9)")


def criterion_3():
    reports, _ = matrix()
    pole_err = 0.0
    for e in EPSILONS + (0.3, 0.6):
        kap = curvature_profile(build_K(e, 3).profile)
        pole_err = max(pole_err, abs(kap(0.0) - (1 + e) ** (-2 / 3)), abs(kap(math.pi) - (1 - e) ** (-2 / 3)))
    cmin = min(min(r.curvature_min_K, r.curvature_min_L) for r in reports.values())
    ok = pole_err <= 1e-10 and cmin > 0
    return record(3, ok, f"pole curvature error {pole_err:.1e} (<= 1e-10); min curvature of K and L over cells "
                         f"{cmin:.4f} (> 0)")


def criterion_4():
    e = critical_epsilon_K()
    ok = abs(e - 0.9186) <= 1e-3 and e >= 0.91
    return record(4, ok, f"critical eps = {e:.6f} (0.9186 +- 0.001, exact 3 sqrt(6)/8 = {3 * math.sqrt(6) / 8:.6f})")


def criterion_5():
    e0 = max(abs(radon_multipliers(n, 64)[0] - omega(n - 1)) for n in (3, 4, 5, 6))
    e2 = abs(radon_multipliers(3, 64)[1] + math.pi)
    worst = 0.0
    phi = np.linspace(0, math.pi, 241)
    for n in DIMS:
        rng = np.random.default_rng(100 + n)
        for degree in (20, 40, 60):
            f = trig_poly(rng.normal(size=degree // 2 + 1))
            Z = ZonalFunction(f, "even", n)
            import warnings

            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                inv = radon_inverse_spectral(Z, 60)
                back = spherical_radon(ZonalFunction.from_series(inv.series, n), phi=phi).values
                fwd = spherical_radon(Z, N=60)
                again = radon_inverse_spectral(ZonalFunction.from_series(fwd.series, n), 60).series(phi)
            worst = max(worst, float(np.max(np.abs(back - f(phi)))), float(np.max(np.abs(again - f(phi)))))
    ok = e0 <= 1e-10 and e2 <= 1e-8 and worst <= 1e-9
    return record(5, ok, f"lambda_0 error {e0:.1e} (<= 1e-10); lambda_2(n=3) + pi = {e2:.1e} (<= 1e-8); "
                         f"round-trip sup error {worst:.1e} (<= 1e-9)")


def criterion_6():
    route = 0.0
    for n in DIMS:
        L = construct_L(build_K(0.1, n), DEGREE)
        lam = gegenbauer_index(n)
        g = ZonalFunction.from_series(fit_gegenbauer_values((n - 1) * L.m_K, lam, DEGREE), n)
        a = radon_inverse_spectral(g, DEGREE)
        b = radon_inverse_fourier(g, DEGREE)
        route = max(route, float(np.max(np.abs(a.values - b.values))))
    ft = 0.0
    tests = (lambda phi: np.exp(np.cos(phi) ** 2), lambda phi: 1 / (2 + np.cos(2 * phi)))
    for n in DIMS:
        for f in tests:
            Z = ZonalFunction(f, "even", n)
            for phi in (0.0, 0.4, 1.0, math.pi / 2):
                lhs = math.pi * spherical_radon(Z, phi=np.array([phi])).values[0]
                rhs = fourier_homogeneous(HomogeneousExtension(Z, 1), phi)
                ft = max(ft, abs(lhs - rhs))
    ok = route <= 1e-4 and ft <= 1e-6
    return record(6, ok, f"Fourier vs spectral inverse on (n-1) m_K: {route:.1e} (<= 1e-4); "
                         f"|pi R f - Fourier transform| {ft:.1e} (<= 1e-6)")


def criterion_7():
    e = 0.1
    sym_err = ell_err = 0.0
    phi = np.linspace(0, math.pi, 1025)
    a, b = (1 - e * e) ** -0.5, 1 / (1 - e * e)
    exact = (np.sin(phi) ** 2 / a**2 + np.cos(phi) ** 2 / b**2) ** -0.5
    for n in DIMS:
        sym = profile_body(
            n, lambda x: (1 + e * x**2) ** -2, lambda x: -4 * e * x * (1 + e * x**2) ** -3,
            lambda x: -4 * e * (1 + e * x**2) ** -3 + 24 * e * e * x * x * (1 + e * x**2) ** -4,
            "symmetric-fixture", origin_symmetric=True,
        )
        L = construct_L(sym, DEGREE)
        sym_err = max(sym_err, float(np.max(np.abs(L.body.profile(phi) - sym.profile(phi)))))
        ell = profile_body(n, lambda x: 1 / (1 + e * x), lambda x: -e / (1 + e * x) ** 2,
                           lambda x: 2 * e * e / (1 + e * x) ** 3, "ellipsoid-fixture")
        L = construct_L(ell, DEGREE)
        ell_err = max(ell_err, float(np.max(np.abs(L.body.profile(phi) - exact))))
    ok = sym_err <= 1e-8 and ell_err <= 1e-6
    return record(7, ok, f"symmetric fixture round trip {sym_err:.1e} (<= 1e-8); centred ellipsoid "
                         f"{ell_err:.1e} (<= 1e-6)")


def criterion_8():
    reports, _ = matrix()
    stat = max(r.diagnostics["stationarity_residual"] / kappa(r.n - 1) for r in reports.values())
    fp = max(r.diagnostics["fixed_point_residual"] for r in reports.values())
    ident = 0.0
    grid = np.linspace(0, math.pi, 33)
    for n in DIMS:
        for e in EPSILONS:
            ident = max(ident, perturbation_diagnostics(e, n, grid).identity_residual)
    spread = 0.0
    for n in DIMS:
        lo = reports[(n, EPSILONS[0])].diagnostics["T_eps_max"]
        hi = reports[(n, EPSILONS[-1])].diagnostics["T_eps_max"]
        spread = max(spread, abs(hi - lo) / min(lo, hi))
    ok = stat <= 1e-8 and fp <= 1e-8 and ident <= 1e-8 and spread < 0.2
    return record(8, ok, f"stationarity/kappa {stat:.1e}, fixed point {fp:.1e}, identity {ident:.1e} (all <= 1e-8); "
                         f"max|T| spread between eps=0.02 and 0.1: {100 * spread:.1f}% (< 20%)")


def criterion_9():
    rng = np.random.default_rng(20260101)
    worst = 0.0
    cases = 24
    for i in range(cases):
        n = int(rng.choice(DIMS))
        e = float(rng.uniform(0.01, 0.3))
        if i % 4 == 3:
            body = profile_body(n, lambda x, e=e: 1 / (1 + e * x), lambda x, e=e: -e / (1 + e * x) ** 2,
                                lambda x, e=e: 2 * e * e / (1 + e * x) ** 3, "ellipsoid-fixture")
        else:
            body = build_K(e, n)
        phi = float(rng.uniform(0, math.pi))
        t = float(rng.uniform(-0.6, 0.6))
        est, se = section_area_mc_oracle(body, phi, t, 10**6, seed=1000 + i)
        z = abs(est - parallel_section_area(body, phi, t)) / se
        worst = max(worst, z)
    return record(9, worst <= 4, f"{cases} random (body, phi, t) cases with 1e6 samples: max |z| = {worst:.2f} (<= 4)")


def criterion_10():
    reports, _ = matrix()
    worst = max(max(r.diagnostics["concavity_K"], r.diagnostics["concavity_L"]) for r in reports.values())
    return record(10, worst <= 1e-8, f"largest second difference of A^(1/(n-1)) for K and L: {worst:.2e} (<= 1e-8)")


CRITERIA = (criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9, criterion_10)


def test_criterion_01_counterexample_identity():
    ok, detail = criterion_1()
    assert ok, detail


def test_criterion_02_asymmetry_and_symmetry():
    ok, detail = criterion_2()
    assert ok, detail


def test_criterion_03_curvature():
    ok, detail = criterion_3()
    assert ok, detail


def test_criterion_04_convexity_threshold():
    ok, detail = criterion_4()
    assert ok, detail


def test_criterion_05_radon_machinery():
    ok, detail = criterion_5()
    assert ok, detail


def test_criterion_06_route_agreement():
    ok, detail = criterion_6()
    assert ok, detail


def test_criterion_07_fixture_regressions():
    ok, detail = criterion_7()
    assert ok, detail


def test_criterion_08_maximizer_diagnostics():
    ok, detail = criterion_8()
    assert ok, detail


def test_criterion_09_monte_carlo_oracle():
    ok, detail = criterion_9()
    assert ok, detail


def test_criterion_10_brunn_minkowski():
    ok, detail = criterion_10()
    assert ok, detail


if __name__ == "__main__":
    results = [c()[0] for c in CRITERIA]
    raise SystemExit(0 if all(results) else 1)
