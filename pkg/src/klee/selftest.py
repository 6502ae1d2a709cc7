"""Fast invariant checks runnable without a test framework (``klee selftest``)."""

from __future__ import annotations

import math

import numpy as np
from scipy.special import gamma

from .construction import build_K, central_symmetry_defect, critical_epsilon_K, curvature_profile
from .core import fit_gegenbauer, gauss_jacobi_rule, jacobi_moment, omega, unit_ball
from .radon import HomogeneousExtension, ZonalFunction, fourier_homogeneous, radon_multipliers
from .sections import klee_section_radius, parallel_section_area, section_radius_general


def _quadrature():
    err = 0.0
    for alpha in (-0.5, 0.0, 0.5):
        rule = gauss_jacobi_rule(32, alpha)
        for j in range(0, 40, 2):
            err = max(err, abs(rule.integrate(rule.nodes**j) - jacobi_moment(j, alpha)))
    return err < 1e-13, f"max moment error {err:.2e}"


def _round_trip():
    err = 0.0
    for lam in (0.5, 1.0, 1.5):
        f = lambda phi: np.exp(np.cos(phi) ** 2)  # noqa: E731
        s = fit_gegenbauer(f, lam, 48)
        phi = np.linspace(0, math.pi, 301)
        err = max(err, float(np.max(np.abs(s(phi) - f(phi)))))
    return err < 1e-12, f"max fit/eval error {err:.2e}"


def _multipliers():
    e0 = max(abs(radon_multipliers(n, 8)[0] - omega(n - 1)) for n in (3, 4, 5))
    e2 = abs(radon_multipliers(3, 8)[1] + math.pi)
    return e0 < 1e-10 and e2 < 1e-8, f"lambda_0 error {e0:.2e}, lambda_2 (n=3) error {e2:.2e}"


def _ball_sections():
    err = 0.0
    for n in (3, 4, 5):
        b = unit_ball(n)
        for t in (0.0, 0.3, -0.6):
            exact = math.pi ** ((n - 1) / 2) / gamma((n + 1) / 2) * (1 - t * t) ** ((n - 1) / 2)
            err = max(err, abs(parallel_section_area(b, 0.7, t) - exact))
    return err < 1e-12, f"max area error {err:.2e}"


def _radius_solvers():
    K = build_K(0.1, 3)
    s = np.linspace(-1, 1, 11)
    err = float(np.max(np.abs(klee_section_radius(0.05, 0.9, s, 0.1) - section_radius_general(K, 0.05, 0.9, s))))
    return err < 1e-12, f"closed-form vs general solver {err:.2e}"


def _bochner():
    worst = 0.0
    for n in (3, 4, 5):
        f = ZonalFunction(lambda phi: np.ones_like(phi), "even", n)
        for p in range(1, n):
            exact = 2**p * math.pi ** (n / 2) * gamma(p / 2) / gamma((n - p) / 2)
            worst = max(worst, abs(fourier_homogeneous(HomogeneousExtension(f, p), 0.4) / exact - 1))
    return worst < 1e-8, f"max relative error vs closed form {worst:.2e}"


def _convexity():
    e = critical_epsilon_K()
    K = build_K(0.1, 3)
    kap = curvature_profile(K.profile)
    pole = max(abs(kap(0.0) - 1.1 ** (-2 / 3)), abs(kap(math.pi) - 0.9 ** (-2 / 3)))
    ok = abs(e - 3 * math.sqrt(6) / 8) < 1e-9 and pole < 1e-10
    return ok, f"critical eps {e:.10f}, pole curvature error {pole:.2e}"


def _symmetry():
    ball = central_symmetry_defect(unit_ball(3)).value
    d = central_symmetry_defect(build_K(0.1, 3))
    return ball < 1e-12 and d.value > 10 * d.noise, f"ball {ball:.1e}, K_0.1 {d.value:.4e} (noise {d.noise:.1e})"


CHECKS = {
    "quadrature moments": _quadrature,
    "Gegenbauer round trip": _round_trip,
    "Radon multipliers": _multipliers,
    "ball sections": _ball_sections,
    "radius solvers agree": _radius_solvers,
    "Fourier transform of |x|^(p-n)": _bochner,
    "curvature and convexity threshold": _convexity,
    "central symmetry defect": _symmetry,
}


def run_selftest():
    for name, check in CHECKS.items():
        ok, detail = check()
        yield name, bool(ok), detail
