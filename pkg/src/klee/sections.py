"""Hyperplane sections of bodies of revolution and the inner section function.

A hyperplane u^perp + t u, with u at angle phi from the x_n axis, meets the
body in an (n-1)-dimensional star body.  Its radial function in the
direction v in u^perp is written r(t, phi, s), where s = <v, w> and
e_n = u cos(phi) + w sin(phi), so that v_n = s sin(phi).  Areas are
integrals of r^(n-1) against d mu(s) = (1 - s^2)^((n-4)/2) ds.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from math import comb

import numpy as np
from scipy.optimize import brentq

from .core import (
    DEFAULT_NODES,
    BodyOfRevolution,
    RadialProfile,
    kappa,
    omega,
    section_measure,
    unit_ball,
)

RADIUS_TOL = 1e-13
BRACKET_LO = 1e-6
T_LIMIT = 0.25
GOLDEN_WIDTH = 1e-6
INV_PHI = (math.sqrt(5) - 1) / 2


class NoBracketError(ValueError):
    """The radius equation has no unique sign change on the search bracket."""


class ConvergenceError(ArithmeticError):
    """An iterative solver exhausted its iteration budget."""


class FlatMaximumWarning(UserWarning):
    """The parallel section function looks constant near its maximum."""


# --------------------------------------------------------------------------
# the perturbed body


def klee_profile(eps: float, allow_zero: bool = False) -> RadialProfile:
    """rho(phi) = (1 + eps cos^3 phi)^(-1/3) with analytic derivatives."""
    lower_ok = eps >= 0 if allow_zero else eps > 0
    if not (lower_ok and eps < 1):
        raise ValueError(f"eps must lie in (0, 1), got {eps!r}")

    def h(x):
        return (1 + eps * np.asarray(x) ** 3) ** (-1 / 3)

    def dh(x):
        x = np.asarray(x)
        return -eps * x**2 * (1 + eps * x**3) ** (-4 / 3)

    def d2h(x):
        x = np.asarray(x)
        q = 1 + eps * x**3
        return -2 * eps * x * q ** (-4 / 3) + 4 * eps**2 * x**4 * q ** (-7 / 3)

    return RadialProfile(h, dh, d2h, label="klee", params={"eps": eps, "origin_symmetric": eps == 0})


def klee_eps(body: BodyOfRevolution) -> float | None:
    if body.profile.label == "klee":
        return body.profile.params["eps"]
    return None


# --------------------------------------------------------------------------
# root finding


def safeguarded_newton(fun, lo, hi, tol=RADIUS_TOL, maxiter=100):
    """Vectorized Newton iteration kept inside [lo, hi] by bisection.

    ``fun(x)`` returns ``(f, df)``; f must be negative at ``lo`` and positive
    at ``hi`` elementwise.
    """
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    x = 0.5 * (lo + hi)
    for _ in range(maxiter):
        f, df = fun(x)
        if np.all(np.abs(f) <= tol):
            return x
        neg = f < 0
        lo = np.where(neg, x, lo)
        hi = np.where(neg, hi, x)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = x - f / df
        bad = ~np.isfinite(step) | (step <= lo) | (step >= hi)
        x_new = np.where(bad, 0.5 * (lo + hi), step)
        x = np.where(np.abs(f) <= tol, x, x_new)
        if np.all(hi - lo <= 4 * np.finfo(float).eps * np.abs(x)):
            return x
    raise ConvergenceError("section radius did not converge; parameters may be outside the validated regime")


def _check_bracket(residual, lo, hi, probes: int = 9):
    grid = np.linspace(0.0, 1.0, probes)[:, None]
    r = lo + grid * (hi - lo)
    vals = residual(r)
    if np.any(vals[0] >= 0) or np.any(vals[-1] <= 0):
        raise NoBracketError("hyperplane misses the body or the bracket is invalid")
    changes = np.sum(np.diff(np.sign(vals), axis=0) != 0, axis=0)
    if np.any(changes != 1):
        raise NoBracketError("radius equation has several sign changes on the bracket")


@dataclass(frozen=True)
class SectionGeometry:
    t: float
    phi: float
    s: float
    eps: float


def klee_residual(r, t, phi, s, eps):
    """Residual of (t^2 + r^2)^(3/2) + eps (t cos phi + r s sin phi)^3 - 1 and its r-derivative."""
    R = np.sqrt(t * t + r * r)
    z = t * math.cos(phi) + r * s * math.sin(phi)
    f = R**3 + eps * z**3 - 1
    df = 3 * R * r + 3 * eps * z**2 * s * math.sin(phi)
    return f, df


def klee_section_radius(t: float, phi: float, s, eps: float, tol: float = RADIUS_TOL) -> np.ndarray:
    """Section radius of K_eps for an array of s values."""
    s = np.asarray(s, dtype=float)
    if eps == 0:
        if abs(t) >= 1:
            raise NoBracketError("hyperplane misses the unit ball")
        return np.full_like(s, math.sqrt(1 - t * t))
    hi = 2 * (1 - eps) ** (-1 / 3)
    lo = np.full_like(s, BRACKET_LO)
    hi = np.full_like(s, hi)
    _check_bracket(lambda r: klee_residual(r, t, phi, s, eps)[0], lo, hi)
    return safeguarded_newton(lambda r: klee_residual(r, t, phi, s, eps), lo, hi, tol)


def solve_klee_section_radius(geom: SectionGeometry) -> float:
    return float(klee_section_radius(geom.t, geom.phi, np.array([geom.s]), geom.eps)[0])


def general_residual(r, t, phi, s, profile: RadialProfile):
    """|x| - rho(angle of x) at x = t u + r v, with its r-derivative."""
    c, sn = math.cos(phi), math.sin(phi)
    R = np.sqrt(t * t + r * r)
    z = t * c + r * s * sn
    w = np.clip(z / R, -1.0, 1.0)
    dw_dr = s * sn / R - z * r / R**3
    f = R - profile.h(w)
    df = r / R - profile.dh(w) * dw_dr
    return f, df


def section_radius_general(body: BodyOfRevolution, t: float, phi: float, s, tol: float = RADIUS_TOL) -> np.ndarray:
    """Section radius for any body of revolution containing t u in its interior."""
    s = np.asarray(s, dtype=float)
    prof = body.profile
    lo = np.full_like(s, BRACKET_LO)
    hi = np.full_like(s, 2 * body.rho_max)
    _check_bracket(lambda r: general_residual(r, t, phi, s, prof)[0], lo, hi)
    return safeguarded_newton(lambda r: general_residual(r, t, phi, s, prof), lo, hi, tol)


def section_radius(body: BodyOfRevolution, t: float, phi: float, s) -> np.ndarray:
    eps = klee_eps(body)
    if eps is not None:
        return klee_section_radius(t, phi, s, eps)
    return section_radius_general(body, t, phi, s)


def _radius_t_derivative(body: BodyOfRevolution, r, t, phi, s):
    c, sn = math.cos(phi), math.sin(phi)
    R = np.sqrt(t * t + r * r)
    z = t * c + r * s * sn
    eps = klee_eps(body)
    if eps is not None:
        return -(R * t + eps * z**2 * c) / (R * r + eps * z**2 * s * sn)
    w = np.clip(z / R, -1.0, 1.0)
    dp = body.profile.dh(w)
    h_t = t / R - dp * (c / R - z * t / R**3)
    h_r = r / R - dp * (s * sn / R - z * r / R**3)
    return -h_t / h_r


# --------------------------------------------------------------------------
# areas


def parallel_section_area(body: BodyOfRevolution, phi: float, t: float, m: int = DEFAULT_NODES) -> float:
    """(n-1)-volume of the section of ``body`` by u^perp + t u."""
    return section_area_and_slope(body, phi, t, m)[0]


def section_area_and_slope(body: BodyOfRevolution, phi: float, t: float, m: int = DEFAULT_NODES):
    """Return A(t) and A'(t), the latter from the differentiated area integral."""
    n = body.n
    if n < 3:
        raise ValueError("sections need n >= 3")
    rule = section_measure(n, m)
    s = rule.nodes
    r = section_radius(body, t, phi, s)
    dr = _radius_t_derivative(body, r, t, phi, s)
    om = omega(n - 2)
    area = om / (n - 1) * rule.integrate(r ** (n - 1))
    slope = om * rule.integrate(r ** (n - 2) * dr)
    return float(area), float(slope)


@dataclass(frozen=True)
class SectionCurve:
    phi: float
    t_grid: np.ndarray
    areas: np.ndarray
    t_star: float
    m: float
    stationarity_residual: float
    n: int

    def concavity_defect(self) -> float:
        """Largest second difference of A(t)^(1/(n-1)); non-positive for convex bodies."""
        if len(self.areas) < 3:
            return -math.inf
        root = self.areas ** (1 / (self.n - 1))
        return float(np.max(root[2:] - 2 * root[1:-1] + root[:-2]))


def _search_limit(body: BodyOfRevolution, phi: float) -> float:
    if body.rho_min > T_LIMIT + 1e-3:
        return T_LIMIT
    reach = min(float(body.profile(phi)), float(body.profile(math.pi - phi)))
    return min(T_LIMIT, reach - 1e-6)


def _golden_max(f, a, b, width):
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > width:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    return a, b


def inner_section_function(
    body: BodyOfRevolution,
    phi: float,
    m: int = DEFAULT_NODES,
    samples: int = 0,
) -> SectionCurve:
    """Maximize the parallel section function over t for direction angle phi.

    Golden-section search brackets the maximizer (A is unimodal by
    Brunn-Minkowski); the bracket is then polished by solving A'(t) = 0 with
    the slope from the differentiated area integral.  ``samples`` > 0 also
    records A on a grid over 95% of the chord of the body along u.
    """
    n = body.n
    if klee_eps(body) == 0 or body.profile.label == "ball":
        t_star, slope = 0.0, 0.0
        m_val = parallel_section_area(body, phi, 0.0, m)
    else:
        lim = _search_limit(body, phi)
        area = lambda t: section_area_and_slope(body, phi, t, m)[0]  # noqa: E731
        slope_fn = lambda t: section_area_and_slope(body, phi, t, m)[1]  # noqa: E731
        a, b = _golden_max(area, -lim, lim, GOLDEN_WIDTH)
        pad = 4 * GOLDEN_WIDTH
        lo, hi = max(a - pad, -lim), min(b + pad, lim)
        s_lo, s_hi = slope_fn(lo), slope_fn(hi)
        if s_lo > 0 > s_hi:
            t_star = brentq(slope_fn, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
        else:
            if abs(s_lo - s_hi) < 1e-13:
                warnings.warn(f"flat maximum near t={0.5 * (a + b):.3g} at phi={phi:.6g}", FlatMaximumWarning)
            t_star = 0.5 * (a + b)
        if lim - abs(t_star) < 10 * GOLDEN_WIDTH:
            raise ConvergenceError(f"maximizer at phi={phi:.6g} sits on the search limit |t|={lim}")
        m_val, slope = section_area_and_slope(body, phi, t_star, m)
    if samples:
        # t u must stay inside the body for the section to be star-shaped about it
        t_lo = -0.95 * float(body.profile(math.pi - phi))
        t_hi = 0.95 * float(body.profile(phi))
        t_grid = np.linspace(t_lo, t_hi, samples)
        areas = np.array([parallel_section_area(body, phi, t, m) for t in t_grid])
    else:
        t_grid = np.empty(0)
        areas = np.empty(0)
    return SectionCurve(float(phi), t_grid, areas, float(t_star), float(m_val), abs(float(slope)), n)


def inner_section_values(body: BodyOfRevolution, phis, m: int = DEFAULT_NODES):
    """m_K and maximizers on an angle grid, using m_K(pi - phi) = m_K(phi)."""
    phis = np.asarray(phis, dtype=float)
    mvals = np.empty_like(phis)
    tstar = np.empty_like(phis)
    resid = np.empty_like(phis)
    cache: dict[float, SectionCurve] = {}
    for i, phi in enumerate(phis):
        key = round(min(phi, math.pi - phi), 14)
        flip = phi > math.pi / 2
        if key not in cache:
            cache[key] = inner_section_function(body, key, m)
        curve = cache[key]
        mvals[i] = curve.m
        tstar[i] = -curve.t_star if flip else curve.t_star
        resid[i] = curve.stationarity_residual
    return mvals, tstar, resid


# --------------------------------------------------------------------------
# Monte Carlo oracle


def section_area_mc_oracle(body: BodyOfRevolution, phi: float, t: float, samples: int, seed: int,
                           chunk: int = 1 << 15):
    """Rejection estimate of the section area with its binomial standard error."""
    if samples < 1000:
        raise ValueError("need at least 1000 samples")
    n = body.n
    dim = n - 1
    radius = body.rho_max * (1 + 1e-9)
    rng = np.random.Generator(np.random.Philox(seed))
    c, sn = math.cos(phi), math.sin(phi)
    hits = 0
    done = 0
    while done < samples:
        k = min(chunk, samples - done)
        g = rng.standard_normal((k, dim))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        rad = radius * rng.random(k) ** (1 / dim)
        y = g * rad[:, None]
        # y[:, 0] is the coordinate along w, the in-plane direction tilted toward e_n
        norm = np.sqrt(t * t + rad**2)
        xn = t * c + y[:, 0] * sn
        w = np.clip(xn / norm, -1.0, 1.0)
        hits += int(np.count_nonzero(norm <= body.profile.h(w)))
        done += k
    vol = kappa(dim) * radius**dim
    p = hits / samples
    return vol * p, vol * math.sqrt(p * (1 - p) / samples)


# --------------------------------------------------------------------------
# maximizer and perturbation diagnostics


@dataclass(frozen=True)
class MaximizerDiagnostics:
    T_eps: float
    phi_integral: float
    psi_integral: float
    fixed_point_residual: float


def _phi_psi(eps, n, phi, t, m):
    rule = section_measure(n, m)
    s = rule.nodes
    rho = klee_section_radius(t, phi, s, eps)
    c, sn = math.cos(phi), math.sin(phi)
    R = np.sqrt(t * t + rho * rho)
    z = t * c + rho * s * sn
    denom = R * rho + eps * z**2 * s * sn
    big_phi = rho ** (n - 2) * z**2 * c / denom
    big_psi = rho ** (n - 2) * R / denom
    return rule.integrate(big_phi), rule.integrate(big_psi), rho, rule


def maximizer_diagnostics(eps: float, n: int, phi: float, t_star: float, m: int = DEFAULT_NODES) -> MaximizerDiagnostics:
    """Fixed-point form t = -eps * int(Phi) / int(Psi) of the stationarity condition."""
    if eps <= 0:
        raise ValueError("diagnostics need eps > 0")
    i_phi, i_psi, _, _ = _phi_psi(eps, n, phi, t_star, m)
    if i_psi <= 0:
        raise ZeroDivisionError("Psi integral is not positive; eps outside the validated regime")
    resid = abs(t_star + eps * i_phi / i_psi)
    return MaximizerDiagnostics(t_star / eps, float(i_phi), float(i_psi), float(resid))


@dataclass(frozen=True)
class PerturbationDiagnostics:
    phi: np.ndarray
    s: np.ndarray
    U: np.ndarray
    f: np.ndarray
    g: np.ndarray
    m_K: np.ndarray
    T_eps: np.ndarray
    radius_residual: float
    binomial_residual: float
    identity_residual: float


def perturbation_U(eps, n, phi, T, rho, s):
    """U with rho(t_eps, phi, s) = 1 - U eps."""
    c, sn = math.cos(phi), math.sin(phi)
    te = T * eps
    z = te * c + rho * s * sn
    R2 = te * te + rho * rho
    num = z**3 * (1 + R2**1.5)
    den = (1 + rho) * (1 + R2 + R2**2)
    return num / den + T * T * eps / (1 + rho)


def perturbation_f(eps, n, U):
    return sum((-1) ** j * comb(n - 1, j) * U**j * eps ** (j - 1) for j in range(1, n))


def perturbation_diagnostics(eps: float, n: int, phi_grid, m: int = DEFAULT_NODES) -> PerturbationDiagnostics:
    """Evaluate U, f and g on a grid and check m_K = kappa_{n-1} + g eps / (n-1)."""
    if eps <= 0:
        raise ValueError("diagnostics need eps > 0")
    body = BodyOfRevolution(n, klee_profile(eps))
    phi_grid = np.asarray(phi_grid, dtype=float)
    rule = section_measure(n, m)
    s = rule.nodes
    Us, fs, gs, ms, Ts = [], [], [], [], []
    rad_res = bin_res = id_res = 0.0
    om = omega(n - 2)
    for phi in phi_grid:
        curve = inner_section_function(body, phi, m)
        T = curve.t_star / eps
        rho = klee_section_radius(curve.t_star, phi, s, eps)
        U = perturbation_U(eps, n, phi, T, rho, s)
        f = perturbation_f(eps, n, U)
        g = om * rule.integrate(f)
        rad_res = max(rad_res, float(np.max(np.abs(rho - (1 - U * eps)))))
        bin_res = max(bin_res, float(np.max(np.abs((1 - U * eps) ** (n - 1) - (1 + f * eps)))))
        id_res = max(id_res, abs(curve.m - kappa(n - 1) - g * eps / (n - 1)))
        Us.append(U)
        fs.append(f)
        gs.append(g)
        ms.append(curve.m)
        Ts.append(T)
    return PerturbationDiagnostics(
        phi_grid, np.asarray(s), np.array(Us), np.array(fs), np.array(gs), np.array(ms), np.array(Ts),
        rad_res, bin_res, float(id_res),
    )


def ball_section_area(n: int, t: float) -> float:
    return kappa(n - 1) * (1 - t * t) ** ((n - 1) / 2)


__all__ = [
    "ConvergenceError",
    "FlatMaximumWarning",
    "MaximizerDiagnostics",
    "NoBracketError",
    "PerturbationDiagnostics",
    "SectionCurve",
    "SectionGeometry",
    "ball_section_area",
    "inner_section_function",
    "inner_section_values",
    "klee_profile",
    "klee_section_radius",
    "maximizer_diagnostics",
    "parallel_section_area",
    "perturbation_diagnostics",
    "section_area_and_slope",
    "section_area_mc_oracle",
    "section_radius",
    "section_radius_general",
    "solve_klee_section_radius",
    "unit_ball",
]
