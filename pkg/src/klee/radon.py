"""Spherical Radon transform of zonal functions and its inverse.

Two inversion routes are provided.  The spectral route divides Gegenbauer
coefficients by the Funk-Hecke multipliers of R.  The Fourier route extends
g to a function homogeneous of degree -1, evaluates the Fourier transform of
the extension on the sphere by the one-dimensional formulas for homogeneous
functions, and scales by pi / (2 pi)^n.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from numpy.polynomial import chebyshev as C
from numpy.polynomial.legendre import leggauss

from .core import (
    DEFAULT_DEGREE,
    DEFAULT_NODES,
    GegenbauerSeries,
    UnderResolvedWarning,
    _normalized_table,
    fit_gegenbauer,
    fit_gegenbauer_values,
    fit_nodes,
    omega,
    section_measure,
)

PARITY_TOL = 1e-12
INVERSE_TAIL_TOL = 1e-8
CHEB_POINTS = 129
CHEB_HALF_WIDTH = 0.5
TAYLOR_CUT = 0.05
TAYLOR_EXTRA = 8


class ConditioningError(ArithmeticError):
    pass


class DerivativeResolutionError(ArithmeticError):
    pass


def gegenbauer_index(n: int) -> float:
    if n < 3:
        raise ValueError("zonal transforms need n >= 3")
    return (n - 2) / 2


@dataclass(frozen=True)
class ZonalFunction:
    """Rotationally symmetric function phi -> f(phi) on S^{n-1} with a declared parity.

    Parity refers to f(pi - phi) = +/- f(phi).  ``of_cos`` may be given to
    evaluate directly in x = cos(phi).
    """

    f: Callable
    parity: str
    n: int
    of_cos: Callable | None = None
    check: bool = True

    def __post_init__(self):
        if self.parity not in ("even", "odd"):
            raise ValueError("parity must be 'even' or 'odd'")
        if self.n < 3:
            raise ValueError("n must be >= 3")
        if self.check:
            phi = np.linspace(0.0, math.pi / 2, 17)
            a = self(phi)
            b = self(math.pi - phi)
            sign = 1.0 if self.parity == "even" else -1.0
            scale = max(1.0, float(np.max(np.abs(a))))
            if np.max(np.abs(a - sign * b)) > PARITY_TOL * scale:
                raise ValueError(f"function is not {self.parity} about phi = pi/2")

    def __call__(self, phi):
        return np.asarray(self.f(np.asarray(phi, dtype=float)), dtype=float)

    def at_cos(self, x):
        x = np.clip(np.asarray(x, dtype=float), -1.0, 1.0)
        if self.of_cos is not None:
            return np.asarray(self.of_cos(x), dtype=float)
        return self(np.arccos(x))

    @classmethod
    def from_series(cls, series: GegenbauerSeries, n: int) -> "ZonalFunction":
        return cls(series, "even", n, of_cos=series.of_cos, check=False)


@dataclass(frozen=True)
class HomogeneousExtension:
    """|x|^(-n+p) base(x/|x|) on R^n minus the origin."""

    base: ZonalFunction
    p: int

    def __post_init__(self):
        if not 1 <= self.p <= self.base.n - 1:
            raise ValueError(f"p must lie in 1..n-1, got {self.p}")

    @property
    def n(self) -> int:
        return self.base.n

    @property
    def parity(self) -> str:
        return self.base.parity

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x, axis=-1)
        return r ** (-self.n + self.p) * self.base.at_cos(x[..., -1] / r)


@dataclass(frozen=True)
class TransformedZonal:
    phi: np.ndarray
    values: np.ndarray
    series: GegenbauerSeries | None
    method: str
    tail: float = 0.0

    def __call__(self, phi):
        if self.series is None:
            raise ValueError("no series representation attached")
        return self.series(phi)


# --------------------------------------------------------------------------
# forward transform


def _radon_values(g_of_cos, n: int, phi, m: int) -> np.ndarray:
    rule = section_measure(n, m)
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    x = np.sin(phi)[:, None] * rule.nodes[None, :]
    return omega(n - 2) * (g_of_cos(x) @ rule.weights)


def spherical_radon(f: ZonalFunction, phi=None, N: int = DEFAULT_DEGREE, m: int | None = None) -> TransformedZonal:
    """(Rf)(phi): integral of f over the great subsphere orthogonal to the direction at angle phi.

    Points of that subsphere have n-th coordinate s sin(phi), s in [-1, 1],
    weighted by (1 - s^2)^((n-4)/2).  Without ``phi`` the transform is sampled at
    the Gegenbauer fit nodes of degree N and a series is attached.
    """
    n = f.n
    m = m or max(DEFAULT_NODES, N + 2)
    on_nodes = phi is None
    if on_nodes:
        phi = fit_nodes(gegenbauer_index(n), N)
    vals = _radon_values(f.at_cos, n, phi, m)
    series = fit_gegenbauer_values(vals, gegenbauer_index(n), N) if on_nodes else None
    return TransformedZonal(np.atleast_1d(np.asarray(phi, dtype=float)), vals, series, "quadrature")


def radon_of_series(series: GegenbauerSeries, n: int) -> GegenbauerSeries:
    """Apply R termwise by the multipliers."""
    return series.scaled(radon_multipliers(n, series.N))


@lru_cache(maxsize=64)
def radon_multipliers(n: int, N: int, m: int | None = None) -> np.ndarray:
    """Eigenvalues of R on the even zonal Gegenbauer degrees 0, 2, ..., N, read off numerically."""
    if N % 2:
        raise ValueError("N must be even")
    lam = gegenbauer_index(n)
    m = m or max(DEFAULT_NODES, N + 2)
    candidates = (math.pi / 7, math.pi / 5, 0.3, math.pi / 3, 0.1, 0.02, 0.0)
    out = np.empty(N // 2 + 1)
    peak = _normalized_table(N, lam, np.array([1.0]))[:, 0].astype(float)
    for i, k in enumerate(range(0, N + 1, 2)):
        def basis(x, k=k):
            return _normalized_table(k, lam, x)[k].astype(float)

        for phi in candidates:
            b = float(basis(np.array([math.cos(phi)]))[0])
            if abs(b) >= 1e-3 * abs(peak[k]):
                out[i] = _radon_values(basis, n, phi, m)[0] / b
                break
        else:  # pragma: no cover - phi = 0 always qualifies
            raise ConditioningError(f"no well-conditioned evaluation angle for degree {k}")
        if out[i] == 0:
            raise ConditioningError(f"multiplier of degree {k} vanished")
    out.setflags(write=False)
    return out


# --------------------------------------------------------------------------
# spectral inverse


def radon_inverse_spectral(g: ZonalFunction, N: int = DEFAULT_DEGREE, adaptive: bool = False) -> TransformedZonal:
    """R^{-1} g by division of Gegenbauer coefficients; values at the fit nodes."""
    if g.parity != "even":
        raise ValueError("R is invertible only on even functions")
    lam = gegenbauer_index(g.n)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UnderResolvedWarning)
        fitted = fit_gegenbauer(g, lam, N, adaptive=adaptive)
    inv = fitted.scaled(1.0 / radon_multipliers(g.n, fitted.N))
    if inv.tail > INVERSE_TAIL_TOL:
        warnings.warn(
            f"inverse Radon series under-resolved at N={fitted.N}: tail {inv.tail:.2e}",
            UnderResolvedWarning,
            stacklevel=2,
        )
    phi = fit_nodes(lam, fitted.N)
    return TransformedZonal(phi, inv(phi), inv, "spectral", inv.tail)


# --------------------------------------------------------------------------
# Fourier route


def g_section_integral(g: HomogeneousExtension, phi: float, z, m: int = DEFAULT_NODES) -> np.ndarray:
    """G_u(z) = (1 - z^2)^((n-3)/2) times the integral of g over the (n-2)-sphere at height z along u."""
    n = g.n
    z = np.atleast_1d(np.asarray(z, dtype=float))
    rule = section_measure(n, m)
    q = np.sqrt(np.clip(1 - z * z, 0.0, None))
    x = (z * math.cos(phi))[:, None] + (q * math.sin(phi))[:, None] * rule.nodes[None, :]
    inner = g.base.at_cos(x) @ rule.weights
    return (1 - z * z) ** ((n - 3) / 2) * omega(n - 2) * inner


def _taylor_at_zero(g: HomogeneousExtension, phi: float, order: int, m: int) -> np.ndarray:
    """Derivatives G^(0..order)(0) from a Chebyshev interpolant on [-1/2, 1/2]."""
    interp = C.Chebyshev.interpolate(
        lambda z: g_section_integral(g, phi, z, m), CHEB_POINTS - 1, domain=[-CHEB_HALF_WIDTH, CHEB_HALF_WIDTH]
    )
    coef = interp.coef
    scale = float(np.max(np.abs(coef))) or 1.0
    if np.max(np.abs(coef[-8:])) > 1e-12 * scale:
        raise DerivativeResolutionError("Chebyshev coefficients of G_u have not decayed")
    # chop at the rounding plateau: noise coefficients blow up under differentiation
    floor = max(2e-15 * scale, 10.0 * float(np.max(np.abs(coef[-16:]))))
    keep = np.nonzero(np.abs(coef) > floor)[0]
    interp = C.Chebyshev(coef[: (keep[-1] + 1 if len(keep) else 1)], domain=interp.domain)
    return np.array([interp.deriv(k)(0.0) if k else interp(0.0) for k in range(order + 1)])


def _remainder_half_integral(G, derivs: np.ndarray, p: int, sign: float) -> float:
    """Integral over (0, 1] of y^(-p) (H(y) - Taylor_{p-1} H(y)) with H(y) = G(sign*y)."""
    hd = np.array([d * sign**k for k, d in enumerate(derivs)])
    fact = np.array([math.factorial(k) for k in range(len(hd))], dtype=float)

    def remainder(y):
        y = np.asarray(y, dtype=float)
        taylor = sum(hd[k] * y**k / fact[k] for k in range(p))
        return (G(sign * y) - taylor) / y**p

    # [0, cut]: Taylor-remainder series of the integrand
    extra = len(hd) - p
    inner = sum(hd[p + j] * TAYLOR_CUT ** (j + 1) / (fact[p + j] * (j + 1)) for j in range(extra))
    # [cut, 1/2]: direct Gauss-Legendre
    xg, wg = leggauss(48)
    a, b = TAYLOR_CUT, 0.5
    y = 0.5 * (b - a) * xg + 0.5 * (b + a)
    middle = 0.5 * (b - a) * float(remainder(y) @ wg)
    # [1/2, 1]: y = cos(theta) removes the sqrt(1 - y^2) endpoint behaviour
    xt, wt = leggauss(64)
    th = 0.5 * (math.pi / 3) * (xt + 1)
    outer = 0.5 * (math.pi / 3) * float((remainder(np.cos(th)) * np.sin(th)) @ wt)
    return inner + middle + outer


def fourier_homogeneous(g: HomogeneousExtension, phi: float, m: int = DEFAULT_NODES) -> float:
    """Fourier transform of the homogeneous extension at the unit vector at angle phi.

    Returns the (real) value for even g and the imaginary part for odd g.
    """
    p = g.p
    even = g.parity == "even"
    regular = (p % 2 == 1) if even else (p % 2 == 0)
    order = p - 1 if regular else p + TAYLOR_EXTRA
    d = _taylor_at_zero(g, phi, order, m)
    if regular:
        sign = (-1) ** ((p - 1) // 2) if even else (-1) ** (p // 2)
        return float(sign * math.pi * d[p - 1])

    def G(z):
        return g_section_integral(g, phi, z, m)

    right = _remainder_half_integral(G, d, p, 1.0)
    left = _remainder_half_integral(G, d, p, -1.0)
    if even:
        integral = right + left
        ks = range(0, p - 1, 2)
        sign = (-1) ** (p // 2)
    else:
        integral = right - left
        ks = range(1, p - 1, 2)
        sign = (-1) ** ((p + 1) // 2)
    correction = 2 * sum(d[k] / (math.factorial(k) * (1 + k - p)) for k in ks)
    return float(sign * math.factorial(p - 1) * (integral + correction))


def radon_inverse_fourier(g: ZonalFunction, N: int = DEFAULT_DEGREE, phi=None, m: int = DEFAULT_NODES) -> TransformedZonal:
    """R^{-1} g = pi / (2 pi)^n times the Fourier transform of the degree -1 extension of g."""
    if g.parity != "even":
        raise ValueError("R is invertible only on even functions")
    n = g.n
    on_nodes = phi is None
    if on_nodes:
        phi = fit_nodes(gegenbauer_index(n), N)
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    ext = HomogeneousExtension(g, n - 1)
    scale = math.pi / (2 * math.pi) ** n
    vals = np.empty_like(phi)
    done: dict[float, float] = {}
    for i, ph in enumerate(phi):
        # even g has an even transform, so pi - phi reuses phi
        key = round(min(ph, math.pi - ph), 14)
        if key not in done:
            done[key] = scale * fourier_homogeneous(ext, key, m)
        vals[i] = done[key]
    series = fit_gegenbauer_values(vals, gegenbauer_index(n), N) if on_nodes else None
    return TransformedZonal(phi, vals, series, "fourier", series.tail if series is not None else 0.0)
