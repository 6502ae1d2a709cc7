"""Radial profiles, ball constants, Jacobi-weight quadrature and even zonal series.

Zonal functions on S^{n-1} are handled as functions of the polar angle phi
measured from the positive x_n axis, or equivalently of x = cos(phi).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Callable

import numpy as np
from scipy.special import gammaln, roots_jacobi

ArrayFn = Callable[[np.ndarray], np.ndarray]

DEFAULT_NODES = 128
DEFAULT_DEGREE = 64
MAX_DEGREE = 512
TAIL_TOL = 1e-10


class UnderResolvedWarning(UserWarning):
    """A spectral fit whose trailing coefficient has not decayed."""


def unit_ball_constants(n: int) -> tuple[float, float]:
    """Volume kappa_n and surface area omega_n = n*kappa_n of the unit ball in R^n."""
    if int(n) != n or n < 1:
        raise ValueError(f"dimension must be a positive integer, got {n!r}")
    kappa = math.pi ** (n / 2) / math.gamma(n / 2 + 1)
    return kappa, n * kappa


def kappa(n: int) -> float:
    return unit_ball_constants(n)[0]


def omega(n: int) -> float:
    return unit_ball_constants(n)[1]


# --------------------------------------------------------------------------
# quadrature


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss rule for the weight (1 - s^2)^alpha on [-1, 1]."""

    nodes: np.ndarray
    weights: np.ndarray
    jacobi_exponent: float

    def integrate(self, values: np.ndarray) -> np.ndarray:
        """Integrate sampled values against the weight; the last axis runs over nodes."""
        return np.asarray(values) @ self.weights

    @property
    def degree(self) -> int:
        return 2 * len(self.nodes) - 1


@lru_cache(maxsize=64)
def gauss_jacobi_rule(m: int, alpha: float) -> QuadratureRule:
    """m-point Gauss-Jacobi rule for (1 - s^2)^alpha, exact for degree <= 2m - 1.

    The singular weight at alpha < 0 (alpha = -1/2 when n = 3) is absorbed
    in the weights; no node sits on an endpoint.
    """
    if m < 1:
        raise ValueError("node count must be >= 1")
    if alpha <= -1:
        raise ValueError(f"Jacobi exponent must exceed -1, got {alpha}")
    m = int(m)
    alpha = float(alpha)
    if alpha == -0.5:
        # Gauss-Chebyshev, closed form
        x = np.cos((2 * np.arange(m, 0, -1) - 1) * np.pi / (2 * m))
        w = np.full(m, np.pi / m)
    else:
        x, w = roots_jacobi(m, alpha, alpha)
        x = np.asarray(x, dtype=float)
        if alpha > -0.5:
            # Christoffel weights from orthonormal Gegenbauer values; the
            # weights returned by roots_jacobi carry ~1e-13 relative error
            tab = _normalized_table(m - 1, alpha + 0.5, x)
            w = 1.0 / np.sum(tab**2, axis=0)
        w = np.asarray(w, dtype=float)
    # symmetrize so even integrands integrate to exactly even results
    x = 0.5 * (x - x[::-1])
    w = 0.5 * (w + w[::-1])
    if np.any(w <= 0):
        raise ArithmeticError("non-positive quadrature weight")
    x.setflags(write=False)
    w.setflags(write=False)
    return QuadratureRule(x, w, float(alpha))


def jacobi_moment(j: int, alpha: float) -> float:
    """Exact value of the integral of s^j (1 - s^2)^alpha over [-1, 1]."""
    if j % 2:
        return 0.0
    return math.exp(
        math.lgamma((j + 1) / 2) + math.lgamma(alpha + 1) - math.lgamma(j / 2 + alpha + 1.5)
    )


def section_measure(n: int, m: int = DEFAULT_NODES) -> QuadratureRule:
    """Rule for d mu(s) = (1 - s^2)^((n-4)/2) ds on [-1, 1]."""
    return gauss_jacobi_rule(m, (n - 4) / 2)


# --------------------------------------------------------------------------
# Gegenbauer polynomials


def gegenbauer_norm_sq(k: np.ndarray | int, lam: float) -> np.ndarray:
    """Squared norm of C_k^lam under the weight (1 - x^2)^(lam - 1/2)."""
    k = np.asarray(k, dtype=float)
    if lam == 0:
        # Chebyshev limit is not used by the zonal machinery (n >= 3)
        raise ValueError("Gegenbauer index must be positive")
    log_h = (
        math.log(math.pi)
        + (1 - 2 * lam) * math.log(2)
        + gammaln(k + 2 * lam)
        - gammaln(k + 1)
        - np.log(k + lam)
        - 2 * gammaln(lam)
    )
    return np.exp(log_h)


def gegenbauer_table(kmax: int, lam: float, x: np.ndarray) -> np.ndarray:
    """Rows C_0^lam(x), ..., C_kmax^lam(x) by the three-term recurrence."""
    x = np.asarray(x, dtype=np.longdouble)
    out = np.empty((kmax + 1,) + x.shape, dtype=np.longdouble)
    out[0] = 1.0
    if kmax >= 1:
        out[1] = 2 * lam * x
    for k in range(1, kmax):
        out[k + 1] = (2 * (k + lam) * x * out[k] - (k + 2 * lam - 1) * out[k - 1]) / (k + 1)
    return out


@lru_cache(maxsize=64)
def _norm_sq_long(kmax: int, lam: float) -> np.ndarray:
    # exact ratio recurrence h_{k+1}/h_k keeps the extended precision of the table
    h = np.empty(kmax + 1, dtype=np.longdouble)
    h[0] = gegenbauer_norm_sq(0, lam)
    lam_l = np.longdouble(lam)
    for k in range(kmax):
        h[k + 1] = h[k] * (k + 2 * lam_l) * (k + lam_l) / ((k + 1) * (k + 1 + lam_l))
    h.setflags(write=False)
    return h


def _normalized_table(kmax: int, lam: float, x: np.ndarray, order: int = 0) -> np.ndarray:
    """Orthonormal Gegenbauer rows (or their x-derivatives of the given order)."""
    inv_norm = 1.0 / np.sqrt(_norm_sq_long(kmax, lam))
    x = np.asarray(x, dtype=float)
    if order == 0:
        tab = gegenbauer_table(kmax, lam, x)
    else:
        # d^r/dx^r C_k^lam = 2^r (lam)_r C_{k-r}^{lam+r}
        tab = np.zeros((kmax + 1,) + x.shape, dtype=np.longdouble)
        if kmax >= order:
            shifted = gegenbauer_table(kmax - order, lam + order, x)
            poch = math.prod(lam + i for i in range(order))
            tab[order:] = (2.0**order) * poch * shifted
    return tab * inv_norm.reshape((-1,) + (1,) * x.ndim)


@lru_cache(maxsize=32)
def _fit_rule(lam: float, N: int) -> QuadratureRule:
    rule = gauss_jacobi_rule(N + 1, lam - 0.5)
    # guard the normalization convention against the quadrature itself
    tab = _normalized_table(N, lam, rule.nodes)
    gram_diag = (tab**2) @ rule.weights
    if not np.allclose(gram_diag, 1.0, rtol=1e-9, atol=0):
        raise ArithmeticError("Gegenbauer normalization disagrees with quadrature")
    return rule


def fit_nodes(lam: float, N: int) -> np.ndarray:
    """Angles phi_j = arccos(x_j) of the Gauss-Gegenbauer nodes used by a degree-N fit."""
    return np.arccos(_fit_rule(float(lam), int(N)).nodes)


@dataclass(frozen=True)
class GegenbauerSeries:
    """Even zonal function sum_k c_k Chat_k^lam(cos phi) over even k <= N.

    ``coeffs[i]`` multiplies the orthonormal polynomial of degree 2*i.
    """

    lam: float
    coeffs: np.ndarray
    reconstruction_error: float = 0.0

    @property
    def N(self) -> int:
        return 2 * (len(self.coeffs) - 1)

    @property
    def tail(self) -> float:
        """Magnitude of the last coefficient relative to the largest one."""
        lead = float(np.max(np.abs(self.coeffs))) or 1.0
        return float(abs(self.coeffs[-1]) / lead)

    def full_coeffs(self) -> np.ndarray:
        c = np.zeros(self.N + 1)
        c[::2] = self.coeffs
        return c

    def of_cos_exact(self, x, order: int = 0) -> np.ndarray:
        """Direct extended-precision summation; slow, used to build the Chebyshev form."""
        x = np.asarray(x, dtype=float)
        tab = _normalized_table(self.N, self.lam, x, order)[::2]
        return np.tensordot(self.coeffs.astype(np.longdouble), tab, axes=1).astype(float)

    @cached_property
    def _barycentric(self) -> tuple:
        # values of the polynomial and its derivatives at Chebyshev points of the
        # second kind; the barycentric formula on these points is forward stable
        M = max(self.N, 1)
        j = np.arange(M + 1)
        xj = np.cos(np.pi * j / M)
        wj = (-1.0) ** j
        wj[0] *= 0.5
        wj[-1] *= 0.5
        vals = tuple(self.of_cos_exact(xj, r) for r in range(3))
        return xj, wj, vals

    def of_cos(self, x, order: int = 0) -> np.ndarray:
        """Value (or x-derivative of the given order) at x = cos(phi)."""
        x = np.asarray(x, dtype=float)
        if order > 2:
            return self.of_cos_exact(x, order)
        xj, wj, vals = self._barycentric
        flat = np.clip(x.ravel(), -1.0, 1.0)
        diff = flat[:, None] - xj[None, :]
        hit = diff == 0
        diff[hit] = 1.0
        c = wj / diff
        out = (c @ vals[order]) / c.sum(axis=1)
        rows = np.nonzero(hit.any(axis=1))[0]
        if len(rows):
            out[rows] = vals[order][np.argmax(hit[rows], axis=1)]
        return out.reshape(x.shape)

    def __call__(self, phi) -> np.ndarray:
        return eval_series(self, phi)

    def scaled(self, factors: np.ndarray) -> "GegenbauerSeries":
        return GegenbauerSeries(self.lam, self.coeffs * factors)


def eval_series(series: GegenbauerSeries, phi) -> np.ndarray:
    return series.of_cos(np.cos(phi))


def spectral_derivatives(series: GegenbauerSeries, phi):
    """Return (f, df/dphi, d2f/dphi2) by termwise differentiation."""
    phi = np.asarray(phi, dtype=float)
    x, sn = np.cos(phi), np.sin(phi)
    f0 = series.of_cos(x)
    f1 = series.of_cos(x, 1)
    f2 = series.of_cos(x, 2)
    return f0, -sn * f1, sn**2 * f2 - x * f1


def _project(values: np.ndarray, lam: float, N: int) -> GegenbauerSeries:
    rule = _fit_rule(lam, N)
    tab = _normalized_table(N, lam, rule.nodes)[::2]
    coeffs = (tab @ (rule.weights * values).astype(np.longdouble)).astype(float)
    series = GegenbauerSeries(lam, coeffs)
    err = float(np.max(np.abs(series.of_cos(rule.nodes) - values)))
    return GegenbauerSeries(lam, coeffs, err)


def fit_gegenbauer(
    f: Callable[[np.ndarray], np.ndarray],
    lam: float,
    N: int = DEFAULT_DEGREE,
    adaptive: bool = True,
    tol: float = TAIL_TOL,
) -> GegenbauerSeries:
    """Project an even zonal function f(phi) onto even Gegenbauer degrees <= N.

    With ``adaptive`` the degree doubles (up to 512) while the last
    coefficient exceeds ``tol`` times the leading one.  A fit that stays
    under-resolved emits :class:`UnderResolvedWarning`.
    """
    if N % 2 or N < 0:
        raise ValueError(f"truncation degree must be even and >= 0, got {N}")
    lam = float(lam)
    while True:
        phi = fit_nodes(lam, N)
        values = np.asarray(f(phi), dtype=float)
        series = _project(values, lam, N)
        if series.tail <= tol or not adaptive or 2 * N > MAX_DEGREE or N == 0:
            break
        N *= 2
    if N > 0 and series.tail > tol:
        warnings.warn(
            f"Gegenbauer fit under-resolved at N={N}: tail {series.tail:.2e}",
            UnderResolvedWarning,
            stacklevel=2,
        )
    return series


def fit_gegenbauer_values(values: np.ndarray, lam: float, N: int) -> GegenbauerSeries:
    """Fit from values already sampled at :func:`fit_nodes`."""
    return _project(np.asarray(values, dtype=float), float(lam), int(N))


# --------------------------------------------------------------------------
# profiles and bodies


@dataclass(frozen=True)
class RadialProfile:
    """phi -> rho(phi) on [0, pi], stored as a function of x = cos(phi).

    ``h, dh, d2h`` give rho and its first two derivatives in x; the
    phi-derivatives follow by the chain rule, which makes rho'(0) = rho'(pi) = 0
    automatic.
    """

    h: ArrayFn
    dh: ArrayFn
    d2h: ArrayFn
    kind: str = "closed-form"
    label: str = ""
    params: dict = field(default_factory=dict)
    series: GegenbauerSeries | None = None

    def __call__(self, phi) -> np.ndarray:
        return self.h(np.cos(phi))

    def eval(self, phi) -> np.ndarray:
        return self(phi)

    def deriv1(self, phi) -> np.ndarray:
        phi = np.asarray(phi, dtype=float)
        return -np.sin(phi) * self.dh(np.cos(phi))

    def deriv2(self, phi) -> np.ndarray:
        phi = np.asarray(phi, dtype=float)
        x = np.cos(phi)
        return np.sin(phi) ** 2 * self.d2h(x) - x * self.dh(x)

    def max_value(self, samples: int = 4097) -> float:
        return float(np.max(self.h(np.linspace(-1.0, 1.0, samples))))

    def min_value(self, samples: int = 4097) -> float:
        return float(np.min(self.h(np.linspace(-1.0, 1.0, samples))))

    def is_even(self) -> bool:
        """True when rho(phi) = rho(pi - phi), i.e. the body is origin symmetric."""
        return self.kind == "series-backed" or bool(self.params.get("origin_symmetric"))


def constant_profile(value: float = 1.0, label: str = "ball") -> RadialProfile:
    return RadialProfile(
        h=lambda x: np.full_like(np.asarray(x, dtype=float), value),
        dh=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        d2h=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        label=label,
        params={"origin_symmetric": True, "value": value},
    )


def series_profile(series: GegenbauerSeries, power: float = 1.0, label: str = "") -> RadialProfile:
    """Profile rho = S(x)^power for a Gegenbauer series S; derivatives are spectral."""

    def h(x):
        return series.of_cos(x) ** power

    def dh(x):
        s = series.of_cos(x)
        return power * s ** (power - 1) * series.of_cos(x, 1)

    def d2h(x):
        s = series.of_cos(x)
        s1 = series.of_cos(x, 1)
        s2 = series.of_cos(x, 2)
        return power * (power - 1) * s ** (power - 2) * s1**2 + power * s ** (power - 1) * s2

    return RadialProfile(h, dh, d2h, kind="series-backed", label=label, series=series,
                         params={"power": power, "origin_symmetric": True})


@dataclass(frozen=True)
class BodyOfRevolution:
    """Body of revolution about the x_n axis given by its radial profile."""

    n: int
    profile: RadialProfile

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"dimension must be an integer >= 2, got {self.n!r}")
        if not self.profile.min_value() > 0:
            raise ValueError("origin must be interior: radial function must be positive")

    @cached_property
    def rho_max(self) -> float:
        return self.profile.max_value()

    @cached_property
    def rho_min(self) -> float:
        return self.profile.min_value()

    def support(self, phi: float, samples: int = 8192) -> float:
        """Support function h(u) for u at angle phi from the axis (planar-curve maximum)."""
        psi = np.linspace(-np.pi, np.pi, samples, endpoint=False)
        vals = self.profile(np.abs(psi)) * np.cos(psi - phi)
        j = int(np.argmax(vals))
        # parabolic refinement around the discrete maximum
        y0, y1, y2 = vals[j - 1], vals[j], vals[(j + 1) % samples]
        denom = y0 - 2 * y1 + y2
        if denom < 0:
            return float(y1 - 0.125 * (y2 - y0) ** 2 / denom)
        return float(y1)

    def contains(self, points: np.ndarray) -> np.ndarray:
        """Membership |x| <= rho(angle of x) for an array of shape (..., n)."""
        pts = np.asarray(points, dtype=float)
        r = np.linalg.norm(pts, axis=-1)
        with np.errstate(invalid="ignore", divide="ignore"):
            w = np.where(r > 0, pts[..., -1] / np.where(r > 0, r, 1.0), 1.0)
        return r <= self.profile.h(np.clip(w, -1.0, 1.0))


def unit_ball(n: int) -> BodyOfRevolution:
    return BodyOfRevolution(n, constant_profile(1.0))
