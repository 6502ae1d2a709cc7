"""Build the pair K, L and certify that they share the inner section function.

K is the perturbed ball with radial function (1 + eps cos^3 phi)^(-1/3).  L is
the origin-symmetric body of revolution whose (n-1)-th power radial function
is (n-1) R^{-1} m_K.  ``verify_counterexample`` checks everything that can be
checked numerically and collects the outcome in a ``VerificationReport``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.spatial import cKDTree

from .core import (
    DEFAULT_DEGREE,
    DEFAULT_NODES,
    BodyOfRevolution,
    GegenbauerSeries,
    RadialProfile,
    UnderResolvedWarning,
    fit_gegenbauer_values,
    fit_nodes,
    kappa,
    series_profile,
)
from .radon import (
    ConditioningError,
    ZonalFunction,
    _radon_values,
    gegenbauer_index,
    radon_inverse_spectral,
)
from .sections import (
    inner_section_function,
    inner_section_values,
    klee_eps,
    klee_profile,
    maximizer_diagnostics,
    perturbation_diagnostics,
    section_area_mc_oracle,
    parallel_section_area,
)

SCHEMA_VERSION = 1
CURVATURE_SAMPLES = 4097
DEFECT_START = 1024
DEFECT_MAX = 65536
DEFECT_FLOOR_FACTOR = 10.0
CHECK_ANGLES = 17
CONCAVITY_ANGLES = (0.15, 0.6, 1.1, math.pi / 2)
CONCAVITY_SAMPLES = 41
MC_Z_LIMIT = 5.0


class PositivityError(ValueError):
    """(n-1) R^{-1} m_K is not positive, so no star body L exists at this resolution."""


# --------------------------------------------------------------------------
# bodies


def build_K(eps: float, n: int, allow_zero: bool = False) -> BodyOfRevolution:
    """K_eps; eps = 0 (the unit ball) only when ``allow_zero`` is set."""
    if int(n) != n or n < 3:
        raise ValueError(f"n must be an integer >= 3, got {n!r}")
    return BodyOfRevolution(int(n), klee_profile(eps, allow_zero=allow_zero))


@dataclass(frozen=True)
class LConstruction:
    """L together with the data it was built from."""

    body: BodyOfRevolution
    phi: np.ndarray
    m_K: np.ndarray
    t_star: np.ndarray
    stationarity: np.ndarray
    m_K_series: GegenbauerSeries
    inverse: GegenbauerSeries
    notes: tuple[str, ...] = ()


def construct_L(K: BodyOfRevolution, N: int = DEFAULT_DEGREE, m: int = DEFAULT_NODES) -> LConstruction:
    """Origin-symmetric L with m_L = m_K for an arbitrary body of revolution K.

    m_K is sampled at the Gauss-Gegenbauer nodes of degree N, so the fit
    needs no interpolation.  The inverse transform is spectral at the fixed
    degree N; a slowly decaying tail is recorded as a note rather than
    triggering refinement.
    """
    if N % 2 or N < 2:
        raise ValueError(f"N must be a positive even integer, got {N!r}")
    n = K.n
    lam = gegenbauer_index(n)
    phi = fit_nodes(lam, N)
    m_K, t_star, resid = inner_section_values(K, phi, m)
    mk_series = fit_gegenbauer_values(m_K, lam, N)
    g = ZonalFunction.from_series(mk_series.scaled(np.full(N // 2 + 1, float(n - 1))), n)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", UnderResolvedWarning)
        inv = radon_inverse_spectral(g, N)
    notes = tuple(str(w.message) for w in caught if issubclass(w.category, UnderResolvedWarning))
    if not np.all(np.isfinite(inv.values)):
        raise ConditioningError("inverse transform produced non-finite values")
    if np.min(inv.values) <= 0:
        j = int(np.argmin(inv.values))
        raise PositivityError(
            f"(n-1) R^-1 m_K = {inv.values[j]:.3e} <= 0 at phi = {inv.phi[j]:.6f}; eps too large for a star body L"
        )
    dense = inv.series.of_cos(np.linspace(-1.0, 1.0, CURVATURE_SAMPLES))
    if np.min(dense) <= 0:
        raise PositivityError("(n-1) R^-1 m_K changes sign between grid points")
    profile = series_profile(inv.series, 1.0 / (n - 1), label="L")
    return LConstruction(BodyOfRevolution(n, profile), phi, m_K, t_star, resid, mk_series, inv.series, notes)


def build_L(eps: float, n: int, N: int = DEFAULT_DEGREE, m: int = DEFAULT_NODES) -> BodyOfRevolution:
    """The origin-symmetric partner of K_eps."""
    return construct_L(build_K(eps, n, allow_zero=True), N, m).body


def profile_body(n: int, h, dh, d2h, label: str, **params) -> BodyOfRevolution:
    """Body of revolution from a profile given in x = cos(phi)."""
    return BodyOfRevolution(n, RadialProfile(h, dh, d2h, label=label, params=params))


# --------------------------------------------------------------------------
# curvature


def curvature_profile(profile: RadialProfile):
    """Curvature of the planar curve r(phi) (sin phi, cos phi) as a function of phi."""

    def kappa_of(phi):
        phi = np.asarray(phi, dtype=float)
        r = profile(phi)
        r1 = profile.deriv1(phi)
        r2 = profile.deriv2(phi)
        return (2 * r1**2 - r * r2 + r**2) / (r1**2 + r**2) ** 1.5

    return kappa_of


def curvature_min(profile: RadialProfile, samples: int = CURVATURE_SAMPLES) -> float:
    phi = np.linspace(0.0, math.pi, samples)
    return float(np.min(curvature_profile(profile)(phi)))


def klee_curvature(eps: float, phi) -> np.ndarray:
    """Closed-form curvature of the profile curve of K_eps."""
    c = np.cos(np.asarray(phi, dtype=float))
    s2 = 1 - c * c
    q = 1 + eps * c**3
    num = (q + 2 * eps * s2 * c) * q ** (4 / 3)
    return num / (q * q + eps * eps * c**4 * s2) ** 1.5


def _numerator_min(eps: float) -> float:
    """min over c in [-1, 1] of 1 + 2 eps c - eps c^3."""
    c = np.linspace(-1.0, 1.0, 2001)
    vals = 1 + 2 * eps * c - eps * c**3
    j = int(np.argmin(vals))
    lo, hi = c[max(j - 1, 0)], c[min(j + 1, len(c) - 1)]
    res = minimize_scalar(lambda x: 1 + 2 * eps * x - eps * x**3, bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-12})
    return float(min(vals[j], res.fun))


def critical_epsilon_K(tol: float = 1e-12) -> float:
    """Largest eps for which the profile curve of K_eps has positive curvature everywhere."""
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _numerator_min(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# --------------------------------------------------------------------------
# central symmetry


@dataclass(frozen=True)
class SymmetryDefect:
    """Hausdorff distance between the profile curve and its reflection through (0, center)."""

    value: float
    noise: float
    center: float
    samples: int

    def __float__(self) -> float:
        return self.value


def _profile_curve(profile: RadialProfile, samples: int) -> np.ndarray:
    psi = np.linspace(-math.pi, math.pi, samples, endpoint=False)
    r = profile(np.abs(psi))
    return np.column_stack([r * np.sin(psi), r * np.cos(psi)])


def _distance_to_closed_polyline(points: np.ndarray, poly: np.ndarray, tree: cKDTree) -> np.ndarray:
    _, j = tree.query(points)
    M = len(poly)
    best = np.full(len(points), np.inf)
    for a_idx, b_idx in ((j - 1) % M, j), (j, (j + 1) % M):
        a, b = poly[a_idx], poly[b_idx]
        ab = b - a
        w = np.clip(np.einsum("ij,ij->i", points - a, ab) / np.einsum("ij,ij->i", ab, ab), 0.0, 1.0)
        d = np.linalg.norm(points - a - w[:, None] * ab, axis=1)
        best = np.minimum(best, d)
    return best


def _hausdorff(curve: np.ndarray, reflected: np.ndarray) -> float:
    d1 = _distance_to_closed_polyline(curve, reflected, cKDTree(reflected))
    d2 = _distance_to_closed_polyline(reflected, curve, cKDTree(curve))
    return float(max(d1.max(), d2.max()))


def central_symmetry_defect(body: BodyOfRevolution, start: int = DEFECT_START, stable: float = 1e-10) -> SymmetryDefect:
    """Distance of the profile curve from its reflection through the only admissible center.

    A center of symmetry would lie on the axis, halfway between the two axial
    boundary points.  The grid is doubled until successive values agree to
    ``stable``; the noise estimate adds that change to the chord sagitta.
    """
    prof = body.profile
    center = 0.5 * float(prof(0.0) - prof(math.pi))
    kmax = max(abs(curvature_min(prof)), float(np.max(np.abs(curvature_profile(prof)(np.linspace(0, math.pi, 1025))))))
    prev = None
    M = start
    while True:
        curve = _profile_curve(prof, M)
        reflected = np.array([0.0, 2 * center]) - curve
        value = _hausdorff(curve, reflected)
        chord = float(np.max(np.linalg.norm(np.diff(curve, axis=0, append=curve[:1]), axis=1)))
        sagitta = kmax * chord**2 / 8
        if prev is not None and (abs(value - prev) < stable or M >= DEFECT_MAX):
            return SymmetryDefect(value, abs(value - prev) + sagitta, center, M)
        prev = value
        M *= 2


def origin_symmetry_defect(profile: RadialProfile, samples: int = CURVATURE_SAMPLES) -> float:
    phi = np.linspace(0.0, math.pi / 2, samples)
    return float(np.max(np.abs(profile(phi) - profile(math.pi - phi))))


# --------------------------------------------------------------------------
# verification


@dataclass
class Tolerances:
    m_mismatch: float
    route_agreement: float
    t_star_L: float = 1e-6
    origin_symmetry: float = 1e-9
    stationarity: float = 0.0
    fixed_point: float = 1e-8
    identity: float = 1e-8
    concavity: float = 1e-8
    defect_floor_factor: float = DEFECT_FLOOR_FACTOR
    mc_z: float = MC_Z_LIMIT
    ball: float = 1e-10

    @classmethod
    def for_dimension(cls, n: int, tol_m: float | None = None) -> "Tolerances":
        k = kappa(n - 1)
        return cls(
            m_mismatch=tol_m if tol_m is not None else 1e-6 * k,
            route_agreement=1e-7 * k,
            stationarity=1e-8 * k,
        )


@dataclass
class VerificationReport:
    n: int
    eps: float
    N: int
    m: int
    seed: int
    m_mismatch: float = math.nan
    route_agreement: float = math.nan
    t_star_L_max: float = math.nan
    curvature_min_K: float = math.nan
    curvature_min_L: float = math.nan
    curvature_pole_K: tuple[float, float] = (math.nan, math.nan)
    central_symmetry_defect_K: float = math.nan
    central_symmetry_defect_L: float = math.nan
    defect_noise_K: float = math.nan
    defect_floor: float = math.nan
    origin_symmetry_defect_L: float = math.nan
    inverse_tail: float = math.nan
    refinement_change: float | None = None
    diagnostics: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    failed_checks: list = field(default_factory=list)
    error: str | None = None

    @property
    def passed(self) -> bool:
        return not self.failed_checks and self.error is None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["curvature_pole_K"] = list(self.curvature_pole_K)
        d["passed"] = self.passed
        d["schema_version"] = SCHEMA_VERSION
        return d


def _check(report: VerificationReport, name: str, ok: bool):
    if not ok and name not in report.failed_checks:
        report.failed_checks.append(name)


def _check_angles(count: int = CHECK_ANGLES) -> np.ndarray:
    """Off-grid angles in [0, pi/2] (m_K and m_L are even about pi/2)."""
    return np.linspace(0.0, math.pi / 2, count)


def _route_i(L: LConstruction, n: int, phi, m: int) -> np.ndarray:
    """m_L = R(rho_L^(n-1)) / (n-1) by direct quadrature, valid since L is origin symmetric."""
    return _radon_values(L.inverse.of_cos, n, phi, max(m, L.inverse.N + 2)) / (n - 1)


def _concavity(body: BodyOfRevolution, m: int) -> float:
    worst = -math.inf
    for phi in CONCAVITY_ANGLES:
        curve = inner_section_function(body, phi, m, samples=CONCAVITY_SAMPLES)
        worst = max(worst, curve.concavity_defect())
    return worst


def _mismatch(K: BodyOfRevolution, L: LConstruction, n: int, m: int, check_phi: np.ndarray):
    mk_check, tk_check, res_check = inner_section_values(K, check_phi, m)
    phi_all = np.concatenate([L.phi, check_phi])
    mk_all = np.concatenate([L.m_K, mk_check])
    ml_all = _route_i(L, n, phi_all, m)
    return float(np.max(np.abs(mk_all - ml_all))), phi_all, mk_all, ml_all, tk_check, res_check


def verify_counterexample(
    eps: float,
    n: int,
    N: int = DEFAULT_DEGREE,
    m: int = DEFAULT_NODES,
    seed: int = 0,
    mc_samples: int = 0,
    tol_m: float | None = None,
    refine: bool = False,
) -> VerificationReport:
    """Build K_eps and L_eps and certify m_K = m_L, convexity and the symmetry claims.

    Certification failures are listed in ``failed_checks``; a numerical
    breakdown is stored in ``error`` with the fields computed so far.
    """
    tol = Tolerances.for_dimension(n, tol_m)
    report = VerificationReport(n=int(n), eps=float(eps), N=int(N), m=int(m), seed=int(seed))
    report.tolerances = asdict(tol)
    report.notes.append(
        "defect floor = 10 x grid noise of the Hausdorff estimate; no quantitative asymmetry bound is known"
    )
    try:
        _verify(report, tol, eps, n, N, m, seed, mc_samples, refine)
    except (ArithmeticError, ValueError) as exc:
        report.error = f"{type(exc).__name__}: {exc}"
        if isinstance(exc, PositivityError):
            _check(report, "positivity_L", False)
    return report


def _verify(report, tol, eps, n, N, m, seed, mc_samples, refine):
    K = build_K(eps, n, allow_zero=True)
    ball = klee_eps(K) == 0

    # convexity of K first: it is cheap and decides the eps = 0.95 case
    kK = curvature_profile(K.profile)
    report.curvature_min_K = curvature_min(K.profile)
    report.curvature_pole_K = (float(kK(0.0)), float(kK(math.pi)))
    _check(report, "curvature_K", report.curvature_min_K > 0)

    dK = central_symmetry_defect(K)
    report.central_symmetry_defect_K = dK.value
    report.defect_noise_K = dK.noise
    report.defect_floor = tol.defect_floor_factor * dK.noise
    if not ball:
        _check(report, "asymmetry_K", dK.value >= report.defect_floor)

    L = construct_L(K, N, m)
    report.notes.extend(L.notes)
    report.inverse_tail = L.inverse.tail
    prof_L = L.body.profile
    report.curvature_min_L = curvature_min(prof_L)
    _check(report, "curvature_L", report.curvature_min_L > 0)
    report.central_symmetry_defect_L = central_symmetry_defect(L.body).value
    report.origin_symmetry_defect_L = origin_symmetry_defect(prof_L)
    _check(report, "origin_symmetry_L", report.origin_symmetry_defect_L <= tol.origin_symmetry)

    check_phi = _check_angles()
    mismatch, phi_all, mk_all, ml_all, tk_check, res_check = _mismatch(K, L, n, m, check_phi)
    report.m_mismatch = mismatch
    _check(report, "m_mismatch", mismatch <= (tol.ball if ball else tol.m_mismatch))

    # route (ii): maximize the sections of L directly
    half = phi_all <= math.pi / 2 + 1e-15
    curves = [inner_section_function(L.body, float(p), m) for p in phi_all[half]]
    ml_ii = np.array([c.m for c in curves])
    report.route_agreement = float(np.max(np.abs(ml_ii - ml_all[half])))
    report.t_star_L_max = float(max(abs(c.t_star) for c in curves))
    _check(report, "route_agreement", report.route_agreement <= tol.route_agreement)
    _check(report, "t_star_L", report.t_star_L_max <= tol.t_star_L)

    diag: dict = {}
    stat = float(max(np.max(L.stationarity), np.max(res_check)))
    diag["stationarity_residual"] = stat
    _check(report, "stationarity", stat <= tol.stationarity)
    if ball:
        diag["ball_deviation_L"] = float(np.max(np.abs(prof_L(np.linspace(0, math.pi, 257)) - 1.0)))
        _check(report, "ball_L", diag["ball_deviation_L"] <= tol.ball)
    else:
        fp = 0.0
        T_max = 0.0
        for p, t in zip(L.phi, L.t_star):
            d = maximizer_diagnostics(eps, n, float(p), float(t), m)
            fp = max(fp, d.fixed_point_residual)
            T_max = max(T_max, abs(d.T_eps))
        diag["fixed_point_residual"] = fp
        diag["T_eps_max"] = T_max
        _check(report, "fixed_point", fp <= tol.fixed_point)
        pert = perturbation_diagnostics(eps, n, np.linspace(0.0, math.pi, 9), m)
        diag["radius_residual"] = pert.radius_residual
        diag["binomial_residual"] = pert.binomial_residual
        diag["identity_residual"] = pert.identity_residual
        _check(report, "identity", pert.identity_residual <= tol.identity)

    diag["concavity_K"] = _concavity(K, m)
    diag["concavity_L"] = _concavity(L.body, m)
    _check(report, "brunn_minkowski_K", diag["concavity_K"] <= tol.concavity)
    _check(report, "brunn_minkowski_L", diag["concavity_L"] <= tol.concavity)

    if mc_samples:
        rng = np.random.default_rng(seed)
        phi = float(rng.uniform(0.0, math.pi))
        t = float(rng.uniform(-0.5, 0.5))
        est, se = section_area_mc_oracle(K, phi, t, mc_samples, seed)
        exact = parallel_section_area(K, phi, t, m)
        diag["mc_phi"], diag["mc_t"] = phi, t
        diag["mc_z"] = float((est - exact) / se) if se > 0 else 0.0
        _check(report, "mc_oracle", abs(diag["mc_z"]) <= tol.mc_z)
    report.diagnostics = diag

    if refine:
        L2 = construct_L(K, 2 * N, 2 * m)
        mismatch2 = _mismatch(K, L2, n, 2 * m, check_phi)[0]
        report.refinement_change = abs(mismatch2 - mismatch)
        _check(report, "refinement", report.refinement_change <= tol.m_mismatch)


def profile_table(eps: float, n: int, N: int = DEFAULT_DEGREE, m: int = DEFAULT_NODES) -> dict:
    """Columns of the per-cell profile table at the spectral grid angles."""
    K = build_K(eps, n, allow_zero=True)
    L = construct_L(K, N, m)
    order = np.argsort(L.phi)
    phi = L.phi[order]
    return {
        "phi": phi,
        "rho_K": K.profile(phi),
        "rho_L": L.body.profile(phi),
        "m_K": L.m_K[order],
        "m_L": _route_i(L, n, phi, m),
        "t_star": L.t_star[order],
        "curvature_K": curvature_profile(K.profile)(phi),
        "curvature_L": curvature_profile(L.body.profile)(phi),
    }


__all__ = [
    "LConstruction",
    "PositivityError",
    "SCHEMA_VERSION",
    "SymmetryDefect",
    "Tolerances",
    "VerificationReport",
    "build_K",
    "build_L",
    "central_symmetry_defect",
    "construct_L",
    "critical_epsilon_K",
    "curvature_min",
    "curvature_profile",
    "klee_curvature",
    "origin_symmetry_defect",
    "profile_body",
    "profile_table",
    "verify_counterexample",
]
