"""Reflection at graded permittivity profiles.

The cumulative p-polarised reflection coefficient R(z) of a profile obeys a
Riccati equation, integrated from ``R(z_start) = 0`` on the solvent side
towards the cavity.  In the non-retarded limit::

    R' = -2 k R - (eps'/2 eps) (1 - R**2)

Its k-dependence is summarised by a geometric factor f(ka) = R / R_fresnel,
approximated by ``f = (1 - tanh((ln(ka) - lambda1) / lambda2)) / 2``.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import least_squares

from .profiles import ProfileKind, ProfileSpec, profile_breakpoints, profile_slope, profile_value

log = logging.getLogger(__name__)

# Solvent permittivity relative to the cavity used when tabulating f(ka).
FIT_EPS_INNER = 1.0
FIT_EPS_OUTER = 3.0
FIT_GRID = (1e-3, 1e3, 200)


class RiccatiError(RuntimeError):
    pass


class SurrogateFitError(RuntimeError):
    pass


def default_window(spec: ProfileSpec) -> tuple[float, float]:
    """Integration interval covering the whole profile.

    The Thomas-Fermi profile is within 1e-6 of its limits at +-8a.
    """
    if spec.kind is ProfileKind.LINEAR:
        return -spec.a, spec.a
    if spec.kind is ProfileKind.THOMAS_FERMI:
        return -8.0 * spec.a, 8.0 * spec.a
    return 0.0, 0.0


def fit_window(spec: ProfileSpec) -> tuple[float, float]:
    """Interval used when tabulating f(ka) for the surrogate fit.

    The Thomas-Fermi tail is cut at +3a, where R has reached its limit to
    better than 1 %.  Reading R off further out shifts the reference plane
    and moves lambda1 substantially.
    """
    if spec.kind is ProfileKind.THOMAS_FERMI:
        return -8.0 * spec.a, 3.0 * spec.a
    return default_window(spec)


@dataclass(frozen=True)
class RiccatiProblem:
    profile: ProfileSpec
    k_par: float
    kappa: float = 0.0
    z_start: float | None = None
    z_end: float | None = None
    rel_tol: float = 1e-9
    abs_tol: float = 1e-12

    def __post_init__(self):
        z0, z1 = default_window(self.profile)
        if self.z_start is None:
            object.__setattr__(self, "z_start", z0)
        if self.z_end is None:
            object.__setattr__(self, "z_end", z1)
        if self.z_start > self.z_end:
            raise ValueError("z_start must not exceed z_end")
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.k_par < 0 or self.kappa < 0:
            raise ValueError("wavenumbers must be non-negative")


def _length_scale(p: RiccatiProblem) -> float:
    if p.profile.kind is not ProfileKind.HARD:
        return p.profile.a
    span = p.z_end - p.z_start
    return span if span > 0 else 1.0


def _jump(R: float, eps_minus: float, eps_plus: float, k: float, kappa: float) -> float:
    """Exact change of R across a permittivity step (integrated source term)."""
    if kappa == 0.0:
        delta = -0.5 * math.log(eps_plus / eps_minus)
    else:
        k2, q2 = k * k, kappa * kappa
        delta = -0.25 * (2.0 * math.log(eps_plus / eps_minus)
                         - math.log((k2 + q2 * eps_plus) / (k2 + q2 * eps_minus)))
    return math.tanh(math.atanh(R) + delta)


def _integrate(p: RiccatiProblem, rhs) -> float:
    """Piecewise integration between profile kinks, in units of the profile width."""
    L = _length_scale(p)
    z0, z1 = p.z_start, p.z_end
    cuts = [z for z in profile_breakpoints(p.profile) if z0 < z < z1]
    nodes = [z0, *cuts, z1]
    R = 0.0
    # the hard step sits at z = 0 and counts as passed once z >= 0
    step_pending = p.profile.kind is ProfileKind.HARD and z0 <= 0.0 <= z1
    for a, b in zip(nodes[:-1], nodes[1:]):
        if step_pending and a >= 0.0:
            R = _jump(R, p.profile.eps_outer, p.profile.eps_inner, p.k_par, p.kappa)
            step_pending = False
        if b <= a:
            continue
        sol = solve_ivp(lambda t, y: L * rhs(t * L, y[0]), (a / L, b / L), [R],
                        method="DOP853", rtol=p.rel_tol, atol=p.abs_tol)
        if sol.status != 0:
            raise RiccatiError(f"Riccati integration failed: {sol.message}")
        if np.max(np.abs(sol.y[0])) > 1.0 + 1e-6:
            raise RiccatiError("|R| exceeded 1 during integration")
        R = float(sol.y[0, -1])
    if step_pending:
        R = _jump(R, p.profile.eps_outer, p.profile.eps_inner, p.k_par, p.kappa)
    return R


def solve_riccati_nonretarded(problem: RiccatiProblem) -> float:
    """Right-sided reflection coefficient R(z_end) in the non-retarded limit."""
    spec, k = problem.profile, problem.k_par

    def rhs(z, R):
        return -2.0 * k * R - 0.5 * profile_slope(spec, z) / profile_value(spec, z) * (1.0 - R * R)

    return _integrate(problem, rhs)


def solve_riccati_retarded(problem: RiccatiProblem) -> float:
    """Full p-polarised equation with free-space wavenumber ``kappa = xi/c``.

    The propagation term is written as sqrt(k^2 + kappa^2 eps), which equals
    kappa*sqrt(eps + (k/kappa)^2) and stays real for every positive eps.
    """
    spec, k, q = problem.profile, problem.k_par, problem.kappa
    k2, q2 = k * k, q * q

    def rhs(z, R):
        eps = profile_value(spec, z)
        decay = math.sqrt(k2 + q2 * eps)
        weight = (2.0 * k2 + q2 * eps) / (k2 + q2 * eps) if (k2 + q2 * eps) > 0 else 2.0
        return -2.0 * decay * R - 0.25 * profile_slope(spec, z) / eps * weight * (1.0 - R * R)

    return _integrate(problem, rhs)


def analytic_k0(profile: ProfileSpec, z, z_start: float = -math.inf):
    """Closed-form R(z) for k = 0; the default start is deep in the solvent."""
    eps_start = profile.eps_outer if math.isinf(z_start) else profile_value(profile, z_start)
    R = np.tanh(-0.5 * (np.log(profile_value(profile, z)) - math.log(eps_start)))
    return float(R) if np.ndim(R) == 0 else R


def left_reflection(r_plus):
    return -r_plus


# -- tanh surrogate -----------------------------------------------------------


@dataclass(frozen=True)
class SurrogateFit:
    kind: ProfileKind
    lambda1: float
    lambda2: float
    fit_rms: float = math.nan
    grid_hash: str = ""
    clamped: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", ProfileKind.parse(self.kind))
        if not self.lambda2 > 0:
            raise ValueError("lambda2 must be positive")

    def factor(self, ka):
        return geometric_factor(self, ka)


REFERENCE_SURROGATES = {
    ProfileKind.LINEAR: SurrogateFit(ProfileKind.LINEAR, -0.555, 2.028),
    ProfileKind.THOMAS_FERMI: SurrogateFit(ProfileKind.THOMAS_FERMI, -2.067, 1.452),
}


def geometric_factor(fit: SurrogateFit, ka):
    """f(ka); equals 1 at ka = 0 and decays to 0 for ka -> inf."""
    ka = np.asarray(ka, dtype=float)
    with np.errstate(divide="ignore"):
        x = (np.log(ka) - fit.lambda1) / fit.lambda2
    f = 0.5 * (1.0 - np.tanh(x))
    return float(f) if f.ndim == 0 else f


def surrogate_reflection(eps_inner, eps_outer, k, a, fit: SurrogateFit | None):
    """Reflection at a soft boundary: Fresnel value times f(ka).  ``fit=None`` is a hard step."""
    fresnel = (eps_outer - eps_inner) / (eps_outer + eps_inner)
    if fit is None:
        return fresnel
    return fresnel * geometric_factor(fit, np.asarray(k) * a)


def sample_geometric_factor(kind, ka, eps_inner: float = FIT_EPS_INNER,
                            eps_outer: float = FIT_EPS_OUTER, a: float = 1.0) -> np.ndarray:
    """Numeric f(ka) = R(k)/R(0) from the non-retarded Riccati equation."""
    spec = ProfileSpec(ProfileKind.parse(kind), a, eps_inner, eps_outer)
    z0, z1 = fit_window(spec)
    ka = np.atleast_1d(np.asarray(ka, dtype=float))
    R = [solve_riccati_nonretarded(RiccatiProblem(spec, x / a, z_start=z0, z_end=z1)) for x in ka]
    return np.asarray(R) / spec.fresnel


def _tanh_model(p, x):
    return 0.5 * (1.0 - np.tanh((x - p[0]) / p[1]))


def fit_surrogate(kind, samples, grid_hash: str = "") -> SurrogateFit:
    """Least-squares tanh fit in ln(ka).  `samples` is an (n, 2) array of (ka, f).

    Samples are clamped to [0, 1] first; each clamp is logged.
    """
    kind = ProfileKind.parse(kind)
    data = np.asarray(samples, dtype=float)
    ka, f = data[:, 0], data[:, 1]
    if np.any(ka <= 0):
        raise SurrogateFitError("ka samples must be positive")
    clamped = int(np.count_nonzero((f < 0) | (f > 1)))
    if clamped:
        log.info("clamped %d of %d f(ka) samples to [0, 1] for %s", clamped, len(f), kind.value)
    f = np.clip(f, 0.0, 1.0)
    x = np.log(ka)
    # start from the half-height crossing
    i = int(np.argmin(np.abs(f - 0.5)))
    res = least_squares(lambda p: _tanh_model(p, x) - f, [x[i], 1.5], method="lm",
                        xtol=1e-15, ftol=1e-15, gtol=1e-15)
    if res.status <= 0 or not res.x[1] > 0:
        raise SurrogateFitError(f"surrogate fit did not converge: {res.message}; "
                                f"rms={np.sqrt(np.mean(res.fun**2)):.3g}")
    rms = float(np.sqrt(np.mean(res.fun**2)))
    return SurrogateFit(kind, float(res.x[0]), float(res.x[1]), rms, grid_hash, clamped)


def fit_grid(ka_min: float = FIT_GRID[0], ka_max: float = FIT_GRID[1], n: int = FIT_GRID[2]) -> np.ndarray:
    return np.geomspace(ka_min, ka_max, n)


def grid_hash(kind, ka: np.ndarray, eps_inner: float, eps_outer: float) -> str:
    h = hashlib.sha256()
    h.update(ProfileKind.parse(kind).value.encode())
    h.update(np.asarray(ka, dtype="<f8").tobytes())
    h.update(np.asarray([eps_inner, eps_outer], dtype="<f8").tobytes())
    h.update(repr(fit_window(ProfileSpec(ProfileKind.parse(kind), 1.0))).encode())
    return h.hexdigest()[:16]


def compute_surrogate(kind, ka: np.ndarray | None = None, eps_inner: float = FIT_EPS_INNER,
                      eps_outer: float = FIT_EPS_OUTER) -> SurrogateFit:
    kind = ProfileKind.parse(kind)
    if kind is ProfileKind.HARD:
        raise ValueError("the hard profile has no geometric factor")
    ka = fit_grid() if ka is None else np.asarray(ka, dtype=float)
    f = sample_geometric_factor(kind, ka, eps_inner, eps_outer)
    return fit_surrogate(kind, np.column_stack([ka, f]), grid_hash(kind, ka, eps_inner, eps_outer))


def _fit_to_dict(fit: SurrogateFit) -> dict:
    return {"lambda1": fit.lambda1, "lambda2": fit.lambda2, "fit_rms": fit.fit_rms,
            "grid_hash": fit.grid_hash, "clamped": fit.clamped}


def load_surrogate_cache(path: str | os.PathLike) -> dict[ProfileKind, SurrogateFit]:
    path = Path(path)
    if not path.is_file():
        return {}
    doc = json.loads(path.read_text())
    return {ProfileKind.parse(k): SurrogateFit(k, v["lambda1"], v["lambda2"], v.get("fit_rms", math.nan),
                                               v.get("grid_hash", ""), v.get("clamped", 0))
            for k, v in doc.items()}


def save_surrogate_cache(path: str | os.PathLike, fits: dict) -> None:
    doc = {ProfileKind.parse(k).value: _fit_to_dict(v) for k, v in sorted(fits.items(), key=lambda kv: kv[0].value)}
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def cached_surrogate(kind, cache_path: str | os.PathLike | None = None) -> tuple[SurrogateFit, bool]:
    """Fit for `kind` on the default grid, reusing `cache_path` when its grid hash matches.

    Returns the fit and whether it came from the cache.
    """
    kind = ProfileKind.parse(kind)
    ka = fit_grid()
    want = grid_hash(kind, ka, FIT_EPS_INNER, FIT_EPS_OUTER)
    cache = load_surrogate_cache(cache_path) if cache_path else {}
    hit = cache.get(kind)
    if hit is not None and hit.grid_hash == want:
        return hit, True
    fit = compute_surrogate(kind, ka)
    if cache_path:
        cache[kind] = fit
        save_surrogate_cache(cache_path, cache)
    return fit, False
