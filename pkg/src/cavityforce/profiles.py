"""One-dimensional permittivity profiles across a cavity boundary.

Coordinates follow the reflection problem: the solvent (``eps_outer``) fills
``z -> -inf`` and the cavity interior (``eps_inner``) ``z -> +inf``.  Soft
profiles are centred on ``z = 0`` and have half-width ``a``.
"""

from __future__ import annotations

import enum
import math
import os
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import least_squares
from scipy.special import expit

ANGSTROM = 1e-10

# Fraction of the density rise left at z = R_C + a_tf (99 % threshold).
TF_THRESHOLD = 0.0101


class ProfileKind(str, enum.Enum):
    HARD = "hard"
    LINEAR = "linear"
    THOMAS_FERMI = "thomas-fermi"

    @classmethod
    def parse(cls, value) -> "ProfileKind":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "-")
        aliases = {"tf": "thomas-fermi", "thomasfermi": "thomas-fermi", "lin": "linear", "step": "hard"}
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            raise ValueError(f"unknown profile kind {value!r}") from None


@dataclass(frozen=True)
class ProfileSpec:
    kind: ProfileKind
    a: float
    eps_inner: float = 1.0
    eps_outer: float = 2.0

    def __post_init__(self):
        object.__setattr__(self, "kind", ProfileKind.parse(self.kind))
        if self.kind is not ProfileKind.HARD and not self.a > 0:
            raise ValueError("soft profiles need a half-width a > 0")
        if not (self.eps_inner > 0 and self.eps_outer > 0):
            raise ValueError("permittivities must be positive")

    @property
    def contrast(self) -> float:
        return self.eps_outer - self.eps_inner

    @property
    def fresnel(self) -> float:
        """Zero-wavevector reflection seen from the cavity side."""
        return (self.eps_outer - self.eps_inner) / (self.eps_outer + self.eps_inner)

    def __call__(self, z):
        return profile_value(self, z)


def _shape(spec: ProfileSpec, z):
    """Fraction of the solvent permittivity present at z (1 far left, 0 far right)."""
    if spec.kind is ProfileKind.LINEAR:
        return np.clip((spec.a - z) / (2.0 * spec.a), 0.0, 1.0)
    if spec.kind is ProfileKind.THOMAS_FERMI:
        return expit(-2.0 * z / spec.a)
    return np.where(z < 0.0, 1.0, 0.0)


def profile_value(spec: ProfileSpec, z):
    z = np.asarray(z, dtype=float)
    eps = spec.eps_inner + spec.contrast * _shape(spec, z)
    return float(eps) if eps.ndim == 0 else eps


def profile_slope(spec: ProfileSpec, z):
    """d eps / dz.  Zero away from the step for the hard profile."""
    z = np.asarray(z, dtype=float)
    if spec.kind is ProfileKind.LINEAR:
        d = np.where(np.abs(z) <= spec.a, -spec.contrast / (2.0 * spec.a), 0.0)
    elif spec.kind is ProfileKind.THOMAS_FERMI:
        s = expit(-2.0 * z / spec.a)
        d = -spec.contrast * (2.0 / spec.a) * s * (1.0 - s)
    else:
        d = np.zeros_like(z)
    return float(d) if d.ndim == 0 else d


def profile_breakpoints(spec: ProfileSpec) -> tuple[float, ...]:
    """Points where eps or eps' is not smooth."""
    if spec.kind is ProfileKind.LINEAR:
        return (-spec.a, spec.a)
    if spec.kind is ProfileKind.HARD:
        return (0.0,)
    return ()


# -- density fit ------------------------------------------------------------


class DensityFitError(ValueError):
    pass


class DensityConvergenceError(DensityFitError):
    """Valid input on which the least-squares iteration failed."""


def widths_from_slope(slope: float) -> tuple[float, float]:
    """Half-widths (a_linear, a_tf) of the linear and Thomas-Fermi profiles."""
    if not slope > 0:
        raise ValueError("slope must be positive")
    return 2.0 / slope, -math.log(TF_THRESHOLD) / slope


@dataclass(frozen=True)
class CavityFit:
    R_C: float
    slope: float
    residual: float = 0.0
    slope_capped: bool = False

    def __post_init__(self):
        if not (self.R_C > 0 and self.slope > 0):
            raise ValueError("cavity radius and slope must be positive")

    @property
    def a_linear(self) -> float:
        return widths_from_slope(self.slope)[0]

    @property
    def a_tf(self) -> float:
        return widths_from_slope(self.slope)[1]

    def width(self, kind) -> float:
        kind = ProfileKind.parse(kind)
        if kind is ProfileKind.LINEAR:
            return self.a_linear
        if kind is ProfileKind.THOMAS_FERMI:
            return self.a_tf
        return 0.0


# Water around a helium atom (simulated density, fitted elsewhere).
HELIUM_WATER_CAVITY = CavityFit(R_C=1.71 * ANGSTROM, slope=10.1 / ANGSTROM)


def _initial_guess(z, rho):
    above = rho >= 0.5
    idx = np.flatnonzero(above[1:] != above[:-1])
    if idx.size == 0:
        i = len(z) // 2 - 1
        return float(0.5 * (z[i] + z[i + 1])), 4.0 / float(np.ptp(z))
    i = int(idx[0])
    z0, z1, r0, r1 = z[i], z[i + 1], rho[i], rho[i + 1]
    R = z0 + (0.5 - r0) * (z1 - z0) / (r1 - r0)
    slope = 4.0 * abs(r1 - r0) / (z1 - z0)
    return float(R), float(max(slope, 1e-3 / np.ptp(z)))


def fit_density(samples, max_slope: float | None = None, max_nfev: int = 2000) -> CavityFit:
    """Least-squares fit of ``rho(z) = 1 / (1 + exp(-slope (z - R_C)))``.

    `samples` is an (n, 2) array of (z, rho).  Levenberg-Marquardt with the
    analytic Jacobian, started from the rho = 0.5 crossing.  A transition
    sharper than the sample spacing cannot be resolved; the slope is then
    pinned to `max_slope` (default 20 / smallest spacing) and flagged.
    """
    data = np.asarray(samples, dtype=float)
    if data.ndim != 2 or data.shape[1] != 2:
        raise DensityFitError("density samples must be (z, rho) pairs")
    if len(data) < 4:
        raise DensityFitError(f"need at least 4 samples to fit 2 parameters, got {len(data)}")
    data = data[np.argsort(data[:, 0])]
    z, rho = data[:, 0], data[:, 1]
    if np.ptp(rho) < 1e-12:
        raise DensityFitError("density samples are constant; no transition to fit")
    spacing = np.diff(z)
    spacing = spacing[spacing > 0]
    if spacing.size == 0:
        raise DensityFitError("all samples share one z value")
    if max_slope is None:
        max_slope = 20.0 / float(spacing.min())

    scale = float(np.ptp(z))
    zs = z / scale

    def resid(p):
        return expit(p[1] * (zs - p[0])) - rho

    def jac(p):
        s = expit(p[1] * (zs - p[0]))
        w = s * (1.0 - s)
        return np.column_stack([-p[1] * w, (zs - p[0]) * w])

    R0, s0 = _initial_guess(z, rho)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        res = least_squares(resid, [R0 / scale, s0 * scale], jac=jac, method="lm",
                            xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=max_nfev)
    if res.status <= 0 or not np.all(np.isfinite(res.x)):
        raise DensityConvergenceError(f"density fit did not converge: {res.message}")
    R, slope = res.x[0] * scale, res.x[1] / scale
    capped = False
    if slope > max_slope:
        slope, capped = max_slope, True
    if not (slope > 0 and R > 0):
        raise DensityConvergenceError(f"fit produced non-physical parameters R_C={R}, slope={slope}")
    return CavityFit(R_C=R, slope=slope, residual=float(np.sum(res.fun**2)), slope_capped=capped)


def load_density_samples(path: str | os.PathLike) -> np.ndarray:
    """Two-column text file: z in Angstrom, dimensionless density; '#' comments."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"density file not found: {path}")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        try:
            data = np.loadtxt(path, comments="#", ndmin=2)
        except ValueError as exc:
            raise DensityFitError(f"{path}: cannot parse density samples ({exc})") from None
    if data.size == 0:
        raise DensityFitError(f"{path}: no density samples")
    if data.shape[1] != 2:
        raise DensityFitError(f"{path}: expected two columns (z, rho), got {data.shape[1]}")
    data = data.copy()
    data[:, 0] *= ANGSTROM
    return data
