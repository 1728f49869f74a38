"""Van der Waals potential and Casimir pressure with cavity local-field factors.

Both quantities are zero-temperature integrals over imaginary frequency.
The frequency axis is mapped onto [0, 1) by ``xi = xi_c u / (1 - u)`` and
integrated adaptively with breakpoints at every material resonance; the
inner wavevector integrals are truncated at 60 decay lengths.
"""

from __future__ import annotations

import functools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, NamedTuple, Sequence

import numpy as np
from scipy import constants
from scipy.integrate import quad

from .dielectric import OscillatorModel, PolarizabilityModel
from .greens import KAPPA_CUTOFF, QuadratureError
from .multilayer import (ReflectionError, clausius_mossotti, generalized_reflection_closed,
                         generalized_reflection_iterative, symmetric_cavity_stack)
from .profiles import CavityFit, ProfileKind
from .riccati import REFERENCE_SURROGATES, SurrogateFit

HBAR = constants.hbar
EPS0 = constants.epsilon_0

XI_SCALE = 1e16
REL_TOL = 1e-7
INNER_REL_TOL = 1e-10

BOUNDARY_MODELS = ("hard", "linear", "thomas-fermi", "no-cavity")
TRANSMISSION_FORMS = ("closed", "series")
REFLECTION_FORMS = ("closed", "iterative")

VACUUM = OscillatorModel("vacuum", ())


class QuadResult(NamedTuple):
    value: float
    error: float


def _boundary(tag: str) -> str:
    tag = str(tag).strip().lower().replace("_", "-")
    if tag in ("tf", "thomasfermi"):
        tag = "thomas-fermi"
    if tag not in BOUNDARY_MODELS:
        raise ValueError(f"unknown boundary model {tag!r}; expected one of {BOUNDARY_MODELS}")
    return tag


def _default_surrogates():
    return dict(REFERENCE_SURROGATES)


@dataclass(frozen=True)
class VdwScenario:
    """Two atoms, each centred in a planar vacuum cavity of width 2 R_C."""

    particle_a: PolarizabilityModel
    particle_b: PolarizabilityModel
    medium: OscillatorModel
    cavity: CavityFit
    boundary: str = "hard"
    surrogates: dict = field(default_factory=_default_surrogates)
    transmission: str = "closed"
    axis: str = "layer"
    xi_scale: float = XI_SCALE
    rel_tol: float = REL_TOL

    def __post_init__(self):
        object.__setattr__(self, "boundary", _boundary(self.boundary))
        if self.transmission not in TRANSMISSION_FORMS:
            raise ValueError(f"transmission must be one of {TRANSMISSION_FORMS}")
        if self.axis not in ("layer", "center"):
            raise ValueError("axis must be 'layer' or 'center'")

    @property
    def d(self) -> float:
        return 2.0 * self.cavity.R_C

    def atom_distance(self, l: float) -> float:
        """Atom-to-atom distance for axis value l."""
        return l + self.d if self.axis == "layer" else l


@dataclass(frozen=True)
class CasimirScenario:
    """Two particle slabs, each in a planar vacuum cavity, across a solvent gap l."""

    particle: PolarizabilityModel
    medium: OscillatorModel
    cavity: CavityFit
    d_1: float
    d_2: float
    spacing: float | None = None
    boundary: str = "hard"
    surrogates: dict = field(default_factory=_default_surrogates)
    reflection: str = "closed"
    xi_scale: float = XI_SCALE
    rel_tol: float = REL_TOL

    def __post_init__(self):
        object.__setattr__(self, "boundary", _boundary(self.boundary))
        if not (self.d_1 > 0 and self.d_2 > 0):
            raise ValueError("slab thicknesses must be positive")
        if self.spacing is None:
            object.__setattr__(self, "spacing", self.d_1)
        if self.reflection not in REFLECTION_FORMS:
            raise ValueError(f"reflection must be one of {REFLECTION_FORMS}")


def _soft(boundary: str, cavity: CavityFit, surrogates: dict):
    """(surrogate, width) for soft boundaries, (None, 0) otherwise."""
    if boundary in ("linear", "thomas-fermi"):
        kind = ProfileKind.parse(boundary)
        return surrogates[kind], cavity.width(kind)
    return None, 0.0


def _factor(fit: SurrogateFit | None, ka):
    if fit is None:
        return 1.0 if np.ndim(ka) == 0 else np.ones_like(ka)
    if np.ndim(ka) == 0:
        if ka <= 0.0:
            return 1.0
        return 0.5 * (1.0 - math.tanh((math.log(ka) - fit.lambda1) / fit.lambda2))
    with np.errstate(divide="ignore"):
        arg = (np.log(ka) - fit.lambda1) / fit.lambda2
    return np.where(ka > 0, 0.5 * (1.0 - np.tanh(arg)), 1.0)


def _eps(model: OscillatorModel, xi: float) -> float:
    eps = 1.0
    for t in model.terms:
        eps += t.strength / (1.0 + (xi / t.omega) ** 2 + t.gamma * xi / t.omega**2)
    return eps


def _alpha(model: PolarizabilityModel, xi: float) -> float:
    return model.alpha0 / (1.0 + (xi / model.omega0) ** 2)


def _xi_integral(h: Callable[[float], float], xi_scale: float, resonances: Iterable[float],
                 rel_tol: float) -> QuadResult:
    """int_0^inf h(xi) dxi through the map xi = xi_c u/(1-u)."""
    pts = sorted({w / (w + xi_scale) for w in resonances if w > 0})

    def integrand(u):
        if u >= 1.0:
            return 0.0
        xi = xi_scale * u / (1.0 - u)
        return h(xi) * xi_scale / (1.0 - u) ** 2

    val, err = quad(integrand, 0.0, 1.0, points=pts or None, epsabs=0.0, epsrel=rel_tol, limit=400)
    if not math.isfinite(val):
        raise QuadratureError("frequency integral is not finite")
    if err > max(100.0 * rel_tol * abs(val), 1e-300):
        raise QuadratureError(f"frequency integral did not converge (rel. error {err / abs(val):.2g})")
    return QuadResult(val, err)


def _inner(g: Callable[[float], float], upper: float) -> float:
    val, _ = quad(g, 0.0, upper, epsabs=0.0, epsrel=INNER_REL_TOL, limit=200)
    return val


_PANELS = np.array([0.0, 2.0, 6.0, 14.0, 30.0, KAPPA_CUTOFF])


@functools.lru_cache(maxsize=None)
def _panel_rule(n: int) -> tuple[np.ndarray, np.ndarray]:
    nodes, weights = np.polynomial.legendre.leggauss(n)
    lo, hi = _PANELS[:-1, None], _PANELS[1:, None]
    half = 0.5 * (hi - lo)
    return (lo + half * (nodes + 1.0)).ravel(), (half * weights).ravel()


def _inner_vec(g: Callable[[np.ndarray], np.ndarray], tol: float = INNER_REL_TOL) -> float:
    """int_0^60 g(x) dx for a vectorised smooth g by composite Gauss-Legendre.

    The order doubles until two successive estimates agree to `tol`.
    """
    prev = None
    for n in (16, 32, 64, 128, 256):
        x, w = _panel_rule(n)
        val = float(np.dot(w, g(x)))
        if prev is not None and abs(val - prev) <= tol * abs(val):
            return val
        prev = val
    raise QuadratureError("wavevector integral did not converge")


# -- van der Waals ---------------------------------------------------------------

_VDW_PREFACTOR = -3.0 * HBAR / (64.0 * math.pi**3 * EPS0**2)


def _vdw(a: PolarizabilityModel, b: PolarizabilityModel, medium: OscillatorModel,
         local_field: Callable[[float, float, float], float] | None, dz: float,
         xi_scale: float, rel_tol: float) -> QuadResult:
    """-(3 hbar / 64 pi^3 eps0^2) int dxi a b / eps^2 * I^2 with
    I = int kappa^2 exp(-kappa dz) L(kappa) dkappa and L = t(2 - t)."""
    if not dz > 0:
        raise ValueError("separation must be > 0")

    def h(xi):
        eps = _eps(medium, xi)
        if local_field is None:
            I = 2.0 / dz**3
        else:
            I = _inner(lambda x: x * x * math.exp(-x) * local_field(x / dz, eps, xi), KAPPA_CUTOFF) / dz**3
        return _alpha(a, xi) * _alpha(b, xi) / (eps * eps) * I * I

    res = (a.resonances + b.resonances + medium.resonances)
    val, err = _xi_integral(h, xi_scale, res, rel_tol)
    return QuadResult(_VDW_PREFACTOR * val, abs(_VDW_PREFACTOR) * err)


def _local_field(scn: VdwScenario):
    fit, width = _soft(scn.boundary, scn.cavity, scn.surrogates)
    d = 0.0 if scn.boundary == "no-cavity" else scn.d
    series = scn.transmission == "series"

    def L(kappa, eps, xi):
        r = (eps - 1.0) / (eps + 1.0) * _factor(fit, kappa * width)
        p = math.exp(-kappa * d)
        if series:
            t = (1.0 + r * p) / (1.0 - r * r * p * p) * (1.0 + r)
        else:
            t = (1.0 + r) / (1.0 - r * p)
        return t * (2.0 - t)

    return L


def vdw_potential(scn: VdwScenario, l: float, return_error: bool = False):
    """Interaction energy (J) of the two atoms for axis value `l` (m)."""
    if not l > 0:
        raise ValueError("l must be > 0")
    out = _vdw(scn.particle_a, scn.particle_b, scn.medium, _local_field(scn), scn.atom_distance(l),
               scn.xi_scale, scn.rel_tol)
    return out if return_error else out.value


def vdw_vacuum(a: PolarizabilityModel, b: PolarizabilityModel, l: float, return_error: bool = False,
               xi_scale: float = XI_SCALE, rel_tol: float = REL_TOL):
    """Free-space potential at atom distance `l`; the kappa integral is exactly 2/l^3."""
    if not l > 0:
        raise ValueError("l must be > 0")
    out = _vdw(a, b, VACUUM, None, l, xi_scale, rel_tol)
    return out if return_error else out.value


def london_vacuum(a: PolarizabilityModel, b: PolarizabilityModel, l: float) -> float:
    """Closed-form London energy for two single-oscillator atoms."""
    # int_0^inf a0 b0 / ((1 + xi^2/wa^2)(1 + xi^2/wb^2)) dxi = pi/2 a0 b0 wa wb / (wa + wb)
    wa, wb = a.omega0, b.omega0
    integral = 0.5 * math.pi * a.alpha0 * b.alpha0 * wa * wb / (wa + wb)
    return -3.0 * HBAR / (16.0 * math.pi**3 * EPS0**2 * l**6) * integral


# -- Casimir ------------------------------------------------------------------------

_CASIMIR_PREFACTOR = HBAR / (2.0 * math.pi**2)


def _slab_reflection(scn: CasimirScenario, eps: float, eps_slab: float, k: np.ndarray, thickness: float,
                     R_C: float, fit, width) -> np.ndarray:
    f = _factor(fit, k * width)
    if scn.reflection == "iterative":
        return np.array([generalized_reflection_iterative(
            symmetric_cavity_stack(eps, eps_slab, R_C, thickness, float(kk), float(ff)))
            for kk, ff in zip(k, f)])
    r = (eps - 1.0) / (eps + 1.0) * f
    r1 = (eps_slab - 1.0) / (eps_slab + 1.0)
    return generalized_reflection_closed(r, r1, k, R_C, k, thickness)


def _casimir(scn: CasimirScenario, medium: OscillatorModel, boundary: str, l: float) -> QuadResult:
    if not l > 0:
        raise ValueError("l must be > 0")
    fit, width = _soft(boundary, scn.cavity, scn.surrogates)
    R_C = 0.0 if boundary == "no-cavity" else scn.cavity.R_C

    def h(xi):
        eps = _eps(medium, xi)
        eps_s = clausius_mossotti(_alpha(scn.particle, xi), scn.spacing)

        def g(x):
            # x = 2 k l
            k = x / (2.0 * l)
            rr = (_slab_reflection(scn, eps, eps_s, k, scn.d_1, R_C, fit, width)
                  * _slab_reflection(scn, eps, eps_s, k, scn.d_2, R_C, fit, width))
            q = rr * np.exp(-x)
            if np.any(np.abs(q) >= 1.0):
                raise ReflectionError("|r+ r- exp(-2kl)| >= 1")
            return x * x * q / (1.0 - q)

        return _inner_vec(g) / (8.0 * l**3)

    res = scn.particle.resonances + medium.resonances
    val, err = _xi_integral(h, scn.xi_scale, res, scn.rel_tol)
    return QuadResult(_CASIMIR_PREFACTOR * val, _CASIMIR_PREFACTOR * err)


def casimir_pressure(scn: CasimirScenario, l: float, return_error: bool = False):
    """Pressure (N/m^2) on either slab across a solvent gap `l`; positive is attractive."""
    out = _casimir(scn, scn.medium, scn.boundary, l)
    return out if return_error else out.value


def casimir_vacuum(scn: CasimirScenario, l: float, return_error: bool = False):
    """Same slabs with the solvent and the cavities removed."""
    out = _casimir(scn, VACUUM, "no-cavity", l)
    return out if return_error else out.value


# -- curves ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CurveRow:
    l: float
    model: str
    absolute: float
    relative: float
    quad_err: float
    status: str = "ok"


@dataclass(frozen=True)
class CurveTable:
    rows: tuple[CurveRow, ...]
    quantity: str

    def __post_init__(self):
        ls = sorted({r.l for r in self.rows})
        by_model: dict[str, list[float]] = {}
        for r in self.rows:
            by_model.setdefault(r.model, []).append(r.l)
        for model, vals in by_model.items():
            if any(b <= a for a, b in zip(vals, vals[1:])):
                raise ValueError(f"l values for {model} are not strictly increasing")

    def models(self) -> list[str]:
        return list(dict.fromkeys(r.model for r in self.rows))

    def column(self, model: str, attr: str = "relative") -> np.ndarray:
        return np.array([getattr(r, attr) for r in self.rows if r.model == model])

    def l_values(self) -> np.ndarray:
        return np.array(sorted({r.l for r in self.rows}))

    def failures(self) -> list[CurveRow]:
        return [r for r in self.rows if r.status != "ok"]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.csv_text())

    def csv_text(self) -> str:
        lines = ["l_nm,model,absolute,relative,quad_err"]
        for r in self.rows:
            lines.append(f"{r.l * 1e9:.6g},{r.model},{r.absolute:.10e},{r.relative:.10e},{r.quad_err:.3e}")
        return "\n".join(lines) + "\n"


def _cell(args):
    scn, l, model = args
    try:
        if isinstance(scn, VdwScenario):
            absolute = vdw_potential(replace(scn, boundary=model), l, return_error=True)
            vac = vdw_vacuum(scn.particle_a, scn.particle_b, scn.atom_distance(l), return_error=True,
                             xi_scale=scn.xi_scale, rel_tol=scn.rel_tol)
        else:
            absolute = casimir_pressure(replace(scn, boundary=model), l, return_error=True)
            vac = casimir_vacuum(scn, l, return_error=True)
    except (QuadratureError, ReflectionError, ArithmeticError, ValueError) as exc:
        return CurveRow(l, model, math.nan, math.nan, math.nan, f"failed: {exc}")
    rel = absolute.value / vac.value
    err = absolute.error / abs(absolute.value) + vac.error / abs(vac.value) if absolute.value else math.nan
    return CurveRow(l, model, absolute.value, rel, err)


def relative_curves(scn, l_grid: Sequence[float], models: Sequence[str] = BOUNDARY_MODELS,
                    jobs: int = 1) -> CurveTable:
    """Absolute and vacuum-relative values for every (l, boundary model) cell.

    Cells are independent; with ``jobs > 1`` they run in worker processes and
    are reassembled in grid order, so the table does not depend on `jobs`.
    """
    grid = [float(l) for l in l_grid]
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("l grid must be strictly increasing")
    models = [_boundary(m) for m in models]
    cells = [(scn, l, m) for l in grid for m in models]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_cell, cells))
    else:
        rows = [_cell(c) for c in cells]
    quantity = "vdw_potential_J" if isinstance(scn, VdwScenario) else "casimir_pressure_Pa"
    return CurveTable(tuple(rows), quantity)
