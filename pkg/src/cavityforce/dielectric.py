"""Response functions on the imaginary frequency axis.

Permittivities are sums of Lorentz oscillators evaluated at ``omega = i*xi``::

    eps(i xi) = 1 + sum_j C_j / (1 + (xi/w_j)**2 + g_j*xi/w_j**2)

and atomic polarizabilities use the single-oscillator London form
``alpha(i xi) = alpha0 / (1 + (xi/w0)**2)``.  All frequencies are stored
in rad/s and polarizabilities in C m^2 / V (SI).
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np
from scipy import constants

EV_TO_RAD_S = constants.e / constants.hbar
AU_POLARIZABILITY = constants.physical_constants["atomic unit of electric polarizability"][0]

DATA_PATH_ENV = "CAVITYFORCE_DATA_PATH"
_PACKAGE_DATA = Path(__file__).resolve().parent / "data"

_UNITS = {"eV": EV_TO_RAD_S, "rad_s": 1.0}


class MaterialError(ValueError):
    """A material file could not be parsed or describes a non-physical model."""


class MaterialNotFoundError(MaterialError, FileNotFoundError):
    pass


@dataclass(frozen=True)
class Oscillator:
    strength: float
    omega: float
    gamma: float = 0.0


@dataclass(frozen=True)
class OscillatorModel:
    name: str
    terms: tuple[Oscillator, ...]

    def __post_init__(self):
        for t in self.terms:
            if not (t.strength >= 0.0 and math.isfinite(t.strength)):
                raise MaterialError(f"{self.name}: oscillator strength must be >= 0, got {t.strength}")
            if not (t.omega > 0.0 and math.isfinite(t.omega)):
                raise MaterialError(f"{self.name}: resonance frequency must be > 0, got {t.omega}")
            if not (t.gamma >= 0.0 and math.isfinite(t.gamma)):
                raise MaterialError(f"{self.name}: damping must be >= 0, got {t.gamma}")

    @property
    def static(self) -> float:
        return 1.0 + sum(t.strength for t in self.terms)

    @property
    def resonances(self) -> tuple[float, ...]:
        return tuple(t.omega for t in self.terms)

    def __call__(self, xi):
        return permittivity_at(self, xi)


@dataclass(frozen=True)
class PolarizabilityModel:
    name: str
    alpha0: float
    omega0: float

    def __post_init__(self):
        if not (self.alpha0 >= 0.0 and math.isfinite(self.alpha0)):
            raise MaterialError(f"{self.name}: static polarizability must be >= 0")
        if not (self.omega0 > 0.0 and math.isfinite(self.omega0)):
            raise MaterialError(f"{self.name}: resonance frequency must be > 0")

    @property
    def resonances(self) -> tuple[float, ...]:
        return (self.omega0,)

    def scaled(self, factor: float) -> "PolarizabilityModel":
        return PolarizabilityModel(self.name, self.alpha0 * factor, self.omega0)

    def __call__(self, xi):
        return polarizability_at(self, xi)


MaterialModel = Union[OscillatorModel, PolarizabilityModel]


def _check_xi(xi):
    xi = np.asarray(xi, dtype=float)
    if np.any(xi < 0) or np.any(np.isnan(xi)):
        raise ValueError("imaginary frequency xi must be >= 0")
    return xi


def permittivity_at(model: OscillatorModel, xi):
    """Permittivity ``eps(i xi)``; `xi` in rad/s, scalar or array."""
    xi = _check_xi(xi)
    eps = np.ones_like(xi)
    for t in model.terms:
        x = xi / t.omega
        eps = eps + t.strength / (1.0 + x * x + t.gamma * xi / t.omega**2)
    return float(eps) if eps.ndim == 0 else eps


def polarizability_at(model: PolarizabilityModel, xi):
    xi = _check_xi(xi)
    x = xi / model.omega0
    alpha = model.alpha0 / (1.0 + x * x)
    return float(alpha) if alpha.ndim == 0 else alpha


def data_search_path() -> list[Path]:
    extra = os.environ.get(DATA_PATH_ENV, "")
    paths = [Path(p) for p in extra.split(os.pathsep) if p]
    return paths + [_PACKAGE_DATA]


def resolve_data_file(name: str | os.PathLike, base: Path | None = None) -> Path:
    """Find `name` as given, relative to `base`, then on the data search path.

    A bare name without suffix also matches ``<name>.json``.
    """
    p = Path(name)
    candidates = [p]
    if base is not None and not p.is_absolute():
        candidates.append(base / p)
    if not p.is_absolute():
        for d in data_search_path():
            candidates.append(d / p)
            if not p.suffix:
                candidates.append(d / f"{p}.json")
    for c in candidates:
        if c.is_file():
            return c
    raise MaterialNotFoundError(f"material file not found: {name}")


def material_from_dict(doc: dict) -> MaterialModel:
    try:
        name = str(doc.get("name", "unnamed"))
        kind = doc["kind"]
        unit = doc["unit"]
    except (KeyError, AttributeError) as exc:
        raise MaterialError(f"material is missing field {exc}") from None
    if unit not in _UNITS:
        raise MaterialError(f"{name}: unknown frequency unit {unit!r} (expected 'eV' or 'rad_s')")
    scale = _UNITS[unit]
    try:
        if kind == "permittivity":
            terms = tuple(
                Oscillator(float(t["C"]), float(t["omega"]) * scale, float(t.get("gamma", 0.0)) * scale)
                for t in doc["terms"]
            )
            return OscillatorModel(name, terms)
        if kind == "polarizability":
            if "alpha0_au" in doc:
                alpha0 = float(doc["alpha0_au"]) * AU_POLARIZABILITY
            else:
                alpha0 = float(doc["alpha0_si"])
            return PolarizabilityModel(name, alpha0, float(doc["omega0"]) * scale)
    except (KeyError, TypeError) as exc:
        raise MaterialError(f"{name}: malformed {kind} entry ({exc})") from None
    raise MaterialError(f"{name}: unknown material kind {kind!r}")


def material_to_dict(model: MaterialModel) -> dict:
    """Serialize in rad/s so that a reload reproduces the model bit for bit."""
    if isinstance(model, OscillatorModel):
        return {
            "name": model.name,
            "kind": "permittivity",
            "unit": "rad_s",
            "terms": [{"C": t.strength, "omega": t.omega, "gamma": t.gamma} for t in model.terms],
        }
    return {
        "name": model.name,
        "kind": "polarizability",
        "unit": "rad_s",
        "alpha0_si": model.alpha0,
        "omega0": model.omega0,
    }


def load_material(path: str | os.PathLike, base: Path | None = None) -> MaterialModel:
    path = resolve_data_file(path, base)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise MaterialError(f"{path}: not valid JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise MaterialError(f"{path}: expected a JSON object")
    return material_from_dict(doc)


def save_material(model: MaterialModel, path: str | os.PathLike) -> None:
    Path(path).write_text(json.dumps(material_to_dict(model), indent=2) + "\n")
