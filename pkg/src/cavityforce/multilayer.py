"""Non-retarded reflection and transmission in planar stacks.

Sign convention: ``r_ij = (eps_i - eps_j) / (eps_i + eps_j)`` is the
reflection of a wave arriving from medium j at medium i, and
``t_ij = 1 + r_ij``.  A vacuum cavity inside a solvent of permittivity eps
thus sees ``r = (eps - 1) / (eps + 1)`` from the inside.

In the non-retarded limit every layer shares the same decay constant
kappa = k_parallel, so propagation over a thickness d is ``exp(-kappa d)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import constants

_TINY = 1e-12


class ReflectionError(ArithmeticError):
    """A multiple-reflection series diverges or a denominator vanishes."""


class PolarizabilityCatastrophe(ValueError):
    pass


@dataclass(frozen=True)
class Interface:
    eps_from: float
    eps_to: float

    def __post_init__(self):
        if not (self.eps_from > 0 and self.eps_to > 0):
            raise ValueError("interface permittivities must be positive")


def fresnel_r(iface: Interface) -> float:
    return (iface.eps_from - iface.eps_to) / (iface.eps_from + iface.eps_to)


def fresnel_t(iface: Interface) -> float:
    return 2.0 * iface.eps_from / (iface.eps_from + iface.eps_to)


def _guard(den, what: str):
    if np.any(np.abs(den) < _TINY):
        raise ReflectionError(f"{what}: denominator below {_TINY:g}")
    return den


def cavity_transmission(r, kappa, d):
    """Local-field transmission out of a symmetric cavity of width d.

    ``(1 + r) / (1 - r exp(-kappa d))``; tends to eps for d -> 0 when r is
    the bare cavity reflection and to ``1 + r`` for kappa d -> inf.
    """
    if np.any(np.asarray(d) < 0):
        raise ValueError("cavity width must be >= 0")
    r = np.asarray(r, dtype=float)
    den = _guard(1.0 - r * np.exp(-np.asarray(kappa) * d), "cavity transmission")
    out = (1.0 + r) / den
    return float(out) if np.ndim(out) == 0 else out


def cavity_transmission_series(r_left, r_right, t_exit, kappa, d):
    """Summed bounce series for a source centred in a cavity of width d.

    ``(1 + r_left p) / (1 - r_left r_right p**2) * t_exit`` with p = exp(-kappa d).
    """
    if np.any(np.asarray(d) < 0):
        raise ValueError("cavity width must be >= 0")
    p = np.exp(-np.asarray(kappa) * d)
    if np.any(np.abs(np.asarray(r_left) * r_right) >= 1.0):
        raise ReflectionError("|r_left r_right| must be < 1 for the bounce series to converge")
    den = _guard(1.0 - np.asarray(r_left) * r_right * p * p, "cavity series")
    out = (1.0 + np.asarray(r_left) * p) / den * t_exit
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class Layer:
    eps: float
    thickness: float = math.inf


@dataclass(frozen=True)
class SlabStack:
    """Layers ordered from the far half-space to the half-space of observation.

    ``factors`` optionally scales the reflection of each interface (one per
    adjacent pair), used to soften cavity boundaries.
    """

    layers: tuple[Layer, ...]
    kappa: float
    factors: tuple[float, ...] | None = None

    def __post_init__(self):
        if len(self.layers) < 2:
            raise ValueError("a stack needs at least two layers")
        for layer in self.layers:
            if not layer.eps > 0:
                raise ValueError("layer permittivities must be positive")
        for layer in self.layers[1:-1]:
            if not (0 <= layer.thickness < math.inf):
                raise ValueError("inner layers need a finite thickness >= 0")
        if self.factors is not None and len(self.factors) != len(self.layers) - 1:
            raise ValueError("need one reflection factor per interface")
        if self.kappa < 0:
            raise ValueError("kappa must be >= 0")


def symmetric_cavity_stack(eps_medium: float, eps_slab: float, R_C: float, d_1: float,
                           kappa: float, cavity_factor: float = 1.0) -> SlabStack:
    """medium | vacuum R_C | slab d_1 | vacuum R_C | medium (observation side)."""
    f = cavity_factor
    return SlabStack(
        (Layer(eps_medium), Layer(1.0, R_C), Layer(eps_slab, d_1), Layer(1.0, R_C), Layer(eps_medium)),
        kappa,
        (f, 1.0, 1.0, f),
    )


def generalized_reflection_iterative(stack: SlabStack) -> float:
    """Effective reflection seen from the last layer, built interface by interface.

    The first step is written in transmission form
    ``r + t r_inner t' p^2 / (1 - r' r_inner p^2)``; the rest are the
    equivalent Moebius updates ``(r + R p^2) / (1 + r R p^2)``.
    """
    layers, q = stack.layers, stack.kappa
    factors = stack.factors or (1.0,) * (len(layers) - 1)

    def rho(j):
        # wave in layer j+1 hitting layer j
        return fresnel_r(Interface(layers[j].eps, layers[j + 1].eps)) * factors[j]

    R = rho(0)
    if len(layers) == 2:
        return R
    r = rho(1)
    p2 = math.exp(-2.0 * q * layers[1].thickness)
    t_in, t_out = 1.0 + r, 1.0 - r
    R = r + t_in * R * t_out * p2 / _guard(1.0 + r * R * p2, "generalized reflection")
    for j in range(2, len(layers) - 1):
        r = rho(j)
        p2 = math.exp(-2.0 * q * layers[j].thickness)
        R = (r + R * p2) / _guard(1.0 + r * R * p2, "generalized reflection")
    return R


def generalized_reflection_closed(r, r_1, kappa, R_C, kappa_III, d_1):
    """Closed form of the symmetric five-region reflection.

    Solvent | vacuum R_C | slab d_1 | vacuum R_C | solvent, seen from the
    solvent on the right.  `r` is the vacuum-side cavity reflection
    (eps - 1)/(eps + 1) (possibly softened) and `r_1` the slab reflection
    (eps_s - 1)/(eps_s + 1).  Vectorised over all arguments.
    """
    scalar = all(isinstance(v, (int, float)) for v in (r, r_1, kappa, R_C, kappa_III, d_1))
    exp = math.exp if scalar else np.exp
    E2 = exp(-2.0 * kappa * R_C)
    E4 = E2 * E2
    D = exp(-2.0 * kappa_III * d_1)
    if not scalar:
        r = np.asarray(r, dtype=float)
    num = r * (1.0 - D * E4) - r_1 * E2 * (1.0 + r * r) * (1.0 - D) + r * r_1 * r_1 * (E4 - D)
    den = 1.0 - 2.0 * r * r_1 * E2 * (1.0 - D) + (r * r_1) ** 2 * E4 - r_1 * r_1 * D - r * r * D * E4
    if scalar:
        if abs(den) < _TINY:
            raise ReflectionError("generalized reflection: denominator vanishes")
        return -num / den
    out = -num / _guard(den, "generalized reflection")
    return float(out) if np.ndim(out) == 0 else out


def generalized_reflection_closed_alt(r, r_1, kappa, R_C, kappa_III, d_1):
    """Alternative rational form in circulation for the same geometry.

    Kept for comparison only: it neither reduces to the bare slab for r = 0
    nor to the empty cavity for r_1 = 0, so it is not used by the forces.
    """
    E = lambda n: np.exp(-n * np.asarray(kappa) * R_C)  # noqa: E731
    D = np.exp(-2.0 * np.asarray(kappa_III) * d_1)
    pre = -(1 + r_1**2 * E(2)) / (r_1**4 * E(4) + r * r_1**3 * E(3) - r * r_1 * E(3) + 2 * r_1**2 * E(2) + 1)
    num = (r**2 * r_1 * (r_1**2 - 1) * D * E(1) + (r * r_1**4 + r_1) * D * E(2)
           + (r * r_1**2 - r) * D * E(3) + r_1**3 * D * E(4)
           + (r * r_1**2 - r_1) * E(2) + r_1**2 * r * D - r_1**3 * E(4) + r)
    den = (r_1**4 * D * E(2) + r_1**3 * r * D * E(1) + r_1**2 * E(2)
           - r_1 * r * D * E(1) + r_1**2 * D + 1)
    return pre * num / den


def clausius_mossotti(alpha, d):
    """Permittivity of a slab of polarisable particles packed at spacing d."""
    x = np.asarray(alpha) / (4.0 * math.pi * constants.epsilon_0 * d**3)
    if np.any(1.0 - x <= 0.0):
        raise PolarizabilityCatastrophe("alpha / (4 pi eps0 d^3) >= 1: Clausius-Mossotti diverges")
    eps = (1.0 + 2.0 * x) / (1.0 - x)
    return float(eps) if np.ndim(eps) == 0 else eps
