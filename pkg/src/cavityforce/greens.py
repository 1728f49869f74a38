"""Non-retarded Green's tensors on the axis normal to the layers."""

from __future__ import annotations

import math
from typing import Callable

import numpy as np
from scipy import constants
from scipy.integrate import quad

AXIS = np.diag([1.0, 1.0, -2.0])

# kappa integrals stop at KAPPA_CUTOFF / dz; the neglected tail of
# x^2 exp(-x) beyond 60 is below 1e-22 of the total.
KAPPA_CUTOFF = 60.0


class QuadratureError(RuntimeError):
    pass


def bulk_nonretarded(eps: float, xi: float, rho: float) -> np.ndarray:
    """``c^2 / (4 pi xi^2 eps rho^3) (I - 3 e e)`` for a separation rho along z."""
    if not rho > 0:
        raise ValueError("coincident points: rho must be > 0")
    if not xi > 0:
        raise ValueError("xi must be > 0")
    return constants.c**2 / (4.0 * math.pi * xi**2 * eps * rho**3) * AXIS


def kappa_integral(g: Callable[[float], float], dz: float, epsrel: float = 1e-11):
    """``int_0^inf kappa^2 exp(-kappa dz) g(kappa) dkappa`` truncated at KAPPA_CUTOFF/dz.

    Returns (value, abserr).  Integrated in x = kappa dz so that the
    adaptive rule sees an O(1) interval for every separation.
    """
    if not dz > 0:
        raise ValueError("dz must be > 0")
    val, err = quad(lambda x: x * x * math.exp(-x) * g(x / dz), 0.0, KAPPA_CUTOFF,
                    epsabs=0.0, epsrel=epsrel, limit=200)
    scale = dz**-3
    return val * scale, err * scale


def onaxis_transmission_integral(t_of_kappa: Callable[[float], float], eps_1: float, eps_2: float,
                                 xi: float, dz: float, epsrel: float = 1e-11) -> np.ndarray:
    """Two-half-space tensor with a kappa-dependent transmission t(kappa)."""
    if not xi > 0:
        raise ValueError("xi must be > 0")
    val, err = kappa_integral(t_of_kappa, dz, epsrel)
    if not math.isfinite(val) or err > max(1e-6 * abs(val), 1e-300):
        raise QuadratureError(f"kappa integral did not converge (value {val:g}, error {err:g})")
    pref = constants.c**2 / (8.0 * math.pi * xi**2 * math.sqrt(eps_1 * eps_2))
    return pref * val * AXIS
