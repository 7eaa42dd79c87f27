"""Orbits from the constants of motion.

On the plane θ = π/2 the real part of Z⁺ = q_z e^{iφ_z} gives the
generalized conic section

    lz²/Tk(ξ) = 1 + √(2E lz² + 1 - κ lz⁴) · cos((φ_z + m φ)/n)

which is inverted here in closed form for ξ (the κ-cotangent is monotone on
the chart, so every admissible right-hand side has exactly one preimage).
"""

from dataclasses import dataclass

import numpy as np

from . import kappa_math as km
from . import symmetries as sym
from .errors import DegenerateOrbitError, DomainError, NoSolutionError
from .model import energy_bounds

__all__ = [
    "ConicParams",
    "CIRCULAR",
    "BOUNDED",
    "UNBOUNDED",
    "discriminant",
    "planar_orbit_xi",
    "planar_phase",
    "conic_parameters",
    "theta_of_phi",
    "classify_orbit",
    "orbit_points",
    "cartesian_points",
    "closure_angle",
]

CIRCULAR = "circular"
BOUNDED = "bounded_closed"
UNBOUNDED = "unbounded"


def discriminant(params, E, lz):
    """2E lz² + 1 - κ lz⁴, i.e. 2 lz² |B±|²; negative below the minimum energy."""
    return 2.0 * E * lz**2 + 1.0 - params.kappa * lz**4


def planar_orbit_xi(params, E, lz, phi_z, phi):
    """ξ on the planar orbit at azimuth ``phi`` (scalar or array).

    ``phi`` is the unwrapped azimuth; ``phi_z`` the phase of Z⁺ (see
    :func:`planar_phase` for the value matching a given state when n > 1).
    Returns None (NaN entries for arrays) where the orbit does not reach that
    direction.
    """
    if lz == 0:
        raise DegenerateOrbitError("planar orbits need lz ≠ 0")
    disc = discriminant(params, E, lz)
    if disc < 0:
        if disc > -1e-12:
            disc = 0.0
        else:
            raise NoSolutionError(f"2E lz² + 1 - κ lz⁴ = {disc:g} < 0: E below the minimum")
    phi_arr = np.asarray(phi, dtype=float)
    u = (1.0 + np.sqrt(disc) * np.cos((phi_z + params.m * phi_arr) / params.n)) / lz**2
    kappa = params.kappa
    if kappa > 0:
        valid = np.isfinite(u)
    elif kappa < 0:
        valid = u > np.sqrt(-kappa)
    else:
        valid = u > 0
    xi = np.full_like(u, np.nan)
    if np.any(valid):
        xi[valid] = km.arcctk(kappa, u[valid])
    if phi_arr.ndim == 0:
        return None if not valid else float(xi)
    return xi


def planar_phase(params, p):
    """Unreduced orbit phase φ_z = n·arg(B⁻) - m·φ at a planar state.

    Reduced modulo 2π this is the phase of Z⁺. Keeping the unreduced value
    selects the n-th root branch that passes through ``p``, so that
    ``planar_orbit_xi(params, E, lz, planar_phase(params, p), φ)`` traces the
    orbit through ``p`` for all unwrapped φ.
    """
    z = p.as_array()
    b_minus = complex(sym.raw_b_planar(params, -1, z))
    return params.n * float(np.angle(b_minus)) - params.m * p.phi


@dataclass(frozen=True)
class ConicParams:
    """Parameters of the β = 1 conic.

    ``eccentricity_sq`` = 2E lz² + 1 may be negative on the hyperboloid (near
    the minimum energy); ``eccentricity`` is then NaN. ``amplitude`` is the
    coefficient of cos φ in  α/Tk(ξ) = 1 + amplitude·cos φ, equal to
    √(ε² - κ α²).
    """

    eccentricity_sq: float
    eccentricity: float
    semi_latus: float
    kappa: float
    amplitude: float
    regime: str = "ok"


def conic_parameters(kappa, E, lz):
    """Eccentricity, semi-latus rectum and curved-space amplitude."""
    if lz == 0:
        raise DegenerateOrbitError("lz = 0")
    e2 = 2.0 * E * lz**2 + 1.0
    alpha = lz**2
    amp_sq = e2 - kappa * alpha**2
    regime = "ok"
    if amp_sq < 0:
        amp = 0.0
        regime = "zero_amplitude"
    else:
        amp = float(np.sqrt(amp_sq))
    ecc = float(np.sqrt(e2)) if e2 >= 0 else float("nan")
    return ConicParams(e2, ecc, alpha, float(kappa), amp, regime)


def theta_of_phi(l, lz, lx=None, phi=0.0, tol=1e-9):
    """Polar angle along the orbit with L_y = 0, from cotθ = -(lx/lz) cos φ."""
    if lz == 0:
        raise DegenerateOrbitError("lz = 0: the relation is singular")
    if l <= abs(lz) * (1 + 1e-15):
        raise DegenerateOrbitError("l = lz: planar motion, θ = π/2 throughout")
    expected = np.sqrt(l**2 - lz**2)
    if lx is None:
        lx = expected
    elif abs(abs(lx) - expected) > tol * l:
        raise DomainError(f"|lx| = {abs(lx)} inconsistent with √(l² - lz²) = {expected}")
    cot = -(lx / lz) * np.cos(np.asarray(phi, dtype=float))
    theta = 0.5 * np.pi - np.arctan(cot)
    return float(theta) if np.ndim(theta) == 0 else theta


def classify_orbit(params, E, l):
    """'circular', 'bounded_closed' or 'unbounded' from the energy bands."""
    b = energy_bounds(params, l)
    scale = max(1.0, abs(b.e_min))
    if b.attained and abs(E - b.e_min) <= 1e-12 * scale:
        return CIRCULAR
    if E < b.e_min or (not b.attained and E <= b.e_min):
        raise NoSolutionError(f"E={E} below the minimum energy {b.e_min}")
    if b.e_escape is None or E < b.e_escape:
        return BOUNDED
    return UNBOUNDED


def orbit_points(params, E, lz, phi_z, phi_grid):
    """Planar curve sampled on ``phi_grid``; columns (φ, ξ, ξcosφ, ξsinφ).

    Directions the orbit never reaches are NaN rows (gaps in the polyline).
    """
    phi = np.asarray(phi_grid, dtype=float)
    xi = planar_orbit_xi(params, E, lz, phi_z, phi)
    return np.column_stack([phi, xi, xi * np.cos(phi), xi * np.sin(phi)])


def cartesian_points(params, states):
    """(x, y, z) = Sk(ξ)(sinθ cosφ, sinθ sinφ, cosθ) for an (N, 6) state array."""
    states = np.asarray(states, float)
    r = np.asarray(km.sk(params.kappa, states[:, 0]))
    th, ph = states[:, 1], states[:, 2]
    return np.column_stack([r * np.sin(th) * np.cos(ph), r * np.sin(th) * np.sin(ph), r * np.cos(th)])


def closure_angle(params):
    """Azimuth advance after which a bounded planar orbit closes: 2π n."""
    return 2.0 * np.pi * params.n
