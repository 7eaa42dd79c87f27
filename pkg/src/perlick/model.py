"""Hamiltonians, charts, effective potential and turning points.

Two canonical charts are used:

* the unified chart (ξ, θ, φ, p_ξ, p_θ, p_φ), where a single Hamiltonian
  ``H = β² p_ξ²/2 + L²/(2 Sk²(ξ)) - 1/Tk(ξ)`` covers the whole manifold;
* the radial chart (r, θ, φ, p_r, p_θ, p_φ) with r = Sk(ξ), p_r = p_ξ/Ck(ξ),
  where the Hamiltonian splits into two branches H̃∓ (north/south hemisphere).

The curvature parameter is κ throughout. The metric constant of the radial
chart is K = -κ, so "K < 0 restricts r" becomes "κ > 0 restricts r < 1/√κ".
"""

from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd

import numpy as np
from scipy.optimize import bisect

from . import kappa_math as km
from .errors import DomainError, NoSolutionError

__all__ = [
    "DOMAIN_MARGIN",
    "ModelParams",
    "PhasePoint",
    "RPoint",
    "EnergyBounds",
    "TurningPoints",
    "angular_sq",
    "hamiltonian_z",
    "hamiltonian_xi",
    "hamiltonian_r",
    "check_domain",
    "to_r_coords",
    "to_xi_coords",
    "effective_potential",
    "energy_bounds",
    "turning_points",
]

DOMAIN_MARGIN = 1e-9
NORTH = "north"
SOUTH = "south"


@dataclass(frozen=True)
class ModelParams:
    """Curvature κ, rational β = m/n (reduced on construction) and offset G."""

    kappa: float
    m: int = 1
    n: int = 1
    G: float = 0.0

    def __post_init__(self):
        m, n = int(self.m), int(self.n)
        if m < 1 or n < 1 or m != self.m or n != self.n:
            raise DomainError(f"β = m/n needs positive integers, got m={self.m}, n={self.n}")
        g = gcd(m, n)
        object.__setattr__(self, "m", m // g)
        object.__setattr__(self, "n", n // g)
        object.__setattr__(self, "kappa", float(self.kappa))
        object.__setattr__(self, "G", float(self.G))
        if not np.isfinite(self.kappa):
            raise DomainError("κ must be finite")

    @classmethod
    def from_beta(cls, kappa, beta, G=0.0):
        """Build from a β given as "m/n", an int, or a Fraction."""
        frac = Fraction(beta) if not isinstance(beta, float) else Fraction(beta).limit_denominator(1000)
        return cls(kappa, frac.numerator, frac.denominator, G)

    @property
    def beta(self):
        return self.m / self.n

    def require_g_zero(self):
        if self.G != 0.0:
            raise DomainError("the factorization constants are only defined for G = 0")


@dataclass(frozen=True)
class PhasePoint:
    """Canonical state in the unified chart.

    φ is not wrapped here: integrated trajectories carry the unwrapped angle.
    """

    xi: float
    theta: float
    phi: float
    p_xi: float
    p_theta: float
    p_phi: float

    def as_array(self):
        return np.array([self.xi, self.theta, self.phi, self.p_xi, self.p_theta, self.p_phi])

    @classmethod
    def from_array(cls, z):
        return cls(*(float(v) for v in z))

    @property
    def l_sq(self):
        return float(angular_sq(self.theta, self.p_theta, self.p_phi))


@dataclass(frozen=True)
class RPoint:
    """Canonical state in the radial chart plus the hemisphere tag."""

    r: float
    theta: float
    phi: float
    p_r: float
    p_theta: float
    p_phi: float
    hemisphere: str = NORTH

    def __post_init__(self):
        if self.hemisphere not in (NORTH, SOUTH):
            raise DomainError(f"hemisphere must be 'north' or 'south', got {self.hemisphere!r}")


@dataclass(frozen=True)
class EnergyBounds:
    """Energy band of bounded motion for a fixed total angular momentum.

    ``e_min`` is the potential minimum (circular orbits). ``e_escape`` is
    None for κ > 0 where every orbit is bounded. If ``attained`` is False
    (κ < 0 with l²√|κ| >= 1) the potential has no minimum, ``e_min`` is its
    infimum and there is no bounded motion at all.
    """

    e_min: float
    e_escape: float | None
    xi_circular: float | None
    attained: bool = True


@dataclass(frozen=True)
class TurningPoints:
    roots: tuple
    circular: bool = False
    bounded: bool = True
    multiplicity: tuple = field(default=())

    def __iter__(self):
        return iter(self.roots)

    def __len__(self):
        return len(self.roots)

    def __getitem__(self, i):
        return self.roots[i]


def angular_sq(theta, p_theta, p_phi):
    """L² = p_θ² + p_φ²/sin²θ (works on arrays)."""
    return p_theta**2 + p_phi**2 / np.sin(theta) ** 2


def hamiltonian_z(params, z):
    """Unified Hamiltonian on a raw state array of shape (6, ...)."""
    xi, theta, _, p_xi, p_theta, p_phi = z
    l2 = angular_sq(theta, p_theta, p_phi)
    s = km.sk(params.kappa, xi)
    return 0.5 * params.beta**2 * p_xi**2 + 0.5 * l2 / s**2 - km.ctk(params.kappa, xi) + params.G


def check_domain(params, p, margin=DOMAIN_MARGIN):
    """Raise DomainError unless ``p`` lies strictly inside the unified chart."""
    top = km.xi_max(params.kappa)
    if not (margin < p.xi < top - margin):
        raise DomainError(f"ξ={p.xi!r} outside (0, {top}) for κ={params.kappa}")
    if p.p_phi != 0.0 and not (margin < p.theta < np.pi - margin):
        raise DomainError(f"θ={p.theta!r} outside (0, π) with p_φ ≠ 0")
    if not np.all(np.isfinite(p.as_array())):
        raise DomainError("non-finite phase point")


def hamiltonian_xi(params, p):
    """Energy of a unified-chart phase point."""
    check_domain(params, p)
    return float(hamiltonian_z(params, p.as_array()))


def hamiltonian_r(params, p):
    """Energy in the radial chart: H̃⁻ on the north hemisphere, H̃⁺ on the south."""
    K = -params.kappa
    if p.r <= 0:
        raise DomainError("r must be positive")
    if not (0 < p.theta < np.pi) and p.p_phi != 0:
        raise DomainError("θ outside (0, π)")
    root_arg = 1.0 + K * p.r**2
    if root_arg < 0:
        raise DomainError(f"1 + K r² = {root_arg:g} < 0: r beyond 1/√κ")
    l2 = angular_sq(p.theta, p.p_theta, p.p_phi)
    sign = -1.0 if p.hemisphere == NORTH else 1.0
    return float(
        0.5 * params.beta**2 * root_arg * p.p_r**2
        + 0.5 * l2 / p.r**2
        + params.G
        + sign * np.sqrt(root_arg) / p.r
    )


def to_r_coords(params, p):
    """(ξ, p_ξ) -> (r, p_r) with r = Sk(ξ), p_r = p_ξ/Ck(ξ); angles unchanged."""
    check_domain(params, p)
    c = km.ck(params.kappa, p.xi)
    if abs(c) < km.POLE_EPS:
        raise km.PoleError("p_r is undefined on the equator Ck(ξ) = 0")
    eq = km.equator(params.kappa)
    hemi = SOUTH if eq is not None and p.xi > eq else NORTH
    return RPoint(
        r=km.sk(params.kappa, p.xi),
        theta=p.theta,
        phi=p.phi,
        p_r=p.p_xi / c,
        p_theta=p.p_theta,
        p_phi=p.p_phi,
        hemisphere=hemi,
    )


def to_xi_coords(params, p):
    """Inverse of :func:`to_r_coords`; the hemisphere tag picks the branch for κ > 0."""
    kappa = params.kappa
    if p.r <= 0:
        raise DomainError("r must be positive")
    if kappa > 0:
        s = np.sqrt(kappa)
        if p.r * s >= 1.0:
            raise DomainError(f"r={p.r} must be below 1/√κ")
        xi = np.arcsin(s * p.r) / s
        if p.hemisphere == SOUTH:
            xi = np.pi / s - xi
    else:
        if p.hemisphere == SOUTH:
            raise DomainError("the south branch only exists for κ > 0")
        xi = np.arcsinh(np.sqrt(-kappa) * p.r) / np.sqrt(-kappa) if kappa < 0 else p.r
    xi = float(xi)
    return PhasePoint(xi, p.theta, p.phi, p.p_r * km.ck(kappa, xi), p.p_theta, p.p_phi)


def effective_potential(params, ell, xi):
    """V_eff(ξ) = l²/(2 Sk²) - 1/Tk (+ G)."""
    if ell < 0:
        raise DomainError("l must be non-negative")
    xi_arr = np.asarray(xi, dtype=float)
    top = km.xi_max(params.kappa)
    if np.any(xi_arr <= DOMAIN_MARGIN) or np.any(xi_arr >= top - DOMAIN_MARGIN):
        raise DomainError("ξ outside the open chart interval")
    s = np.asarray(km.sk(params.kappa, xi_arr))
    out = 0.5 * ell**2 / s**2 - np.asarray(km.ctk(params.kappa, xi_arr)) + params.G
    return float(out) if out.ndim == 0 else out


def energy_bounds(params, ell):
    """Minimum energy and escape threshold for total angular momentum ``ell``.

    Writing u = 1/Tk(ξ) and using 1/Sk² = u² + κ, the potential is the
    parabola l²(u² + κ)/2 - u, minimised at u = 1/l².
    """
    if not ell > 0:
        raise DomainError("l = 0 has no centrifugal barrier; collision orbits are not handled")
    kappa = params.kappa
    u_star = 1.0 / ell**2
    e_min = -0.5 * (1.0 / ell**2 - kappa * ell**2) + params.G
    if kappa > 0:
        e_escape = None
    else:
        e_escape = -np.sqrt(-kappa) + params.G
    if kappa < 0 and u_star <= np.sqrt(-kappa):
        return EnergyBounds(e_escape, e_escape, None, attained=False)
    return EnergyBounds(e_min, e_escape, float(km.arcctk(kappa, u_star)), attained=True)


def _bisect_root(f, a, b):
    return float(bisect(f, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=400))


def _scan(f, xs):
    vals = [f(x) for x in xs]
    for a, b, fa, fb in zip(xs[:-1], xs[1:], vals[:-1], vals[1:]):
        if fa == 0.0:
            return float(a)
        if fa * fb < 0:
            return _bisect_root(f, a, b)
    if vals[-1] == 0.0:
        return float(xs[-1])
    return None


def turning_points(params, ell, E, cells=64):
    """Sorted ξ roots of E = V_eff(ξ).

    Bounded motion gives two roots, unbounded motion (κ <= 0, E >= E_escape)
    gives one, and E = E_min gives the circular radius once with
    ``circular=True`` and multiplicity 2.
    """
    bounds = energy_bounds(params, ell)
    kappa = params.kappa
    scale = max(1.0, abs(bounds.e_min))
    if E < bounds.e_min - 1e-12 * scale or (not bounds.attained and E <= bounds.e_min):
        raise NoSolutionError(f"E={E} is below the potential minimum {bounds.e_min}")
    if bounds.attained and abs(E - bounds.e_min) <= 1e-12 * scale:
        return TurningPoints((bounds.xi_circular,), circular=True, bounded=True, multiplicity=(2,))

    def f(x):
        return effective_potential(params, ell, x) - E

    lo = 2 * DOMAIN_MARGIN
    unbounded = bounds.e_escape is not None and E >= bounds.e_escape
    half = cells // 2

    if not bounds.attained:
        hi = 1.0
        while f(hi) >= 0:
            hi *= 2.0
        root = _scan(f, np.geomspace(lo, hi, cells + 1))
        return TurningPoints((root,), bounded=False, multiplicity=(1,))

    x_star = bounds.xi_circular
    inner = _scan(f, np.geomspace(lo, x_star, half + 1))
    if unbounded:
        return TurningPoints((inner,), bounded=False, multiplicity=(1,))

    if kappa > 0:
        top = km.xi_max(kappa)
        # cluster towards the far pole, mirrored log spacing
        right = top - np.geomspace(top - x_star, lo, half + 1)
    else:
        hi = 2.0 * x_star
        while f(hi) <= 0:
            hi *= 2.0
        right = np.geomspace(x_star, hi, half + 1)
    outer = _scan(f, right)
    if inner is None or outer is None:
        raise NoSolutionError(f"failed to bracket turning points for E={E}")
    return TurningPoints((inner, outer), bounded=True, multiplicity=(1, 1))
