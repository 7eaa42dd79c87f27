"""Shift and ladder functions and the constants of motion built from them.

Factorizations (all hold pointwise in phase space):

    H_ξ  = B⁺B⁻ + λ_ξ,       λ_ξ = -(1/l² - κ l²)/2
    -lz² = A⁺A⁻ - L²
    H_θ  = C⁺C⁻ + lz²
    H_φ  = D⁺D⁻

with l = √L² and lz = √H_φ = |p_φ| evaluated as phase-space functions, and

    X± = (A±)^m (B∓)^n,   Y± = C± D∓,   Z± = (D±)^m (B∓)^n  (planar, l -> lz).

Functions with the ``raw_`` prefix work on state arrays
of shape (6, ...) and do no validation; they feed the Poisson-bracket engine
and the trajectory diagnostics. The public per-point operations validate
their input.

D± uses √H_φ = |p_φ|. The closed forms Y± = -L_z(L_x ± i L_y) and the
bracket relations involving D± are then exact for p_φ > 0; a state with
p_φ < 0 is the mirror image (φ -> -φ) of one with p_φ > 0.
"""

from dataclasses import dataclass
from math import comb

import numpy as np

from . import kappa_math as km
from .errors import DegenerateOrbitError, DomainError
from .model import angular_sq, check_domain, hamiltonian_z

__all__ = [
    "ComplexConstant",
    "AngularMomentum",
    "PLANAR_TOL",
    "raw_b",
    "raw_b_planar",
    "raw_a",
    "raw_c",
    "raw_d",
    "raw_x",
    "raw_y",
    "raw_z",
    "ipow",
    "b_pm",
    "a_pm",
    "c_pm",
    "d_pm",
    "x_pm",
    "y_pm",
    "z_pm",
    "x_modulus",
    "y_modulus",
    "z_modulus",
    "lambda_xi",
    "angular_momentum",
    "runge_lenz",
    "x_from_runge_lenz",
    "z_from_runge_lenz",
    "phase_functions",
    "x_binomial",
]

SQRT2 = np.sqrt(2.0)
PLANAR_TOL = 1e-12


def _sign(sign):
    if sign in (1, "+", "plus"):
        return 1
    if sign in (-1, "-", "minus"):
        return -1
    raise ValueError(f"sign must be +1/-1 or '+'/'-', got {sign!r}")


def canonical_phase(angle):
    """Map an angle to [-π, π)."""
    return float((angle + np.pi) % (2 * np.pi) - np.pi)


@dataclass(frozen=True)
class ComplexConstant:
    """Value of a complex constant of motion, q e^{iα} with α in [-π, π)."""

    re: float
    im: float

    @classmethod
    def of(cls, z):
        z = complex(z)
        return cls(z.real, z.imag)

    @property
    def value(self):
        return complex(self.re, self.im)

    @property
    def modulus(self):
        return float(np.hypot(self.re, self.im))

    @property
    def phase(self):
        return canonical_phase(np.arctan2(self.im, self.re))


@dataclass(frozen=True)
class AngularMomentum:
    lx: float
    ly: float
    lz: float
    l_sq: float

    @property
    def vector(self):
        return np.array([self.lx, self.ly, self.lz])

    @property
    def azimuth(self):
        """Azimuthal angle of the vector (L_x, L_y) in [-π, π)."""
        return canonical_phase(np.arctan2(self.ly, self.lx))


def ipow(w, k):
    """w**k for a positive integer k by repeated multiplication."""
    out = w
    for _ in range(k - 1):
        out = out * w
    return out


def lambda_xi(kappa, ell):
    return -0.5 * (1.0 / ell**2 - kappa * ell**2)


# raw phase-space functions; z has shape (6, ...)


def raw_b(params, sign, z, ell=None):
    """B± = (∓iβp_ξ + l/Tk(ξ) - 1/l)/√2, l = √L² unless given."""
    xi, theta, _, p_xi, p_theta, p_phi = z
    if ell is None:
        ell = np.sqrt(angular_sq(theta, p_theta, p_phi))
    return (-sign * 1j * params.beta * p_xi + ell * km.ctk(params.kappa, xi) - 1.0 / ell) / SQRT2


def raw_b_planar(params, sign, z):
    """B± of the planar problem, with l replaced by lz = |p_φ|."""
    return raw_b(params, sign, z, ell=np.abs(z[5]))


def raw_a(sign, z):
    """A± = ∓i sinθ p_θ + √L² cosθ."""
    _, theta, _, _, p_theta, p_phi = z
    ell = np.sqrt(angular_sq(theta, p_theta, p_phi))
    return -sign * 1j * np.sin(theta) * p_theta + ell * np.cos(theta)


def raw_c(sign, z):
    """C± = ∓i p_θ + |p_φ| cotθ."""
    _, theta, _, _, p_theta, p_phi = z
    return -sign * 1j * p_theta + np.abs(p_phi) / np.tan(theta)


def raw_d(sign, z):
    """D± = |p_φ| e^{∓iφ}."""
    phi, p_phi = z[2], z[5]
    return np.abs(p_phi) * np.exp(-sign * 1j * phi)


def raw_x(params, sign, z):
    return ipow(raw_a(sign, z), params.m) * ipow(raw_b(params, -sign, z), params.n)


def raw_y(sign, z):
    return raw_c(sign, z) * raw_d(-sign, z)


def raw_z(params, sign, z):
    return ipow(raw_d(sign, z), params.m) * ipow(raw_b_planar(params, -sign, z), params.n)


# validated per-point operations


def _ell(p):
    ell = np.sqrt(p.l_sq)
    if not ell > 0:
        raise DegenerateOrbitError("zero angular momentum: the shift functions need l > 0")
    return ell


def b_pm(params, sign, p):
    """Shift function B± of the radial Hamiltonian at ``p``."""
    params.require_g_zero()
    check_domain(params, p)
    ell = _ell(p)
    return complex(raw_b(params, _sign(sign), p.as_array(), ell=ell))


def a_pm(sign, p):
    """Ladder function A± of the polar Hamiltonian."""
    _ell(p)
    if not 0 < p.theta < np.pi:
        raise DomainError("θ outside (0, π)")
    return complex(raw_a(_sign(sign), p.as_array()))


def c_pm(sign, p):
    """Shift function C± of the polar Hamiltonian."""
    if not 0 < p.theta < np.pi:
        raise DomainError("θ outside (0, π)")
    return complex(raw_c(_sign(sign), p.as_array()))


def d_pm(sign, p):
    """Ladder function D± of the azimuthal Hamiltonian."""
    if p.p_phi == 0:
        raise DegenerateOrbitError("D± needs p_φ ≠ 0")
    return complex(raw_d(_sign(sign), p.as_array()))


def _is_planar(p):
    l2 = p.l_sq
    return l2 - p.p_phi**2 <= PLANAR_TOL * max(l2, 1.0)


def x_pm(params, sign, p):
    """Constant of motion X± = (A±)^m (B∓)^n.

    Raises DegenerateOrbitError on planar states (l = lz), where A± vanishes
    and the planar constants Z± take over.
    """
    params.require_g_zero()
    check_domain(params, p)
    _ell(p)
    if _is_planar(p):
        raise DegenerateOrbitError("l = lz: X± vanishes on planar motion, use z_pm")
    return ComplexConstant.of(raw_x(params, _sign(sign), p.as_array()))


def y_pm(sign, p):
    """Constant of motion Y± = C± D∓ of the angular Hamiltonian."""
    if p.p_phi == 0:
        raise DegenerateOrbitError("Y± needs p_φ ≠ 0")
    if not 0 < p.theta < np.pi:
        raise DomainError("θ outside (0, π)")
    return ComplexConstant.of(raw_y(_sign(sign), p.as_array()))


def z_pm(params, sign, p, tol=1e-12):
    """Planar constant of motion Z± = (D±)^m (B∓)^n with lz in B±."""
    params.require_g_zero()
    check_domain(params, p)
    if abs(p.theta - np.pi / 2) > tol or abs(p.p_theta) > tol:
        raise DomainError("Z± is defined on the plane θ = π/2, p_θ = 0")
    if p.p_phi == 0:
        raise DegenerateOrbitError("Z± needs p_φ ≠ 0")
    return ComplexConstant.of(raw_z(params, _sign(sign), p.as_array()))


def x_modulus(params, E, ell, lz):
    """|X±| = (l² - lz²)^{m/2} (E - λ_ξ)^{n/2}."""
    return (ell**2 - lz**2) ** (params.m / 2) * (E - lambda_xi(params.kappa, ell)) ** (params.n / 2)


def y_modulus(ell, lz):
    """|Y±| = lz √(l² - lz²)."""
    return abs(lz) * np.sqrt(ell**2 - lz**2)


def z_modulus(params, E, lz):
    """|Z±| = lz^m (E - λ_ξ(lz))^{n/2}."""
    return abs(lz) ** params.m * (E - lambda_xi(params.kappa, lz)) ** (params.n / 2)


def angular_momentum(p):
    """Cartesian components of the angular momentum from spherical momenta."""
    if not 0 < p.theta < np.pi:
        raise DomainError("θ outside (0, π)")
    cot = np.cos(p.theta) / np.sin(p.theta)
    cphi, sphi = np.cos(p.phi), np.sin(p.phi)
    lx = -sphi * p.p_theta - cot * cphi * p.p_phi
    ly = cphi * p.p_theta - cot * sphi * p.p_phi
    return AngularMomentum(float(lx), float(ly), float(p.p_phi), p.l_sq)


def _cartesian(p):
    """Flat-space position and momentum vectors, with r = ξ."""
    st, ct = np.sin(p.theta), np.cos(p.theta)
    sp, cp = np.sin(p.phi), np.cos(p.phi)
    r_hat = np.array([st * cp, st * sp, ct])
    theta_hat = np.array([ct * cp, ct * sp, -st])
    phi_hat = np.array([-sp, cp, 0.0])
    r = p.xi
    mom = p.p_xi * r_hat + (p.p_theta / r) * theta_hat + (p.p_phi / (r * st)) * phi_hat
    return r * r_hat, mom, r_hat


def runge_lenz(p):
    """Runge–Lenz vector p × L - r̂ of the flat (κ = 0, β = 1) problem.

    Built from the Cartesian position and momentum, not from the shift and
    ladder functions, so it serves as an independent check of X± and Z±.
    """
    pos, mom, r_hat = _cartesian(p)
    ang = np.cross(pos, mom)
    return np.cross(mom, ang) - r_hat


def x_from_runge_lenz(sign, p):
    """X± = A_z/√2 ± i (L × A)_z / (√2 l) for κ = 0, β = 1."""
    s = _sign(sign)
    pos, mom, _ = _cartesian(p)
    ang = np.cross(pos, mom)
    rl = runge_lenz(p)
    ell = np.sqrt(p.l_sq)
    return complex(rl[2] / SQRT2, s * np.cross(ang, rl)[2] / (SQRT2 * ell))


def z_from_runge_lenz(sign, p):
    """Z± = A_x/√2 ∓ i A_y/√2 on the plane, κ = 0, β = 1."""
    s = _sign(sign)
    rl = runge_lenz(p)
    return complex(rl[0] / SQRT2, -s * rl[1] / SQRT2)


def phase_functions(params, p):
    """Phases a, b, c, d of A⁺, B⁺, C⁺, D⁺ at ``p``.

    Along a trajectory m·a - n·b ≡ arg X⁺ and c - d ≡ arg Y⁺ (mod 2π).
    """
    z = p.as_array()
    return {
        "a": float(np.angle(raw_a(1, z))),
        "b": float(np.angle(raw_b(params, 1, z))),
        "c": float(np.angle(raw_c(1, z))),
        "d": float(np.angle(raw_d(1, z))),
    }


def x_binomial(params, sign, p):
    """Real and imaginary parts of X± from the binomial expansion.

    With A± = a ∓ i α and B∓ = b ± i β', X± expands into a double sum over
    powers of the real parts (a, b) and imaginary parts (α, β'). Terms with an
    even total power of i are real, odd ones imaginary; α and β' are linear in
    p_θ and p_ξ, so grouping by parity gives constants polynomial in those
    momenta (apart from the √L² carried by a and b).
    """
    s = _sign(sign)
    z = p.as_array()
    a_c = complex(raw_a(s, z))
    b_c = complex(raw_b(params, -s, z))
    a_re, a_im = a_c.real, a_c.imag
    b_re, b_im = b_c.real, b_c.imag
    re = 0.0
    im = 0.0
    for j in range(params.m + 1):
        ta = comb(params.m, j) * a_re ** (params.m - j) * a_im**j
        for k in range(params.n + 1):
            term = ta * comb(params.n, k) * b_re ** (params.n - k) * b_im**k
            power = j + k
            # i^power = (-1)^(power//2) times 1 or i
            term *= -1 if (power // 2) % 2 else 1
            if power % 2 == 0:
                re += term
            else:
                im += term
    return float(re), float(im)


def hamiltonian_parts(params, p):
    """(H, L², H_φ) at ``p``."""
    z = p.as_array()
    return float(hamiltonian_z(params, z)), p.l_sq, p.p_phi**2
