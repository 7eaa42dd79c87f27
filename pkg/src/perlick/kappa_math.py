"""Curvature-dependent trigonometry.

The three functions interpolate between spherical (κ > 0), flat (κ = 0) and
hyperbolic (κ < 0) geometry::

    Ck(u) = cos(√κ u),        1,    cosh(√-κ u)
    Sk(u) = sin(√κ u)/√κ,     u,    sinh(√-κ u)/√-κ
    Tk(u) = Sk(u)/Ck(u)

and satisfy Ck² + κ Sk² = 1, Ck' = -κ Sk, Sk' = Ck.

All functions accept scalars or numpy arrays for ``u``; ``kappa`` is a plain
float. The flat case is selected by ``kappa == 0`` exactly.
"""

import numpy as np

from .errors import DomainError, PoleError

__all__ = [
    "POLE_EPS",
    "ck",
    "sk",
    "tk",
    "ctk",
    "dck",
    "dsk",
    "arcctk",
    "xi_max",
    "equator",
]

POLE_EPS = 1e-14


def _scalar(x):
    return float(x) if np.ndim(x) == 0 else x


def ck(kappa, u):
    """κ-cosine."""
    u = np.asarray(u, dtype=float)
    if kappa > 0:
        out = np.cos(np.sqrt(kappa) * u)
    elif kappa < 0:
        out = np.cosh(np.sqrt(-kappa) * u)
    else:
        out = np.ones_like(u)
    return _scalar(out)


def sk(kappa, u):
    """κ-sine."""
    u = np.asarray(u, dtype=float)
    if kappa > 0:
        s = np.sqrt(kappa)
        out = np.sin(s * u) / s
    elif kappa < 0:
        s = np.sqrt(-kappa)
        out = np.sinh(s * u) / s
    else:
        out = u.copy()
    return _scalar(out)


def tk(kappa, u, eps=POLE_EPS):
    """κ-tangent Sk/Ck.

    Raises PoleError where |Ck| < eps instead of returning a huge value.
    """
    c = np.asarray(ck(kappa, u))
    if np.any(np.abs(c) < eps):
        raise PoleError(f"κ-tangent pole: |Ck(u)| < {eps:g} (κ={kappa})")
    return _scalar(np.asarray(sk(kappa, u)) / c)


def ctk(kappa, u):
    """κ-cotangent Ck/Sk (= 1/Tk), regular across the κ > 0 equator.

    Every Hamiltonian in this package uses 1/Tk rather than Tk, so this is the
    form evaluated internally. Raises PoleError at Sk = 0.
    """
    s = np.asarray(sk(kappa, u))
    if np.any(s == 0.0):
        raise PoleError("κ-cotangent pole: Sk(u) = 0")
    return _scalar(np.asarray(ck(kappa, u)) / s)


def dck(kappa, u):
    """d Ck / du = -κ Sk(u)."""
    return _scalar(-kappa * np.asarray(sk(kappa, u)))


def dsk(kappa, u):
    """d Sk / du = Ck(u)."""
    return ck(kappa, u)


def xi_max(kappa):
    """Upper end of the ξ chart: π/√κ for κ > 0, +inf otherwise."""
    return np.pi / np.sqrt(kappa) if kappa > 0 else np.inf


def equator(kappa):
    """ξ where Ck vanishes (κ > 0 only), separating the two hemispheres."""
    if kappa <= 0:
        return None
    return 0.5 * np.pi / np.sqrt(kappa)


def arcctk(kappa, v):
    """Inverse of the κ-cotangent on the chart interval.

    Returns ξ with Ck(ξ)/Sk(ξ) = v. For κ > 0 every real v has exactly one
    preimage in (0, π/√κ); v < 0 lands on the south hemisphere. For κ = 0
    we need v > 0 and for κ < 0 we need v > √-κ.
    """
    v = np.asarray(v, dtype=float)
    if kappa > 0:
        s = np.sqrt(kappa)
        # arccot with range (0, π)
        out = (0.5 * np.pi - np.arctan(v / s)) / s
    elif kappa < 0:
        s = np.sqrt(-kappa)
        if np.any(v <= s):
            raise DomainError(f"κ-cotangent value must exceed √|κ| = {s:g}")
        out = np.arctanh(s / v) / s
    else:
        if np.any(v <= 0):
            raise DomainError("κ-cotangent value must be positive for κ = 0")
        out = 1.0 / v
    return _scalar(out)
