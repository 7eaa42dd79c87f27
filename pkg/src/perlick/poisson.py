"""Numerical Poisson brackets and verification of the constants' algebra.

Brackets are taken in whatever canonical chart the phase functions are
written in; the ordering of a state array is (q1, q2, q3, p1, p2, p3), i.e.
(ξ, θ, φ, p_ξ, p_θ, p_φ) for the unified chart.

Partial derivatives use the fourth-order central difference

    D(h) = (f(x-2h) - 8 f(x-h) + 8 f(x+h) - f(x+2h)) / 12h

at h, h/2, h/4 followed by two Richardson levels (removing the h⁴ and h⁶
error terms). The base step is h_i = 1e-4 · max(1, |x_i|). All stencil
evaluations for all sample points go through one vectorized call of each
phase function.
"""

from dataclasses import dataclass, field
import logging

import numpy as np

from . import kappa_math as km
from . import symmetries as sym
from .errors import StencilDomainError
from .model import angular_sq, hamiltonian_z

__all__ = [
    "PhaseFunction",
    "BracketReport",
    "BASE_STEP",
    "gradient",
    "bracket",
    "bracket_batch",
    "bracket_function",
    "chart_mask",
    "sample_points",
    "verify_relation",
    "algebra_relations",
    "verify_full_algebra",
]

log = logging.getLogger(__name__)

BASE_STEP = 1e-4
_LEVELS = (1.0, 0.5, 0.25)
_OFFSETS = np.array([-2.0, -1.0, 1.0, 2.0])
_WEIGHTS = np.array([1.0, -8.0, 8.0, -1.0]) / 12.0


@dataclass(frozen=True)
class PhaseFunction:
    """A named scalar (real or complex) function of a state array (6, ...)."""

    name: str
    fn: object

    def __call__(self, z):
        return self.fn(z)


def _as_batch(points):
    z = np.asarray(points, dtype=float)
    if z.ndim == 1:
        z = z[:, None]
    if z.shape[0] != 6:
        raise ValueError(f"state arrays must have leading dimension 6, got {z.shape}")
    return z


def _points_array(points):
    """Accept PhasePoints, a (6, N) array, or an (N, 6) list of rows."""
    if isinstance(points, np.ndarray):
        return _as_batch(points)
    rows = [p.as_array() if hasattr(p, "as_array") else np.asarray(p, float) for p in points]
    if not rows:
        raise ValueError("empty sample set")
    return np.stack(rows, axis=1)


def gradient(f, points, domain=None, base_step=BASE_STEP):
    """Gradient of ``f`` at each column of ``points``; returns shape (6, N).

    ``domain`` is an optional mask function on state arrays; if any stencil
    point falls outside it StencilDomainError is raised.
    """
    z = _as_batch(points)
    npts = z.shape[1]
    steps = base_step * np.maximum(1.0, np.abs(z))  # (6, N)
    # stencil[c, i, lvl, k, n]: coordinate c of the point displaced along axis i
    disp = np.zeros((6, 6, len(_LEVELS), len(_OFFSETS), npts))
    for i in range(6):
        for li, lvl in enumerate(_LEVELS):
            disp[i, i, li] = _OFFSETS[:, None] * (lvl * steps[i])[None, :]
    stencil = z[:, None, None, None, :] + disp
    flat = stencil.reshape(6, -1)
    if domain is not None and not np.all(domain(flat)):
        raise StencilDomainError("finite-difference stencil leaves the chart")
    vals = np.asarray(f(flat)).reshape(6, len(_LEVELS), len(_OFFSETS), npts)
    d = np.einsum("ilkn,k->iln", vals, _WEIGHTS) / (
        np.array(_LEVELS)[None, :, None] * steps[:, None, :]
    )
    r1a = (16.0 * d[:, 1] - d[:, 0]) / 15.0
    r1b = (16.0 * d[:, 2] - d[:, 1]) / 15.0
    return (64.0 * r1b - r1a) / 63.0


def bracket_batch(f, g, points, domain=None):
    """{f, g} = Σ ∂f/∂q ∂g/∂p - ∂f/∂p ∂g/∂q at each point of a batch."""
    df = gradient(f, points, domain)
    dg = gradient(g, points, domain)
    return np.sum(df[:3] * dg[3:] - df[3:] * dg[:3], axis=0)


def bracket(f, g, p, domain=None):
    """Poisson bracket of two phase functions at a single PhasePoint."""
    z = p.as_array() if hasattr(p, "as_array") else np.asarray(p, float)
    val = bracket_batch(f, g, z, domain)[0]
    return complex(val)


def bracket_function(f, g, domain=None):
    """{f, g} as a new PhaseFunction (used for nested brackets)."""
    name = f"{{{getattr(f, 'name', 'f')},{getattr(g, 'name', 'g')}}}"

    def fn(z):
        z = np.asarray(z, float)
        shape = z.shape[1:]
        out = bracket_batch(f, g, z.reshape(6, -1), domain)
        return out.reshape(shape)

    return PhaseFunction(name, fn)


@dataclass
class BracketReport:
    relation: str
    n: int
    max_abs: float
    max_rel: float
    tol: float
    failures: list = field(default_factory=list)

    @property
    def passed(self):
        return not self.failures

    def to_dict(self):
        return {
            "relation": self.relation,
            "n": self.n,
            "max_abs": self.max_abs,
            "max_rel": self.max_rel,
            "tol": self.tol,
            "failures": self.failures,
        }


def verify_relation(lhs, rhs, points, tol=1e-6, name=None, domain=None):
    """Check {f, g} = rhs at every sample point.

    ``lhs`` is the pair (f, g). The relative residual divides by
    max(1, |{f,g}|, |rhs|); points above ``tol`` are listed as failures.
    """
    f, g = lhs
    z = _points_array(points)
    if z.shape[1] == 0:
        raise ValueError("empty sample set")
    left = bracket_batch(f, g, z, domain)
    right = np.broadcast_to(np.asarray(rhs(z), dtype=complex), left.shape)
    res = np.abs(left - right)
    scale = np.maximum(1.0, np.maximum(np.abs(left), np.abs(right)))
    rel = res / scale
    bad = np.nonzero(~(rel <= tol))[0]
    failures = [{"index": int(i), "abs": float(res[i]), "rel": float(rel[i])} for i in bad]
    if name is None:
        name = f"{{{getattr(f, 'name', 'f')},{getattr(g, 'name', 'g')}}}"
    return BracketReport(name, int(z.shape[1]), float(res.max()), float(rel.max()), tol, failures)


def chart_mask(params, margin=0.0):
    """Mask function: True where a state lies inside the unified chart."""
    top = km.xi_max(params.kappa)

    def mask(z):
        xi, theta = z[0], z[1]
        return (xi > margin) & (xi < top - margin) & (theta > margin) & (theta < np.pi - margin)

    return mask


def sample_points(params, count, seed=0, planar=False, box=None, guard=1e-2):
    """Seeded rejection sampling of unified-chart states, shape (6, count).

    Points within ``guard`` of ξ = 0, the far pole, the κ > 0 equator or
    θ ∈ {0, π} are discarded. ``p_φ`` is drawn positive. With ``planar``
    the states have θ = π/2 and p_θ = 0.
    """
    rng = np.random.default_rng(seed)
    top = km.xi_max(params.kappa)
    default = {
        "xi": (0.2, min(2.0, top - 0.2)),
        "theta": (0.3, np.pi - 0.3),
        "phi": (-np.pi, np.pi),
        "p_xi": (-1.0, 1.0),
        "p_theta": (-1.0, 1.0),
        "p_phi": (0.1, 1.0),
    }
    if box:
        default.update(box)
    eq = km.equator(params.kappa)
    keys = ("xi", "theta", "phi", "p_xi", "p_theta", "p_phi")
    out = []
    while len(out) < count:
        z = np.array([rng.uniform(*default[k]) for k in keys])
        if planar:
            z[1], z[4] = np.pi / 2, 0.0
        if z[0] < guard or z[0] > top - guard:
            continue
        if eq is not None and abs(z[0] - eq) < guard:
            continue
        if z[1] < guard or z[1] > np.pi - guard:
            continue
        out.append(z)
    return np.stack(out, axis=1)


def _library(params):
    """Phase functions of the model, keyed by short names."""
    kappa, beta, m, n = params.kappa, params.beta, params.m, params.n

    def l2(z):
        return angular_sq(z[1], z[4], z[5])

    funcs = {
        "H": lambda z: hamiltonian_z(params, z),
        "H_xi": lambda z: hamiltonian_z(params, z),
        "H_thetaphi": l2,
        "H_theta": l2,
        "H_phi": lambda z: z[5] ** 2,
    }
    for s, tag in ((1, "+"), (-1, "-")):
        funcs["A" + tag] = lambda z, s=s: sym.raw_a(s, z)
        funcs["B" + tag] = lambda z, s=s: sym.raw_b(params, s, z)
        funcs["C" + tag] = lambda z, s=s: sym.raw_c(s, z)
        funcs["D" + tag] = lambda z, s=s: sym.raw_d(s, z)
        funcs["X" + tag] = lambda z, s=s: sym.raw_x(params, s, z)
        funcs["Y" + tag] = lambda z, s=s: sym.raw_y(s, z)
        funcs["Z" + tag] = lambda z, s=s: sym.raw_z(params, s, z)
    funcs = {k: PhaseFunction(k, v) for k, v in funcs.items()}

    def ell(z):
        return np.sqrt(l2(z))

    def sphi(z):
        return np.abs(z[5])

    def sk2(z):
        return km.sk(kappa, z[0]) ** 2

    def shifted_energy(z):
        return hamiltonian_z(params, z) + 0.5 * (1.0 / l2(z) - kappa * l2(z))

    helpers = {"ell": ell, "sphi": sphi, "sk2": sk2, "shifted": shifted_energy, "l2": l2}
    return funcs, helpers, (kappa, beta, m, n)


def algebra_relations(params):
    """All bracket relations checked by :func:`verify_full_algebra`.

    Returns a list of (name, f, g, rhs, sample_kind) with sample_kind one of
    "general", "near_planar_excluded" or "planar".
    """
    F, h, (kappa, beta, m, n) = _library(params)
    ell, sphi, sk2, shifted, l2 = h["ell"], h["sphi"], h["sk2"], h["shifted"], h["l2"]
    zero = lambda z: np.zeros(np.shape(z)[1:])  # noqa: E731
    rels = []

    def add(name, f, g, rhs, kind="general"):
        rels.append((name, F[f], F[g], rhs, kind))

    # commuting with the Hamiltonian
    for c in ("H_thetaphi", "H_phi", "X+", "X-", "Y+", "Y-"):
        add(f"{{H,{c}}}=0", "H", c, zero)
    for s, t in ((1, "+"), (-1, "-")):
        o = "-" if t == "+" else "+"
        add(f"{{H_thetaphi,Y{t}}}=0", "H_thetaphi", "Y" + t, zero)
        add(
            f"{{H_thetaphi,X{t}}}={t}2im sqrt(H_thetaphi) X{t}",
            "H_thetaphi",
            "X" + t,
            lambda z, s=s, t=t: s * 2j * m * ell(z) * F["X" + t](z),
        )
        add(
            f"{{H_phi,Y{t}}}={o}2i sqrt(H_phi) Y{t}",
            "H_phi",
            "Y" + t,
            lambda z, s=s, t=t: -s * 2j * sphi(z) * F["Y" + t](z),
        )
        add(f"{{H_phi,X{t}}}=0", "H_phi", "X" + t, zero)

    add(
        "{Y+,Y-}=2i sqrt(H_phi)(H_thetaphi-2H_phi)",
        "Y+",
        "Y-",
        lambda z: 2j * sphi(z) * (l2(z) - 2 * z[5] ** 2),
    )

    def xx_rhs(z):
        diff = l2(z) - z[5] ** 2
        e = shifted(z)
        first = 1j * m * n * diff**m * e ** (n - 1) * (kappa * ell(z) + 1.0 / ell(z) ** 3)
        second = -2j * m**2 * diff ** (m - 1) * e**n * ell(z)
        return first + second

    add("{X+,X-}", "X+", "X-", xx_rhs)
    for s, t in ((1, "+"), (-1, "-")):
        o = "-" if t == "+" else "+"
        add(
            f"{{X{t},Y{t}}}={o}im/(sqrt(H_thetaphi)+sqrt(H_phi)) X{t}Y{t}",
            "X" + t,
            "Y" + t,
            lambda z, s=s, t=t: -s * 1j * m / (ell(z) + sphi(z)) * F["X" + t](z) * F["Y" + t](z),
        )
        add(
            f"{{X{t},Y{o}}}={o}im/(sqrt(H_thetaphi)-sqrt(H_phi)) X{t}Y{o}",
            "X" + t,
            "Y" + o,
            lambda z, s=s, t=t, o=o: -s * 1j * m / (ell(z) - sphi(z)) * F["X" + t](z) * F["Y" + o](z),
            kind="near_planar_excluded",
        )

    # building blocks
    add("{B-,B+}=i beta l/Sk^2", "B-", "B+", lambda z: 1j * beta * ell(z) / sk2(z))
    add("{A-,A+}=2i sqrt(H_theta)", "A-", "A+", lambda z: 2j * ell(z))
    add("{C-,C+}=2i lz/sin^2", "C-", "C+", lambda z: 2j * sphi(z) / np.sin(z[1]) ** 2)
    add("{D-,D+}=2i sqrt(H_phi)", "D-", "D+", lambda z: 2j * sphi(z))
    for s, t in ((1, "+"), (-1, "-")):
        add(
            f"{{H_xi,B{t}}}={t}i beta l/Sk^2 B{t}",
            "H_xi",
            "B" + t,
            lambda z, s=s, t=t: s * 1j * beta * ell(z) / sk2(z) * F["B" + t](z),
        )
        add(
            f"{{H,A{t}}}={t}i sqrt(H_thetaphi)/Sk^2 A{t}",
            "H",
            "A" + t,
            lambda z, s=s, t=t: s * 1j * ell(z) / sk2(z) * F["A" + t](z),
        )
        add(
            f"{{H_theta,A{t}}}={t}2i sqrt(H_theta) A{t}",
            "H_theta",
            "A" + t,
            lambda z, s=s, t=t: s * 2j * ell(z) * F["A" + t](z),
        )
        for ham in ("H_theta", "H_thetaphi"):
            add(
                f"{{{ham},C{t}}}={t}2i sqrt(H_phi)/sin^2 C{t}",
                ham,
                "C" + t,
                lambda z, s=s, t=t: s * 2j * sphi(z) / np.sin(z[1]) ** 2 * F["C" + t](z),
            )
        add(
            f"{{H_phi,D{t}}}={t}2i sqrt(H_phi) D{t}",
            "H_phi",
            "D" + t,
            lambda z, s=s, t=t: s * 2j * sphi(z) * F["D" + t](z),
        )
        add(
            f"{{H_thetaphi,D{t}}}={t}2i sqrt(H_phi)/sin^2 D{t}",
            "H_thetaphi",
            "D" + t,
            lambda z, s=s, t=t: s * 2j * sphi(z) / np.sin(z[1]) ** 2 * F["D" + t](z),
        )
        add(f"{{H,Z{t}}}=0", "H", "Z" + t, zero, kind="planar")
    return rels


def default_tolerance(params):
    return 1e-6 if params.m == params.n == 1 else 1e-5


def verify_full_algebra(params, points=None, planar_points=None, tol=None, count=200, seed=0):
    """Verify every relation of :func:`algebra_relations`.

    Never stops at the first failure; returns one BracketReport per relation.
    Relations whose coefficient has √H_θφ - √H_φ in the denominator skip
    points where that difference is below 1e-3.
    """
    params.require_g_zero()
    if tol is None:
        tol = default_tolerance(params)
    if points is None:
        points = sample_points(params, count, seed=seed)
    if planar_points is None:
        planar_points = sample_points(params, count, seed=seed + 1, planar=True)
    z = _points_array(points)
    zp = _points_array(planar_points)
    far = np.sqrt(angular_sq(z[1], z[4], z[5])) - np.abs(z[5]) >= 1e-3
    domain = chart_mask(params)
    reports = []
    for name, f, g, rhs, kind in algebra_relations(params):
        pts = {"general": z, "near_planar_excluded": z[:, far], "planar": zp}[kind]
        try:
            rep = verify_relation((f, g), rhs, pts, tol=tol, name=name, domain=domain)
        except (StencilDomainError, ValueError, FloatingPointError) as exc:
            rep = BracketReport(name, int(pts.shape[1]), float("nan"), float("nan"), tol, [{"error": str(exc)}])
        log.debug("%s: max_rel=%.3g", name, rep.max_rel)
        reports.append(rep)
    return reports
