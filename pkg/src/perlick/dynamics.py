"""Hamilton's equations, adaptive integration and orbit diagnostics.

The integrator is the Dormand–Prince 5(4) pair with a PI step-size
controller and the pair's own quartic continuous extension for dense output.
Steps whose stages or endpoint leave the chart (θ ∉ (0, π), ξ outside
(0, ξ_max), non-finite values) are rejected and the step is halved; when the
step falls below 1e-13 (relative to |t|) an IntegrationError carrying the
last accepted state is raised.
"""

from dataclasses import dataclass, field
import logging
import math

import numpy as np
from scipy.optimize import brentq

from . import kappa_math as km
from . import symmetries as sym
from .errors import DomainError, IntegrationError, PerlickError
from .model import PhasePoint, angular_sq, check_domain, hamiltonian_z

__all__ = [
    "Trajectory",
    "FrequencyReport",
    "ClosureResult",
    "InsufficientPeriodsError",
    "equations_of_motion",
    "rhs_function",
    "integrate",
    "find_crossings",
    "estimate_frequencies",
    "detect_closure",
    "closure_horizon",
    "drift_report",
    "radial_period",
    "initial_state",
]

log = logging.getLogger(__name__)

# Dormand–Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
# difference between the 5th and embedded 4th order weights (7 stages, FSAL)
_E = np.array([-71 / 57600, 0.0, 71 / 16695, -71 / 1920, 17253 / 339200, -22 / 525, 1 / 40])
# continuous extension: y(t + s h) = y + h K^T (P @ [s, s², s³, s⁴])
_P = np.array(
    [
        [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
        [0, 0, 0, 0],
        [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
        [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
        [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
        [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
        [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
    ]
)

MIN_STEP = 1e-13


class InsufficientPeriodsError(PerlickError, ValueError):
    """Too few oscillations (or none, for circular motion) to measure a frequency."""


def rhs_function(params):
    """Scalar right-hand side f(y) of Hamilton's equations for the unified H.

    Uses ∂/∂ξ (Ck/Sk) = -1/Sk², which follows from Ck² + κ Sk² = 1.
    """
    kappa = params.kappa
    b2 = params.beta**2
    if kappa > 0:
        s = math.sqrt(kappa)

        def ck_sk(x):
            return math.cos(s * x), math.sin(s * x) / s

    elif kappa < 0:
        s = math.sqrt(-kappa)

        def ck_sk(x):
            return math.cosh(s * x), math.sinh(s * x) / s

    else:

        def ck_sk(x):
            return 1.0, x

    def f(y):
        xi, theta, _, p_xi, p_theta, p_phi = y
        c, s_ = ck_sk(xi)
        st = math.sin(theta)
        ct = math.cos(theta)
        inv_s2 = 1.0 / (s_ * s_)
        l2 = p_theta * p_theta + p_phi * p_phi / (st * st)
        return np.array(
            [
                b2 * p_xi,
                p_theta * inv_s2,
                p_phi * inv_s2 / (st * st),
                l2 * c * inv_s2 / s_ - inv_s2,
                p_phi * p_phi * ct * inv_s2 / (st * st * st),
                0.0,
            ]
        )

    return f


def equations_of_motion(params, p):
    """Time derivative (ξ̇, θ̇, φ̇, ṗ_ξ, ṗ_θ, ṗ_φ) at ``p``."""
    check_domain(params, p)
    return rhs_function(params)(p.as_array())


def _in_chart(y, top):
    return (
        np.all(np.isfinite(y)) and 0.0 < y[0] < top and 0.0 < y[1] < math.pi
    )


class DenseSolution:
    """Piecewise continuous extension over the accepted steps."""

    def __init__(self, t, y, k, h):
        self.t = t  # step start times, shape (S+1,) incl. final time
        self.y = y  # states at step boundaries, (S+1, 6)
        self.k = k  # stage derivatives, (S, 7, 6)
        self.h = h  # step sizes, (S,)

    def _index(self, t):
        fwd = self.h[0] > 0 if len(self.h) else True
        if fwd:
            i = np.searchsorted(self.t, t, side="right") - 1
        else:
            i = np.searchsorted(-self.t, -t, side="right") - 1
        return np.clip(i, 0, len(self.h) - 1)

    def __call__(self, t):
        t = np.atleast_1d(np.asarray(t, float))
        idx = self._index(t)
        s = (t - self.t[idx]) / self.h[idx]
        powers = np.stack([s, s**2, s**3, s**4], axis=1)  # (N, 4)
        coef = powers @ _P.T  # (N, 7)
        incr = np.einsum("nj,njd->nd", coef, self.k[idx])
        return self.y[idx] + self.h[idx][:, None] * incr


@dataclass
class Trajectory:
    """Sampled solution with conservation diagnostics.

    ``states`` has shape (N, 6) with φ unwrapped. ``diagnostics`` maps
    H, L2, pphi and either X±, Y± (spatial runs) or Z± (planar runs) to
    arrays aligned with ``times``. ``dense`` evaluates the solution anywhere in the time span.
    """

    params: object
    times: np.ndarray
    states: np.ndarray
    diagnostics: dict
    dense: DenseSolution = field(repr=False)
    tol: float = 1e-12
    steps: int = 0
    rejected: int = 0

    def point(self, i):
        return PhasePoint.from_array(self.states[i])

    @property
    def initial(self):
        return self.point(0)

    @property
    def planar(self):
        y0 = self.states[0]
        return abs(y0[1] - math.pi / 2) < 1e-12 and abs(y0[4]) < 1e-12

    def at(self, t):
        return self.dense(t)


def _diagnostics(params, states):
    z = states.T
    l2 = angular_sq(z[1], z[4], z[5])
    out = {"H": hamiltonian_z(params, z), "L2": l2, "pphi": z[5].copy()}
    if params.G != 0.0:
        return out
    planar = abs(z[1, 0] - math.pi / 2) < 1e-12 and abs(z[4, 0]) < 1e-12
    with np.errstate(all="ignore"):
        for s, t in ((1, "+"), (-1, "-")):
            if planar:
                out["Z" + t] = sym.raw_z(params, s, z)
            else:
                out["X" + t] = sym.raw_x(params, s, z)
                out["Y" + t] = sym.raw_y(s, z)
    return out


def integrate(params, initial, t_end, tol=1e-12, t_eval=None, fixed_step=None, max_steps=5_000_000):
    """Integrate from ``initial`` (PhasePoint) over [0, t_end].

    ``t_end`` may be negative (backward integration). Samples are taken at
    ``t_eval`` through the dense output, or at every accepted step when
    ``t_eval`` is None. With ``fixed_step`` the step size is constant and
    no error control is done (used for order checks).
    """
    if not (1e-14 <= tol <= 1e-6):
        raise DomainError(f"tol must lie in [1e-14, 1e-6], got {tol}")
    check_domain(params, initial)
    f = rhs_function(params)
    top = km.xi_max(params.kappa)
    direction = 1.0 if t_end >= 0 else -1.0
    span = abs(t_end)

    y = initial.as_array()
    t = 0.0
    k1 = f(y)
    rtol = atol = tol

    if fixed_step is not None:
        h = direction * abs(fixed_step)
    else:
        # initial step from the local time scale
        scale = atol + rtol * np.abs(y)
        d0 = np.sqrt(np.mean((y / scale) ** 2))
        d1 = np.sqrt(np.mean((k1 / scale) ** 2))
        h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
        h = direction * min(h0, span if span > 0 else h0)

    ts, ys, ks, hs = [0.0], [y.copy()], [], []
    err_old = 1e-4
    rejected = 0
    stages = np.empty((7, 6))
    while direction * (t_end - t) > 0:
        if len(hs) >= max_steps:
            raise IntegrationError("maximum number of steps exceeded", t, PhasePoint.from_array(y))
        if direction * (t + h - t_end) > 0:
            h = t_end - t
        stages[0] = k1
        ok = True
        err = None
        try:
            for i in range(1, 6):
                yi = y + h * (np.dot(_A[i], stages[:i]))
                if not _in_chart(yi, top):
                    ok = False
                    break
                stages[i] = f(yi)
            if ok:
                y_new = y + h * np.dot(_B, stages[:6])
                ok = _in_chart(y_new, top)
            if ok:
                stages[6] = f(y_new)
        except (ArithmeticError, ValueError):
            ok = False

        if ok and fixed_step is None:
            scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
            err = np.max(np.abs(h * np.dot(_E, stages) / scale))
            ok = err <= 1.0
        elif ok:
            err = 0.0

        if not ok:
            rejected += 1
            if fixed_step is not None:
                raise IntegrationError("fixed step left the chart", t, PhasePoint.from_array(y))
            if not np.isfinite(h) or abs(h) < MIN_STEP * max(1.0, abs(t)):
                raise IntegrationError(
                    f"step size collapsed near t={t:.6g} (singular surface?)", t, PhasePoint.from_array(y)
                )
            if err is not None and np.isfinite(err):
                h *= max(0.2, 0.9 * err ** (-0.2))
            else:
                h *= 0.5
            continue

        ts.append(t + h)
        ys.append(y_new.copy())
        ks.append(stages.copy())
        hs.append(h)
        t = t + h
        y = y_new
        k1 = stages[6].copy()
        if fixed_step is None:
            # PI control (Gustafsson), exponents as in DOPRI5
            err = max(err, 1e-10)
            fac = 0.9 * err ** (-0.17) * err_old**0.04
            fac = min(5.0, max(0.2, fac))
            h = h * fac
            err_old = max(err, 1e-4)

    dense = DenseSolution(np.array(ts), np.array(ys), np.array(ks).reshape(-1, 7, 6), np.array(hs))
    if t_eval is None:
        times = np.array(ts)
        states = np.array(ys)
    else:
        times = np.asarray(t_eval, float)
        if np.any(np.diff(times) * direction <= 0):
            raise ValueError("t_eval must be strictly monotone in the integration direction")
        states = dense(times) if len(hs) else np.repeat(initial.as_array()[None], len(times), 0)
    log.debug("integrated %d steps (%d rejected)", len(hs), rejected)
    return Trajectory(
        params=params,
        times=times,
        states=states,
        diagnostics=_diagnostics(params, states),
        dense=dense,
        tol=tol,
        steps=len(hs),
        rejected=rejected,
    )


def find_crossings(traj, component, direction=1, level=0.0):
    """Times where state[component] crosses ``level`` (upward for direction=1).

    Crossings are located between accepted steps and refined on the dense
    output with Brent's method to 1e-13 in time.
    """
    dense = traj.dense
    vals = dense.y[:, component] - level
    t = dense.t
    out = []
    for i in range(len(dense.h)):
        a, b = vals[i], vals[i + 1]
        if direction > 0 and not (a < 0 <= b):
            continue
        if direction < 0 and not (a > 0 >= b):
            continue
        if direction == 0 and not (a * b < 0 or (b == 0 and a != 0)):
            continue
        if b == 0:
            out.append(float(t[i + 1]))
            continue

        def g(tt):
            return float(dense(tt)[0, component] - level)

        lo, hi = sorted((t[i], t[i + 1]))
        out.append(brentq(g, lo, hi, xtol=1e-13, rtol=4 * np.finfo(float).eps))
    return np.array(out)


@dataclass(frozen=True)
class FrequencyReport:
    """Measured frequencies (rad/time) and residuals of the locking relations.

    ``lock_xi_theta`` = |m ω_θ - n ω_ξ| / ω_ξ, ``lock_theta_phi`` =
    |ω_θ - ω_φ| / ω_φ and, for planar motion, ``lock_xi_phi`` =
    |m ω_φ - n ω_ξ| / ω_ξ. Channels whose oscillation is too small to
    measure are listed in ``low_amplitude`` and carry NaN.
    """

    omega_xi: float
    omega_theta: float
    omega_phi: float
    ratio_theta_xi: float
    ratio_theta_phi: float
    lock_xi_theta: float
    lock_theta_phi: float
    lock_xi_phi: float
    radial_periods: int
    low_amplitude: tuple = ()

    def to_dict(self):
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.__dict__.items()}


def _omega(times):
    return 2 * np.pi * (len(times) - 1) / (times[-1] - times[0])


def estimate_frequencies(traj, min_periods=3, amplitude_floor=1e-7):
    """Radial, polar and azimuthal frequencies of a bounded trajectory."""
    params = traj.params
    p_xi = traj.dense.y[:, 3]
    scale = max(1.0, float(np.max(np.abs(traj.dense.y[:, 0]))))
    if np.max(np.abs(p_xi)) < amplitude_floor * scale:
        raise InsufficientPeriodsError("circular orbit: p_ξ never leaves zero")
    t_xi = find_crossings(traj, 3, direction=1)
    if len(t_xi) < min_periods + 1:
        raise InsufficientPeriodsError(
            f"need at least {min_periods} radial periods, found {max(len(t_xi) - 1, 0)}"
        )
    omega_xi = _omega(t_xi)
    low = []
    theta = traj.dense.y[:, 1]
    omega_theta = float("nan")
    t_th = np.array([])
    if np.ptp(theta) > amplitude_floor and np.max(np.abs(traj.dense.y[:, 4])) > amplitude_floor:
        t_th = find_crossings(traj, 4, direction=1)
        if len(t_th) >= 2:
            omega_theta = _omega(t_th)
    if not np.isfinite(omega_theta):
        low.append("theta")
    # secular φ rate over a whole number of θ (or radial) oscillations
    window = t_th if len(t_th) >= 2 else t_xi
    phi_ends = traj.dense(np.array([window[0], window[-1]]))[:, 2]
    omega_phi = float((phi_ends[1] - phi_ends[0]) / (window[-1] - window[0]))
    m, n = params.m, params.n
    return FrequencyReport(
        omega_xi=float(omega_xi),
        omega_theta=float(omega_theta),
        omega_phi=omega_phi,
        ratio_theta_xi=float(omega_theta / omega_xi),
        ratio_theta_phi=float(omega_theta / omega_phi),
        lock_xi_theta=float(abs(m * omega_theta - n * omega_xi) / omega_xi),
        lock_theta_phi=float(abs(omega_theta - omega_phi) / abs(omega_phi)),
        lock_xi_phi=float(abs(m * abs(omega_phi) - n * omega_xi) / omega_xi),
        radial_periods=len(t_xi) - 1,
        low_amplitude=tuple(low),
    )


@dataclass(frozen=True)
class ClosureResult:
    """Outcome of the recurrence search.

    ``winding`` is (radial cycles, azimuthal turns) completed in one period.
    """

    closed: bool
    period: float | None = None
    winding: tuple | None = None
    distance: float | None = None
    reason: str = ""

    def to_dict(self):
        return {
            "closed": self.closed,
            "period": self.period,
            "winding": list(self.winding) if self.winding else None,
            "distance": self.distance,
            "reason": self.reason,
        }


def _state_distance(a, b, scales):
    d = np.abs(a - b)
    dphi = (a[2] - b[2] + np.pi) % (2 * np.pi) - np.pi
    d[2] = abs(dphi)
    return float(np.max(d / scales))


def detect_closure(traj, tol=1e-6):
    """Smallest recurrence period of the full state.

    Candidates are the pericentre passages (upward zero crossings of p_ξ);
    the state at each later passage is compared with the first one in a
    weighted max-norm: φ modulo 2π, θ as is, ξ and the momenta divided by
    their largest magnitude along the run. Falls back to p_θ crossings and
    then to φ turns when the radial motion is circular.
    """
    y = traj.dense.y
    scales = np.max(np.abs(y), axis=0)
    scales[1] = scales[2] = 1.0
    scales[scales == 0] = 1.0
    if np.max(np.abs(y[:, 3])) > 1e-9 * scales[0]:
        events = find_crossings(traj, 3, direction=1)
        kind = "radial"
    elif np.max(np.abs(y[:, 4])) > 1e-9:
        events = find_crossings(traj, 4, direction=1)
        kind = "polar"
    else:
        phi0 = y[0, 2]
        turns = int(np.floor((y[-1, 2] - phi0) / (2 * np.pi)))
        events = np.array(
            [
                find_crossings(traj, 2, direction=np.sign(y[-1, 2] - phi0) or 1, level=phi0 + 2 * np.pi * k)[0]
                for k in range(1, turns + 1)
            ]
        )
        events = np.concatenate([[traj.dense.t[0]], events])
        kind = "azimuthal"
    if len(events) < 2:
        return ClosureResult(False, reason="no recurrence candidates within the horizon")
    states = traj.dense(events)
    ref = states[0]
    for j in range(1, len(events)):
        dist = _state_distance(states[j], ref, scales)
        if dist < tol:
            period = float(events[j] - events[0])
            turns = int(round((states[j, 2] - ref[2]) / (2 * np.pi)))
            radial = j if kind == "radial" else int(round(period / _radial_period_estimate(traj)))
            return ClosureResult(True, period, (radial, abs(turns)), dist, kind)
    return ClosureResult(False, reason="no recurrence within the horizon")


def _radial_period_estimate(traj):
    t_xi = find_crossings(traj, 3, direction=1)
    if len(t_xi) >= 2:
        return float(np.mean(np.diff(t_xi)))
    return float("inf")


def closure_horizon(report, params, factor=4.0):
    """Integration span long enough to observe closure: factor × m radial periods."""
    return factor * params.m * 2 * np.pi / report.omega_xi


def radial_period(params, ell, E, tol=1e-12):
    """Radial period by quadrature of dt = dξ / (β² p_ξ) between turning points."""
    from scipy.integrate import quad

    from .model import turning_points

    tp = turning_points(params, ell, E)
    if not tp.bounded or tp.circular:
        raise InsufficientPeriodsError("radial period is defined for bounded, non-circular motion")
    xi1, xi2 = tp.roots
    kappa, b2 = params.kappa, params.beta**2

    def integrand(u):
        # ξ = (xi1 + xi2)/2 - (xi2 - xi1)/2 cos u removes the endpoint singularities
        xi = 0.5 * (xi1 + xi2) - 0.5 * (xi2 - xi1) * np.cos(u)
        v = 0.5 * ell**2 / km.sk(kappa, xi) ** 2 - km.ctk(kappa, xi) + params.G
        kin = max(E - v, 0.0)
        dxi = 0.5 * (xi2 - xi1) * np.sin(u)
        return dxi / (b2 * math.sqrt(2 * kin / b2)) if kin > 0 else 0.0

    val, _ = quad(integrand, 0.0, np.pi, epsabs=tol, epsrel=tol, limit=200)
    return 2.0 * val


def initial_state(params, E, ell, lz, at="inner", phi=0.0):
    """Phase point at a radial turning point with the given constants.

    θ starts at the node θ = π/2 with p_θ = √(l² - lz²) ≥ 0; the orbit
    plane's angular momentum then lies in the x-z plane (L_y = 0). For
    unbounded energies "outer" is not available.
    """
    from .model import turning_points

    if lz < 0 or lz > ell:
        raise DomainError("need 0 <= lz <= l")
    tp = turning_points(params, ell, E)
    roots = tp.roots
    xi = roots[0] if at == "inner" or len(roots) == 1 else roots[1]
    p_theta = math.sqrt(max(ell**2 - lz**2, 0.0))
    return PhasePoint(float(xi), math.pi / 2, float(phi), 0.0, p_theta, float(lz))


def drift_report(traj):
    """Maximum relative drift of every diagnostic relative to its initial value.

    Complex constants are judged relative to their initial modulus; p_φ is
    reported as absolute drift.
    """
    out = {}
    for key, vals in traj.diagnostics.items():
        v0 = vals[0]
        with np.errstate(all="ignore"):
            diff = float(np.max(np.abs(vals - v0)))
        if key == "pphi":
            out[key] = diff
            continue
        scale = abs(v0)
        out[key] = diff / scale if scale > 0 else diff
    return out
