import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from perlick import kappa_math as km
from perlick.errors import DomainError, NoSolutionError, PoleError
from perlick.model import (
    ModelParams,
    PhasePoint,
    RPoint,
    effective_potential,
    energy_bounds,
    hamiltonian_r,
    hamiltonian_xi,
    to_r_coords,
    to_xi_coords,
    turning_points,
)


def closed_form_roots(kappa, ell, E):
    """Turning points from the quadratic in u = 1/Tk."""
    disc = 1 + 2 * ell**2 * E - kappa * ell**4
    us = [(1 + s * math.sqrt(disc)) / ell**2 for s in (1, -1)]
    if kappa <= 0:
        us = [u for u in us if u > math.sqrt(-kappa)]
    return sorted(float(km.arcctk(kappa, u)) for u in us)


def test_params_reduce_and_parse():
    p = ModelParams(1.0, 4, 2)
    assert (p.m, p.n) == (2, 1)
    assert ModelParams.from_beta(0, "2/4") == ModelParams(0.0, 1, 2)
    assert ModelParams.from_beta(0, Fraction(3)).beta == 3.0
    with pytest.raises(DomainError):
        ModelParams(0.0, 0, 1)
    with pytest.raises(DomainError):
        ModelParams(float("nan"))


@pytest.mark.parametrize(
    "kappa, ell, e_min",
    [(-1.0, 0.25, -8.03125), (1.0, 0.25, -7.96875), (0.0, 1.0, -0.5), (-1.0, 0.5, -2.125)],
)
def test_energy_bounds_reference(kappa, ell, e_min):
    b = energy_bounds(ModelParams(kappa), ell)
    assert abs(b.e_min - e_min) < 1e-12
    assert b.attained
    assert effective_potential(ModelParams(kappa), ell, b.xi_circular) == pytest.approx(e_min, abs=1e-12)


def test_escape_thresholds():
    assert energy_bounds(ModelParams(-4.0), 0.25).e_escape == -2.0
    assert energy_bounds(ModelParams(0.0), 0.25).e_escape == 0.0
    assert energy_bounds(ModelParams(1.0), 0.25).e_escape is None


def test_unattained_minimum():
    b = energy_bounds(ModelParams(-1.0), 1.5)
    assert not b.attained and b.xi_circular is None
    tp = turning_points(ModelParams(-1.0), 1.5, 0.0)
    assert len(tp) == 1 and not tp.bounded


def test_flat_turning_points_reference():
    tp = turning_points(ModelParams(0.0), 1.0, -0.375)
    assert tp.roots[0] == pytest.approx(2 / 3, abs=1e-12)
    assert tp.roots[1] == pytest.approx(2.0, abs=1e-12)
    assert tp.bounded and tp.multiplicity == (1, 1)


@given(
    st.sampled_from([-1.0, -0.3, 0.0, 0.5, 1.0]),
    st.floats(0.2, 0.9),
    st.floats(0.02, 0.98),
)
def test_turning_points_match_quadratic(kappa, ell, frac):
    params = ModelParams(kappa)
    b = energy_bounds(params, ell)
    assume(b.attained)
    top = b.e_escape if b.e_escape is not None else b.e_min + 4.0
    E = b.e_min + frac * (top - b.e_min)
    tp = turning_points(params, ell, E)
    expected = closed_form_roots(kappa, ell, E)
    assert len(tp) == len(expected)
    for got, want in zip(tp, expected):
        assert got == pytest.approx(want, abs=1e-12)
        assert effective_potential(params, ell, got) == pytest.approx(E, abs=1e-10)


def test_circular_and_below_minimum():
    params = ModelParams(-1.0)
    tp = turning_points(params, 0.25, -8.03125)
    assert tp.circular and tp.multiplicity == (2,) and len(tp) == 1
    with pytest.raises(NoSolutionError):
        turning_points(params, 0.25, -8.1)


def test_unbounded_single_root():
    tp = turning_points(ModelParams(-1.0), 0.25, 4.0)
    assert len(tp) == 1 and not tp.bounded
    assert tp[0] == pytest.approx(closed_form_roots(-1.0, 0.25, 4.0)[0], abs=1e-12)


def test_effective_potential_domain():
    with pytest.raises(DomainError):
        effective_potential(ModelParams(1.0), 0.5, math.pi)
    with pytest.raises(DomainError):
        effective_potential(ModelParams(0.0), 0.5, 0.0)


def _point(rng, kappa):
    top = min(km.xi_max(kappa) - 0.1, 2.0)
    return PhasePoint(
        rng.uniform(0.1, top), rng.uniform(0.3, 2.8), rng.uniform(-3, 3), *rng.uniform(-1, 1, 3)
    )


@pytest.mark.parametrize("kappa", [-1.0, 0.0, 1.0])
def test_chart_equivalence(kappa, rng):
    params = ModelParams(kappa, 2, 1)
    for _ in range(200):
        p = _point(rng, kappa)
        if abs(km.ck(kappa, p.xi)) < 0.05:
            continue
        r = to_r_coords(params, p)
        assert hamiltonian_r(params, r) == pytest.approx(hamiltonian_xi(params, p), rel=1e-12, abs=1e-12)
        back = to_xi_coords(params, r)
        assert np.allclose(back.as_array(), p.as_array(), rtol=1e-12, atol=1e-12)


def test_south_hemisphere_tag():
    params = ModelParams(1.0)
    p = PhasePoint(2.5, 1.0, 0.0, 0.3, 0.1, 0.2)
    r = to_r_coords(params, p)
    assert r.hemisphere == "south"
    assert hamiltonian_r(params, r) == pytest.approx(hamiltonian_xi(params, p), rel=1e-12)
    with pytest.raises(PoleError):
        to_r_coords(params, PhasePoint(math.pi / 2, 1.0, 0.0, 0.3, 0.1, 0.2))
    with pytest.raises(DomainError):
        to_xi_coords(ModelParams(-1.0), RPoint(0.5, 1.0, 0.0, 0.1, 0.1, 0.1, "south"))
    with pytest.raises(DomainError):
        hamiltonian_r(params, RPoint(1.5, 1.0, 0.0, 0.1, 0.1, 0.1))


def _canonical_map(kappa, xi, p_xi):
    c = km.ck(kappa, xi)
    return np.array([km.sk(kappa, xi), p_xi / c])


@pytest.mark.parametrize("kappa", [-1.0, 0.0, 1.0])
def test_canonical_map_unit_jacobian(kappa, rng):
    h = 1e-4
    w = np.array([1.0, -8.0, 8.0, -1.0]) / 12
    offs = np.array([-2, -1, 1, 2])
    for _ in range(50):
        xi, p_xi = rng.uniform(0.1, 1.3), rng.uniform(-2, 2)
        d_xi = sum(wi * _canonical_map(kappa, xi + o * h, p_xi) for wi, o in zip(w, offs)) / h
        d_p = sum(wi * _canonical_map(kappa, xi, p_xi + o * h) for wi, o in zip(w, offs)) / h
        det = d_xi[0] * d_p[1] - d_p[0] * d_xi[1]
        assert abs(det - 1.0) < 1e-10
