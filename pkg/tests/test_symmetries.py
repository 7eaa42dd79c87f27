import math

import numpy as np
import pytest

from perlick import symmetries as sym
from perlick.errors import DegenerateOrbitError, DomainError
from perlick.model import ModelParams, PhasePoint, hamiltonian_xi
from perlick.poisson import sample_points


def points(params, count=50, seed=3, planar=False):
    z = sample_points(params, count, seed=seed, planar=planar)
    return [PhasePoint.from_array(c) for c in z.T]


def test_shift_factorization(params):
    """B⁺B⁻ + λ_ξ reproduces the Hamiltonian."""
    for p in points(params):
        ell = math.sqrt(p.l_sq)
        prod = sym.b_pm(params, +1, p) * sym.b_pm(params, -1, p)
        assert prod.imag == pytest.approx(0.0, abs=1e-12)
        assert prod.real + sym.lambda_xi(params.kappa, ell) == pytest.approx(hamiltonian_xi(params, p), rel=1e-12)


def test_ladder_moduli(kappa):
    params = ModelParams(kappa)
    for p in points(params):
        rest = p.l_sq - p.p_phi**2
        assert abs(sym.a_pm(+1, p)) ** 2 == pytest.approx(rest, rel=1e-12)
        assert abs(sym.c_pm(-1, p)) ** 2 == pytest.approx(rest, rel=1e-12)
        assert abs(sym.d_pm(+1, p)) == pytest.approx(p.p_phi, rel=1e-14)


def test_constants_are_conjugate_pairs(params):
    for p in points(params, 20):
        assert sym.x_pm(params, "-", p).value == pytest.approx(sym.x_pm(params, "+", p).value.conjugate(), rel=1e-12)
        assert sym.y_pm(-1, p).value == pytest.approx(sym.y_pm(+1, p).value.conjugate(), rel=1e-12)


def test_closed_form_moduli(params):
    for p in points(params, 30):
        E = hamiltonian_xi(params, p)
        ell, lz = math.sqrt(p.l_sq), p.p_phi
        assert sym.x_pm(params, 1, p).modulus == pytest.approx(sym.x_modulus(params, E, ell, lz), rel=1e-10)
        assert sym.y_pm(1, p).modulus == pytest.approx(sym.y_modulus(ell, lz), rel=1e-12)
    for p in points(params, 30, planar=True):
        E = hamiltonian_xi(params, p)
        assert sym.z_pm(params, 1, p).modulus == pytest.approx(sym.z_modulus(params, E, p.p_phi), rel=1e-10)


def test_binomial_expansion_matches_product(params):
    for p in points(params, 30):
        for s in (1, -1):
            re, im = sym.x_binomial(params, s, p)
            x = sym.x_pm(params, s, p).value
            assert complex(re, im) == pytest.approx(x, rel=1e-10, abs=1e-12)


def test_phase_functions_give_x_phase(params):
    for p in points(params, 20):
        ph = sym.phase_functions(params, p)
        # X⁺ = (A⁺)^m (B⁻)^n and arg B⁻ = -arg B⁺
        lhs = sym.canonical_phase(params.m * ph["a"] - params.n * ph["b"])
        assert lhs == pytest.approx(sym.x_pm(params, 1, p).phase, abs=1e-9)


def test_runge_lenz_correspondence():
    params = ModelParams(0.0)
    rng = np.random.default_rng(7)
    for _ in range(500):
        p = PhasePoint(rng.uniform(0.3, 2), rng.uniform(0.3, 2.8), rng.uniform(-3, 3), *rng.uniform(-1, 1, 2), rng.uniform(0.1, 1))
        for s in (1, -1):
            assert abs(sym.x_pm(params, s, p).value - sym.x_from_runge_lenz(s, p)) < 1e-10
        q = PhasePoint(p.xi, math.pi / 2, p.phi, p.p_xi, 0.0, p.p_phi)
        for s in (1, -1):
            assert abs(sym.z_pm(params, s, q).value - sym.z_from_runge_lenz(s, q)) < 1e-10


def test_angular_momentum_vector():
    p = PhasePoint(1.0, 0.7, 0.4, 0.2, 0.3, 0.5)
    am = sym.angular_momentum(p)
    assert np.dot(am.vector, am.vector) == pytest.approx(am.l_sq, rel=1e-12)
    assert -math.pi <= am.azimuth < math.pi


def test_degenerate_inputs():
    params = ModelParams(0.0, 2, 1)
    planar = PhasePoint(1.0, math.pi / 2, 0.0, 0.1, 0.0, 0.5)
    with pytest.raises(DegenerateOrbitError):
        sym.x_pm(params, 1, planar)
    with pytest.raises(DomainError):
        sym.z_pm(params, 1, PhasePoint(1.0, 1.0, 0.0, 0.1, 0.2, 0.5))
    with pytest.raises(ValueError):
        sym.y_pm(0, planar)
    with pytest.raises(DomainError):
        sym.b_pm(ModelParams(0.0, G=1.0), 1, planar)


def test_complex_constant_phase_range():
    assert sym.ComplexConstant(-1.0, 0.0).phase == pytest.approx(-math.pi)
    c = sym.ComplexConstant.of(3 + 4j)
    assert c.modulus == 5.0 and c.value == 3 + 4j
