import numpy as np
import pytest
from hypothesis import given, strategies as st

from polydbar.cauchy import (CircleCauchy, DiscCauchy, OperatorConfig, cauchy_circle_S, cauchy_disc_T, op_K, op_Pij, op_Stilde,
                             op_T, op_Tj, solve_dbar)
from polydbar.errors import InvalidArgument, NearBoundaryError, OutOfDomain
from polydbar.exact import MonomialPoly, exact_dbar, exact_K, exact_opT, poly_form
from polydbar.field import Form01, ScalarFunction, constant, coordinate, wirtinger_fd

CFG = OperatorConfig()
DIRECT = OperatorConfig(disc_method="direct", circle_rule="trapezoid", radial_count=48,
                        angular_count=128, circle_count=128)
M = MonomialPoly.monomial
coord = st.complex_numbers(max_magnitude=0.85, allow_nan=False, allow_infinity=False)


def test_disc_T_examples():
    assert abs(cauchy_disc_T(lambda z: 1.0 + 0 * z, 0.3, CFG) - 0.3) < 1e-12
    assert cauchy_disc_T(lambda z: 0 * z, 0.3, CFG) == 0
    z = 0.4 - 0.2j
    assert abs(cauchy_disc_T(lambda w: w, z, CFG) - (z * np.conj(z) - 1)) < 1e-12
    assert abs(cauchy_disc_T(lambda w: w, 0.0, CFG) + 1) < 1e-12
    with pytest.raises(OutOfDomain):
        cauchy_disc_T(lambda w: w, 1.0, CFG)


def test_disc_T_brute_force_oracle():
    # independent midpoint rule on a polar grid centred at 0, far from the target singularity
    z = 0.35 + 0.1j
    r = (np.arange(2000) + 0.5) / 2000
    th = 2 * np.pi * (np.arange(2000) + 0.5) / 2000
    R, TH = np.meshgrid(r, th, indexing="ij")
    zeta = R * np.exp(1j * TH)
    dA = R * (1 / 2000) * (2 * np.pi / 2000)
    f = np.conj(zeta) ** 2
    brute = -np.sum(f / (zeta - z) * dA) / np.pi
    assert abs(cauchy_disc_T(lambda w: np.conj(w) ** 2, z, CFG) - brute) < 5e-3


@pytest.mark.parametrize("cfg", [CFG, DIRECT])
def test_circle_S_examples(cfg):
    assert abs(cauchy_circle_S(lambda w: w**2, 0.5, cfg) - 0.25) < 1e-12
    for z in (0.0, 0.3 + 0.4j, -0.7j):
        assert abs(cauchy_circle_S(lambda w: np.conj(w), z, cfg)) < 1e-12
        assert abs(cauchy_circle_S(lambda w: 2.5 + 0 * w, z, cfg) - 2.5) < 1e-12


@pytest.mark.parametrize("cfg", [CFG, DIRECT])
def test_circle_S_near_boundary(cfg):
    with pytest.raises(NearBoundaryError) as info:
        cauchy_circle_S(lambda w: w, 0.9995, cfg)
    assert info.value.margin == cfg.boundary_margin


def test_Tj_examples():
    one = constant(1.0, 2)
    z = (0.3 + 0.2j, -0.4j)
    assert abs(op_Tj(one, 0, z, CFG) - np.conj(z[0])) < 1e-12
    g = coordinate(1, 2, conjugate=True)
    assert abs(op_Tj(g, 0, z, CFG) - np.conj(z[1]) * np.conj(z[0])) < 1e-12
    assert op_Tj(constant(0.0, 2), 0, z, CFG) == 0


def test_Stilde_examples():
    z = (0.3 + 0.2j, 0.5)
    f = ScalarFunction(lambda w: np.sin(w[0]) * w[1] + np.conj(w[1]), 2, smoothness="smooth")
    assert op_Stilde(0, f, z, CFG) == f(*z)
    hol = ScalarFunction(lambda w: np.exp(w[0]) * np.conj(w[1]), 2, smoothness="smooth")
    assert abs(op_Stilde(1, hol, z, CFG) - hol(*z)) < 1e-12
    kill = ScalarFunction(lambda w: np.conj(w[0]) * w[1], 2, smoothness="smooth")
    assert abs(op_Stilde(1, kill, z, CFG)) < 1e-12
    with pytest.raises(NearBoundaryError):
        op_Stilde(1, kill, (0.9999, 0.1), CFG)


def test_T_examples():
    z = (0.4 - 0.1j, 0.2 + 0.5j)
    dz1 = Form01([constant(1.0, 2), constant(0.0, 2)])
    assert abs(op_T(dz1, z, CFG) - np.conj(z[0])) < 1e-12
    g = Form01([coordinate(1, 2, True), coordinate(0, 2, True)])
    assert abs(op_T(g, z, CFG) - np.conj(z[0] * z[1])) < 1e-12
    assert op_T(Form01([constant(0.0, 2)] * 2), z, CFG) == 0
    with pytest.raises(OutOfDomain):
        op_T(dz1, (1.0, 0.0), CFG)


def test_K_examples():
    z = (0.3 + 0.1j, -0.2 + 0.4j)
    assert abs(op_K(coordinate(0, 2) * coordinate(1, 2), z, CFG) - z[0] * z[1]) < 1e-12
    assert abs(op_K(coordinate(0, 2, True), z, CFG)) < 1e-12
    assert abs(op_K(constant(1.0, 2), z, CFG) - 1) < 1e-12
    with pytest.raises(NearBoundaryError):
        op_K(constant(1.0, 2), (0.9999, 0.0), CFG)


def test_Pij_examples():
    z = (0.3 + 0.2j, 0.1)
    assert abs(op_Pij(constant(1.0, 2), 0, z, CFG)) < 1e-10
    assert abs(op_Pij(coordinate(0, 2), 0, z, CFG) - np.conj(z[0])) < 1e-10
    assert abs(op_Pij(coordinate(0, 2, True), 0, z, CFG)) < 1e-10
    unknown = ScalarFunction(lambda w: w[0], 2, smoothness="unknown")
    with pytest.raises(InvalidArgument):
        op_Pij(unknown, 0, z, CFG)


def test_Pij_is_holomorphic_derivative_of_T():
    f = ScalarFunction(lambda w: np.conj(w[0]) * w[0] ** 2, 1, smoothness="smooth")
    Tf = ScalarFunction(lambda w: np.array([cauchy_disc_T(lambda x: np.conj(x) * x**2, c, CFG)
                                            for c in np.atleast_1d(w[0])]).reshape(np.shape(w[0])),
                        1, smoothness="smooth")
    z = 0.2 - 0.3j
    assert abs(op_Pij(f, 0, [z], CFG) - wirtinger_fd(Tf, [z], 0, 1e-3)) < 1e-5


def test_solve_dbar_examples():
    dz1 = Form01([constant(1.0, 2), constant(0.0, 2)])
    vals, diag = solve_dbar(dz1, [(0.2, 0.3)], CFG)
    assert abs(vals[0] - 0.2) < 1e-12
    assert "wall_time_s" in diag and "cache_hit_rate" in diag and diag["settings"]
    vals, diag = solve_dbar(dz1, [], CFG)
    assert vals == []
    zero = Form01([constant(0.0, 2)] * 2)
    vals, _ = solve_dbar(zero, [(0.1, 0.1), (0.5j, -0.3)], CFG)
    assert vals == [0, 0]


def test_solve_dbar_collects_errors():
    dz1 = Form01([constant(1.0, 2), constant(0.0, 2)])
    vals, diag = solve_dbar(dz1, [(0.2, 0.3), (1.0, 0.0)], CFG)
    assert abs(vals[0] - 0.2) < 1e-12 and np.isnan(vals[1])
    assert list(diag["errors"]) == [1]


def _closed_form(u):
    return poly_form(exact_dbar(u))


@pytest.mark.parametrize("exps", [((0, 1), (0, 1)), ((2, 1), (0, 2)), ((1, 1), (1, 0))])
def test_solution_and_canonical_properties(exps):
    u = M(exps)
    g = _closed_form(u)
    from polydbar.cauchy import solution_operator
    sol = solution_operator(g, CFG)
    z = (0.3 - 0.2j, 0.1 + 0.45j)
    for j in range(2):
        assert abs(wirtinger_fd(sol, z, j, 1e-3, conjugate=True) - g[j](*z)) < 1e-6
    assert abs(op_K(sol, z, CFG)) < 1e-10


@given(z0=coord, z1=coord)
def test_reconstruction_property(z0, z1):
    u = M(((1, 2), (1, 0))) + M(((0, 1), (2, 1)), 3)
    ufn = u.to_function()
    g = _closed_form(u)
    z = (z0, z1)
    assert abs(op_T(g, z, CFG) - (ufn(*z) - op_K(ufn, z, CFG))) < 1e-10
    assert abs(op_T(g, z, CFG) - exact_opT(exact_dbar(u)).evaluate(list(z))) < 1e-10
    assert exact_opT(exact_dbar(u)) == u - exact_K(u)


@given(z=coord)
def test_annihilation_S_T(z):
    data = ScalarFunction(lambda w: np.conj(w[0]) * w[0] ** 2 + 1, 1, smoothness="smooth")
    # T f extends continuously to the circle, so compose the grid operators
    STf = CircleCauchy(DiscCauchy(data, 0, CFG), 0, CFG)
    assert abs(STf(z)) < 1e-10


@given(alpha=st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False), z0=coord, z1=coord)
def test_linearity(alpha, z0, z1):
    g1 = _closed_form(M(((0, 1), (1, 1))))
    g2 = _closed_form(M(((2, 0), (0, 2))))
    comb = Form01([alpha * g1[j] + g2[j] for j in range(2)])
    z = (z0, z1)
    lhs = op_T(comb, z, CFG)
    rhs = alpha * op_T(g1, z, CFG) + op_T(g2, z, CFG)
    assert abs(lhs - rhs) <= 1e-12 * max(1, abs(lhs))


def test_direct_and_spectral_agree_on_rough_data():
    f = ScalarFunction(lambda w: np.power(1 - w[0], 0.5), 1, smoothness="hoelder", alpha=0.5)
    z = 0.3 + 0.3j
    a = cauchy_disc_T(f, z, CFG.with_(radial_count=64, angular_count=128))
    b = cauchy_disc_T(f, z, DIRECT)
    assert abs(a - b) < 1e-4


def test_config_guards():
    with pytest.raises(InvalidArgument):
        OperatorConfig(angular_count=33)
    with pytest.raises(InvalidArgument):
        OperatorConfig(disc_method="bogus")
