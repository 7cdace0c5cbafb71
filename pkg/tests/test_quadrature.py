import numpy as np
import pytest
from hypothesis import given, strategies as st

from polydbar.errors import InvalidArgument, ResourceGuardError
from polydbar.quadrature import (circle_nodes, disc_nodes, radial_profile_nodes, torus_nodes,
                                 WeightedNodes)


def test_disc_area():
    rule = disc_nodes(8, 16)
    assert abs(rule.weights.sum() - np.pi) < 1e-10
    assert np.all(np.abs(rule.nodes) <= 1)
    assert np.all(rule.weights > 0)


def test_disc_second_moment():
    rule = disc_nodes(32, 64)
    assert abs(rule.integrate(np.abs(rule.nodes) ** 2) - np.pi / 2) < 1e-8


@pytest.mark.parametrize("counts", [(2, 4), (8, 16), (5, 7)])
def test_disc_odd_symmetry(counts):
    rule = disc_nodes(*counts)
    assert abs(rule.integrate(rule.nodes)) < 1e-10


def test_disc_counts_guard():
    with pytest.raises(InvalidArgument):
        disc_nodes(1, 16)
    with pytest.raises(InvalidArgument):
        disc_nodes(8, 1)


@given(a=st.integers(0, 5), b=st.integers(0, 5))
def test_disc_polynomial_exactness(a, b):
    rule = disc_nodes(6, 20)
    z = rule.nodes
    value = rule.integrate(z**a * np.conj(z) ** b)
    expected = 2 * np.pi / (2 * a + 2) if a == b else 0.0
    assert abs(value - expected) <= 1e-10 * max(1.0, abs(expected))


def test_circle_rule():
    rule = circle_nodes(8)
    assert abs(rule.weights.sum() - 2 * np.pi) < 1e-14
    assert np.allclose(np.abs(rule.nodes), 1, atol=1e-12)
    assert abs(rule.integrate(rule.nodes)) < 1e-14


def test_circle_residue():
    rule = circle_nodes(16)
    zeta = rule.nodes
    # (1/2πi)∮ dζ/ζ with dζ = iζ dθ
    value = rule.integrate(1j * zeta / zeta) / (2j * np.pi)
    assert abs(value - 1) < 1e-14


def test_circle_guard():
    with pytest.raises(InvalidArgument):
        circle_nodes(3)


@given(m=st.integers(4, 40), data=st.data())
def test_trapezoid_exact_for_trig_polynomials(m, data):
    deg = data.draw(st.integers(0, (m - 1) // 2))
    coef = data.draw(st.lists(st.complex_numbers(max_magnitude=2, allow_nan=False, allow_infinity=False),
                              min_size=2 * deg + 1, max_size=2 * deg + 1))
    rule = circle_nodes(m)
    theta = np.angle(rule.nodes)
    ks = np.arange(-deg, deg + 1)
    f = sum(c * np.exp(1j * k * theta) for c, k in zip(coef, ks))
    assert abs(rule.integrate(f) - 2 * np.pi * coef[deg]) < 1e-12 * max(1, sum(map(abs, coef)))


def test_torus_counts():
    rule = torus_nodes(2, 8)
    assert len(rule) == 64
    assert abs(rule.weights.sum() - (2 * np.pi) ** 2) < 1e-12
    assert len(torus_nodes(3, 4)) == 64
    one = torus_nodes(1, 8)
    circ = circle_nodes(8)
    assert np.allclose(one.nodes[:, 0], circ.nodes) and np.allclose(one.weights, circ.weights)


def test_torus_guard():
    with pytest.raises(ResourceGuardError):
        torus_nodes(4, 101)


def test_radial_plain():
    rule = radial_profile_nodes(1.0, 16, [])
    assert len(rule) == 16
    assert abs(rule.weights.sum() - 1) < 1e-14
    assert np.all((rule.nodes > 0) & (rule.nodes < 1))


def test_radial_panels_exclude_breakpoint():
    rule = radial_profile_nodes(0.8, 16, [0.5])
    assert np.min(np.abs(rule.nodes - 0.5)) > 1e-12
    assert abs(rule.weights.sum() - 0.8) < 1e-13
    assert np.any(rule.nodes < 0.5) and np.any(rule.nodes > 0.5)
    # each panel is integrated separately: x on [0, 0.5] ∪ [0.5, 0.8]
    below = rule.nodes < 0.5
    assert abs(np.sum(rule.weights[below]) - 0.5) < 1e-13


def test_radial_log_singularity():
    rule = radial_profile_nodes(1.0, 128, [0.5])
    value = rule.integrate(np.abs(np.log(np.abs(rule.nodes - 0.5))))
    assert abs(value - (1 + np.log(2))) < 1e-3


def test_radial_refinement_monotone():
    errs = []
    for count in (32, 64, 128):
        rule = radial_profile_nodes(1.0, count, [0.5])
        errs.append(abs(rule.integrate(np.abs(np.log(np.abs(rule.nodes - 0.5)))) - (1 + np.log(2))))
    assert errs[1] <= errs[0] and errs[2] <= errs[1]


def test_disc_refinement_monotone():
    errs = [abs(disc_nodes(r, 2 * r).integrate(np.abs(disc_nodes(r, 2 * r).nodes) ** 2) - np.pi / 2)
            for r in (4, 8, 16)]
    assert errs[1] <= errs[0] + 1e-15 and errs[2] <= errs[1] + 1e-15


def test_radial_guards():
    with pytest.raises(InvalidArgument):
        radial_profile_nodes(0.0, 16)
    with pytest.raises(InvalidArgument):
        radial_profile_nodes(1.5, 16)


@given(t_max=st.floats(0.05, 1.0), excl=st.lists(st.floats(0.0, 1.0), max_size=3))
def test_radial_measure_and_exclusions(t_max, excl):
    rule = radial_profile_nodes(t_max, 24, excl)
    assert abs(rule.weights.sum() - t_max) < 1e-12
    assert np.all(rule.weights > 0)
    for e in excl:
        # graded panels approach an exclusion geometrically but never reach it
        assert np.all(rule.nodes != e)


def test_weighted_nodes_integrate_batches():
    rule = WeightedNodes(np.array([0.0, 1.0]), np.array([0.5, 0.5]))
    vals = np.array([[1.0, 3.0], [2.0, 2.0]])
    assert np.allclose(rule.integrate(vals), [2.0, 2.0])
