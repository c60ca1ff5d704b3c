import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from _helpers import params, seeds
from gdoi.bounds import (
    gdoi_lower_bound,
    gdoi_upper_bound,
    gtoi_upper_bound,
    holder_constants,
    holder_upper_bound,
    lipschitz_bounds,
    reverse_triangle_lower,
)
from gdoi.errors import EmptyList, InputError, NuViolation
from gdoi.funcalc import Poly2, Poly3, const2, const3, divided_diff_2, identity, pi1, pi2, power
from gdoi.randmat import InstanceConfig, random_matrix, random_parameters, random_polynomial
from gdoi.spectral import JordanStructureSpec, diagonal_decomposition, synthesize

SQ2 = math.sqrt(2)


def scalar(value, n=2):
    return diagonal_decomposition([value] * n)


def test_reverse_triangle_examples():
    assert reverse_triangle_lower([5, 1, 1, 1]) == 2
    assert reverse_triangle_lower([1, 5, 1, 1]) == 2
    assert reverse_triangle_lower([1, 1, 1, 1]) == 0
    with pytest.raises(EmptyList):
        reverse_triangle_lower([])


@given(seeds)
def test_reverse_triangle_property(seed):
    rng = np.random.default_rng(seed)
    mats = [random_matrix(rng, 4, scale=s) for s in rng.uniform(0, 3, 4)]
    lower = reverse_triangle_lower([np.linalg.norm(a) for a in mats])
    assert lower <= np.linalg.norm(sum(mats)) + 1e-12


def test_constant_symbol_saturates_upper_bound():
    (d1, d2), Y = params(1)
    rep = gdoi_upper_bound(const2(2.5), d1, d2, Y)
    assert rep.bound_value == pytest.approx(2.5 * np.linalg.norm(Y), rel=1e-14)
    assert abs(rep.slack) <= 1e-10 * rep.bound_value
    assert rep.satisfied


def test_upper_bound_terms_hand_computed():
    d1 = synthesize(JordanStructureSpec(((0, 2),)))[1]
    rep = gdoi_upper_bound(pi1() * pi2(), d1, scalar(2), np.eye(2))
    assert rep.terms == pytest.approx({"B1": 0.0, "B2": 0.0, "B3": 2 * SQ2, "B4": 0.0})
    assert rep.bound_value == pytest.approx(2 * SQ2)
    assert rep.actual_value == pytest.approx(2.0)
    assert rep.satisfied


def test_diagonal_upper_bound():
    d1, d2 = diagonal_decomposition([1, -3]), diagonal_decomposition([2, 0.5])
    Y = np.array([[1.0, 2.0], [3.0, 4.0]])
    rep = gdoi_upper_bound(pi1() * pi2(), d1, d2, Y)
    assert rep.bound_value == pytest.approx(6 * np.linalg.norm(Y))
    assert rep.satisfied


def test_oblique_projectors_break_upper_bound():
    # X1 = [[1, 2a], [0, -1]] has spectral radius 1 but ||X1 Y|| can exceed ||Y||
    a = 3.0
    U = np.array([[1.0, -a], [0.0, 1.0]])
    X, d1 = synthesize(JordanStructureSpec(((1, 1), (-1, 1))), U)
    np.testing.assert_allclose(X, [[1, 2 * a], [0, -1]], atol=1e-14)
    rep = gdoi_upper_bound(pi1(), d1, scalar(5), np.eye(2))
    assert rep.bound_value == pytest.approx(SQ2)
    assert rep.actual_value == pytest.approx(math.sqrt(2 + 4 * a * a))
    assert not rep.satisfied


def test_lower_bound_diagonalizable_is_exact():
    (d1, d2), Y = params(6, block_max=1)
    rep = gdoi_lower_bound(Poly2([[1, 2], [0.5, 1]]), d1, d2, Y)
    assert rep.bound_value == pytest.approx(rep.actual_value, rel=1e-13)
    assert rep.satisfied


def test_min_beta_branch_with_constant_symbol():
    (d1, d2), _ = params(6)
    n = d1.n
    rep = gdoi_lower_bound(const2(1), d1, d2, np.eye(n))
    assert rep.details["min_beta_branch"] == "applied"
    assert rep.alternatives["min_beta"] == pytest.approx(math.sqrt(n))
    assert rep.actual_value == pytest.approx(math.sqrt(n))
    assert rep.satisfied


def test_min_beta_branch_skipped_for_complex_symbol():
    rep = gdoi_lower_bound(const2(1j), scalar(1), scalar(2), np.eye(2))
    assert rep.details["min_beta_branch"].startswith("unsupported")
    assert "min_beta" not in rep.alternatives


def test_gtoi_constant_and_diagonal():
    rng = np.random.default_rng(0)
    Y1, Y2 = random_matrix(rng, 3), random_matrix(rng, 3)
    decs = [diagonal_decomposition(v) for v in ([1, 2, 3], [-1, 0.5, 4], [2, 2, 7])]
    rep = gtoi_upper_bound(const3(1), *decs, Y1, Y2)
    assert rep.bound_value == pytest.approx(np.linalg.norm(Y1) * np.linalg.norm(Y2))
    assert rep.actual_value == pytest.approx(np.linalg.norm(Y1 @ Y2))
    c = np.zeros((2, 2, 2))
    c[1, 1, 1] = 1
    rep = gtoi_upper_bound(Poly3(c), *decs, Y1, Y2)
    assert rep.terms["B1"] == pytest.approx(3 * 4 * 7 * np.linalg.norm(Y1) * np.linalg.norm(Y2))
    assert sum(v for k, v in rep.terms.items() if k != "B1") == 0
    assert rep.satisfied


def test_lipschitz_identity_is_tight():
    (d1, d2), _ = params(12)
    up, low = lipschitz_bounds(identity(), d1, d2)
    t = np.linalg.norm(d1.matrix - d2.matrix)
    assert up.bound_value == pytest.approx(t, rel=1e-14)
    assert abs(up.slack) <= 1e-10 * max(1.0, t)
    assert up.satisfied and low.satisfied


def test_lipschitz_scalar_square():
    up, low = lipschitz_bounds(power(2), scalar(3), scalar(1))
    assert up.actual_value == pytest.approx(8 * SQ2)
    assert up.bound_value == pytest.approx(8 * SQ2)
    assert up.satisfied and low.satisfied


def test_holder_scalar_hand_computation():
    t = 3 * SQ2
    k = holder_constants(power(2), scalar(4), scalar(1), 0.5, nu=1.0, nu_prime=1.0)
    assert k.M == pytest.approx(t)
    assert k.C == pytest.approx(math.sqrt(t))
    assert k.C_prime == 1.0
    # grid {1, 2.5, 4}: the (1, 4) pair gives 15 / sqrt(3)
    assert k.D_omega == pytest.approx(15 / math.sqrt(3))
    rep = holder_upper_bound(power(2), scalar(4), scalar(1), 0.5, nu=1.0, nu_prime=1.0)
    assert rep.bound_value == pytest.approx(t * 15 / math.sqrt(3))
    assert rep.actual_value == pytest.approx(15 * SQ2)
    assert rep.satisfied


def test_holder_omega_one_collapses_to_lipschitz():
    (d1, d2), _ = params(13, unitary=True)
    t = np.linalg.norm(d1.matrix - d2.matrix)
    k = holder_constants(identity(), d1, d2, 1.0, nu=t / 2, nu_prime=0.05)
    assert (k.C, k.C_prime) == (1.0, 1.0)
    rep = holder_upper_bound(identity(), d1, d2, 1.0, nu=t / 2, nu_prime=0.05)
    assert rep.bound_value == pytest.approx(t)
    assert rep.actual_value == pytest.approx(t)


def test_holder_constant_branches():
    k = holder_constants(power(2), scalar(4), scalar(1), 2.0, nu=2.0, nu_prime=1.0, diameter=5.0)
    assert k.C == pytest.approx(2.0 ** -1)
    assert k.C_prime == pytest.approx(5.0)


def test_holder_preconditions():
    with pytest.raises(NuViolation):
        holder_constants(power(2), scalar(4), scalar(1), 0.5, nu=10.0, nu_prime=1.0)
    with pytest.raises(NuViolation):
        holder_constants(power(2), scalar(4), scalar(1), 0.5, nu=1.0, nu_prime=5.0)
    with pytest.raises(InputError):
        holder_constants(power(2), scalar(4), scalar(1), 0.0, nu=1.0, nu_prime=1.0)


@given(seeds, st.floats(0.2, 0.95))
def test_lipschitz_seminorm_dominated_by_holder(seed, omega):
    (d1, d2), _ = params(seed)
    f = random_polynomial(np.random.default_rng(seed), 3)
    k = holder_constants(f, d1, d2, omega, nu=1e-3, nu_prime=0.05)
    assert k.D_1 <= k.C_prime * k.D_omega * (1 + 1e-12)


@given(seeds)
def test_upper_bounds_sound_with_unitary_bases(seed):
    rng = np.random.default_rng(seed)
    cfg = InstanceConfig(unitary=True, n_max=6)
    d1, d2, d3 = random_parameters(rng, cfg, count=3)
    Y1, Y2 = random_matrix(rng, d1.n), random_matrix(rng, d1.n)
    f = random_polynomial(rng, 4, scale=0.5)
    beta = Poly2(rng.standard_normal((3, 3)))
    assert gdoi_upper_bound(beta, d1, d2, Y1).satisfied
    assert gdoi_lower_bound(beta, d1, d2, Y1).satisfied
    assert gtoi_upper_bound(divided_diff_2(f), d1, d2, d3, Y1, Y2).satisfied
    up, low = lipschitz_bounds(f, d1, d2)
    assert up.satisfied and low.satisfied
    t = np.linalg.norm(d1.matrix - d2.matrix)
    assert holder_upper_bound(f, d1, d2, 0.7, nu=t, nu_prime=0.05).satisfied


@given(seeds)
def test_lower_bounds_sound_for_any_basis(seed):
    rng = np.random.default_rng(seed)
    (d1, d2), Y = params(seed)
    beta = Poly2(rng.standard_normal((3, 3)))
    assert gdoi_lower_bound(beta, d1, d2, Y).satisfied
    assert lipschitz_bounds(random_polynomial(rng, 4), d1, d2)[1].satisfied
