import numpy as np
import pytest
from hypothesis import given

from _helpers import params, rel, seeds
from gdoi.doi import (
    compose,
    doi_hermitian,
    doi_variant_post,
    doi_variant_pre,
    gdoi,
    gdoi_split,
    gtoi,
    gtoi_split,
)
from gdoi.errors import DimensionMismatch, NonDiagonalizableInput
from gdoi.funcalc import Poly2, Poly3, const2, const3, divided_diff_1, pi1, pi2, power
from gdoi.randmat import InstanceConfig, random_matrix, random_parameters
from gdoi.spectral import JordanStructureSpec, diagonal_decomposition, synthesize

N2 = np.array([[0, 1], [0, 0]])


def jordan(*blocks):
    return synthesize(JordanStructureSpec(tuple(blocks)))[1]


def scalar(value, n=2):
    return diagonal_decomposition([value] * n)


def test_constant_symbol_is_identity_map():
    (d1, d2), Y = params(11)
    assert rel(gdoi(const2(1), d1, d2, Y), Y) <= 1e-12


def test_sum_symbol_on_scalar_parameters(rng):
    Y = random_matrix(rng, 2)
    np.testing.assert_allclose(gdoi(pi1() + pi2(), scalar(1), scalar(2), Y), 3 * Y, rtol=1e-15)


def test_product_symbol_on_jordan_and_scalar():
    parts = gdoi_split(pi1() * pi2(), jordan((0, 2)), scalar(2), np.eye(2))
    np.testing.assert_array_equal(parts.A3, 2 * N2)
    for a in (parts.A1, parts.A2, parts.A4):
        assert not a.any()
    np.testing.assert_array_equal(parts.total(), 2 * N2)


def test_cube_divided_difference_hand_expansion():
    # f = z^3: f[0, 2] = 4 and d/dz1 f[z1, z2] = 2 z1 + z2 = 2 at (0, 2)
    parts = gdoi_split(divided_diff_1(power(3)), jordan((0, 2)), scalar(2), np.eye(2))
    np.testing.assert_array_equal(parts.A1, 4 * np.eye(2))
    np.testing.assert_array_equal(parts.A3, 2 * N2)
    np.testing.assert_array_equal(parts.total(), [[4, 2], [0, 4]])


def test_diagonalizable_pair_has_only_projector_part(rng):
    (d1, d2), Y = params(3, n_max=5, block_max=1)
    parts = gdoi_split(Poly2(rng.standard_normal((3, 3))), d1, d2, Y)
    for a in (parts.A2, parts.A3, parts.A4):
        assert not a.any()


@given(seeds)
def test_split_sums_to_gdoi_exactly(seed):
    (d1, d2), Y = params(seed)
    beta = Poly2(np.random.default_rng(seed).standard_normal((4, 4)))
    np.testing.assert_array_equal(gdoi_split(beta, d1, d2, Y).total(), gdoi(beta, d1, d2, Y))


@given(seeds)
def test_hermitian_reduction_is_exact(seed):
    (d1, d2), Y = params(seed, block_max=1, unitary=True)
    beta = Poly2(np.random.default_rng(seed).standard_normal((3, 3)))
    np.testing.assert_array_equal(gdoi(beta, d1, d2, Y), doi_hermitian(beta, d1, d2, Y))


def test_hermitian_product_oracle():
    d1, d2 = diagonal_decomposition([1, 2, 3]), diagonal_decomposition([-1, 5, 0.5])
    np.testing.assert_array_equal(doi_hermitian(pi1() * pi2(), d1, d2, np.eye(3)), d1.matrix @ d2.matrix)
    np.testing.assert_array_equal(doi_hermitian(const2(1), d1, d2, np.eye(3)), np.eye(3))


def test_hermitian_rejects_jordan_block():
    with pytest.raises(NonDiagonalizableInput):
        doi_hermitian(const2(1), jordan((0, 2)), scalar(1), np.eye(2))


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        gdoi(const2(1), scalar(1, 2), scalar(2, 3), np.eye(2))
    with pytest.raises(DimensionMismatch):
        gdoi(const2(1), scalar(1, 2), scalar(2, 2), np.eye(3))


def test_variants(rng):
    Y = random_matrix(rng, 2)
    d1, d2 = jordan((0, 2)), scalar(1)
    np.testing.assert_allclose(doi_variant_post(pi1() * pi2(), d1, d2, Y), N2 @ Y)
    np.testing.assert_allclose(doi_variant_pre(const2(1), d1, d2, Y), Y)
    np.testing.assert_allclose(doi_variant_post(const2(1), d1, d2, Y), Y)
    a, b = diagonal_decomposition([1, 4]), diagonal_decomposition([2, -3])
    np.testing.assert_allclose(doi_variant_pre(pi1() + pi2(), a, b, Y), Y @ (a.matrix + b.matrix))


def test_coordinate_symbols_multiply():
    (d1, d2), Y = params(21)
    assert rel(gdoi(pi1(), d1, d2, Y), d1.matrix @ Y) <= 1e-12
    assert rel(gdoi(pi2(), d1, d2, Y), Y @ d2.matrix) <= 1e-12


def test_compose_oracles(rng):
    (d1, d2), Y = params(8)
    gamma = Poly2(rng.standard_normal((2, 3)))
    assert rel(compose(const2(1), gamma, d1, d2, Y), gdoi(gamma, d1, d2, Y)) <= 1e-12
    assert rel(compose(gamma, const2(1), d1, d2, Y), gdoi(gamma, d1, d2, Y)) <= 1e-12
    a, b = diagonal_decomposition([1, 2, 3]), diagonal_decomposition([4, 5, 6])
    Z = random_matrix(rng, 3)
    assert rel(compose(pi1(), pi2(), a, b, Z), a.matrix @ Z @ b.matrix) <= 1e-14


@given(seeds)
def test_additivity(seed):
    rng = np.random.default_rng(seed)
    (d1, d2), Y = params(seed)
    b, g = Poly2(rng.standard_normal((4, 4))), Poly2(rng.standard_normal((3, 4)))
    c1, c2 = complex(*rng.standard_normal(2)), complex(*rng.standard_normal(2))
    lhs = gdoi(c1 * b + c2 * g, d1, d2, Y)
    assert rel(lhs, c1 * gdoi(b, d1, d2, Y) + c2 * gdoi(g, d1, d2, Y)) <= 1e-10


@given(seeds)
def test_multiplicativity(seed):
    rng = np.random.default_rng(seed)
    (d1, d2), Y = params(seed)
    b, g = Poly2(rng.standard_normal((3, 3))), Poly2(rng.standard_normal((3, 3)))
    assert rel(gdoi(b * g, d1, d2, Y), compose(b, g, d1, d2, Y)) <= 1e-9


@given(seeds)
def test_injectivity_probe(seed):
    rng = np.random.default_rng(seed)
    (d1, d2), _ = params(seed)
    deg = max(d1.max_index, d2.max_index) + 1
    b = Poly2(rng.standard_normal((deg, deg)))
    g = Poly2(b.coeffs + 0.1 * rng.standard_normal((deg, deg)))
    eye = np.eye(d1.n)
    assert rel(gdoi(b, d1, d2, eye), gdoi(g, d1, d2, eye)) > 1e-8


def test_gtoi_oracles(rng):
    Y1, Y2 = random_matrix(rng, 3), random_matrix(rng, 3)
    decs = [diagonal_decomposition(v) for v in ([1, 2, 3], [-1, 0.5, 4], [2, 2, 7])]
    X1, X2, X3 = (d.matrix for d in decs)
    assert rel(gtoi(const3(1), *decs, Y1, Y2), Y1 @ Y2) <= 1e-14
    z1 = np.zeros((2, 1, 1))
    z1[1, 0, 0] = 1
    assert rel(gtoi(Poly3(z1), *decs, Y1, Y2), X1 @ Y1 @ Y2) <= 1e-14
    c = np.zeros((2, 2, 2))
    c[1, 1, 1] = 1
    assert rel(gtoi(Poly3(c), *decs, Y1, Y2), X1 @ Y1 @ X2 @ Y2 @ X3) <= 1e-14


@given(seeds)
def test_gtoi_product_symbol_on_jordan_parameters(seed):
    rng = np.random.default_rng(seed)
    decs = random_parameters(rng, InstanceConfig(n_max=5), count=3)
    Y1, Y2 = random_matrix(rng, decs[0].n), random_matrix(rng, decs[0].n)
    c = np.zeros((2, 2, 2))
    c[1, 1, 1] = 1
    X1, X2, X3 = (d.matrix for d in decs)
    split = gtoi_split(Poly3(c), *decs, Y1, Y2)
    assert rel(split.total(), X1 @ Y1 @ X2 @ Y2 @ X3) <= 1e-10
    np.testing.assert_array_equal(split.total(), gtoi(Poly3(c), *decs, Y1, Y2))
