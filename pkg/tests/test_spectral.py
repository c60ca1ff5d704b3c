import numpy as np
import pytest
from hypothesis import given

from _helpers import seeds
from gdoi.errors import ClusterAmbiguity, ConditioningExceeded, DimensionMismatch, InputError, SingularBasis
from gdoi.randmat import random_basis, random_block_template, sample_separated, structure_from_template
from gdoi.spectral import (
    JordanStructureSpec,
    SpectralComponent,
    SpectralDecomposition,
    decompose,
    diagonal_decomposition,
    fro,
    split_pn,
    synthesize,
    validate,
)


def test_single_jordan_block():
    X, dec = synthesize(JordanStructureSpec(((3, 2),)))
    np.testing.assert_array_equal(X, [[3, 1], [0, 3]])
    (c,) = dec.components
    assert c.eigenvalue == 3 and c.index == 2
    np.testing.assert_array_equal(c.projector, np.eye(2))
    np.testing.assert_array_equal(c.nilpotent, [[0, 1], [0, 0]])


def test_diagonal_structure():
    X, dec = synthesize(JordanStructureSpec(((1, 1), (2, 1))))
    np.testing.assert_array_equal(X, np.diag([1, 2]))
    p1, p2 = (c.projector for c in dec.components)
    np.testing.assert_array_equal(p1, np.diag([1, 0]))
    np.testing.assert_array_equal(p2, np.diag([0, 1]))
    assert all(c.index == 1 and not c.nilpotent.any() for c in dec.components)


def test_repeated_eigenvalue_is_aggregated():
    _, dec = synthesize(JordanStructureSpec(((1, 2), (1, 1), (4, 1))))
    assert len(dec.components) == 2
    c = dec.components[0]
    np.testing.assert_array_equal(c.projector, np.diag([1, 1, 1, 0]))
    assert c.index == 2


def test_random_basis_reconstructs(rng):
    U = random_basis(rng, 3, 5.0)
    X, dec = synthesize(JordanStructureSpec(((0, 2), (5, 1))), U)
    direct = U @ np.array([[0, 1, 0], [0, 0, 0], [0, 0, 5]]) @ np.linalg.inv(U)
    assert fro(X - direct) <= 1e-12 * fro(direct)
    assert fro(dec.reconstruct() - X) <= 1e-10 * fro(X)


def test_synthesize_errors(rng):
    spec = JordanStructureSpec(((1, 2),))
    with pytest.raises(SingularBasis):
        synthesize(spec, np.array([[1, 2], [2, 4]]))
    with pytest.raises(ConditioningExceeded):
        synthesize(spec, random_basis(rng, 2, 1e4), cond_cap=10)
    with pytest.raises(DimensionMismatch):
        synthesize(spec, np.eye(3))
    with pytest.raises(InputError):
        JordanStructureSpec(((1, 0),))


def test_validate_flags_corrupted_projector(rng):
    _, dec = synthesize(JordanStructureSpec(((1, 1), (2, 2))), random_basis(rng, 3, 3.0))
    assert validate(dec).ok
    c = dec.components[0]
    bad = SpectralComponent(c.eigenvalue, c.projector + 0.1 * np.eye(3), c.nilpotent, c.index)
    corrupted = SpectralDecomposition(dec.n, (bad, *dec.components[1:]))
    report = validate(corrupted)
    assert not report["idempotency"].passed


def test_validate_zero_matrix_is_exact():
    z = np.zeros((3, 3), dtype=complex)
    dec = SpectralDecomposition(3, (SpectralComponent(0j, np.eye(3, dtype=complex), z, 1),))
    report = validate(dec, source=z)
    assert report.ok
    assert all(c.value == 0 for c in report.checks)


def test_validate_catches_overstated_index():
    _, dec = synthesize(JordanStructureSpec(((2, 2),)))
    c = dec.components[0]
    inflated = SpectralDecomposition(2, (SpectralComponent(c.eigenvalue, c.projector, c.nilpotent, 3),))
    assert not validate(inflated)["index_minimality"].passed


def test_split_pn_single_block():
    _, dec = synthesize(JordanStructureSpec(((3, 2),)))
    xp, xn = split_pn(dec)
    np.testing.assert_array_equal(xp, 3 * np.eye(2))
    np.testing.assert_array_equal(xn, [[0, 1], [0, 0]])


def test_split_pn_diagonalizable_has_no_nilpotent_part():
    _, xn = split_pn(diagonal_decomposition([1, 2, 2, 5]))
    assert not xn.any()


def test_split_pn_sums_to_matrix(rng):
    X, dec = synthesize(JordanStructureSpec(((1, 2), (2, 1))), random_basis(rng, 3, 8.0))
    xp, xn = split_pn(dec)
    assert fro(xp + xn - X) <= 1e-10 * fro(X)


def test_decompose_diagonal():
    dec = decompose(np.diag([1.0, 2.0, 3.0]))
    assert sorted(dec.eigenvalues.real) == pytest.approx([1, 2, 3])
    assert all(fro(c.nilpotent) < 1e-12 for c in dec.components)


def test_decompose_jordan_block():
    dec = decompose(np.array([[3.0, 1.0], [0.0, 3.0]]))
    (c,) = dec.components
    assert c.eigenvalue == pytest.approx(3)
    assert c.index == 2
    np.testing.assert_allclose(c.nilpotent, [[0, 1], [0, 0]], atol=1e-7)


def test_decompose_ambiguous_clusters():
    with pytest.raises(ClusterAmbiguity):
        decompose(np.diag([1.0, 1.0 + 3e-5]))


@given(seeds)
def test_decompose_round_trip(seed):
    rng = np.random.default_rng(seed)
    template = random_block_template(rng, n_max=6, block_max=2)
    template = [[max(g)] for g in template]
    lams = sample_separated(rng, len(template), radius=2.0, separation=0.3)
    U = random_basis(rng, sum(map(sum, template)), 1 + 9 * rng.random())
    X, truth = synthesize(structure_from_template(template, lams), U)
    got = decompose(X)
    assert len(got.components) == len(truth.components)
    for c in truth.components:
        match = min(got.components, key=lambda g: abs(g.eigenvalue - c.eigenvalue))
        assert fro(match.projector - c.projector) <= 1e-8 * max(1.0, fro(c.projector))
        assert fro(match.nilpotent - c.nilpotent) <= 1e-8 * max(1.0, fro(X))
        assert match.index == c.index


@given(seeds)
def test_synthesized_invariants(seed):
    rng = np.random.default_rng(seed)
    template = random_block_template(rng, n_max=8, block_max=4)
    lams = sample_separated(rng, len(template), radius=2.0, separation=0.1)
    U = random_basis(rng, sum(map(sum, template)), np.exp(rng.uniform(0, np.log(100))))
    X, dec = synthesize(structure_from_template(template, lams), U)
    report = validate(dec, source=X)
    assert report.ok, report.failures()
    assert fro(dec.reconstruct() - X) <= 1e-10 * fro(X)
