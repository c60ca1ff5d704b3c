import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from _helpers import params, rel, seeds
from gdoi.errors import InputError, SpectraOverlap
from gdoi.funcalc import identity, pi1, pi2, power, truncated_exp
from gdoi.perturb import (
    DivergenceTriple,
    continuity_probe,
    divergence_triple,
    mu_extra_term,
    perturbation_commutator,
    perturbation_difference,
    predict_nilpotency,
    splitting_check,
    telescope_residual,
)
from gdoi.randmat import random_basis, random_polynomial
from gdoi.spectral import JordanStructureSpec, diagonal_decomposition, synthesize


def scalar(value, n=2):
    return diagonal_decomposition([value] * n)


def jordan(*blocks, basis=None):
    return synthesize(JordanStructureSpec(tuple(blocks)), basis)[1]


def test_identity_function_commutator_is_exact():
    (d1, d2), Y = params(2)
    assert perturbation_commutator(identity(), d1, d2, Y).residual <= 1e-14


def test_scalar_commutator():
    chk = perturbation_commutator(power(2), scalar(1), scalar(2), np.eye(2))
    np.testing.assert_allclose(chk.lhs, -3 * np.eye(2))
    np.testing.assert_allclose(chk.rhs, -3 * np.eye(2))


def test_scalar_difference():
    chk = perturbation_difference(power(2), scalar(3), scalar(1))
    np.testing.assert_allclose(chk.lhs, 8 * np.eye(2))
    np.testing.assert_allclose(chk.rhs, 8 * np.eye(2))
    assert chk.residual == 0


def test_overlapping_spectra_rejected():
    with pytest.raises(SpectraOverlap):
        perturbation_difference(power(2), scalar(1), diagonal_decomposition([1, 3]))


def test_difference_with_truncated_exp():
    (d1, d2), _ = params(77, n_max=8)
    assert perturbation_difference(truncated_exp(12), d1, d2).residual <= 1e-7


@given(seeds)
def test_commutator_identity(seed):
    (d1, d2), Y = params(seed)
    f = random_polynomial(np.random.default_rng(seed), 5, scale=0.5)
    assert perturbation_commutator(f, d1, d2, Y).residual <= 1e-8


def test_mu_single_jordan_block():
    mu = mu_extra_term(power(2), jordan((3, 2)), diagonal_decomposition([0, 5]))
    np.testing.assert_allclose(mu, [[0, 6], [0, 0]], atol=1e-14)
    tri = divergence_triple(mu)
    assert (tri.l1, tri.l2) == (0, 2)
    assert tri.r == pytest.approx(6)


def test_mu_vanishes_for_diagonalizable():
    (d1, d2), _ = params(4, block_max=1)
    assert not mu_extra_term(power(3), d1, d2).any()


@given(seeds)
def test_mu_matches_derivative_sums(seed):
    (d1, d2), _ = params(seed)
    f = random_polynomial(np.random.default_rng(seed), 5)
    want = np.zeros((d1.n, d1.n), dtype=complex)
    for dec, sign in ((d1, 1), (d2, -1)):
        for c in dec.components:
            for q in range(1, c.index):
                want += sign * f.derivative(q, c.eigenvalue) / math.factorial(q) * c.factor(q)
    assert rel(mu_extra_term(f, d1, d2), want) <= 1e-10


@given(seeds)
def test_splitting_identity(seed):
    (d1, d2), _ = params(seed)
    f = random_polynomial(np.random.default_rng(seed), 5, scale=0.5)
    assert splitting_check(f, d1, d2).residual <= 1e-9


def test_divergence_triple_examples():
    assert divergence_triple(np.zeros((3, 3))) == DivergenceTriple(0, 0, 0.0)
    assert divergence_triple(6 * np.array([[0, 1], [0, 0]])).as_tuple() == (0, 2, 6.0)
    tri = divergence_triple(np.eye(4))
    assert (tri.l1, tri.l2) == (4, 0)
    assert tri.r == pytest.approx(2.0)


def test_divergence_triple_is_scale_invariant():
    N = np.diag([1.0, 1.0], k=1)
    for s in (1e-6, 1.0, 1e6):
        assert divergence_triple(s * N, scale=s).l2 == 3


triples = st.builds(
    DivergenceTriple,
    st.integers(0, 3),
    st.integers(0, 3),
    st.floats(0, 10, allow_nan=False),
)


@given(st.lists(triples, min_size=1, max_size=12))
def test_triples_are_totally_ordered(ts):
    ordered = sorted(ts)
    assert [t.as_tuple() for t in ordered] == sorted(t.as_tuple() for t in ts)
    for a in ts:
        assert a <= a
        for b in ts:
            assert (a <= b) or (b <= a)
            if a <= b and b <= a:
                assert a == b
            for c in ts:
                if a <= b <= c:
                    assert a <= c


def test_identity_basis_jordan_pair_is_predicted():
    d1, d2 = jordan((0, 2), (1, 1)), jordan((3, 1), (4, 2))
    pred = predict_nilpotency(d1, d2)
    assert pred.nilpotent
    tri = divergence_triple(mu_extra_term(power(3), d1, d2))
    assert tri.l1 == 0 and tri.l2 <= pred.degree_bound


def test_triangular_mu_can_exceed_largest_index():
    # N1 = E23, N2 = E12: both strictly upper, but mu^2 = -ab E13 != 0
    d1, d2 = jordan((1, 1), (2, 2)), jordan((-1, 2), (-2, 1))
    pred = predict_nilpotency(d1, d2)
    assert pred.branch == "triangular" and pred.degree_bound == 3
    mu = mu_extra_term(power(2), d1, d2)
    tri = divergence_triple(mu)
    assert tri.l1 == 0 and tri.l2 == 3 > max(d1.max_index, d2.max_index)


def test_diagonalizable_partner_commutes(rng):
    d1 = jordan((0.5, 3), (2, 1), basis=random_basis(rng, 4, 20.0))
    d2 = diagonal_decomposition([-1, -2, 3j, 4])
    pred = predict_nilpotency(d1, d2, "commuting")
    assert pred.branch == "commuting" and pred.degree_bound == 4
    tri = divergence_triple(mu_extra_term(power(4), d1, d2))
    assert tri.l1 == 0 and tri.l2 <= pred.degree_bound


def test_noncommuting_nilpotents_give_no_prediction(rng):
    d1 = jordan((0, 2), (1, 1), basis=random_basis(rng, 3, 5.0))
    d2 = jordan((3, 2), (4, 1), basis=random_basis(rng, 3, 5.0))
    pred = predict_nilpotency(d1, d2)
    assert not pred.fired and pred.degree_bound is None


def test_bad_hint():
    with pytest.raises(InputError):
        predict_nilpotency(scalar(1), scalar(2), "diagonal")


@given(seeds)
def test_commuting_prediction_confirmed(seed):
    rng = np.random.default_rng(seed)
    (d1,), _ = params(seed, count=1)
    d2 = diagonal_decomposition(3 + rng.standard_normal(d1.n))
    pred = predict_nilpotency(d1, d2, "commuting")
    assert pred.fired
    f = random_polynomial(rng, 5)
    tri = divergence_triple(mu_extra_term(f, d1, d2), scale=max(1.0, np.linalg.norm(d1.matrix)))
    assert tri.l1 == 0 and tri.l2 <= pred.degree_bound


def test_telescope_scalar_and_identity():
    Y = np.eye(2)
    assert telescope_residual(power(2), scalar(3), scalar(1), scalar(0), Y) == 0
    (a, b, x), Z = params(9, count=3)
    # both sides vanish up to rounding: f^[1] = 1 and f^[2] = 0
    assert telescope_residual(identity(), a, b, x, Z) <= 1e-12


@given(seeds)
def test_telescope_identity(seed):
    (a, b, x), Y = params(seed, count=3, n_max=6)
    f = random_polynomial(np.random.default_rng(seed), 3)
    assert telescope_residual(f, a, b, x, Y) <= 1e-8


def test_continuity_scalar_closed_form():
    l1, l2 = 1.5, -2.0
    d1 = synthesize(JordanStructureSpec(((l1, 1), (l1, 1))))[1]
    d2 = synthesize(JordanStructureSpec(((l2, 1), (l2, 1))))[1]
    Y = np.array([[1.0, 2.0], [0.5, -1.0]])
    scales = [0.0, 1e-1, 1e-3]
    dev = continuity_probe(pi1() * pi2(), d1, d2, Y, scales, targets=(True, False))
    assert dev[0] == 0
    for eps, d in zip(scales[1:], dev[1:]):
        assert d == pytest.approx(eps * abs(l2) * np.linalg.norm(Y), rel=1e-9)


def test_continuity_decreases():
    rng = np.random.default_rng(3)
    (d1, d2), Y = params(3, n_max=6)
    beta = pi1() * pi2() + pi1()
    dev = continuity_probe(beta, d1, d2, Y, [1e-2, 1e-3, 1e-4], seed=int(rng.integers(100)))
    assert dev[0] > dev[1] > dev[2]


def test_continuity_rejects_colliding_scale(monkeypatch):
    import gdoi.perturb as perturb

    real = perturb._perturbed

    def fake(dec, eps, delta, E):
        if eps == 0.5:
            raise SpectraOverlap("perturbed eigenvalues collide")
        return real(dec, eps, delta, E)

    monkeypatch.setattr(perturb, "_perturbed", fake)
    with pytest.warns(RuntimeWarning, match="rejected"):
        dev = continuity_probe(pi1(), scalar(1), scalar(5), np.eye(2), [1e-3, 0.5])
    assert np.isfinite(dev[0]) and np.isnan(dev[1])


def test_continuity_needs_synthesized_input():
    from gdoi.spectral import decompose

    dec = decompose(np.diag([1.0, 2.0]))
    with pytest.raises(InputError):
        continuity_probe(pi1(), dec, scalar(5), np.eye(2), [1e-3])
