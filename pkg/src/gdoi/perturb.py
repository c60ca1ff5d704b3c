"""Perturbation identities built on the double and triple operator integrals.

The central identity is

    f(X1) Y - Y f(X2) = T_{f^[1]}^{X1,X2}(X1 Y - Y X2),

valid whenever the spectra of X1 and X2 are disjoint.  With ``Y = I`` and the
integral restricted to the projector parts, the difference between the two
sides is the nilpotent correction ``mu``; ``divergence_triple`` classifies it.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .doi import effective_indices, gdoi, gdoi_split, gtoi
from .errors import InputError, SeparationViolation, SpectraOverlap
from .funcalc import (
    SEP_RTOL,
    AnalyticFn1,
    AnalyticFn2,
    Lift2,
    divided_diff_1,
    divided_diff_2,
    eval_matrix_fn1,
)
from .spectral import JordanStructureSpec, SpectralDecomposition, fro, synthesize

DIVERGENCE_TOL = 1e-8
COMMUTE_TOL = 1e-10


class IdentityCheck(NamedTuple):
    lhs: np.ndarray
    rhs: np.ndarray
    residual: float


class SplitCheck(NamedTuple):
    lhs: np.ndarray
    projector_part: np.ndarray
    mu: np.ndarray
    residual: float


def min_separation(*decs: SpectralDecomposition) -> float:
    """Smallest distance between eigenvalues of different decompositions."""
    gap = math.inf
    for i in range(len(decs)):
        for j in range(i + 1, len(decs)):
            a, b = decs[i].eigenvalues, decs[j].eigenvalues
            gap = min(gap, float(np.min(np.abs(a[:, None] - b[None, :]))))
    return gap


def require_separated(*decs: SpectralDecomposition, sep_rtol: float = SEP_RTOL) -> None:
    radius = max(float(np.max(np.abs(d.eigenvalues))) for d in decs)
    tol = sep_rtol * max(1.0, radius)
    gap = min_separation(*decs)
    if gap < tol:
        raise SpectraOverlap(f"spectra are {gap:.3g} apart, below the separation tolerance {tol:.3g}")


def _relative(diff: np.ndarray, ref: np.ndarray) -> float:
    return fro(diff) / max(1.0, fro(ref))


def perturbation_commutator(f: AnalyticFn1, dec1, dec2, Y) -> IdentityCheck:
    """Both sides of ``f(X1) Y - Y f(X2) = T_{f^[1]}(X1 Y - Y X2)``."""
    require_separated(dec1, dec2)
    Y = np.asarray(Y, dtype=np.complex128)
    X1, X2 = dec1.matrix, dec2.matrix
    lhs = eval_matrix_fn1(f, dec1) @ Y - Y @ eval_matrix_fn1(f, dec2)
    rhs = gdoi(divided_diff_1(f), dec1, dec2, X1 @ Y - Y @ X2)
    return IdentityCheck(lhs, rhs, _relative(lhs - rhs, lhs))


def perturbation_difference(f: AnalyticFn1, dec1, dec2) -> IdentityCheck:
    """Both sides of ``f(X1) - f(X2) = T_{f^[1]}(X1 - X2)``."""
    require_separated(dec1, dec2)
    lhs = eval_matrix_fn1(f, dec1) - eval_matrix_fn1(f, dec2)
    rhs = gdoi(divided_diff_1(f), dec1, dec2, dec1.matrix - dec2.matrix)
    return IdentityCheck(lhs, rhs, _relative(lhs - rhs, lhs))


def mu_extra_term(f: AnalyticFn1, dec1, dec2) -> np.ndarray:
    """Nilpotent correction between the full and projector-only formulas.

    Obtained as the NP part of ``T_{f(z1)}(I)`` minus the PN part of
    ``T_{f(z2)}(I)``, which reduces to the derivative sums of ``f`` over the
    nilpotent powers of each parameter.
    """
    require_separated(dec1, dec2)
    eye = np.eye(dec1.n, dtype=np.complex128)
    left = gdoi_split(Lift2(f, 1), dec1, dec2, eye).A3
    right = gdoi_split(Lift2(f, 2), dec1, dec2, eye).A2
    return left - right


def splitting_check(f: AnalyticFn1, dec1, dec2) -> SplitCheck:
    """``T_{f^[1]}^{X1,X2}(X1-X2) = T_{f^[1]}^{X1P,X2P}(X1P-X2P) + mu``, each term computed separately."""
    require_separated(dec1, dec2)
    beta = divided_diff_1(f)
    lhs = gdoi(beta, dec1, dec2, dec1.matrix - dec2.matrix)
    p1, p2 = dec1.projector_part(), dec2.projector_part()
    proj = gdoi(beta, p1, p2, p1.matrix - p2.matrix)
    mu = mu_extra_term(f, dec1, dec2)
    return SplitCheck(lhs, proj, mu, _relative(lhs - proj - mu, lhs))


@dataclass(frozen=True, order=True)
class DivergenceTriple:
    """``(l1, l2, r)`` compared lexicographically."""

    l1: int
    l2: int
    r: float

    def as_tuple(self) -> tuple[int, int, float]:
        return (self.l1, self.l2, self.r)


def divergence_triple(mu, tol: float = DIVERGENCE_TOL, scale: float = 1.0) -> DivergenceTriple:
    """Classify ``mu``.

    ``mu`` counts as zero when ``||mu||_F <= tol * scale``.  Nilpotency is
    decided on powers rather than eigenvalues, whose computed values for a
    nilpotent matrix of degree k are only accurate to about ``eps^(1/k)``:
    the degree is the smallest ``k <= n`` with ``||mu^k|| <= tol ||mu||^k``.
    Otherwise ``l1`` counts eigenvalues above ``tol * ||mu||_F``.
    """
    mu = np.asarray(mu, dtype=np.complex128)
    n = mu.shape[0]
    r = fro(mu)
    if r <= tol * scale:
        return DivergenceTriple(0, 0, 0.0)
    power = np.eye(n, dtype=np.complex128)
    unit = mu / r
    for k in range(1, n + 1):
        power = power @ unit
        if fro(power) <= tol:
            return DivergenceTriple(0, k, r)
    eig = np.linalg.eigvals(mu)
    l1 = int(np.sum(np.abs(eig) > tol * r))
    return DivergenceTriple(max(l1, 1), 0, r)


@dataclass(frozen=True)
class NilpotencyPrediction:
    branch: str | None
    nilpotent: bool
    degree_bound: int | None

    @property
    def fired(self) -> bool:
        return self.branch is not None


def _all_nilpotents(*decs):
    for dec in decs:
        for c, m in zip(dec.components, effective_indices(dec)):
            if m > 1:
                yield c.nilpotent


def _strictly_triangular(N, upper: bool, tol: float) -> bool:
    rest = np.tril(N) if upper else np.triu(N)
    return fro(rest) <= tol * max(1.0, fro(N))


def predict_nilpotency(
    dec1: SpectralDecomposition,
    dec2: SpectralDecomposition,
    structural_hint: str | None = None,
    tol: float = COMMUTE_TOL,
) -> NilpotencyPrediction:
    """Sufficient conditions for ``mu`` to be nilpotent.

    ``structural_hint`` restricts the test to ``"commuting"`` or
    ``"triangular"``; by default both are tried and the tighter bound wins.

    Commuting branch: every N1 commutes with every N2, so ``mu`` is a
    difference of commuting nilpotents and its index is at most
    ``min(n, max m1 + max m2)``.  Triangular branch: all nilpotents strictly
    upper (or all strictly lower) triangular, so ``mu`` is too; the only
    general degree bound is ``n``.
    """
    if structural_hint not in (None, "commuting", "triangular"):
        raise InputError(f"unknown structural hint {structural_hint!r}")
    n = dec1.n
    candidates = []
    if structural_hint in (None, "commuting"):
        n1, n2 = list(_all_nilpotents(dec1)), list(_all_nilpotents(dec2))
        if all(fro(a @ b - b @ a) <= tol * max(1.0, fro(a) * fro(b)) for a in n1 for b in n2):
            bound = min(n, max(effective_indices(dec1)) + max(effective_indices(dec2)))
            candidates.append(NilpotencyPrediction("commuting", True, bound))
    if structural_hint in (None, "triangular"):
        nils = list(_all_nilpotents(dec1, dec2))
        if all(_strictly_triangular(N, True, tol) for N in nils) or all(
            _strictly_triangular(N, False, tol) for N in nils
        ):
            candidates.append(NilpotencyPrediction("triangular", True, n))
    if not candidates:
        return NilpotencyPrediction(None, False, None)
    return min(candidates, key=lambda p: p.degree_bound)


def telescope_residual(f: AnalyticFn1, decA, decB, decX, Y) -> float:
    """Relative mismatch in ``T_{f^[1]}^{A,X}(Y) - T_{f^[1]}^{B,X}(Y) = T_{f^[2]}^{A,B,X}(A-B, Y)``."""
    require_separated(decA, decB, decX)
    Y = np.asarray(Y, dtype=np.complex128)
    beta = divided_diff_1(f)
    lhs = gdoi(beta, decA, decX, Y) - gdoi(beta, decB, decX, Y)
    rhs = gtoi(divided_diff_2(f), decA, decB, decX, decA.matrix - decB.matrix, Y)
    return _relative(lhs - rhs, lhs)


def _perturbed(dec: SpectralDecomposition, eps: float, delta: dict, E: np.ndarray) -> SpectralDecomposition:
    spec = dec.structure
    blocks = tuple((lam + eps * delta[lam], size) for lam, size in spec.blocks)
    moved = [lam + eps * delta[lam] for lam in spec.distinct_eigenvalues()]
    for i in range(len(moved)):
        for j in range(i + 1, len(moved)):
            if abs(moved[i] - moved[j]) <= 1e-12 * max(1.0, abs(moved[i])):
                raise SpectraOverlap("perturbed eigenvalues collide")
    return synthesize(JordanStructureSpec(blocks), dec.basis + eps * E, cond_cap=math.inf)[1]


def continuity_probe(
    beta: AnalyticFn2,
    dec1: SpectralDecomposition,
    dec2: SpectralDecomposition,
    Y,
    perturbation_scales: Sequence[float],
    seed: int = 0,
    targets: tuple[bool, bool] = (True, True),
) -> list[float]:
    """Deviation ``||T^{X1(eps),X2(eps)}(Y) - T^{X1,X2}(Y)||_F`` for each scale.

    The Jordan data of each targeted parameter is moved along a fixed random
    direction: unit complex shifts per eigenvalue and a unit-Frobenius basis
    perturbation.  Scales whose perturbed spectra collide give ``nan``.
    """
    for dec in (dec1, dec2):
        if dec.structure is None or dec.basis is None:
            raise InputError("continuity_probe needs synthesized decompositions")
    rng = np.random.default_rng(seed)
    moves = []
    for dec in (dec1, dec2):
        lams = dec.structure.distinct_eigenvalues()
        phases = rng.uniform(0.0, 2 * np.pi, size=len(lams))
        delta = {lam: complex(np.exp(1j * t)) for lam, t in zip(lams, phases)}
        E = rng.standard_normal((dec.n, dec.n)) + 1j * rng.standard_normal((dec.n, dec.n))
        moves.append((delta, E / fro(E)))

    base = gdoi(beta, dec1, dec2, Y)
    out = []
    for eps in perturbation_scales:
        try:
            d1, d2 = (
                _perturbed(dec, eps, *move) if on else dec for dec, move, on in zip((dec1, dec2), moves, targets)
            )
            out.append(fro(gdoi(beta, d1, d2, Y) - base))
        except (SpectraOverlap, SeparationViolation) as exc:
            warnings.warn(f"scale {eps:g} rejected: {exc}", RuntimeWarning, stacklevel=2)
            out.append(float("nan"))
    return out
