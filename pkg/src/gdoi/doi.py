"""Generalized double and triple operator integrals.

For parameter matrices with spectral data ``(lam_k, P_k, N_k, m_k)`` the
double integral of a symbol ``beta`` applied to ``Y`` is

    T(Y) = sum_{k1,k2} sum_{q1<m_k1} sum_{q2<m_k2}
           beta^(q1,q2)(lam_k1, lam_k2) / (q1! q2!) * F1(q1) Y F2(q2)

with ``F(0) = P`` and ``F(q) = N^q``.  Grouping the terms by which factors
are nilpotent gives the four parts PP, PN, NP, NN; the triple integral has
eight parts.  Each part is accumulated in the fixed order k1, k2, (k3), then
the q loops, and the total is the left-to-right sum of the parts, so a split
and the plain call agree bit for bit.

Operationally ``T`` is ``beta(L_X1, R_X2)``, a functional calculus of the
commuting left and right multiplications, which is why it is linear and
multiplicative in the symbol.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np

from .errors import DimensionMismatch, NonDiagonalizableInput
from .funcalc import AnalyticFn2, AnalyticFn3, eval_matrix_fn2
from .spectral import ZERO_NILPOTENT_RTOL, SpectralDecomposition, as_matrix, fro

GDOI_PATTERNS = ((0, 0), (0, 1), (1, 0), (1, 1))
GTOI_PATTERNS = (
    (0, 0, 0),
    (0, 0, 1),
    (0, 1, 0),
    (1, 0, 0),
    (0, 1, 1),
    (1, 0, 1),
    (1, 1, 0),
    (1, 1, 1),
)


@dataclass(frozen=True, eq=False)
class GdoiFourParts:
    """PP, PN, NP and NN contributions."""

    A1: np.ndarray
    A2: np.ndarray
    A3: np.ndarray
    A4: np.ndarray

    @property
    def parts(self) -> tuple[np.ndarray, ...]:
        return (self.A1, self.A2, self.A3, self.A4)

    def total(self) -> np.ndarray:
        return self.A1 + self.A2 + self.A3 + self.A4

    def norms(self) -> list[float]:
        return [fro(a) for a in self.parts]


@dataclass(frozen=True, eq=False)
class GtoiEightParts:
    A1: np.ndarray
    A2: np.ndarray
    A3: np.ndarray
    A4: np.ndarray
    A5: np.ndarray
    A6: np.ndarray
    A7: np.ndarray
    A8: np.ndarray

    @property
    def parts(self) -> tuple[np.ndarray, ...]:
        return (self.A1, self.A2, self.A3, self.A4, self.A5, self.A6, self.A7, self.A8)

    def total(self) -> np.ndarray:
        out = self.A1
        for a in self.parts[1:]:
            out = out + a
        return out

    def norms(self) -> list[float]:
        return [fro(a) for a in self.parts]


def effective_indices(dec: SpectralDecomposition, rtol: float = ZERO_NILPOTENT_RTOL) -> list[int]:
    """Nilpotent indices, with negligible nilpotent parts counted as absent."""
    floor = rtol * max(1.0, fro(dec.matrix))
    return [1 if fro(c.nilpotent) <= floor else c.index for c in dec.components]


def _check_dims(decs, ys):
    n = decs[0].n
    for d in decs[1:]:
        if d.n != n:
            raise DimensionMismatch(f"parameter dimensions differ: {[x.n for x in decs]}")
    out = []
    for y in ys:
        y = as_matrix(y, "Y")
        if y.shape[0] != n:
            raise DimensionMismatch(f"Y is {y.shape[0]}x{y.shape[0]}, parameters are {n}x{n}")
        out.append(y)
    return out


def _weight(qs) -> int:
    return math.prod(math.factorial(q) for q in qs)


def _double_parts(beta: AnalyticFn2, dec1, dec2, Y, cap: int | None = None) -> dict:
    (Y,) = _check_dims((dec1, dec2), (Y,))
    n = dec1.n
    parts = {p: np.zeros((n, n), dtype=np.complex128) for p in GDOI_PATTERNS}
    m1s, m2s = effective_indices(dec1), effective_indices(dec2)
    if cap is not None:
        m1s, m2s = [min(m, cap) for m in m1s], [min(m, cap) for m in m2s]
    left = [[c.factor(q) @ Y for q in range(m)] for c, m in zip(dec1.components, m1s)]
    for c1, m1, lefts in zip(dec1.components, m1s, left):
        for c2, m2 in zip(dec2.components, m2s):
            for q1 in range(m1):
                for q2 in range(m2):
                    coef = complex(beta.partial(q1, q2, c1.eigenvalue, c2.eigenvalue)) / _weight((q1, q2))
                    if coef == 0:
                        continue
                    parts[(q1 > 0, q2 > 0)] += coef * (lefts[q1] @ c2.factor(q2))
    return parts


def gdoi_split(beta: AnalyticFn2, dec1: SpectralDecomposition, dec2: SpectralDecomposition, Y) -> GdoiFourParts:
    """The four addends; ``A1`` is the projector-only (PP) part."""
    parts = _double_parts(beta, dec1, dec2, Y)
    return GdoiFourParts(*(parts[p] for p in GDOI_PATTERNS))


def gdoi(beta: AnalyticFn2, dec1: SpectralDecomposition, dec2: SpectralDecomposition, Y) -> np.ndarray:
    return gdoi_split(beta, dec1, dec2, Y).total()


def doi_hermitian(
    beta: AnalyticFn2,
    dec1: SpectralDecomposition,
    dec2: SpectralDecomposition,
    Y,
    rtol: float = ZERO_NILPOTENT_RTOL,
) -> np.ndarray:
    """Conventional DOI ``sum beta(lam, mu) P1 Y P2`` for diagonalizable parameters."""
    for dec in (dec1, dec2):
        if any(m > 1 for m in effective_indices(dec, rtol)):
            raise NonDiagonalizableInput("conventional DOI needs both parameters diagonalizable")
    return _double_parts(beta, dec1, dec2, Y, cap=1)[(0, 0)]


def doi_variant_pre(beta: AnalyticFn2, dec1, dec2, Y) -> np.ndarray:
    """``Y beta(X1, X2)``."""
    (Y,) = _check_dims((dec1, dec2), (Y,))
    return Y @ eval_matrix_fn2(beta, dec1, dec2)


def doi_variant_post(beta: AnalyticFn2, dec1, dec2, Y) -> np.ndarray:
    """``beta(X1, X2) Y``."""
    (Y,) = _check_dims((dec1, dec2), (Y,))
    return eval_matrix_fn2(beta, dec1, dec2) @ Y


def compose(beta: AnalyticFn2, gamma: AnalyticFn2, dec1, dec2, Y) -> np.ndarray:
    """``T_beta(T_gamma(Y))``."""
    return gdoi(beta, dec1, dec2, gdoi(gamma, dec1, dec2, Y))


def gtoi_split(beta: AnalyticFn3, dec1, dec2, dec3, Y1, Y2) -> GtoiEightParts:
    Y1, Y2 = _check_dims((dec1, dec2, dec3), (Y1, Y2))
    n = dec1.n
    parts = {p: np.zeros((n, n), dtype=np.complex128) for p in GTOI_PATTERNS}
    ms = [effective_indices(d) for d in (dec1, dec2, dec3)]
    first = [[c.factor(q) @ Y1 for q in range(m)] for c, m in zip(dec1.components, ms[0])]
    second = [[c.factor(q) @ Y2 for q in range(m)] for c, m in zip(dec2.components, ms[1])]
    for c1, m1, f1 in zip(dec1.components, ms[0], first):
        for c2, m2, f2 in zip(dec2.components, ms[1], second):
            for c3, m3 in zip(dec3.components, ms[2]):
                for q1, q2, q3 in product(range(m1), range(m2), range(m3)):
                    coef = complex(beta.partial(q1, q2, q3, c1.eigenvalue, c2.eigenvalue, c3.eigenvalue))
                    coef /= _weight((q1, q2, q3))
                    if coef == 0:
                        continue
                    parts[(q1 > 0, q2 > 0, q3 > 0)] += coef * (f1[q1] @ f2[q2] @ c3.factor(q3))
    return GtoiEightParts(*(parts[p] for p in GTOI_PATTERNS))


def gtoi(beta: AnalyticFn3, dec1, dec2, dec3, Y1, Y2) -> np.ndarray:
    """Triple operator integral ``sum beta-terms F1 Y1 F2 Y2 F3``."""
    return gtoi_split(beta, dec1, dec2, dec3, Y1, Y2).total()
