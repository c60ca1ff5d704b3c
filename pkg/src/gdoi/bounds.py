"""Frobenius-norm bounds for operator integrals and matrix-function differences.

Upper bounds take the maximum of each symbol partial over the finite spectrum
grid and multiply by norms of the nilpotent powers and of ``Y``.  Lower bounds
come from the reverse triangle inequality applied to the four parts.

The projector-only term is bounded by ``max|beta| ||Y||``.  That step is exact
when the spectral projectors are orthogonal (a unitary similarity basis); for
oblique projectors it can fail, so the upper-bound reports are only
guaranteed in the orthogonal regime.  The reports still compute the formula
as stated and flag ``satisfied`` honestly either way.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product
from typing import Sequence

import numpy as np

from .doi import GTOI_PATTERNS, effective_indices, gdoi_split, gtoi_split
from .errors import EmptyList, InputError, NuViolation
from .funcalc import AnalyticFn1, AnalyticFn2, AnalyticFn3, divided_diff_1, eval_matrix_fn1
from .perturb import require_separated
from .spectral import SpectralDecomposition, fro

BOUND_RTOL = 1e-10


@dataclass(frozen=True)
class BoundReport:
    """One bound against the quantity it bounds.

    ``slack = bound_value - actual_value``.  An upper bound is satisfied when
    ``slack >= -rtol * max(1, bound)``; a lower bound when every reported
    value (the main one and any entry of ``alternatives``) is at most
    ``actual + rtol * max(1, actual)``.
    """

    kind: str
    bound_value: float
    terms: dict[str, float]
    actual_value: float
    alternatives: dict[str, float] = field(default_factory=dict)
    details: dict = field(default_factory=dict)
    rtol: float = BOUND_RTOL

    @property
    def slack(self) -> float:
        return self.bound_value - self.actual_value

    @property
    def satisfied(self) -> bool:
        if self.kind == "upper":
            return self.slack >= -self.rtol * max(1.0, self.bound_value)
        tol = self.rtol * max(1.0, self.actual_value)
        values = [self.bound_value, *self.alternatives.values()]
        return all(v <= self.actual_value + tol for v in values)

    def as_dict(self) -> dict:
        return {
            "kind": self.kind,
            "bound_value": self.bound_value,
            "terms": dict(self.terms),
            "actual_value": self.actual_value,
            "slack": self.slack,
            "satisfied": self.satisfied,
            "alternatives": dict(self.alternatives),
            "details": dict(self.details),
        }


@dataclass(frozen=True)
class HolderConstants:
    omega: float
    nu: float
    nu_prime: float
    M: float
    diameter: float
    C: float
    C_prime: float
    D_omega: float
    D_1: float


def reverse_triangle_lower(norms: Sequence[float]) -> float:
    """``max(0, a_1 - a_2 - ... - a_r)`` with ``a`` sorted in descending order."""
    if len(norms) == 0:
        raise EmptyList("need at least one norm")
    ordered = sorted((float(v) for v in norms), reverse=True)
    return max(0.0, ordered[0] - sum(ordered[1:]))


def _grid(*decs: SpectralDecomposition):
    return np.meshgrid(*(d.eigenvalues for d in decs), indexing="ij")


def _peak(values) -> float:
    return float(np.max(np.abs(values)))


def _double_terms(beta: AnalyticFn2, dec1, dec2, y_norm: float) -> dict[str, float]:
    x, y = _grid(dec1, dec2)
    m1s, m2s = effective_indices(dec1), effective_indices(dec2)
    pw1 = [[fro(c.factor(q)) for q in range(m)] for c, m in zip(dec1.components, m1s)]
    pw2 = [[fro(c.factor(q)) for q in range(m)] for c, m in zip(dec2.components, m2s)]
    cache: dict[tuple[int, int], float] = {}

    def peak(q1, q2):
        if (q1, q2) not in cache:
            cache[q1, q2] = _peak(beta.partial(q1, q2, x, y)) / (math.factorial(q1) * math.factorial(q2))
        return cache[q1, q2]

    B1 = peak(0, 0) * y_norm
    B2 = sum(peak(0, q2) * pw2[k][q2] for k, m in enumerate(m2s) for q2 in range(1, m)) * y_norm
    B3 = sum(peak(q1, 0) * pw1[k][q1] for k, m in enumerate(m1s) for q1 in range(1, m)) * y_norm
    B4 = y_norm * sum(
        peak(q1, q2) * pw1[k1][q1] * pw2[k2][q2]
        for k1, a in enumerate(m1s)
        for q1 in range(1, a)
        for k2, b in enumerate(m2s)
        for q2 in range(1, b)
    )
    return {"B1": B1, "B2": float(B2), "B3": float(B3), "B4": float(B4)}


def _upper(terms: dict[str, float], actual: float, **details) -> BoundReport:
    return BoundReport("upper", float(sum(terms.values())), terms, float(actual), details=details)


def gdoi_upper_bound(beta: AnalyticFn2, dec1, dec2, Y) -> BoundReport:
    Y = np.asarray(Y, dtype=np.complex128)
    actual = fro(gdoi_split(beta, dec1, dec2, Y).total())
    return _upper(_double_terms(beta, dec1, dec2, fro(Y)), actual)


def _real_minimum(values, rtol: float = 1e-12) -> float | None:
    """Minimum of ``values`` if they are real within ``rtol``, else ``None``."""
    v = np.asarray(values, dtype=np.complex128)
    if np.max(np.abs(v.imag)) > rtol * max(1.0, float(np.max(np.abs(v)))):
        return None
    return float(np.min(v.real))


def _lower(parts, actual: float, min_beta: float | None, y_norm: float) -> BoundReport:
    norms = [fro(a) for a in parts]
    terms = {f"A{i + 1}": v for i, v in enumerate(norms)}
    alternatives = {}
    details = {"min_beta_branch": "unsupported (complex symbol)" if min_beta is None else "not applicable"}
    rest = sum(norms[1:])
    if min_beta is not None and min_beta * y_norm >= rest:
        alternatives["min_beta"] = min_beta * y_norm - rest
        details["min_beta_branch"] = "applied"
    return BoundReport("lower", reverse_triangle_lower(norms), terms, float(actual), alternatives, details)


def gdoi_lower_bound(beta: AnalyticFn2, dec1, dec2, Y) -> BoundReport:
    """Reverse-triangle bound on the four parts, plus the ``min beta`` variant when it applies.

    The variant needs ``beta`` real on the spectrum grid and
    ``min(beta) ||Y|| >= ||A2|| + ||A3|| + ||A4||``.
    """
    Y = np.asarray(Y, dtype=np.complex128)
    split = gdoi_split(beta, dec1, dec2, Y)
    x, y = _grid(dec1, dec2)
    return _lower(split.parts, fro(split.total()), _real_minimum(beta.value(x, y)), fro(Y))


def gtoi_upper_bound(beta: AnalyticFn3, dec1, dec2, dec3, Y1, Y2) -> BoundReport:
    """Eight terms, one per placement of nilpotent factors, times ``||Y1|| ||Y2||``."""
    Y1 = np.asarray(Y1, dtype=np.complex128)
    Y2 = np.asarray(Y2, dtype=np.complex128)
    decs = (dec1, dec2, dec3)
    grid = _grid(*decs)
    ms = [effective_indices(d) for d in decs]
    pw = [[[fro(c.factor(q)) for q in range(m)] for c, m in zip(d.components, mm)] for d, mm in zip(decs, ms)]
    ynorm = fro(Y1) * fro(Y2)
    cache: dict[tuple[int, ...], float] = {}

    def peak(qs):
        if qs not in cache:
            cache[qs] = _peak(beta.partial(*qs, *grid)) / math.prod(math.factorial(q) for q in qs)
        return cache[qs]

    terms = {}
    for i, pattern in enumerate(GTOI_PATTERNS):
        # for each slot: a single "P" choice, or every (k, q>=1) nilpotent choice
        choices = []
        for slot, nil in enumerate(pattern):
            if nil:
                choices.append([(q, pw[slot][k][q]) for k, m in enumerate(ms[slot]) for q in range(1, m)])
            else:
                choices.append([(0, 1.0)])
        total = 0.0
        for combo in product(*choices):
            qs = tuple(q for q, _ in combo)
            total += peak(qs) * math.prod(w for _, w in combo)
        terms[f"B{i + 1}"] = total * ynorm
    actual = fro(gtoi_split(beta, dec1, dec2, dec3, Y1, Y2).total())
    return _upper(terms, actual)


def lipschitz_bounds(f: AnalyticFn1, dec1, dec2) -> tuple[BoundReport, BoundReport]:
    """Upper and lower bounds on ``||f(X1) - f(X2)||_F`` through ``T_{f^[1]}(X1 - X2)``."""
    require_separated(dec1, dec2)
    beta = divided_diff_1(f)
    D = dec1.matrix - dec2.matrix
    actual = fro(eval_matrix_fn1(f, dec1) - eval_matrix_fn1(f, dec2))
    upper = _upper(_double_terms(beta, dec1, dec2, fro(D)), actual)
    split = gdoi_split(beta, dec1, dec2, D)
    x, y = _grid(dec1, dec2)
    lower = _lower(split.parts, actual, _real_minimum(beta.value(x, y)), fro(D))
    return upper, lower


def holder_constants(
    f: AnalyticFn1,
    dec1,
    dec2,
    omega: float,
    nu: float,
    nu_prime: float,
    M: float | None = None,
    diameter: float | None = None,
) -> HolderConstants:
    """Constants of the Holder estimate.

    ``D_omega`` and ``D_1`` are maxima over pairs of points of the grid
    (both spectra plus the midpoints of cross pairs) that lie at least
    ``nu_prime`` apart.  ``M`` defaults to ``||X1 - X2||_F`` and ``diameter``
    to the diameter of the grid.
    """
    if omega <= 0 or nu <= 0 or nu_prime <= 0:
        raise InputError("omega, nu and nu_prime must be positive")
    t = fro(dec1.matrix - dec2.matrix)
    if t < nu:
        raise NuViolation(f"||X1 - X2|| = {t:.6g} is below nu = {nu:.6g}")
    M = t if M is None else float(M)
    if M < t:
        raise InputError(f"M = {M:.6g} is below ||X1 - X2|| = {t:.6g}")
    spectrum = np.concatenate([dec1.eigenvalues, dec2.eigenvalues])
    dists = np.abs(spectrum[:, None] - spectrum[None, :])
    gap = float(np.min(dists[~np.eye(len(spectrum), dtype=bool)])) if len(spectrum) > 1 else math.inf
    if gap < nu_prime:
        raise NuViolation(f"eigenvalue gap {gap:.6g} is below nu' = {nu_prime:.6g}")

    l1, l2 = dec1.eigenvalues, dec2.eigenvalues
    mids = ((l1[:, None] + l2[None, :]) / 2).ravel()
    pts = np.unique(np.concatenate([l1, l2, mids]))
    fx = f.value(pts)
    dist = np.abs(pts[:, None] - pts[None, :])
    ok = dist >= nu_prime
    diff = np.abs(fx[:, None] - fx[None, :])
    safe = np.where(ok, dist, 1.0)
    D_omega = float(np.max(np.where(ok, diff / safe**omega, 0.0)))
    D_1 = float(np.max(np.where(ok, diff / safe, 0.0)))
    diam = float(np.max(dist)) if diameter is None else float(diameter)

    if omega == 1:
        C = 1.0
    elif omega > 1:
        C = nu ** (1 - omega)
    else:
        C = M ** (1 - omega)
    C_prime = nu_prime ** (omega - 1) if omega < 1 else diam ** (omega - 1)
    return HolderConstants(omega, nu, nu_prime, M, diam, C, C_prime, D_omega, D_1)


def holder_upper_bound(
    f: AnalyticFn1,
    dec1,
    dec2,
    omega: float,
    nu: float,
    nu_prime: float,
    M: float | None = None,
    diameter: float | None = None,
) -> BoundReport:
    """``C C' D_omega t^omega`` plus ``C`` times the nilpotent terms times ``t^omega``.

    Here ``t = ||X1 - X2||_F`` and the nilpotent-power caps are the exact
    ``||N^q||_F``.
    """
    require_separated(dec1, dec2)
    k = holder_constants(f, dec1, dec2, omega, nu, nu_prime, M, diameter)
    t = fro(dec1.matrix - dec2.matrix)
    scale = t**omega
    nil = _double_terms(divided_diff_1(f), dec1, dec2, 1.0)
    terms = {
        "B1": k.C * k.C_prime * k.D_omega * scale,
        "B2": k.C * nil["B2"] * scale,
        "B3": k.C * nil["B3"] * scale,
        "B4": k.C * nil["B4"] * scale,
    }
    actual = fro(eval_matrix_fn1(f, dec1) - eval_matrix_fn1(f, dec2))
    return _upper(terms, actual, constants=k.__dict__)
