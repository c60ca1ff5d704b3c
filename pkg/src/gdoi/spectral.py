"""Jordan spectral data: projectors, nilpotents and indices.

A matrix ``X = U J U^{-1}`` is stored through one ``SpectralComponent`` per
distinct eigenvalue ``lam_k``: the spectral projector ``P_k`` onto its
generalized eigenspace, the nilpotent ``N_k = (X - lam_k) P_k`` and the index
``m_k`` (largest Jordan block for ``lam_k``).  Geometric components sharing an
eigenvalue are aggregated; every operator-integral sum is unchanged by this
because the symbol never depends on the block label and the extra nilpotent
powers vanish.

``synthesize`` builds exact data from a prescribed Jordan structure and is the
primary path.  ``decompose`` recovers the data from a raw matrix and is only
reliable for well separated, moderately sized clusters.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    ClusterAmbiguity,
    ConditioningExceeded,
    DimensionMismatch,
    InputError,
    NonConvergence,
    SingularBasis,
)

DEFAULT_COND_CAP = 1e3
DEFAULT_VALIDATION_TOL = 1e-10
DEFAULT_GROUP_TOL = 1e-5
# Nilpotent parts below this fraction of ||X||_F are treated as absent.
ZERO_NILPOTENT_RTOL = 1e-12


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Return ``a`` as a square, finite complex128 array."""
    m = np.array(a, dtype=np.complex128)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise DimensionMismatch(f"{name} must be a non-empty square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InputError(f"{name} has non-finite entries")
    return m


def fro(a: np.ndarray) -> float:
    return float(np.linalg.norm(a, "fro"))


@dataclass(frozen=True)
class JordanStructureSpec:
    """Jordan blocks as ``(eigenvalue, size)`` pairs, in the order they appear in J."""

    blocks: tuple[tuple[complex, int], ...]

    def __post_init__(self):
        blocks = tuple((complex(lam), int(size)) for lam, size in self.blocks)
        if not blocks:
            raise InputError("a Jordan structure needs at least one block")
        for lam, size in blocks:
            if size < 1:
                raise InputError(f"block size must be positive, got {size}")
            if not np.isfinite(lam):
                raise InputError(f"eigenvalue {lam} is not finite")
        object.__setattr__(self, "blocks", blocks)

    @property
    def total_size(self) -> int:
        return sum(size for _, size in self.blocks)

    def distinct_eigenvalues(self) -> list[complex]:
        seen: list[complex] = []
        for lam, _ in self.blocks:
            if lam not in seen:
                seen.append(lam)
        return seen

    def jordan_matrix(self) -> np.ndarray:
        n = self.total_size
        J = np.zeros((n, n), dtype=np.complex128)
        start = 0
        for lam, size in self.blocks:
            for i in range(size):
                J[start + i, start + i] = lam
                if i + 1 < size:
                    J[start + i, start + i + 1] = 1.0
            start += size
        return J


@dataclass(frozen=True, eq=False)
class SpectralComponent:
    eigenvalue: complex
    projector: np.ndarray
    nilpotent: np.ndarray
    index: int

    @cached_property
    def powers(self) -> tuple[np.ndarray, ...]:
        """``(P, N, N^2, ..., N^{m-1})``: the factor multiplying a q-th derivative term."""
        out = [self.projector]
        for _ in range(1, self.index):
            out.append(out[-1] @ self.nilpotent if len(out) > 1 else self.nilpotent.copy())
        return tuple(out)

    def factor(self, q: int) -> np.ndarray:
        return self.powers[q]


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """Spectral data of one matrix.

    ``structure`` and ``basis`` are kept when the data came from ``synthesize``
    so that the instance can be re-synthesized under perturbation.
    """

    n: int
    components: tuple[SpectralComponent, ...]
    cond_estimate: float = float("nan")
    structure: JordanStructureSpec | None = None
    basis: np.ndarray | None = field(default=None, repr=False)

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.array([c.eigenvalue for c in self.components], dtype=np.complex128)

    @property
    def indices(self) -> list[int]:
        return [c.index for c in self.components]

    @property
    def max_index(self) -> int:
        return max(self.indices)

    @cached_property
    def matrix(self) -> np.ndarray:
        return self.reconstruct()

    def reconstruct(self) -> np.ndarray:
        x = np.zeros((self.n, self.n), dtype=np.complex128)
        for c in self.components:
            x += c.eigenvalue * c.projector + c.nilpotent
        return x

    def is_diagonalizable(self, rtol: float = ZERO_NILPOTENT_RTOL) -> bool:
        floor = rtol * max(1.0, fro(self.matrix))
        return all(c.index == 1 or fro(c.nilpotent) <= floor for c in self.components)

    def projector_part(self) -> "SpectralDecomposition":
        """Data of ``X_P = sum lam_k P_k``: same projectors, nilpotents dropped."""
        comps = tuple(
            SpectralComponent(c.eigenvalue, c.projector, np.zeros_like(c.nilpotent), 1)
            for c in self.components
        )
        return SpectralDecomposition(self.n, comps, self.cond_estimate)


def split_pn(dec: SpectralDecomposition) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(X_P, X_N)`` with ``X_P = sum lam_k P_k`` and ``X_N = sum N_k``."""
    xp = np.zeros((dec.n, dec.n), dtype=np.complex128)
    xn = np.zeros((dec.n, dec.n), dtype=np.complex128)
    for c in dec.components:
        xp += c.eigenvalue * c.projector
        xn += c.nilpotent
    return xp, xn


def synthesize(
    spec: JordanStructureSpec,
    basis: np.ndarray | None = None,
    cond_cap: float = DEFAULT_COND_CAP,
) -> tuple[np.ndarray, SpectralDecomposition]:
    """Build ``X = U J U^{-1}`` together with its exact spectral data.

    ``basis=None`` means the identity.  The condition number is the 2-norm one.
    """
    n = spec.total_size
    U = np.eye(n, dtype=np.complex128) if basis is None else as_matrix(basis, "basis")
    if U.shape[0] != n:
        raise DimensionMismatch(f"basis is {U.shape[0]}x{U.shape[0]} but the structure has size {n}")
    if np.linalg.matrix_rank(U) < n:
        raise SingularBasis("basis is not invertible")
    cond = float(np.linalg.cond(U))
    if not np.isfinite(cond):
        raise SingularBasis("basis is not invertible")
    if cond > cond_cap:
        raise ConditioningExceeded(f"cond(U) = {cond:.3g} exceeds the cap {cond_cap:.3g}")
    Uinv = np.linalg.inv(U)

    J = spec.jordan_matrix()
    X = U @ J @ Uinv

    components = []
    for lam in spec.distinct_eigenvalues():
        E = np.zeros((n, n), dtype=np.complex128)
        S = np.zeros((n, n), dtype=np.complex128)
        m = 1
        start = 0
        for mu, size in spec.blocks:
            if mu == lam:
                for i in range(size):
                    E[start + i, start + i] = 1.0
                    if i + 1 < size:
                        S[start + i, start + i + 1] = 1.0
                m = max(m, size)
            start += size
        components.append(SpectralComponent(lam, U @ E @ Uinv, U @ S @ Uinv, m))
    dec = SpectralDecomposition(n, tuple(components), cond, spec, U)
    return X, dec


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    threshold: float
    passed: bool


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple[Check, ...]

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def as_dict(self) -> dict:
        return {c.name: {"value": c.value, "threshold": c.threshold, "passed": c.passed} for c in self.checks}


def validate(
    dec: SpectralDecomposition,
    tol: float = DEFAULT_VALIDATION_TOL,
    source: np.ndarray | None = None,
) -> ValidationReport:
    """Measure every algebraic invariant of ``dec``.

    Residuals are relative: projector relations to ``max(1, ||P||_F)`` or
    ``sqrt(n)``, relations involving nilpotents to ``max(1, ||X||_F)``.  The
    index check is a lower-bound check: ``||N^{m-1}||`` must stay above
    ``tol * max(1, ||X||_F)`` when ``m > 1``.
    """
    n = dec.n
    sn = np.sqrt(n)
    X = dec.reconstruct()
    sx = max(1.0, fro(X))
    idem = comm = nil = 0.0
    minimality = np.inf
    for c in dec.components:
        P, N = c.projector, c.nilpotent
        idem = max(idem, fro(P @ P - P) / max(1.0, fro(P)))
        comm = max(comm, fro(P @ N - N) / sx, fro(N @ P - N) / sx)
        nil = max(nil, fro(np.linalg.matrix_power(N, c.index)) / sx)
        if c.index > 1:
            minimality = min(minimality, fro(np.linalg.matrix_power(N, c.index - 1)) / sx)
    orth = cross = 0.0
    for k, ck in enumerate(dec.components):
        for l, cl in enumerate(dec.components):
            if k == l:
                continue
            orth = max(orth, fro(ck.projector @ cl.projector) / sn)
            cross = max(
                cross,
                fro(ck.projector @ cl.nilpotent) / sx,
                fro(cl.nilpotent @ ck.projector) / sx,
            )
    total = sum(c.projector for c in dec.components)
    complete = fro(total - np.eye(n)) / sn

    checks = [
        Check("idempotency", idem, tol, idem <= tol),
        Check("orthogonality", orth, tol, orth <= tol),
        Check("cross_annihilation", cross, tol, cross <= tol),
        Check("completeness", complete, tol, complete <= tol),
        Check("commutation", comm, tol, comm <= tol),
        Check("nilpotency", nil, tol, nil <= tol),
    ]
    if np.isfinite(minimality):
        checks.append(Check("index_minimality", minimality, tol, minimality > tol))
    if source is not None:
        src = as_matrix(source, "source")
        rec = fro(X - src) / (fro(src) or 1.0)
        checks.append(Check("reconstruction", rec, tol, rec <= tol))
    return ValidationReport(tuple(checks))


def _cluster(values: np.ndarray, tol: float) -> list[list[int]]:
    """Single-linkage grouping of ``values`` at distance ``tol``."""
    parent = list(range(len(values)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(len(values)):
        for j in range(i + 1, len(values)):
            if abs(values[i] - values[j]) <= tol:
                parent[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for i in range(len(values)):
        groups.setdefault(find(i), []).append(i)
    return sorted(groups.values(), key=lambda g: g[0])


def decompose(X, group_tol: float = DEFAULT_GROUP_TOL) -> SpectralDecomposition:
    """Recover spectral data from a raw matrix.

    Eigenvalues closer than ``group_tol * max(1, ||X||_F)`` are merged.  Each
    generalized eigenspace is the null space of ``(X - lam)^a`` where ``a`` is
    the cluster size; projectors follow from the resulting block basis.
    """
    X = as_matrix(X, "X")
    n = X.shape[0]
    sx = max(1.0, fro(X))
    try:
        eig = np.linalg.eigvals(X)
    except np.linalg.LinAlgError as exc:
        raise NonConvergence(str(exc)) from exc

    atol = group_tol * sx
    groups = _cluster(eig, atol)
    centers = [complex(np.mean(eig[g])) for g in groups]
    for i in range(len(groups)):
        for j in range(i + 1, len(groups)):
            gap = min(abs(eig[a] - eig[b]) for a in groups[i] for b in groups[j])
            if gap <= 10 * atol:
                raise ClusterAmbiguity(
                    f"eigenvalue clusters {centers[i]:.6g} and {centers[j]:.6g} are {gap:.3g} apart"
                )

    bases = []
    for lam, g in zip(centers, groups):
        a = len(g)
        shifted = np.linalg.matrix_power(X - lam * np.eye(n), a)
        _, _, vh = np.linalg.svd(shifted)
        bases.append(vh[n - a:].conj().T)
    V = np.hstack(bases)
    Vinv = np.linalg.inv(V)

    projectors = []
    start = 0
    for basis in bases:
        a = basis.shape[1]
        projectors.append(V[:, start:start + a] @ Vinv[start:start + a, :])
        start += a
    xp = sum(lam * P for lam, P in zip(centers, projectors))
    rest = X - xp

    components = []
    for lam, P, g in zip(centers, projectors, groups):
        N = rest @ P
        m = 1
        power = N.copy()
        while m < len(g) and fro(power) > group_tol * sx:
            power = power @ N
            m += 1
        if fro(power) > group_tol * sx:
            # N^{a} must vanish on an a-dimensional generalized eigenspace
            raise NonConvergence(f"nilpotent part for {lam:.6g} does not vanish at order {len(g)}")
        components.append(SpectralComponent(lam, P, N, m))
    return SpectralDecomposition(n, tuple(components), float(np.linalg.cond(V)))


def diagonal_decomposition(values: Iterable[complex]) -> SpectralDecomposition:
    """Spectral data of ``diag(values)`` (equal entries share a component)."""
    vals = [complex(v) for v in values]
    return synthesize(JordanStructureSpec(tuple((v, 1) for v in vals)))[1]


def block_spec(blocks: Sequence[tuple[complex, int]]) -> JordanStructureSpec:
    return JordanStructureSpec(tuple(blocks))
