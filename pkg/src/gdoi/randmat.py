"""Random matrices with prescribed Jordan structure, and the Monte-Carlo tail experiment.

Two layers live here.  The first draws single random instances (structures,
spectra, similarity bases, polynomials) for the property suites.  The second
is the ensemble machinery: an ``EnsembleSpec`` fixes the block template and
the samplers, ``sample_pair`` draws two independent analogous matrices, and
``monte_carlo_tail`` compares exceedance frequencies of
``||f(X1) - f(X2)||_F`` with the Markov-type bound

    Pr(||f(X1) - f(X2)|| >= delta) <= (B1 + B2 + B3 + B4) E||X1 - X2|| / delta.

Seeds are expanded with ``numpy.random.SeedSequence`` so every trial owns an
independent stream and results do not depend on execution order.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .errors import InputError, SeparationUnattainable
from .funcalc import AnalyticFn1, Polynomial, divided_diff_1, eval_matrix_fn1
from .spectral import JordanStructureSpec, SpectralDecomposition, fro, synthesize

# ----------------------------------------------------------------------------
# single instances


def random_unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_basis(rng: np.random.Generator, n: int, cond: float) -> np.ndarray:
    """Random basis with 2-norm condition number exactly ``cond`` (up to rounding)."""
    if cond < 1:
        raise InputError("condition number must be >= 1")
    s = np.geomspace(1.0, 1.0 / cond, n) if n > 1 else np.ones(1)
    return (random_unitary(rng, n) * s) @ random_unitary(rng, n)


def random_block_template(rng: np.random.Generator, n_max: int = 8, block_max: int = 3) -> list[list[int]]:
    """Block sizes grouped by eigenvalue: ``[[2, 1], [3]]`` is two eigenvalues, three blocks."""
    n = int(rng.integers(1, n_max + 1))
    sizes = []
    left = n
    while left:
        s = int(rng.integers(1, min(block_max, left) + 1))
        sizes.append(s)
        left -= s
    groups: list[list[int]] = []
    for s in sizes:
        if groups and rng.random() < 0.25:
            groups[int(rng.integers(len(groups)))].append(s)
        else:
            groups.append([s])
    return groups


def sample_separated(
    rng: np.random.Generator,
    count: int,
    radius: float = 1.0,
    separation: float = 0.1,
    avoid: Sequence[complex] = (),
    retries: int = 10_000,
) -> list[complex]:
    """Uniform points in a disk, pairwise and from ``avoid`` at least ``separation`` apart."""
    taken = [complex(a) for a in avoid]
    out = []
    for _ in range(count):
        for _ in range(retries):
            z = radius * math.sqrt(rng.random()) * complex(np.exp(2j * np.pi * rng.random()))
            if all(abs(z - w) >= separation for w in taken):
                break
        else:
            raise SeparationUnattainable(f"could not place {count} points at separation {separation}")
        taken.append(z)
        out.append(z)
    return out


def structure_from_template(template: Sequence[Sequence[int]], eigenvalues: Sequence[complex]) -> JordanStructureSpec:
    blocks = [(lam, size) for lam, sizes in zip(eigenvalues, template) for size in sizes]
    return JordanStructureSpec(tuple(blocks))


def random_polynomial(rng: np.random.Generator, degree: int, scale: float = 1.0) -> Polynomial:
    c = rng.standard_normal(degree + 1) + 1j * rng.standard_normal(degree + 1)
    return Polynomial(scale * c)


@dataclass(frozen=True)
class InstanceConfig:
    """Ensemble of random parameter matrices used by the property suites."""

    n_max: int = 8
    block_max: int = 3
    cond_max: float = 100.0
    unitary: bool = False
    radius: float = 2.0
    separation: float = 0.1


def random_decomposition(
    rng: np.random.Generator,
    cfg: InstanceConfig,
    n: int | None = None,
    avoid: Sequence[complex] = (),
    template: Sequence[Sequence[int]] | None = None,
) -> SpectralDecomposition:
    if template is None:
        while True:
            template = random_block_template(rng, cfg.n_max if n is None else n, cfg.block_max)
            if n is None or sum(map(sum, template)) == n:
                break
    size = sum(map(sum, template))
    lams = sample_separated(rng, len(template), cfg.radius, cfg.separation, avoid)
    cond = 1.0 if cfg.unitary else math.exp(rng.uniform(0.0, math.log(cfg.cond_max)))
    U = random_basis(rng, size, cond)
    return synthesize(structure_from_template(template, lams), U, cond_cap=cfg.cond_max * (1 + 1e-8))[1]


def random_parameters(rng: np.random.Generator, cfg: InstanceConfig, count: int = 2) -> list[SpectralDecomposition]:
    """``count`` decompositions of a common random size with mutually separated spectra."""
    first = random_decomposition(rng, cfg)
    decs = [first]
    for _ in range(count - 1):
        avoid = np.concatenate([d.eigenvalues for d in decs])
        decs.append(random_decomposition(rng, cfg, n=first.n, avoid=avoid))
    return decs


def random_matrix(rng: np.random.Generator, n: int, scale: float = 1.0) -> np.ndarray:
    return scale * (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / math.sqrt(2 * n)


# ----------------------------------------------------------------------------
# ensembles


@dataclass(frozen=True)
class EigenvalueSampler:
    """``disk`` (center, radius), ``annulus`` (center, inner, outer) or ``point`` (values)."""

    kind: str = "disk"
    center: complex = 0j
    radius: float = 1.0
    inner: float = 0.0
    values: tuple[complex, ...] = ()

    def __post_init__(self):
        if self.kind not in ("disk", "annulus", "point"):
            raise InputError(f"unknown eigenvalue sampler {self.kind!r}")
        if self.kind == "annulus" and not 0 <= self.inner < self.radius:
            raise InputError("annulus needs 0 <= inner < radius")
        if self.kind != "point" and self.radius <= 0:
            raise InputError("sampler radius must be positive")

    def draw(self, rng: np.random.Generator, k: int) -> complex:
        if self.kind == "point":
            return complex(self.values[k])
        if self.kind == "disk":
            r = self.radius * math.sqrt(rng.random())
        else:
            r = math.sqrt(rng.uniform(self.inner**2, self.radius**2))
        return self.center + r * complex(np.exp(2j * np.pi * rng.random()))

    def boundary_grid(self, count: int = 64) -> np.ndarray:
        """Points on the boundary of the support.

        The symbols are analytic in each variable separately, so their moduli
        over a product of disks or annuli peak on the product of boundaries.
        """
        if self.kind == "point":
            return np.array(self.values, dtype=np.complex128)
        theta = np.exp(2j * np.pi * np.arange(count) / count)
        if self.kind == "disk" or self.inner == 0:
            return self.center + self.radius * theta
        half = np.exp(2j * np.pi * np.arange(count // 2) / (count // 2))
        return np.concatenate([self.center + self.inner * half, self.center + self.radius * half])


@dataclass(frozen=True)
class BasisSampler:
    """``identity``, ``unitary`` or ``random`` (log-uniform condition number up to ``cond_cap``)."""

    kind: str = "random"
    cond_cap: float = 10.0

    def __post_init__(self):
        if self.kind not in ("identity", "unitary", "random"):
            raise InputError(f"unknown basis sampler {self.kind!r}")
        if self.cond_cap < 1:
            raise InputError("cond_cap must be >= 1")

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.kind == "identity":
            return np.eye(n, dtype=np.complex128)
        if self.kind == "unitary":
            return random_unitary(rng, n)
        return random_basis(rng, n, math.exp(rng.uniform(0.0, math.log(self.cond_cap))))


@dataclass(frozen=True)
class EnsembleSpec:
    template: tuple[tuple[int, ...], ...]
    eigenvalues: EigenvalueSampler = field(default_factory=EigenvalueSampler)
    basis: BasisSampler = field(default_factory=BasisSampler)
    pair_separation: float = 0.1
    eigenvalues2: EigenvalueSampler | None = None
    max_retries: int = 1000

    def __post_init__(self):
        tmpl = tuple(tuple(int(s) for s in g) for g in self.template)
        if not tmpl or any(not g or min(g) < 1 for g in tmpl):
            raise InputError("template must be a non-empty list of non-empty block-size lists")
        object.__setattr__(self, "template", tmpl)
        if self.pair_separation <= 0:
            raise InputError("pair_separation must be positive")
        for s in (self.eigenvalues, self.eigenvalues2):
            if s is not None and s.kind == "point" and len(s.values) != len(tmpl):
                raise InputError("point sampler needs one value per eigenvalue group")

    @property
    def n(self) -> int:
        return sum(map(sum, self.template))

    @property
    def indices(self) -> list[int]:
        return [max(g) for g in self.template]

    @property
    def second(self) -> EigenvalueSampler:
        return self.eigenvalues2 or self.eigenvalues

    def to_dict(self) -> dict:
        d = asdict(self)
        return _jsonable(d)

    @classmethod
    def from_dict(cls, d: dict) -> "EnsembleSpec":
        try:
            return cls(
                template=d["template"],
                eigenvalues=_sampler_from_dict(d.get("eigenvalues", {})),
                basis=BasisSampler(**d.get("basis", {})),
                pair_separation=float(d.get("pair_separation", 0.1)),
                eigenvalues2=_sampler_from_dict(d["eigenvalues2"]) if d.get("eigenvalues2") else None,
                max_retries=int(d.get("max_retries", 1000)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, InputError):
                raise
            raise InputError(f"malformed ensemble spec: {exc}") from exc


def _complex(v) -> complex:
    if isinstance(v, (list, tuple)):
        return complex(float(v[0]), float(v[1]))
    return complex(v)


def _sampler_from_dict(d: dict) -> EigenvalueSampler:
    d = dict(d)
    if "center" in d:
        d["center"] = _complex(d["center"])
    if "values" in d:
        d["values"] = tuple(_complex(v) for v in d["values"])
    return EigenvalueSampler(**d)


def _jsonable(obj):
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def _draw_spectrum(rng, sampler: EigenvalueSampler, count: int, sep: float, avoid, retries: int) -> list[complex]:
    for _ in range(retries):
        lams = [sampler.draw(rng, k) for k in range(count)]
        pool = lams + list(avoid)
        if all(abs(pool[i] - pool[j]) >= sep for i in range(count) for j in range(i + 1, len(pool))):
            return lams
    raise SeparationUnattainable(f"no separated spectrum after {retries} draws")


def sample_pair(spec: EnsembleSpec, seed) -> tuple[SpectralDecomposition, SpectralDecomposition]:
    """Two analogous random matrices sharing ``spec.template``.

    Eigenvalues within each matrix and across the pair keep ``pair_separation``
    apart; a draw that fails is redrawn as a whole up to ``max_retries`` times.
    """
    rng = np.random.default_rng(seed)
    K, n = len(spec.template), spec.n
    lam1 = _draw_spectrum(rng, spec.eigenvalues, K, spec.pair_separation, (), spec.max_retries)
    U1 = spec.basis.draw(rng, n)
    lam2 = _draw_spectrum(rng, spec.second, K, spec.pair_separation, lam1, spec.max_retries)
    U2 = spec.basis.draw(rng, n)
    cap = spec.basis.cond_cap * (1 + 1e-8) if spec.basis.kind == "random" else 1e8
    d1 = synthesize(structure_from_template(spec.template, lam1), U1, cond_cap=cap)[1]
    d2 = synthesize(structure_from_template(spec.template, lam2), U2, cond_cap=cap)[1]
    return d1, d2


# ----------------------------------------------------------------------------
# tail bound


def nilpotent_norms(dec: SpectralDecomposition, indices: Sequence[int]) -> list[list[float]]:
    """``||N_k^q||_F`` for ``q = 1 .. m_k - 1`` (index 0 holds a placeholder)."""
    return [[0.0] + [fro(c.factor(q)) for q in range(1, m)] for c, m in zip(dec.components, indices)]


@dataclass(frozen=True)
class GammaCaps:
    """Caps on ``||N_k^q||_F`` for both parameters, indexed ``[k][q]`` with ``q >= 1``."""

    first: tuple[tuple[float, ...], ...]
    second: tuple[tuple[float, ...], ...]


def pilot_gamma(spec: EnsembleSpec, seed, draws: int = 500, inflate: float = 1.1) -> GammaCaps:
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    worst1 = [[0.0] * m for m in spec.indices]
    worst2 = [[0.0] * m for m in spec.indices]
    for child in ss.spawn(draws):
        d1, d2 = sample_pair(spec, child)
        for worst, dec in ((worst1, d1), (worst2, d2)):
            for k, row in enumerate(nilpotent_norms(dec, spec.indices)):
                for q, v in enumerate(row):
                    worst[k][q] = max(worst[k][q], v)
    cap = lambda w: tuple(tuple(inflate * v for v in row) for row in w)  # noqa: E731
    return GammaCaps(cap(worst1), cap(worst2))


@dataclass(frozen=True)
class BTerms:
    B1: float
    B2: float
    B3: float
    B4: float

    @property
    def total(self) -> float:
        return self.B1 + self.B2 + self.B3 + self.B4


def b_terms(f: AnalyticFn1, spec: EnsembleSpec, gamma: GammaCaps, grid_size: int = 64) -> BTerms:
    """Symbol maxima over the sampler supports weighted by the ``Gamma`` caps."""
    beta = divided_diff_1(f, confluent=True)
    g1 = spec.eigenvalues.boundary_grid(grid_size)
    g2 = spec.second.boundary_grid(grid_size)
    x, y = np.meshgrid(g1, g2, indexing="ij")
    m = spec.indices
    top = max(m)
    peak = {}
    for q1 in range(top):
        for q2 in range(top):
            w = math.factorial(q1) * math.factorial(q2)
            peak[q1, q2] = float(np.max(np.abs(beta.partial(q1, q2, x, y)))) / w
    B1 = peak[0, 0]
    B2 = sum(peak[0, q2] * gamma.second[k2][q2] for k2, m2 in enumerate(m) for q2 in range(1, m2))
    B3 = sum(peak[q1, 0] * gamma.first[k1][q1] for k1, m1 in enumerate(m) for q1 in range(1, m1))
    B4 = sum(
        peak[q1, q2] * gamma.first[k1][q1] * gamma.second[k2][q2]
        for k1, m1 in enumerate(m)
        for q1 in range(1, m1)
        for k2, m2 in enumerate(m)
        for q2 in range(1, m2)
    )
    return BTerms(B1, float(B2), float(B3), float(B4))


def tail_bound_rhs(
    f: AnalyticFn1,
    spec: EnsembleSpec,
    gamma: GammaCaps,
    delta: float,
    E_estimate: float,
    grid_size: int = 64,
) -> tuple[float, BTerms]:
    terms = b_terms(f, spec, gamma, grid_size)
    return terms.total * E_estimate / delta, terms


@dataclass(frozen=True)
class TailExperimentResult:
    delta_grid: list[float]
    empirical_freq: list[float]
    markov_bound: list[float]
    margin: list[float]
    B_terms: BTerms
    E_estimate: float
    trials: int
    seed: int
    gamma_violations: int
    function: str
    ensemble: dict

    @property
    def satisfied(self) -> list[bool]:
        return [f <= b + m for f, b, m in zip(self.empirical_freq, self.markov_bound, self.margin)]

    @property
    def ok(self) -> bool:
        return all(self.satisfied)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["satisfied"] = self.satisfied
        d["ok"] = self.ok
        return d

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["delta", "empirical_freq", "markov_bound", "margin"])
        for row in zip(self.delta_grid, self.empirical_freq, self.markov_bound, self.margin):
            w.writerow([repr(float(v)) for v in row])
        return buf.getvalue()


def auto_delta_grid(samples: np.ndarray, count: int = 8) -> list[float]:
    """``count`` thresholds at evenly spaced quantiles between 5% and 99%."""
    qs = np.quantile(samples, np.linspace(0.05, 0.99, count))
    return [float(q) for q in qs]


def monte_carlo_tail(
    f: AnalyticFn1,
    spec: EnsembleSpec,
    delta_grid: Sequence[float] | int,
    trials: int,
    seed: int,
    pilot_draws: int = 500,
    grid_size: int = 64,
    function_name: str | None = None,
) -> TailExperimentResult:
    """Exceedance frequencies of ``||f(X1) - f(X2)||_F`` against the Markov bound.

    ``delta_grid`` may be an integer, in which case that many thresholds are
    placed at quantiles of the observed distances.  The expectation
    ``E||X1 - X2||`` is the plug-in sample mean of the same run.
    """
    if trials < 1:
        raise InputError("trials must be positive")
    pilot_ss, main_ss = np.random.SeedSequence(seed).spawn(2)
    gamma = pilot_gamma(spec, pilot_ss, pilot_draws)

    dist = np.empty(trials)
    diff = np.empty(trials)
    violations = 0
    for t, child in enumerate(main_ss.spawn(trials)):
        d1, d2 = sample_pair(spec, child)
        diff[t] = fro(d1.matrix - d2.matrix)
        dist[t] = fro(eval_matrix_fn1(f, d1) - eval_matrix_fn1(f, d2))
        for caps, dec in ((gamma.first, d1), (gamma.second, d2)):
            for k, row in enumerate(nilpotent_norms(dec, spec.indices)):
                violations += sum(v > caps[k][q] for q, v in enumerate(row) if q)

    if isinstance(delta_grid, (int, np.integer)):
        deltas = auto_delta_grid(dist, int(delta_grid))
    else:
        deltas = [float(d) for d in delta_grid]
    if any(d <= 0 for d in deltas):
        raise InputError("thresholds must be positive")
    E = float(np.mean(diff))
    terms = b_terms(f, spec, gamma, grid_size)
    freq = [float(np.mean(dist >= d)) for d in deltas]
    bound = [terms.total * E / d for d in deltas]
    margin = [3.0 * math.sqrt(p * (1.0 - p) / trials) for p in freq]
    return TailExperimentResult(
        delta_grid=deltas,
        empirical_freq=freq,
        markov_bound=bound,
        margin=margin,
        B_terms=terms,
        E_estimate=E,
        trials=trials,
        seed=int(seed),
        gamma_violations=int(violations),
        function=function_name or getattr(f, "name", "f"),
        ensemble=spec.to_dict(),
    )


def norm_correlation(spec: EnsembleSpec, draws: int, seed: int) -> float:
    """Sample correlation between ``||X1||_F`` and ``||X2||_F``."""
    a, b = np.empty(draws), np.empty(draws)
    for i, child in enumerate(np.random.SeedSequence(seed).spawn(draws)):
        d1, d2 = sample_pair(spec, child)
        a[i], b[i] = fro(d1.matrix), fro(d2.matrix)
    return float(np.corrcoef(a, b)[0, 1])
