"""Randomized verification suites behind ``gdoi verify`` and the acceptance tests.

Each suite draws ``count`` independent instances (one ``SeedSequence`` child per
instance), evaluates an identity or bound through two independent routes,
and reports per-instance residuals against the suite tolerance.  ``fault=True``
flips the sign of one route; it exists so the failure path can be exercised.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .bounds import gdoi_lower_bound, gdoi_upper_bound, gtoi_upper_bound, holder_upper_bound, lipschitz_bounds
from .doi import compose, gdoi
from .funcalc import Poly2, const2, divided_diff_1, divided_diff_2, identity
from .perturb import (
    continuity_probe,
    divergence_triple,
    perturbation_commutator,
    predict_nilpotency,
    splitting_check,
    telescope_residual,
)
from .randmat import (
    InstanceConfig,
    random_matrix,
    random_parameters,
    random_polynomial,
)
from .spectral import fro

CONTINUITY_SCALES = (1e-2, 1e-3, 1e-4, 1e-5)


@dataclass
class SuiteReport:
    suite: str
    tolerance: float
    count: int
    seed: int
    instances: list[dict]
    summary: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return all(inst["ok"] for inst in self.instances)

    @property
    def max_residual(self) -> float:
        return max((inst["residual"] for inst in self.instances), default=0.0)

    def failures(self) -> list[dict]:
        return [inst for inst in self.instances if not inst["ok"]]

    def to_dict(self, timing: bool = False) -> dict:
        d = asdict(self)
        if not timing:
            d.pop("seconds")
        d["max_residual"] = self.max_residual
        d["passed"] = self.passed
        return d


def _rngs(seed: int, count: int):
    for child in np.random.SeedSequence(seed).spawn(count):
        yield np.random.default_rng(child)


def _poly2(rng, degree: int) -> Poly2:
    """Random two-variable polynomial of total degree ``<= degree``."""
    c = np.zeros((degree + 1, degree + 1), dtype=np.complex128)
    for a in range(degree + 1):
        for b in range(degree + 1 - a):
            c[a, b] = complex(rng.standard_normal(), rng.standard_normal())
    return Poly2(c)


def _poly2_product(p: Poly2, q: Poly2) -> Poly2:
    A, B = p.coeffs.shape
    C, D = q.coeffs.shape
    out = np.zeros((A + C - 1, B + D - 1), dtype=np.complex128)
    for a in range(A):
        for b in range(B):
            out[a : a + C, b : b + D] += p.coeffs[a, b] * q.coeffs
    return Poly2(out)


def _rel(diff, ref) -> float:
    return fro(diff) / max(1.0, fro(ref))


def perturbation_suite(count=200, seed=0, tol=1e-8, cfg=None, fault=False) -> SuiteReport:
    cfg = cfg or InstanceConfig()
    out = []
    for i, rng in enumerate(_rngs(seed, count)):
        d1, d2 = random_parameters(rng, cfg)
        f = random_polynomial(rng, int(rng.integers(1, 6)))
        Y = random_matrix(rng, d1.n)
        lhs, rhs, res = perturbation_commutator(f, d1, d2, Y)
        if fault:
            res = _rel(lhs + rhs, lhs)
        out.append({"index": i, "n": d1.n, "degree": f.degree, "residual": res, "ok": res <= tol})
    return SuiteReport("perturbation", tol, count, seed, out)


def homomorphism_suite(count=100, seed=0, tol=1e-10, mult_tol=1e-9, cfg=None, fault=False) -> SuiteReport:
    cfg = cfg or InstanceConfig()
    out = []
    sign = -1.0 if fault else 1.0
    for i, rng in enumerate(_rngs(seed, count)):
        d1, d2 = random_parameters(rng, cfg)
        beta, gamma = _poly2(rng, int(rng.integers(0, 4))), _poly2(rng, int(rng.integers(0, 4)))
        c1, c2 = complex(*rng.standard_normal(2)), complex(*rng.standard_normal(2))
        Y = random_matrix(rng, d1.n)
        tb, tg = gdoi(beta, d1, d2, Y), gdoi(gamma, d1, d2, Y)
        combo = gdoi(c1 * beta + c2 * gamma, d1, d2, Y)
        add = _rel(combo - sign * (c1 * tb + c2 * tg), combo)
        prod = gdoi(_poly2_product(beta, gamma), d1, d2, Y)
        mult = _rel(prod - sign * compose(beta, gamma, d1, d2, Y), prod)
        ok = add <= tol and mult <= mult_tol
        out.append({"index": i, "n": d1.n, "additivity": add, "multiplicativity": mult, "residual": max(add, mult), "ok": ok})
    rep = SuiteReport("homomorphism", tol, count, seed, out)
    rep.summary = {
        "additivity_tolerance": tol,
        "multiplicativity_tolerance": mult_tol,
        "max_additivity": max(x["additivity"] for x in out),
        "max_multiplicativity": max(x["multiplicativity"] for x in out),
    }
    return rep


def split_suite(count=200, seed=0, tol=1e-9, cfg=None, fault=False) -> SuiteReport:
    cfg = cfg or InstanceConfig()
    out = []
    commuting = 0
    for i, rng in enumerate(_rngs(seed, count)):
        d1, d2 = random_parameters(rng, cfg)
        f = random_polynomial(rng, int(rng.integers(1, 6)))
        lhs, proj, mu, res = splitting_check(f, d1, d2)
        if fault:
            res = _rel(lhs - proj + mu, lhs)
        pred = predict_nilpotency(d1, d2, "commuting")
        inst = {"index": i, "n": d1.n, "residual": res, "commuting": pred.fired}
        ok = res <= tol
        if pred.fired:
            commuting += 1
            tri = divergence_triple(mu, scale=max(1.0, fro(lhs)))
            inst.update(l1=tri.l1, l2=tri.l2, r=tri.r, index_bound=pred.degree_bound)
            ok = ok and tri.l1 == 0 and tri.l2 <= pred.degree_bound
        inst["ok"] = ok
        out.append(inst)
    rep = SuiteReport("split", tol, count, seed, out)
    rep.summary = {"commuting_instances": commuting}
    return rep


def telescope_suite(count=100, seed=0, tol=1e-8, cfg=None, fault=False) -> SuiteReport:
    cfg = cfg or InstanceConfig(n_max=6)
    out = []
    for i, rng in enumerate(_rngs(seed, count)):
        dA, dB, dX = random_parameters(rng, cfg, count=3)
        f = random_polynomial(rng, int(rng.integers(1, 4)))
        Y = random_matrix(rng, dA.n)
        res = telescope_residual(f, dA, dB, dX, -Y if fault else Y)
        if fault:
            res = max(res, 1.0)
        out.append({"index": i, "n": dA.n, "degree": f.degree, "residual": res, "ok": res <= tol})
    return SuiteReport("telescope", tol, count, seed, out)


def continuity_suite(count=50, seed=0, tol=1e-3, cfg=None, fault=False) -> SuiteReport:
    """Deviation must be nonincreasing over the scale grid and shrink by ``1/tol`` end to end."""
    cfg = cfg or InstanceConfig()
    out = []
    for i, rng in enumerate(_rngs(seed, count)):
        d1, d2 = random_parameters(rng, cfg)
        beta = _poly2(rng, int(rng.integers(1, 4)))
        Y = random_matrix(rng, d1.n)
        dev = continuity_probe(beta, d1, d2, Y, CONTINUITY_SCALES, seed=int(rng.integers(2**31)))
        if fault:
            dev = dev[::-1]
        valid = all(np.isfinite(dev)) and dev[0] > 0
        mono = valid and all(b <= a for a, b in zip(dev, dev[1:]))
        ratio = dev[-1] / dev[0] if valid else math.inf
        out.append(
            {
                "index": i,
                "n": d1.n,
                "deviations": dev,
                "monotone": mono,
                "residual": ratio,
                "ok": mono and ratio <= tol,
            }
        )
    rep = SuiteReport("continuity", tol, count, seed, out)
    rep.summary = {
        "monotone_instances": sum(x["monotone"] for x in out),
        "shrink_instances": sum(x["residual"] <= tol for x in out),
        "scales": list(CONTINUITY_SCALES),
    }
    return rep


def _violation(rep) -> float:
    """Relative amount by which a bound report misses, zero when satisfied."""
    if rep.kind == "upper":
        return max(0.0, -rep.slack) / max(1.0, rep.bound_value)
    worst = max([rep.bound_value, *rep.alternatives.values()])
    return max(0.0, worst - rep.actual_value) / max(1.0, rep.actual_value)


def norms_suite(count=500, seed=0, tol=1e-10, cfg=None, fault=False) -> SuiteReport:
    """Soundness of every bound, plus the two tightness witnesses."""
    cfg = cfg or InstanceConfig()
    out = []
    failed_kinds: dict[str, int] = {}
    for i, rng in enumerate(_rngs(seed, count)):
        d1, d2, d3 = random_parameters(rng, cfg, count=3)
        n = d1.n
        f = random_polynomial(rng, int(rng.integers(1, 6)))
        Y1, Y2 = random_matrix(rng, n), random_matrix(rng, n)
        beta = divided_diff_1(f)
        reports = {
            "gdoi_upper": gdoi_upper_bound(beta, d1, d2, Y1),
            "gdoi_lower": gdoi_lower_bound(beta, d1, d2, Y1),
            "gtoi_upper": gtoi_upper_bound(divided_diff_2(f), d1, d2, d3, Y1, Y2),
        }
        reports["lipschitz_upper"], reports["lipschitz_lower"] = lipschitz_bounds(f, d1, d2)
        t = fro(d1.matrix - d2.matrix)
        spectrum = np.concatenate([d1.eigenvalues, d2.eigenvalues])
        gaps = np.abs(spectrum[:, None] - spectrum[None, :])[~np.eye(len(spectrum), dtype=bool)]
        omega = float(rng.choice([0.5, 1.0, 1.5]))
        reports["holder_upper"] = holder_upper_bound(f, d1, d2, omega, nu=t, nu_prime=float(gaps.min()))

        c = complex(*rng.standard_normal(2))
        const_rep = gdoi_upper_bound(const2(c), d1, d2, Y1)
        lin_rep, _ = lipschitz_bounds(identity(), d1, d2)
        tight = {
            "const_symbol": abs(const_rep.slack) / max(1.0, const_rep.bound_value),
            "identity_function": abs(lin_rep.slack) / max(1.0, lin_rep.bound_value),
        }
        misses = {k: _violation(r) for k, r in reports.items()}
        if fault:
            misses["gdoi_upper"] = 1.0
        ok = all(v <= tol for v in misses.values()) and all(v <= tol for v in tight.values())
        for k, v in misses.items():
            if v > tol:
                failed_kinds[k] = failed_kinds.get(k, 0) + 1
        out.append(
            {
                "index": i,
                "n": n,
                "cond": max(d1.cond_estimate, d2.cond_estimate),
                "violations": misses,
                "tightness": tight,
                "residual": max([*misses.values(), *tight.values()]),
                "ok": ok,
            }
        )
    rep = SuiteReport("norms", tol, count, seed, out)
    rep.summary = {"failed_bounds": failed_kinds, "unitary_basis": cfg.unitary}
    return rep


SUITES: dict[str, Callable[..., SuiteReport]] = {
    "perturbation": perturbation_suite,
    "homomorphism": homomorphism_suite,
    "split": split_suite,
    "telescope": telescope_suite,
    "continuity": continuity_suite,
    "norms": norms_suite,
}

DEFAULT_COUNTS = {"perturbation": 200, "homomorphism": 100, "split": 200, "telescope": 100, "continuity": 50, "norms": 500}


def run_suite(name: str, count: int | None = None, seed: int = 0, tol: float | None = None, cfg=None, fault=False):
    fn = SUITES[name]
    kwargs = {"count": DEFAULT_COUNTS[name] if count is None else count, "seed": seed, "cfg": cfg, "fault": fault}
    if tol is not None:
        kwargs["tol"] = tol
    start = time.perf_counter()
    rep = fn(**kwargs)
    rep.seconds = time.perf_counter() - start
    rep.config = {"cfg": asdict(cfg or _default_cfg(name)), "fault": fault}
    return rep


def _default_cfg(name: str) -> InstanceConfig:
    return InstanceConfig(n_max=6) if name == "telescope" else InstanceConfig()

