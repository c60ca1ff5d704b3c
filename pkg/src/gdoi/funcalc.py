"""Analytic functions with exact derivatives, and matrix functional calculus.

One-variable functions expose ``derivative(q, z)``; two- and three-variable
symbols expose mixed partials ``partial(q1, q2, z1, z2)`` and
``partial(q1, q2, q3, z1, z2, z3)``.  Every evaluator accepts scalars or numpy
arrays (broadcast elementwise), so bound estimators can sweep whole grids.

Divided differences are evaluated with a Newton table in which a run of
coincident nodes is seeded with ``f^(j)(x)/j!``.  Polynomials take a
division-free route through complete homogeneous symmetric sums, which is
exact and doubles as an independent check on the table.  Mixed partials of
``f^[1]`` and ``f^[2]`` then come for free from repeated nodes:

    partial(q1, q2)(x, y) / (q1! q2!) = f[x (q1+1 times), y (q2+1 times)]
"""

from __future__ import annotations

import json
import math
from abc import ABC, abstractmethod
from typing import Sequence

import numpy as np

from .errors import (
    DerivativeOrderUnavailable,
    DimensionMismatch,
    InputError,
    RadiusExceeded,
    SeparationViolation,
)
from .spectral import SpectralDecomposition

SEP_RTOL = 1e-6
RADIUS_MARGIN = 1e-12


def _falling(k: int, q: int) -> int:
    """k (k-1) ... (k-q+1)."""
    out = 1
    for i in range(q):
        out *= k - i
    return out


def _scalar_or_array(z):
    a = np.asarray(z, dtype=np.complex128)
    return a if a.ndim else complex(a)


class AnalyticFn1(ABC):
    """Analytic function of one variable on the disk ``|z| < radius``."""

    radius: float = math.inf
    name: str = "f"

    @abstractmethod
    def derivative(self, q: int, z):
        ...

    def value(self, z):
        return self.derivative(0, z)

    def __call__(self, z):
        return self.value(z)

    def __repr__(self):
        return f"<{type(self).__name__} {self.name}>"


class Polynomial(AnalyticFn1):
    """``sum_k c_k z^k``; derivatives by coefficient shift."""

    def __init__(self, coeffs: Sequence[complex], name: str | None = None):
        c = np.array(coeffs, dtype=np.complex128).ravel()
        if c.size == 0:
            c = np.zeros(1, dtype=np.complex128)
        last = np.flatnonzero(c)
        self.coeffs = c[: last[-1] + 1] if last.size else c[:1]
        self.name = name or f"poly:{_format_coeffs(self.coeffs)}"

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def derivative(self, q, z):
        z = _scalar_or_array(z)
        if q > self.degree:
            return 0 * z + 0j
        acc = 0 * z + 0j
        for k in range(self.degree, q - 1, -1):
            acc = acc * z + self.coeffs[k] * _falling(k, q)
        return acc


class Exp(AnalyticFn1):
    name = "exp"

    def derivative(self, q, z):
        return np.exp(_scalar_or_array(z))


class Geometric(AnalyticFn1):
    """``1/(1-z)`` on the unit disk."""

    name = "geometric"
    radius = 1.0

    def derivative(self, q, z):
        z = _scalar_or_array(z)
        return math.factorial(q) / (1.0 - z) ** (q + 1)


def identity() -> Polynomial:
    return Polynomial([0, 1], name="identity")


def constant(c: complex) -> Polynomial:
    return Polynomial([c], name=f"const:{_format_scalar(c)}")


def power(k: int) -> Polynomial:
    if k < 0:
        raise InputError("power:k needs k >= 0")
    return Polynomial([0] * k + [1], name=f"power:{k}")


def truncated_exp(degree: int) -> Polynomial:
    return Polynomial([1 / math.factorial(k) for k in range(degree + 1)], name=f"texp:{degree}")


# ----------------------------------------------------------------------------
# confluent divided differences


def _coincide(a, b, tol):
    return np.abs(a - b) <= tol


def divided_difference(f: AnalyticFn1, groups: Sequence[tuple[complex, int]], tol: float = 0.0) -> complex:
    """Divided difference of ``f`` over nodes given as ``(value, multiplicity)``.

    Groups whose values lie within ``tol`` of each other are merged (the later
    value snaps to the earlier one) so the table sees contiguous runs.
    """
    merged: list[list] = []
    for z, mult in groups:
        z = complex(z)
        for g in merged:
            if abs(g[0] - z) <= tol:
                g[1] += mult
                break
        else:
            merged.append([z, mult])
    nodes = [z for z, mult in merged for _ in range(mult)]
    cache: dict[tuple[complex, int], complex] = {}

    def seed(z, j):
        key = (z, j)
        if key not in cache:
            cache[key] = complex(f.derivative(j, z)) / math.factorial(j)
        return cache[key]

    d = [seed(z, 0) for z in nodes]
    m = len(nodes)
    for j in range(1, m):
        for i in range(m - 1, j - 1, -1):
            if nodes[i] == nodes[i - j]:
                d[i] = seed(nodes[i], j)
            else:
                d[i] = (d[i] - d[i - 1]) / (nodes[i] - nodes[i - j])
    return d[-1]


def _dd_vectorized(f: AnalyticFn1, points: list[np.ndarray], mults: list[int], tol: float) -> np.ndarray:
    """Elementwise divided difference for grouped nodes.

    Adjacent groups that coincide are snapped together.  Only valid when no
    two non-adjacent groups coincide without the group between them; the
    caller guarantees that.
    """
    pts = [points[0]]
    for p in points[1:]:
        prev = pts[-1]
        pts.append(np.where(_coincide(p, prev, tol), prev, p))
    nodes = [p for p, mult in zip(pts, mults) for _ in range(mult)]
    m = len(nodes)
    seeds: dict[tuple[int, int], np.ndarray] = {}

    def seed(i, j):
        key = (id(nodes[i]), j)
        if key not in seeds:
            seeds[key] = f.derivative(j, nodes[i]) / math.factorial(j)
        return seeds[key]

    d = [seed(i, 0) for i in range(m)]
    for j in range(1, m):
        for i in range(m - 1, j - 1, -1):
            same = nodes[i] == nodes[i - j]
            den = np.where(same, 1.0, nodes[i] - nodes[i - j])
            d[i] = np.where(same, seed(i, j), (d[i] - d[i - 1]) / den)
    return d[-1]


def polynomial_divided_difference(coeffs, points: Sequence, mults: Sequence[int]):
    """Divided difference of a polynomial without any division.

    For ``z^k`` over ``M`` nodes the divided difference is the complete
    homogeneous symmetric polynomial ``h_{k-M+1}`` of the nodes, whose
    generating function is ``prod_g (1 - z_g t)^(-mult_g)``.  Repeated nodes
    need no special treatment.
    """
    coeffs = np.asarray(coeffs, dtype=np.complex128)
    M = sum(mults)
    D = len(coeffs) - M
    zero = 0j * sum(np.asarray(p, dtype=np.complex128) for p in points)
    if D < 0:
        return zero
    series = [zero + 1.0] + [zero] * D
    for z, mult in zip(points, mults):
        factor = [math.comb(i + mult - 1, mult - 1) * z**i for i in range(D + 1)]
        series = [sum(series[j] * factor[i - j] for j in range(i + 1)) for i in range(D + 1)]
    return sum(coeffs[j + M - 1] * series[j] for j in range(D + 1))


def _check_radius(radius: float, *zs):
    if math.isinf(radius):
        return
    limit = radius - RADIUS_MARGIN * max(1.0, radius)
    for z in zs:
        if np.any(np.abs(z) >= limit):
            raise RadiusExceeded(f"point outside the disk of radius {radius}")


# ----------------------------------------------------------------------------
# two-variable symbols


class AnalyticFn2(ABC):
    """Analytic symbol ``beta(z1, z2)`` on a product of disks."""

    radius: tuple[float, float] = (math.inf, math.inf)
    max_order: int | None = None
    name: str = "beta"

    @abstractmethod
    def _partial(self, q1: int, q2: int, z1, z2):
        ...

    def partial(self, q1: int, q2: int, z1, z2):
        if self.max_order is not None and max(q1, q2) > self.max_order:
            raise DerivativeOrderUnavailable(f"{self.name}: order ({q1},{q2}) beyond {self.max_order}")
        return self._partial(q1, q2, _scalar_or_array(z1), _scalar_or_array(z2))

    def value(self, z1, z2):
        return self.partial(0, 0, z1, z2)

    def __call__(self, z1, z2):
        return self.value(z1, z2)

    def __add__(self, other):
        return Sum2(self, other)

    def __mul__(self, other):
        if isinstance(other, AnalyticFn2):
            return Product2(self, other)
        return Scale2(self, complex(other))

    __rmul__ = __mul__

    def __repr__(self):
        return f"<{type(self).__name__} {self.name}>"


class Poly2(AnalyticFn2):
    """``sum c[a, b] z1^a z2^b``."""

    def __init__(self, coeffs, name: str | None = None):
        self.coeffs = np.atleast_2d(np.array(coeffs, dtype=np.complex128))
        self.name = name or "poly2"

    def _partial(self, q1, q2, z1, z2):
        acc = 0 * (z1 + z2) + 0j
        A, B = self.coeffs.shape
        for a in range(q1, A):
            for b in range(q2, B):
                c = self.coeffs[a, b]
                if c != 0:
                    acc = acc + c * _falling(a, q1) * _falling(b, q2) * z1 ** (a - q1) * z2 ** (b - q2)
        return acc


class Lift2(AnalyticFn2):
    """``f(z1)`` or ``f(z2)`` viewed as a two-variable symbol."""

    def __init__(self, f: AnalyticFn1, var: int):
        if var not in (1, 2):
            raise InputError("var must be 1 or 2")
        self.f, self.var = f, var
        self.radius = (f.radius, math.inf) if var == 1 else (math.inf, f.radius)
        self.name = f"{f.name}(z{var})"

    def _partial(self, q1, q2, z1, z2):
        own, other, z = (q1, q2, z1) if self.var == 1 else (q2, q1, z2)
        if other:
            return 0 * (z1 + z2) + 0j
        return self.f.derivative(own, z) + 0 * (z1 + z2)


class Sum2(AnalyticFn2):
    def __init__(self, *terms: AnalyticFn2):
        self.terms = terms
        self.radius = tuple(min(t.radius[i] for t in terms) for i in range(2))
        self.name = " + ".join(t.name for t in terms)

    def _partial(self, q1, q2, z1, z2):
        return sum(t.partial(q1, q2, z1, z2) for t in self.terms)


class Scale2(AnalyticFn2):
    def __init__(self, f: AnalyticFn2, c: complex):
        self.f, self.c = f, complex(c)
        self.radius = f.radius
        self.name = f"{_format_scalar(self.c)}*({f.name})"

    def _partial(self, q1, q2, z1, z2):
        return self.c * self.f.partial(q1, q2, z1, z2)


class Product2(AnalyticFn2):
    """Pointwise product; partials by the double Leibniz sum."""

    def __init__(self, f: AnalyticFn2, g: AnalyticFn2):
        self.f, self.g = f, g
        self.radius = tuple(min(f.radius[i], g.radius[i]) for i in range(2))
        self.name = f"({f.name})*({g.name})"

    def _partial(self, q1, q2, z1, z2):
        acc = 0
        for a in range(q1 + 1):
            for b in range(q2 + 1):
                w = math.comb(q1, a) * math.comb(q2, b)
                acc = acc + w * self.f.partial(a, b, z1, z2) * self.g.partial(q1 - a, q2 - b, z1, z2)
        return acc


def sum2(*terms: AnalyticFn2) -> AnalyticFn2:
    return Sum2(*terms)


def scale2(f: AnalyticFn2, c: complex) -> AnalyticFn2:
    return Scale2(f, c)


def product2(f: AnalyticFn2, g: AnalyticFn2) -> AnalyticFn2:
    return Product2(f, g)


def const2(c: complex) -> Poly2:
    return Poly2([[c]], name=f"const:{_format_scalar(c)}")


def pi1() -> Poly2:
    return Poly2([[0], [1]], name="z1")


def pi2() -> Poly2:
    return Poly2([[0, 1]], name="z2")


class _DividedDifference:
    """Shared evaluation for ``f^[1]`` and ``f^[2]``."""

    f: AnalyticFn1
    confluent: bool
    sep_rtol: float

    def _tol(self, *zs):
        scale = 1.0
        for z in zs:
            scale = np.maximum(scale, np.abs(z))
        return self.sep_rtol * scale

    def _eval(self, orders, zs):
        _check_radius(self.f.radius, *zs)
        tol = self._tol(*zs)
        for i in range(len(zs)):
            for j in range(i + 1, len(zs)):
                close = np.abs(zs[i] - zs[j]) < tol
                if np.any(close) and not self.confluent:
                    raise SeparationViolation(
                        f"{self.name}: nodes closer than the separation tolerance; "
                        "request confluent evaluation explicitly"
                    )
        weight = math.prod(math.factorial(q) for q in orders)
        mults = [q + 1 for q in orders]
        if isinstance(self.f, Polynomial):
            return weight * polynomial_divided_difference(self.f.coeffs, zs, mults)
        if all(np.ndim(z) == 0 for z in zs):
            return weight * divided_difference(self.f, list(zip(zs, mults)), float(tol))
        shape = np.broadcast(*zs).shape
        arrs = [np.broadcast_to(np.asarray(z, dtype=np.complex128), shape) for z in zs]
        tol = np.broadcast_to(tol, shape)
        # the vectorized table needs coincident groups to be adjacent
        tangled = np.zeros(shape, dtype=bool)
        if len(arrs) == 3:
            tangled = _coincide(arrs[0], arrs[2], tol) & ~_coincide(arrs[0], arrs[1], tol)
        out = _dd_vectorized(self.f, arrs, mults, tol)
        if np.any(tangled):
            out = np.array(out, dtype=np.complex128)
            for idx in zip(*np.nonzero(tangled)):
                out[idx] = divided_difference(self.f, [(a[idx], m) for a, m in zip(arrs, mults)], float(tol[idx]))
        return weight * out


class DividedDifference1(_DividedDifference, AnalyticFn2):
    """``f^[1](x, y) = (f(x) - f(y)) / (x - y)`` with confluent partials."""

    def __init__(self, f: AnalyticFn1, confluent: bool = False, sep_rtol: float = SEP_RTOL):
        self.f, self.confluent, self.sep_rtol = f, confluent, sep_rtol
        self.radius = (f.radius, f.radius)
        self.name = f"divdiff:{f.name}"

    def _partial(self, q1, q2, z1, z2):
        return self._eval((q1, q2), (z1, z2))


def divided_diff_1(f: AnalyticFn1, confluent: bool = False, sep_rtol: float = SEP_RTOL) -> DividedDifference1:
    return DividedDifference1(f, confluent, sep_rtol)


# ----------------------------------------------------------------------------
# three-variable symbols


class AnalyticFn3(ABC):
    radius: tuple[float, float, float] = (math.inf, math.inf, math.inf)
    max_order: int | None = None
    name: str = "beta3"

    @abstractmethod
    def _partial(self, q1, q2, q3, z1, z2, z3):
        ...

    def partial(self, q1, q2, q3, z1, z2, z3):
        if self.max_order is not None and max(q1, q2, q3) > self.max_order:
            raise DerivativeOrderUnavailable(f"{self.name}: order ({q1},{q2},{q3}) beyond {self.max_order}")
        return self._partial(q1, q2, q3, *(_scalar_or_array(z) for z in (z1, z2, z3)))

    def value(self, z1, z2, z3):
        return self.partial(0, 0, 0, z1, z2, z3)

    def __call__(self, z1, z2, z3):
        return self.value(z1, z2, z3)

    def __repr__(self):
        return f"<{type(self).__name__} {self.name}>"


class Poly3(AnalyticFn3):
    """``sum c[a, b, c] z1^a z2^b z3^c``."""

    def __init__(self, coeffs, name: str | None = None):
        c = np.array(coeffs, dtype=np.complex128)
        while c.ndim < 3:
            c = c[..., np.newaxis]
        self.coeffs = c
        self.name = name or "poly3"

    def _partial(self, q1, q2, q3, z1, z2, z3):
        acc = 0 * (z1 + z2 + z3) + 0j
        for (a, b, d), c in np.ndenumerate(self.coeffs):
            if c != 0 and a >= q1 and b >= q2 and d >= q3:
                w = _falling(a, q1) * _falling(b, q2) * _falling(d, q3)
                acc = acc + c * w * z1 ** (a - q1) * z2 ** (b - q2) * z3 ** (d - q3)
        return acc


def const3(c: complex) -> Poly3:
    return Poly3([[[c]]], name=f"const:{_format_scalar(c)}")


class DividedDifference2(_DividedDifference, AnalyticFn3):
    """Second divided difference ``f^[2](x0, x1, x2)``."""

    def __init__(self, f: AnalyticFn1, confluent: bool = False, sep_rtol: float = SEP_RTOL):
        self.f, self.confluent, self.sep_rtol = f, confluent, sep_rtol
        self.radius = (f.radius,) * 3
        self.name = f"divdiff2:{f.name}"

    def _partial(self, q1, q2, q3, z1, z2, z3):
        return self._eval((q1, q2, q3), (z1, z2, z3))


def divided_diff_2(f: AnalyticFn1, confluent: bool = False, sep_rtol: float = SEP_RTOL) -> DividedDifference2:
    return DividedDifference2(f, confluent, sep_rtol)


# ----------------------------------------------------------------------------
# spectral mapping


def eval_matrix_fn1(f: AnalyticFn1, dec: SpectralDecomposition) -> np.ndarray:
    """``f(X) = sum_k [f(lam_k) P_k + sum_q f^(q)(lam_k)/q! N_k^q]``."""
    _check_radius(f.radius, dec.eigenvalues)
    out = np.zeros((dec.n, dec.n), dtype=np.complex128)
    for c in dec.components:
        for q in range(c.index):
            out += complex(f.derivative(q, c.eigenvalue)) / math.factorial(q) * c.factor(q)
    return out


def eval_matrix_fn2(f: AnalyticFn2, dec1: SpectralDecomposition, dec2: SpectralDecomposition) -> np.ndarray:
    """``f(X1, X2)``: the four-part expansion with ``X1`` factors on the left."""
    if dec1.n != dec2.n:
        raise DimensionMismatch(f"dimensions differ: {dec1.n} vs {dec2.n}")
    _check_radius(f.radius[0], dec1.eigenvalues)
    _check_radius(f.radius[1], dec2.eigenvalues)
    out = np.zeros((dec1.n, dec1.n), dtype=np.complex128)
    for c1 in dec1.components:
        for c2 in dec2.components:
            for q1 in range(c1.index):
                for q2 in range(c2.index):
                    w = complex(f.partial(q1, q2, c1.eigenvalue, c2.eigenvalue))
                    w /= math.factorial(q1) * math.factorial(q2)
                    out += w * (c1.factor(q1) @ c2.factor(q2))
    return out


# ----------------------------------------------------------------------------
# registry


def _format_scalar(c: complex) -> str:
    c = complex(c)
    return repr(c.real) if c.imag == 0 else f"[{c.real!r},{c.imag!r}]"


def _format_coeffs(coeffs) -> str:
    return "[" + ",".join(_format_scalar(c) for c in coeffs) + "]"


def _parse_scalar(obj) -> complex:
    if isinstance(obj, (list, tuple)):
        if len(obj) != 2:
            raise InputError(f"complex scalars are [re, im] pairs, got {obj!r}")
        return complex(float(obj[0]), float(obj[1]))
    if isinstance(obj, str):
        return complex(obj.replace(" ", ""))
    return complex(obj)


def _parse_json(text: str, what: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"cannot parse {what} {text!r}: {exc}") from exc


def parse_fn1(desc: str) -> AnalyticFn1:
    """Resolve a registry string such as ``"poly:[1,0,2]"``, ``"exp"`` or ``"power:3"``."""
    desc = desc.strip()
    head, _, arg = desc.partition(":")
    try:
        if head == "poly" and arg:
            coeffs = _parse_json(arg, "coefficients")
            if not isinstance(coeffs, list):
                raise InputError("poly: expects a JSON list of coefficients")
            return Polynomial([_parse_scalar(c) for c in coeffs])
        if head == "exp" and not arg:
            return Exp()
        if head == "power" and arg:
            return power(int(arg))
        if head == "identity" and not arg:
            return identity()
        if head == "const" and arg:
            return constant(_parse_scalar(_parse_json(arg, "constant")))
        if head == "texp" and arg:
            return truncated_exp(int(arg))
        if head == "geometric" and not arg:
            return Geometric()
    except (TypeError, ValueError) as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"bad function descriptor {desc!r}: {exc}") from exc
    raise InputError(f"unknown function descriptor {desc!r}")


def parse_fn2(desc: str) -> AnalyticFn2:
    """Two-variable registry: ``divdiff:<fn>``, ``poly2:[[...]]``, ``const:c``, ``pi1``, ``pi2``."""
    desc = desc.strip()
    head, _, arg = desc.partition(":")
    if head == "divdiff" and arg:
        return divided_diff_1(parse_fn1(arg))
    if head == "poly2" and arg:
        coeffs = _parse_json(arg, "coefficients")
        try:
            return Poly2([[_parse_scalar(c) for c in row] for row in coeffs], name=desc)
        except TypeError as exc:
            raise InputError(f"poly2 expects a nested list: {exc}") from exc
    if head == "const" and arg:
        return const2(_parse_scalar(_parse_json(arg, "constant")))
    if desc == "pi1":
        return pi1()
    if desc == "pi2":
        return pi2()
    raise InputError(f"unknown symbol descriptor {desc!r}")
