"""Increasing homeomorphisms of [0, oo): iteration, inversion, basins.

A :class:`Homeo` wraps a forward map fixing 0, an optional closed-form
inverse (bisection with a doubling bracket otherwise), and a monotonicity
flag verified on a probe grid at construction.  ``basin_of_zero`` decides
whether 0 attracts the whole half line or only an interval (0, b) ending at
a fixed point, and ``fundamental_domain_compare`` reports which of the two
interleaving orderings holds between the fundamental domains of h and of an
N-th root candidate iterated N times.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .efunc import GridSpec, _EXPR_NS

__all__ = [
    "Homeo",
    "BasinReport",
    "OrderingSample",
    "FundamentalDomainReport",
    "gallery_homeo",
    "homeo_from_callable",
    "homeo_from_expression",
    "iterate",
    "basin_of_zero",
    "fundamental_domain_compare",
]

_PROBE = np.concatenate([np.exp2(-np.arange(40.0, 0.0, -1.0)), np.exp2(np.arange(0.0, 21.0))])
_BRACKET_CEILING = 2.0**400


@dataclass(frozen=True)
class Homeo:
    """Increasing bijection of [0, oo) with h(0) = 0."""

    fn: Callable[[np.ndarray], np.ndarray]
    inverse_fn: Callable[[np.ndarray], np.ndarray] | None = None
    name: str = ""
    monotone: bool = field(default=True)

    def __call__(self, x):
        out = self.fn(np.asarray(x, dtype=float))
        if np.isscalar(x) or np.ndim(x) == 0:
            return float(out)
        return np.asarray(out, dtype=float)

    def inverse(self, y: float) -> float:
        """h^{-1}(y); closed form when available, else bracketed bisection."""
        if self.inverse_fn is not None:
            return float(self.inverse_fn(np.asarray(y, dtype=float)))
        return _bisect_inverse(self, float(y))


def _bisect_inverse(h: Homeo, y: float) -> float:
    if y < 0:
        raise ValueError("inverse requested below 0")
    if y == 0.0:
        return 0.0
    hi = max(y, 1.0)
    while h(hi) < y:
        hi *= 2.0
        if hi > _BRACKET_CEILING:
            raise ValueError(f"no preimage of {y:g} found below {_BRACKET_CEILING:g}")
    lo = 0.0
    # stop on relative width 1e-14 (below the 1e-12 contract) or 200 halvings
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if h(mid) < y:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-14 * hi:
            break
    return 0.5 * (lo + hi)


def _verify(fn, inverse_fn, name) -> Homeo:
    probe = _PROBE
    vals = np.asarray(fn(probe), dtype=float)
    v0 = float(fn(np.asarray(0.0)))
    if not abs(v0) <= 1e-15:
        raise ValueError(f"homeo {name!r} must fix 0, got h(0) = {v0!r}")
    monotone = bool(np.all(np.diff(vals) > 0) and np.all(vals > 0))
    h = Homeo(fn, inverse_fn, name, monotone)
    if inverse_fn is not None:
        rt = np.asarray(inverse_fn(vals), dtype=float)
        if not np.allclose(rt, probe, rtol=1e-12, atol=0.0):
            raise ValueError(f"homeo {name!r}: inverse fails round trip")
    return h


def homeo_from_callable(
    fn: Callable, inverse_fn: Callable | None = None, name: str = ""
) -> Homeo:
    return _verify(fn, inverse_fn, name)


def homeo_from_expression(expr: str, inverse_expr: str | None = None) -> Homeo:
    """Homeo from a formula in ``x`` (same namespace as EFunction expressions)."""
    code = compile(expr, "<homeo>", "eval")

    def fn(x, _code=code):
        ns = dict(_EXPR_NS)
        ns["x"] = x
        return np.asarray(eval(_code, {"__builtins__": {}}, ns), dtype=float)  # noqa: S307

    inv = None
    if inverse_expr is not None:
        icode = compile(inverse_expr, "<homeo-inverse>", "eval")

        def inv(x, _code=icode):  # type: ignore[misc]
            ns = dict(_EXPR_NS)
            ns["x"] = x
            return np.asarray(eval(_code, {"__builtins__": {}}, ns), dtype=float)  # noqa: S307

    return _verify(fn, inv, expr)


def gallery_homeo(ident: str) -> Homeo:
    """Gallery identifiers: halve, square, root_scale:N, pow:p, or an expression.

    halve          x/2            (global contraction toward 0)
    square         x^2            (fixed point at 1; (0,1) attracted to 0)
    root_scale:N   x / 2^(1/N)    (N-th root of halve)
    pow:p          x^p, p > 0     (pow:2 == square)
    """
    if ident == "halve":
        return _verify(lambda x: 0.5 * x, lambda y: 2.0 * y, "halve")
    if ident == "square":
        return _verify(lambda x: x * x, np.sqrt, "square")
    if ident.startswith("root_scale:"):
        n = int(ident.split(":", 1)[1])
        if n < 1:
            raise ValueError("root_scale:N needs N >= 1")
        c = 2.0 ** (-1.0 / n)
        return _verify(lambda x, _c=c: _c * x, lambda y, _c=c: y / _c, ident)
    if ident.startswith("pow:"):
        p = float(ident.split(":", 1)[1])
        if p <= 0:
            raise ValueError("pow:p needs p > 0")
        return _verify(
            lambda x, _p=p: np.power(x, _p), lambda y, _p=p: np.power(y, 1.0 / _p), ident
        )
    return homeo_from_expression(ident)


def iterate(h: Homeo, n: int, x: float) -> float:
    """n-fold composition h^n(x); negative n walks the inverse."""
    if x < 0:
        raise ValueError("iterate defined on x >= 0")
    cur = float(x)
    if n >= 0:
        for _ in range(n):
            cur = h(cur)
    else:
        for _ in range(-n):
            cur = h.inverse(cur)
    return cur


@dataclass(frozen=True)
class BasinReport:
    """Attraction of 0 under h, certified on the probe range only.

    case is "global" (h(x) < x at every probe), "bounded" (smallest positive
    fixed point b, with (0, b) attracted), or "zero_repelling" (h(x) > x next
    to 0, so no linearization basin exists).
    """

    case: str
    b: float | None
    horizon: float
    contraction_min: float
    contraction_max: float


def basin_of_zero(h: Homeo, probe: GridSpec | None = None) -> BasinReport:
    g = probe or GridSpec()
    below = g.nodes()[::-1]  # ascending in (0, 1]
    above = np.exp2(np.arange(1, g.tail_octaves + 1, dtype=float) * 1.0)
    xs = np.concatenate([below, above])
    hx = np.asarray(h(xs), dtype=float)
    gap = hx - xs
    ratio = hx / xs
    near0 = gap[: max(4, g.samples_per_octave)]
    if np.any(near0 > 0):
        return BasinReport("zero_repelling", None, float(xs[-1]), float(ratio.min()), float(ratio.max()))
    if np.all(gap < 0):
        return BasinReport("global", None, float(xs[-1]), float(ratio.min()), float(ratio.max()))
    # smallest sign change (or exact zero) of h(x) - x
    idx = int(np.argmax(gap >= 0))
    if gap[idx] == 0.0:
        b = float(xs[idx])
    else:
        b = _bisect_fixed_point(h, float(xs[idx - 1]), float(xs[idx]))
    return BasinReport("bounded", b, float(xs[-1]), float(ratio.min()), float(ratio.max()))


def _bisect_fixed_point(h: Homeo, lo: float, hi: float) -> float:
    # sign change of h(x) - x bracketed in [lo, hi]; refine to 1e-12 relative
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if h(mid) - mid < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-13 * hi:
            break
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class OrderingSample:
    a: float
    h_a: float
    h2_a: float
    h1_a: float
    h1sq_a: float
    label: str  # "first" | "second" | "both-with-equality" | "neither"


@dataclass(frozen=True)
class FundamentalDomainReport:
    """Which interleaving holds between h and h1 = hN^N along descending probes.

    "first" means h^2(a) <= h1(a) <= h(a); "second" means
    h1^2(a) <= h(a) <= h1(a).  ``recurring`` names an ordering that holds at
    every one of the last few (smallest) probes, or None: for maps outside
    the attract-0 hypotheses "neither at all probes" is a legitimate outcome.
    """

    samples: tuple[OrderingSample, ...]
    counts: dict
    recurring: str | None


def fundamental_domain_compare(
    h: Homeo, hN: Homeo, N: int, probes: Sequence[float], rtol: float = 1e-12
) -> FundamentalDomainReport:
    if N < 1:
        raise ValueError("N must be >= 1")
    samples = []
    for a in probes:
        a = float(a)
        ha = h(a)
        h2a = h(ha)
        h1a = iterate(hN, N, a)
        h1sq = iterate(hN, N, h1a)
        tol = rtol * max(1.0, a)
        first = (h2a <= h1a + tol) and (h1a <= ha + tol)
        second = (h1sq <= ha + tol) and (ha <= h1a + tol)
        if first and second:
            label = "both-with-equality"
        elif first:
            label = "first"
        elif second:
            label = "second"
        else:
            label = "neither"
        samples.append(OrderingSample(a, ha, h2a, h1a, h1sq, label))
    counts: dict[str, int] = {}
    for s in samples:
        counts[s.label] = counts.get(s.label, 0) + 1
    tail = samples[-min(5, len(samples)):]
    recurring = None
    for ordering in ("first", "second"):
        if all(s.label in (ordering, "both-with-equality") for s in tail):
            recurring = ordering if any(s.label == ordering for s in tail) else "both-with-equality"
            break
    return FundamentalDomainReport(tuple(samples), counts, recurring)
