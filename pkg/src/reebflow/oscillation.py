"""Oscillation functionals, the sigma invariant, and equivalence witnesses.

For f in E the profile ``star`` measures how far f sits below its running
maximum taken from x = 1 toward 0:

    star(x) = max(f on [x, 1]) - f(x)

``sharp`` is the variant for class E0 whose reference interval extends to
+oo.  Both are computed by a single descending running-maximum pass over
the grid, so a profile costs O(n).  The invariant

    sigma = limsup of star(x) as x -> 0

is estimated by the supremum of the per-octave maxima s_m over a tail
window of octaves, with a qualitative trend (increasing / bounded /
vanishing) attached, since no finite grid can certify a limsup.

``check_witness`` verifies the equivalence relation f' = f o h + k, or its
self-similarity form lam * f = f o h + k, as a relative residual over the
grid.  ``star_identity_suite`` checks the calculus the star functional
obeys under scaling, constant shifts, pushforward by a homeomorphism,
perturbation by a continuous shift, and recurrence of its zeros.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .efunc import EFunction, GridSpec, sample
from .errors import TailCheckError
from .homeo import Homeo

__all__ = [
    "OscillationProfile",
    "SigmaEstimate",
    "EquivalenceWitness",
    "WitnessReport",
    "ItemResult",
    "IdentitySuiteReport",
    "star_profile",
    "sharp_profile",
    "sigma_estimate",
    "check_witness",
    "star_identity_suite",
    "as_shift",
    "zero_shift",
    "const_shift",
]


def zero_shift(x):
    return np.zeros_like(np.asarray(x, dtype=float))


def const_shift(c: float) -> Callable:
    return lambda x, _c=float(c): np.full_like(np.asarray(x, dtype=float), _c)


def as_shift(k) -> Callable[[np.ndarray], np.ndarray]:
    """Normalize a continuous-shift argument: None -> 0, number -> constant."""
    if k is None:
        return zero_shift
    if isinstance(k, (int, float)):
        return const_shift(float(k))
    return lambda x, _k=k: np.asarray(_k(np.asarray(x, dtype=float)), dtype=float)


@dataclass(frozen=True)
class OscillationProfile:
    """star or sharp values on a grid, with per-octave envelopes.

    ``octave_sup[j]`` / ``octave_min[j]`` bound the values over the window
    [2^-(m+1), 2^-m] for m = grid.octave_min + j (both window endpoints are
    grid nodes and are included).  ``cell_oscillation`` is the largest jump
    of f between adjacent nodes, the resolution proxy: refine K if it is too
    coarse for your tolerance.
    """

    variant: str  # "star" | "sharp"
    grid: GridSpec
    x: np.ndarray
    f_values: np.ndarray
    values: np.ndarray
    octave_sup: np.ndarray
    octave_min: np.ndarray
    cell_oscillation: float
    tail_max: float | None = None  # sharp only: max of f over [1, 2^tail]

    def value_at(self, xq) -> np.ndarray:
        """Interpolate the profile at off-grid points (linear in log2 x)."""
        lx = np.log2(self.x[::-1])
        vv = self.values[::-1]
        return np.interp(np.log2(np.asarray(xq, dtype=float)), lx, vv)

    def running_max_values(self) -> np.ndarray:
        """The running maximum the profile was built from (tail seed included)."""
        rm = np.maximum.accumulate(self.f_values)
        if self.tail_max is not None:
            rm = np.maximum(rm, self.tail_max)
        return rm

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "f", "fstar"])
            for xv, fv, sv in zip(self.x, self.f_values, self.values):
                w.writerow([repr(float(xv)), repr(float(fv)), repr(float(sv))])

    def to_json(self) -> dict:
        return {
            "variant": self.variant,
            "grid": self.grid.to_json(),
            "octaves": [int(m) for m in self.grid.octaves()],
            "octave_sup": [float(v) for v in self.octave_sup],
            "octave_min": [float(v) for v in self.octave_min],
            "cell_oscillation": float(self.cell_oscillation),
            "tail_max": None if self.tail_max is None else float(self.tail_max),
        }


def _octave_envelopes(g: GridSpec, values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    sups = np.empty(g.octave_count)
    mins = np.empty(g.octave_count)
    for j, m in enumerate(g.octaves()):
        window = values[g.octave_slice(m)]
        sups[j] = window.max()
        mins[j] = window.min()
    return sups, mins


def _profile_from_values(
    variant: str, g: GridSpec, x, fv, seed: float | None, tail_max: float | None
) -> OscillationProfile:
    runmax = np.maximum.accumulate(fv)
    if seed is not None:
        runmax = np.maximum(runmax, seed)
    vals = runmax - fv  # runmax >= fv elementwise, so vals >= 0 exactly
    sups, mins = _octave_envelopes(g, vals)
    cell = float(np.max(np.abs(np.diff(fv)))) if len(fv) > 1 else 0.0
    return OscillationProfile(variant, g, x, fv, vals, sups, mins, cell, tail_max)


def star_profile(f: EFunction, g: GridSpec) -> OscillationProfile:
    """Descending running-max profile referenced to x = 1.

    The grid must start at x = 1 (octave_min == 0) so the profile value at
    the first node is exactly 0.
    """
    if g.octave_min != 0:
        raise ValueError("star profile needs a grid starting at x = 1 (octave_min = 0)")
    prof = sample(f, g)
    return _profile_from_values("star", g, prof.x, prof.values, None, None)


def sharp_profile(f: EFunction, g: GridSpec, tail_bound: float = 0.01) -> OscillationProfile:
    """Running-max profile referenced to +oo, for functions of class E0.

    The running maximum is seeded with the sampled maximum of f over
    [1, 2^tail_octaves]; the magnitude of f at the horizon must fall below
    ``tail_bound`` or the decay claim is rejected.
    """
    if f.claimed_class != "E0":
        raise ValueError("sharp profile requires a function with claimed_class E0")
    if g.octave_min != 0:
        raise ValueError("sharp profile needs a grid starting at x = 1 (octave_min = 0)")
    t = g.tail_nodes()
    tv = np.asarray(f(t), dtype=float)
    horizon = float(np.abs(tv[-1]))
    if horizon > tail_bound:
        raise TailCheckError(
            f"|f(2^{g.tail_octaves})| = {horizon:.6g} exceeds the tail bound {tail_bound:g}"
        )
    tail_max = float(tv.max())
    prof = sample(f, g)
    return _profile_from_values("sharp", g, prof.x, prof.values, tail_max, tail_max)


@dataclass(frozen=True)
class SigmaEstimate:
    """Finite-data stand-in for the limsup invariant.

    ``sigma_hat`` is the max of the per-octave suprema s_m over the final
    ``tail_window`` octaves.  ``trend`` compares that window against the
    preceding one with a hysteresis factor: "increasing" (grows by more than
    the factor), "vanishing" (shrinks by more than the factor, or is zero),
    else "bounded".  The trend carries the qualitative verdict; sigma_hat
    alone cannot distinguish a large limsup from slow divergence.
    """

    variant: str
    octaves: np.ndarray
    s_m: np.ndarray
    tail_window: int
    sigma_hat: float
    trend: str
    hysteresis: float = 1.5

    def to_json(self) -> dict:
        return {
            "variant": self.variant,
            "octaves": [int(m) for m in self.octaves],
            "s_m": [float(v) for v in self.s_m],
            "tail_window": int(self.tail_window),
            "sigma_hat": float(self.sigma_hat),
            "trend": self.trend,
        }


def sigma_estimate(
    f: EFunction,
    g: GridSpec,
    variant: str = "star",
    tail_window: int = 8,
    hysteresis: float = 1.5,
    tail_bound: float = 0.01,
) -> SigmaEstimate:
    if variant == "star":
        prof = star_profile(f, g)
    elif variant == "sharp":
        prof = sharp_profile(f, g, tail_bound)
    else:
        raise ValueError("variant must be 'star' or 'sharp'")
    return sigma_from_profile(prof, tail_window, hysteresis)


def sigma_from_profile(
    prof: OscillationProfile, tail_window: int = 8, hysteresis: float = 1.5
) -> SigmaEstimate:
    s_m = prof.octave_sup
    W = int(tail_window)
    if W < 1:
        raise ValueError("tail_window must be >= 1")
    if len(s_m) < 2 * W:
        raise ValueError(
            f"need at least {2 * W} octaves for a tail window of {W}, have {len(s_m)}"
        )
    tail = float(np.max(s_m[-W:]))
    prev = float(np.max(s_m[-2 * W : -W]))
    tiny = 1e-12 * (1.0 + float(np.max(s_m)))
    if tail <= tiny:
        trend = "vanishing"
    elif tail >= hysteresis * max(prev, tiny):
        trend = "increasing"
    elif tail <= max(prev, tiny) / hysteresis:
        trend = "vanishing"
    else:
        trend = "bounded"
    return SigmaEstimate(prof.variant, prof.grid.octaves(), s_m, W, tail, trend, hysteresis)


@dataclass(frozen=True)
class EquivalenceWitness:
    """Data (h, k, lam) for the relation lam * f = f o h + k."""

    h: Homeo
    k: Callable | float | None = None
    lam: float = 1.0

    def shift(self) -> Callable:
        return as_shift(self.k)


@dataclass(frozen=True)
class WitnessReport:
    mode: str  # "equivalence" | "self_similarity"
    lam: float
    residual: float  # sup over nodes of |lhs - rhs| / max(1, |lhs|, |rhs|)
    worst_x: float
    h_monotone: bool
    tol: float
    passed: bool

    def to_json(self) -> dict:
        return {
            "mode": self.mode,
            "lambda": float(self.lam),
            "residual": float(self.residual),
            "worst_x": float(self.worst_x),
            "h_monotone": bool(self.h_monotone),
            "tol": float(self.tol),
            "pass": bool(self.passed),
        }


def check_witness(
    f: EFunction,
    f2: EFunction | None,
    w: EquivalenceWitness,
    g: GridSpec,
    tol: float = 1e-9,
) -> WitnessReport:
    """Verify an equivalence witness on the grid.

    With ``f2`` given the check is f2 = f o h + k (equivalence mode, lam
    must be 1); with ``f2`` None it is lam * f = f o h + k.  Residuals are
    relative to the operand scale: the functions involved span many decades,
    so an absolute residual would be meaningless near 0.  A non-monotone h
    is reported (h_monotone False fails the check), never silently ignored.
    """
    x = g.nodes()
    hx = np.asarray(w.h(x), dtype=float)
    h_monotone = bool(np.all(np.diff(hx) < 0) and np.all(hx > 0))
    kv = w.shift()(x)
    if f2 is not None:
        if w.lam != 1.0:
            raise ValueError("equivalence mode fixes lam = 1; use self-similarity mode")
        mode = "equivalence"
        lhs = np.asarray(f2(x), dtype=float)
    else:
        mode = "self_similarity"
        lhs = w.lam * np.asarray(f(x), dtype=float)
    if h_monotone:
        rhs = np.asarray(f(hx), dtype=float) + kv
        scale = np.maximum(1.0, np.maximum(np.abs(lhs), np.abs(rhs)))
        rel = np.abs(lhs - rhs) / scale
        i = int(np.argmax(rel))
        residual, worst = float(rel[i]), float(x[i])
    else:
        residual, worst = math.inf, float(x[0])
    return WitnessReport(mode, w.lam, residual, worst, h_monotone, tol, residual <= tol)


@dataclass(frozen=True)
class ItemResult:
    name: str
    passed: bool
    detail: dict

    def to_json(self) -> dict:
        return {"name": self.name, "pass": bool(self.passed), "detail": self.detail}


@dataclass(frozen=True)
class IdentitySuiteReport:
    items: tuple[ItemResult, ...]
    all_passed: bool

    def __getitem__(self, name: str) -> ItemResult:
        for item in self.items:
            if item.name == name:
                return item
        raise KeyError(name)

    def to_json(self) -> dict:
        return {"items": [i.to_json() for i in self.items], "all_pass": bool(self.all_passed)}


_EXACT_RTOL = 1e-12


def star_identity_suite(
    f: EFunction,
    lam: float,
    c: float,
    h: Homeo,
    k: Callable | float | None,
    g: GridSpec,
    zero_window_octaves: int = 1,
) -> IdentitySuiteReport:
    """Check the five identities the star functional obeys.

    scaling       star(lam f) = lam star(f), node-exact to roundoff
    shift         star(f + c) = star(f), node-exact
    pushforward   star(f o h) = star(f) o h below a threshold a in (0, 1],
                  a located by the smallest node at which the running max of
                  f o h first dominates the head max(f on [h(1), 1])
    perturbation  per-octave gap between star(f + k) and star(f) decays from
                  octave 5 to octave 30 (vacuously if identically zero)
    zeros         in every window of ``zero_window_octaves`` octaves the
                  minimum of star falls below 1e-6 * (1 + window supremum)

    Nothing raises: the report lists pass/fail with numbers per item.
    """
    if lam <= 0:
        raise ValueError("lam must be positive")
    base = star_profile(f, g)
    items = []

    # scaling
    scaled = star_profile(f.scaled(lam), g)
    scale = np.maximum(1.0, lam * np.maximum(np.abs(base.f_values), np.abs(base.running_max_values())))
    dev = float(np.max(np.abs(scaled.values - lam * base.values) / scale))
    items.append(ItemResult("scaling", dev <= _EXACT_RTOL, {"max_rel_dev": dev, "lam": lam}))

    # shift
    shifted = star_profile(f.shifted(c), g)
    scale = np.maximum(1.0, np.abs(base.f_values) + abs(c))
    dev = float(np.max(np.abs(shifted.values - base.values) / scale))
    items.append(ItemResult("shift", dev <= _EXACT_RTOL, {"max_rel_dev": dev, "c": c}))

    # pushforward
    items.append(_pushforward_item(f, h, g, base))

    # perturbation
    items.append(_perturbation_item(f, k, g, base))

    # zeros
    items.append(_zeros_item(base, zero_window_octaves))

    return IdentitySuiteReport(tuple(items), all(i.passed for i in items))


def _pushforward_item(f: EFunction, h: Homeo, g: GridSpec, base: OscillationProfile) -> ItemResult:
    x = g.nodes()
    h1 = float(h(1.0))
    if h1 > 1.0 + 1e-15:
        return ItemResult(
            "pushforward", False, {"note": f"h(1) = {h1:g} > 1; threshold search needs h(1) <= 1"}
        )
    w = np.asarray(f(np.asarray(h(x), dtype=float)), dtype=float)
    runmax_w = np.maximum.accumulate(w)
    # head: the part of [h(x), 1] that the composed samples never see
    head_nodes = base.f_values[x >= h1]
    head = float(max(head_nodes.max() if head_nodes.size else -math.inf, float(f(h1))))
    tol = _EXACT_RTOL * max(1.0, abs(head))
    crossed = runmax_w >= head - tol
    if not bool(crossed.any()):
        return ItemResult("pushforward", False, {"a": None, "head": head})
    i_star = int(np.argmax(crossed))
    a = float(x[i_star])
    # below a: max(f on [h(x), 1]) equals max(f on [h(x), h(1)]), so the
    # pushforward identity holds node for node; require at least two octaves
    octaves_below = (len(x) - 1 - i_star) / g.samples_per_octave
    passed = octaves_below >= 2.0
    return ItemResult(
        "pushforward",
        passed,
        {"a": a, "head": head, "octaves_below_a": float(octaves_below)},
    )


def _perturbation_item(
    f: EFunction, k, g: GridSpec, base: OscillationProfile
) -> ItemResult:
    pert = star_profile(f.plus(as_shift(k)), g)
    diff = np.abs(pert.values - base.values)
    d_m = np.array([diff[g.octave_slice(m)].max() for m in g.octaves()])
    m_early = min(5, g.octave_max - 1)
    m_late = min(30, g.octave_max - 1)
    d_early = float(d_m[m_early - g.octave_min])
    d_late = float(d_m[m_late - g.octave_min])
    # "shrinks toward 0": strict decay, or vacuously both already at roundoff
    passed = (d_late < d_early) or (d_late <= 1e-12)
    return ItemResult(
        "perturbation",
        passed,
        {"octave_early": m_early, "octave_late": m_late, "d_early": d_early, "d_late": d_late},
    )


def _zeros_item(base: OscillationProfile, window_octaves: int) -> ItemResult:
    g = base.grid
    W = max(1, int(window_octaves))
    sups, mins = base.octave_sup, base.octave_min
    violations = []
    for j in range(0, len(sups) - W + 1):
        wmin = float(np.min(mins[j : j + W]))
        wsup = float(np.max(sups[j : j + W]))
        if wmin > 1e-6 * (1.0 + wsup):
            violations.append(int(g.octave_min + j))
    return ItemResult(
        "zeros",
        not violations,
        {"window_octaves": W, "violating_octaves": violations},
    )
