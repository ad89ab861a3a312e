"""Koenigs-style linearization: from lam * f = f o h + k to an exact solution.

Given f in E, an increasing homeomorphism h attracted to 0, a continuous
shift k with finite k(0), and lam > 1 satisfying lam * f = f o h + k, the
iteration f_n(x) = lam^(-n) f(h^n(x)) converges to a function f_inf with

    lam * f_inf = f_inf o h        and        f_inf - f continuous at 0.

The limit is evaluated through the telescoping series

    f_inf(x) = f(x) - sum_{n >= 0} lam^(-n-1) k(h^n(x)),

which is the same iteration written stably: it never evaluates f along the
collapsing orbit h^n(x), where f blows up while the prefactor vanishes.

Two basin shapes are handled: 0 attracts the whole half line, or only an
interval (0, b) below a fixed point b, in which case f_inf is extended by 0
on [b, oo) (the value at b itself is forced to 0 by continuity).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .efunc import EFunction, GridSpec
from .errors import ConvergenceFailure, ToleranceFailure
from .homeo import Homeo, basin_of_zero, iterate
from .oscillation import EquivalenceWitness, as_shift, check_witness

__all__ = [
    "LinearizeConfig",
    "LinearizeResult",
    "ThresholdReport",
    "koenigs_limit",
    "threshold_inequality",
]

# orbit depth below which doubles quantize too coarsely for derived shifts
_DEPTH_FLOOR = 1e-300


@dataclass(frozen=True)
class LinearizeConfig:
    """Iteration parameters; lam > 1 is the contraction hypothesis."""

    lam: float
    grid: GridSpec = field(default_factory=GridSpec)
    max_iters: int = 64
    tol: float = 1e-10  # convergence and functional-equation gate
    witness_tol: float = 1e-9  # precondition gate for lam*f = f o h + k
    probe_margin: float = 0.99  # bounded case: probes stay below b * margin

    def __post_init__(self):
        if not self.lam > 1.0:
            raise ValueError("linearization requires lam > 1")
        if self.tol <= 0 or self.witness_tol <= 0:
            raise ValueError("tolerances must be positive")
        if not (0 < self.probe_margin < 1):
            raise ValueError("probe_margin must lie in (0, 1)")


@dataclass(frozen=True)
class LinearizeResult:
    """Outcome of the iteration.

    ``shift`` is the constant added to f so the shift function vanishes at 0
    (equivalence-preserving; recorded, never silent).  ``residual`` is the
    relative sup of |lam * f_inf - f_inf o h| over the probes.  ``f_inf`` is
    evaluable anywhere on (0, oo); its series is truncated at ``iterations``
    sweeps, so accuracy is certified on the probes and can degrade in the
    sliver between the largest probe and b.
    """

    f_inf: EFunction
    case: str  # "global" | "bounded"
    b: float | None
    iterations: int
    residual: float
    shift: float
    k0: float
    last_change: float
    probes: np.ndarray
    tail_decay_dev: float | None  # global case: relative dev of the preimage decay law
    telescoping_bound: Callable[[np.ndarray], np.ndarray]

    def to_json(self) -> dict:
        return {
            "case": self.case,
            "b": None if self.b is None else float(self.b),
            "iterations": int(self.iterations),
            "residual": float(self.residual),
            "shift": float(self.shift),
            "k0": float(self.k0),
            "last_change": float(self.last_change),
            "tail_decay_dev": None if self.tail_decay_dev is None else float(self.tail_decay_dev),
        }


def koenigs_limit(
    f: EFunction,
    h: Homeo,
    k: Callable | float | None,
    cfg: LinearizeConfig,
) -> LinearizeResult:
    """Compute f_inf for the relation lam * f = f o h + k.

    ``k`` may be None, meaning it is derived pointwise as lam*f - f o h; the
    derived shift must still extend continuously to 0, which is checked on
    descending probes.  Raises ValueError when the witness relation fails,
    when 0 repels, or when k does not settle at 0; ConvergenceFailure when
    the change per sweep never drops below tol; ToleranceFailure when the
    final functional-equation residual misses tol.
    """
    lam = cfg.lam
    derived = k is None
    if derived:
        # lam*f - f o h, defined as 0 once the orbit sinks below the floor:
        # near the subnormal range the quantization of h(x) corrupts f(h(x))
        # by order-one amounts (ln of a subnormal moves in steps), and the
        # true shift has settled to its limit long before such depths
        def k_fn(x):
            x = np.asarray(x, dtype=float)
            out = np.zeros_like(x)
            m = x > _DEPTH_FLOOR
            if np.any(m):
                xm = x[m]
                hx = np.asarray(h(xm), dtype=float)
                sub = np.zeros_like(xm)
                mh = hx > _DEPTH_FLOOR
                if np.any(mh):
                    sub[mh] = lam * np.asarray(f(xm[mh]), dtype=float) - np.asarray(
                        f(hx[mh]), dtype=float
                    )
                out[m] = sub
            return out

    else:
        k_fn = as_shift(k)

    wit = check_witness(f, None, EquivalenceWitness(h, k_fn, lam), cfg.grid, cfg.witness_tol)
    if not wit.passed:
        raise ValueError(
            f"witness relation lam*f = f o h + k fails: residual {wit.residual:.3g} "
            f"(tol {cfg.witness_tol:g}) at x = {wit.worst_x:.3g}"
            + ("" if wit.h_monotone else "; h is not increasing on the grid")
        )

    k0 = _shift_value_at_zero(k_fn, f, h, lam, cfg.grid, derived)
    shift = -k0 / (lam - 1.0)

    if derived:
        # normalized shift, again 0 below the floor: the un-normalized value
        # there is the settled k0, not the guard's 0
        def k_s(x, _k0=k0):
            x = np.asarray(x, dtype=float)
            out = np.zeros_like(x)
            m = x > _DEPTH_FLOOR
            if np.any(m):
                xm = x[m]
                hx = np.asarray(h(xm), dtype=float)
                sub = np.zeros_like(xm)
                mh = hx > _DEPTH_FLOOR
                if np.any(mh):
                    sub[mh] = (
                        lam * np.asarray(f(xm[mh]), dtype=float)
                        - np.asarray(f(hx[mh]), dtype=float)
                        - _k0
                    )
                out[m] = sub
            return out

    else:

        def k_s(x, _k=k_fn, _k0=k0):
            return np.asarray(_k(x), dtype=float) - _k0

    basin = basin_of_zero(h, cfg.grid)
    if basin.case == "zero_repelling":
        raise ValueError("0 repels under h on the probe grid; no linearization basin")
    b = basin.b if basin.case == "bounded" else None

    nodes = cfg.grid.nodes()
    if b is not None:
        probes = nodes[nodes <= b * cfg.probe_margin]
        if probes.size == 0:
            raise ValueError(f"no probe nodes below b * margin = {b * cfg.probe_margin:g}")
    else:
        probes = nodes

    # telescoping accumulation; stop when the sweep-change sup falls below tol.
    # The change |f_{n+1} - f_n| at x is lam^(-n-1) |k(h^n x)| and is measured
    # relative to 1 + |f(x)|: the profiles span many decades, so an absolute
    # sup norm over the probes would be dominated by the blow-up near 0.
    orbit = probes.copy()
    fscale = 1.0 + np.abs(np.asarray(f(probes), dtype=float))
    hull_max = 0.0
    iterations = 0
    last_change = math.inf
    converged = False
    for n in range(cfg.max_iters):
        kv = k_s(orbit)
        hull_max = max(hull_max, float(np.max(np.abs(kv))))
        last_change = float(lam ** (-n - 1) * np.max(np.abs(kv) / fscale))
        iterations = n + 1
        if last_change < cfg.tol:
            converged = True
            break
        orbit = np.asarray(h(orbit), dtype=float)
    if not converged:
        raise ConvergenceFailure(
            f"no convergence within {cfg.max_iters} sweeps; last sup-change {last_change:.3g}"
        )

    n_terms = iterations

    def series(x):
        acc = np.zeros_like(x)
        cur = np.array(x, dtype=float)
        for n in range(n_terms):
            acc += lam ** (-n - 1) * k_s(cur)
            cur = np.asarray(h(cur), dtype=float)
        return acc

    def f_inf_fn(x, _b=b, _s=shift):
        x = np.asarray(x, dtype=float)
        if _b is None:
            return np.asarray(f(x), dtype=float) + _s - series(x)
        out = np.zeros_like(x)
        mask = x < _b
        if np.any(mask):
            xm = x[mask]
            out[mask] = np.asarray(f(xm), dtype=float) + _s - series(xm)
        return out

    f_inf = EFunction(
        "expression",
        f_inf_fn,
        "E0",
        f"koenigs_limit({f.description}; h={h.name or 'h'}, lam={lam:g})",
    )

    lhs = lam * f_inf(probes)
    rhs = f_inf(np.asarray(h(probes), dtype=float))
    scale = np.maximum(1.0, np.maximum(np.abs(lhs), np.abs(rhs)))
    residual = float(np.max(np.abs(lhs - rhs) / scale))
    if residual > cfg.tol:
        raise ToleranceFailure(
            f"functional-equation residual {residual:.3g} exceeds tol {cfg.tol:g}"
        )

    tail_dev = None
    if b is None:
        tail_dev = _tail_decay_deviation(f_inf, h, lam)

    slack = lam ** (-n_terms) * hull_max

    def telescoping_bound(x, _slack=slack):
        x = np.asarray(x, dtype=float)
        acc = np.zeros_like(x)
        cur = np.array(x, dtype=float)
        for n in range(n_terms):
            acc += lam ** (-n - 1) * np.abs(k_s(cur))
            cur = np.asarray(h(cur), dtype=float)
        return acc + _slack

    return LinearizeResult(
        f_inf=f_inf,
        case=basin.case,
        b=b,
        iterations=iterations,
        residual=residual,
        shift=shift,
        k0=k0,
        last_change=last_change,
        probes=probes,
        tail_decay_dev=tail_dev,
        telescoping_bound=telescoping_bound,
    )


def _shift_value_at_zero(k_fn, f, h, lam: float, g: GridSpec, derived: bool) -> float:
    """k(0) for the normalization k(0) = 0.

    An explicit shift is simply evaluated at 0.  A derived shift cannot be
    (f is undefined there), so its limit is estimated on descending probes
    2^-m.  The settling test is relative to the operand scale
    max(1, lam|f|, |f o h|): for an exactly self-similar f the derived shift
    is pure rounding noise proportional to f, which is a vanishing shift,
    while a genuinely divergent shift (say lam*std_log vs std_log o halve)
    keeps a constant relative footprint and is rejected.
    """
    if not derived:
        v = float(np.asarray(k_fn(np.asarray(0.0)), dtype=float))
        if not math.isfinite(v):
            raise ValueError("shift function is not finite at 0")
        return v
    m = np.arange(max(1, g.octave_max - 8), g.octave_max + 1, dtype=float)
    x = np.exp2(-m)
    vals = np.asarray(k_fn(x), dtype=float)
    scale = np.maximum(
        1.0,
        np.maximum(
            lam * np.abs(np.asarray(f(x), dtype=float)),
            np.abs(np.asarray(f(np.asarray(h(x), dtype=float)), dtype=float)),
        ),
    )
    rel = vals / scale
    deltas = np.abs(np.diff(rel))
    if not np.all(np.isfinite(vals)) or float(np.max(deltas[-4:])) > 1e-6:
        raise ValueError(
            "derived shift lam*f - f o h does not settle toward 0 "
            f"(relative tail increments {deltas[-4:].tolist()}); the relation "
            "does not extend continuously to 0"
        )
    k0 = float(vals[-1])
    if abs(k0) <= 1e-9 * float(scale[-1]):
        return 0.0  # below the rounding floor of f itself
    return k0


def _tail_decay_deviation(f_inf: EFunction, h: Homeo, lam: float, n_max: int = 10) -> float:
    """Max relative deviation of f_inf(h^-n(x0)) from lam^-n f_inf(x0)."""
    x0 = 1.0
    base = float(f_inf(x0))
    worst = 0.0
    cur = x0
    for n in range(1, n_max + 1):
        cur = h.inverse(cur)
        want = lam ** (-n) * base
        got = float(f_inf(cur))
        worst = max(worst, abs(got - want) / max(1e-300, abs(want)))
    return worst


@dataclass(frozen=True)
class ThresholdReport:
    """Where the contraction inequality f(h(a)) > (lam+1)/2 * f(a) kicks in.

    ``a_prime`` is the largest grid node below which f + shift exceeds
    2/(lam-1) * max|k| on [0, 1]; below it the inequality must hold at every
    node.  ``margin`` is the smallest slack observed.
    """

    a_prime: float | None
    passed: bool
    margin: float
    max_abs_k: float


def threshold_inequality(
    f: EFunction,
    h: Homeo,
    k: Callable | float | None,
    lam: float,
    g: GridSpec,
    shift: float = 0.0,
    k0: float = 0.0,
) -> ThresholdReport:
    if not lam > 1.0:
        raise ValueError("threshold inequality requires lam > 1")
    k_fn = as_shift(k)
    x = g.nodes()
    sel = x <= 1.0
    xs = x[sel]
    kv = np.abs(np.asarray(k_fn(xs), dtype=float) - k0)
    max_abs_k = max(float(np.max(kv)), abs(float(np.asarray(k_fn(np.asarray(0.0))) - k0)))
    thresh = 2.0 / (lam - 1.0) * max_abs_k
    fv = np.asarray(f(xs), dtype=float) + shift
    ok = fv > thresh
    if not bool(ok[-1]):
        return ThresholdReport(None, False, -math.inf, max_abs_k)
    bad = np.where(~ok)[0]
    i0 = int(bad.max()) + 1 if bad.size else 0
    a_prime = float(xs[i0])
    below = xs[i0 + 1 :] if i0 + 1 < len(xs) else xs[len(xs) - 1 :]
    fh = np.asarray(f(np.asarray(h(below), dtype=float)), dtype=float) + shift
    fb = np.asarray(f(below), dtype=float) + shift
    margin = float(np.min(fh - 0.5 * (lam + 1.0) * fb))
    return ThresholdReport(a_prime, margin > 0.0, margin, max_abs_k)


def direct_iterate(f: EFunction, h: Homeo, lam: float, n: int, x: float) -> float:
    """The textbook iterate lam^-n f(h^n(x)), for cross-checking the series.

    Numerically fragile by design (f blows up along the orbit); callers must
    keep n small enough that h^n(x) stays well above the underflow floor.
    """
    cur = iterate(h, n, x)
    if cur <= 0.0 or cur < 1e-280:
        raise ValueError(f"orbit point h^{n}({x:g}) underflowed; reduce n")
    return lam ** (-n) * float(f(cur))
