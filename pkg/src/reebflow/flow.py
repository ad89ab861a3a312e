"""Flows on the punctured quarter plane with hyperbola orbits.

The standard flow moves (xi, eta) to (e^t xi, e^-t eta); its orbits are the
hyperbolas xi * eta = c together with the two boundary axes.  Any flow with
the same oriented orbits is determined, up to conjugacy, by the time it
takes orbits to travel between two transversal curves, and this module goes
both ways:

* ``build_flow`` realizes a prescribed transition-time function f as a flow
  by choosing a leafwise speed: in leaf coordinates (c = xi*eta, s = ln xi)
  the speed on leaf c is a constant r(c) on the segment s in [ln c, 0]
  (which joins the default transversals), ramping linearly to 1 one unit
  outside it.  The transit across the uniform segment is exactly
  (-ln c)/r(c), so choosing r(c) = (-ln c)/T(c) prescribes the transit T(c)
  with no integration error: every acceptance check on the round trip is
  closed form against closed form.  f is prescribed on (0, c0], blended to
  the standard profile -ln c over [c0, c1], and left standard above c1;
  the blend only perturbs f by a continuous function vanishing at 0, so the
  realized flow stays in the intended equivalence class.  If f is not
  positive on the grid below c1 it is lifted by a recorded constant.

* ``transition_time`` extracts the invariant back out of a flow: for the
  default transversals gamma1(x) = (x, 1) and gamma2(x) = (1, x) the leaf
  label equals the parameter, and the answer is the exact piecewise
  integral; for user transversals a crossing is bracketed and bisected in t.

``time_scale`` reparametrizes time, dividing every transition time by the
factor.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .efunc import EFunction, GridSpec
from .errors import DomainError

__all__ = [
    "QuarterPlanePoint",
    "Transversal",
    "DEFAULT_TRANSVERSAL",
    "Flow",
    "standard_flow",
    "standard_step",
    "build_flow",
    "flow_step",
    "transition_time",
    "time_scale",
    "extract_transition",
    "orbit_rows",
    "flow_to_json",
    "flow_from_json",
]

_S_CEILING = 700.0  # |ln xi| beyond this over/underflows e^s


@dataclass(frozen=True)
class QuarterPlanePoint:
    """A point of the closed quarter plane with the origin removed."""

    xi: float
    eta: float

    def __post_init__(self):
        if self.xi < 0 or self.eta < 0:
            raise ValueError(f"quarter-plane point needs xi, eta >= 0, got {self}")
        if self.xi == 0 and self.eta == 0:
            raise ValueError("the origin is not in the quarter plane")

    @property
    def interior(self) -> bool:
        return self.xi > 0 and self.eta > 0

    @property
    def leaf(self) -> float:
        """The orbit label c = xi * eta (constant along orbits)."""
        return self.xi * self.eta

    def leaf_coords(self) -> tuple[float, float]:
        """(c, s) with s = ln xi; interior points only."""
        if not self.interior:
            raise DomainError(f"leaf coordinates are defined for interior points, got {self}")
        return self.xi * self.eta, math.log(self.xi)


def _from_leaf(c: float, s: float) -> QuarterPlanePoint:
    if abs(s) > _S_CEILING:
        raise ValueError(f"leaf position s = {s:g} overflows the exponential range")
    xi = math.exp(s)
    return QuarterPlanePoint(xi, c / xi)


def standard_step(t: float, p: QuarterPlanePoint) -> QuarterPlanePoint:
    """(xi, eta) -> (e^t xi, e^-t eta); exact closed form, axes included."""
    if abs(t) > _S_CEILING:
        raise ValueError(f"|t| = {abs(t):g} exceeds the exponential range (700)")
    return QuarterPlanePoint(math.exp(t) * p.xi, math.exp(-t) * p.eta)


@dataclass(frozen=True)
class Transversal:
    """A pair of curves each meeting every interior orbit once.

    The defaults are gamma1(x) = (x, 1) (from the eta axis) and
    gamma2(x) = (1, x) (from the xi axis); they make the leaf label equal
    the curve parameter.  User curves are monotone node lists: gamma1 as
    (x, xi, eta) triples with x increasing and the leaf label xi*eta
    strictly monotone, gamma2 as (xi, eta) pairs with strictly monotone
    leaf label.  Interpolation is linear in log coordinates.
    """

    gamma1_nodes: tuple | None = None  # ((x, xi, eta), ...)
    gamma2_nodes: tuple | None = None  # ((xi, eta), ...)

    @property
    def is_default(self) -> bool:
        return self.gamma1_nodes is None and self.gamma2_nodes is None

    def __post_init__(self):
        if (self.gamma1_nodes is None) != (self.gamma2_nodes is None):
            raise ValueError("supply both curves or neither")
        if self.gamma1_nodes is not None:
            g1 = np.asarray(self.gamma1_nodes, dtype=float)
            g2 = np.asarray(self.gamma2_nodes, dtype=float)
            if g1.ndim != 2 or g1.shape[1] != 3 or len(g1) < 2:
                raise ValueError("gamma1 nodes must be (x, xi, eta) triples, at least two")
            if g2.ndim != 2 or g2.shape[1] != 2 or len(g2) < 2:
                raise ValueError("gamma2 nodes must be (xi, eta) pairs, at least two")
            if np.any(g1[:, 0] <= 0) or np.any(g1[:, 1:] <= 0) or np.any(g2 <= 0):
                raise ValueError("user transversal nodes must be interior (all coordinates > 0)")
            if np.any(np.diff(g1[:, 0]) <= 0):
                raise ValueError("gamma1 parameter column must be strictly increasing")
            c1 = g1[:, 1] * g1[:, 2]
            c2 = g2[:, 0] * g2[:, 1]
            for label, c in (("gamma1", c1), ("gamma2", c2)):
                d = np.diff(c)
                if not (np.all(d > 0) or np.all(d < 0)):
                    raise ValueError(
                        f"{label} must meet every leaf once: leaf label not strictly monotone"
                    )

    def point1(self, x: float) -> QuarterPlanePoint:
        if x <= 0:
            raise DomainError("transversal parameter must be positive")
        if self.is_default:
            return QuarterPlanePoint(float(x), 1.0)
        g1 = np.asarray(self.gamma1_nodes, dtype=float)
        lx = np.log(g1[:, 0])
        q = math.log(x)
        if q < lx[0] or q > lx[-1]:
            raise DomainError(f"parameter {x:g} outside gamma1 node range")
        xi = math.exp(float(np.interp(q, lx, np.log(g1[:, 1]))))
        eta = math.exp(float(np.interp(q, lx, np.log(g1[:, 2]))))
        return QuarterPlanePoint(xi, eta)

    def s_on_leaf2(self, c: float) -> float:
        """s-coordinate at which the second curve meets leaf c."""
        if self.is_default:
            return 0.0  # gamma2 lies on {xi = 1}
        g2 = np.asarray(self.gamma2_nodes, dtype=float)
        lc = np.log(g2[:, 0] * g2[:, 1])
        ls = np.log(g2[:, 0])
        if lc[0] > lc[-1]:
            lc, ls = lc[::-1], ls[::-1]
        q = math.log(c)
        if q < lc[0] or q > lc[-1]:
            raise DomainError(f"leaf c = {c:g} outside gamma2 node range")
        return float(np.interp(q, lc, ls))


DEFAULT_TRANSVERSAL = Transversal()


@dataclass(frozen=True)
class Flow:
    """A flow on the quarter plane given by a leafwise speed field.

    base "standard" has speed 1 everywhere.  base "realized" carries the
    transit target T(c) and prescription window; its speed on leaf c < c1 is
    r(c) = (-ln c)/T(c) on s in [ln c, 0], 1 outside [ln c - 1, 1], linear
    on the two ramps.  ``lam`` != 1 multiplies all speeds (time scaling).
    """

    base: str  # "standard" | "realized"
    lam: float = 1.0
    transit_target: Callable[[np.ndarray], np.ndarray] | None = None
    c0: float | None = None
    c1: float | None = None
    shift: float = 0.0
    source: EFunction | None = None
    grid: GridSpec | None = None
    source_spec: dict | None = None

    @property
    def kind(self) -> str:
        if self.lam != 1.0:
            return "time_scaled"
        return self.base

    def transit(self, c) -> np.ndarray:
        """Unscaled transit target over s in [ln c, 0] (equals -ln c if standard)."""
        arr = np.asarray(c, dtype=float)
        if self.base == "standard":
            out = -np.log(arr)
        else:
            out = np.asarray(self.transit_target(arr), dtype=float)
        return out

    def prescribed_speed(self, c: float) -> float:
        """The uniform speed r(c) on the segment [ln c, 0] (before time scaling)."""
        if self.base == "standard" or c >= self.c1:
            return 1.0
        T = float(self.transit(c))
        if T <= 0.0:
            raise RuntimeError(f"transit target not positive at leaf {c:g}; cannot occur")
        return -math.log(c) / T


def standard_flow() -> Flow:
    return Flow(base="standard")


def build_flow(
    f: EFunction,
    c0: float = 0.25,
    c1: float = 0.5,
    g: GridSpec | None = None,
    source_spec: dict | None = None,
) -> Flow:
    """Realize f as a flow whose default-transversal transition time is f + shift.

    The prescription window is (0, c0]; T blends to -ln c over [c0, c1] with
    a smoothstep in log c and is standard above c1.  If the minimum of f
    over the grid nodes in (0, c1] is <= 0, f is lifted so the minimum is
    0.1 and the constant is recorded in ``shift``.
    """
    if not (0 < c0 < c1 < 1):
        raise ValueError(f"need 0 < c0 < c1 < 1, got c0={c0:g}, c1={c1:g}")
    g = g or GridSpec()
    x = g.nodes()
    sel = x <= c1
    if not np.any(sel):
        raise ValueError("grid has no nodes below c1")
    vals = np.asarray(f(x[sel]), dtype=float)
    fmin = float(vals.min())
    shift = 0.0 if fmin > 0.0 else 0.1 - fmin

    def transit(c, _f=f, _shift=shift, _c0=c0, _c1=c1):
        c = np.asarray(c, dtype=float)
        out = np.empty_like(c)
        lo = c <= _c0
        hi = c >= _c1
        mid = ~(lo | hi)
        if np.any(lo):
            out[lo] = np.asarray(_f(c[lo]), dtype=float) + _shift
        if np.any(hi):
            out[hi] = -np.log(c[hi])
        if np.any(mid):
            cm = c[mid]
            w = (np.log(cm) - math.log(_c0)) / (math.log(_c1) - math.log(_c0))
            u = w * w * (3.0 - 2.0 * w)
            out[mid] = (1.0 - u) * (np.asarray(_f(cm), dtype=float) + _shift) + u * (-np.log(cm))
        return out

    flow = Flow(
        base="realized",
        transit_target=transit,
        c0=c0,
        c1=c1,
        shift=shift,
        source=f,
        grid=g,
        source_spec=source_spec,
    )
    check = np.asarray(flow.transit(x[sel]), dtype=float)
    if np.any(check <= 0.0):
        raise RuntimeError("transit target not positive after shift; cannot occur by construction")
    return flow


def time_scale(F: Flow, lam: float) -> Flow:
    """Flow with flow_step(F', t, p) = flow_step(F, lam * t, p)."""
    if lam <= 0:
        raise ValueError("time-scale factor must be positive")
    return replace(F, lam=F.lam * lam)


# -- leafwise motion ---------------------------------------------------------


def _segments(F: Flow, c: float) -> list[tuple[float, float, float, float]]:
    """Speed pieces on leaf c as (left, right, v_left, v_right), v linear."""
    r = F.prescribed_speed(c)
    if r == 1.0:
        return [(-math.inf, math.inf, 1.0, 1.0)]
    lc = math.log(c)
    return [
        (-math.inf, lc - 1.0, 1.0, 1.0),
        (lc - 1.0, lc, 1.0, r),
        (lc, 0.0, r, r),
        (0.0, 1.0, r, 1.0),
        (1.0, math.inf, 1.0, 1.0),
    ]


def _advance_s(F: Flow, c: float, s: float, t: float) -> float:
    """Move time t along leaf c from position s; exact per piece.

    Constant pieces advance linearly; linear-ramp pieces integrate
    ds/dtau = v(s) to an exponential of an affine function (expm1/log1p
    forms keep shallow ramps stable).  Time scaling multiplies speed.
    """
    remaining = t * F.lam
    if remaining == 0.0:
        return s
    segs = _segments(F, c)
    forward = remaining > 0
    for _ in range(len(segs) + 2):
        idx = _segment_index(segs, s, forward)
        left, right, v_l, v_r = segs[idx]
        width = right - left
        slope = 0.0 if not math.isfinite(width) else (v_r - v_l) / width
        v_here = v_l if slope == 0.0 else v_l + slope * (s - left)
        edge = right if forward else left
        if math.isfinite(edge):
            if slope == 0.0:
                t_edge = (edge - s) / v_here
            else:
                t_edge = math.log1p(slope * (edge - s) / v_here) / slope
        else:
            t_edge = math.inf if forward else -math.inf
        if abs(remaining) <= abs(t_edge):
            if slope == 0.0:
                s_new = s + v_here * remaining
            else:
                s_new = s + v_here * math.expm1(slope * remaining) / slope
            if abs(s_new) > _S_CEILING:
                raise ValueError(f"time overflow: |s| = {abs(s_new):g} beyond range")
            return s_new
        s = edge
        remaining -= t_edge
        if abs(s) > _S_CEILING:
            raise ValueError(f"time overflow: |s| = {abs(s):g} beyond range")
    raise RuntimeError("segment walk failed to terminate")  # pragma: no cover


def _segment_index(segs, s: float, forward: bool) -> int:
    for i, (left, right, _, _) in enumerate(segs):
        if left < s < right:
            return i
        if s == left:  # on a breakpoint: pick the segment in the motion direction
            return i if forward else max(i - 1, 0)
        if s == right:
            return min(i + 1, len(segs) - 1) if forward else i
    raise RuntimeError(f"position s = {s:g} not located")  # pragma: no cover


def flow_step(F: Flow, t: float, p: QuarterPlanePoint) -> QuarterPlanePoint:
    """Advance p by time t.  The leaf label xi * eta is preserved exactly."""
    if F.base == "standard":
        return standard_step(t * F.lam, p)
    if not p.interior:
        raise DomainError("realized flows are defined on interior points only")
    c, s = p.leaf_coords()
    return _from_leaf(c, _advance_s(F, c, s, t))


def transition_time(
    F: Flow, tv: Transversal = DEFAULT_TRANSVERSAL, x: float = 1.0, time_ceiling: float = 1e7
) -> float:
    """Time for the flow to carry gamma1(x) onto the second curve.

    Default transversals: the start sits on leaf c = x at s = ln c, the
    target at s = 0, and the uniform-speed segment covers exactly that
    range, so the answer is the transit target in closed form (divided by
    the time-scale factor).  User transversals: the crossing indicator
    s(t) - s_target is monotone, so the crossing is bracketed by doubling
    and bisected to 1e-10.
    """
    if x <= 0:
        raise DomainError("transition parameter must be positive")
    if tv.is_default:
        c = float(x) * 1.0
        if F.base == "standard":
            return -math.log(c) / F.lam
        return float(F.transit(c)) / F.lam
    p1 = tv.point1(x)
    if not p1.interior:
        raise DomainError("gamma1 point must be interior")
    c, s1 = p1.leaf_coords()
    s2 = tv.s_on_leaf2(c)
    if s1 == s2:
        return 0.0
    direction = 1.0 if s2 > s1 else -1.0
    t_hi = direction * max(abs(s2 - s1), 1e-9)
    while (_advance_s(F, c, s1, t_hi) - s2) * direction < 0:
        t_hi *= 2.0
        if abs(t_hi) > time_ceiling:
            raise ValueError(f"orbit does not reach the second curve within |t| <= {time_ceiling:g}")
    t_lo = 0.0
    for _ in range(200):
        mid = 0.5 * (t_lo + t_hi)
        if (_advance_s(F, c, s1, mid) - s2) * direction < 0:
            t_lo = mid
        else:
            t_hi = mid
        if abs(t_hi - t_lo) <= 1e-10 * max(1.0, abs(t_hi)):
            break
    return 0.5 * (t_lo + t_hi)


def extract_transition(
    F: Flow, g: GridSpec | None = None, tv: Transversal = DEFAULT_TRANSVERSAL
) -> EFunction:
    """The transition-time function of a flow as an evaluable EFunction."""
    if tv.is_default:
        if F.base == "standard":
            fn = lambda x, _l=F.lam: -np.log(np.asarray(x, dtype=float)) / _l  # noqa: E731
        else:
            fn = lambda x, _F=F: np.asarray(_F.transit(x), dtype=float) / _F.lam  # noqa: E731
    else:

        def fn(x, _F=F, _tv=tv):
            arr = np.asarray(x, dtype=float)
            out = np.array([transition_time(_F, _tv, float(v)) for v in arr.ravel()])
            return out.reshape(arr.shape)

    label = f"transition({F.kind})"
    return EFunction("expression", fn, "E", label)


def orbit_rows(F: Flow, p0: QuarterPlanePoint, times: Sequence[float]) -> list[tuple[float, float, float]]:
    """(t, xi, eta) samples of the orbit through p0."""
    rows = []
    for t in times:
        p = flow_step(F, float(t), p0)
        rows.append((float(t), p.xi, p.eta))
    return rows


def orbit_to_csv(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "xi", "eta"])
        for t, xi, eta in rows:
            w.writerow([repr(t), repr(xi), repr(eta)])


def flow_to_json(F: Flow) -> dict:
    obj: dict = {"kind": F.kind, "lambda": float(F.lam)}
    if F.base == "realized":
        obj.update(
            {
                "c0": float(F.c0),
                "c1": float(F.c1),
                "shift": float(F.shift),
                "f": F.source_spec or {"description": F.source.description if F.source else None},
            }
        )
    return obj


def flow_from_json(obj: dict, g: GridSpec | None = None, loader=None) -> Flow:
    """Rebuild a flow from its JSON config.

    ``loader`` maps the "f" descriptor to an EFunction; the default handles
    {"builtin": name, "params": [...]} and {"csv": path}.  The recorded
    shift is recomputed from the data, not trusted.
    """
    from .efunc import builtin as _builtin, from_csv as _from_csv

    kind = obj.get("kind", "standard")
    lam = float(obj.get("lambda", 1.0))
    if kind == "standard" or (kind == "time_scaled" and "f" not in obj):
        F = standard_flow()
    else:
        spec = obj.get("f")
        if loader is not None:
            f = loader(spec)
        elif isinstance(spec, dict) and "builtin" in spec:
            f = _builtin(spec["builtin"], spec.get("params", ()))
        elif isinstance(spec, dict) and "csv" in spec:
            f = _from_csv(spec["csv"])
        else:
            raise ValueError(f"cannot load flow source {spec!r}")
        F = build_flow(
            f,
            c0=float(obj.get("c0", 0.25)),
            c1=float(obj.get("c1", 0.5)),
            g=g,
            source_spec=spec if isinstance(spec, dict) else None,
        )
    if lam != 1.0:
        F = time_scale(F, lam)
    return F
