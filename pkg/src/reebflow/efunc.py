"""Evaluable functions on (0, oo) and the per-octave sample grid.

The central object is :class:`EFunction`: a real function on the positive
half line that diverges to +oo at 0 (class ``E``), optionally also tending
to 0 at +oo (class ``E0``).  Functions come from a builtin gallery, from a
closed-form expression string, or from CSV samples.  Everything downstream
(oscillation profiles, flow realization, classification) consumes these
through a geometric grid: nodes x_i = 2^(-i/K), so one octave corresponds
to K consecutive nodes and behavior as x -> 0 is indexed by octave number.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError

__all__ = [
    "GridSpec",
    "EFunction",
    "GridProfile",
    "builtin",
    "from_expression",
    "from_csv",
    "sample",
    "diagnose_class",
    "BUILTIN_NAMES",
]

_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class GridSpec:
    """Geometric sampling grid: nodes x_i = 2^(-i/K), i = K*m_min .. K*m_max.

    ``samples_per_octave`` (K) controls resolution, ``octave_min``/``octave_max``
    the range of scales, and ``tail_octaves`` the horizon 2^tail_octaves used
    when a function must be probed toward +oo (class E0 checks).
    """

    samples_per_octave: int = 512
    octave_min: int = 0
    octave_max: int = 40
    tail_octaves: int = 20

    def __post_init__(self):
        if self.samples_per_octave < 1:
            raise ValueError("samples_per_octave must be a positive integer")
        if not (0 <= self.octave_min < self.octave_max):
            raise ValueError("need 0 <= octave_min < octave_max")
        if self.octave_max > 60:
            # 2^-60 is still an exact double; beyond that the guarantee lapses.
            raise ValueError("octave_max above 60 is not supported")
        if self.tail_octaves < 1:
            raise ValueError("tail_octaves must be positive")

    @property
    def octave_count(self) -> int:
        return self.octave_max - self.octave_min

    @property
    def node_count(self) -> int:
        return self.samples_per_octave * self.octave_count + 1

    def nodes(self) -> np.ndarray:
        """Strictly decreasing nodes, exactly representable.

        Built as ldexp(2^(-r/K), -m) with i = m*K + r, so x_{i+K} == x_i / 2
        holds bitwise for every i, and nodes at whole octaves are exact
        powers of two.
        """
        K = self.samples_per_octave
        i = np.arange(K * self.octave_min, K * self.octave_max + 1)
        frac = np.exp2(-(i % K) / K)
        return np.ldexp(frac, -(i // K))

    def tail_nodes(self) -> np.ndarray:
        """Ascending probe nodes 2^(j/K) on [1, 2^tail_octaves]."""
        K = self.samples_per_octave
        j = np.arange(0, K * self.tail_octaves + 1)
        return np.exp2(j / K)

    def octave_slice(self, m: int) -> slice:
        """Indices of the nodes in the window [2^-(m+1), 2^-m] (both ends in)."""
        if not (self.octave_min <= m < self.octave_max):
            raise ValueError(f"octave {m} outside [{self.octave_min}, {self.octave_max})")
        K = self.samples_per_octave
        lo = (m - self.octave_min) * K
        return slice(lo, lo + K + 1)

    def octaves(self) -> np.ndarray:
        return np.arange(self.octave_min, self.octave_max)

    def to_json(self) -> dict:
        return {
            "K": self.samples_per_octave,
            "m_min": self.octave_min,
            "m_max": self.octave_max,
            "tail_octaves": self.tail_octaves,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "GridSpec":
        return cls(
            samples_per_octave=int(obj.get("K", 512)),
            octave_min=int(obj.get("m_min", 0)),
            octave_max=int(obj.get("m_max", 40)),
            tail_octaves=int(obj.get("tail_octaves", 20)),
        )


@dataclass(frozen=True)
class EFunction:
    """A real function on (0, oo), immutable and vectorized.

    ``claimed_class`` is "E" (diverges at 0) or "E0" (also vanishes at +oo);
    the claim is diagnosed, never silently trusted, by :func:`diagnose_class`.
    ``domain`` restricts evaluation for sampled data.
    """

    kind: str  # "builtin" | "expression" | "sampled"
    fn: Callable[[np.ndarray], np.ndarray]
    claimed_class: str = "E"
    description: str = ""
    domain: tuple[float, float] = (0.0, math.inf)  # open at 0 unless sampled

    def __post_init__(self):
        if self.kind not in ("builtin", "expression", "sampled"):
            raise ValueError(f"unknown EFunction kind {self.kind!r}")
        if self.claimed_class not in ("E", "E0"):
            raise ValueError(f"claimed_class must be 'E' or 'E0', got {self.claimed_class!r}")

    def __call__(self, x):
        arr = np.asarray(x, dtype=float)
        if arr.size and float(np.min(arr)) <= 0.0:
            raise DomainError(f"{self.description or 'function'} is defined on x > 0")
        lo, hi = self.domain
        if arr.size and (float(np.min(arr)) < lo or float(np.max(arr)) > hi):
            raise DomainError(
                f"evaluation outside domain [{lo:g}, {hi:g}] for {self.description or self.kind}"
            )
        out = self.fn(arr)
        if np.isscalar(x) or np.ndim(x) == 0:
            return float(out)
        return np.asarray(out, dtype=float)

    # -- algebra used throughout the oscillation/linearization layers --

    def scaled(self, lam: float) -> "EFunction":
        """lam * f for lam > 0; stays in the claimed class."""
        if lam <= 0:
            raise ValueError("scale factor must be positive")
        return replace(
            self,
            kind="expression",
            fn=lambda x, _f=self.fn, _l=lam: _l * _f(x),
            description=f"{lam:g}*({self.description})",
        )

    def shifted(self, c: float) -> "EFunction":
        """f + c; divergence at 0 survives, decay at +oo does not."""
        cls = self.claimed_class if c == 0.0 else "E"
        return replace(
            self,
            kind="expression",
            fn=lambda x, _f=self.fn, _c=c: _f(x) + _c,
            claimed_class=cls,
            description=f"({self.description})+{c:g}",
        )

    def composed(self, h: Callable[[np.ndarray], np.ndarray], label: str = "h") -> "EFunction":
        """f o h for an increasing homeomorphism h of [0, oo); class preserved."""
        return replace(
            self,
            kind="expression",
            fn=lambda x, _f=self.fn, _h=h: _f(np.asarray(_h(x), dtype=float)),
            domain=(0.0, math.inf) if self.domain == (0.0, math.inf) else self.domain,
            description=f"({self.description})o{label}",
        )

    def plus(self, k: Callable[[np.ndarray], np.ndarray], label: str = "k") -> "EFunction":
        """f + k for a continuous shift k; decay at +oo is no longer claimed."""
        return replace(
            self,
            kind="expression",
            fn=lambda x, _f=self.fn, _k=k: _f(x) + np.asarray(_k(x), dtype=float),
            claimed_class="E",
            description=f"({self.description})+{label}",
        )


BUILTIN_NAMES = ("std_log", "doubling_osc", "bounded_osc", "koenigs_demo")


def builtin(name: str, params: Sequence[float] = ()) -> EFunction:
    """Gallery function by identifier.

    std_log          -ln x                       monotone; the standard class
    doubling_osc     2^(sin(2 pi log2 x)) / x    satisfies f(x/2) = 2 f(x),
                                                 oscillation unbounded at 0
    bounded_osc      ln(1/x) + A sin(ln(1/x))    bounded oscillation, A >= 0
                                                 (default A = 2)
    koenigs_demo     -ln x + x/(1+x)             monotone perturbation of
                                                 std_log; linearization demo
    """
    params = tuple(float(p) for p in params)
    if name == "std_log":
        return EFunction("builtin", lambda x: -np.log(x), "E", "std_log")
    if name == "doubling_osc":
        return EFunction(
            "builtin",
            lambda x: np.exp2(np.sin(_TWO_PI * np.log2(x))) / x,
            "E0",  # f <= 2/x on [1, oo)
            "doubling_osc",
        )
    if name == "bounded_osc":
        amp = params[0] if params else 2.0
        if amp < 0:
            raise ValueError("bounded_osc amplitude must be >= 0")
        return EFunction(
            "builtin",
            lambda x, _a=amp: -np.log(x) + _a * np.sin(-np.log(x)),
            "E",
            f"bounded_osc({amp:g})",
        )
    if name == "koenigs_demo":
        return EFunction(
            "builtin",
            lambda x: -np.log(x) + x / (1.0 + x),
            "E",
            "koenigs_demo",
        )
    raise ValueError(f"unknown builtin {name!r}; choose from {BUILTIN_NAMES}")


_EXPR_NS = {
    "log": np.log,
    "log2": np.log2,
    "exp": np.exp,
    "exp2": np.exp2,
    "sin": np.sin,
    "cos": np.cos,
    "sqrt": np.sqrt,
    "abs": np.abs,
    "maximum": np.maximum,
    "minimum": np.minimum,
    "where": np.where,
    "pi": math.pi,
    "e": math.e,
}


def from_expression(expr: str, claimed_class: str = "E", description: str = "") -> EFunction:
    """Closed-form function of ``x`` using a small numpy namespace.

    Intended for quick experiments and tests; the namespace is restricted to
    elementary functions, not a sandbox against hostile input.
    """
    code = compile(expr, "<efunction>", "eval")

    def fn(x, _code=code):
        ns = dict(_EXPR_NS)
        ns["x"] = x
        out = eval(_code, {"__builtins__": {}}, ns)  # noqa: S307
        return np.broadcast_to(np.asarray(out, dtype=float), np.shape(x)).copy()

    return EFunction("expression", fn, claimed_class, description or expr)


def from_csv(path: str | Path) -> EFunction:
    """Sampled function from a CSV file with header ``x,f``.

    Rows must be strictly decreasing in x with all x > 0.  Evaluation
    interpolates linearly in (log x, f), matching the multiplicative
    structure of the grid, and raises outside the sampled range.
    """
    path = Path(path)
    text = path.read_text()
    return _parse_csv(text, str(path))


def _parse_csv(text: str, label: str) -> EFunction:
    reader = csv.reader(io.StringIO(text))
    rows = [row for row in reader if row and any(cell.strip() for cell in row)]
    if not rows:
        raise ValueError(f"{label}: empty CSV")
    header = [cell.strip().lower() for cell in rows[0]]
    if header[:2] != ["x", "f"]:
        raise ValueError(f"{label}: expected header 'x,f', got {rows[0]!r}")
    xs, fs = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) < 2:
            raise ValueError(f"{label}:{lineno}: need two columns")
        try:
            xv, fv = float(row[0]), float(row[1])
        except ValueError as exc:
            raise ValueError(f"{label}:{lineno}: malformed row {row!r}") from exc
        if xv <= 0:
            raise ValueError(f"{label}:{lineno}: x must be positive, got {xv!r}")
        if xs and xv >= xs[-1]:
            raise ValueError(f"{label}:{lineno}: x column must be strictly decreasing")
        xs.append(xv)
        fs.append(fv)
    if len(xs) < 2:
        raise ValueError(f"{label}: need at least two samples")
    # ascending in log2 x for interpolation
    lx = np.log2(np.asarray(xs[::-1]))
    fv = np.asarray(fs[::-1])
    x_lo, x_hi = xs[-1], xs[0]

    def fn(x, _lx=lx, _fv=fv):
        return np.interp(np.log2(x), _lx, _fv)

    return EFunction(
        "sampled",
        fn,
        "E",
        f"csv:{label}",
        domain=(x_lo, x_hi),
    )


@dataclass(frozen=True)
class GridProfile:
    """Values of a function on a grid, with the running maximum toward 0.

    ``running_max[i]`` is the maximum of the sampled values over [x_i, x_0],
    the computational backbone of the oscillation functionals.
    """

    grid: GridSpec
    x: np.ndarray
    values: np.ndarray
    running_max: np.ndarray = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if self.x.shape != self.values.shape:
            raise ValueError("x and values must have the same shape")
        object.__setattr__(self, "running_max", np.maximum.accumulate(self.values))

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "f"])
            for xv, fv in zip(self.x, self.values):
                w.writerow([repr(float(xv)), repr(float(fv))])

    def to_json(self) -> dict:
        return {
            "grid": self.grid.to_json(),
            "x": [float(v) for v in self.x],
            "f": [float(v) for v in self.values],
        }


def sample(f: EFunction, g: GridSpec) -> GridProfile:
    """Evaluate ``f`` at every grid node.  Deterministic: same inputs, same bits."""
    x = g.nodes()
    try:
        with np.errstate(all="ignore"):  # non-finite results become DomainError below
            v = f(x)
    except DomainError:
        raise
    except Exception as exc:  # pragma: no cover - defensive wrapper
        raise DomainError(f"evaluation failed on grid: {exc}") from exc
    v = np.asarray(v, dtype=float)
    if not np.all(np.isfinite(v)):
        bad = x[~np.isfinite(v)]
        raise DomainError(f"non-finite value at grid node x={bad[0]!r}")
    return GridProfile(g, x, v)


def diagnose_class(f: EFunction, g: GridSpec) -> list[str]:
    """Heuristic check of the claimed class on the probe grid.

    Finite data cannot certify the limits, so violations are reported as
    warnings rather than rejections.  For class E the per-octave minima of f
    should grow toward 0 (monotone up to a small slack); for class E0 the
    values near the tail horizon should be small and shrinking.
    """
    warnings: list[str] = []
    try:
        prof = sample(f, _fit_grid(f, g))
    except DomainError as exc:
        return [f"could not sample for diagnosis: {exc}"]
    grid = prof.grid
    mins = np.array([prof.values[grid.octave_slice(m)].min() for m in grid.octaves()])
    sups = np.array([prof.values[grid.octave_slice(m)].max() for m in grid.octaves()])
    # a divergent f may oscillate, so its window minima may dip; allow dips up
    # to the function's own typical per-octave swing before raising a flag
    allowance = 1.0 + 2.0 * float(np.median(sups - mins))
    for j in range(2, len(mins)):
        if mins[j] < np.max(mins[:j]) - allowance:
            m = grid.octave_min + j
            warnings.append(
                f"class E suspect: octave [2^-{m + 1}, 2^-{m}] minimum {mins[j]:.6g} "
                f"drops more than {allowance:.3g} below the earlier minima"
            )
            break
    if f.claimed_class == "E0" and f.domain[1] == math.inf:
        t = np.exp2(np.arange(1, g.tail_octaves + 1, dtype=float))
        tv = np.abs(f(t))
        if tv[-1] > 0.01 * (1.0 + abs(f(1.0))):
            warnings.append(
                f"class E0 suspect: |f(2^{g.tail_octaves})| = {tv[-1]:.6g} is not small"
            )
    return warnings


def _fit_grid(f: EFunction, g: GridSpec) -> GridSpec:
    """Shrink a grid to a sampled function's domain (no-op for full-domain f)."""
    lo, hi = f.domain
    if lo == 0.0 and hi == math.inf:
        return g
    m_lo = g.octave_min
    m_hi = g.octave_max
    if hi < 1.0:
        raise DomainError("sampled data must reach x = 1 to anchor the grid")
    m_hi = min(m_hi, int(math.floor(-math.log2(lo))))
    if m_hi <= m_lo:
        raise DomainError("sampled data spans less than one octave below 1")
    return replace(g, octave_max=m_hi)


def fit_grid_to(f: EFunction, g: GridSpec) -> GridSpec:
    """Public wrapper of the domain-fitting rule used by the CLI."""
    return _fit_grid(f, g)


def grid_spec_to_json_str(g: GridSpec) -> str:
    return json.dumps(g.to_json(), sort_keys=True)
