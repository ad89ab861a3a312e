"""Command-line surface tying the library together.

Subcommands: sigma, roundtrip, linearize, classify, transition, plot.
Outputs are JSON (floats at full round-trip precision, keys sorted, no
timestamps: reruns with the same configuration are byte-identical), CSV
for full profiles, and dependency-free SVG plots.

Exit codes: 0 success, 1 a numeric acceptance tolerance failed,
2 usage or input error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import efunc, flow as flowmod, homeo as homeomod, linearize as linmod
from .classify import classify, flow_classify
from .errors import ConvergenceFailure, DomainError, TailCheckError, ToleranceFailure
from .oscillation import sharp_profile, sigma_from_profile, star_profile
from .svgplot import line_plot

__all__ = ["main", "RunConfig"]


@dataclass(frozen=True)
class RunConfig:
    """The reproducible part of an invocation, echoed into every JSON output."""

    command: str
    input: dict
    grid: dict
    seed: int
    lam: float | None = None
    homeo: str | None = None
    variant: str = "star"
    tail_window: int = 8
    tol: float | None = None
    tau_std: float = 1e-3
    tau_ns: float = 1e-1
    c0: float = 0.25
    c1: float = 0.5

    def to_json(self) -> dict:
        return asdict(self)


def _write_json(path: Path, obj: dict) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _parse_grid(text: str | None) -> efunc.GridSpec:
    if not text:
        return efunc.GridSpec()
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 2:
        raise ValueError("--grid expects 'K,m_max', e.g. 512,40")
    return efunc.GridSpec(samples_per_octave=int(parts[0]), octave_max=int(parts[1]))


def _resolve_function(args) -> tuple[efunc.EFunction, dict]:
    if getattr(args, "builtin", None):
        params = [float(p) for p in (args.param or [])]
        f = efunc.builtin(args.builtin, params)
        return f, {"builtin": args.builtin, "params": params}
    if getattr(args, "csv", None):
        f = efunc.from_csv(args.csv)
        return f, {"csv": str(args.csv)}
    raise ValueError("supply exactly one input: --builtin NAME or --csv PATH")


def _resolve_flow(args, g: efunc.GridSpec) -> tuple[flowmod.Flow, dict]:
    spec = args.flow
    if spec == "standard":
        F = flowmod.standard_flow()
    else:
        obj = json.loads(Path(spec).read_text())
        F = flowmod.flow_from_json(obj, g)
    # --lambda composes on top of whatever the config already carries
    if getattr(args, "lam", None):
        F = flowmod.time_scale(F, args.lam)
    return F, {"flow": str(spec), "lambda": F.lam}


def _shift_from_expression(expr: str):
    code = compile(expr, "<shift>", "eval")

    def k(x, _code=code):
        ns = dict(efunc._EXPR_NS)
        ns["x"] = np.asarray(x, dtype=float)
        out = eval(_code, {"__builtins__": {}}, ns)  # noqa: S307
        return np.broadcast_to(np.asarray(out, dtype=float), np.shape(ns["x"])).copy()

    return k


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# -- subcommands -------------------------------------------------------------


def _cmd_sigma(args) -> int:
    f, spec = _resolve_function(args)
    g = efunc.fit_grid_to(f, _parse_grid(args.grid))
    cfg = RunConfig(
        "sigma", spec, g.to_json(), args.seed, variant=args.variant, tail_window=args.tail_window
    )
    prof = (
        star_profile(f, g) if args.variant == "star" else sharp_profile(f, g)
    )
    est = sigma_from_profile(prof, tail_window=args.tail_window)
    out = _out_dir(args)
    _write_json(out / "sigma.json", {"config": cfg.to_json(), "sigma": est.to_json()})
    prof.to_csv(out / "profile.csv")
    line_plot(
        out / "sigma_octaves.svg",
        [float(m) for m in est.octaves],
        {"s_m": est.s_m},
        title="per-octave oscillation supremum",
        xlabel="octave m",
        ylabel="s_m",
    )
    print(f"sigma_hat = {est.sigma_hat!r}  trend = {est.trend}")
    return 0


def _cmd_roundtrip(args) -> int:
    f, spec = _resolve_function(args)
    g = efunc.fit_grid_to(f, _parse_grid(args.grid))
    tol = args.tol if args.tol is not None else 1e-9
    lam = args.lam or 1.0
    cfg = RunConfig("roundtrip", spec, g.to_json(), args.seed, lam=lam, tol=tol,
                    c0=args.c0, c1=args.c1)
    F = flowmod.build_flow(f, c0=args.c0, c1=args.c1, g=g, source_spec=spec)
    Fs = flowmod.time_scale(F, lam) if lam != 1.0 else F
    extracted = flowmod.extract_transition(Fs, g)
    x = g.nodes()
    x = x[x <= args.c0]
    got = np.asarray(extracted(x), dtype=float)
    want = (np.asarray(f(x), dtype=float) + F.shift) / lam
    err = float(np.max(np.abs(got - want)))
    passed = err <= tol
    out = _out_dir(args)
    _write_json(
        out / "roundtrip.json",
        {
            "config": cfg.to_json(),
            "flow": flowmod.flow_to_json(Fs),
            "max_error": err,
            "tol": tol,
            "pass": passed,
            "shift": F.shift,
        },
    )
    with open(out / "roundtrip.csv", "w", newline="") as fh:
        fh.write("x,f_plus_shift_over_lambda,extracted,error\n")
        for xr, wr, gr in zip(x, want, got):
            fh.write(f"{float(xr)!r},{float(wr)!r},{float(gr)!r},{float(gr - wr)!r}\n")
    line_plot(
        out / "roundtrip_overlay.svg",
        x,
        {"prescribed": want, "extracted": got},
        title="prescribed vs extracted transition time",
        xlabel="x",
        ylabel="time",
        logx=True,
        logy=True,
    )
    print(f"round-trip max error = {err!r} ({'pass' if passed else 'FAIL'} at tol {tol:g})")
    if not passed:
        return 1
    return 0


def _cmd_linearize(args) -> int:
    f, spec = _resolve_function(args)
    g = efunc.fit_grid_to(f, _parse_grid(args.grid))
    if not args.homeo:
        raise ValueError("linearize needs --homeo ID")
    if args.lam is None:
        raise ValueError("linearize needs --lambda L with L > 1")
    h = homeomod.gallery_homeo(args.homeo)
    k = _shift_from_expression(args.shift_expr) if args.shift_expr else None
    tol = args.tol if args.tol is not None else 1e-10
    cfg = RunConfig("linearize", spec, g.to_json(), args.seed, lam=args.lam, homeo=args.homeo,
                    tol=tol)
    res = linmod.koenigs_limit(f, h, k, linmod.LinearizeConfig(args.lam, g, tol=tol))
    out = _out_dir(args)
    _write_json(out / "linearize.json", {"config": cfg.to_json(), "result": res.to_json()})
    x = res.probes
    fv = np.asarray(f(x), dtype=float)
    fi = np.asarray(res.f_inf(x), dtype=float)
    with open(out / "linearize.csv", "w", newline="") as fh:
        fh.write("x,f,f_inf,f_minus_f_inf\n")
        for a, b, c in zip(x, fv, fi):
            fh.write(f"{float(a)!r},{float(b)!r},{float(c)!r},{float(b - c)!r}\n")
    line_plot(
        out / "linearize_overlay.svg",
        x,
        {"f": fv, "f_inf": fi},
        title="input vs linearized profile",
        xlabel="x",
        ylabel="value",
        logx=True,
    )
    print(
        f"case = {res.case}  iterations = {res.iterations}  residual = {res.residual!r}  "
        f"shift = {res.shift!r}"
    )
    return 0


def _cmd_classify(args) -> int:
    g = _parse_grid(args.grid)
    if getattr(args, "flow", None):
        F, spec = _resolve_flow(args, g)
        report = flow_classify(F, g=g, tau_std=args.tau_std, tau_ns=args.tau_ns)
    else:
        f, spec = _resolve_function(args)
        g = efunc.fit_grid_to(f, g)
        report = classify(f, g, tau_std=args.tau_std, tau_ns=args.tau_ns)
    cfg = RunConfig("classify", spec, g.to_json(), args.seed, tau_std=args.tau_std,
                    tau_ns=args.tau_ns)
    out = _out_dir(args)
    _write_json(out / "classify.json", {"config": cfg.to_json(), "report": report.to_json()})
    line_plot(
        out / "classify_octaves.svg",
        [float(m) for m in report.sigma.octaves],
        {"s_m": report.sigma.s_m},
        title=f"verdict: {report.verdict}",
        xlabel="octave m",
        ylabel="s_m",
    )
    print(f"verdict = {report.verdict}  sigma_hat = {report.sigma.sigma_hat!r}  "
          f"trend = {report.sigma.trend}")
    return 0


def _cmd_transition(args) -> int:
    g = _parse_grid(args.grid)
    F, spec = _resolve_flow(args, g)
    if args.x is None:
        raise ValueError("transition needs --x VALUE")
    t = flowmod.transition_time(F, flowmod.DEFAULT_TRANSVERSAL, args.x)
    cfg = RunConfig("transition", spec, g.to_json(), args.seed)
    out = _out_dir(args)
    _write_json(out / "transition.json", {"config": cfg.to_json(), "x": args.x, "time": t})
    print(f"transition time at x = {args.x!r}: {t!r}")
    return 0


def _cmd_plot(args) -> int:
    g = _parse_grid(args.grid)
    out = _out_dir(args)
    if getattr(args, "flow", None):
        F, spec = _resolve_flow(args, g)
        x0 = args.x if args.x is not None else 0.25
        p0 = flowmod.DEFAULT_TRANSVERSAL.point1(x0)
        tmax = args.tmax if args.tmax is not None else 2.0 * abs(math.log(x0))
        times = np.linspace(0.0, tmax, 201)
        rows = flowmod.orbit_rows(F, p0, times)
        flowmod.orbit_to_csv(out / "orbit.csv", rows)
        line_plot(
            out / "plot.svg",
            [r[1] for r in rows],
            {"orbit": [r[2] for r in rows]},
            title=f"orbit through gamma1({x0:g})",
            xlabel="xi",
            ylabel="eta",
        )
        print(f"orbit written ({len(rows)} samples, leaf c = {p0.leaf!r})")
        return 0
    f, spec = _resolve_function(args)
    g = efunc.fit_grid_to(f, g)
    prof = star_profile(f, g)
    line_plot(
        out / "plot.svg",
        prof.x,
        {"f": prof.f_values, "star": prof.values},
        title=f.description,
        xlabel="x",
        ylabel="value",
        logx=True,
        logy=False,
    )
    print(f"profile plot written ({len(prof.x)} nodes)")
    return 0


# -- argument parsing ---------------------------------------------------------


def _add_common(p: argparse.ArgumentParser, flow_input: bool = False) -> None:
    p.add_argument("--builtin", help="gallery function name")
    p.add_argument("--param", action="append", help="builtin parameter (repeatable)")
    p.add_argument("--csv", help="CSV file with header x,f and decreasing x")
    if flow_input:
        p.add_argument("--flow", help="'standard' or path to a flow JSON config")
    p.add_argument("--grid", help="grid as 'K,m_max' (default 512,40)")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--seed", type=int, default=0, help="recorded in outputs for reproducibility")
    p.add_argument("--lambda", dest="lam", type=float, default=None, help="scale factor")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="reebflow",
        description="transition-time invariants of flows with hyperbola orbit foliation",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sigma", help="oscillation profile and sigma estimate")
    _add_common(p)
    p.add_argument("--variant", choices=("star", "sharp"), default="star")
    p.add_argument("--tail-window", type=int, default=8)
    p.set_defaults(fn=_cmd_sigma)

    p = sub.add_parser("roundtrip", help="realize f as a flow, extract it back, compare")
    _add_common(p)
    p.add_argument("--tol", type=float, default=None, help="max absolute error (default 1e-9)")
    p.add_argument("--c0", type=float, default=0.25)
    p.add_argument("--c1", type=float, default=0.5)
    p.set_defaults(fn=_cmd_roundtrip)

    p = sub.add_parser("linearize", help="solve lam*f = f o h + k for the exact profile")
    _add_common(p)
    p.add_argument("--homeo", help="halve | square | root_scale:N | pow:p | expression")
    p.add_argument("--shift-expr", help="k as an expression in x (default: derived)")
    p.add_argument("--tol", type=float, default=None, help="residual tolerance (default 1e-10)")
    p.set_defaults(fn=_cmd_linearize)

    p = sub.add_parser("classify", help="standard / nonstandard / inconclusive verdict")
    _add_common(p, flow_input=True)
    p.add_argument("--tau-std", type=float, default=1e-3)
    p.add_argument("--tau-ns", type=float, default=1e-1)
    p.set_defaults(fn=_cmd_classify)

    p = sub.add_parser("transition", help="transition time of a flow at one parameter")
    _add_common(p, flow_input=True)
    p.add_argument("--x", type=float, help="transversal parameter")
    p.set_defaults(fn=_cmd_transition)

    p = sub.add_parser("plot", help="profile plot for a function, orbit plot for a flow")
    _add_common(p, flow_input=True)
    p.add_argument("--x", type=float, help="orbit start parameter (flow input)")
    p.add_argument("--tmax", type=float, help="orbit time horizon (flow input)")
    p.set_defaults(fn=_cmd_plot)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors already; normalize other codes
        return 2 if exc.code not in (0,) else 0
    try:
        return args.fn(args)
    except (ToleranceFailure, ConvergenceFailure) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, DomainError, TailCheckError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
