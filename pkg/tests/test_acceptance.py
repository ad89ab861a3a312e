"""Acceptance gate: every criterion at its stated tolerance.

Run with ``pytest tests/test_acceptance.py -v -s`` to see one PASS/FAIL
line per criterion.  All tolerances are pinned here, none deferred.

Known red: criterion 4's zero-recurrence item demands a profile zero in
every single octave for every gallery function, but the zeros of
bounded_osc(2) recur once per oscillation period, which spans ~9 octaves
(2 pi / ln 2); octaves that fall inside the non-record stretch of a period
(4, 5, 6, 13, 14, 15, ...) contain no zero, so the per-octave form of the
criterion is unsatisfiable for that input no matter the implementation.
The windowed form (any window covering a full period) passes and is
exercised in the unit suite.  The criterion is asserted here as stated,
honestly failing for that one input.
"""

import math
import time

import numpy as np
import pytest

from reebflow import (
    DEFAULT_TRANSVERSAL,
    GridSpec,
    LinearizeConfig,
    build_flow,
    builtin,
    check_witness,
    classify,
    EquivalenceWitness,
    extract_transition,
    flow_classify,
    gallery_homeo,
    koenigs_limit,
    sigma_estimate,
    standard_flow,
    star_identity_suite,
    star_profile,
    time_scale,
)
from reebflow.cli import main as cli_main

GRID = GridSpec()  # K=512, octaves 0..40
GALLERY = (
    ("std_log", ()),
    ("doubling_osc", ()),
    ("bounded_osc", (2.0,)),
    ("koenigs_demo", ()),
)
FLOW_GALLERY = (("std_log", ()), ("doubling_osc", ()), ("bounded_osc", (2.0,)))
SIGMA_ANALYTIC = 2.0 * math.sqrt(3.0) - 2.0 * math.pi / 3.0


def _report(criterion, passed, detail=""):
    print(f"[criterion {criterion}] {'PASS' if passed else 'FAIL'} {detail}".rstrip())


def shift_k(x):
    x = np.asarray(x, dtype=float)
    return x / (1.0 + x)


def test_criterion_1_standard_transition_identity():
    t0 = time.perf_counter()
    x = GRID.nodes()
    got = np.asarray(extract_transition(standard_flow(), GRID)(x))
    sup = float(np.max(np.abs(got - (-np.log(x)))))
    elapsed = time.perf_counter() - t0
    ok = sup < 1e-12 and elapsed < 1.0
    _report(1, ok, f"sup error {sup:.3g} over [2^-40, 1], {elapsed:.3f}s")
    assert sup < 1e-12
    assert elapsed < 1.0


def test_criterion_2_round_trip():
    t0 = time.perf_counter()
    worst = 0.0
    for name, params in FLOW_GALLERY:
        f = builtin(name, params)
        F = build_flow(f, g=GRID)
        x = GRID.nodes()
        x = x[x <= F.c0]
        got = np.asarray(extract_transition(F, GRID)(x))
        want = np.asarray(f(x)) + F.shift
        worst = max(worst, float(np.max(np.abs(got - want))))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-9 and elapsed < 10.0
    _report(2, ok, f"sup round-trip error {worst:.3g} on (0, c0], {elapsed:.2f}s")
    assert worst < 1e-9
    assert elapsed < 10.0


def test_criterion_3_time_scaling_law():
    worst = 0.0
    flows = [standard_flow()] + [build_flow(builtin(n, p), g=GRID) for n, p in FLOW_GALLERY]
    x = GRID.nodes()
    for F in flows:
        base = np.asarray(extract_transition(F, GRID)(x))
        for lam in (0.5, 2.0, 3.0):
            scaled = np.asarray(extract_transition(time_scale(F, lam), GRID)(x))
            want = base / lam
            # the transition vanishes at x = 1 exactly; avoid 0/0 there
            rel = np.abs(scaled - want) / np.maximum(np.abs(want), 1e-300)
            worst = max(worst, float(np.max(rel)))
    ok = worst < 1e-10
    _report(3, ok, f"max relative deviation {worst:.3g} across lam in {{1/2, 2, 3}}")
    assert worst < 1e-10


@pytest.mark.parametrize("name,params", GALLERY, ids=[n for n, _ in GALLERY])
def test_criterion_4_star_identity_suite(name, params):
    rng = np.random.default_rng(20240816)
    f = builtin(name, params)
    failures = []
    for hid in ("halve", "square", "root_scale:4"):
        lam = float(rng.uniform(0.1, 10.0))
        c = float(rng.uniform(-10.0, 10.0))
        rep = star_identity_suite(f, lam, c, gallery_homeo(hid), shift_k, GRID)
        for item in rep.items:
            if not item.passed:
                failures.append((hid, item.name, item.detail))
    ok = not failures
    _report(4, ok, f"({name}) " + ("all items" if ok else f"failing: {failures}"))
    assert ok, failures


def test_criterion_5_sigma_oracle():
    t0 = time.perf_counter()
    # independent oracle: dense running-max scan of u + 2 sin u, tail window
    u = np.linspace(0.0, 30.0, 1_000_001)
    g = u + 2.0 * np.sin(u)
    drop = np.maximum.accumulate(g) - g
    oracle = float(np.max(drop[u >= 20.0]))
    est = sigma_estimate(builtin("bounded_osc", [2.0]), GRID)
    elapsed = time.perf_counter() - t0
    dev_oracle = abs(est.sigma_hat - oracle)
    ok = dev_oracle < 1e-3 and abs(oracle - SIGMA_ANALYTIC) < 1e-4 and elapsed < 5.0
    _report(
        5,
        ok,
        f"sigma_hat {est.sigma_hat:.6f} vs oracle {oracle:.6f} "
        f"(analytic {SIGMA_ANALYTIC:.6f}), {elapsed:.2f}s",
    )
    assert abs(oracle - SIGMA_ANALYTIC) < 1e-4
    assert dev_oracle < 1e-3
    assert elapsed < 5.0


def test_criterion_6_doubling_and_single_scale_witness():
    f = builtin("doubling_osc")
    prof = star_profile(f, GRID)
    ratios = prof.octave_sup[6:22] / prof.octave_sup[5:21]  # m = 5..20
    ratios_ok = bool(np.all(ratios >= 1.95) and np.all(ratios <= 2.05))
    wit = check_witness(
        f, None, EquivalenceWitness(gallery_homeo("halve"), None, 2.0), GRID, tol=1e-12
    )
    verdict = classify(f, GRID).verdict
    ok = ratios_ok and wit.passed and verdict == "nonstandard"
    _report(
        6,
        ok,
        f"octave ratios [{ratios.min():.4f}, {ratios.max():.4f}], witness residual "
        f"{wit.residual:.3g}, verdict {verdict}",
    )
    assert ratios_ok
    assert wit.residual < 1e-12
    assert verdict == "nonstandard"  # exactly self-similar at one scale, yet nonstandard


def test_criterion_7_linearization():
    def k(x):
        x = np.asarray(x, dtype=float)
        return 2.0 * x / (1.0 + x) - x * x / (1.0 + x * x)

    f = builtin("koenigs_demo")
    res = koenigs_limit(f, gallery_homeo("square"), k, LinearizeConfig(2.0, GRID))
    p = res.probes
    dev = float(np.max(np.abs(np.asarray(res.f_inf(p)) - np.maximum(-np.log(p), 0.0))))
    lhs = np.abs(np.asarray(f(p)) + res.shift - np.asarray(res.f_inf(p)))
    telescoping_ok = bool(np.all(lhs <= res.telescoping_bound(p) + 1e-15))
    beyond = np.asarray(res.f_inf(np.array([1.0, 2.0, 16.0, 1024.0])))
    extension_ok = bool(np.all(beyond == 0.0))
    ok = res.residual < 1e-10 and dev < 1e-8 and telescoping_ok and extension_ok
    _report(
        7,
        ok,
        f"residual {res.residual:.3g}, |f_inf - truncated log| {dev:.3g}, "
        f"telescoping {'ok' if telescoping_ok else 'violated'}, "
        f"extension {'ok' if extension_ok else 'violated'}",
    )
    assert res.residual < 1e-10
    assert dev < 1e-8
    assert telescoping_ok
    assert extension_ok


def test_criterion_8_classifier_verdicts():
    checks = []
    checks.append(("std_log", classify(builtin("std_log"), GRID).verdict == "standard"))
    checks.append(
        ("extracted standard", flow_classify(standard_flow(), g=GRID).verdict == "standard")
    )
    checks.append(
        ("doubling_osc", classify(builtin("doubling_osc"), GRID).verdict == "nonstandard")
    )
    checks.append(
        ("bounded_osc", classify(builtin("bounded_osc", [2.0]), GRID).verdict == "nonstandard")
    )
    flows = {
        "standard": (standard_flow(), "standard"),
        "std_log": (build_flow(builtin("std_log"), g=GRID), "standard"),
        "doubling_osc": (build_flow(builtin("doubling_osc"), g=GRID), "nonstandard"),
        "bounded_osc": (build_flow(builtin("bounded_osc", [2.0]), g=GRID), "nonstandard"),
    }
    for lam in (0.5, 2.0, 5.0):
        for label, (F, want) in flows.items():
            checks.append(
                (f"{label} x{lam}", flow_classify(time_scale(F, lam), g=GRID).verdict == want)
            )
    h = gallery_homeo("halve")
    for name, params in GALLERY:
        f = builtin(name, params)
        transported = f.composed(h, "halve").plus(shift_k)
        checks.append(
            (f"{name} transported", classify(f, GRID).verdict == classify(transported, GRID).verdict)
        )
    bad = [label for label, good in checks if not good]
    ok = not bad
    _report(8, ok, f"{len(checks)} verdict checks" + ("" if ok else f", failing: {bad}"))
    assert ok, bad


def test_criterion_9_cli_determinism(tmp_path):
    runs = [
        ("sigma", "--builtin", "bounded_osc", "--param", "2"),
        ("classify", "--builtin", "doubling_osc"),
    ]
    identical = True
    for argv in runs:
        a = tmp_path / (argv[0] + "_a")
        b = tmp_path / (argv[0] + "_b")
        assert cli_main(list(argv) + ["--out", str(a)]) == 0
        assert cli_main(list(argv) + ["--out", str(b)]) == 0
        for pa in sorted(a.iterdir()):
            if pa.suffix != ".json":
                continue
            identical &= pa.read_bytes() == (b / pa.name).read_bytes()
    _report(9, identical, "JSON artifacts byte-identical across reruns")
    assert identical
