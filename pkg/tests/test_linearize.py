import math

import numpy as np
import pytest

from reebflow import (
    ConvergenceFailure,
    GridSpec,
    LinearizeConfig,
    ToleranceFailure,
    builtin,
    gallery_homeo,
    koenigs_limit,
    threshold_inequality,
)
from reebflow.linearize import direct_iterate


def koenigs_shift(x):
    x = np.asarray(x, dtype=float)
    return 2.0 * x / (1.0 + x) - x * x / (1.0 + x * x)


@pytest.fixture(scope="module")
def cfg(grid):
    return LinearizeConfig(2.0, grid)


class TestBoundedCase:
    def test_std_log_squares_to_truncated_log(self, grid, cfg):
        # 2^-n * (-ln(x^(2^n))) = -ln x exactly on (0, 1), 0 beyond
        res = koenigs_limit(builtin("std_log"), gallery_homeo("square"), None, cfg)
        assert res.case == "bounded"
        assert res.b == pytest.approx(1.0, rel=1e-12)
        assert res.residual <= 1e-12
        p = res.probes
        assert np.max(np.abs(res.f_inf(p) + np.log(p))) <= 1e-12
        assert np.all(res.f_inf(np.array([1.0, 2.0, 8.0])) == 0.0)

    def test_koenigs_demo_sheds_its_perturbation(self, grid, cfg):
        f = builtin("koenigs_demo")
        res = koenigs_limit(f, gallery_homeo("square"), koenigs_shift, cfg)
        assert res.case == "bounded"
        assert res.residual <= 1e-10
        p = res.probes
        assert np.all(p <= 0.99)
        assert np.max(np.abs(res.f_inf(p) - np.maximum(-np.log(p), 0.0))) <= 1e-8
        # the discarded part is exactly x/(1+x), continuous with limit 0 at 0
        gap = np.abs(np.asarray(f(p)) - np.asarray(res.f_inf(p)))
        assert np.max(np.abs(gap - p / (1.0 + p))) <= 1e-10
        oct5 = np.abs(float(f(2.0 ** -5)) - float(res.f_inf(2.0 ** -5)))
        oct30 = np.abs(float(f(2.0 ** -30)) - float(res.f_inf(2.0 ** -30)))
        assert oct30 < oct5

    def test_derived_shift_matches_explicit(self, grid, cfg):
        f = builtin("koenigs_demo")
        h = gallery_homeo("square")
        a = koenigs_limit(f, h, koenigs_shift, cfg)
        b = koenigs_limit(f, h, None, cfg)
        p = a.probes
        assert np.max(np.abs(a.f_inf(p) - b.f_inf(p))) <= 1e-9

    def test_telescoping_bound_everywhere(self, grid, cfg):
        f = builtin("koenigs_demo")
        res = koenigs_limit(f, gallery_homeo("square"), koenigs_shift, cfg)
        p = res.probes
        lhs = np.abs(np.asarray(f(p)) + res.shift - np.asarray(res.f_inf(p)))
        assert np.all(lhs <= res.telescoping_bound(p) + 1e-15)

    def test_direct_iteration_oracle(self, grid, cfg):
        # the stable series against the textbook iterate at safe depths
        f = builtin("koenigs_demo")
        res = koenigs_limit(f, gallery_homeo("square"), koenigs_shift, cfg)
        for x in (0.3, 0.5, 0.7, 0.9):
            want = direct_iterate(f, gallery_homeo("square"), 2.0, 9, x)
            assert float(res.f_inf(x)) == pytest.approx(want, abs=1e-10)

    def test_constant_normalization_recorded(self, grid):
        # lifting f by 1 turns k into k + (lam - 1); the solver must undo it
        f = builtin("koenigs_demo").shifted(1.0)
        k = lambda x: koenigs_shift(x) + 1.0  # noqa: E731
        res = koenigs_limit(f, gallery_homeo("square"), k, LinearizeConfig(2.0, GridSpec()))
        assert res.k0 == pytest.approx(1.0, rel=1e-12)
        assert res.shift == pytest.approx(-1.0, rel=1e-12)
        p = res.probes
        assert np.max(np.abs(res.f_inf(p) + np.log(p))) <= 1e-8


class TestGlobalCase:
    def test_doubling_osc_is_its_own_limit(self, grid, cfg):
        f = builtin("doubling_osc")
        res = koenigs_limit(f, gallery_homeo("halve"), 0.0, cfg)
        assert res.case == "global"
        p = res.probes
        fv = np.asarray(f(p))
        assert np.max(np.abs(res.f_inf(p) - fv) / np.abs(fv)) <= 1e-12
        assert res.iterations == 1  # k identically zero converges immediately

    def test_preimage_decay_law(self, grid, cfg):
        res = koenigs_limit(builtin("doubling_osc"), gallery_homeo("halve"), 0.0, cfg)
        assert res.tail_decay_dev is not None
        assert res.tail_decay_dev <= 1e-9

    def test_derived_shift_for_exact_self_similarity(self, grid, cfg):
        # derived k is rounding noise proportional to f; treated as vanishing
        res = koenigs_limit(builtin("doubling_osc"), gallery_homeo("halve"), None, cfg)
        assert res.k0 == 0.0
        assert res.shift == 0.0


class TestPreconditions:
    def test_lam_must_exceed_one(self, grid):
        with pytest.raises(ValueError, match="lam > 1"):
            LinearizeConfig(1.0, grid)

    def test_witness_failure_rejected(self, grid):
        wrong_k = lambda x: np.full_like(np.asarray(x, dtype=float), 0.5)  # noqa: E731
        with pytest.raises(ValueError, match="witness"):
            koenigs_limit(
                builtin("std_log"), gallery_homeo("square"), wrong_k, LinearizeConfig(2.0, grid)
            )

    def test_divergent_derived_shift_rejected(self, grid):
        # 2(-ln x) - (-ln(x/2)) = -ln x - ln 2 has no limit at 0
        with pytest.raises(ValueError, match="settle"):
            koenigs_limit(
                builtin("std_log"), gallery_homeo("halve"), None, LinearizeConfig(2.0, grid)
            )

    def test_zero_repelling_rejected(self, grid):
        # only reachable with a deliberately loose witness gate: the relation
        # itself forces attraction whenever it genuinely holds
        loose = LinearizeConfig(2.0, grid, witness_tol=1e9)
        with pytest.raises(ValueError, match="repels"):
            koenigs_limit(builtin("std_log"), gallery_homeo("x*2"), 0.0, loose)

    def test_iteration_cap_reported(self, grid):
        capped = LinearizeConfig(2.0, grid, max_iters=3)
        with pytest.raises(ConvergenceFailure, match="sup-change"):
            koenigs_limit(builtin("koenigs_demo"), gallery_homeo("square"), koenigs_shift, capped)

    def test_residual_gate(self, grid):
        # a witness good enough for the precondition but worse than the
        # functional-equation gate trips the tolerance failure
        bad_k = lambda x: koenigs_shift(x) + 5e-10 * np.cos(np.asarray(x, dtype=float))  # noqa: E731
        with pytest.raises(ToleranceFailure, match="residual"):
            koenigs_limit(
                builtin("koenigs_demo"), gallery_homeo("square"), bad_k, LinearizeConfig(2.0, grid)
            )

    def test_shift_must_be_finite_at_zero(self, grid):
        # indistinguishable from the true shift on the grid, infinite at 0
        k = lambda x: koenigs_shift(x) + 1e-25 / np.asarray(x, dtype=float)  # noqa: E731
        with np.errstate(divide="ignore"):
            with pytest.raises(ValueError, match="finite at 0"):
                koenigs_limit(
                    builtin("koenigs_demo"), gallery_homeo("square"), k, LinearizeConfig(2.0, grid)
                )


class TestThresholdInequality:
    def test_koenigs_demo_case(self, grid):
        rep = threshold_inequality(
            builtin("koenigs_demo"), gallery_homeo("square"), koenigs_shift, 2.0, grid
        )
        assert rep.passed
        assert rep.max_abs_k == pytest.approx(0.5, rel=1e-12)
        assert 0.4 < rep.a_prime < 0.6
        assert rep.margin > 0.0

    def test_zero_shift_case(self, grid):
        # with k = 0 the gate is f > 0 and f(h(a)) = 2 f(a) > 1.5 f(a)
        rep = threshold_inequality(builtin("std_log"), gallery_homeo("square"), None, 2.0, grid)
        assert rep.passed
        assert rep.max_abs_k == 0.0
        assert rep.a_prime < 1.0
        assert rep.margin > 0.0

    def test_lam_validated(self, grid):
        with pytest.raises(ValueError):
            threshold_inequality(builtin("std_log"), gallery_homeo("square"), None, 1.0, grid)


class TestDirectIterate:
    def test_underflow_guard(self):
        with pytest.raises(ValueError, match="underflow"):
            direct_iterate(builtin("std_log"), gallery_homeo("square"), 2.0, 30, 0.3)

    def test_matches_definition(self):
        f = builtin("std_log")
        h = gallery_homeo("square")
        # 2^-3 * f(x^8)
        assert direct_iterate(f, h, 2.0, 3, 0.5) == pytest.approx(
            (8.0 * math.log(2)) / 8.0, rel=1e-14
        )
