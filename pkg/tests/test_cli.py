import json
import math

import numpy as np
import pytest

from reebflow.cli import main

QUICK = "128,24"  # small grid keeps the CLI suite fast


def run(*argv):
    return main(list(argv))


def load(path):
    return json.loads(path.read_text())


class TestSigmaCommand:
    def test_builtin_flat(self, tmp_path):
        out = tmp_path / "o"
        assert run("sigma", "--builtin", "std_log", "--grid", QUICK, "--out", str(out)) == 0
        obj = load(out / "sigma.json")
        assert obj["sigma"]["sigma_hat"] == 0.0
        assert obj["sigma"]["trend"] == "vanishing"
        assert (out / "profile.csv").exists()
        assert (out / "sigma_octaves.svg").read_text().startswith("<svg")

    def test_builtin_with_param(self, tmp_path):
        out = tmp_path / "o"
        assert run("sigma", "--builtin", "bounded_osc", "--param", "2", "--out", str(out)) == 0
        obj = load(out / "sigma.json")
        assert obj["sigma"]["sigma_hat"] == pytest.approx(1.3697065127445591, abs=1e-3)

    def test_csv_monotone_data(self, tmp_path):
        data = tmp_path / "data.csv"
        x = np.exp2(-np.linspace(0.0, 20.0, 2001))
        data.write_text("x,f\n" + "\n".join(f"{float(v)!r},{-math.log(v)!r}" for v in x) + "\n")
        out = tmp_path / "o"
        assert run("sigma", "--csv", str(data), "--out", str(out)) == 0
        assert load(out / "sigma.json")["sigma"]["sigma_hat"] < 1e-3

    def test_sharp_variant(self, tmp_path):
        out = tmp_path / "o"
        assert (
            run("sigma", "--builtin", "doubling_osc", "--variant", "sharp", "--grid", QUICK,
                "--out", str(out)) == 0
        )
        assert load(out / "sigma.json")["sigma"]["variant"] == "sharp"

    def test_unknown_builtin_is_usage_error(self, tmp_path):
        assert run("sigma", "--builtin", "nope", "--out", str(tmp_path)) == 2

    def test_missing_input_is_usage_error(self, tmp_path):
        assert run("sigma", "--out", str(tmp_path)) == 2

    def test_bad_csv_is_usage_error(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("x,f\n-1,0\n")
        assert run("sigma", "--csv", str(bad), "--out", str(tmp_path)) == 2

    def test_bad_grid_is_usage_error(self, tmp_path):
        assert run("sigma", "--builtin", "std_log", "--grid", "512", "--out", str(tmp_path)) == 2


class TestRoundtripCommand:
    def test_doubling_passes(self, tmp_path):
        out = tmp_path / "o"
        assert run("roundtrip", "--builtin", "doubling_osc", "--out", str(out)) == 0
        obj = load(out / "roundtrip.json")
        assert obj["pass"] is True
        assert obj["max_error"] <= 1e-9
        assert (out / "roundtrip_overlay.svg").exists()

    def test_scaled_comparison(self, tmp_path):
        out = tmp_path / "o"
        assert (
            run("roundtrip", "--builtin", "doubling_osc", "--lambda", "2", "--grid", QUICK,
                "--out", str(out)) == 0
        )
        obj = load(out / "roundtrip.json")
        assert obj["flow"]["kind"] == "time_scaled"
        assert obj["max_error"] <= 1e-9


class TestLinearizeCommand:
    def test_derived_shift(self, tmp_path):
        out = tmp_path / "o"
        assert (
            run("linearize", "--builtin", "koenigs_demo", "--homeo", "square", "--lambda", "2",
                "--out", str(out)) == 0
        )
        obj = load(out / "linearize.json")
        assert obj["result"]["case"] == "bounded"
        assert obj["result"]["residual"] <= 1e-10
        assert (out / "linearize.csv").exists()

    def test_explicit_shift(self, tmp_path):
        out = tmp_path / "o"
        assert (
            run("linearize", "--builtin", "koenigs_demo", "--homeo", "square", "--lambda", "2",
                "--shift-expr", "2*x/(1+x) - x**2/(1+x**2)", "--out", str(out)) == 0
        )

    def test_tolerance_failure_exits_one(self, tmp_path):
        # good enough for the witness gate, too lax for the residual gate
        code = run(
            "linearize", "--builtin", "koenigs_demo", "--homeo", "square", "--lambda", "2",
            "--shift-expr", "2*x/(1+x) - x**2/(1+x**2) + 5e-10*cos(x)", "--out", str(tmp_path),
        )
        assert code == 1

    def test_invalid_relation_exits_two(self, tmp_path):
        code = run(
            "linearize", "--builtin", "std_log", "--homeo", "halve", "--lambda", "2",
            "--out", str(tmp_path),
        )
        assert code == 2

    def test_missing_homeo_is_usage_error(self, tmp_path):
        assert run("linearize", "--builtin", "std_log", "--lambda", "2", "--out", str(tmp_path)) == 2


class TestClassifyCommand:
    def test_builtin(self, tmp_path):
        out = tmp_path / "o"
        assert run("classify", "--builtin", "doubling_osc", "--out", str(out)) == 0
        assert load(out / "classify.json")["report"]["verdict"] == "nonstandard"

    def test_standard_flow(self, tmp_path):
        out = tmp_path / "o"
        assert run("classify", "--flow", "standard", "--out", str(out)) == 0
        assert load(out / "classify.json")["report"]["verdict"] == "standard"

    def test_flow_json(self, tmp_path):
        cfgp = tmp_path / "flow.json"
        cfgp.write_text(json.dumps({
            "kind": "realized", "c0": 0.25, "c1": 0.5, "lambda": 2.0,
            "f": {"builtin": "bounded_osc", "params": [2.0]},
        }))
        out = tmp_path / "o"
        assert run("classify", "--flow", str(cfgp), "--out", str(out)) == 0
        rep = load(out / "classify.json")["report"]
        assert rep["verdict"] == "nonstandard"
        assert rep["provenance"] == "extracted-from-flow"
        assert rep["shifts"]["time_factor"] == 2.0

    def test_malformed_flow_json(self, tmp_path):
        cfgp = tmp_path / "flow.json"
        cfgp.write_text("{not json")
        assert run("classify", "--flow", str(cfgp), "--out", str(tmp_path)) == 2


class TestTransitionCommand:
    def test_standard_value(self, tmp_path):
        out = tmp_path / "o"
        assert run("transition", "--flow", "standard", "--x", "0.1353352832366127",
                   "--out", str(out)) == 0
        assert load(out / "transition.json")["time"] == pytest.approx(2.0, abs=1e-10)

    def test_missing_x(self, tmp_path):
        assert run("transition", "--flow", "standard", "--out", str(tmp_path)) == 2


class TestPlotCommand:
    def test_function_profile(self, tmp_path):
        out = tmp_path / "o"
        assert run("plot", "--builtin", "bounded_osc", "--param", "2", "--grid", QUICK,
                   "--out", str(out)) == 0
        assert (out / "plot.svg").exists()

    def test_flow_orbit(self, tmp_path):
        cfgp = tmp_path / "flow.json"
        cfgp.write_text(json.dumps({
            "kind": "realized", "f": {"builtin": "doubling_osc", "params": []},
        }))
        out = tmp_path / "o"
        assert run("plot", "--flow", str(cfgp), "--x", "0.125", "--out", str(out)) == 0
        assert (out / "orbit.csv").exists()
        assert (out / "plot.svg").exists()


class TestDeterminism:
    @pytest.mark.parametrize(
        "argv",
        [
            ("sigma", "--builtin", "bounded_osc", "--param", "2", "--grid", QUICK),
            ("classify", "--builtin", "doubling_osc", "--grid", QUICK),
            ("roundtrip", "--builtin", "doubling_osc", "--grid", QUICK),
        ],
    )
    def test_byte_identical_reruns(self, tmp_path, argv):
        a = tmp_path / "a"
        b = tmp_path / "b"
        assert run(*argv, "--out", str(a)) == 0
        assert run(*argv, "--out", str(b)) == 0
        for pa in sorted(a.iterdir()):
            pb = b / pa.name
            assert pa.read_bytes() == pb.read_bytes(), pa.name

    def test_seed_echoed(self, tmp_path):
        out = tmp_path / "o"
        assert run("sigma", "--builtin", "std_log", "--grid", QUICK, "--seed", "7",
                   "--out", str(out)) == 0
        assert load(out / "sigma.json")["config"]["seed"] == 7
