import json
import math
import subprocess
import sys

import numpy as np
import pytest
from numpy.testing import assert_allclose

from qdoe.adaptive import AdaptiveConfig, SweepRow, mse_ratio, theta_to_eps
from qdoe.cli import build_parser, main
from qdoe.closed_forms import f_values
from qdoe.fisher import Design, MixedDesign, mixed_fisher
from qdoe.qubit import channel_family, pauli_axis_povm, pauli_axis_state


def run_cli(capsys, argv):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_parser_identity():
    parser = build_parser()
    assert parser.prog == "qdoe"


def test_fisher_matches_library(capsys):
    code, out, err = run_cli(
        capsys, ["fisher", "--family", "scaling", "--theta", "0.8,0.1,0.2"]
    )
    assert code == 0 and err == ""
    payload = json.loads(out)
    designs = tuple(
        Design(pauli_axis_state(a), pauli_axis_povm(a)) for a in (1, 2, 3)
    )
    mixed = MixedDesign(np.full(3, 1.0 / 3.0), designs)
    expected = mixed_fisher(
        channel_family("scaling"), mixed, np.array([0.8, 0.1, 0.2])
    )
    assert_allclose(payload["classical"]["rows"], expected.matrix, atol=1e-12)
    assert payload["classical"]["n"] == 3
    assert payload["axes"] == [1, 2, 3]
    assert_allclose(payload["nu"], [1.0 / 3.0] * 3, atol=1e-15)
    # The quantum bound dominates the classical matrix.
    assert min(payload["gap_eigenvalues"]) > -1e-9


def test_fisher_custom_weights(capsys):
    code, out, _ = run_cli(
        capsys,
        [
            "fisher",
            "--family",
            "asymmetry",
            "--eps",
            "0.2,0.3",
            "--axes",
            "1,2",
            "--nu",
            "0.25,0.75",
        ],
    )
    assert code == 0
    payload = json.loads(out)
    assert_allclose(payload["nu"], [0.25, 0.75], atol=1e-15)
    assert payload["classical"]["n"] == 2


def test_fisher_output_file(capsys, tmp_path):
    target = tmp_path / "fisher.json"
    code, out, _ = run_cli(
        capsys,
        ["fisher", "--family", "pauli", "--theta", "0.1,0.1,0.1", "--out", str(target)],
    )
    assert code == 0 and out == ""
    payload = json.loads(target.read_text("utf-8"))
    assert payload["family"] == "pauli"


def test_json_output_is_deterministic(capsys):
    argv = ["fisher", "--family", "scaling", "--theta", "0.5,0.2,0.1"]
    _, first, _ = run_cli(capsys, argv)
    _, second, _ = run_cli(capsys, argv)
    assert first == second


@pytest.mark.parametrize(
    "argv",
    [
        ["fisher", "--family", "pauli", "--theta", "0.1,0.1"],
        ["fisher", "--family", "scaling", "--theta", "1,1,1"],
        ["fisher", "--family", "scaling", "--theta", "0.1,abc,0.2"],
        ["optimal-design", "--family", "scaling", "--theta", "0.5,0.2,0.1",
         "--criterion", "c"],
        ["optimal-design", "--family", "scaling", "--theta", "0.5,0.2,0.1",
         "--criterion", "D", "--closed-form"],
        ["binary-design", "--eps", "0.2,0.3", "--axes", "1,2,3"],
        ["binary-design"],
        ["sweep", "--figure", "4"],
    ],
)
def test_validation_failures_exit_2(capsys, argv):
    code, _, err = run_cli(capsys, argv)
    assert code == 2
    assert "qdoe error:validation:" in err


def test_degenerate_failures_exit_3(capsys):
    code, _, err = run_cli(capsys, ["binary-design", "--eps", "0,1"])
    assert code == 3
    assert "qdoe error:degenerate:" in err


def test_optimal_design_scaling_closed_form(capsys):
    code, out, _ = run_cli(
        capsys,
        [
            "optimal-design",
            "--family",
            "scaling",
            "--theta",
            "0.6,0.3,0",
            "--criterion",
            "A",
            "--closed-form",
        ],
    )
    assert code == 0
    payload = json.loads(out)
    assert payload["closed_form"]["max_weight_deviation"] < 1e-8
    assert_allclose(np.sum(payload["weights"]), 1.0, atol=1e-12)


def test_optimal_design_scaling_gamma_closed_form(capsys):
    code, out, _ = run_cli(
        capsys,
        [
            "optimal-design",
            "--family",
            "scaling",
            "--theta",
            "0.6,0.3,0",
            "--criterion",
            "gamma",
            "--gamma",
            "2.0",
            "--closed-form",
        ],
    )
    assert code == 0
    payload = json.loads(out)
    assert payload["closed_form"]["max_weight_deviation"] < 1e-7


def test_optimal_design_pauli_closed_forms(capsys):
    code, out, _ = run_cli(
        capsys,
        [
            "optimal-design",
            "--family",
            "pauli",
            "--theta",
            "0.05,0.1,0.15",
            "--criterion",
            "A",
            "--closed-form",
        ],
    )
    assert code == 0
    payload = json.loads(out)
    assert payload["closed_form"]["max_weight_deviation"] < 1e-8
    assert payload["closed_form"]["value_deviation"] < 1e-9

    code, out, _ = run_cli(
        capsys,
        [
            "optimal-design",
            "--family",
            "pauli",
            "--theta",
            "0.05,0.1,0.15",
            "--criterion",
            "D",
            "--closed-form",
        ],
    )
    assert code == 0
    payload = json.loads(out)
    assert payload["closed_form"]["max_weight_deviation"] < 1e-8


def test_binary_design_asymmetry_payload(capsys):
    code, out, _ = run_cli(
        capsys, ["binary-design", "--eps", "0.5,0.25", "--verify"]
    )
    assert code == 0
    payload = json.loads(out)
    f = f_values((0.5, 0.25))
    assert payload["branch"] == "interior"
    assert_allclose(
        payload["lambda_star"], payload["closed_form"]["lambda_star"], atol=1e-10
    )
    assert_allclose(payload["value"], (f.f1 + f.f2) ** 2, rtol=1e-10)
    assert_allclose(np.sum(payload["nu"]), 1.0, atol=1e-12)
    assert payload["grid_check"]["lambda_deviation"] < 2e-5
    assert payload["grid_check"]["value_deviation"] < 1e-8
    assert payload["weight"] == [[1.0, 0.0], [0.0, 0.0]]


def test_binary_design_d_criterion(capsys):
    code, out, _ = run_cli(
        capsys,
        [
            "binary-design",
            "--family",
            "asymmetry",
            "--theta",
            "0.2,0.3",
            "--axes",
            "1,2",
            "--criterion",
            "D",
            "--verify",
        ],
    )
    assert code == 0
    payload = json.loads(out)
    # The two rank-one transverse matrices have equal (zero) determinants, so
    # the determinant objective peaks at the even split.
    f = f_values((0.2, 0.3))
    assert payload["branch"] == "interior"
    assert_allclose(payload["lambda_star"], 0.0, atol=1e-10)
    assert_allclose(payload["value"], 1.0 / (16.0 * f.f1**2 * f.f2**2), rtol=1e-10)
    assert payload["grid_check"]["lambda_deviation"] < 2e-5


def test_sweep_figure_1(capsys):
    code, out, _ = run_cli(capsys, ["sweep", "--figure", "1", "--grid-step", "0.5"])
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "eps1,eps2,value_PT,value_m2,difference"
    rows = {tuple(float(v) for v in line.split(",")[:2]): line for line in lines[1:]}
    origin = [float(v) for v in rows[(0.0, 0.0)].split(",")]
    assert_allclose(origin[2:], [1.5, 1.0, 0.5], atol=1e-9)


def test_sweep_generic_matches_library(capsys):
    argv = [
        "sweep",
        "--grid-step",
        "0.4",
        "--N",
        "40",
        "--K",
        "2",
        "--replicas",
        "200",
        "--seed",
        "11",
    ]
    code, out, _ = run_cli(capsys, argv)
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == ",".join(SweepRow._fields)
    assert len(lines) == 2
    values = dict(zip(SweepRow._fields, (float(v) for v in lines[1].split(","))))
    config = AdaptiveConfig(total_uses=40, steps=2)
    reference = mse_ratio(theta_to_eps(0.4, 0.4), config, replicas=200, seed=11)
    assert_allclose(values["mse_static"], reference.mse_static, rtol=1e-11)
    assert_allclose(values["mse_adapt"], reference.mse_adapt, rtol=1e-11)
    assert_allclose(values["ratio"], reference.ratio, rtol=1e-11)


def test_sweep_json_format(capsys):
    argv = [
        "sweep",
        "--grid-step",
        "0.4",
        "--N",
        "40",
        "--K",
        "2",
        "--replicas",
        "200",
        "--seed",
        "11",
        "--format",
        "json",
    ]
    code, out, _ = run_cli(capsys, argv)
    assert code == 0
    payload = json.loads(out)
    assert len(payload["rows"]) == 1
    assert payload["rows"][0]["theta1"] == 0.4
    assert sorted(payload["rows"][0]) == sorted(SweepRow._fields)
    assert [0.4, 0.8] in payload["skipped"]


def test_sweep_config_file(capsys, tmp_path):
    flags = [
        "sweep",
        "--grid-step",
        "0.4",
        "--N",
        "40",
        "--K",
        "2",
        "--replicas",
        "200",
        "--seed",
        "11",
    ]
    _, from_flags, _ = run_cli(capsys, flags)

    toml_path = tmp_path / "sweep.toml"
    toml_path.write_text(
        'N = 40\nK = 2\nreplicas = 200\nseed = 11\ngrid_step = 0.4\n', "utf-8"
    )
    code, from_toml, _ = run_cli(capsys, ["sweep", "--config", str(toml_path)])
    assert code == 0
    assert from_toml == from_flags

    json_path = tmp_path / "sweep.json"
    json_path.write_text(
        json.dumps({"N": 40, "K": 2, "replicas": 200, "seed": 11, "grid_step": 0.4}),
        "utf-8",
    )
    _, from_json, _ = run_cli(capsys, ["sweep", "--config", str(json_path)])
    assert from_json == from_flags

    # Flags override config values.
    code, overridden, _ = run_cli(
        capsys, ["sweep", "--config", str(toml_path), "--seed", "12"]
    )
    assert code == 0
    assert overridden != from_flags


def test_sweep_config_unknown_key(capsys, tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("workers = 4\n", "utf-8")
    code, _, err = run_cli(capsys, ["sweep", "--config", str(bad)])
    assert code == 2
    assert "unknown config keys" in err


def test_sweep_figure_4_writes_four_files(capsys, tmp_path):
    out = tmp_path / "panel.csv"
    code, stdout, _ = run_cli(
        capsys,
        [
            "sweep",
            "--figure",
            "4",
            "--grid-step",
            "0.2",
            "--N",
            "20",
            "--replicas",
            "120",
            "--seed",
            "2",
            "--out",
            str(out),
        ],
    )
    assert code == 0 and stdout == ""
    for steps in (10, 5):
        for runway in (0, 10):
            path = tmp_path / f"panel_steps{steps}_runway{runway}.csv"
            assert path.exists()
            lines = path.read_text("utf-8").strip().splitlines()
            assert lines[0] == ",".join(SweepRow._fields)
            assert len(lines) == 2


def test_module_entry_point():
    result = subprocess.run(
        [sys.executable, "-m", "qdoe", "fisher", "--family", "scaling",
         "--theta", "0.5,0,0"],
        capture_output=True,
        text=True,
        timeout=120,
    )
    assert result.returncode == 0
    payload = json.loads(result.stdout)
    assert payload["family"] == "scaling"
