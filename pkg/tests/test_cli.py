import json

import numpy as np
import pytest

from irtcalib.cli import main
from irtcalib.eqc import CalibrationResult


def run(argv):
    return main(argv)


@pytest.fixture(scope="module")
def eqc_json(tmp_path_factory):
    path = tmp_path_factory.mktemp("res") / "eqc.json"
    code = run(
        [
            "calibrate", "--target", "0.75", "--items", "30", "--model", "rasch",
            "--latent-shape", "bimodal", "--latent-params", "delta=0.8",
            "--item-source", "pool", "--algorithm", "eqc", "--m", "20000",
            "--c-lower", "0.1", "--c-upper", "10", "--seed", "42",
            "--out", str(path),
        ]
    )
    assert code == 0
    return path


def test_calibrate_flagship_output(eqc_json, capsys):
    doc = json.loads(eqc_json.read_text())
    assert doc["result_type"] == "eqc"
    assert abs(doc["achieved_rho"] - 0.75) < 1e-4
    assert doc["status"] == "success"
    assert doc["reproducibility"]["package"] == "irtcalib"
    assert "generator" in doc["reproducibility"]


def test_calibrate_summary_fields(capsys, tmp_path):
    code = run(
        ["calibrate", "--target", "0.6", "--items", "15", "--model", "rasch",
         "--m", "2000", "--c-lower", "0.1", "--c-upper", "10", "--seed", "1"]
    )
    out = capsys.readouterr().out
    assert code == 0
    for field in (
        "Target reliability", "Achieved reliability", "Absolute error",
        "Scaling factor (c*)", "Number of items", "Quadrature points",
        "Reliability metric", "Latent variance", "Status", "Bracket reliabilities",
    ):
        assert field in out


def test_calibrate_target_domain_guard(capsys):
    assert run(["calibrate", "--target", "1.2", "--items", "30"]) == 2
    assert "(0, 1)" in capsys.readouterr().err


def test_calibrate_infeasible_target_exit_code(capsys):
    code = run(
        ["calibrate", "--target", "0.995", "--items", "30", "--model", "rasch",
         "--latent-shape", "bimodal", "--latent-params", "delta=0.8",
         "--item-source", "pool", "--m", "20000",
         "--c-lower", "0.1", "--c-upper", "10", "--seed", "42"]
    )
    assert code == 3
    err = capsys.readouterr().err
    assert "infeasible" in err
    assert "boundary" in err


def test_calibrate_sac_algorithm(tmp_path, capsys):
    path = tmp_path / "sac.json"
    code = run(
        ["calibrate", "--target", "0.6", "--items", "30", "--model", "rasch",
         "--algorithm", "sac", "--n-iter", "60", "--m-per-iter", "200",
         "--m", "2000", "--c-lower", "0.1", "--c-upper", "10", "--seed", "2",
         "--out", str(path)]
    )
    assert code == 0
    doc = json.loads(path.read_text())
    assert doc["result_type"] == "sac"
    assert "Iterations" in capsys.readouterr().out


def test_calibrate_eqc_msem_rejected(capsys):
    code = run(["calibrate", "--target", "0.6", "--items", "30", "--metric", "msem"])
    assert code == 2


def test_result_roundtrip_full_precision(eqc_json):
    doc = json.loads(eqc_json.read_text())
    result = CalibrationResult.from_dict(doc)
    redumped = result.to_dict()
    for key, value in redumped.items():
        assert doc[key] == value


def test_generate_roundtrip_and_determinism(eqc_json, tmp_path, capsys):
    out1, out2 = tmp_path / "r1.csv", tmp_path / "r2.csv"
    for out in (out1, out2):
        code = run(
            ["generate", "--calibration", str(eqc_json), "--n", "80",
             "--seed", "5", "--out", str(out), "--emit-theta"]
        )
        assert code == 0
    assert out1.read_bytes() == out2.read_bytes()
    rows = out1.read_text().splitlines()
    assert len(rows) == 80
    assert len(rows[0].split(",")) == 30
    meta = json.loads((tmp_path / "r1.csv.meta.json").read_text())
    assert len(meta["theta_true"]) == 80
    assert meta["n_items"] == 30


def test_generate_header_flag(eqc_json, tmp_path):
    out = tmp_path / "rh.csv"
    assert run(["generate", "--calibration", str(eqc_json), "--n", "5",
                "--seed", "1", "--out", str(out), "--header"]) == 0
    assert out.read_text().splitlines()[0].startswith("item_1,item_2")


def test_generate_zero_persons(eqc_json, tmp_path):
    assert run(["generate", "--calibration", str(eqc_json), "--n", "0",
                "--out", str(tmp_path / "x.csv")]) == 2


def test_generate_missing_calibration(tmp_path):
    assert run(["generate", "--calibration", str(tmp_path / "nope.json"),
                "--n", "5", "--out", str(tmp_path / "x.csv")]) == 5


def test_bounds_reference_ceiling(capsys):
    code = run(["bounds", "--items", "60", "--model", "rasch", "--m", "2000", "--seed", "3"])
    assert code == 0
    out = capsys.readouterr().out
    assert "0.9375" in out


def test_bounds_feasible_line(capsys):
    code = run(["bounds", "--items", "30", "--model", "rasch", "--m", "2000",
                "--c-lower", "0.1", "--c-upper", "10", "--target", "0.6", "--seed", "3"])
    assert code == 0
    assert "feasible" in capsys.readouterr().out


def test_bounds_gap_pool_scan(tmp_path, capsys):
    pool_file = tmp_path / "gap.csv"
    lines = ["beta,lambda"] + ["-3.0,1.0"] * 15 + ["3.0,1.0"] * 15
    pool_file.write_text("\n".join(lines) + "\n")
    code = run(
        ["bounds", "--items", "30", "--model", "rasch", "--item-source", "pool",
         "--pool-file", str(pool_file), "--latent-params", "sigma=0.2",
         "--c-lower", "1", "--c-upper", "50", "--m", "4000",
         "--scan-msem", "--seed", "4"]
    )
    assert code == 0
    assert "non-monotone" in capsys.readouterr().out


def test_validate_desk_profile(tmp_path, capsys):
    cfg = {
        "master_seed": 11,
        "replications": 3,
        "algorithms": ["eqc"],
        "shapes": [{"shape": "normal"}],
        "models": ["rasch"],
        "item_sources": ["parametric"],
        "test_lengths": [15],
        "n_persons": [100],
        "targets": {"15": 0.45},
    }
    cfg_path = tmp_path / "study.json"
    cfg_path.write_text(json.dumps(cfg))
    code = run(["validate", "--config", str(cfg_path), "--out-dir", str(tmp_path / "out"),
                "--profile", "desk", "--threads", "1"])
    assert code == 0
    for name in ("records.csv", "summary_by_algorithm.csv", "summary_by_target.csv",
                 "replication_sd.csv", "study_summary.json"):
        assert (tmp_path / "out" / name).exists()


def test_validate_full_profile_echo(tmp_path, capsys):
    cfg = {
        "master_seed": 12,
        "conditions": [
            {
                "latent": {"shape": "normal"},
                "model": "rasch",
                "item_source": "parametric",
                "n_items": 15,
                "n_persons": 100,
                "target_rho": 0.45,
                "algorithm": "eqc",
                "replications": 2,
            }
        ],
    }
    cfg_path = tmp_path / "study.json"
    cfg_path.write_text(json.dumps(cfg))
    code = run(["validate", "--config", str(cfg_path), "--out-dir", str(tmp_path / "out"),
                "--profile", "full", "--threads", "1"])
    assert code == 0
    out = capsys.readouterr().out
    assert "c_bounds : [0.1, 10.0]" in out
    summary = json.loads((tmp_path / "out" / "study_summary.json").read_text())
    assert summary["echo"]["c_bounds"] == [0.1, 10.0]
    assert summary["echo"]["m_quadrature"] == 20000
    assert summary["echo"]["n_iter"] == 1000
    assert summary["echo"]["m_per_iter"] == 2000


def test_validate_malformed_json_diagnostics(tmp_path, capsys):
    cfg_path = tmp_path / "bad.json"
    cfg_path.write_text('{\n  "master_seed": 1,\n  "oops"\n}')
    code = run(["validate", "--config", str(cfg_path), "--out-dir", str(tmp_path / "out")])
    assert code == 2
    err = capsys.readouterr().err
    assert "line 4" in err and "column 1" in err


def test_validate_missing_field_diagnostics(tmp_path, capsys):
    cfg_path = tmp_path / "short.json"
    cfg_path.write_text(json.dumps({"shapes": [{"shape": "normal"}]}))
    code = run(["validate", "--config", str(cfg_path), "--out-dir", str(tmp_path / "out")])
    assert code == 2
    assert "config field" in capsys.readouterr().err


def test_compare_identical_files(eqc_json, capsys):
    code = run(["compare", "--first", str(eqc_json), "--second", str(eqc_json)])
    assert code == 0
    out = capsys.readouterr().out
    assert "0.00%" in out
    assert "Agreement (< 5%)    : yes" in out


def test_compare_mismatched_targets(eqc_json, tmp_path, capsys):
    other = tmp_path / "other.json"
    code = run(
        ["calibrate", "--target", "0.6", "--items", "30", "--model", "rasch",
         "--latent-shape", "bimodal", "--item-source", "pool", "--m", "2000",
         "--c-lower", "0.1", "--c-upper", "10", "--seed", "42", "--out", str(other)]
    )
    assert code == 0
    assert run(["compare", "--first", str(eqc_json), "--second", str(other)]) == 2


def test_shapes_four_columns(tmp_path, capsys):
    out = tmp_path / "dens.csv"
    code = run(["shapes", "--shapes", "normal,bimodal:delta=0.8,skew_pos:k=4,heavy_tail:nu=5",
                "--n", "2000", "--seed", "1", "--out", str(out)])
    assert code == 0
    header = out.read_text().splitlines()[0]
    assert header == "theta,normal,bimodal,skew_pos,heavy_tail"


def test_shapes_deterministic(tmp_path):
    outs = []
    for name in ("a.csv", "b.csv"):
        out = tmp_path / name
        assert run(["shapes", "--shapes", "normal", "--n", "500", "--seed", "9",
                    "--out", str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_unknown_flag_exits_2():
    assert run(["calibrate", "--target", "0.5", "--no-such-flag"]) == 2


def test_help_exits_0():
    assert run(["--help"]) == 0
