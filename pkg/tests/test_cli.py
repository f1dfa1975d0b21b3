import csv
import hashlib
import json
import os
import shutil
import subprocess
import sys

import numpy as np
import pytest

from eemd_haven.cli import EXIT_NUMERICAL, EXIT_OK, EXIT_VALIDATION, main
from eemd_haven.pipeline import load_run_config, verify_manifest
from eemd_haven.synthetic import data_path

# small ensembles vary in IMF count across series; pin it so panels line up
FAST = ["--ensemble", "10", "--noise-std", "0.2", "--max-imfs", "4"]
REGRESS = ["--dependent", "SPI", "--regressors", "BP,gold,silver,WTI", "--lag-dependent", "1",
           "--alpha", "0.10"]


@pytest.fixture
def panel_csv(tmp_path):
    path = tmp_path / "panel.csv"
    shutil.copy(data_path("synthetic_panel.csv"), path)
    return str(path)


def digest(path):
    with open(path, "rb") as handle:
        return hashlib.sha256(handle.read()).hexdigest()


def tree(directory):
    out = {}
    for root, _, files in os.walk(directory):
        for name in files:
            full = os.path.join(root, name)
            out[os.path.relpath(full, directory)] = digest(full)
    return out


def load(path):
    with open(path) as handle:
        return json.load(handle)


def write_cfg(path, lines):
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return str(path)


def small_cfg(tmp_path, panel_csv, seed=True, extra=()):
    lines = ["input.files = " + panel_csv,
             "input.columns = SPI, BP, gold, silver, WTI",
             "output.dir = out",
             "eemd.ensemble_size = 10",
             "sift.max_imfs = 4",
             "regression.dependent = SPI",
             "regression.regressors = BP, gold, silver, WTI",
             "emit.hilbert = true",
             "emit.plotdata = true"]
    if seed:
        lines.append("seed = 42")
    return write_cfg(tmp_path / "run.cfg", lines + list(extra))


# -- decompose ---------------------------------------------------------------

def test_decompose_outputs(panel_csv, tmp_path, capsys):
    out = str(tmp_path / "run1")
    code = main(["decompose", "--input", panel_csv, "--column", "BP", "--seed", "42",
                 "--out", out] + FAST)
    assert code == EXIT_OK
    assert sorted(os.listdir(out)) == ["BP.csv", "BP.json"]
    meta = load(os.path.join(out, "BP.json"))
    assert meta["params"]["seed"] == 42 and meta["params"]["ensemble_size"] == 10
    assert meta["method"] == "EEMD" and meta["transform"] == "levels"
    assert "BP.csv" in capsys.readouterr().out


def test_decompose_byte_identical(panel_csv, tmp_path):
    args = ["decompose", "--input", panel_csv, "--column", "BP,gold", "--seed", "7"] + FAST
    assert main(args + ["--out", str(tmp_path / "a")]) == EXIT_OK
    assert main(args + ["--out", str(tmp_path / "b"), "--jobs", "2"]) == EXIT_OK
    assert tree(tmp_path / "a") == tree(tmp_path / "b")


def test_decompose_missing_column(panel_csv, tmp_path, capsys):
    code = main(["decompose", "--input", panel_csv, "--column", "platinum",
                 "--out", str(tmp_path)])
    assert code == EXIT_VALIDATION
    err = capsys.readouterr().err
    assert "platinum" in err and "error in" in err


def test_decompose_bad_cell_names_row(tmp_path, capsys):
    path = tmp_path / "p.csv"
    path.write_text("date,BP\n2020-01-01,1\n2020-01-02,x\n")
    assert main(["decompose", "--input", str(path), "--column", "BP",
                 "--out", str(tmp_path)]) == EXIT_VALIDATION
    assert "row 2" in capsys.readouterr().err


def test_decompose_default_seed_recorded(panel_csv, tmp_path):
    main(["decompose", "--input", panel_csv, "--column", "BP", "--out", str(tmp_path)] + FAST)
    assert load(str(tmp_path / "BP.json"))["params"]["seed"] == 0


def test_decompose_emd_log(panel_csv, tmp_path):
    assert main(["decompose", "--input", panel_csv, "--column", "BP", "--method", "emd",
                 "--transform", "log", "--out", str(tmp_path)]) == EXIT_OK
    meta = load(str(tmp_path / "BP.json"))
    assert meta["method"] == "EMD" and meta["transform"] == "log"


# -- features ----------------------------------------------------------------

def test_features_rows_and_shares(panel_csv, tmp_path):
    main(["decompose", "--input", panel_csv, "--column", "BP", "--out", str(tmp_path)] + FAST)
    n_imfs = load(str(tmp_path / "BP.json"))["n_imfs"]
    assert main(["features", "--decomposition", str(tmp_path / "BP.csv"),
                 "--out", str(tmp_path)]) == EXIT_OK
    payload = load(str(tmp_path / "BP_features.json"))
    assert len(payload["rows"]) == n_imfs
    assert sum(r["variance_share"] for r in payload["rows"]) == pytest.approx(100, abs=0.01)


def test_features_constant_input(tmp_path):
    path = tmp_path / "flat.csv"
    rows = ["2020-01-{0:02d},5.0".format(d) for d in range(1, 21)]
    path.write_text("date,flat\n" + "\n".join(rows) + "\n")
    assert main(["decompose", "--input", str(path), "--column", "flat",
                 "--out", str(tmp_path)]) == EXIT_OK
    assert main(["features", "--decomposition", str(tmp_path / "flat.csv"),
                 "--out", str(tmp_path)]) == EXIT_OK
    payload = load(str(tmp_path / "flat_features.json"))
    assert payload["rows"] == [] and payload["note"]
    with open(tmp_path / "flat_features.csv") as handle:
        assert len(list(csv.reader(handle))) == 1


def test_features_missing_decomposition(tmp_path):
    assert main(["features", "--decomposition", str(tmp_path / "nope.csv"),
                 "--out", str(tmp_path)]) != EXIT_OK


# -- regress -----------------------------------------------------------------

def _decompose_all(panel_csv, out, extra=()):
    return main(["decompose", "--input", panel_csv, "--column", "SPI,BP,gold,silver,WTI",
                 "--seed", "42", "--out", out] + FAST + list(extra))


def test_regress_terms(panel_csv, tmp_path):
    dec_dir = str(tmp_path / "dec")
    assert _decompose_all(panel_csv, dec_dir) == EXIT_OK
    assert main(["regress", "--decompositions", dec_dir, "--out", str(tmp_path)] +
                REGRESS) == EXIT_OK
    payload = load(str(tmp_path / "regression.json"))
    assert payload["terms"] == ["C", "SPI(-1)", "BP", "gold", "silver", "WTI"]
    for scale in payload["scales"].values():
        assert scale["ols"]["terms"] == payload["terms"]
        labels = {c["regressor"]: c["label"] for c in scale["classifications"]}
        assert set(labels) == {"BP", "gold", "silver", "WTI"}
    with open(tmp_path / "regression_table.csv") as handle:
        rows = list(csv.reader(handle))
    assert [r[0] for r in rows[1:]] == payload["terms"] + ["R2"]


def test_regress_log_transform_equals_log_inputs(panel_csv, tmp_path):
    assert main(["regress", "--input", panel_csv, "--transform", "log", "--seed", "42",
                 "--out", str(tmp_path / "a")] + FAST + REGRESS) == EXIT_OK
    # same thing by hand: log the prices first, then run on levels
    with open(panel_csv) as handle:
        rows = list(csv.reader(handle))
    logged = tmp_path / "logged.csv"
    with open(logged, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(rows[0])
        for row in rows[1:]:
            writer.writerow([row[0]] + [repr(float(np.log(float(v)))) for v in row[1:]])
    assert main(["regress", "--input", str(logged), "--seed", "42",
                 "--out", str(tmp_path / "b")] + FAST + REGRESS) == EXIT_OK
    a = load(str(tmp_path / "a" / "regression.json"))
    b = load(str(tmp_path / "b" / "regression.json"))
    assert a["transform"] == "log" and b["transform"] == "levels"
    assert a["scales"].keys() == b["scales"].keys()
    for j in a["scales"]:
        np.testing.assert_allclose(a["scales"][j]["ols"]["coefficients"],
                                   b["scales"][j]["ols"]["coefficients"], rtol=1e-6, atol=1e-9)


def test_regress_robust_se(panel_csv, tmp_path):
    dec_dir = str(tmp_path / "dec")
    _decompose_all(panel_csv, dec_dir)
    main(["regress", "--decompositions", dec_dir, "--out", str(tmp_path / "c")] + REGRESS)
    main(["regress", "--decompositions", dec_dir, "--robust-se",
          "--out", str(tmp_path / "r")] + REGRESS)
    c = load(str(tmp_path / "c" / "regression.json"))
    r = load(str(tmp_path / "r" / "regression.json"))
    assert c["covariance"] == "classical" and r["covariance"] == "HC1"
    for j in c["scales"]:
        assert c["scales"][j]["ols"]["coefficients"] == r["scales"][j]["ols"]["coefficients"]
        assert c["scales"][j]["ols"]["std_errors"] != r["scales"][j]["ols"]["std_errors"]


def test_regress_imf_count_mismatch(panel_csv, tmp_path, capsys):
    dec_dir = str(tmp_path / "dec")
    _decompose_all(panel_csv, dec_dir)
    main(["decompose", "--input", panel_csv, "--column", "BP", "--out", dec_dir] + FAST +
         ["--max-imfs", "2"])
    code = main(["regress", "--decompositions", dec_dir, "--out", str(tmp_path)] + REGRESS)
    assert code != EXIT_OK
    err = capsys.readouterr().err
    assert "BP=2" in err and "SPI=" in err


def test_regress_transform_mismatch(panel_csv, tmp_path, capsys):
    dec_dir = str(tmp_path / "dec")
    _decompose_all(panel_csv, dec_dir)
    code = main(["regress", "--decompositions", dec_dir, "--transform", "log",
                 "--out", str(tmp_path)] + REGRESS)
    assert code == EXIT_VALIDATION
    assert "--transform log" in capsys.readouterr().err


def test_regress_bad_spec(panel_csv, tmp_path):
    assert main(["regress", "--input", panel_csv, "--dependent", "SPI",
                 "--regressors", "SPI,BP", "--out", str(tmp_path)]) == EXIT_VALIDATION


# -- hilbert / plotdata ------------------------------------------------------

def test_hilbert_and_plotdata(panel_csv, tmp_path):
    main(["decompose", "--input", panel_csv, "--column", "BP", "--out", str(tmp_path)] + FAST)
    dec = str(tmp_path / "BP.csv")
    assert main(["hilbert", "--decomposition", dec, "--out", str(tmp_path / "h")]) == EXIT_OK
    assert os.listdir(tmp_path / "h") == ["BP_hilbert.csv"]
    assert main(["plotdata", "--decomposition", dec, "--out", str(tmp_path / "p")]) == EXIT_OK
    assert sorted(os.listdir(tmp_path / "p")) == ["BP_components.csv", "BP_sift.csv"]


# -- pipeline ----------------------------------------------------------------

def test_pipeline_complete_and_self_verifying(panel_csv, tmp_path):
    cfg = small_cfg(tmp_path, panel_csv)
    before = digest(panel_csv)
    assert main(["pipeline", "--config", cfg]) == EXIT_OK
    out = tmp_path / "out"
    manifest = load(str(out / "manifest.json"))
    assert manifest["status"] == "complete"
    assert manifest["stages_completed"] == ["load", "decompose", "features", "regress",
                                            "hilbert", "plotdata"]
    assert manifest["seed"] == 42 and manifest["seed_defaulted"] is False
    assert {"numpy", "scipy", "python", "eemd_haven", "kernel_backend"} <= set(manifest["versions"])
    assert verify_manifest(str(out)) == []
    assert set(manifest["files"]) == set(tree(out)) - {"manifest.json"}
    # inputs are read, never written
    assert digest(panel_csv) == before
    assert manifest["inputs"] == {"panel.csv": before}


def test_pipeline_rerun_identical(panel_csv, tmp_path):
    cfg = small_cfg(tmp_path, panel_csv)
    assert main(["pipeline", "--config", cfg, "--out", str(tmp_path / "a")]) == EXIT_OK
    assert main(["pipeline", "--config", cfg, "--out", str(tmp_path / "b")]) == EXIT_OK
    assert tree(tmp_path / "a") == tree(tmp_path / "b")


def test_pipeline_default_seed(panel_csv, tmp_path):
    cfg = small_cfg(tmp_path, panel_csv, seed=False)
    assert main(["pipeline", "--config", cfg]) == EXIT_OK
    manifest = load(str(tmp_path / "out" / "manifest.json"))
    assert manifest["seed"] == 0 and manifest["seed_defaulted"] is True
    assert load(str(tmp_path / "out" / "decompositions" / "BP.json"))["params"]["seed"] == 0


def test_pipeline_seed_override(panel_csv, tmp_path):
    cfg = small_cfg(tmp_path, panel_csv, seed=False)
    assert main(["pipeline", "--config", cfg, "--seed", "9"]) == EXIT_OK
    manifest = load(str(tmp_path / "out" / "manifest.json"))
    assert manifest["seed"] == 9 and manifest["seed_defaulted"] is False


def test_pipeline_failure_records_stages(panel_csv, tmp_path, capsys):
    cfg = small_cfg(tmp_path, panel_csv, extra=["transform.scale = log",
                                                "transform.forward.targets = gold",
                                                "transform.forward.convenience = 1e9"])
    code = main(["pipeline", "--config", cfg])
    assert code == EXIT_VALIDATION
    manifest = load(str(tmp_path / "out" / "manifest.json"))
    assert manifest["status"] == "failed"
    assert manifest["stages_completed"] == []
    assert "log transform" in manifest["error"]
    assert "error in series" in capsys.readouterr().err


def test_pipeline_unknown_key(panel_csv, tmp_path, capsys):
    cfg = small_cfg(tmp_path, panel_csv, extra=["eemd.noise = 0.1"])
    assert main(["pipeline", "--config", cfg]) == EXIT_VALIDATION
    assert "eemd.noise" in capsys.readouterr().err


def test_pipeline_missing_config(tmp_path):
    assert main(["pipeline", "--config", str(tmp_path / "none.cfg")]) == EXIT_VALIDATION


def test_config_paths_relative_to_config(tmp_path):
    shutil.copy(data_path("synthetic_panel.csv"), tmp_path / "panel.csv")
    cfg = write_cfg(tmp_path / "r.cfg", ["input.files = panel.csv", "input.columns = BP",
                                         "emit.regression = false"])
    run = load_run_config(cfg)
    assert run.files == (str(tmp_path / "panel.csv"),)
    assert run.describe()["files"] == ["panel.csv"]
    assert "out_dir" not in run.describe()


def test_robustness_config_runs(tmp_path):
    cfg = tmp_path / "robust.cfg"
    text = open(data_path("synthetic_robustness.cfg")).read()
    cfg.write_text(text.replace("eemd.ensemble_size = 100", "eemd.ensemble_size = 5") +
                   "sift.max_imfs = 4\n")
    for name in ("synthetic_panel.csv", "cpi_monthly.csv"):
        shutil.copy(data_path(name), tmp_path / name)
    assert main(["pipeline", "--config", str(cfg)]) == EXIT_OK
    manifest = load(str(tmp_path / "run_synthetic_robustness" / "manifest.json"))
    assert manifest["config"]["deflate"]["targets"] == ["SPI"]
    assert set(manifest["inputs"]) == {"synthetic_panel.csv"}


def test_numerical_exit_code():
    assert EXIT_NUMERICAL == 2


def test_module_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "eemd_haven", "--help"],
                         capture_output=True, text=True)
    assert out.returncode == 0
    for verb in ("decompose", "features", "regress", "hilbert", "plotdata", "pipeline"):
        assert verb in out.stdout
