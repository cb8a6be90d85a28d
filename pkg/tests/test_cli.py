import csv
import json
import xml.etree.ElementTree as ET
from pathlib import Path

import numpy as np
import pytest

from skelchaos.cli import main
from skelchaos.schemas import (
    ANALYSIS_REPORT_SCHEMA,
    SEARCH_SUMMARY_SCHEMA,
    SKELETON_SIDECAR_SCHEMA,
    TRAIN_REPORT_SCHEMA,
    validate,
)

SMALL_CONFIG = """
[reservoir]
n_nodes = 60
leak_rate = 0.5
input_scale = 0.2
seed = 2
spectral_scale = 0.9

[training]
t_init = 200
t_train = 600
beta = 0.001

[skeleton]
generator = lissajous
steps = 1000

[analysis]
mle_steps = 1500
mle_transient = 500
cle_steps = 1000
cle_transient = 300
rmse_steps = 800
q_window = 600

[scan]
steps = 1500
settle_after = 900
transient_split = 500
"""


@pytest.fixture()
def config_file(tmp_path):
    path = tmp_path / "exp.ini"
    path.write_text(SMALL_CONFIG)
    return str(path)


def read_csv_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


# ---------------------------------------------------------------------------
# skeleton command


def test_skeleton_lissajous_csv(tmp_path):
    out = tmp_path / "sk"
    assert main(["skeleton", "--lissajous", "--steps", "200", "--out", str(out)]) == 0
    rows = read_csv_rows(out / "skeleton.csv")
    assert len(rows) == 200
    assert rows[0] == ["1", "0"]
    sidecar = json.loads((out / "skeleton.json").read_text())
    validate(sidecar, SKELETON_SIDECAR_SCHEMA)
    assert sidecar["period_steps"] == 100


def test_skeleton_csv_resample(tmp_path):
    hand = tmp_path / "hand.csv"
    theta = np.linspace(0, 2 * np.pi, 37)[:-1]
    np.savetxt(hand, np.column_stack([np.cos(theta), np.sin(theta)]), delimiter=",")
    out = tmp_path / "sk"
    code = main(
        ["skeleton", "--csv", str(hand), "--resample", "400", "--close", "--out", str(out)]
    )
    assert code == 0
    assert len(read_csv_rows(out / "skeleton.csv")) == 400


def test_skeleton_vdp_finite(tmp_path):
    out = tmp_path / "sk"
    code = main(
        ["skeleton", "--vdp", "--mu", "1.0", "--dt", "0.1", "--steps", "150", "--out", str(out)]
    )
    assert code == 0
    data = np.loadtxt(out / "skeleton.csv", delimiter=",")
    assert data.shape == (150, 2)
    assert np.all(np.isfinite(data))


def test_skeleton_unknown_generator_exit_2(tmp_path, config_file):
    # config names a bogus generator and no flag overrides it
    bad = tmp_path / "bad.ini"
    bad.write_text("[skeleton]\ngenerator = spiral\n")
    assert main(["skeleton", "--config", str(bad), "--out", str(tmp_path / "o")]) == 2


def test_skeleton_parse_failure_exit_2(tmp_path):
    hand = tmp_path / "hand.csv"
    hand.write_text("0,0\n1,zzz\n2,0\n")
    assert main(["skeleton", "--csv", str(hand), "--out", str(tmp_path / "o")]) == 2


def test_missing_config_exit_2(tmp_path):
    assert main(["skeleton", "--lissajous", "--config", str(tmp_path / "nope.ini"),
                 "--out", str(tmp_path / "o")]) == 2


def test_outdir_env_var_default(tmp_path, monkeypatch):
    monkeypatch.setenv("SKELCHAOS_OUTDIR", str(tmp_path / "envout"))
    assert main(["skeleton", "--lissajous", "--steps", "120"]) == 0
    assert (tmp_path / "envout" / "skeleton.csv").exists()


# ---------------------------------------------------------------------------
# train command


def test_train_writes_model_and_report(tmp_path, config_file):
    out = tmp_path / "run"
    assert main(["train", "--config", config_file, "--out", str(out)]) == 0
    report = json.loads((out / "train_report.json").read_text())
    validate(report, TRAIN_REPORT_SCHEMA)
    assert set(report) >= {"rmse", "eff_radius_pre", "eff_radius_post"}
    assert (out / "model" / "meta.json").exists()


def test_train_deterministic_dumps(tmp_path, config_file):
    for name in ("a", "b"):
        assert main(["train", "--config", config_file, "--out", str(tmp_path / name)]) == 0
    for fname in ("model/reservoir.npz", "model/w_out.npy", "model/w_hat.npy",
                  "model/x_start.npy", "model/meta.json", "train_report.json"):
        assert (tmp_path / "a" / fname).read_bytes() == (
            tmp_path / "b" / fname
        ).read_bytes(), fname


def test_train_accepts_skeleton_file(tmp_path, config_file):
    sk_dir = tmp_path / "sk"
    assert main(["skeleton", "--lissajous", "--steps", "1000", "--out", str(sk_dir)]) == 0
    out = tmp_path / "run"
    code = main(
        ["train", "--config", config_file, "--skeleton", str(sk_dir / "skeleton.csv"),
         "--out", str(out)]
    )
    assert code == 0


# ---------------------------------------------------------------------------
# analyze command


@pytest.fixture()
def trained_model_dir(tmp_path, config_file):
    out = tmp_path / "run"
    assert main(["train", "--config", config_file, "--out", str(out)]) == 0
    return out


def test_analyze_outputs(tmp_path, config_file, trained_model_dir):
    out = tmp_path / "ana"
    code = main(
        ["analyze", "--config", config_file, "--model", str(trained_model_dir / "model"),
         "--out", str(out)]
    )
    assert code == 0
    report = json.loads((out / "report.json").read_text())
    validate(report, ANALYSIS_REPORT_SCHEMA)
    assert report["classification"] in (
        "supervised-periodic",
        "semi-supervised-chaos",
        "collapsed-chaos",
        "untrained-other",
    )
    rows = read_csv_rows(out / "closed_trace.csv")
    assert rows[0] == ["step", "z_0", "z_1", "pc1", "pc2"]
    assert len(rows) == 1501

    for name, n_polylines in (
        ("output_plane.svg", 2),
        ("pca_plane.svg", 1),
        ("spectrum.svg", 1),
    ):
        tree = ET.parse(out / name)  # raises if not well-formed XML
        polylines = [
            el for el in tree.iter() if el.tag.endswith("polyline")
        ]
        assert len(polylines) == n_polylines, name


def test_analyze_supervised_classification(tmp_path, config_file, trained_model_dir):
    # rho = 0.9 at 60 nodes reconstructs the figure-eight as a periodic orbit
    out = tmp_path / "ana"
    main(["analyze", "--config", config_file, "--model", str(trained_model_dir / "model"),
          "--out", str(out)])
    report = json.loads((out / "report.json").read_text())
    assert report["classification"] == "supervised-periodic"


def test_analyze_missing_model_exit_2(tmp_path, config_file):
    assert main(["analyze", "--config", config_file, "--model", str(tmp_path / "nope"),
                 "--out", str(tmp_path / "o")]) == 2


# ---------------------------------------------------------------------------
# scan command


def test_scan_rho_grid_points(tmp_path, config_file):
    out = tmp_path / "scan"
    code = main(
        ["scan", "--config", config_file, "--rho-range", "0.88:0.90:0.0005",
         "--out", str(out)]
    )
    assert code == 0
    rows = read_csv_rows(out / "bifurcation_extrema.csv")
    assert rows[0] == ["parameter", "value", "phase"]
    params = sorted({float(r[0]) for r in rows[1:]})
    assert len(params) == 41
    assert all(r[2] in ("transient", "settled") for r in rows[1:])
    assert (out / "bifurcation_poincare.csv").exists()
    ET.parse(out / "bifurcation_extrema.svg")
    ET.parse(out / "bifurcation_poincare.svg")


def test_scan_tinit_sweep(tmp_path, config_file):
    out = tmp_path / "scan"
    code = main(
        ["scan", "--config", config_file, "--rho", "0.9", "--tinit-range", "0:1000:100",
         "--keep-transient", "--out", str(out)]
    )
    assert code == 0
    rows = read_csv_rows(out / "bifurcation_extrema.csv")
    params = sorted({float(r[0]) for r in rows[1:]})
    assert len(params) == 11
    phases = {r[2] for r in rows[1:]}
    assert "transient" in phases and "settled" in phases


def test_scan_requires_a_range(tmp_path, config_file):
    assert main(["scan", "--config", config_file, "--out", str(tmp_path / "o")]) == 2


# ---------------------------------------------------------------------------
# search command


def test_search_writes_per_seed_and_summary(tmp_path, config_file):
    # small driven reservoirs stay convergent well past 1.5: widen the bracket
    cfg = Path(config_file).read_text() + (
        "\n[search]\nrho_lo = 1.0\nrho_hi = 2.5\ngrid_step = 0.005\n"
        "prescan_points = 8\nfine_window = 5\nextend_beyond = 2\n"
    )
    path = tmp_path / "wide.ini"
    path.write_text(cfg)
    out = tmp_path / "search"
    code = main(
        ["search", "--config", str(path), "--seeds", "2,3",
         "--out", str(out)]
        + ["--max-candidate-plots", "1"]
    )
    assert code == 0
    summary = json.loads((out / "search_summary.json").read_text())
    validate(summary, SEARCH_SUMMARY_SCHEMA)
    assert summary["seeds"] == [2, 3]
    for entry in summary["per_seed"]:
        if entry["status"] == "ok":
            assert (out / f"search_seed{entry['seed']}.json").exists()
            assert (out / f"search_seed{entry['seed']}.csv").exists()


def test_search_bracket_error_exit_4(tmp_path, config_file):
    # a bracket entirely inside the convergent region has no sign change
    cfg = Path(config_file).read_text() + "\n[search]\nrho_lo = 0.2\nrho_hi = 0.4\n"
    path = tmp_path / "narrow.ini"
    path.write_text(cfg)
    out = tmp_path / "search"
    code = main(["search", "--config", str(path), "--seeds", "2", "--out", str(out)])
    assert code == 4
    summary = json.loads((out / "search_summary.json").read_text())
    assert summary["per_seed"][0]["status"] == "bracket-error"


def test_search_empty_candidates_exit_0(tmp_path, config_file):
    # tiny grid far from the edge: no candidates, still a success
    cfg = Path(config_file).read_text() + (
        "\n[search]\nrho_lo = 0.4\nrho_hi = 1.6\ngrid_step = 0.01\n"
        "prescan_points = 8\nfine_window = 3\nextend_beyond = 1\n"
    )
    path = tmp_path / "loose.ini"
    path.write_text(cfg)
    out = tmp_path / "search"
    code = main(["search", "--config", str(path), "--seeds", "2", "--out", str(out)])
    assert code == 0
    summary = json.loads((out / "search_summary.json").read_text())
    assert summary["per_seed"][0]["status"] == "ok"
