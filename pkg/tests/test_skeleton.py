import json

import numpy as np
import pytest

from skelchaos import (
    CsvParseError,
    Skeleton,
    lissajous,
    load_csv,
    load_skeleton,
    rossler_cycle,
    save_skeleton,
    unit_circle,
    van_der_pol,
)
from skelchaos.analysis import power_spectrum
from skelchaos.skeleton import _resample_polyline, rossler_deriv

# frozen oracle: brute-force RK4 at dt=1e-4 gives max|x| = 2.00862 on the
# mu=1 limit cycle
VDP_AMPLITUDE = 2.00862


# ---------------------------------------------------------------------------
# analytic generators


def test_lissajous_known_points():
    sk = lissajous(200)
    assert sk.period_steps == 100
    assert np.allclose(sk.samples[0], [1.0, 0.0], atol=1e-15)
    assert np.allclose(sk.samples[25], [0.0, 0.0], atol=1e-12)


def test_lissajous_periodicity():
    sk = lissajous(350)
    assert np.allclose(sk.samples[100:200], sk.samples[:100], atol=1e-12)


def test_tile_extends_periodically():
    sk = lissajous(100)
    tiled = sk.tile(250)
    assert tiled.shape == (250, 2)
    assert np.array_equal(tiled[100:200], sk.samples)


def test_unit_circle_points_and_norms():
    sk = unit_circle(300, period=100)
    assert np.allclose(np.linalg.norm(sk.samples, axis=1), 1.0, atol=1e-12)
    assert sk.samples[:, 0].max() == pytest.approx(1.0, abs=1e-9)
    assert sk.samples[:, 0].min() == pytest.approx(-1.0, abs=1e-9)
    assert sk.samples[:, 1].max() == pytest.approx(1.0, abs=1e-9)
    assert sk.samples[:, 1].min() == pytest.approx(-1.0, abs=1e-9)


def test_unit_circle_quarter_turn():
    sk = unit_circle(4, period=4)
    assert np.allclose(sk.samples[1], [0.0, 1.0], atol=1e-12)


def test_skeleton_validation():
    with pytest.raises(ValueError):
        Skeleton(np.array([[np.inf, 0.0]]), period_steps=None)
    with pytest.raises(ValueError):
        unit_circle(10, period=1)
    with pytest.raises(ValueError):
        lissajous(0)


def test_van_der_pol_mu_zero_conserves_energy():
    # harmonic oscillator: the state norm stays constant over a period
    sk = van_der_pol(mu=0.0, dt=0.05, steps=130)
    norms = np.linalg.norm(sk.samples, axis=1)
    assert np.max(np.abs(norms - norms[0])) < 1e-6


def test_van_der_pol_limit_cycle_maxima_repeat():
    sk = van_der_pol(mu=1.0, dt=0.1, steps=300)
    x = sk.samples[:, 0]
    idx = np.nonzero((x[1:-1] > x[:-2]) & (x[1:-1] > x[2:]))[0] + 1
    assert len(idx) >= 3
    # parabolic refinement removes the sampling quantisation of the peak
    y0, y1, y2 = x[idx - 1], x[idx], x[idx + 1]
    peaks = y1 + (y0 - y2) ** 2 / (8.0 * (2.0 * y1 - y0 - y2))
    assert np.max(np.abs(np.diff(peaks))) < 1e-3


def test_van_der_pol_amplitude_matches_oracle():
    sk = van_der_pol(mu=1.0, dt=0.1, steps=200)
    assert np.max(np.abs(sk.samples[:, 0])) == pytest.approx(2.0, abs=0.05)
    assert np.max(np.abs(sk.samples[:, 0])) == pytest.approx(VDP_AMPLITUDE, abs=5e-3)


def test_van_der_pol_validation():
    with pytest.raises(ValueError):
        van_der_pol(mu=-1.0)
    with pytest.raises(ValueError):
        van_der_pol(dt=0.0)


def test_rossler_fixed_point_residual():
    # equilibria solve 0.2 y^2 + c y + 0.2 = 0 with x = -0.2 y, z = -y
    c = 3.0
    for y in np.roots([0.2, c, 0.2]):
        state = np.array([-0.2 * y, y, -y])
        assert np.max(np.abs(rossler_deriv(state, c=c))) < 1e-9


def test_rossler_literal_xy_form():
    state = np.array([1.0, 2.0, 3.0])
    standard = rossler_deriv(state, c=3.0)
    literal = rossler_deriv(state, c=3.0, literal_xy=True)
    assert standard[2] == pytest.approx(0.2 + 1.0 * 3.0 - 9.0)
    assert literal[2] == pytest.approx(0.2 + 1.0 * 2.0 - 9.0)
    assert np.allclose(standard[:2], literal[:2])


@pytest.fixture(scope="module")
def rossler_sk():
    return rossler_cycle(c=3.0, dt=0.2, steps=400)


def test_rossler_detected_period_recurs(rossler_sk):
    # independent re-detection from the emitted samples: Poincare return on y=0
    sk = rossler_sk
    assert sk.period_steps is not None and sk.period_steps >= 2
    y = sk.samples[:, 1]
    idx = np.nonzero((y[:-1] < 0.0) & (y[1:] >= 0.0))[0]
    assert len(idx) >= 2
    k0 = idx[0]
    recurrence = np.linalg.norm(sk.samples[k0 + sk.period_steps] - sk.samples[k0])
    assert recurrence < 1e-2


def test_rossler_tiles_exactly(rossler_sk):
    sk = rossler_sk
    p = sk.period_steps
    assert np.allclose(sk.samples[p : 2 * p], sk.samples[:p], atol=1e-9)


def test_rossler_single_dominant_psd_peak(rossler_sk):
    freqs, power = power_spectrum(rossler_sk.samples[:, 0])
    assert power[1:].max() > 50.0 * np.median(power[1:])


# ---------------------------------------------------------------------------
# CSV ingestion


def test_resample_square_equal_arc_lengths():
    square = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    pts = _resample_polyline(square, 8, closed=True)
    gaps = np.linalg.norm(np.diff(np.vstack([pts, pts[:1]]), axis=0), axis=1)
    assert np.allclose(gaps, 0.5, atol=1e-12)


def test_load_csv_square(tmp_path):
    path = tmp_path / "square.csv"
    path.write_text("0,0\n1,0\n1,1\n0,1\n")
    sk = load_csv(path, resample_to=8, close_curve=True)
    assert sk.samples.shape == (8, 2)
    assert sk.period_steps == 8
    # normalised: zero mean, unit max magnitude, equal spacing kept
    assert np.allclose(sk.samples.mean(axis=0), 0.0, atol=1e-12)
    assert np.allclose(np.max(np.abs(sk.samples), axis=0), 1.0, atol=1e-12)
    gaps = np.linalg.norm(
        np.diff(np.vstack([sk.samples, sk.samples[:1]]), axis=0), axis=1
    )
    assert np.allclose(gaps, gaps[0], atol=1e-12)


def test_load_csv_uniform_circle_unchanged(tmp_path):
    n = 40
    k = np.arange(n)
    circle = np.column_stack([np.cos(2 * np.pi * k / n), np.sin(2 * np.pi * k / n)])
    path = tmp_path / "circle.csv"
    np.savetxt(path, circle, delimiter=",")
    sk = load_csv(path, resample_to=n, close_curve=True)
    assert np.allclose(sk.samples, circle, atol=1e-9)


def test_load_csv_header_autodetect(tmp_path):
    path = tmp_path / "hdr.csv"
    path.write_text("x,y\n0,0\n1,0\n1,1\n0,1\n")
    sk = load_csv(path, resample_to=8, close_curve=True)
    assert sk.samples.shape == (8, 2)


def test_load_csv_non_numeric_cell_names_position(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("0,0\n1,oops\n1,1\n")
    with pytest.raises(CsvParseError) as err:
        load_csv(path, resample_to=8)
    assert err.value.row == 2
    assert err.value.column == 2
    assert "row 2" in str(err.value) and "column 2" in str(err.value)


def test_load_csv_too_few_points(tmp_path):
    path = tmp_path / "short.csv"
    path.write_text("0,0\n1,1\n")
    with pytest.raises(CsvParseError):
        load_csv(path, resample_to=8)


def test_load_csv_inconsistent_columns(tmp_path):
    path = tmp_path / "ragged.csv"
    path.write_text("0,0\n1,0,5\n1,1\n")
    with pytest.raises(CsvParseError):
        load_csv(path, resample_to=8)


# ---------------------------------------------------------------------------
# round-trip


def test_save_load_roundtrip(tmp_path):
    sk = lissajous(150)
    save_skeleton(sk, tmp_path / "sk.csv")
    back = load_skeleton(tmp_path / "sk.csv")
    assert back.period_steps == 100
    assert back.label == "lissajous"
    assert np.allclose(back.samples, sk.samples, atol=0, rtol=0)
    sidecar = json.loads((tmp_path / "sk.json").read_text())
    assert sidecar == {"dim": 2, "label": "lissajous", "period_steps": 100}


def test_load_skeleton_without_sidecar(tmp_path):
    np.savetxt(tmp_path / "plain.csv", np.eye(3), delimiter=",")
    sk = load_skeleton(tmp_path / "plain.csv")
    assert sk.period_steps is None
    assert sk.samples.shape == (3, 3)
