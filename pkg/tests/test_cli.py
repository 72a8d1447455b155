import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from conftest import periodic_grid, smooth_gamma
from oracles import box_scattering, linear_fourier
from ssq import cli
from ssq.direct_scattering import TransitionData
from ssq.fields import ComplexField, ScatteringData, pair_norming, paired_norming
from ssq.io import read_csv, read_field, read_scattering, write_field, write_scattering
from ssq.soliton import soliton_velocity


def run(tmp_path, *argv):
    return cli.main([argv[0], "--out-dir", str(tmp_path), *argv[1:]])


def manifest(path: Path) -> dict:
    return json.loads(path.with_name(path.stem + ".manifest.json").read_text())


def check_manifest(primary: Path, inputs=()):
    m = manifest(primary)
    assert len(m["outputs"]) == len(set(m["outputs"]))
    assert str(primary) in m["outputs"]
    for f in m["outputs"]:
        assert Path(f).is_file()
    for f in inputs:
        h = m["input_hashes"][str(f)]
        assert len(h) == 64 and int(h, 16) >= 0
    assert m["version"] and m["wall_time"] >= 0
    return m


@pytest.fixture
def one_json(tmp_path, one_sd):
    p = tmp_path / "one.json"
    write_scattering(p, one_sd)
    return p


def test_version_entry_point():
    r = subprocess.run([sys.executable, "-m", "ssq.cli", "--version"], capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.strip()


def test_soliton_then_evolve_then_compare(tmp_path, one_json):
    args = ("--xmin", "-40", "--xmax", str(40 - 80 / 1024), "--n", "1024")
    assert run(tmp_path, "soliton", "--input", str(one_json), *args, "--out", "u0.csv") == 0
    assert run(tmp_path, "soliton", "--input", str(one_json), *args, "--t", "5", "--out", "u5.csv") == 0
    check_manifest(tmp_path / "u0.csv", [one_json])
    u0, u5 = read_field(tmp_path / "u0.csv"), read_field(tmp_path / "u5.csv")
    l2 = [np.sum(np.abs(f.values) ** 2) * f.dx for f in (u0, u5)]
    assert abs(l2[0] - l2[1]) < 1e-8

    assert run(tmp_path, "evolve", "--input", str(tmp_path / "u0.csv"), "--t-end", "1",
               "--checkpoint-every", "0.5", "--out", "ev.csv") == 0
    m = check_manifest(tmp_path / "ev.csv", [tmp_path / "u0.csv"])
    assert (tmp_path / "ev_t0.5.csv").is_file() and len(m["outputs"]) == 2
    assert m["extra"]["l2_drift"] < 1e-8

    assert run(tmp_path, "compare", str(tmp_path / "u0.csv"), str(tmp_path / "u0.csv"), "--out", "self.json") == 0
    rep = json.loads((tmp_path / "self.json").read_text())
    assert rep["pairs"][0]["linf"] == 0 and rep["pairs"][0]["l2"] == 0


def test_soliton_output_is_deterministic(tmp_path):
    for name in ("a.csv", "b.csv"):
        assert run(tmp_path, "soliton", "--random-pairs", "1", "--random-imag", "1", "--seed", "4",
                   "--n", "257", "--out", name) == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_config_precedence(tmp_path, one_json):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n": 65, "xmin": -5, "xmax": 5}))
    assert run(tmp_path, "soliton", "--config", str(cfg), "--input", str(one_json), "--out", "c1.csv") == 0
    assert read_field(tmp_path / "c1.csv").n == 65
    assert run(tmp_path, "soliton", "--config", str(cfg), "--input", str(one_json), "--n", "33",
               "--out", "c2.csv") == 0
    f = read_field(tmp_path / "c2.csv")
    assert f.n == 33 and f.xs[0] == -5
    assert manifest(tmp_path / "c2.csv")["config"]["n"] == 33


def test_scatter_box_profile_against_expm(tmp_path):
    A, L = 0.5 - 0.3j, 2.0
    xs = np.round(np.arange(-5, 8 + 1e-9, 0.05), 12)
    u = np.where((xs >= 0) & (xs < L - 1e-9), A, 0) + 0j
    src = tmp_path / "box.csv"
    write_field(src, ComplexField(xs, u, 0.0))
    assert run(tmp_path, "scatter", "--input", str(src), "--kmin", "-2", "--kmax", "2", "--nk", "9",
               "--interpolation", "previous", "--no-poles", "--out", "box.json") == 0
    check_manifest(tmp_path / "box.json", [src])
    sd = read_scattering(tmp_path / "box.json")
    for k in np.linspace(-2, 2, 9):
        a, b = box_scattering(A, L, k)
        assert np.max(np.abs(sd.gamma(np.array(k)) - b @ np.linalg.inv(a))) < 1e-7


def test_scatter_partial_failure_exit_code(tmp_path, zero_field, monkeypatch):
    src = tmp_path / "z.csv"
    write_field(src, zero_field)
    real = cli.compute_transition

    def flaky(*a, **kw):
        td = real(*a, **kw)
        failed = td.failed.copy()
        failed[:2] = True
        return TransitionData(td.k_grid, td.a_samples, td.b_samples, td.det_S, failed)

    monkeypatch.setattr(cli, "compute_transition", flaky)
    assert run(tmp_path, "scatter", "--input", str(src), "--nk", "11", "--no-poles") == 2
    m = check_manifest(tmp_path / "scattering.json", [src])
    assert len(m["extra"]["failed_k"]) == 2


def test_input_errors_write_nothing(tmp_path):
    assert run(tmp_path, "scatter", "--input", str(tmp_path / "missing.csv")) == 1
    assert run(tmp_path, "soliton") == 1
    assert run(tmp_path, "asymptote", "--input", str(tmp_path / "missing.json"), "--points=1,1") == 1
    assert list(tmp_path.iterdir()) == []


def test_singular_exit_code(tmp_path):
    src = tmp_path / "dup.json"
    write_scattering(src, ScatteringData([0.5j, 0.5j], [paired_norming(1.0), paired_norming(2.0)]))
    assert run(tmp_path, "soliton", "--input", str(src), "--n", "33") == 3


def test_unstable_exit_code(tmp_path, soliton0):
    src = tmp_path / "s.csv"
    write_field(src, soliton0)
    with pytest.warns(UserWarning):
        assert run(tmp_path, "evolve", "--input", str(src), "--dt", "0.5", "--t-end", "3") == 4


def test_evolve_needs_periodic_grid(tmp_path, zero_field):
    src = tmp_path / "z.csv"
    write_field(src, zero_field)
    assert run(tmp_path, "evolve", "--input", str(src)) == 1


def test_evolve_linear_only_matches_fourier(tmp_path):
    xs = periodic_grid(30.0, 512)
    u0 = 0.2 * np.exp(-xs**2) * (1 + 0.3j * xs)
    src = tmp_path / "g.csv"
    write_field(src, ComplexField(xs, u0, 0.0))
    assert run(tmp_path, "evolve", "--input", str(src), "--linear-only", "--t-end", "1", "--dt", "0.1") == 0
    out = read_field(tmp_path / "final.csv")
    assert np.max(np.abs(out.values - linear_fourier(xs, u0, 1.0))) < 1e-6


@pytest.fixture
def left_json(tmp_path):
    k = 0.6 + 0.3j
    c = np.array([0.4 + 0.2j, -0.1 + 0.3j])
    p = tmp_path / "left.json"
    write_scattering(p, ScatteringData([k, -np.conj(k)], [c, pair_norming(c)], smooth_gamma()))
    return p, soliton_velocity(k)


def test_asymptote_regions_and_strict(tmp_path, left_json):
    src, v = left_json
    t = 40.0
    pts = f"{v * t},{t};0.5,{t};30,1"
    cone = f"{v + 0.3},{v - 0.3}"
    assert run(tmp_path, "asymptote", "--input", str(src), f"--points={pts}", f"--cone={cone}",
               "--kappa", "0.2", "--out", "a.csv") == 0
    check_manifest(tmp_path / "a.csv", [src])
    header, cols = read_csv(tmp_path / "a.csv")
    assert header == ["x", "t", "region", "re_leading", "im_leading", "re_corr", "im_corr", "error_order"]
    assert cols["region"] == ["I", "III", "II"]
    # a phase-modulated gamma gives a non-commuting jump, so delta is only approximate
    assert manifest(tmp_path / "a.csv")["extra"]["approximate_delta"] is True
    code = run(tmp_path, "asymptote", "--input", str(src), f"--points={pts}", f"--cone={cone}", "--strict",
               "--out", "s.csv")
    assert code == 5 and not (tmp_path / "s.csv").exists()


def test_compare_series_slope(tmp_path):
    xs = periodic_grid(10.0, 64)
    files, ts = [], [25.0, 50.0, 100.0, 200.0]
    for t in ts:
        p = tmp_path / f"f{int(t)}.csv"
        write_field(p, ComplexField(xs, 0.7 * t**-0.5 * np.exp(-xs**2) + 0j, t))
        files.append(str(p))
    assert run(tmp_path, "compare", *files, "--times", ",".join(map(str, ts))) == 0
    rep = json.loads((tmp_path / "compare.json").read_text())
    assert abs(rep["series"]["slope"] + 0.5) < 0.05


def test_compare_grid_mismatch(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    write_field(a, ComplexField(np.linspace(0, 1, 11), np.zeros(11, complex), 0.0))
    write_field(b, ComplexField(np.linspace(0, 1, 12), np.zeros(12, complex), 0.0))
    assert run(tmp_path, "compare", str(a), str(b)) == 1
