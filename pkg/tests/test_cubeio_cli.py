import json

import numpy as np
import pytest

from tvunmix import cli
from tvunmix.cubeio import (
    CubeFileError, band_to_gray, export_band, read_cube, read_cube_header, read_matrix_csv,
    read_pgm, write_cube, write_matrix_csv,
)
from tvunmix.metrics import metrics, rmse


# --- cube files ---------------------------------------------------------------

def test_cube_roundtrip_bit_exact(tmp_path):
    t = np.random.default_rng(0).standard_normal((4, 4, 4))
    p = tmp_path / "a.cube"
    write_cube(t, p, wavelengths=[1.0, 2.0, 3.0, 4.0])
    back = read_cube(p)
    assert back.tobytes() == t.tobytes()
    h = read_cube_header(p)
    assert h["dims"] == [4, 4, 4] and h["wavelengths"] == [1.0, 2.0, 3.0, 4.0]


def test_cube_payload_is_first_index_fastest(tmp_path):
    t = np.arange(8.0).reshape((2, 2, 2), order="F")
    p = tmp_path / "a.cube"
    write_cube(t, p)
    raw = p.read_bytes()
    payload = raw[raw.index(b"\n") + 1:]
    np.testing.assert_array_equal(np.frombuffer(payload, "<f8"), np.arange(8.0))


def test_cube_truncated(tmp_path):
    p = tmp_path / "a.cube"
    write_cube(np.ones((3, 3, 3)), p)
    p.write_bytes(p.read_bytes()[:-5])
    with pytest.raises(CubeFileError, match="211 bytes, expected 216"):
        read_cube(p)


def test_cube_seven_values_for_eight(tmp_path):
    p = tmp_path / "a.cube"
    header = {"format": "tvunmix-cube", "version": 1, "dims": [2, 2, 2],
              "axes": ["row", "col", "band"], "dtype": "<f8", "order": "F"}
    p.write_bytes(json.dumps(header).encode() + b"\n" + np.zeros(7).tobytes())
    with pytest.raises(CubeFileError, match="expected 64"):
        read_cube(p)


@pytest.mark.parametrize("raw", [b"no newline", b"{bad json\n", b'{"format": "x"}\n',
                                 b'{"format": "tvunmix-cube", "dims": [0, 1, 1]}\n'])
def test_cube_bad_header(tmp_path, raw):
    p = tmp_path / "a.cube"
    p.write_bytes(raw)
    with pytest.raises(CubeFileError):
        read_cube(p)


def test_matrix_csv_roundtrip(tmp_path):
    m = np.random.default_rng(1).standard_normal((5, 3))
    p = tmp_path / "m.csv"
    write_matrix_csv(m, p, ["a", "b", "c"])
    back, names = read_matrix_csv(p)
    assert names == ["a", "b", "c"]
    np.testing.assert_array_equal(back, m)


# --- metrics -------------------------------------------------------------------

def test_metrics_examples():
    x = np.random.default_rng(2).uniform(size=(3, 4, 5))
    r = metrics(x, x)
    assert r.rmse == 0 and r.sam_mean == 0 and r.to_dict()["psnr"] is None
    r = metrics(x + 2.0, x)
    assert r.rmse == pytest.approx(2.0, abs=1e-14)
    np.testing.assert_allclose(r.per_band_rmse, 2.0, atol=1e-14)
    with pytest.raises(ValueError):
        metrics(x, x[:2])


def test_metrics_direct_summation():
    rng = np.random.default_rng(3)
    a, b = rng.uniform(size=(2, 3, 4, 5))
    b[0, 0] = 0.0
    r = metrics(a, b)
    total = 0.0
    for v in np.ndindex(a.shape):
        total += (a[v] - b[v]) ** 2
    ref = np.sqrt(total / a.size)
    assert abs(r.rmse - ref) <= 1e-12
    assert abs(r.psnr - 20 * np.log10(np.abs(b).max() / ref)) <= 1e-12
    angles = []
    for i in range(3):
        for j in range(4):
            u, w = a[i, j], b[i, j]
            if np.linalg.norm(u) > 0 and np.linalg.norm(w) > 0:
                angles.append(np.arccos(min(1.0, u @ w / np.linalg.norm(u) / np.linalg.norm(w))))
    assert abs(r.sam_mean - np.mean(angles)) <= 1e-12
    assert r.sam_skipped == 1
    assert rmse(a, b) == pytest.approx(r.rmse, abs=1e-15)


# --- band export -----------------------------------------------------------------

def test_band_to_gray_examples():
    img, lo, hi = band_to_gray(np.full((3, 3), 4.2))
    assert np.all(img == 128) and lo == hi == 4.2
    img, _, _ = band_to_gray(np.array([[0.0, 1.0], [1.0, 0.0]]))
    np.testing.assert_array_equal(img, [[0, 255], [255, 0]])


def test_export_band_pgm(tmp_path):
    cube = np.zeros((2, 3, 4))
    cube[:, :, 2] = [[0.0, 0.5, 1.0], [1.0, 0.5, 0.0]]
    p = tmp_path / "b.pgm"
    export_band(cube, 2, p)
    img, maxval = read_pgm(p)
    assert maxval == 255
    np.testing.assert_array_equal(img, [[0, 128, 255], [255, 128, 0]])
    side = json.loads((tmp_path / "b.pgm.json").read_text())
    assert side["min"] == 0.0 and side["max"] == 1.0 and side["band"] == 2
    with pytest.raises(ValueError):
        export_band(cube, 4, p)


# --- CLI --------------------------------------------------------------------------

def run_cli(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def scene(tmp_path, capsys):
    d = tmp_path / "scene"
    code, _, err = run_cli(capsys, "synth", "--seed", 7, "--grid", 2, "--block", 3,
                           "--k", 2, "--out-dir", d)
    assert code == 0, err
    return d


def test_synth_outputs(scene):
    clean = read_cube(scene / "clean.cube")
    assert clean.shape == (6, 6, 224)
    W0, names = read_matrix_csv(scene / "W0.csv")
    assert W0.shape == (224, 2) and len(names) == 2
    meta = json.loads((scene / "synth.json").read_text())
    assert meta["k"] == 2 and meta["seed"] == 7


def test_synth_deterministic(tmp_path, capsys):
    for name in ("a", "b"):
        assert run_cli(capsys, "synth", "--seed", 7, "--grid", 2, "--block", 2,
                       "--out-dir", tmp_path / name)[0] == 0
    for f in ("clean.cube", "noisy.cube", "W0.csv", "H0.csv", "synth.json"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_eval_matches_metrics(scene, capsys, tmp_path):
    code, out, _ = run_cli(capsys, "eval", scene / "noisy.cube", scene / "clean.cube",
                           "--out", tmp_path / "m.json")
    assert code == 0
    report = json.loads(out)
    ref = metrics(read_cube(scene / "noisy.cube"), read_cube(scene / "clean.cube"))
    assert abs(report["rmse"] - ref.rmse) <= 1e-12
    assert json.loads((tmp_path / "m.json").read_text()) == report


@pytest.mark.parametrize("method", ["tv3d", "median", "wiener"])
def test_denoise(scene, capsys, tmp_path, method):
    out = tmp_path / f"{method}.cube"
    diag = tmp_path / "diag.json"
    code, _, err = run_cli(capsys, "denoise", method, scene / "noisy.cube", "--out", out,
                           "--lambda-t", 0.01, "--diagnostics", diag)
    assert code == 0, err
    x = read_cube(out)
    clean = read_cube(scene / "clean.cube")
    noisy = read_cube(scene / "noisy.cube")
    assert rmse(x, clean) < rmse(noisy, clean)
    if method == "tv3d":
        records = json.loads(diag.read_text())["records"]
        assert set(records[0]) == {"iteration", "objective", "primal_res", "dual_res"}


def test_unmix_nmftv_diagnostics(scene, capsys, tmp_path):
    d = tmp_path / "u"
    code, _, err = run_cli(capsys, "unmix", "nmftv", scene / "noisy.cube", "--k", 2,
                           "--rho", 10, "--lambda-s", 2.0, "--lambda-t", 0.1,
                           "--iters", 300, "--out-dir", d)
    assert code == 0, err
    diag = json.loads((d / "diagnostics.json").read_text())
    primal = [r["primal_res"] for r in diag["records"]]
    # the residual series trends down: late values well below early ones
    assert np.mean(primal[-20:]) < 0.1 * np.mean(primal[:20])
    W, _ = read_matrix_csv(d / "W.csv")
    H = read_cube(d / "H.cube")
    assert W.min() >= 0 and H.min() >= 0
    np.testing.assert_allclose(read_cube(d / "reconstruction.cube"),
                               np.tensordot(H, W, axes=([2], [1])), atol=1e-12)


def test_unmix_simplex_flag(scene, capsys, tmp_path):
    d = tmp_path / "u"
    assert run_cli(capsys, "unmix", "nmftv", scene / "noisy.cube", "--k", 2, "--simplex",
                   "--iters", 50, "--out-dir", d)[0] == 0
    np.testing.assert_allclose(read_cube(d / "H.cube").sum(axis=2), 1.0, atol=1e-9)


@pytest.mark.parametrize("method", ["lee-seung", "spa", "admm-nmf"])
def test_unmix_baselines(scene, capsys, tmp_path, method):
    d = tmp_path / method
    code, _, err = run_cli(capsys, "unmix", method, scene / "noisy.cube", "--k", 2,
                           "--iters", 100, "--rho", 1, "--out-dir", d)
    assert code == 0, err
    assert read_cube(d / "H.cube").shape == (6, 6, 2)
    assert read_matrix_csv(d / "W.csv")[0].shape == (224, 2)


def test_config_file_and_override(scene, capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"k": 2, "iters": 7, "tol": 0.0}))
    d = tmp_path / "u"
    assert run_cli(capsys, "unmix", "nmftv", scene / "noisy.cube", "--config", cfg,
                   "--out-dir", d)[0] == 0
    assert json.loads((d / "diagnostics.json").read_text())["iterations"] == 7
    assert run_cli(capsys, "unmix", "nmftv", scene / "noisy.cube", "--config", cfg,
                   "--iters", 3, "--out-dir", d)[0] == 0
    assert json.loads((d / "diagnostics.json").read_text())["iterations"] == 3


def test_export_band_cli(scene, capsys, tmp_path):
    out = tmp_path / "b.pgm"
    assert run_cli(capsys, "export-band", scene / "clean.cube", "--band", 132, "--out", out)[0] == 0
    img, _ = read_pgm(out)
    assert img.shape == (6, 6)


def test_repro_fig1_quick(capsys, tmp_path):
    d = tmp_path / "fig"
    code, out, err = run_cli(capsys, "repro-fig1", "--seed", 7, "--nmf-iters", 20, "--out-dir", d)
    assert code == 0, err
    assert len(list(d.glob("*.pgm"))) == 9
    assert len(list(d.glob("*.cube"))) == 9
    table = json.loads((d / "metrics.json").read_text())["metrics"]
    assert set(table) == {"noisy", "median", "wiener", "lee-seung", "spa",
                          "tv-spatial", "tv-spectral", "nmf-tv"}
    assert (d / "metrics.csv").read_text().startswith("method,rmse,psnr,sam_mean\n")


def one_error_line(err, code):
    lines = err.strip().splitlines()
    assert len(lines) == 1
    assert lines[0].startswith(f"tvunmix: error[{code}]: ")
    return lines[0]


def test_cli_errors(scene, capsys, tmp_path):
    code, _, err = run_cli(capsys, "denoise", "tv3d", scene / "noisy.cube", "--bogus")
    assert code == 2
    usage = one_error_line(err, "usage")

    code, _, err = run_cli(capsys, "eval", tmp_path / "missing.cube", scene / "clean.cube")
    assert code == 3
    missing = one_error_line(err, "file")

    code, _, err = run_cli(capsys, "denoise", "tv3d", scene / "noisy.cube", "--out",
                           tmp_path / "x.cube", "--rho", -1)
    assert code == 2
    bad_rho = one_error_line(err, "param")

    code, _, err = run_cli(capsys, "unmix", "nmftv", scene / "noisy.cube", "--k", 99,
                           "--out-dir", tmp_path)
    assert code == 2
    bad_k = one_error_line(err, "param")

    trunc = tmp_path / "t.cube"
    trunc.write_bytes((scene / "clean.cube").read_bytes()[:-8])
    code, _, err = run_cli(capsys, "eval", trunc, scene / "clean.cube")
    assert code == 4
    bad_data = one_error_line(err, "data")

    code, _, err = run_cli(capsys, "export-band", scene / "clean.cube", "--band", 500,
                           "--out", tmp_path / "b.pgm")
    assert code == 2
    bad_band = one_error_line(err, "param")

    cfg = tmp_path / "cfg.json"
    cfg.write_text('{"gamma": 1}')
    code, _, err = run_cli(capsys, "unmix", "nmftv", scene / "noisy.cube", "--config", cfg)
    assert code == 2
    bad_cfg = one_error_line(err, "param")

    messages = [usage, missing, bad_rho, bad_k, bad_data, bad_band, bad_cfg]
    assert len(set(messages)) == len(messages)
