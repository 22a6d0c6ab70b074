import json
import os
from pathlib import Path

import numpy as np
import pytest

from lymphmargin import fileio
from lymphmargin.cli import run
from lymphmargin.density_profile import InfiltrationCurve
from lymphmargin.stain import StainMatrix


def _snapshot(root: Path) -> dict:
    return {p.relative_to(root): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("synth")
    spec = {"pieces": [[-2000, -100, 0.05], [-100, 100, 0.4], [100, 2000, 0.1]]}
    (d / "spec.json").write_text(json.dumps(spec))
    out = d / "out"
    code = run(["synth", "--spec", str(d / "spec.json"), "--width-px", "1000", "--height-px", "40",
                "--mpp", "4", "--seed", "3", "-o", str(out)])
    assert code == 0
    return out


def test_synth_outputs(synth_dir):
    names = {p.name for p in synth_dir.iterdir()}
    assert names == {"labels.png", "labels.json", "lymph_a.png", "lymph_a.json", "lymph_b.png",
                     "lymph_b.json", "ihc_b.png", "ihc_b.json", "case.json"}
    meta = fileio.read_meta(synth_dir / "labels.json")
    assert meta.shape == (40, 1000)
    assert fileio.read_labels(synth_dir / "labels.png").shape == (40, 1000)


def test_profile_and_plot(synth_dir, tmp_path):
    code = run(["profile", "--labels", str(synth_dir / "labels.png"), "--lymph", str(synth_dir / "lymph_a.png"),
                "-o", str(tmp_path)])
    assert code == 0
    curve = InfiltrationCurve.from_dict(json.loads((tmp_path / "curve.json").read_text()))
    assert curve.bin_width_um == 10
    assert (tmp_path / "window.csv").read_text().startswith("bin_start_um,bin_end_um,density")
    assert len((tmp_path / "window.csv").read_text().splitlines()) == 401
    assert run(["plot", "--curve", str(tmp_path / "curve.csv"), "-o", str(tmp_path)]) == 0
    assert (tmp_path / "curve.svg").read_text().startswith("<svg")


def test_profile_from_annotations(tmp_path):
    meta = {"microns_per_pixel": 1.0, "width_px": 40, "height_px": 10}
    ann = {"polygons": [
        {"label": "normal", "vertices": [[0, 0], [40, 0], [40, 10], [0, 10]]},
        {"label": "neoplastic", "vertices": [[0, 0], [20, 0], [20, 10], [0, 10]]},
    ]}
    (tmp_path / "meta.json").write_text(json.dumps(meta))
    (tmp_path / "ann.json").write_text(json.dumps(ann))
    lymph = np.zeros((10, 40), bool)
    lymph[:, 20] = True
    fileio.write_mask(tmp_path / "lymph.png", lymph)
    code = run(["profile", "--annotations", str(tmp_path / "ann.json"), "--meta", str(tmp_path / "meta.json"),
                "--lymph", str(tmp_path / "lymph.png"), "--bin-width", "1", "-o", str(tmp_path / "o")])
    assert code == 0
    curve = InfiltrationCurve.from_dict(json.loads((tmp_path / "o" / "curve.json").read_text()))
    assert curve.density[curve.bin_edges_um[:-1] == 1.0][0] == 1.0


def test_deconvolve(tmp_path):
    from lymphmargin.stain import render_ihc
    mask = np.zeros((30, 30), bool)
    mask[5:10, 5:10] = True
    mask[20, 20] = True
    fileio.write_rgb(tmp_path / "ihc.png", render_ihc(mask))
    code = run(["deconvolve", "--image", str(tmp_path / "ihc.png"), "-o", str(tmp_path / "o")])
    assert code == 0
    got = fileio.read_mask(tmp_path / "o" / "mask.png")
    expect = mask.copy()
    expect[20, 20] = False
    np.testing.assert_array_equal(got, expect)
    (tmp_path / "sm.json").write_text(json.dumps(StainMatrix.default().to_dict()))
    code = run(["deconvolve", "--image", str(tmp_path / "ihc.png"), "--stain-matrix", str(tmp_path / "sm.json"),
                "--min-area", "0", "-o", str(tmp_path / "o2")])
    assert code == 0
    np.testing.assert_array_equal(fileio.read_mask(tmp_path / "o2" / "mask.png"), mask)


def _write_curves(d: Path, curves: dict):
    d.mkdir()
    for cid, c in curves.items():
        (d / f"{cid}.json").write_text(json.dumps(c.to_dict()))


def test_match_self_retrieval(tmp_path, capsys):
    rng = np.random.default_rng(0)
    curves = {}
    for i in range(5):
        tissue = np.full(400, 1000, dtype=np.int64)
        lymph = rng.integers(0, 1000, 400)
        curves[f"c{i}"] = InfiltrationCurve.from_counts(10.0, -200, tissue, lymph)
    _write_curves(tmp_path / "q", curves)
    _write_curves(tmp_path / "t", curves)
    pairs = {"pairs": [{"query": k, "target": k} for k in curves]}
    (tmp_path / "pairs.json").write_text(json.dumps(pairs))
    code = run(["match", "--queries", str(tmp_path / "q"), "--targets", str(tmp_path / "t"),
                "--pairs", str(tmp_path / "pairs.json"), "-o", str(tmp_path / "o")])
    assert code == 0
    report = json.loads((tmp_path / "o" / "report.json").read_text())
    assert report["topk"]["1"] == 5 and report["n"] == 5
    assert "c0" in capsys.readouterr().out


def test_eval_dice_png_and_centers(tmp_path):
    (tmp_path / "pred").mkdir()
    (tmp_path / "gt").mkdir()
    m = np.zeros((20, 20), bool)
    m[2:6, 2:6] = True
    fileio.write_mask(tmp_path / "pred" / "a.png", m)
    fileio.write_mask(tmp_path / "gt" / "a.png", m)
    disk = np.zeros((20, 20), bool)
    yy, xx = np.mgrid[:20, :20]
    disk[(xx - 10) ** 2 + (yy - 10) ** 2 <= 4] = True
    fileio.write_mask(tmp_path / "pred" / "b.png", disk)
    (tmp_path / "gt" / "b.json").write_text(json.dumps({"centers": [[10, 10]]}))
    code = run(["eval-dice", "--pred", str(tmp_path / "pred"), "--gt", str(tmp_path / "gt"),
                "--radius-um", "1", "--mpp", "0.5", "-o", str(tmp_path / "o")])
    assert code == 0
    rep = json.loads((tmp_path / "o" / "dice.json").read_text())
    assert rep["per_patch"] == [{"id": "a", "dice": 1.0}, {"id": "b", "dice": 1.0}]
    assert rep["mean_dice"] == 1.0


def test_usage_errors_exit_1(tmp_path, capsys):
    assert run([]) == 1
    assert run(["profile", "--lymph", "x.png"]) == 1
    assert run(["bogus"]) == 1


def test_usage_error_codes_via_argparse(capsys):
    # argparse failures must map to exit code 1, not argparse's default 2
    assert run(["match", "--queries", "q"]) == 1
    assert run(["synth", "--spec", "s.json", "--seed", "x"]) == 1


def test_missing_file_exit_2(tmp_path, capsys):
    code = run(["plot", "--curve", str(tmp_path / "nope.csv"), "-o", str(tmp_path)])
    assert code == 2
    assert capsys.readouterr().err.startswith("FileNotFound:")


def test_config_precedence(tmp_path, synth_dir):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"bin_width_um": 20, "output_dir": str(tmp_path / "from_cfg")}))
    args = ["profile", "--labels", str(synth_dir / "labels.png"), "--lymph", str(synth_dir / "lymph_a.png"),
            "--config", str(cfg)]
    assert run(args) == 0
    c = InfiltrationCurve.from_dict(json.loads((tmp_path / "from_cfg" / "curve.json").read_text()))
    assert c.bin_width_um == 20
    assert not (tmp_path / "from_cfg" / "window.csv").exists()
    assert run(args + ["--bin-width", "5", "-o", str(tmp_path / "flag")]) == 0
    c = InfiltrationCurve.from_dict(json.loads((tmp_path / "flag" / "curve.json").read_text()))
    assert c.bin_width_um == 5
    cfg.write_text(json.dumps({"bogus": 1}))
    assert run(args) == 2
    cfg.write_text(json.dumps({"band_radius_bins": -1}))
    assert run(args) == 2


def test_writes_only_into_output_dir(tmp_path, synth_dir, monkeypatch):
    work = tmp_path / "work"
    work.mkdir()
    monkeypatch.chdir(work)
    before_src = _snapshot(synth_dir)
    assert run(["profile", "--labels", str(synth_dir / "labels.png"), "--lymph", str(synth_dir / "lymph_b.png"),
                "-o", str(tmp_path / "o")]) == 0
    assert list(work.iterdir()) == []
    assert _snapshot(synth_dir) == before_src
    assert {p.name for p in (tmp_path / "o").iterdir()} == {"curve.csv", "curve.json", "window.csv"}


def test_output_permissions_follow_umask(tmp_path, synth_dir):
    old = os.umask(0o022)
    os.umask(old)
    assert run(["profile", "--labels", str(synth_dir / "labels.png"), "--lymph", str(synth_dir / "lymph_a.png"),
                "-o", str(tmp_path)]) == 0
    mode = (tmp_path / "curve.csv").stat().st_mode & 0o777
    assert mode == 0o666 & ~old
