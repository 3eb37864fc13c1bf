import csv
import subprocess
import sys

import pytest

from stereoeval.cli import main
from stereoeval.imgio import load_pgm, read_disparity


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


@pytest.fixture
def case_dir(tmp_path):
    d = tmp_path / "case"
    assert main(["synth", "--out", str(d), "--width", "64", "--height", "40", "--frames", "2"]) == 0
    return d


def test_synth_then_bench(case_dir, tmp_path, capsys):
    out = tmp_path / "out"
    code = main(["bench", "--manifest", str(case_dir / "manifest.txt"), "--matchers", "sad,ncc",
                 "--dmax", "10", "--out", str(out), "--jobs", "1"])
    assert code == 0
    summary = _rows(out / "summary.csv")
    assert summary[0] == ["matcher", "m_N", "variance", "rank"]
    assert {r[0] for r in summary[1:]} == {"sad", "ncc"}
    assert len(_rows(out / "frames.csv")) == 1 + 4


def test_unknown_matcher_is_named(case_dir, tmp_path, capsys):
    code = main(["bench", "--manifest", str(case_dir / "manifest.txt"), "--matchers", "sad,bogus",
                 "--out", str(tmp_path / "o")])
    assert code != 0
    err = capsys.readouterr().err
    assert "bogus" in err and err.count("\n") == 1
    assert not (tmp_path / "o" / "summary.csv").exists()


def test_usage_errors_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["bench", "--manifest"])
    assert exc.value.code == 2
    assert "usage" in capsys.readouterr().err


def test_match_and_predict(case_dir, tmp_path, capsys):
    frames = case_dir / "frames"
    disp = tmp_path / "d.pgm"
    assert main(["match", str(frames / "reference_0000.pgm"), str(frames / "match_0000.pgm"),
                 "--matcher", "ssd", "--dmax", "10", "--out", str(disp)]) == 0
    dmap = read_disparity(disp)
    assert (dmap.data[10:30, 5:50] == 6).all()
    pred = tmp_path / "pred"
    assert main(["predict", str(frames / "reference_0000.pgm"), str(frames / "third_0000.pgm"),
                 str(disp), "--alpha", "0.5", "--out", str(pred)]) == 0
    line = capsys.readouterr().out.strip()
    assert line.startswith("n_t=")
    assert load_pgm(pred / "predicted.pgm").shape == (40, 64)
    assert load_pgm(pred / "error.pgm").shape == (40, 64)


def test_predict_with_ground_truth_is_perfect(case_dir, tmp_path, capsys):
    frames = case_dir / "frames"
    assert main(["predict", str(frames / "reference_0000.pgm"), str(frames / "third_0000.pgm"),
                 str(case_dir / "ground_truth.pgm"), "--tolerance", "0", "--out", str(tmp_path)]) == 0
    assert capsys.readouterr().out.startswith("n_t=100.00")


def test_report_rebuilds_summary(case_dir, tmp_path):
    out = tmp_path / "out"
    main(["bench", "--manifest", str(case_dir / "manifest.txt"), "--matchers", "sad,ssd,shd",
          "--dmax", "10", "--out", str(out), "--jobs", "1"])
    again = tmp_path / "again"
    assert main(["report", "--frames", str(out / "frames.csv"), "--out", str(again)]) == 0
    assert [r[0] for r in _rows(again / "summary.csv")] == [r[0] for r in _rows(out / "summary.csv")]


def test_missing_file_is_reported(tmp_path, capsys):
    code = main(["match", str(tmp_path / "a.pgm"), str(tmp_path / "b.pgm"), "--out", str(tmp_path / "d.pgm")])
    assert code == 1
    assert capsys.readouterr().err.startswith("stereo-eval: error:")


def test_synth_noise_option(tmp_path):
    assert main(["synth", "--out", str(tmp_path), "--width", "32", "--height", "20", "--frames", "1",
                 "--noise", "match=gain-bias:1.2", "--noise", "all=gaussian:2"]) == 0
    assert main(["synth", "--out", str(tmp_path), "--noise", "sky=gaussian:2"]) == 1
    assert main(["synth", "--out", str(tmp_path), "--noise", "gaussian:2"]) == 1


def test_jobs_env_fallback(case_dir, tmp_path, monkeypatch):
    monkeypatch.setenv("STEREO_EVAL_JOBS", "2")
    out = tmp_path / "out"
    assert main(["bench", "--manifest", str(case_dir / "manifest.txt"), "--matchers", "sad",
                 "--dmax", "10", "--out", str(out)]) == 0
    assert (out / "summary.csv").exists()


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "stereoeval", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and "stereo-eval" in proc.stdout
