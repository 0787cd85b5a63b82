import subprocess
import sys

import pytest

from tcmnoma.cli import main


def _write(tmp_path, text):
    p = tmp_path / "cfg.yaml"
    p.write_text(text)
    return str(p)


SMALL = """
frame:
  bits_per_user: 40
stop:
  min_errors: 1
  max_frames: 1
ebn0_db: [60.0]
seed: 5
"""


def test_simulate_writes_reports(tmp_path, capsys):
    cfg = _write(tmp_path, SMALL)
    out = tmp_path / "run"
    assert main(["simulate", "--config", cfg, "--scheme", "ofdma", "--out", str(out)]) == 0
    assert (out / "ber.csv").exists()
    assert (out / "summary.txt").exists()
    assert "ofdma 60 dB" in capsys.readouterr().out


def test_simulate_flag_overrides(tmp_path):
    cfg = _write(tmp_path, SMALL)
    out = tmp_path / "run"
    code = main(
        ["simulate", "--config", cfg, "--scheme", "ofdma", "--ebn0", "50,60", "--seed", "9", "--out", str(out)]
    )
    assert code == 0
    rows = (out / "ber.csv").read_text().strip().split("\n")[1:]
    assert [r.split(",")[1] for r in rows] == ["50.0", "60.0"]


def test_config_problems_exit_1(tmp_path, capsys):
    assert main(["simulate", "--config", str(tmp_path / "missing.yaml"), "--out", str(tmp_path)]) == 1
    bad = _write(tmp_path, "scheme: qam\n")
    assert main(["simulate", "--config", bad, "--out", str(tmp_path)]) == 1
    ok = _write(tmp_path, SMALL)
    assert main(["simulate", "--config", ok, "--ebn0", "abc", "--out", str(tmp_path)]) == 1
    assert "config error" in capsys.readouterr().err


def test_runtime_failure_exits_2(tmp_path, capsys):
    cfg = _write(tmp_path, SMALL + "decoder:\n  mode: exhaustive\n")
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "run")]) == 2
    assert "error" in capsys.readouterr().err


def test_design_exports_artifacts(tmp_path, capsys):
    out = tmp_path / "design"
    assert main(["design", "--out", str(out)]) == 0
    for name in ("points.csv", "tree.txt", "labeling.txt", "summary.txt"):
        assert (out / name).exists()
    text = capsys.readouterr().out
    assert "signal set size 512" in text
    assert "certified" in text


def test_console_script_help():
    proc = subprocess.run(
        [sys.executable, "-m", "tcmnoma.cli", "--help"], capture_output=True, text=True
    )
    assert proc.returncode == 0
    assert "simulate" in proc.stdout
    assert "design" in proc.stdout


@pytest.mark.parametrize("flags", [["--scheme", "lc-tcm"], ["--scheme", "tcm-noma"]])
def test_simulate_trellis_schemes(tmp_path, flags):
    cfg = _write(tmp_path, SMALL)
    out = tmp_path / "run"
    assert main(["simulate", "--config", cfg, *flags, "--out", str(out)]) == 0
    first_row = (out / "ber.csv").read_text().strip().split("\n")[1]
    assert first_row.startswith(flags[1])
