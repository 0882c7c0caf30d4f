import csv
import json

import pytest

from mlnfkit.cli import EXIT_FAIL, EXIT_OK, EXIT_USAGE, REGISTRY, load_config, main, parse_grid
from mlnfkit.errors import ConfigError

KK_CONFIG = """
[run]
output_dir = {out}
seed = 7

[suite kk]
check = kk_check
model = electric
grid.omega = 0.2:5:20
set.channel = electric
"""


def _write(tmp_path, text, name="run.ini"):
    path = tmp_path / name
    path.write_text(text.format(out=tmp_path / "out"))
    return path


def _records(path):
    return [json.loads(line) for line in path.read_text().splitlines()]


def test_list(capsys):
    assert main(["list"]) == EXIT_OK
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) >= 15 and len(lines) == len(REGISTRY)


def test_version(capsys):
    assert main(["version"]) == EXIT_OK
    assert "numpy" in capsys.readouterr().out


def test_usage_errors(tmp_path, capsys):
    assert main(["frobnicate"]) == EXIT_USAGE
    assert main(["check", str(tmp_path / "missing.ini")]) == EXIT_USAGE
    assert main(["check", str(_write(tmp_path, KK_CONFIG)), "--tol-scale", "0"]) == EXIT_USAGE


def test_kk_suite(tmp_path, capsys):
    assert main(["check", str(_write(tmp_path, KK_CONFIG))]) == EXIT_OK
    assert "total=20 passed=20 failed=0" in capsys.readouterr().out
    out = tmp_path / "out"
    recs = _records(out / "reports.jsonl")
    assert len(recs) == 20 and all(r["pass"] for r in recs)
    with open(out / "kk.csv") as fh:
        assert len(list(csv.DictReader(fh))) == 20
    assert any(p.suffix == ".png" for p in out.iterdir())
    assert (out / "run_info.json").exists()


def test_empty_suites_is_config_error(tmp_path, capsys):
    path = _write(tmp_path, "[run]\noutput_dir = {out}\n")
    assert main(["check", str(path)]) == EXIT_USAGE
    assert "config error" in capsys.readouterr().err
    assert not (tmp_path / "out").exists()


def test_undefined_structure_names_key(tmp_path, capsys):
    path = _write(tmp_path, "[run]\noutput_dir = {out}\n\n[suite c]\ncheck = completeness_1d\n"
                            "structure = nowhere\ngrid.omega = 1.0\nset.x = 0.1\nset.x_prime = 0.2\n")
    assert main(["check", str(path)]) == EXIT_USAGE
    assert "nowhere" in capsys.readouterr().err


def test_unknown_check(tmp_path):
    path = _write(tmp_path, "[run]\noutput_dir = {out}\n\n[suite c]\ncheck = telepathy\n")
    with pytest.raises(ConfigError):
        load_config(path)


def test_tolerance_scaling_fails_suite(tmp_path, capsys):
    path = _write(tmp_path, KK_CONFIG + "tol = 1e-6\n")
    assert main(["check", str(path), "--tol-scale", "1e-12"]) == EXIT_FAIL


def test_per_report_tolerance_override(tmp_path):
    path = _write(tmp_path, KK_CONFIG + "tol.kk_check = 3e-5\n")
    cfg = load_config(path)
    assert cfg.suites[0].tol_by_name == {"kk_check": 3e-5}


def test_deterministic_and_parallel(tmp_path):
    text = KK_CONFIG + """
[suite angular]
check = angular_completeness
grid.pair = 0:4:5
set.omega = 1.3
"""
    a = _write(tmp_path, text.replace("{out}", str(tmp_path / "a")), "a.ini")
    b = _write(tmp_path, text.replace("{out}", str(tmp_path / "b")), "b.ini")
    assert main(["check", str(a)]) == EXIT_OK
    assert main(["check", str(a)]) == EXIT_OK
    first = (tmp_path / "a" / "reports.jsonl").read_text()
    assert main(["check", str(b), "--jobs", "2"]) == EXIT_OK
    assert (tmp_path / "b" / "reports.jsonl").read_text() == first


def test_parse_grid():
    assert parse_grid("0:1:3") == [0.0, 0.5, 1.0]
    assert parse_grid("1, 2.5, g+") == [1, 2.5, "g+"]
    for bad in ("", "1:2", "a:b:3", "0:1:0"):
        with pytest.raises(ConfigError):
            parse_grid(bad)


@pytest.mark.slow
def test_demo_defect(tmp_path, capsys):
    assert main(["demo-defect", "--out", str(tmp_path)]) == EXIT_OK
    with open(tmp_path / "defect_vs_filling.csv") as fh:
        rows = list(csv.DictReader(fh))
    defects = [float(r["defect"]) for r in rows]
    assert all(b <= a for a, b in zip(defects, defects[1:]))
    assert (tmp_path / "defect_vs_filling.png").exists()
