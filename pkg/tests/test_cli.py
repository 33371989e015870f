import json
import os
import subprocess
import sys

import pytest

from scalenest.cli import main


def run_cli(*args, threads=None, cwd=None):
    env = dict(os.environ)
    if threads is not None:
        env["SCALENEST_THREADS"] = str(threads)
    return subprocess.run([sys.executable, "-m", "scalenest.cli", *map(str, args)],
                          capture_output=True, text=True, env=env, cwd=cwd)


@pytest.fixture(scope="module")
def records(tmp_path_factory):
    path = tmp_path_factory.mktemp("synth") / "records.jsonl"
    assert main(["synth", "--regime", "mixed", "--seed", "7", "--out", str(path)]) == 0
    return path


def test_synth_then_grid(records, tmp_path):
    out = tmp_path / "run"
    assert main(["grid", "--input", str(records), "--out", str(out), "--seed", "42",
                 "--samples", "40", "--svg"]) == 0
    lines = (out / "grid.csv").read_text().splitlines()
    assert len(lines) == 5
    assert lines[0] == "geo_level,tech_level,rows,cols,fill,T_emp,null_mean,null_std,z,p_emp,n_samples,degenerate"
    for name in ("manifest.txt", "grid.svg", "ensembles/g2_t2.csv", "maps/g1_t1.csv",
                 "portraits/g2_t1.svg"):
        assert (out / name).is_file(), name
    manifest = (out / "manifest.txt").read_text()
    assert "records_parsed = 2400" in manifest and "records_used = 2400" in manifest
    assert "seed = 42" in manifest


def test_grid_is_byte_identical_across_thread_counts(records, tmp_path):
    outs = []
    for k, threads in enumerate((1, 3)):
        out = tmp_path / f"run{k}"
        res = run_cli("grid", "--input", records, "--out", out, "--seed", "5", "--samples", "80",
                      "--svg", threads=threads)
        assert res.returncode == 0, res.stderr
        outs.append(out)
    for name in ("grid.csv", "grid.svg", "manifest.txt", "ensembles/g1_t2.csv"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes(), name


def test_missing_input_exit_2(tmp_path):
    missing = tmp_path / "nope.jsonl"
    res = run_cli("grid", "--input", missing, "--out", tmp_path / "o")
    assert res.returncode == 2
    assert str(missing) in res.stderr
    assert not (tmp_path / "o").exists()


def test_malformed_input_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"id":"a","geo":["US.CA"],"tech":["A.A01"]}\n{"id":"b","geo":["US.NY"]}\n')
    assert main(["grid", "--input", str(bad), "--out", str(tmp_path / "o")]) == 2
    assert "line 2" in capsys.readouterr().err


def test_config_errors_exit_3(records, tmp_path, capsys):
    assert main(["grid", "--input", str(records), "--out", str(tmp_path / "o"), "--samples", "1"]) == 3
    cfg = tmp_path / "run.cfg"
    cfg.write_text("colour = blue\n")
    assert main(["grid", "--config", str(cfg), "--input", str(records), "--out", str(tmp_path / "o")]) == 3
    assert "colour" in capsys.readouterr().err
    assert not (tmp_path / "o").exists()


def test_degenerate_input_exit_4(tmp_path):
    flat = tmp_path / "flat.jsonl"
    flat.write_text("".join(json.dumps({"id": f"p{i}", "geo": ["US.CA"], "tech": ["A.A01"]}) + "\n"
                            for i in range(5)))
    res = run_cli("grid", "--input", flat, "--out", tmp_path / "o", "--samples", "10")
    assert res.returncode == 4
    assert "degenerate" in res.stderr
    assert not (tmp_path / "o").exists()
    assert not [p for p in tmp_path.iterdir() if p.name.startswith(".scalenest-")]


def test_config_file_with_flag_override(records, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"# run settings\ninput = {records}\nsamples = 12\nseed = 1\nsigma = 2.5\n")
    out = tmp_path / "o"
    assert main(["grid", "--config", str(cfg), "--out", str(out), "--seed", "2"]) == 0
    manifest = (out / "manifest.txt").read_text()
    assert "seed = 2" in manifest and "samples = 12" in manifest and "sigma = 2.5" in manifest


def test_render_grid_and_map(records, tmp_path):
    out = tmp_path / "run"
    assert main(["grid", "--input", str(records), "--out", str(out), "--samples", "10"]) == 0
    assert main(["render", "--grid", str(out / "grid.csv"), "--out", str(tmp_path / "g.svg")]) == 0
    assert (tmp_path / "g.svg").read_text().count('class="cell"') == 4
    assert main(["render", "--map", str(out / "maps/g2_t2.csv"), "--out", str(tmp_path / "m.svg")]) == 0
    assert 'class="isocline"' in (tmp_path / "m.svg").read_text()
    assert main(["render", "--grid", str(out / "grid.csv"), "--out", str(tmp_path / "g.png")]) == 0
    assert (tmp_path / "g.png").read_bytes()[:4] == b"\x89PNG"
    assert main(["render", "--out", str(tmp_path / "x.svg")]) == 3


def test_temperature_subcommand(tmp_path, capsys):
    m = tmp_path / "m.csv"
    m.write_text(",c0,c1\nr0,0,0\nr1,1,1\n")
    # the all-zero first row is pruned away, leaving a 1x2 map
    assert main(["temperature", "--map", str(m)]) == 4
    m.write_text(",c0,c1\nr0,0,1\nr1,1,1\n")
    assert main(["temperature", "--map", str(m), "--no-pack", "--out", str(tmp_path / "rep.csv")]) == 0
    assert "T = " in capsys.readouterr().out
    report = (tmp_path / "rep.csv").read_text().splitlines()
    assert report[0].startswith("# T=") and report[1] == "row_label,col_label,u"


def test_temperature_from_records(records, capsys):
    assert main(["temperature", "--input", str(records), "--geo-level", "2", "--tech-level", "1"]) == 0
    assert "shape = 24x4" in capsys.readouterr().out


def test_synth_rejects_bad_counts(tmp_path):
    assert main(["synth", "--children", "1", "--out", str(tmp_path / "r.jsonl")]) == 3
    assert not (tmp_path / "r.jsonl").exists()
