import csv
import json

import pytest

from relumin.cli import main


def test_gen_and_verify_global(tmp_path):
    data = tmp_path / "d.json"
    assert main(["gen", "--q", "3", "--seed", "7", "--out", str(data)]) == 0
    assert json.loads(data.read_text())["q"] == 3
    out = tmp_path / "g.json"
    assert main(["verify-global", "--dataset", str(data), "--q", "3", "--l", "5", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["passed"]
    assert (tmp_path / "g_global_min.csv").exists()


def test_verify_local_canonical_exit_code(tmp_path):
    out = tmp_path / "l.json"
    assert main(["verify-local", "--canonical", "--out", str(out)]) == 0


def test_seed_override(tmp_path, monkeypatch):
    monkeypatch.setenv("SEED_OVERRIDE", "11")
    main(["gen", "--q", "2", "--seed", "1", "--out", str(tmp_path / "a.json")])
    main(["gen", "--q", "2", "--seed", "11", "--out", str(tmp_path / "b.json")])
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_config_file(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"q": 3, "l": 4, "seed": 2, "class_sizes": [5, 6, 7]}))
    assert main(["gen", "--config", str(cfg), "--out", str(tmp_path / "d.json")]) == 0
    assert json.loads((tmp_path / "d.json").read_text())["class_sizes"] == [5, 6, 7]


def test_grad_check_pattern(tmp_path):
    out = tmp_path / "g.json"
    assert main(["grad-check", "--canonical", "--pattern", "11", "--pattern", "00", "--out", str(out)]) == 0


def test_classify_csv(tmp_path, capsys):
    q = tmp_path / "q.csv"
    q.write_text("x1,x2\n1.02,0.0\n0.0,0.97\n")
    assert main(["classify", "--canonical", "--inputs", str(q)]) == 0
    rows = list(csv.reader(capsys.readouterr().out.splitlines()))
    assert rows[0] == ["index", "distance", "tie"]
    assert [r[0] for r in rows[1:]] == ["0", "1"]


def test_gd_baseline_cli(tmp_path):
    out = tmp_path / "gd.json"
    assert main(["gd-baseline", "--canonical", "--inits", "2", "--steps", "100", "--out", str(out)]) == 0
    assert (tmp_path / "gd_gd_runs.csv").exists()


def test_bad_depth_exits():
    with pytest.raises(SystemExit):
        main(["verify-global", "--q", "3", "--l", "2"])


def test_generation_failure_exit_code(tmp_path):
    assert main(["gen", "--q", "2", "--spread", "0.6", "--out", str(tmp_path / "d.json")]) == 2
