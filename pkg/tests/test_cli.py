import csv

import pytest

from hodgewatch.cli import main, read_config_file, UsageError
from hodgewatch.io import read_scores


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("teaser")
    assert main(["generate", "--builtin", "teaser", "--seed", "1", "--out", str(d)]) == 0
    return d


def test_generate_writes_files(run_dir):
    assert {p.name for p in run_dir.iterdir()} >= {"snapshots.txt", "truth.csv", "schedule.csv"}
    assert (run_dir / "truth.csv").read_text().splitlines()[1:] == ["10,event", "20,change", "30,change"]


def test_detect_and_hits(run_dir, capsys):
    assert main(["detect", "--in", str(run_dir), "--max-rank", "2", "--total-sv", "12", "--top-k", "3"]) == 0
    records = read_scores(run_dir / "scores.csv")
    assert len(records) == 39
    capsys.readouterr()
    assert main(["evaluate", "--in", str(run_dir), "--metric", "hits@3", "--include-warmup"]) == 0
    value = float(capsys.readouterr().out.strip())
    assert 0.0 <= value <= 1.0


def test_pr_delay_table(run_dir, capsys):
    main(["detect", "--in", str(run_dir), "--total-sv", "12", "--threshold", "0.01"])
    capsys.readouterr()
    assert main(["evaluate", "--in", str(run_dir), "--metric", "pr-delay", "--max-delay", "5"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "delay,precision,recall"
    assert len(lines) == 7


def test_graph_only_baseline(run_dir, tmp_path):
    out = tmp_path / "k0.csv"
    assert main(["detect", "--in", str(run_dir), "--max-rank", "0", "--total-sv", "12", "--out", str(out)]) == 0
    assert len(read_scores(out)) == 39


def test_config_file_and_precedence(run_dir, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# detector\nmax-rank = 1\ntotal_sv=6\ntop_k=2\nlong-window=8\n")
    out_a, out_b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["detect", "--in", str(run_dir), "--config", str(cfg), "--out", str(out_a)]) == 0
    assert main(["detect", "--in", str(run_dir), "--config", str(cfg), "--long-window", "10",
                 "--out", str(out_b)]) == 0
    a, b = read_scores(out_a), read_scores(out_b)
    assert sum(r.warmup for r in a) == 8
    assert sum(r.warmup for r in b) == 10


def test_bad_config(tmp_path):
    p = tmp_path / "bad.cfg"
    p.write_text("colour=blue\n")
    with pytest.raises(UsageError):
        read_config_file(p)


def test_sweep_long_format(run_dir, tmp_path):
    out = tmp_path / "sweep.csv"
    args = ["sweep", "--in", str(run_dir), "--ranks", "0,2", "--budgets", "6,12",
            "--short-windows", "3,5", "--long-windows", "10", "--out", str(out)]
    assert main(args) == 0
    with open(out) as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 2 * 2 * 2 * 39
    assert {r["truth"] for r in rows} == {"", "event", "change"}
    first = out.read_bytes()
    assert main(args[:-1] + [str(out)]) == 0
    assert out.read_bytes() == first


def test_lift_edge_stream(tmp_path, capsys):
    edges = tmp_path / "e.csv"
    edges.write_text("timestamp,u,v\n0,1,2\n1,2,3\n2,1,3\n86400,4,5\n")
    out = tmp_path / "s.txt"
    assert main(["lift", "--in", str(edges), "--bucket", "1d", "--out", str(out), "--max-rank", "2"]) == 0
    lines = out.read_text().splitlines()
    assert "1,1 2 3,1.0" in lines and "2,4 5,1.0" in lines


def test_exit_codes(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["detect"])
    assert exc.value.code == 2
    missing = tmp_path / "nope.txt"
    assert main(["detect", "--in", str(missing)]) == 1
    bad = tmp_path / "bad.txt"
    bad.write_text("1,1 2\n3,1 2\n")
    assert main(["detect", "--in", str(bad)]) == 1
    assert "missing timesteps" in capsys.readouterr().err
    assert main(["detect", "--in", str(bad), "--short-window", "9", "--long-window", "3"]) == 2
    assert main(["evaluate", "--scores", str(bad), "--truth", str(bad), "--metric", "auc"]) == 1
