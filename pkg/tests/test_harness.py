import csv
import io
from fractions import Fraction

import pytest

from indelcoding import harness
from indelcoding.harness import SWEEP_HEADER, main


@pytest.fixture
def out(tmp_path, monkeypatch):
    monkeypatch.setenv(harness.OUT_ENV, str(tmp_path / "out"))
    return tmp_path / "out"


def test_gen_tree_writes_verified_tree(out, capsys):
    assert main(["gen-tree", "--d", "2", "--n", "4", "--alpha", "0.25", "--sigma", "16", "--seed", "7"]) == 0
    text = capsys.readouterr().out
    assert "bad-lambda-free: true" in text
    files = list(out.iterdir())
    assert len(files) == 1
    first = files[0].read_bytes()
    assert main(["gen-tree", "--d", "2", "--n", "4", "--alpha", "0.25", "--sigma", "16", "--seed", "7"]) == 0
    assert files[0].read_bytes() == first
    assert main(["verify-tree", str(files[0]), "--alpha", "1/4"]) == 0


def test_gen_tree_infeasible_exits_one_with_witness(out, capsys):
    assert main(["gen-tree", "--d", "2", "--n", "2", "--alpha", "0.99", "--sigma", "2", "--max-attempts", "5"]) == 1
    assert "witness" in capsys.readouterr().out


def test_random_tree_with_potency_report(out, capsys):
    assert main(["gen-tree", "--random", "--n", "5", "--sigma", "64", "--alpha", "1/4"]) == 0
    assert "potent at delta=1/2" in capsys.readouterr().out


def test_verify_tree_fails_on_bad_tree(tmp_path, capsys):
    p = tmp_path / "bad.txt"
    p.write_text("2 1 4 0\n3\n3\n")
    assert main(["verify-tree", str(p), "--alpha", "1/2"]) == 1


def test_usage_errors_exit_two(out):
    with pytest.raises(SystemExit) as e:
        main(["sim", "--bogus"])
    assert e.value.code == 2
    with pytest.raises(SystemExit) as e:
        main([])
    assert e.value.code == 2
    assert main(["sim", "--adversary", "nonsense"]) == 2


def test_sim_writes_replayable_trace(out, capsys):
    assert main(["sim", "--T", "4", "--N", "64", "--adversary", "random:0.4", "--seed", "3"]) == 0
    first = capsys.readouterr().out
    trace = next(out.glob("trace-*.jsonl"))
    assert main(["sim", "--replay", str(trace)]) == 0
    again = capsys.readouterr().out
    assert first.split("\n", 1)[1] == again
    assert "VIOLATED" not in again


def test_noiseless_sim_reports_correct_outputs(out, capsys):
    assert main(["sim", "--protocol", "const", "--T", "2"]) == 0
    text = capsys.readouterr().out
    assert "alice=True bob=True" in text


def _read_csv(path):
    return list(csv.reader(io.StringIO(path.read_text())))


def test_sweep_row_count_and_zero_rate_success(out, capsys):
    assert main(["sweep", "--T", "2", "--N", "32", "--rhos", "0,1/32", "--seeds", "0-4", "--summary"]) == 0
    rows = _read_csv(next(out.glob("sweep-*.csv")))
    assert rows[0] == SWEEP_HEADER
    body = rows[1:]
    assert len(body) == 2 * 5
    zero = [r for r in body if r[1] == "0"]
    assert zero and all(r[11] == "1" and r[12] == "1" for r in zero)
    assert "rho,sessions,both_correct_rate" in capsys.readouterr().out


def test_sweep_workers_do_not_change_output(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["sweep", "--protocol", "const", "--T", "2", "--rhos", "0,1/32", "--seeds", "0-3"]
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b), "--workers", "2"]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_config_file_supplies_defaults(tmp_path, out):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("protocol = const\nT = 2\nseeds = 0-2\nsummary = true\n")
    target = tmp_path / "c.csv"
    assert main(["--config", str(cfg), "sweep", "--out", str(target)]) == 0
    rows = _read_csv(target)
    assert len(rows) == 4 and rows[1][2] == "const"
    # a flag on the command line wins over the file
    assert main(["--config", str(cfg), "sweep", "--out", str(target), "--seeds", "5"]) == 0
    assert len(_read_csv(target)) == 2


def test_config_file_with_unknown_key_is_usage_error(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("colour = blue\n")
    with pytest.raises(SystemExit) as e:
        main(["--config", str(cfg), "sweep"])
    assert e.value.code == 2


def test_attack_command(capsys):
    assert main(["attack", "--T", "4", "--N", "48"]) == 0
    text = capsys.readouterr().out
    assert "views identical: true" in text
    assert "at least one world wrong: true" in text


def test_attack_needs_n_divisible_by_three():
    cfg = harness.build_config("poly", 4, N=50, alpha=Fraction(9, 10), rho=Fraction(1, 6))
    with pytest.raises(ValueError):
        harness.paired_world_attack(cfg, harness.generate_instance(4, 0))


def test_selftest_command(capsys):
    assert main(["selftest", "--max-len", "3", "--samples", "2000"]) == 0
    assert capsys.readouterr().out.count("PASS") == 3


def test_adversary_spec_parser():
    cfg = harness.build_config("poly", 4, N=48, alpha=Fraction(9, 10), rho=Fraction(1, 6))
    inst = harness.generate_instance(4, 0)
    assert harness.make_adversary("none", cfg, inst).name == "none"
    assert harness.make_adversary("random:0.5", cfg, inst, 3).name == "random:0.5:3"
    assert harness.make_adversary("burst:2:5:substitute", cfg, inst).name.startswith("burst:2:5:substitute")
    assert harness.make_adversary("spoof:4", cfg, inst).length == 4
    with pytest.raises(ValueError):
        harness.make_adversary("meteor", cfg, inst)
