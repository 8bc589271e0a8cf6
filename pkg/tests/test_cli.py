import pytest

from fedsparse.cli import main


def write_config(tmp_path, body):
    f = tmp_path / "config.yaml"
    f.write_text(body)
    return f


GOOD = """\
seed: 1
dataset:
  kind: synthetic
  task: lr
  n: 300
  p: 20
  rho_true: 0.2
  snr: 10.0
partition:
  clients: 3
algorithm:
  name: flops
  epochs: 2
  batch_size: 16
  rho_targ: 0.2
  rho_init: 0.5
"""


class TestRunCommand:
    def test_success(self, tmp_path, capsys):
        cfg = write_config(tmp_path, GOOD)
        rc = main(["run", str(cfg), "--out", str(tmp_path / "out")])
        assert rc == 0
        assert (tmp_path / "out/trace.csv").exists()
        assert "done: 2 epochs" in capsys.readouterr().out

    def test_seed_override(self, tmp_path):
        cfg = write_config(tmp_path, GOOD)
        assert main(["run", str(cfg), "--out", str(tmp_path / "a")]) == 0
        assert main(["run", str(cfg), "--out", str(tmp_path / "b"), "--seed", "9"]) == 0
        assert (tmp_path / "a/trace.csv").read_bytes() != (tmp_path / "b/trace.csv").read_bytes()

    def test_missing_config_exits_2(self, tmp_path, capsys):
        rc = main(["run", str(tmp_path / "nope.yaml")])
        assert rc == 2
        assert "config error" in capsys.readouterr().err

    def test_invalid_config_exits_2(self, tmp_path, capsys):
        cfg = write_config(tmp_path, "algorithm:\n  name: warp_drive\n")
        assert main(["run", str(cfg)]) == 2

    def test_runtime_failure_exits_1(self, tmp_path, capsys):
        # valid config, but more clients than samples fails at partition time
        bad = GOOD.replace("clients: 3", "clients: 100000")
        cfg = write_config(tmp_path, bad)
        rc = main(["run", str(cfg), "--out", str(tmp_path / "out")])
        assert rc == 1
        assert "error" in capsys.readouterr().err


class TestSweepCommand:
    def test_success(self, tmp_path, capsys):
        body = GOOD + "sweep:\n  axes:\n    seed: [1, 2]\n"
        cfg = write_config(tmp_path, body)
        rc = main(["sweep", str(cfg), "--out", str(tmp_path / "sw")])
        assert rc == 0
        assert (tmp_path / "sw/summary.csv").exists()
        assert "sweep done: 2 cells, 0 failed" in capsys.readouterr().out

    def test_failed_cells_exit_1(self, tmp_path, capsys):
        body = GOOD + "sweep:\n  axes:\n    partition.clients: [3, 100000]\n"
        cfg = write_config(tmp_path, body)
        rc = main(["sweep", str(cfg), "--out", str(tmp_path / "sw")])
        assert rc == 1
        captured = capsys.readouterr()
        assert "1 failed" in captured.out


def test_missing_subcommand_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2
