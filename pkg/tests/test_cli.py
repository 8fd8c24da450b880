import subprocess
import sys

import pytest

from hfcs import cli, presets
from hfcs.sim.config import Counts, ScenarioConfig, dump_config

SMALL = ScenarioConfig(duration=60.0, counts=Counts(20, 15, 2))


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "scenario.toml"
    path.write_text(dump_config(SMALL))
    return path


def test_run_writes_csvs(tmp_path, config_file, capsys):
    out = tmp_path / "out"
    assert cli.main(["run", str(config_file), "--seed", "3", "--variant", "broadcast", "--out", str(out)]) == 0
    run_dir = out / "broadcast-seed-3"
    assert sorted(p.name for p in run_dir.iterdir()) == ["failures.csv", "intervals.csv", "nodes.csv", "summary.csv"]
    assert "tasks_completed" in capsys.readouterr().out


def test_output_dir_from_environment(tmp_path, config_file, monkeypatch):
    monkeypatch.setenv(cli.OUTPUT_ENV, str(tmp_path / "env"))
    assert cli.main(["run", str(config_file)]) == 0
    assert (tmp_path / "env" / "hfcs-seed-0" / "summary.csv").exists()


def test_bad_config_exits_nonzero(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text('variant = "mesh"\n')
    assert cli.main(["run", str(bad)]) == 2
    assert "unknown variant" in capsys.readouterr().err


def test_unknown_preset_is_a_usage_error():
    with pytest.raises(SystemExit) as exc:
        cli.main(["preset", "speed"])
    assert exc.value.code == 2
    with pytest.raises(KeyError):
        presets.expand("speed")


def test_preset_matrix_sizes():
    assert len(presets.expand("density")) == 25
    assert len(presets.expand("poolsize")) == 30
    assert len(presets.expand("compare")) == 15
    cells = {c.label: c.config for c, _ in presets.expand("poolsize", seeds=1)}
    assert cells["unlimited"].pools.max_members is None
    assert cells["global"].pools.base_cell_size == presets.GLOBAL_BASE_SIZE
    desk = presets.expand("compare", "desk", seeds=1)[0][0].config.counts
    paper = presets.expand("compare", "paper", seeds=1)[0][0].config.counts
    assert (desk.clients, desk.edge, desk.cnl) == (150, 100, 5)
    assert (paper.clients, paper.edge, paper.cnl) == (1500, 1000, 50)
    assert [s for _, s in presets.expand("density", seed=7)][:5] == [7, 8, 9, 10, 11]


def test_preset_command_runs_matrix(tmp_path, config_file, capsys):
    out = tmp_path / "p"
    code = cli.main(["preset", "compare", "--config", str(config_file), "--scale", "paper", "--seeds", "2",
                     "--out", str(out)])
    assert code == 0
    for v in ("hfcs", "hierarchical", "broadcast"):
        assert (out / "compare" / v / "aggregate.csv").exists()
        assert (out / "compare" / v / "seed-1" / "nodes.csv").exists()
    assert "broadcast" in capsys.readouterr().out


def test_parallel_preset_matches_serial():
    serial = presets.run_preset("compare", "paper", 0, SMALL, jobs=1, seeds=1)
    parallel = presets.run_preset("compare", "paper", 0, SMALL, jobs=2, seeds=1)
    for label in serial.reports:
        assert serial.reports[label][0].summary == parallel.reports[label][0].summary


def test_console_entry_point(config_file, tmp_path):
    proc = subprocess.run([sys.executable, "-m", "hfcs.cli", "run", str(config_file), "--out", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
