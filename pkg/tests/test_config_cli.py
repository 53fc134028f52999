import csv
import dataclasses
import json

import numpy as np
import pytest

from multigait import cli
from multigait import config as cfgmod
from multigait import evaluation as ev
from multigait import gait_phase as gp
from multigait.ppo import PpoConfig
from multigait.trainer import DiscriminatorConfig


def small_config(tmp_path, **over) -> cfgmod.RunConfig:
    base = cfgmod.RunConfig()
    trainer = dataclasses.replace(
        base.trainer,
        n_envs=4,
        ppo=PpoConfig(epochs=1, minibatches=2, horizon=4),
        discriminator=DiscriminatorConfig(batch_size=16, updates_per_iteration=1),
    )
    ev_cfg = dataclasses.replace(base.eval, runs=2, duration_s=0.2, tracking_speeds=(0.5,))
    return dataclasses.replace(base, iterations=3, checkpoint_interval=2, output_dir=str(tmp_path / "run"),
                               dataset_dir=str(tmp_path / "ds"), trainer=trainer, eval=ev_cfg, **over)


def test_config_roundtrip_and_defaults():
    cfg = cfgmod.RunConfig()
    assert cfgmod.loads(cfgmod.dump(cfg)) == cfg
    assert cfgmod.loads("") == cfg
    assert cfgmod.loads("trainer: {fixed_command: [0.5, 0, 0]}").trainer.fixed_command == (0.5, 0.0, 0.0)


@pytest.mark.parametrize("text", [
    "bogus: 1",
    "trainer: {ppo: {gama: 0.9}}",
    "iterations: ten",
    "iterations: 2.5",
    "trainer: {randomize: 1}",
    "trainer: {fixed_command: [1, 2]}",
    "trainer: {ppo: {gamma: 1.5}}",
    "eval: {climb_terrain: cliffs}",
    "seed: [",
])
def test_config_rejects_bad_input(text):
    with pytest.raises(cfgmod.ConfigError):
        cfgmod.loads(text)


def test_config_init_and_validate(tmp_path, capsys):
    path = tmp_path / "c.yaml"
    assert cli.main(["config", "init", "--out", str(path)]) == 0
    assert cfgmod.load(path) == cfgmod.RunConfig()
    assert cli.main(["config", "validate", str(path)]) == 0
    path.write_text("bogus: 1\n")
    assert cli.main(["config", "validate", str(path)]) == cli.EXIT_VALIDATION
    assert cli.main(["config", "validate", str(tmp_path / "missing.yaml")]) == cli.EXIT_IO


def test_exit_codes(tmp_path):
    assert cli.main(["eval", str(tmp_path / "none.npz")]) == cli.EXIT_IO
    assert cli.main(["--threads", "0", "config", "init"]) == cli.EXIT_VALIDATION
    with pytest.raises(SystemExit):
        cli.main(["train", "--iterations", "x"])


def test_dataset_command(tmp_path):
    out = tmp_path / "ds"
    assert cli.main(["dataset", "--out", str(out)]) == 0
    files = sorted(p.name for p in out.iterdir())
    assert len(files) == 11 and "manifest.csv" in files
    with open(out / "manifest.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 10
    for row in rows:
        offsets, stance = gp.named_gait(row["gait"])
        assert tuple(float(row[f"phase_offset_{k}"]) for k in (2, 3, 4)) == offsets
        assert float(row["stance_ratio"]) == stance
    first = {p.name: p.read_bytes() for p in out.iterdir()}
    assert cli.main(["dataset", "--out", str(out)]) == 0
    assert {p.name: p.read_bytes() for p in out.iterdir()} == first


def test_train_eval_analyze(tmp_path, capsys):
    cfg = small_config(tmp_path)
    path = cfgmod.save(cfg, tmp_path / "small.yaml")
    assert cli.main(["train", "--config", str(path), "--threads", "1"]) == 0
    run = tmp_path / "run"
    with open(run / "metrics.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [int(r["iteration"]) for r in rows] == [1, 2, 3]
    assert (run / "latest.npz").exists() and (run / "checkpoint_000002.npz").exists()
    assert cfgmod.load(run / "config.yaml") == cfg

    capsys.readouterr()
    assert cli.main(["eval", str(run / "latest.npz"), "--config", str(path), "--mode", "trotting"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert set(report["result"]) == {"0.5"} and len(report["result"]["0.5"]["runs"]) == 2
    assert cli.main(["eval", str(run / "latest.npz"), "--config", str(path), "--mode", "galloping"]) == 1

    out = tmp_path / "an"
    assert cli.main(["analyze", str(run / "latest.npz"), "--config", str(path), "--frames", "5",
                     "--out", str(out)]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert len(summary) == 18 and "standing" in summary
    mat = np.loadtxt(out / "dtw_matrix.csv", delimiter=",", skiprows=1, usecols=range(1, 19))
    assert mat.shape == (18, 18) and np.allclose(mat, mat.T)


def test_resume_continues_iteration_count(tmp_path):
    cfg = small_config(tmp_path)
    path = cfgmod.save(cfg, tmp_path / "small.yaml")
    assert cli.main(["train", "--config", str(path), "--iterations", "2", "--threads", "1"]) == 0
    run = tmp_path / "run"
    assert cli.main(["train", "--config", str(path), "--iterations", "3", "--threads", "1",
                     "--resume", str(run / "latest.npz")]) == 0
    with open(run / "metrics.csv") as fh:
        assert [int(r["iteration"]) for r in csv.DictReader(fh)] == [1, 2, 3]


def test_climb_success_definition():
    T = 10
    pos = np.zeros((T, 2, 3))
    pos[:, 0, 0] = np.linspace(0, 5, T)
    pos[:, 1, 0] = np.linspace(0, 5, T)
    status = np.zeros((T, 2), dtype=int)
    status[3:, 1] = ev.TERMINATED
    log = ev.EvalLog(np.zeros((T, 2, 3)), pos, np.zeros((T, 2, 4)), np.ones((T, 2, 4)), np.zeros((T, 2, 16)), status)
    assert list(ev.climb_success(log, distance=4.0, time_limit_s=1.0)) == [True, False]
    assert list(ev.climb_success(log, distance=4.0, time_limit_s=0.1)) == [False, False]
    assert list(log.first_termination()) == [T, 3]
