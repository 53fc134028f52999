"""Command-line entry points: dataset, train, eval, analyze, config."""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import analysis, camp, checkpoint
from . import config as cfgmod
from . import evaluation as ev
from . import gait_phase as gp
from .sim.randomization import RandomizationProfile
from .trainer import Trainer, load_policy

EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME, EXIT_IO = 0, 1, 2, 3
log = logging.getLogger("multigait")


def _load_config(args) -> cfgmod.RunConfig:
    cfg = cfgmod.load(args.config) if getattr(args, "config", None) else cfgmod.RunConfig()
    if getattr(args, "seed", None) is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    return cfg


def _dataset(directory: Path):
    if (directory / "manifest.csv").exists():
        return camp.import_dataset(directory)
    log.info("no dataset at %s; generating it in memory", directory)
    return camp.build_dataset()


# ---------------------------------------------------------------- subcommands
def cmd_dataset(args) -> int:
    cfg = _load_config(args)
    out = Path(args.out or cfg.dataset_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = camp.export_dataset(camp.build_dataset(), out)
    print(f"wrote {len(files)} files to {out}")
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = _load_config(args)
    tcfg = cfg.trainer
    if args.envs is not None:
        tcfg = dataclasses.replace(tcfg, n_envs=args.envs)
    iterations = cfg.iterations if args.iterations is None else args.iterations
    out = Path(args.out or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfgmod.save(dataclasses.replace(cfg, trainer=tcfg), out / "config.yaml")
    trainer = Trainer(tcfg, seed=cfg.seed, dataset=_dataset(Path(cfg.dataset_dir)))
    if args.resume:
        trainer.load(args.resume)
        log.info("resumed from %s at iteration %d", args.resume, trainer.iteration)

    def report(row, timing):
        if row["iteration"] % max(1, args.log_every) == 0:
            log.info("iter %d  reward %.3f  rmse %.3f  match %.3f  (%.2fs)", row["iteration"], row["reward_total"],
                     row["tracking_rmse"], row["contact_match"], timing["total_s"])

    remaining = max(0, iterations - trainer.iteration) if args.resume else iterations
    trainer.train(remaining, out, cfg.checkpoint_interval, log=report)
    trainer.save(out / "latest.npz")
    print(f"trained {remaining} iterations; outputs in {out}")
    return EXIT_OK


def _gait_from_args(args) -> ev.GaitCommand | None:
    if args.mode == ev.ADAPTIVE_MODE:
        return None
    if args.mode == "standing":
        return ev.GaitCommand.standing()
    if args.mode not in gp.GAIT_NAMES:
        raise ValueError(f"mode must be 'adaptive', 'standing' or one of {gp.GAIT_NAMES}")
    return ev.GaitCommand.named(args.mode, args.frequency)


def cmd_eval(args) -> int:
    cfg = _load_config(args)
    e = cfg.eval
    nets, _ = load_policy(args.checkpoint)
    gait = _gait_from_args(args)
    runs = args.runs or e.runs
    if args.scenario == "tracking":
        speeds = args.speeds or list(e.tracking_speeds)
        body = ev.tracking_report(nets, speeds, runs, e.duration_s, gait, cfg.seed, RandomizationProfile())
    elif args.scenario == "climb":
        body = ev.climb_report(nets, args.terrain or e.climb_terrain, e.climb_speed, runs, e.climb_riser,
                               e.climb_slope_deg, e.climb_distance, e.climb_time_s, gait, cfg.seed)
    else:
        raise ValueError(f"unknown scenario {args.scenario!r}")
    report = {"scenario": args.scenario, "mode": args.mode, "checkpoint": str(args.checkpoint), "result": body}
    text = json.dumps(report, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)
    return EXIT_OK


def analysis_scenarios(e: cfgmod.EvalConfig):
    """Label, command, gait (None for the generator path) and terrain for each analysed skill."""
    out = []
    for name in gp.GAIT_NAMES:
        for f in e.analysis_frequencies:
            out.append((f"{name}_{f:g}hz", (e.analysis_speed, 0.0, 0.0), ev.GaitCommand.named(name, f), None))
    out.append(("standing", (0.0, 0.0, 0.0), ev.GaitCommand.standing(e.standing_height), None))
    out.append((f"adaptive_sprint_{e.sprint_speed:g}mps", (e.sprint_speed, 0.0, 0.0), None, None))
    out.append((f"adaptive_stairs_{e.stairs_speed:g}mps", (e.stairs_speed, 0.0, 0.0), None,
                ev.climb_course("stairs", e.climb_riser)))
    return out


def cmd_analyze(args) -> int:
    cfg = _load_config(args)
    nets, _ = load_policy(args.checkpoint)
    out = Path(args.out or Path(cfg.output_dir) / "analysis")
    (out / "diagrams").mkdir(parents=True, exist_ok=True)
    trajs, summary = [], {}
    for label, command, gait, terrain in analysis_scenarios(cfg.eval):
        run = ev.run_policy(nets, command, args.frames, gait, terrain=terrain, seed=cfg.seed)
        trajs.append(analysis.LatentTrajectory(label, run.latents[:, 0]))
        sched = run.schedule[:, 0] if gait is not None else None
        diagram, rate = analysis.gait_diagram(run.contacts[:, 0], sched)
        (out / "diagrams" / f"{label}.svg").write_text(diagram.to_svg(title=label))
        (out / "diagrams" / f"{label}.txt").write_text(diagram.render_text())
        summary[label] = {"contact_match": rate, "fell": bool(np.any(run.status[:, 0] == 1))}
    analysis.export_embeddings(trajs, out / "embeddings.csv")
    matrix = analysis.distance_matrix(trajs)
    analysis.export_matrix([t.label for t in trajs], matrix, out / "dtw_matrix.csv")
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    print(f"analysed {len(trajs)} skills; outputs in {out}")
    return EXIT_OK


def cmd_config(args) -> int:
    if args.action == "init":
        text = cfgmod.dump(cfgmod.RunConfig())
        if args.out:
            Path(args.out).write_text(text)
            print(f"wrote {args.out}")
        else:
            print(text, end="")
        return EXIT_OK
    cfgmod.load(args.file)
    print(f"{args.file}: ok")
    return EXIT_OK


# ---------------------------------------------------------------- parser
def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="global seed (overrides config)")
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS,
                        help="cap numeric worker threads; 1 gives bit-reproducible runs")
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)

    p = argparse.ArgumentParser(prog="multigait", parents=[common],
                                description="Gait-conditioned quadruped locomotion training toolkit.")
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("dataset", parents=[common], help="write the reference-motion dataset")
    d.add_argument("--config")
    d.add_argument("--out")
    d.set_defaults(func=cmd_dataset)

    t = sub.add_parser("train", parents=[common], help="run PPO training")
    t.add_argument("--config")
    t.add_argument("--out")
    t.add_argument("--iterations", type=int)
    t.add_argument("--envs", type=int)
    t.add_argument("--resume", help="checkpoint to continue from")
    t.add_argument("--log-every", type=int, default=10)
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", parents=[common], help="evaluate a checkpoint")
    e.add_argument("checkpoint")
    e.add_argument("--scenario", choices=("tracking", "climb"), default="tracking")
    e.add_argument("--mode", default=ev.ADAPTIVE_MODE,
                   help="'adaptive' (generator path), 'standing', or a gait name (encoder path)")
    e.add_argument("--frequency", type=float, default=2.0)
    e.add_argument("--speeds", type=float, nargs="+")
    e.add_argument("--terrain", choices=("stairs", "slope"))
    e.add_argument("--runs", type=int)
    e.add_argument("--config")
    e.add_argument("--out")
    e.set_defaults(func=cmd_eval)

    a = sub.add_parser("analyze", parents=[common], help="latent-space and gait-diagram analysis")
    a.add_argument("checkpoint")
    a.add_argument("--frames", type=int, default=100)
    a.add_argument("--config")
    a.add_argument("--out")
    a.set_defaults(func=cmd_analyze)

    c = sub.add_parser("config", parents=[common], help="create or check a configuration file")
    csub = c.add_subparsers(dest="action", required=True)
    ci = csub.add_parser("init", help="write the full default configuration")
    ci.add_argument("--out")
    cv = csub.add_parser("validate", help="load a configuration and report problems")
    cv.add_argument("file")
    c.set_defaults(func=cmd_config)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if getattr(args, "verbose", False) else logging.INFO,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    threads = getattr(args, "threads", None)
    if threads is not None and threads < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return EXIT_VALIDATION
    if not hasattr(args, "seed"):
        args.seed = None
    try:
        with threadpool_limits(limits=threads):
            return args.func(args)
    except (cfgmod.ConfigError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (OSError, checkpoint.CheckpointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except Exception as exc:  # noqa: BLE001 - anything else is a runtime fault
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
