"""Operator command line.

Subcommands: track (validate/info), collect, train (bdm/pb), eval, serve.
Every command writes a run manifest (inputs, outputs, seeds, digests) next to
its outputs so any run can be replayed to identical digests.

Exit codes: 0 success, 2 usage, 3 data error, 4 training error,
5 other package error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Dict, List, Optional

from . import __version__
from .autodiff.serialize import digest_file
from .errors import DataError, StyleforgeError, TrainingError
from .evalkit import compute_metrics, emit_report, make_preset_policy, rollout
from .fixtures import fixture_preset, fixture_track_path
from .kernels import backend_name
from .models import load_model, make_policy, save_model
from .simcore import CameraConfig, build_track, load_track
from .training import (TrainConfig, collect_mixed, collect_preset, load_dataset,
                       save_dataset, train_bdm, train_pb)

SEED_ENV = "STYLEFORGE_SEED"

EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_TRAINING = 4
EXIT_ERROR = 5


class UsageError(Exception):
    pass


def resolve_track_path(token: str) -> Path:
    p = Path(token)
    if p.is_file():
        return p
    try:
        return fixture_track_path(token)
    except FileNotFoundError:
        raise DataError(f"no such track file or fixture track: {token!r}")


def _load_geom(token: str):
    return build_track(load_track(resolve_track_path(token)))


def _resolve_seed(args_seed: Optional[int], default: int = 0) -> int:
    env = os.environ.get(SEED_ENV)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise DataError(f"{SEED_ENV} must be an integer, got {env!r}")
    return default if args_seed is None else args_seed


def write_manifest(path: Path, command: str, args: dict, seed: Optional[int],
                   inputs: Dict[str, str], outputs: Dict[str, str]):
    manifest = {
        "tool": "styleforge",
        "version": __version__,
        "backend": backend_name(),
        "command": command,
        "args": args,
        "seed": seed,
        "inputs": inputs,
        "outputs": outputs,
    }
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


# -- track ------------------------------------------------------------------

def cmd_track(args) -> int:
    path = resolve_track_path(args.file)
    spec = load_track(path)
    geom = build_track(spec)   # raises GeometryError on inconsistency
    if args.action == "validate":
        print(f"ok: {spec.name}: {len(spec.segments)} segments, "
              f"total length {geom.total_length:.3f} m")
        return 0
    print(f"name: {spec.name}")
    print(f"file: {path}")
    print(f"closed: {spec.closed}")
    print(f"lane_half_width: {spec.lane_half_width}")
    print(f"total_length: {geom.total_length:.3f}")
    print(f"segments: {len(spec.segments)}")
    for i, seg in enumerate(spec.segments):
        print(f"  [{i}] {seg}")
    return 0


# -- collect ----------------------------------------------------------------

def cmd_collect(args) -> int:
    geom = _load_geom(args.track)
    camera = CameraConfig()
    seed = _resolve_seed(args.seed)
    target_speeds = tuple(args.target_speeds)
    common = dict(episodes=args.episodes, steps_per_episode=args.steps,
                  seed=seed, target_speeds=target_speeds)
    if args.driver == "mixed":
        presets = [fixture_preset("A"), fixture_preset("B")]
        dataset, report = collect_mixed(geom, presets, camera, **common)
    else:
        dataset, report = collect_preset(geom, fixture_preset(args.driver),
                                         camera, **common)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_dataset(dataset, out)
    digest = digest_file(out)
    track_path = resolve_track_path(args.track)
    write_manifest(out.with_name(out.name + ".run.json"), "collect",
                   {"driver": args.driver, "track": str(track_path),
                    "episodes": args.episodes, "steps": args.steps,
                    "target_speeds": list(target_speeds)},
                   seed, {str(track_path): digest_file(track_path)},
                   {str(out): digest})
    print(f"collected {len(dataset)} samples "
          f"({report.episodes_kept}/{report.episodes_requested} episodes kept, "
          f"{report.episodes_discarded} discarded) -> {out}")
    for reason in report.discard_reasons:
        print(f"  discarded: {reason}")
    print(f"digest: {digest}")
    return 0


# -- train ------------------------------------------------------------------

def _train_config(args) -> TrainConfig:
    base = {}
    if args.config:
        base = json.loads(Path(args.config).read_text())
    overrides = {"epochs": args.epochs, "batch_size": args.batch_size,
                 "learning_rate": args.lr, "val_fraction": args.val_fraction,
                 "patience": args.patience}
    for key, value in overrides.items():
        if value is not None:
            base[key] = value
    base["seed"] = _resolve_seed(args.seed, default=base.get("seed", 0))
    return TrainConfig(**base)


def cmd_train(args) -> int:
    if args.network == "pb" and not args.bdm:
        raise UsageError("train pb requires --bdm (train the base model first)")
    config = _train_config(args)
    dataset = load_dataset(args.data)
    inputs = {str(args.data): digest_file(args.data)}
    if args.network == "bdm":
        result = train_bdm(dataset, config)
    else:
        bdm = load_model(args.bdm)
        inputs[str(args.bdm)] = digest_file(args.bdm)
        result = train_pb(dataset, bdm, config)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_model(out, result.model)
    digest = digest_file(out)
    write_manifest(out.with_name(out.name + ".run.json"), f"train {args.network}",
                   {"data": str(args.data), "bdm": args.bdm,
                    "config": config.to_dict()},
                   config.seed, inputs, {str(out): digest})
    val = result.val_losses[-1] if result.val_losses else float("nan")
    print(f"trained {args.network}: {result.epochs_run} epochs "
          f"(best {result.best_epoch}), final train loss "
          f"{result.train_losses[-1]:.6f}, val loss {val:.6f} -> {out}")
    print(f"digest: {digest}")
    return 0


# -- eval -------------------------------------------------------------------

def cmd_eval(args) -> int:
    geom = _load_geom(args.track)
    bdm = load_model(args.bdm)
    inputs = {str(args.bdm): digest_file(args.bdm)}
    policies = [("bdm", make_policy(bdm, None, args.target_speed))]
    for pb_path in args.pb or []:
        pb = load_model(pb_path)
        inputs[str(pb_path)] = digest_file(pb_path)
        name = pb.meta.get("driver", Path(pb_path).stem)
        policies.append((f"pb-{name}", make_policy(bdm, pb, args.target_speed)))
    max_steps = int(args.laps * geom.total_length / 10.0 / 0.05) + 4000
    runs = []
    for name, policy in policies:
        traj = rollout(policy, geom, target_speed=args.target_speed,
                       max_steps=max_steps, laps=args.laps)
        rep = compute_metrics(traj, min_straight=args.min_straight)
        runs.append((name, traj, rep))
        status = "completed" if rep.completed else ("FAILED" if rep.failed else "incomplete")
        print(f"{name}: {status}, laps {rep.laps:.2f}, max|cte| {rep.max_abs_cte:.2f} m, "
              f"mean exit distance "
              f"{rep.mean_exit_distance if rep.mean_exit_distance is not None else 'n/a'}")
    files = emit_report(args.out, runs)
    outputs = {p: digest_file(p) for p in files.values()}
    track_path = resolve_track_path(args.track)
    write_manifest(Path(args.out) / "run.json", "eval",
                   {"track": str(track_path), "target_speed": args.target_speed,
                    "laps": args.laps, "pb": list(args.pb or [])},
                   None, inputs, outputs)
    print(f"report -> {files['summary']}")
    return 0


# -- serve ------------------------------------------------------------------

def cmd_serve(args) -> int:
    from .service import run_server
    run_server(host=args.host, port=args.port, track=args.track,
               bdm_path=args.bdm, pb_path=args.pb)
    return 0


# -- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="styleforge",
        description="2D driving-style transfer workbench: simulate, collect, "
                    "train, evaluate, serve.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("track", help="validate or describe a track file")
    p.add_argument("action", choices=["validate", "info"])
    p.add_argument("file")
    p.set_defaults(fn=cmd_track)

    p = sub.add_parser("collect", help="run scripted data collection")
    p.add_argument("--driver", required=True, choices=["A", "B", "mixed"])
    p.add_argument("--track", required=True)
    p.add_argument("--episodes", type=int, default=16)
    p.add_argument("--steps", type=int, default=500)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--target-speeds", type=float, nargs="+",
                   default=[15.0, 20.0, 25.0])
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_collect)

    p = sub.add_parser("train", help="train the base model or an adapter")
    p.add_argument("network", choices=["bdm", "pb"])
    p.add_argument("--data", required=True)
    p.add_argument("--bdm", default=None,
                   help="trained base-model bundle (required for pb)")
    p.add_argument("--config", default=None, help="JSON training config file")
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--val-fraction", type=float, default=None)
    p.add_argument("--patience", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("eval", help="closed-loop evaluation and reports")
    p.add_argument("--bdm", required=True)
    p.add_argument("--pb", action="append", default=[],
                   help="adapter bundle (repeatable)")
    p.add_argument("--track", required=True)
    p.add_argument("--target-speed", type=float, default=20.0)
    p.add_argument("--laps", type=float, default=2.0)
    p.add_argument("--min-straight", type=float, default=0.0,
                   help="only score curve exits followed by this much straight")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("serve", help="run the interactive session server")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8700)
    p.add_argument("--track", required=True)
    p.add_argument("--bdm", default=None, help="base-model bundle for autopilot")
    p.add_argument("--pb", default=None, help="adapter bundle for autopilot")
    p.set_defaults(fn=cmd_serve)
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except TrainingError as exc:
        print(f"training error: {exc}", file=sys.stderr)
        return EXIT_TRAINING
    except StyleforgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
