"""Command-line entry point: ``ris-overlay <command>``.

Every command accepts ``--config`` (scenario JSON) and ``--seed``. The number
of worker threads used for batched placement evaluation is read from the
``RIS_OVERLAY_THREADS`` environment variable (default: all available cores).
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import dqn
from .config import ScenarioConfig
from .errors import FormatError, StateError, ValidationError
from .farfield import array_factor, array_factor_phases, peak_gain_db, write_csv
from .geometry import Direction
from .neural import load_weights, save_weights
from .profile import OverlayPlacement, PhaseProfile, synthesize_profile
from .scenario import Scenario
from .search import THREADS_ENV, exhaustive_search, random_search, write_exhaustive_json

PUBLISHED_GAIN_DB = 1.2


def _load_config(args) -> ScenarioConfig:
    cfg = ScenarioConfig.load(args.config) if args.config else ScenarioConfig()
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def _emit(doc: dict, path=None) -> None:
    text = json.dumps(doc, indent=2, sort_keys=True)
    if path:
        Path(path).write_text(text + "\n")
    print(text)


def _placement(values) -> OverlayPlacement:
    cx, cy = values
    return OverlayPlacement(int(cx), int(cy))


def _parse_starts(text: str) -> list[OverlayPlacement]:
    try:
        pairs = [chunk.split(",") for chunk in text.split(";") if chunk.strip()]
        return [OverlayPlacement(int(a), int(b)) for a, b in pairs]
    except ValueError:
        raise ValidationError(f"--starts expects 'cx,cy;cx,cy;...', got {text!r}") from None


def cmd_profile(args) -> int:
    cfg = _load_config(args)
    if args.direction:
        d = Direction(*args.direction)
        nx = ny = None
    elif args.beam == 1:
        d, nx, ny = cfg.direction1, None, None
    else:
        d, nx, ny = cfg.direction2, cfg.rect_w, cfg.rect_h
    prof, cont = synthesize_profile(cfg.array, d, nx, ny)
    doc = prof.to_dict()
    doc["direction"] = d.to_dict()
    doc["config_hash"] = cfg.content_hash()
    if args.continuous:
        doc["continuous"] = [float(v) for v in cont.ravel()]
    Path(args.out).write_text(json.dumps(doc))
    print(f"wrote {prof.nx}x{prof.ny} {prof.bits}-bit profile for {d} to {args.out}")
    return 0


def cmd_farfield(args) -> int:
    cfg = _load_config(args)
    sc = Scenario(cfg)
    if args.profile:
        try:
            doc = json.loads(Path(args.profile).read_text())
        except json.JSONDecodeError as exc:
            raise FormatError(f"{args.profile}: {exc}") from exc
        if args.continuous:
            if "continuous" not in doc:
                raise FormatError(f"{args.profile}: no continuous phases (write it with --continuous)")
            phases = np.asarray(doc["continuous"], dtype=float).reshape(int(doc["nx"]), int(doc["ny"]))
            pattern = array_factor_phases(phases, sc.steering, sc.array)
        else:
            pattern = array_factor(PhaseProfile.from_dict(doc), sc.steering, sc.array)
        source = {"profile": args.profile, "continuous": bool(args.continuous)}
    else:
        p = _placement(args.placement) if args.placement else sc.reference_placement
        pattern = sc.pattern_at(p)
        source = {"placement": list(p.as_tuple())}
    write_csv(pattern, args.out)
    peak, where = peak_gain_db(pattern)
    _emit({"config_hash": sc.content_hash(), "source": source, "csv": str(args.out),
           "peak_db": peak, "peak_direction": where.to_dict(),
           "peak_magnitude": float(pattern.magnitude.max())}, args.summary)
    return 0


def cmd_exhaustive(args) -> int:
    sc = Scenario(_load_config(args))
    res = exhaustive_search(sc, threads=args.threads)
    if args.out:
        write_exhaustive_json(res, args.out)
    _emit({"config_hash": sc.content_hash(), "best": list(res.best.as_tuple()),
           "best_a_total": res.best_value, "n_evaluations": res.n_evaluations,
           "wall_time_s": res.wall_time})
    return 0


def cmd_random(args) -> int:
    cfg = _load_config(args)
    sc = Scenario(cfg)
    start = _placement(args.start) if args.start else None
    res = random_search(sc, start, args.steps, args.runs, cfg.seed)
    _emit({"config_hash": sc.content_hash(), "seed": cfg.seed, "run_best": res.run_best,
           "best_a_total": res.best, "best_placement": list(res.best_placement.as_tuple()),
           "trajectories": [[[p.cx, p.cy, v] for p, v in t] for t in res.trajectories],
           "n_evaluations": res.n_evaluations, "wall_time_s": res.wall_time}, args.out)
    return 0


def _progress(every: int):
    if every <= 0:
        return None

    def report(ep, reward):
        if (ep + 1) % every == 0:
            print(f"episode {ep + 1}: reward {reward:.0f}", file=sys.stderr, flush=True)

    return report


def _train(sc: Scenario, args):
    cfg = sc.cfg.dqn
    if getattr(args, "episodes", None) is not None:
        cfg = replace(cfg, episodes=args.episodes)
    return dqn.train(sc, cfg, _progress(getattr(args, "progress", 0)))


def cmd_train(args) -> int:
    sc = Scenario(_load_config(args))
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    result = _train(sc, args)
    dqn.write_curve_csv(result.curve, out / "curve.csv")
    save_weights(result.agent.online, out / "weights.json")
    manifest = dict(result.manifest)
    # wall time varies run to run; keep it out of the reproducible manifest
    wall = manifest.pop("train_wall_time_s")
    dqn.write_manifest(manifest, out / "manifest.json")
    print(f"trained {manifest['episodes']} episodes in {wall:.1f} s; wrote {out}/curve.csv, "
          f"weights.json, manifest.json")
    return 0


def _agent_arch(sc: Scenario):
    return (sc.array.n_elements, *sc.cfg.dqn.hidden, 9)


def cmd_eval(args) -> int:
    sc = Scenario(_load_config(args))
    starts = _parse_starts(args.starts) if args.starts else dqn.protocol_starts(sc)
    net = load_weights(args.weights, arch=_agent_arch(sc))
    res = dqn.evaluate(net, sc, starts)
    if args.out:
        dqn.write_eval_csv(res, args.out)
    doc = res.to_dict()
    doc.pop("wall_time_s")
    doc["config_hash"] = sc.content_hash()
    print(json.dumps(doc, indent=2, sort_keys=True))
    return 0


def _table(rows: list[dict]) -> str:
    cols = ["method", "best_a_total", "reached_optimum", "wall_time_s", "evaluations"]
    cells = [cols] + [[str(r["method"]), str(r["best_a_total"]), "yes" if r["reached_optimum"] else "no",
                       f"{r['wall_time_s']:.3f}", str(r["evaluations"])] for r in rows]
    widths = [max(len(c[i]) for c in cells) for i in range(len(cols))]
    return "\n".join("  ".join(c[i].ljust(widths[i]) for i in range(len(cols))) for c in cells)


def cmd_bench(args) -> int:
    cfg = _load_config(args)
    sc = Scenario(cfg)
    rnd = random_search(Scenario(cfg, sc.steering), None, args.steps, args.runs, cfg.seed)
    ex_sc = Scenario(cfg, sc.steering)
    ex = exhaustive_search(ex_sc, threads=args.threads)

    if args.weights:
        net = load_weights(args.weights, arch=_agent_arch(sc))
        train_time = None
    else:
        t0 = time.monotonic()
        net = _train(sc, args).agent.online
        train_time = time.monotonic() - t0
    ev_sc = Scenario(cfg, sc.steering)
    ev = dqn.evaluate(net, ev_sc, dqn.protocol_starts(ev_sc), ex.best_value)
    dqn_best = max(ev.rollouts, key=lambda r: max(r.values)).best_placement

    ref_gain, _ = peak_gain_db(sc.reference)
    dqn_gain, _ = peak_gain_db(sc.pattern_at(dqn_best))
    rows = [
        {"method": "random", "best_a_total": rnd.best, "wall_time_s": rnd.wall_time,
         "evaluations": rnd.n_evaluations},
        {"method": "exhaustive", "best_a_total": ex.best_value, "wall_time_s": ex.wall_time,
         "evaluations": ex.n_evaluations},
        {"method": "dqn-eval", "best_a_total": ev.best, "wall_time_s": ev.wall_time,
         "evaluations": ev_sc.n_evaluations},
    ]
    for r in rows:
        r["reached_optimum"] = r["best_a_total"] >= ex.best_value
    doc = {
        "config_hash": sc.content_hash(),
        "rows": rows,
        "exhaustive_best": list(ex.best.as_tuple()),
        "dqn_best": list(dqn_best.as_tuple()),
        "dqn_starts_reaching_optimum": ev.n_reached,
        "dqn_train_time_s": train_time,
        "reference_peak_db": ref_gain,
        "dqn_peak_db": dqn_gain,
        "peak_gain_improvement_db": dqn_gain - ref_gain,
        "published_peak_gain_improvement_db": PUBLISHED_GAIN_DB,
    }
    _emit(doc, args.out)
    print(_table(rows))
    print(f"peak-gain improvement: measured {dqn_gain - ref_gain:.2f} dB, reference {PUBLISHED_GAIN_DB} dB")
    return 0


def build_parser() -> argparse.ArgumentParser:
    def shared(default):
        p = argparse.ArgumentParser(add_help=False)
        p.add_argument("--config", default=default, help="scenario JSON file (defaults built in)")
        p.add_argument("--seed", type=int, default=default, help="override the scenario and training seed")
        return p

    # subcommand copies must not clobber values given before the command name
    common = shared(argparse.SUPPRESS)
    parser = argparse.ArgumentParser(
        prog="ris-overlay", parents=[shared(None)],
        description="Two-beam RIS profile overlay: far-field simulation, search baselines and DQN.",
        epilog=f"{THREADS_ENV} sets the worker thread count (default: available cores).")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("profile", parents=[common], help="write a single-beam phase profile")
    p.add_argument("--beam", type=int, choices=(1, 2), default=1)
    p.add_argument("--direction", type=float, nargs=2, metavar=("THETA", "PHI"))
    p.add_argument("--continuous", action="store_true", help="also store unquantized phases")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("farfield", parents=[common], help="export a far-field pattern CSV")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--profile", help="profile JSON written by 'profile'")
    src.add_argument("--placement", type=int, nargs=2, metavar=("CX", "CY"))
    p.add_argument("--continuous", action="store_true", help="use the stored continuous phases")
    p.add_argument("--out", required=True, help="far-field CSV")
    p.add_argument("--summary", help="also write the JSON summary here")
    p.set_defaults(func=cmd_farfield)

    p = sub.add_parser("exhaustive", parents=[common], help="evaluate every window placement")
    p.add_argument("--out", help="JSON placement map")
    p.add_argument("--threads", type=int)
    p.set_defaults(func=cmd_exhaustive)

    p = sub.add_parser("random", parents=[common], help="random-walk placement search")
    p.add_argument("--runs", type=int, default=3)
    p.add_argument("--steps", type=int, default=11)
    p.add_argument("--start", type=int, nargs=2, metavar=("CX", "CY"))
    p.add_argument("--out", help="also write the JSON result here")
    p.set_defaults(func=cmd_random)

    p = sub.add_parser("train", parents=[common], help="train the DQN agent")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--episodes", type=int)
    p.add_argument("--progress", type=int, default=0, help="log every N episodes to stderr")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", parents=[common], help="greedy rollouts of a trained agent")
    p.add_argument("--weights", required=True)
    p.add_argument("--starts", help="'cx,cy;cx,cy;...' (default: center, east, north)")
    p.add_argument("--out", help="per-step CSV")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", parents=[common], help="compare random, exhaustive and DQN")
    p.add_argument("--weights", help="trained weights (trains from scratch when omitted)")
    p.add_argument("--episodes", type=int)
    p.add_argument("--progress", type=int, default=0)
    p.add_argument("--runs", type=int, default=3)
    p.add_argument("--steps", type=int, default=11)
    p.add_argument("--threads", type=int)
    p.add_argument("--out", help="also write the JSON report here")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, FormatError, StateError, OSError, KeyError) as exc:
        msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        print(f"error: {msg}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
