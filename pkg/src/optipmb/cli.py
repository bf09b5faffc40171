"""Command-line entry points: ``track``, ``simulate`` and ``evaluate``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .io import load_tracks, write_detections, write_tracks
from .metrics import amota, clear_metrics
from .params import RunConfig, load_config
from .sim import load_scenario, simulate
from .tracker import run_tracker


def _track(args) -> int:
    cfg = load_config(args.config) if args.config else RunConfig()
    inputs = [Path(p) for p in args.inputs]
    outputs = [Path(p) for p in args.outputs]
    if len(inputs) != len(outputs):
        raise SystemExit("track: --in and --out must be given the same number of times")
    jobs = list(zip(inputs, outputs))
    with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        summaries = list(pool.map(lambda io: run_tracker(cfg, io[0], io[1], not args.no_adp), jobs))
    for (src, _), s in zip(jobs, summaries):
        print(json.dumps({"input": str(src), "frames": s.frames, "tracks": s.tracks,
                          "records": s.records, "wall_time_s": round(s.wall_time, 3)}))
    return 0


def _simulate(args) -> int:
    scenario = load_scenario(args.scenario)
    gt, dets = simulate(scenario, args.seed)
    write_tracks(args.out_gt, gt)
    write_detections(args.out_det, dets)
    print(json.dumps({"frames": len(dets), "gt_records": sum(map(len, gt)),
                      "detections": sum(len(f.detections) for f in dets)}))
    return 0


def _evaluate(args) -> int:
    gt = load_tracks(args.gt)
    tracks = load_tracks(args.tracks)
    skip = range(args.skip_frames)
    m = clear_metrics(tracks, gt, d0=args.d0, skip_frames=skip)
    out = m.as_dict()
    if gt:
        out["amota"] = amota(tracks, gt, d0=args.d0)
    print(json.dumps(out))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="optipmb", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("track", help="track a detection file")
    t.add_argument("--config", help="JSON/YAML config keyed by class name (default: nuScenes table)")
    t.add_argument("--in", dest="inputs", action="append", required=True, help="detection file (repeatable)")
    t.add_argument("--out", dest="outputs", action="append", required=True, help="track file (repeatable)")
    t.add_argument("--jobs", type=int, default=1, help="scenes processed concurrently")
    t.add_argument("--no-adp", action="store_true", help="use the fixed base detection probability")
    t.set_defaults(func=_track)

    s = sub.add_parser("simulate", help="generate a synthetic scene")
    s.add_argument("--scenario", required=True, help="preset name (desk, single, clutter) or JSON/YAML file")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out-gt", required=True)
    s.add_argument("--out-det", required=True)
    s.set_defaults(func=_simulate)

    e = sub.add_parser("evaluate", help="score a track file against ground truth")
    e.add_argument("--gt", required=True)
    e.add_argument("--tracks", required=True)
    e.add_argument("--d0", type=float, default=2.0, help="center-distance cutoff in metres")
    e.add_argument("--skip-frames", type=int, default=0, help="ignore the first N frames")
    e.set_defaults(func=_evaluate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
