"""Command-line entry point.

    histblocks gen --config cfg.json --out DIR [--images]
    histblocks stats DIR
    histblocks eval DIR --solver {oracle|blind|file:PREDS} [--iou 0.5]
                        [--report out.json] [--free-running]
    histblocks serve [--port 8077] [--host 127.0.0.1] [--dataset-seed S]

Exit codes: 0 ok, 2 dataset/config error, 3 solver error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

from .dataset import iter_scenarios, read_manifest, stats, write_dataset
from .errors import DatasetCorrupt, GenerationExhausted, SolverFailure
from .evaluate import evaluate, make_solver
from .generate import GenConfig

EXIT_OK = 0
EXIT_DATASET = 2
EXIT_SOLVER = 3


def _cmd_gen(args) -> int:
    try:
        cfg = GenConfig.from_file(args.config) if args.config else GenConfig()
    except (OSError, ValueError, TypeError, json.JSONDecodeError) as e:
        print(f"bad config: {e}", file=sys.stderr)
        return EXIT_DATASET
    t0 = time.perf_counter()

    def progress(done, total):
        if args.verbose and (done % 10 == 0 or done == total):
            print(f"  {done}/{total} scenarios", file=sys.stderr)

    try:
        manifest = write_dataset(cfg, args.out, images=args.images,
                                 progress=progress)
    except GenerationExhausted as e:
        print(f"generation failed: {e}", file=sys.stderr)
        return EXIT_DATASET
    dt = time.perf_counter() - t0
    print(json.dumps({"counts": manifest["counts"],
                      "splits": {k: len(v) for k, v in manifest["splits"].items()},
                      "seconds": round(dt, 2)}, indent=2))
    return EXIT_OK


def _cmd_stats(args) -> int:
    try:
        print(json.dumps(stats(args.dataset), indent=2, sort_keys=True))
    except DatasetCorrupt as e:
        print(f"dataset error: {e}", file=sys.stderr)
        return EXIT_DATASET
    return EXIT_OK


def _cmd_eval(args) -> int:
    try:
        manifest = read_manifest(args.dataset)
        scenarios = list(iter_scenarios(args.dataset))
    except DatasetCorrupt as e:
        print(f"dataset error: {e}", file=sys.stderr)
        return EXIT_DATASET
    raster_px = manifest["config"].get("raster_px", 128)
    try:
        solver = make_solver(args.solver, raster_px)
        report = evaluate(scenarios, solver, iou_threshold=args.iou,
                          free_running=args.free_running)
    except SolverFailure as e:
        print(f"solver error: {e}", file=sys.stderr)
        return EXIT_SOLVER
    except DatasetCorrupt as e:
        print(f"dataset error: {e}", file=sys.stderr)
        return EXIT_DATASET
    print(report.format_text())
    if args.report:
        with open(args.report, "w") as fh:
            json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        print(f"report written to {args.report}")
    return EXIT_OK


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(default_seed=args.dataset_seed)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="histblocks",
        description="history-dependent blocks-world dataset tools")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a dataset")
    p.add_argument("--config", help="JSON GenConfig file (defaults apply)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--images", action="store_true",
                   help="also write RGB/depth renders")
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("stats", help="recount and validate a dataset")
    p.add_argument("dataset")
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("eval", help="evaluate a solver against a dataset")
    p.add_argument("dataset")
    p.add_argument("--solver", default="oracle",
                   help="oracle | blind | file:PREDICTIONS")
    p.add_argument("--iou", type=float, default=0.5)
    p.add_argument("--report", help="write the JSON report here")
    p.add_argument("--free-running", action="store_true",
                   help="advance history with the solver's own resolutions")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("serve", help="run the interactive session service")
    p.add_argument("--port", type=int, default=8077)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--dataset-seed", type=int, default=0,
                   help="default seed for new sessions")
    p.set_defaults(func=_cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
