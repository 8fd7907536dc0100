"""Command-line entry points: simulate, serve, inspect, write-config."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .config import default_scene_config, load_scene_config, save_scene_config
from .errors import RecordingError, SafeSceneError
from .recording import load, validate
from .replay import monitor_for
from .scene import run_live


def _load_config(path: str | None):
    if path is None:
        return default_scene_config()
    return load_scene_config(path)


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = _load_config(args.config)
    if args.seed is not None:
        from dataclasses import replace

        cfg = replace(cfg, rng_seed=args.seed)
    summary = run_live(
        cfg,
        duration_s=args.duration,
        record_path=args.record,
        created_unix=args.created_unix,
    )
    print(f"simulated {summary['frames']} frames at {cfg.rate_hz:g} Hz")
    for p in summary["periods"]:
        print(f"safety period: enter={p.t_enter:.3f}s exit={p.t_exit:.3f}s")
    if summary["path"] is not None:
        print(f"recorded: {summary['path']}")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import RealtimeDriver, ServiceCore, build_app

    cfg = _load_config(args.config)
    data_dir = Path(args.data_dir or os.environ.get("DATA_DIR", "./sessions"))
    port = args.port or int(os.environ.get("PORT", "8000"))
    core = ServiceCore(cfg, data_dir)
    driver = RealtimeDriver(core)
    driver.start()
    ui_dir = args.ui_dir
    if ui_dir is None:
        bundled = Path(__file__).resolve().parents[2] / "frontend" / "dist"
        ui_dir = str(bundled) if bundled.is_dir() else None
    app = build_app(core, ui_dir=ui_dir)
    print(f"serving on http://{args.host}:{port} (data dir: {data_dir})")
    try:
        uvicorn.run(app, host=args.host, port=port, log_level="info")
    finally:
        driver.stop()
    return 0


def cmd_inspect(args: argparse.Namespace) -> int:
    try:
        rec = load(args.session)
    except RecordingError as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return 1
    report = validate(rec)
    print(f"{args.session}: {len(rec.samples)} samples, "
          f"{rec.duration_s:.2f}s at {rec.meta.rate_hz:g} Hz nominal")
    for line in report.lines():
        print(line)
    if not report.errors and not report.warnings:
        print("validation: clean")
    periods = monitor_for(rec).segment_periods(rec.samples)
    if periods:
        for p in periods:
            print(f"safety period: enter={p.t_enter:.3f}s exit={p.t_exit:.3f}s "
                  f"({p.t_exit - p.t_enter:.3f}s)")
    else:
        print("safety periods: none")
    recorded_flags = [s.safety_flag for s in rec.samples]
    print(f"recorded flag on for {sum(recorded_flags)} of {len(recorded_flags)} frames")
    return 0 if not report.errors else 1


def cmd_write_config(args: argparse.Namespace) -> int:
    path = save_scene_config(default_scene_config(), args.output)
    print(f"wrote default scene config to {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="safescene")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run the scripted scene headless, optionally recording")
    p.add_argument("--config", help="scene config YAML (default: built-in scene)")
    p.add_argument("--duration", type=float, default=10.0, help="seconds of scene time")
    p.add_argument("--seed", type=int, help="override the config's rng seed")
    p.add_argument("--record", help="write the session file here")
    p.add_argument("--created-unix", type=float, dest="created_unix",
                   help="fix the session creation stamp (reproducible files)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("serve", help="run the operator API (and console, if built)")
    p.add_argument("--config", help="scene config YAML (default: built-in scene)")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, help="default $PORT or 8000")
    p.add_argument("--data-dir", help="session directory, default $DATA_DIR or ./sessions")
    p.add_argument("--ui-dir", help="static console assets to serve at /")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("inspect", help="validate a session file and list its safety periods")
    p.add_argument("session")
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("write-config", help="write the built-in scene config as YAML")
    p.add_argument("output")
    p.set_defaults(func=cmd_write_config)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(asctime)s [%(levelname)s] %(name)s: %(message)s")
    try:
        return args.func(args)
    except SafeSceneError as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
