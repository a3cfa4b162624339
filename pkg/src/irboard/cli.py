"""Command line front end.

    irboard simulate --scene A --script demo.json --out trace.jsonl
    irboard serve --scene A --port 8037 --config ./irboard.json
    irboard replay --out trace.jsonl
    irboard calibrate-check --scene B

Exit codes: 0 success, 1 check failed, 2 config problem, 3 script or
scene problem.
"""

from __future__ import annotations

import argparse
import dataclasses
import signal
import sys

from . import simulator
from .geometry import AtInfinity
from .protocol import ButtonsIr, split_frames
from .session import (
    ConfigParseError,
    DEFAULT_CONFIG_PATH,
    Phase,
    ProtocolError,
    Session,
    load_config,
)
from .tracker import EventKind, PointerEvent, TraceParseError, read_trace, write_trace

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_SCRIPT = 3


def _load_scene_arg(scene_arg: str | None):
    """--scene takes a bundled name or a path to a script file with a scene."""
    if scene_arg is None:
        return None, None
    if scene_arg in simulator.NAMED_SCENES:
        return simulator.NAMED_SCENES[scene_arg], None
    scene, _script, battery = simulator.load_script(scene_arg)
    if scene is None:
        raise simulator.ScriptError(f"{scene_arg}: no scene in file")
    return scene, battery


def run_headless(
    device: simulator.VirtualDevice,
    script: simulator.PenScript,
    session: Session,
) -> list:
    """Feed one scripted run through a session, start to stop."""
    effects = []
    effects += session.start()
    effects += session.begin_calibration()
    for frame in split_frames(simulator.run_script(device, script)):
        effects += session.handle_frame(frame)
    effects += session.stop()
    return effects


def cmd_simulate(args: argparse.Namespace) -> int:
    try:
        config = load_config(args.config)
    except ConfigParseError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if not args.script:
            raise simulator.ScriptError("a --script file is required")
        file_scene, script, file_battery = simulator.load_script(args.script)
        flag_scene, flag_battery = _load_scene_arg(args.scene)
        scene = flag_scene or file_scene
        if scene is None:
            raise simulator.ScriptError(
                "no scene: pass --scene or put one in the script file"
            )
        if args.seed is not None:
            script = dataclasses.replace(script, seed=args.seed)
        battery = flag_battery or file_battery or simulator.DEFAULT_BATTERY_RAW
        device = simulator.build_scene(scene, battery_raw=battery)
    except (simulator.ScriptError, simulator.InvalidGeometry, OSError) as exc:
        print(f"script error: {exc}", file=sys.stderr)
        return EXIT_SCRIPT
    session = Session(config=config, config_path=args.config)
    try:
        run_headless(device, script, session)
    except (ProtocolError, ConfigParseError) as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return EXIT_SCRIPT
    if args.out:
        write_trace(args.out, session.events)
        print(f"wrote {len(session.events)} events to {args.out}")
    else:
        for event in session.events:
            print(event)
    if session.tracker is None and session.phase is Phase.STOPPED:
        # the run ended without ever completing calibration
        print("note: calibration never completed during this run", file=sys.stderr)
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    from .service import IrboardService

    try:
        config = load_config(args.config)
    except ConfigParseError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        scene, battery = _load_scene_arg(args.scene or "A")
    except (simulator.ScriptError, simulator.InvalidGeometry, OSError) as exc:
        print(f"scene error: {exc}", file=sys.stderr)
        return EXIT_SCRIPT
    service = IrboardService(
        scene=scene,
        config=config,
        config_path=args.config,
        seed=args.seed if args.seed is not None else 0,
        sigma=args.sigma,
        tick_hz=args.tick_hz,
        battery_raw=args.battery_raw if args.battery_raw is not None else battery,
        ui_dir=args.ui_dir,
    )
    port = service.start(port=args.port)
    print(f"serving on http://127.0.0.1:{port}", flush=True)
    stop = {"flag": False}

    def _sigint(_sig, _frame):
        stop["flag"] = True

    signal.signal(signal.SIGINT, _sigint)
    signal.signal(signal.SIGTERM, _sigint)
    try:
        while not stop["flag"]:
            signal.pause()
    except (KeyboardInterrupt, AttributeError):
        pass
    finally:
        service.stop()
    return EXIT_OK


def stroke_summary(events: list[PointerEvent]) -> dict:
    """Counts plus one bounding box per Down..Up run."""
    counts = {kind.value: 0 for kind in EventKind}
    strokes = []
    current: list[PointerEvent] | None = None
    for event in events:
        counts[event.kind.value] += 1
        if event.kind is EventKind.DOWN:
            current = [event]
        elif event.kind is EventKind.MOVE and current is not None:
            current.append(event)
        elif event.kind is EventKind.UP and current is not None:
            current.append(event)
            us = [e.u for e in current]
            vs = [e.v for e in current]
            strokes.append(
                {
                    "start": current[0].t,
                    "end": current[-1].t,
                    "u_min": min(us),
                    "u_max": max(us),
                    "v_min": min(vs),
                    "v_max": max(vs),
                }
            )
            current = None
    return {"counts": counts, "strokes": strokes}


def cmd_replay(args: argparse.Namespace) -> int:
    if not args.out:
        print("replay needs --out pointing at a trace file", file=sys.stderr)
        return EXIT_SCRIPT
    try:
        events = read_trace(args.out)
    except (TraceParseError, OSError) as exc:
        print(f"trace error: {exc}", file=sys.stderr)
        return EXIT_SCRIPT
    summary = stroke_summary(events)
    counts = summary["counts"]
    print(
        f"events: {len(events)} (down: {counts['down']}, move: {counts['move']}, "
        f"up: {counts['up']}, side: {counts['side']})"
    )
    print(f"strokes: {len(summary['strokes'])}")
    for i, stroke in enumerate(summary["strokes"], start=1):
        print(
            f"stroke {i}: frames {stroke['start']}..{stroke['end']}, "
            f"u [{stroke['u_min']:.4f}..{stroke['u_max']:.4f}], "
            f"v [{stroke['v_min']:.4f}..{stroke['v_max']:.4f}]"
        )
    return EXIT_OK


def cmd_calibrate_check(args: argparse.Namespace) -> int:
    try:
        config = load_config(args.config)
    except ConfigParseError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        scene, battery = _load_scene_arg(args.scene or "A")
        device = simulator.build_scene(scene)
    except (simulator.ScriptError, simulator.InvalidGeometry, OSError) as exc:
        print(f"scene error: {exc}", file=sys.stderr)
        return EXIT_SCRIPT
    margin = config.alignment_margin
    names = ("top-left", "top-right", "bottom-left", "bottom-right")
    all_visible = True
    for name, (x, y) in zip(names, device.corners_camera):
        visible = (
            margin <= x <= simulator.CAMERA_MAX_X - margin
            and margin <= y <= simulator.CAMERA_MAX_Y - margin
        )
        all_visible = all_visible and visible
        print(f"{name}: camera ({x:.1f}, {y:.1f}) {'visible' if visible else 'OUT OF VIEW'}")
    print(f"alignment: {'pass' if all_visible else 'FAIL'}")
    return EXIT_OK if all_visible else EXIT_CHECK_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="irboard")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument(
            "--scene",
            help="bundled scene name (A, B, C) or a script file with a scene",
        )
        p.add_argument("--script", help="pen script file (JSON)")
        p.add_argument(
            "--config", default=DEFAULT_CONFIG_PATH, help="session config file"
        )
        p.add_argument("--out", help="event trace path")
        p.add_argument(
            "--seed", type=int, default=None, help="noise seed (overrides the script)"
        )

    p_sim = sub.add_parser("simulate", help="run a scripted session headless")
    common(p_sim)
    p_sim.set_defaults(func=cmd_simulate)

    p_serve = sub.add_parser("serve", help="serve the control API and console")
    common(p_serve)
    p_serve.add_argument("--port", type=int, default=8037)
    p_serve.add_argument(
        "--sigma", type=float, default=0.0, help="camera noise (units)"
    )
    p_serve.add_argument(
        "--tick-hz", type=float, default=100.0, help="device frame rate; 0 = manual"
    )
    p_serve.add_argument(
        "--battery-raw", type=int, default=None, help="initial battery octet (0..200)"
    )
    p_serve.add_argument(
        "--ui-dir", default="frontend/dist", help="console static assets"
    )
    p_serve.set_defaults(func=cmd_serve)

    p_replay = sub.add_parser("replay", help="summarize a recorded trace")
    common(p_replay)
    p_replay.set_defaults(func=cmd_replay)

    p_check = sub.add_parser(
        "calibrate-check", help="check that all four corners are in camera view"
    )
    common(p_check)
    p_check.set_defaults(func=cmd_calibrate_check)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
