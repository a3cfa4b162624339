"""HTTP control surface around one live session.

One loop thread owns the session and the virtual device; it drains a
command queue, feeds device frames at the tick rate, and publishes
records to every subscriber of the push channel. HTTP handler threads
never touch session state: commands round-trip through the queue (409
when the session phase forbids them, 422 for bad bodies) and reads get
the snapshot the loop produced.

Endpoints:

    GET  /api/state              snapshot of phase, battery, alignment,
                                 calibration progress, zones, recent blobs
                                 and events
    POST /api/session/start      connect + enable camera + open alignment
    POST /api/session/stop       stop (persists config when save_on_exit)
    POST /api/alignment/arm      {"corner": 0..3}
    POST /api/calibration/start  begin corner acquisition
    POST /api/calibration/abort  drop collected corners, restart
    PUT  /api/zones              zone config body
    GET  /api/events             line-delimited JSON records, same schema
                                 as the trace file, until the client hangs up
    POST /api/sim/pen            {"s": .., "t": .., "pressed": bool}
    POST /api/sim/tick           {"frames": n} advance n frames now (handy
                                 with --tick-hz 0 for deterministic tests)

Anything outside /api/ serves the console's static assets when present.
"""

from __future__ import annotations

import json
import mimetypes
import os
import queue
import threading
import time
from collections import deque
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from . import protocol
from .session import (
    BatteryLevel,
    CalibrationComplete,
    CalibrationFailed,
    ConfigParseError,
    CornerCaptured,
    LowBattery,
    Phase,
    PhaseChanged,
    PhaseError,
    SendCommand,
    Session,
    SessionConfig,
    save_config,
)
from .simulator import (
    STATUS_INTERVAL,
    SceneGeometry,
    VirtualDevice,
    blob_report,
    build_scene,
)
from .tracker import PointerEvent, event_to_record
from .zones import ZoneConfig
from .session import zone_config_from_dict

import numpy as np

DEFAULT_PORT = 8037
RECENT_LIMIT = 32
COMMAND_TIMEOUT_S = 10.0

# phases in which the virtual device stream is fed to the session
_FEEDING_PHASES = (
    Phase.CONNECTED,
    Phase.IR_ENABLED,
    Phase.ALIGNING,
    Phase.CALIBRATING,
    Phase.RUNNING,
)


@dataclass
class _Command:
    name: str
    payload: dict
    reply: queue.SimpleQueue


class ServiceError(Exception):
    pass


class IrboardService:
    def __init__(
        self,
        scene: SceneGeometry,
        config: SessionConfig | None = None,
        config_path: str | None = None,
        seed: int = 0,
        sigma: float = 0.0,
        tick_hz: float = 100.0,
        battery_raw: int | None = None,
        ui_dir: str | None = None,
    ) -> None:
        self.device: VirtualDevice = build_scene(
            scene, battery_raw=battery_raw if battery_raw is not None else 200
        )
        self.config = config if config is not None else SessionConfig()
        self.config_path = config_path
        self.session = Session(config=self.config, config_path=config_path)
        self.sigma = sigma
        self.tick_hz = tick_hz
        self.ui_dir = ui_dir
        self._rng = np.random.default_rng(seed)
        self._pen = {"s": 0.5, "t": 0.5, "pressed": False}
        self._frame = 0
        self._had_blobs = False
        self._commands: queue.Queue[_Command] = queue.Queue()
        self._subscribers: list[queue.Queue] = []
        self._subscribers_lock = threading.Lock()
        self._recent_blobs: deque = deque(maxlen=RECENT_LIMIT)
        self._recent_events: deque = deque(maxlen=RECENT_LIMIT)
        self._stop_event = threading.Event()
        self._loop_thread: threading.Thread | None = None
        self._httpd: ThreadingHTTPServer | None = None
        self._http_thread: threading.Thread | None = None

    # ---------- lifecycle ----------

    def start(self, port: int = DEFAULT_PORT, host: str = "127.0.0.1") -> int:
        handler = _make_handler(self)
        self._httpd = ThreadingHTTPServer((host, port), handler)
        self._httpd.daemon_threads = True
        self._loop_thread = threading.Thread(target=self._loop, daemon=True)
        self._loop_thread.start()
        self._http_thread = threading.Thread(
            target=self._httpd.serve_forever, kwargs={"poll_interval": 0.05}, daemon=True
        )
        self._http_thread.start()
        return self._httpd.server_address[1]

    def stop(self) -> None:
        self._stop_event.set()
        if self._loop_thread is not None:
            self._loop_thread.join(timeout=5)
        if self.session.phase not in (Phase.STOPPED,):
            try:
                self.session.stop()
            except (PhaseError, ConfigParseError):
                pass
        with self._subscribers_lock:
            subscribers = list(self._subscribers)
        for sub in subscribers:
            try:
                sub.put_nowait(None)
            except queue.Full:
                pass
        if self._httpd is not None:
            self._httpd.shutdown()
            self._httpd.server_close()

    # ---------- the session loop ----------

    def _loop(self) -> None:
        period = 1.0 / self.tick_hz if self.tick_hz > 0 else None
        next_tick = time.monotonic() + (period or 0)
        while not self._stop_event.is_set():
            timeout = 0.1 if period is None else max(0.0, next_tick - time.monotonic())
            try:
                cmd = self._commands.get(timeout=timeout)
            except queue.Empty:
                cmd = None
            while cmd is not None:
                self._execute(cmd)
                try:
                    cmd = self._commands.get_nowait()
                except queue.Empty:
                    cmd = None
            if period is not None:
                now = time.monotonic()
                if now >= next_tick:
                    self._advance(1)
                    next_tick += period
                    if next_tick < now - 1.0:  # fell far behind; resync
                        next_tick = now + period

    def _advance(self, frames: int) -> None:
        for _ in range(frames):
            if self.session.phase not in _FEEDING_PHASES:
                return
            if self._frame % STATUS_INTERVAL == 0:
                status = protocol.Status(battery_raw=self.device.battery_at(self._frame))
                self._dispatch_effects(
                    self.session.handle_frame(protocol.encode_report(status))
                )
            pos = (self._pen["s"], self._pen["t"])
            report = blob_report(
                self.device, pos, self._pen["pressed"], self.sigma, self._rng
            )
            self._dispatch_effects(
                self.session.handle_frame(protocol.encode_report(report))
            )
            if report.blobs:
                record = {
                    "t": self._frame,
                    "kind": "blobs",
                    "blobs": [[b.x, b.y, b.size] for b in report.blobs],
                }
                self._recent_blobs.append(record)
                self._publish(record)
                self._had_blobs = True
            elif self._had_blobs:
                self._publish({"t": self._frame, "kind": "blobs", "blobs": []})
                self._had_blobs = False
            self._frame += 1

    def _dispatch_effects(self, effects: list) -> None:
        for effect in effects:
            record = self._effect_record(effect)
            if record is not None:
                self._publish(record)

    def _effect_record(self, effect) -> dict | None:
        t = self._frame
        if isinstance(effect, PointerEvent):
            record = event_to_record(effect)
            self._recent_events.append(record)
            return record
        if isinstance(effect, PhaseChanged):
            return {"t": t, "kind": "phase", "phase": effect.phase.value}
        if isinstance(effect, BatteryLevel):
            return {"t": t, "kind": "battery", "percent": effect.percent}
        if isinstance(effect, LowBattery):
            return {"t": t, "kind": "low_battery", "percent": effect.percent}
        if isinstance(effect, CornerCaptured):
            return {
                "t": t,
                "kind": "corner_captured",
                "corner": effect.corner,
                "point": [effect.point[0], effect.point[1]],
            }
        if isinstance(effect, CalibrationComplete):
            return {"t": t, "kind": "calibration_complete"}
        if isinstance(effect, CalibrationFailed):
            return {"t": t, "kind": "calibration_failed", "reason": effect.reason}
        if isinstance(effect, SendCommand):
            return {"t": t, "kind": "device_command", "data": effect.data.hex()}
        return None

    def _publish(self, record: dict) -> None:
        with self._subscribers_lock:
            subscribers = list(self._subscribers)
        for sub in subscribers:
            try:
                sub.put_nowait(record)
            except queue.Full:
                try:  # drop the oldest record rather than blocking the loop
                    sub.get_nowait()
                    sub.put_nowait(record)
                except (queue.Empty, queue.Full):
                    pass

    # ---------- commands ----------

    def submit(self, name: str, payload: dict | None = None) -> dict:
        """Round-trip one command through the loop thread."""
        reply: queue.SimpleQueue = queue.SimpleQueue()
        self._commands.put(_Command(name=name, payload=payload or {}, reply=reply))
        try:
            status, body = reply.get(timeout=COMMAND_TIMEOUT_S)
        except queue.Empty:
            raise ServiceError("session loop did not answer") from None
        if status == "phase_error":
            raise PhaseError(body)
        if status == "bad_request":
            raise ValueError(body)
        return body

    def _execute(self, cmd: _Command) -> None:
        try:
            body = self._apply(cmd.name, cmd.payload)
            cmd.reply.put(("ok", body))
        except PhaseError as exc:
            cmd.reply.put(("phase_error", str(exc)))
        except ConfigParseError as exc:
            cmd.reply.put(("phase_error", str(exc)))
        except (ValueError, TypeError, KeyError) as exc:
            cmd.reply.put(("bad_request", str(exc)))

    def _apply(self, name: str, payload: dict) -> dict:
        if name == "snapshot":
            return self._snapshot()
        if name == "start":
            if self.session.phase is Phase.STOPPED:
                # a stopped session is terminal; a fresh start gets a fresh one
                self.session = Session(
                    config=self.session.config, config_path=self.config_path
                )
            self._dispatch_effects(self.session.start())
            return {"phase": self.session.phase.value}
        if name == "stop":
            self._dispatch_effects(self.session.stop())
            return {"phase": self.session.phase.value}
        if name == "arm":
            self.session.arm_corner(int(payload["corner"]))
            return {"armed_corner": self.session.armed_corner}
        if name == "calibration_start":
            self._dispatch_effects(self.session.begin_calibration())
            return {"phase": self.session.phase.value}
        if name == "calibration_abort":
            self._dispatch_effects(self.session.abort_calibration())
            return {"phase": self.session.phase.value}
        if name == "set_zones":
            self.session.set_zone_config(payload["zone_config"])
            self.config = self.session.config
            return {"zone_config": self.session.snapshot()["zone_config"]}
        if name == "pen":
            for key in ("s", "t"):
                if key in payload:
                    self._pen[key] = float(payload[key])
            if "pressed" in payload:
                if not isinstance(payload["pressed"], bool):
                    raise ValueError("'pressed' must be a boolean")
                self._pen["pressed"] = payload["pressed"]
            return {"pen": dict(self._pen)}
        if name == "tick":
            frames = int(payload.get("frames", 1))
            if frames < 0 or frames > 100000:
                raise ValueError("frames must be in 0..100000")
            self._advance(frames)
            return {"frame": self._frame}
        raise ValueError(f"unknown command {name!r}")

    def _snapshot(self) -> dict:
        snap = self.session.snapshot()
        snap["pen"] = dict(self._pen)
        snap["frame"] = self._frame
        snap["recent_blobs"] = list(self._recent_blobs)
        snap["recent_events"] = list(self._recent_events)
        return snap

    # ---------- push channel ----------

    def subscribe(self) -> queue.Queue:
        sub: queue.Queue = queue.Queue(maxsize=4096)
        with self._subscribers_lock:
            self._subscribers.append(sub)
        return sub

    def unsubscribe(self, sub: queue.Queue) -> None:
        with self._subscribers_lock:
            if sub in self._subscribers:
                self._subscribers.remove(sub)


_FALLBACK_PAGE = b"""<!doctype html>
<meta charset="utf-8">
<title>irboard</title>
<p>The operator console assets are not built. The API is live under /api/.
Build the console with <code>npm run build</code> in frontend/ and restart
with --ui-dir pointing at frontend/dist.</p>
"""


def _make_handler(service: IrboardService):
    class Handler(BaseHTTPRequestHandler):
        # close-delimited streaming needs 1.0 framing semantics
        protocol_version = "HTTP/1.0"

        def log_message(self, fmt, *args):  # quiet; the loop owns stdout
            pass

        # ---------- helpers ----------

        def _json(self, code: int, body: dict) -> None:
            data = json.dumps(body).encode()
            self.send_response(code)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(data)))
            self.end_headers()
            self.wfile.write(data)

        def _body(self) -> dict:
            length = int(self.headers.get("Content-Length") or 0)
            raw = self.rfile.read(length) if length else b""
            if not raw:
                return {}
            try:
                data = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise ValueError(f"body is not valid JSON: {exc}") from exc
            if not isinstance(data, dict):
                raise ValueError("body must be a JSON object")
            return data

        def _run(self, name: str, payload: dict | None = None) -> None:
            try:
                body = service.submit(name, payload)
            except PhaseError as exc:
                self._json(409, {"error": str(exc)})
            except (ValueError, TypeError, KeyError) as exc:
                self._json(422, {"error": str(exc)})
            except ServiceError as exc:
                self._json(500, {"error": str(exc)})
            else:
                self._json(200, {"ok": True, **body})

        # ---------- routes ----------

        def do_GET(self) -> None:
            if self.path == "/api/state":
                self._run("snapshot")
            elif self.path == "/api/events":
                self._stream_events()
            elif self.path.startswith("/api/"):
                self._json(404, {"error": "no such endpoint"})
            else:
                self._static()

        def do_POST(self) -> None:
            try:
                routes = {
                    "/api/session/start": ("start", lambda b: {}),
                    "/api/session/stop": ("stop", lambda b: {}),
                    "/api/alignment/arm": ("arm", lambda b: {"corner": b["corner"]}),
                    "/api/calibration/start": ("calibration_start", lambda b: {}),
                    "/api/calibration/abort": ("calibration_abort", lambda b: {}),
                    "/api/sim/pen": ("pen", lambda b: b),
                    "/api/sim/tick": ("tick", lambda b: b),
                }
                if self.path not in routes:
                    self._json(404, {"error": "no such endpoint"})
                    return
                name, extract = routes[self.path]
                body = self._body()
                self._run(name, extract(body))
            except (ValueError, KeyError, TypeError) as exc:
                self._json(422, {"error": str(exc)})

        def do_PUT(self) -> None:
            if self.path != "/api/zones":
                self._json(404, {"error": "no such endpoint"})
                return
            try:
                body = self._body()
                zone_config = zone_config_from_dict(body)
            except (ConfigParseError, ValueError, TypeError) as exc:
                self._json(422, {"error": str(exc)})
                return
            self._run("set_zones", {"zone_config": zone_config})

        # ---------- streaming ----------

        def _stream_events(self) -> None:
            sub = service.subscribe()
            try:
                self.send_response(200)
                self.send_header("Content-Type", "application/x-ndjson")
                self.send_header("Cache-Control", "no-cache")
                self.send_header("Connection", "close")
                self.end_headers()
                hello = {
                    "t": service._frame,
                    "kind": "phase",
                    "phase": service.session.phase.value,
                }
                self.wfile.write((json.dumps(hello) + "\n").encode())
                self.wfile.flush()
                while not service._stop_event.is_set():
                    try:
                        record = sub.get(timeout=0.5)
                    except queue.Empty:
                        continue
                    if record is None:
                        break
                    self.wfile.write((json.dumps(record) + "\n").encode())
                    self.wfile.flush()
            except (BrokenPipeError, ConnectionResetError):
                pass
            finally:
                service.unsubscribe(sub)

        # ---------- static assets ----------

        def _static(self) -> None:
            path = self.path.split("?", 1)[0]
            if path in ("", "/"):
                path = "/index.html"
            ui_dir = service.ui_dir
            if ui_dir and os.path.isdir(ui_dir):
                root = os.path.realpath(ui_dir)
                full = os.path.realpath(os.path.join(root, path.lstrip("/")))
                if full.startswith(root + os.sep) or full == root:
                    if os.path.isfile(full):
                        ctype = (
                            mimetypes.guess_type(full)[0] or "application/octet-stream"
                        )
                        with open(full, "rb") as fh:
                            data = fh.read()
                        self.send_response(200)
                        self.send_header("Content-Type", ctype)
                        self.send_header("Content-Length", str(len(data)))
                        self.end_headers()
                        self.wfile.write(data)
                        return
            if path == "/index.html":
                self.send_response(200)
                self.send_header("Content-Type", "text/html; charset=utf-8")
                self.send_header("Content-Length", str(len(_FALLBACK_PAGE)))
                self.end_headers()
                self.wfile.write(_FALLBACK_PAGE)
                return
            self.send_response(404)
            self.send_header("Content-Length", "0")
            self.end_headers()

    return Handler
