import http.client
import json

import httpx
import pytest

from irboard.service import IrboardService
from irboard.session import SessionConfig, load_config
from irboard.simulator import NAMED_SCENES
from irboard.zones import ZoneAction

UNIT_CORNERS = ((0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0))

ZONE_BODY = {
    "left": ["none", "none", "double_click"],
    "right": ["right_click", "none", "none"],
    "band_width": 0.05,
    "enabled": True,
}


def make_service(tmp_path, **kwargs):
    kwargs.setdefault("scene", NAMED_SCENES["A"])
    kwargs.setdefault("config", SessionConfig())
    kwargs.setdefault("config_path", str(tmp_path / "irboard.json"))
    kwargs.setdefault("tick_hz", 0.0)
    return IrboardService(**kwargs)


@pytest.fixture()
def service(tmp_path):
    svc = make_service(tmp_path)
    port = svc.start(port=0)
    svc.base_url = f"http://127.0.0.1:{port}"
    yield svc
    svc.stop()


@pytest.fixture()
def client(service):
    with httpx.Client(base_url=service.base_url, timeout=10.0) as c:
        yield c


def tick(client, frames=1):
    response = client.post("/api/sim/tick", json={"frames": frames})
    assert response.status_code == 200, response.text
    return response.json()


def pen(client, **fields):
    response = client.post("/api/sim/pen", json=fields)
    assert response.status_code == 200, response.text
    return response.json()


def state(client):
    response = client.get("/api/state")
    assert response.status_code == 200
    return response.json()


def flash_corner(client, s, t, frames=10, gap=5):
    pen(client, s=s, t=t, pressed=True)
    tick(client, frames)
    pen(client, pressed=False)
    tick(client, gap)


def to_running(client):
    assert client.post("/api/session/start").status_code == 200
    assert client.post("/api/calibration/start").status_code == 200
    for s, t in UNIT_CORNERS:
        flash_corner(client, s, t)
    snap = state(client)
    assert snap["phase"] == "running"
    return snap


def test_wizard_walk_from_cold_to_running(client):
    assert state(client)["phase"] == "disconnected"
    response = client.post("/api/session/start")
    assert response.status_code == 200
    assert response.json()["phase"] == "aligning"

    for corner, (s, t) in enumerate(UNIT_CORNERS):
        assert client.post("/api/alignment/arm", json={"corner": corner}).status_code == 200
        pen(client, s=s, t=t, pressed=True)
        tick(client, 2)
        pen(client, pressed=False)
        tick(client, 2)
    alignment = state(client)["alignment"]
    assert alignment["visible"] == [True, True, True, True]
    assert alignment["ok"] is True

    assert client.post("/api/calibration/start").json()["phase"] == "calibrating"
    for s, t in UNIT_CORNERS:
        flash_corner(client, s, t)
    snap = state(client)
    assert snap["phase"] == "running"
    assert snap["battery_percent"] == 100.0  # status report seen at frame 0

    pen(client, s=0.25, t=0.75, pressed=True)
    tick(client, 3)
    pen(client, pressed=False)
    tick(client, 6)
    kinds = [e["kind"] for e in state(client)["recent_events"]]
    assert kinds == ["down", "move", "move", "up"]
    down = state(client)["recent_events"][0]
    assert down["u"] == pytest.approx(0.25, abs=0.01)
    assert down["v"] == pytest.approx(0.75, abs=0.01)


def test_calibration_progress_is_visible(client):
    client.post("/api/session/start")
    client.post("/api/calibration/start")
    flash_corner(client, 0.0, 0.0)
    progress = state(client)["calibration"]
    assert progress["corners_captured"] == 1
    assert progress["corner_index"] == 1
    assert client.post("/api/calibration/abort").status_code == 200
    assert state(client)["calibration"]["corners_captured"] == 0
    assert state(client)["phase"] == "calibrating"


def test_phase_conflicts_are_409(client):
    response = client.post("/api/calibration/start")
    assert response.status_code == 409
    assert "error" in response.json()
    assert client.post("/api/alignment/arm", json={"corner": 0}).status_code == 409
    client.post("/api/session/start")
    client.post("/api/session/stop")
    assert client.post("/api/session/stop").status_code == 409


def test_bad_bodies_are_422(client):
    client.post("/api/session/start")
    cases = [
        ("PUT", "/api/zones", {**ZONE_BODY, "band_width": 0.5}),
        ("PUT", "/api/zones", {**ZONE_BODY, "left": ["none"]}),
        ("PUT", "/api/zones", {**ZONE_BODY, "sideways": True}),
        ("POST", "/api/alignment/arm", {"corner": 5}),
        ("POST", "/api/alignment/arm", {}),
        ("POST", "/api/sim/pen", {"pressed": "yes"}),
        ("POST", "/api/sim/tick", {"frames": -1}),
        ("POST", "/api/sim/tick", {"frames": "many"}),
    ]
    for method, path, body in cases:
        response = client.request(method, path, json=body)
        assert response.status_code == 422, (path, body, response.text)
        assert "error" in response.json()
    # non-object and non-JSON bodies
    assert client.post("/api/sim/tick", content=b"[1,2]").status_code == 422
    assert client.post("/api/sim/tick", content=b"{nope").status_code == 422


def test_unknown_endpoints_are_404(client):
    assert client.get("/api/nope").status_code == 404
    assert client.post("/api/nope").status_code == 404
    assert client.put("/api/nope").status_code == 404


def test_zone_update_shows_in_state(client):
    client.post("/api/session/start")
    response = client.put("/api/zones", json=ZONE_BODY)
    assert response.status_code == 200
    assert response.json()["zone_config"]["right"] == ["right_click", "none", "none"]
    assert state(client)["zone_config"] == ZONE_BODY


def test_zone_update_reaches_the_live_tracker(service, client):
    to_running(client)
    client.put("/api/zones", json=ZONE_BODY)
    # a press in the right-top band now fires the configured action
    pen(client, s=1.02, t=0.1, pressed=True)
    tick(client, 2)
    pen(client, pressed=False)
    tick(client, 6)
    events = state(client)["recent_events"]
    assert {"t": events[0]["t"], "kind": "side", "action": "right_click"} == events[0]


def test_sim_tick_only_feeds_live_sessions(client):
    assert tick(client, 5)["frame"] == 0  # disconnected: nothing consumed
    client.post("/api/session/start")
    assert tick(client, 5)["frame"] == 5
    assert state(client)["frame"] == 5


def test_fresh_session_after_stop(client):
    to_running(client)
    client.post("/api/session/stop")
    assert state(client)["phase"] == "stopped"
    assert client.post("/api/session/start").json()["phase"] == "aligning"
    snap = state(client)
    assert snap["calibration"]["corners_captured"] == 0
    assert snap["alignment"]["visible"] == [False, False, False, False]


def test_save_on_exit_persists_zone_edits(tmp_path):
    config_path = str(tmp_path / "irboard.json")
    svc = make_service(tmp_path, config=SessionConfig(save_on_exit=True))
    port = svc.start(port=0)
    try:
        with httpx.Client(base_url=f"http://127.0.0.1:{port}", timeout=10.0) as c:
            c.post("/api/session/start")
            assert c.put("/api/zones", json=ZONE_BODY).status_code == 200
            c.post("/api/session/stop")
    finally:
        svc.stop()
    saved = load_config(config_path)
    assert saved.zone_config.right == (
        ZoneAction.RIGHT_CLICK, ZoneAction.NONE, ZoneAction.NONE,
    )
    assert saved.zone_config.band_width == 0.05

    revived = make_service(tmp_path, config=load_config(config_path))
    port = revived.start(port=0)
    try:
        with httpx.Client(base_url=f"http://127.0.0.1:{port}", timeout=10.0) as c:
            assert state(c)["zone_config"] == ZONE_BODY
    finally:
        revived.stop()


def test_event_stream_carries_the_wizard(service, client):
    with client.stream("GET", "/api/events") as stream:
        lines = stream.iter_lines()
        hello = json.loads(next(lines))
        assert hello == {"t": 0, "kind": "phase", "phase": "disconnected"}

        with httpx.Client(base_url=service.base_url, timeout=10.0) as other:
            other.post("/api/session/start")
        records = [json.loads(next(lines)) for _ in range(6)]
        kinds = [r["kind"] for r in records]
        assert kinds == [
            "phase",
            "device_command",
            "device_command",
            "device_command",
            "phase",
            "phase",
        ]
        assert records[0]["phase"] == "connected"
        assert records[1]["data"] == "a2120033"
        assert records[-1]["phase"] == "aligning"


def test_event_stream_carries_blobs_and_pointer_events(service):
    with httpx.Client(base_url=service.base_url, timeout=10.0) as c:
        to_running(c)
        with c.stream("GET", "/api/events") as stream:
            lines = stream.iter_lines()
            assert json.loads(next(lines))["phase"] == "running"
            with httpx.Client(base_url=service.base_url, timeout=10.0) as other:
                pen(other, s=0.5, t=0.5, pressed=True)
                tick(other, 1)
            records = [json.loads(next(lines)) for _ in range(2)]
            by_kind = {r["kind"]: r for r in records}
            assert by_kind["down"]["u"] == pytest.approx(0.5, abs=0.01)
            assert len(by_kind["blobs"]["blobs"]) == 1


def test_battery_warning_reaches_the_stream(tmp_path):
    svc = make_service(tmp_path, battery_raw=99)
    port = svc.start(port=0)
    try:
        base = f"http://127.0.0.1:{port}"
        with httpx.Client(base_url=base, timeout=10.0) as c:
            with c.stream("GET", "/api/events") as stream:
                lines = stream.iter_lines()
                next(lines)  # hello
                with httpx.Client(base_url=base, timeout=10.0) as other:
                    other.post("/api/session/start")
                    tick(other, 1)  # frame 0 carries a status report
                # six records from start(), then the status report's pair
                records = [json.loads(next(lines)) for _ in range(8)]
            kinds = [r["kind"] for r in records]
            assert kinds[-2:] == ["battery", "low_battery"]
            assert records[-1]["percent"] == 49.5
            assert state(c)["battery_percent"] == 49.5
    finally:
        svc.stop()


def test_fallback_page_when_console_missing(client):
    response = client.get("/")
    assert response.status_code == 200
    assert "console" in response.text


def test_static_assets_served_from_ui_dir(tmp_path):
    ui_dir = tmp_path / "dist"
    ui_dir.mkdir()
    (ui_dir / "index.html").write_text("<title>console</title>")
    (ui_dir / "app.js").write_text("export {};")
    svc = make_service(tmp_path, ui_dir=str(ui_dir))
    port = svc.start(port=0)
    try:
        with httpx.Client(base_url=f"http://127.0.0.1:{port}", timeout=10.0) as c:
            assert c.get("/").text == "<title>console</title>"
            js = c.get("/app.js")
            assert js.status_code == 200
            assert "javascript" in js.headers["content-type"]
            assert c.get("/missing.css").status_code == 404
    finally:
        svc.stop()


def test_path_traversal_is_blocked(tmp_path):
    secret = tmp_path / "secret.txt"
    secret.write_text("do not serve")
    ui_dir = tmp_path / "dist"
    ui_dir.mkdir()
    (ui_dir / "index.html").write_text("ok")
    svc = make_service(tmp_path, ui_dir=str(ui_dir))
    port = svc.start(port=0)
    try:
        conn = http.client.HTTPConnection("127.0.0.1", port, timeout=10)
        conn.putrequest("GET", "/../secret.txt", skip_host=False)
        conn.endheaders()
        response = conn.getresponse()
        body = response.read()
        assert response.status == 404
        assert b"do not serve" not in body
        conn.close()
    finally:
        svc.stop()
