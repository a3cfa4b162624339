import json

import pytest

from irboard.cli import main, stroke_summary
from irboard.tracker import EventKind, PointerEvent, read_trace, write_trace

UNIT_CORNERS = ((0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0))


def prologue_steps(flash=10, gap=8):
    """Keyframes that flash the pen at each surface corner in capture order."""
    steps = []
    frame = 0
    for s, t in UNIT_CORNERS:
        steps.append({"frame": frame, "s": s, "t": t, "pressed": True})
        steps.append({"frame": frame + flash, "pressed": False})
        frame += flash + gap
    return steps, frame


def gesture_script(sigma=0.0, seed=0):
    steps, frame = prologue_steps()
    frame += 8
    steps.append({"frame": frame, "s": 0.25, "t": 0.75, "pressed": True})
    steps.append({"frame": frame + 4, "pressed": False})
    steps.append({"frame": frame + 14, "pressed": False})
    return {"scene": "A", "sigma": sigma, "seed": seed, "steps": steps}


def write_json(path, body) -> str:
    path.write_text(json.dumps(body))
    return str(path)


def test_simulate_writes_a_trace(tmp_path, capsys):
    script = write_json(tmp_path / "run.json", gesture_script())
    out = str(tmp_path / "trace.jsonl")
    code = main(["simulate", "--script", script, "--out", out,
                 "--config", str(tmp_path / "irboard.json")])
    assert code == 0
    events = read_trace(out)
    kinds = [e.kind for e in events]
    assert kinds.count(EventKind.DOWN) == 1
    assert kinds.count(EventKind.UP) == 1
    down = events[0]
    assert down.kind is EventKind.DOWN
    assert down.u == pytest.approx(0.25, abs=0.01)
    assert down.v == pytest.approx(0.75, abs=0.01)
    captured = capsys.readouterr()
    assert f"wrote {len(events)} events to {out}" in captured.out
    assert "never completed" not in captured.err


def test_simulate_scene_flag_beats_script_scene(tmp_path):
    body = gesture_script()
    body["scene"] = "C"
    script = write_json(tmp_path / "run.json", body)
    out_c = str(tmp_path / "c.jsonl")
    out_a = str(tmp_path / "a.jsonl")
    assert main(["simulate", "--script", script, "--out", out_c,
                 "--config", str(tmp_path / "cfg.json")]) == 0
    assert main(["simulate", "--script", script, "--scene", "A", "--out", out_a,
                 "--config", str(tmp_path / "cfg.json")]) == 0
    # both runs land the same gesture; only quantization differs by scene
    for path in (out_c, out_a):
        events = read_trace(path)
        assert events[0].u == pytest.approx(0.25, abs=0.01)


def test_simulate_requires_a_script(tmp_path, capsys):
    code = main(["simulate", "--scene", "A",
                 "--config", str(tmp_path / "cfg.json")])
    assert code == 3
    assert "script" in capsys.readouterr().err


def test_simulate_needs_a_scene_somewhere(tmp_path, capsys):
    script = write_json(tmp_path / "run.json", {"steps": []})
    code = main(["simulate", "--script", script,
                 "--config", str(tmp_path / "cfg.json")])
    assert code == 3
    assert "scene" in capsys.readouterr().err


def test_simulate_rejects_malformed_config(tmp_path, capsys):
    config = tmp_path / "irboard.json"
    config.write_text("{nope")
    script = write_json(tmp_path / "run.json", gesture_script())
    code = main(["simulate", "--script", script, "--config", str(config)])
    assert code == 2
    assert "config error" in capsys.readouterr().err


def test_simulate_notes_incomplete_calibration(tmp_path, capsys):
    body = {
        "scene": "A",
        "steps": [
            {"frame": 0, "s": 0.5, "t": 0.5, "pressed": True},
            {"frame": 4, "pressed": False},
        ],
    }
    script = write_json(tmp_path / "run.json", body)
    out = str(tmp_path / "trace.jsonl")
    code = main(["simulate", "--script", script, "--out", out,
                 "--config", str(tmp_path / "cfg.json")])
    assert code == 0
    assert "never completed" in capsys.readouterr().err
    assert read_trace(out) == []


def test_seed_flag_overrides_script_seed(tmp_path):
    steps, frame = prologue_steps(flash=40, gap=10)
    frame += 10
    steps.append({"frame": frame, "s": 0.3, "t": 0.4, "pressed": True})
    steps.append({"frame": frame + 30, "pressed": False})
    steps.append({"frame": frame + 40, "pressed": False})
    body = {"scene": "B", "sigma": 2.0, "seed": 11, "steps": steps}
    script = write_json(tmp_path / "run.json", body)
    config = str(tmp_path / "cfg.json")

    def run(name, *extra):
        out = tmp_path / name
        assert main(["simulate", "--script", script, "--out", str(out),
                     "--config", config, *extra]) == 0
        return out.read_text()

    t42a = run("a.jsonl", "--seed", "42")
    t42b = run("b.jsonl", "--seed", "42")
    t43 = run("c.jsonl", "--seed", "43")
    t_default = run("d.jsonl")
    t11 = run("e.jsonl", "--seed", "11")
    assert t42a == t42b
    assert t42a != t43
    assert t_default == t11
    assert t_default != t42a


# ---------- replay ----------

SQUARE_TRACE = [
    PointerEvent(t=0, kind=EventKind.DOWN, u=0.2, v=0.2),
    PointerEvent(t=1, kind=EventKind.MOVE, u=0.8, v=0.2),
    PointerEvent(t=2, kind=EventKind.MOVE, u=0.8, v=0.8),
    PointerEvent(t=3, kind=EventKind.MOVE, u=0.2, v=0.8),
    PointerEvent(t=4, kind=EventKind.MOVE, u=0.2, v=0.2),
    PointerEvent(t=8, kind=EventKind.UP, u=0.2, v=0.2),
]


def test_replay_summarizes_a_square(tmp_path, capsys):
    path = str(tmp_path / "trace.jsonl")
    write_trace(path, SQUARE_TRACE)
    assert main(["replay", "--out", path]) == 0
    out = capsys.readouterr().out
    assert "events: 6 (down: 1, move: 4, up: 1, side: 0)" in out
    assert "strokes: 1" in out
    assert "stroke 1: frames 0..8, u [0.2000..0.8000], v [0.2000..0.8000]" in out


def test_replay_requires_a_path(capsys):
    assert main(["replay"]) == 3
    assert "--out" in capsys.readouterr().err


def test_replay_rejects_corrupt_trace(tmp_path, capsys):
    path = tmp_path / "trace.jsonl"
    path.write_text('{"t": 0, "kind": "down", "u": 0.1, "v": 0.2}\nnot json\n')
    assert main(["replay", "--out", str(path)]) == 3
    assert "line 2" in capsys.readouterr().err


def test_stroke_summary_groups_runs():
    events = SQUARE_TRACE + [
        PointerEvent(t=10, kind=EventKind.SIDE, action="right_click"),
        PointerEvent(t=12, kind=EventKind.DOWN, u=0.5, v=0.5),
        PointerEvent(t=16, kind=EventKind.UP, u=0.5, v=0.5),
    ]
    summary = stroke_summary(events)
    assert summary["counts"] == {"down": 2, "move": 4, "up": 2, "side": 1}
    assert len(summary["strokes"]) == 2
    assert summary["strokes"][1] == {
        "start": 12, "end": 16,
        "u_min": 0.5, "u_max": 0.5, "v_min": 0.5, "v_max": 0.5,
    }


# ---------- calibrate-check ----------


def test_calibrate_check_bundled_scenes_pass(tmp_path, capsys):
    for scene in ("A", "B", "C"):
        code = main(["calibrate-check", "--scene", scene,
                     "--config", str(tmp_path / "cfg.json")])
        assert code == 0
        out = capsys.readouterr().out
        assert out.count("visible") == 4
        assert "alignment: pass" in out


def test_calibrate_check_flags_offscreen_corners(tmp_path, capsys):
    scene_file = write_json(
        tmp_path / "wide.json",
        {
            "scene": {
                "bottom_cm": 100, "top_cm": 120,
                "left_cm": 100, "right_cm": 100,
                "dist_bottom_cm": 200, "dist_top_cm": 220,
            },
            "steps": [],
        },
    )
    code = main(["calibrate-check", "--scene", scene_file,
                 "--config", str(tmp_path / "cfg.json")])
    assert code == 1
    out = capsys.readouterr().out
    assert "OUT OF VIEW" in out
    assert "alignment: FAIL" in out


def test_calibrate_check_honors_margin(tmp_path, capsys):
    config = write_json(tmp_path / "cfg.json", {"alignment_margin": 65})
    code = main(["calibrate-check", "--scene", "A", "--config", config])
    assert code == 1
    assert "OUT OF VIEW" in capsys.readouterr().out


def test_scene_file_without_scene_is_an_error(tmp_path, capsys):
    scene_file = write_json(tmp_path / "empty.json", {"steps": []})
    code = main(["calibrate-check", "--scene", scene_file,
                 "--config", str(tmp_path / "cfg.json")])
    assert code == 3
    assert "no scene in file" in capsys.readouterr().err
