"""WebSocket service: handshake, streaming parity, isolation, checkpoints."""

import json
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

from weldkit.analytics import Condition, StudySequence
from weldkit.errors import StorageError
from weldkit.pose import PoseFrame, TargetRanges, WeldLineSpec
from weldkit.server import create_app
from weldkit.session import (
    SessionEngine,
    SessionHeader,
    _enc_frame,
    _enc_sample,
    _enc_summary,
    load,
)
from weldkit.synth import TrajectorySpec, gen_pass, inject_noise


def rpc(ws, obj):
    ws.send_text(json.dumps(obj))
    return json.loads(ws.receive_text())


def hello(ws, participant="P01", sequence="AR-first", condition="AR"):
    return rpc(
        ws,
        {
            "type": "hello",
            "participant": participant,
            "sequence": sequence,
            "condition": condition,
        },
    )


def pass_frames(calib, duration_s=1.0, seed=None, ctwd_mm=10.0, start_time=0.0):
    spec = TrajectorySpec(
        line=WeldLineSpec.on_bench(calib),
        ctwd_mm=ctwd_mm,
        work_angle_deg=82.5,
        duration_s=duration_s,
        start_time=start_time,
    )
    frames, _ = gen_pass(spec, calib)
    if seed is not None:
        frames = inject_noise(frames, position_sd_m=0.001, orientation_sd_deg=0.2, seed=seed)
    return frames


def frame_msg(frame):
    return {"type": "frame", "frame": _enc_frame(frame)}


HEADER = SessionHeader(participant="P01", sequence=StudySequence.AR_FIRST, condition=Condition.AR)


@pytest.fixture
def client(bench, tmp_path):
    app = create_app(storage_dir=tmp_path, calibration=bench)
    with TestClient(app) as c:
        c.app = app
        c.storage_dir = tmp_path
        yield c


class TestHandshake:
    def test_hello_returns_welcome(self, client):
        with client.websocket_connect("/ws") as ws:
            reply = hello(ws)
            assert reply["type"] == "welcome"
            assert reply["session_id"] == "s1"
            assert reply["ranges"]["ctwd_mm"] == list(TargetRanges().ctwd_mm)
            assert len(reply["plan"]["modules"]) == 6
            assert "grid_plane" in reply["calibration"]
            assert client.app.state.server.registry  # engine registered

    def test_double_hello_rejected(self, client):
        with client.websocket_connect("/ws") as ws:
            hello(ws)
            reply = hello(ws)
            assert reply["type"] == "error"
            assert reply["error"] == "ProtocolError"

    def test_frame_before_hello_rejected(self, client, bench):
        with client.websocket_connect("/ws") as ws:
            frame = pass_frames(bench)[0]
            reply = rpc(ws, frame_msg(frame))
            assert reply["type"] == "error"
            assert reply["error"] == "ProtocolError"
            assert "hello" in reply["detail"]

    def test_unknown_type_rejected(self, client):
        with client.websocket_connect("/ws") as ws:
            reply = rpc(ws, {"type": "blargh"})
            assert reply["type"] == "error"
            assert reply["error"] == "ProtocolError"

    def test_malformed_json_rejected(self, client):
        with client.websocket_connect("/ws") as ws:
            ws.send_text("{this is not json")
            reply = json.loads(ws.receive_text())
            assert reply["type"] == "error"
            assert reply["error"] == "ProtocolError"
            assert "JSON" in reply["detail"]

    def test_bad_frame_reports_dotted_field(self, client):
        with client.websocket_connect("/ws") as ws:
            hello(ws)
            rpc(ws, {"type": "start_line"})
            reply = rpc(ws, {"type": "frame", "frame": {"timestamp": 0.0}})
            assert reply["type"] == "error"
            assert reply["error"] == "SchemaError"
            assert reply["field"] == "frame.frame_index"


class TestStreaming:
    def test_online_matches_offline(self, client, bench):
        frames = pass_frames(bench, duration_s=1.5, seed=7)
        offline = SessionEngine(HEADER, bench)
        offline.start_line()
        expected = [offline.ingest(f) for f in frames]
        offline_rec = offline.end_line()

        with client.websocket_connect("/ws") as ws:
            hello(ws)
            start = rpc(ws, {"type": "start_line"})
            assert start["type"] == "line_started"
            assert start["module"] == "ctwd"
            assert start["assisted"] is True
            replies = [rpc(ws, frame_msg(f)) for f in frames]
            summary = rpc(ws, {"type": "end_line"})

        assert all(r["type"] == "sample" for r in replies)
        got_samples = [r["sample"] for r in replies]
        want_samples = [_enc_sample(s) for s, _ in expected]
        assert got_samples == want_samples
        opened = [e for r in replies for e in r["feedback"]]
        assert opened  # at least the opening in-range event
        assert summary["summary"] == _enc_summary(offline_rec.summary)
        assert summary["cursor"] == {"module_index": 0, "line_index": 1, "complete": False}

    def test_out_of_order_frame_rejected_then_recovers(self, client, bench):
        frames = pass_frames(bench, duration_s=1.0, seed=3)
        offline = SessionEngine(HEADER, bench)
        offline.start_line()
        for f in frames:
            offline.ingest(f)
        offline_rec = offline.end_line()

        with client.websocket_connect("/ws") as ws:
            hello(ws)
            rpc(ws, {"type": "start_line"})
            for f in frames[:10]:
                rpc(ws, frame_msg(f))
            reply = rpc(ws, frame_msg(frames[4]))  # stale: already consumed
            assert reply["type"] == "error"
            assert reply["error"] == "SequenceError"
            for f in frames[10:]:
                assert rpc(ws, frame_msg(f))["type"] == "sample"
            summary = rpc(ws, {"type": "end_line"})
        assert summary["summary"] == _enc_summary(offline_rec.summary)

    def test_feedback_suppressed_when_unassisted(self, client, bench):
        far = pass_frames(bench, duration_s=1.0, ctwd_mm=25.0)  # well above range
        with client.websocket_connect("/ws") as ws:
            hello(ws)
            assert rpc(ws, {"type": "set_assist", "assisted": False}) == {
                "type": "assist",
                "assisted": False,
            }
            start = rpc(ws, {"type": "start_line"})
            assert start["assisted"] is False
            replies = [rpc(ws, frame_msg(f)) for f in far]
            assert all(r["feedback"] == [] for r in replies)
            summary = rpc(ws, {"type": "end_line"})
            # Events are still tracked server-side for the record.
            assert summary["events"]

            # Back to the plan default: module 2 is assisted, hints flow again.
            rpc(ws, {"type": "set_assist", "assisted": None})
            start = rpc(ws, {"type": "start_line"})
            assert start["assisted"] is True
            replies = [
                rpc(ws, frame_msg(f))
                for f in pass_frames(bench, duration_s=1.0, ctwd_mm=25.0, start_time=50.0)
            ]
            assert any(r["feedback"] for r in replies)
            rpc(ws, {"type": "end_line"})

    def test_set_assist_mid_line_rejected(self, client, bench):
        frames = pass_frames(bench, duration_s=0.5)
        with client.websocket_connect("/ws") as ws:
            hello(ws)
            rpc(ws, {"type": "start_line"})
            rpc(ws, frame_msg(frames[0]))
            reply = rpc(ws, {"type": "set_assist", "assisted": False})
            assert reply["type"] == "error"
            assert reply["error"] == "SequenceError"
            # The line is still live.
            assert rpc(ws, frame_msg(frames[1]))["type"] == "sample"

    def test_tap_recalibrates_between_lines(self, client, bench):
        frames = pass_frames(bench, duration_s=0.5)
        tap_frame = PoseFrame(
            timestamp=1000.0,
            frame_index=10_000,
            position=np.array([0.0, 0.0, 0.102]),
            orientation=np.array([1.0, 0.0, 0.0, 0.0]),
        )
        with client.websocket_connect("/ws") as ws:
            hello(ws)
            rpc(ws, {"type": "start_line"})
            for f in frames:
                rpc(ws, frame_msg(f))
            mid_line = rpc(
                ws,
                {"type": "tap", "frame": _enc_frame(tap_frame), "known_point": [0.0, 0.0, 0.0]},
            )
            assert mid_line["type"] == "error"
            assert mid_line["error"] == "SequenceError"
            rpc(ws, {"type": "end_line"})
            reply = rpc(
                ws,
                {"type": "tap", "frame": _enc_frame(tap_frame), "known_point": [0.0, 0.0, 0.0]},
            )
            assert reply["type"] == "recalibrated"
            got = np.array(reply["calibration"]["tip_offset"]["translation"])
            assert not np.allclose(got, bench.tip_offset.translation)


class TestIsolation:
    def test_two_concurrent_sessions_share_nothing(self, client, bench):
        frames_a = pass_frames(bench, duration_s=1.0, seed=1)
        frames_b = pass_frames(bench, duration_s=1.0, seed=2, ctwd_mm=12.0)

        def offline_run(frames):
            eng = SessionEngine(HEADER, bench)
            eng.start_line()
            for f in frames:
                eng.ingest(f)
            return eng.end_line()

        rec_a = offline_run(frames_a)
        rec_b = offline_run(frames_b)

        with client.websocket_connect("/ws") as wa, client.websocket_connect("/ws") as wb:
            assert hello(wa, participant="A")["session_id"] == "s1"
            assert hello(wb, participant="B")["session_id"] == "s2"
            assert len(client.app.state.server.registry) == 2
            rpc(wa, {"type": "start_line"})
            rpc(wb, {"type": "start_line"})
            for fa, fb in zip(frames_a, frames_b):
                ra = rpc(wa, frame_msg(fa))
                rb = rpc(wb, frame_msg(fb))
                assert ra["type"] == "sample" and rb["type"] == "sample"
            sum_a = rpc(wa, {"type": "end_line"})
            sum_b = rpc(wb, {"type": "end_line"})

        assert sum_a["summary"] == _enc_summary(rec_a.summary)
        assert sum_b["summary"] == _enc_summary(rec_b.summary)
        assert sum_a["summary"] != sum_b["summary"]


class TestPersistence:
    def test_bye_persists_and_unregisters(self, client, bench):
        frames = pass_frames(bench, duration_s=1.0, seed=5)
        with client.websocket_connect("/ws") as ws:
            hello(ws)
            rpc(ws, {"type": "start_line"})
            for f in frames:
                rpc(ws, frame_msg(f))
            rpc(ws, {"type": "end_line"})
            assert rpc(ws, {"type": "bye"}) == {"type": "bye"}

        path = client.storage_dir / "P01-AR-s1.json"
        assert path.exists()
        session = load(path)
        assert len(session.lines) == 1
        assert session.lines[0].completed
        assert session.header.participant == "P01"
        assert not client.app.state.server.registry

    def test_disconnect_checkpoints_partial_line(self, client, bench):
        frames = pass_frames(bench, duration_s=1.0, seed=6)
        with client.websocket_connect("/ws") as ws:
            hello(ws)
            rpc(ws, {"type": "start_line"})
            for f in frames[:45]:
                rpc(ws, frame_msg(f))
            # Context exit drops the socket without a bye.

        path = client.storage_dir / "P01-AR-s1.json"
        deadline = time.time() + 5.0
        while not path.exists() and time.time() < deadline:
            time.sleep(0.01)
        session = load(path)
        assert len(session.lines) == 1
        assert not session.lines[0].completed
        assert len(session.lines[0].frames) == 45

        resumed = SessionEngine.from_session(session)
        assert resumed.lesson.module_index == 0
        assert resumed.lesson.line_index == 0  # partial line repeats
        start = resumed.start_line()
        assert start.line_index == 0

    def test_storage_dir_is_created_on_demand(self, tmp_path, bench):
        target = tmp_path / "store" / "nested"
        client = TestClient(create_app(storage_dir=target, calibration=bench))
        with client.websocket_connect("/ws") as ws:
            hello(ws)
            assert rpc(ws, {"type": "bye"}) == {"type": "bye"}
        assert (target / "P01-AR-s1.json").exists()

    def test_storage_dir_colliding_with_file_fails_fast(self, tmp_path, bench):
        target = tmp_path / "store"
        target.write_text("in the way")
        with pytest.raises(StorageError):
            create_app(storage_dir=target, calibration=bench)

    def test_persist_failure_on_bye_keeps_session_retriable(
        self, client, bench, monkeypatch
    ):
        frames = pass_frames(bench, duration_s=1.0)
        broken = {"on": True}

        def flaky_persist(session, path):
            if broken["on"]:
                raise StorageError(f"could not write session log {path}: disk full")
            return real_persist(session, path)

        import weldkit.server as server_mod

        real_persist = server_mod.persist
        monkeypatch.setattr(server_mod, "persist", flaky_persist)
        with client.websocket_connect("/ws") as ws:
            hello(ws)
            rpc(ws, {"type": "start_line"})
            for f in frames:
                rpc(ws, frame_msg(f))
            rpc(ws, {"type": "end_line"})
            reply = rpc(ws, {"type": "bye"})
            assert reply["type"] == "error"
            assert reply["error"] == "StorageError"
            # Session survived the failed checkpoint; retry succeeds.
            assert "s1" in client.app.state.server.registry
            broken["on"] = False
            assert rpc(ws, {"type": "bye"}) == {"type": "bye"}
        assert (client.storage_dir / "P01-AR-s1.json").exists()
        assert not client.app.state.server.registry

    def test_persist_failure_on_disconnect_does_not_leak(
        self, client, bench, monkeypatch
    ):
        def broken_persist(session, path):
            raise StorageError(f"could not write session log {path}: disk full")

        import weldkit.server as server_mod

        monkeypatch.setattr(server_mod, "persist", broken_persist)
        with client.websocket_connect("/ws") as ws:
            hello(ws)
            # Context exit drops the socket; the failed checkpoint must not
            # blow up the endpoint or strand the registry entry.

        deadline = time.time() + 5.0
        while client.app.state.server.registry and time.time() < deadline:
            time.sleep(0.01)
        assert not client.app.state.server.registry
