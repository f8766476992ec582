"""Speak the session wire protocol against an in-process service.

Every message is a JSON text frame over a `/ws` WebSocket, and every
inbound message gets exactly one reply. This script plays a short line
through the real server (no network needed) and prints the conversation
so client authors can see the exact shapes on the wire.
"""

import json

from fastapi.testclient import TestClient

from weldkit import CalibrationState, TrajectorySpec, WeldLineSpec, gen_pass
from weldkit.server import create_app
from weldkit.session import _enc_frame

calib = CalibrationState.bench()
spec = TrajectorySpec(line=WeldLineSpec.on_bench(calib), work_angle_deg=82.5, duration_s=1.0)
frames, _ = gen_pass(spec, calib)


def say(ws, obj, show=True):
    ws.send_text(json.dumps(obj))
    reply = json.loads(ws.receive_text())
    if show:
        shown = json.dumps(reply)
        print(f"<- {shown[:120]}{'...' if len(shown) > 120 else ''}")
    return reply


app = create_app(calibration=calib)
with TestClient(app) as client, client.websocket_connect("/ws") as ws:
    print("-> hello")
    say(ws, {"type": "hello", "participant": "demo", "sequence": "AR-first",
             "condition": "AR"})

    print("-> start_line")
    say(ws, {"type": "start_line"})

    print(f"-> frame x{len(frames)} (first reply shown)")
    say(ws, {"type": "frame", "frame": _enc_frame(frames[0])})
    for f in frames[1:]:
        say(ws, {"type": "frame", "frame": _enc_frame(f)}, show=False)

    # Out-of-order input: typed error reply, session state untouched.
    print("-> frame (stale, resending the first)")
    say(ws, {"type": "frame", "frame": _enc_frame(frames[0])})

    print("-> end_line")
    reply = say(ws, {"type": "end_line"}, show=False)
    cursor = reply["cursor"]
    ctwd = reply["summary"]["shares"]["ctwd"]
    print(f"<- line_summary: ctwd within {ctwd['within_n']} frames, "
          f"cursor module {cursor['module_index']} line {cursor['line_index']}")

    print("-> bye")
    say(ws, {"type": "bye"})
