"""Regenerate the golden fixtures under tests/fixtures/.

Each fixture comes from a deterministic scripted simulator run; tests
compare freshly generated bytes against these files, so regenerate only
when the frame schema or scenarios intentionally change:

    python3 tools/generate_fixtures.py
"""

import json
import sys
from pathlib import Path

from fastapi.testclient import TestClient

from podwatch.harness import SimHarness
from podwatch.podsim import parse_script_text
from podwatch.server.service import EmbeddedService

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "tests" / "fixtures"

SCENARIOS = {
    "frame_idle.json": ("", 2),
    "frame_cooling.json": ("10\ttemp_ramp\tzone01,0.2\n", 12),
    "frame_water.json": ("10\tsubmit_job\tj1,alice,4,4\n30\twater\tzone02\n", 4),
    "frame_fire.json": ("30\tfire\n", 4),
}


def scenario_frame(script_text: str, cycles: int) -> bytes:
    script = parse_script_text(script_text) if script_text else None
    with SimHarness(script=script) as harness:
        results = harness.run_cycles(cycles)
    return results[-1].frame_bytes


def generate_frames() -> None:
    console_fixtures = ROOT / "frontend" / "test" / "fixtures"
    for name, (script_text, cycles) in SCENARIOS.items():
        blob = scenario_frame(script_text, cycles)
        (FIXTURES / name).write_bytes(blob)
        if console_fixtures.is_dir():  # keep the console's copies in sync
            (console_fixtures / name).write_bytes(blob)
        frame = json.loads(blob)
        cues = [c["cue"] for c in frame["pod_cues"] if c["active"]]
        print(f"{name}: frame {frame['frame_id']}, active cues {cues}")


def generate_transcript() -> None:
    service = EmbeddedService(
        script=parse_script_text("10\tsubmit_job\tj1,alice,2,4\n40\twater\tzone02\n"),
        nodes=16,
        racks=4,
        slots_per_rack=4,
        zones=2,
        cycle_period=30.0,
    )
    service.server.clock = lambda: 1700000000
    transcript: list[str] = []
    try:
        with TestClient(service.app) as client:
            with client.websocket_connect("/ws") as ws:
                def send(payload):
                    ws.send_text(json.dumps(payload))

                def recv():
                    raw = ws.receive_text()
                    transcript.append(raw)
                    return json.loads(raw)

                send({"type": "hello", "v": 1, "token": "admin-token"})
                recv()  # auth_result
                for _ in range(3):
                    service.run_cycle()
                received_frames = 0
                while received_frames < 3:
                    message = recv()
                    if message["type"] == "frame":
                        received_frames += 1
                send({"type": "action", "v": 1, "id": "t1", "verb": "comment",
                      "target": "node-0001", "comment": "water event acknowledged"})
                while recv()["type"] != "action_result":
                    pass
                send({"type": "pull", "v": 1, "id": "t2",
                      "selector": {"kind": "user", "value": "alice"}})
                while recv()["type"] != "pull_result":
                    pass
    finally:
        service.stop()
    (FIXTURES / "session_transcript.jsonl").write_text(
        "\n".join(transcript) + "\n", encoding="utf-8"
    )
    print(f"session_transcript.jsonl: {len(transcript)} messages")


def main() -> int:
    FIXTURES.mkdir(parents=True, exist_ok=True)
    generate_frames()
    generate_transcript()
    return 0


if __name__ == "__main__":
    sys.exit(main())
