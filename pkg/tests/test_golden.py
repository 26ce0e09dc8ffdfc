"""Frozen-fixture comparisons: scripted scenarios must reproduce exactly.

Regenerate via tools/generate_fixtures.py only on intentional schema or
scenario changes.
"""

import json
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from podwatch.podsim import parse_script_text
from podwatch.server.service import EmbeddedService
from podwatch.vizgen import deserialize_frame, serialize_frame

from tools.generate_fixtures import SCENARIOS, scenario_frame

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.mark.parametrize("name", sorted(SCENARIOS))
def test_scenario_frames_match_frozen_fixtures(name):
    script_text, cycles = SCENARIOS[name]
    frozen = (FIXTURES / name).read_bytes()
    assert scenario_frame(script_text, cycles) == frozen


@pytest.mark.parametrize("name", sorted(SCENARIOS))
def test_fixture_frames_round_trip_canonically(name):
    frozen = (FIXTURES / name).read_bytes()
    assert serialize_frame(deserialize_frame(frozen)) == frozen


def test_water_event_fixture_contents():
    frame = json.loads((FIXTURES / "frame_water.json").read_bytes())
    water_cues = [c for c in frame["pod_cues"] if c["cue"] == "Water"]
    assert water_cues and water_cues[0]["active"] is True
    assert any(a["point_id"] == "status.water_alarm" for a in frame["active_alerts"])


def test_session_transcript_matches_fixture():
    frozen = (FIXTURES / "session_transcript.jsonl").read_text().splitlines()
    service = EmbeddedService(
        script=parse_script_text("10\tsubmit_job\tj1,alice,2,4\n40\twater\tzone02\n"),
        nodes=16,
        racks=4,
        slots_per_rack=4,
        zones=2,
        cycle_period=30.0,
    )
    service.server.clock = lambda: 1700000000
    transcript = []
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
                recv()
                for _ in range(3):
                    service.run_cycle()
                frames = 0
                while frames < 3:
                    if recv()["type"] == "frame":
                        frames += 1
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
    assert transcript == frozen
