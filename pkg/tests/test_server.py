import json
import threading
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

from tankrover.mapio import import_map, load_scenario_file
from tankrover.server import create_app, grid_payload, rle_encode
from tankrover.service import SessionRuntime


@pytest.fixture()
def client(scenario_path):
    runtime = SessionRuntime(load_scenario_file(scenario_path), seed=1)
    app = create_app(runtime, pace=False)
    with TestClient(app) as c:
        c.runtime = runtime
        yield c


FRAME_KEYS = {"stamp", "pose", "truth", "mode", "progress", "debris_remaining",
              "cleaned_count", "collision", "path"}


def wait_for(predicate, timeout=5.0):
    deadline = time.time() + timeout
    while time.time() < deadline:
        if predicate():
            return True
        time.sleep(0.01)
    return False


class TestRLE:
    def test_round_trip(self):
        rng = np.random.default_rng(0)
        cells = rng.integers(0, 3, size=(13, 17)).astype(np.int8)
        rle = rle_encode(cells)
        flat = []
        for value, count in rle:
            flat.extend([value] * count)
        assert np.array_equal(np.array(flat, dtype=np.int8).reshape(13, 17), cells)

    def test_compresses_runs(self):
        cells = np.zeros((10, 10), dtype=np.int8)
        assert rle_encode(cells) == [[0, 100]]


class TestHttpApi:
    def test_state_endpoint_fields(self, client):
        frame = client.get("/api/state").json()
        assert set(frame) == FRAME_KEYS
        assert frame["mode"] == "IDLE"

    def test_map_404_before_mapping(self, client):
        assert client.get("/api/map").status_code == 404
        assert client.get("/api/map.pgm").status_code == 404

    def test_command_flow_and_map_export(self, client):
        r = client.post("/api/command", json={"type": "start_mapping"})
        assert r.status_code == 200 and r.json() == {"ok": True}
        assert wait_for(lambda: client.get("/api/state").json()["mode"] == "MAPPING")
        payload = client.get("/api/map").json()
        assert payload["meta"]["resolution"] == 0.05
        total = sum(c for _, c in payload["cells_rle"])
        assert total == payload["meta"]["width"] * payload["meta"]["height"]
        pgm = client.get("/api/map.pgm").content
        yaml_text = client.get("/api/map.yaml").text
        grid = import_map(pgm, yaml_text)
        assert grid.meta.width == payload["meta"]["width"]
        r = client.post("/api/command", json={"type": "finish_mapping"})
        assert r.status_code == 200

    def test_unknown_command_422(self, client):
        r = client.post("/api/command", json={"type": "start_mission"})
        assert r.status_code == 422

    def test_invalid_mode_409(self, client):
        r = client.post("/api/command", json={"type": "pause"})
        assert r.status_code == 409
        body = r.json()
        assert body["code"] == "invalid-mode"

    def test_teleop_only_in_mapping(self, client):
        r = client.post("/api/teleop", json={"v": 0.3, "omega": 0.0})
        assert r.status_code == 409
        client.post("/api/command", json={"type": "start_mapping"})
        r = client.post("/api/teleop", json={"v": 0.3, "omega": 0.0})
        assert r.status_code == 200

    def test_mission_422_with_details(self, client):
        r = client.post("/api/mission", json={"version": 1, "frame": "map",
                                              "mode": "waypoints", "waypoints": []})
        assert r.status_code == 422
        assert r.json()["code"] == "no-map"
        client.post("/api/command", json={"type": "start_mapping"})
        time.sleep(0.3)
        client.post("/api/command", json={"type": "finish_mapping"})
        r = client.post("/api/mission", json={"version": 1, "frame": "map",
                                              "mode": "waypoints", "waypoints": []})
        assert r.status_code == 422
        assert r.json()["code"] == "invalid-mission"
        assert "non-empty" in r.json()["message"]

    def test_mission_accepted_and_executes(self, client):
        client.post("/api/command", json={"type": "start_mapping"})
        time.sleep(0.5)
        client.post("/api/command", json={"type": "finish_mapping"})
        r = client.post("/api/mission", json={"version": 1, "frame": "map",
                                              "mode": "waypoints",
                                              "waypoints": [{"x": 2.0, "y": 1.5}]})
        assert r.status_code == 200
        frame = client.get("/api/state").json()
        assert frame["mode"] == "EXECUTING"
        assert len(frame["path"]) > 1
        client.post("/api/command", json={"type": "abort"})


class TestWebSocket:
    def test_stream_and_path_delta(self, client):
        client.post("/api/command", json={"type": "start_mapping"})
        with client.websocket_connect("/ws/telemetry") as ws:
            first = json.loads(ws.receive_text())
            assert set(first) == FRAME_KEYS
            second = json.loads(ws.receive_text())
            assert "path" not in second  # unchanged path omitted
            assert second["stamp"] >= first["stamp"]

    def test_stamps_increase(self, client):
        client.post("/api/command", json={"type": "start_mapping"})
        stamps = []
        with client.websocket_connect("/ws/telemetry") as ws:
            for _ in range(4):
                stamps.append(json.loads(ws.receive_text())["stamp"])
        assert all(b > a for a, b in zip(stamps, stamps[1:]))


class TestConcurrentReads:
    def test_no_torn_frames_under_load(self, client):
        """1000 concurrent snapshot reads during a live run all observe
        complete, internally consistent frames."""
        client.post("/api/command", json={"type": "start_mapping"})
        client.post("/api/teleop", json={"v": 0.4, "omega": 0.1})
        host = client.app.state.host
        runtime = client.runtime
        errors = []
        per_thread_stamps = {}

        def reader(tid):
            stamps = []
            for _ in range(100):
                frame, _ = host.call(lambda: runtime.stream_frame(None))
                if frame is None:
                    continue
                if set(frame) != FRAME_KEYS:
                    errors.append(f"missing keys: {set(frame)}")
                stamps.append(frame["stamp"])
            per_thread_stamps[tid] = stamps

        threads = [threading.Thread(target=reader, args=(i,)) for i in range(10)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert not errors
        for stamps in per_thread_stamps.values():
            assert stamps == sorted(stamps)  # latest-wins never goes backwards
