"""HTTP + WebSocket front of the mission service.

One background thread owns the control loop; API handlers never touch the
runtime directly. They enqueue closures into a mailbox the loop drains at
tick boundaries (FIFO), which gives every external request a total order
with respect to the simulation. Telemetry goes out as immutable frame
dicts; slow websocket consumers just miss frames, they never stall the
loop.
"""

from __future__ import annotations

import asyncio
import json
import queue
import threading
import time
from concurrent.futures import Future
from contextlib import asynccontextmanager
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Response, WebSocket, WebSocketDisconnect
from fastapi.staticfiles import StaticFiles

from .mapio import export_map
from .service import TELEMETRY_EVERY, SessionRuntime
from .slam import TrinaryGrid

COMMAND_TYPES = {"start_mapping", "finish_mapping", "pause", "resume", "abort"}
MAILBOX_TIMEOUT = 5.0  # seconds an API handler waits for the loop


def rle_encode(cells: np.ndarray) -> list[list[int]]:
    """Row-major run-length encoding of a trinary cell array."""
    flat = cells.ravel()
    if flat.size == 0:
        return []
    change = np.nonzero(np.diff(flat))[0]
    starts = np.concatenate(([0], change + 1))
    ends = np.concatenate((change + 1, [flat.size]))
    return [[int(flat[s]), int(e - s)] for s, e in zip(starts, ends)]


def grid_payload(grid: TrinaryGrid) -> dict:
    meta = grid.meta
    return {
        "meta": {
            "resolution": meta.resolution,
            "width": meta.width,
            "height": meta.height,
            "origin": {"x": meta.origin.x, "y": meta.origin.y, "theta": 0.0},
        },
        "cells_rle": rle_encode(grid.cells),
    }


class ServiceHost:
    """Runs the control loop on its own thread and brokers all access."""

    def __init__(self, runtime: SessionRuntime, pace: bool = True):
        self.runtime = runtime
        self.pace = pace
        self._mailbox: queue.Queue = queue.Queue()
        self._stop = threading.Event()
        self._thread: threading.Thread | None = None

    def start(self) -> None:
        self._thread = threading.Thread(target=self._loop, name="control-loop", daemon=True)
        self._thread.start()

    def stop(self) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=5.0)

    def _loop(self) -> None:
        dt = self.runtime.scenario.dt
        next_deadline = time.monotonic()
        while not self._stop.is_set():
            while True:
                try:
                    fn, fut = self._mailbox.get_nowait()
                except queue.Empty:
                    break
                try:
                    fut.set_result(fn())
                except BaseException as e:  # surface handler bugs to the caller
                    fut.set_exception(e)
            self.runtime.step()
            if self.pace:
                next_deadline += dt
                delay = next_deadline - time.monotonic()
                if delay > 0:
                    time.sleep(delay)
                else:
                    next_deadline = time.monotonic()

    def call(self, fn):
        """Run fn on the control thread between ticks and return its result."""
        fut: Future = Future()
        self._mailbox.put((fn, fut))
        return fut.result(timeout=MAILBOX_TIMEOUT)

    def current_grid(self) -> TrinaryGrid | None:
        rt = self.runtime
        if rt.active_map is not None:
            return rt.active_map
        if rt.mapper is not None:
            return rt.mapper.classified()
        return None


def create_app(runtime: SessionRuntime, pace: bool = True) -> FastAPI:
    host = ServiceHost(runtime, pace=pace)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        host.start()
        try:
            yield
        finally:
            host.stop()

    app = FastAPI(title="tankrover mission service", lifespan=lifespan)
    app.state.host = host

    @app.get("/api/state")
    def get_state():
        return host.call(runtime.snapshot_telemetry)

    @app.get("/api/map")
    def get_map():
        grid = host.call(host.current_grid)
        if grid is None:
            return Response(status_code=404, content='{"error":"no map"}',
                            media_type="application/json")
        return grid_payload(grid)

    @app.get("/api/map.pgm")
    def get_map_pgm():
        grid = host.call(host.current_grid)
        if grid is None:
            return Response(status_code=404)
        pgm, _ = export_map(grid, "map")
        return Response(content=pgm, media_type="image/x-portable-graymap")

    @app.get("/api/map.yaml")
    def get_map_yaml():
        grid = host.call(host.current_grid)
        if grid is None:
            return Response(status_code=404)
        _, text = export_map(grid, "map")
        return Response(content=text, media_type="text/yaml")

    @app.post("/api/command")
    def post_command(body: dict):
        ctype = body.get("type")
        if ctype not in COMMAND_TYPES:
            return Response(status_code=422, media_type="application/json",
                            content=json.dumps({"ok": False, "code": "unknown-command",
                                                "message": f"type must be one of {sorted(COMMAND_TYPES)}"}))
        result = host.call(lambda: runtime.handle_command({"type": ctype}))
        if not result.ok:
            return Response(status_code=409, media_type="application/json",
                            content=json.dumps({"ok": False, "code": result.code,
                                                "message": result.message}))
        return {"ok": True}

    @app.post("/api/teleop")
    def post_teleop(body: dict):
        cmd = {"type": "teleop", "v": body.get("v"), "omega": body.get("omega")}
        result = host.call(lambda: runtime.handle_command(cmd))
        if not result.ok:
            return Response(status_code=409, media_type="application/json",
                            content=json.dumps({"ok": False, "code": result.code,
                                                "message": result.message}))
        return {"ok": True}

    @app.post("/api/mission")
    def post_mission(body: dict):
        result = host.call(lambda: runtime.handle_command({"type": "start_mission",
                                                           "mission": body}))
        if not result.ok:
            return Response(status_code=422, media_type="application/json",
                            content=json.dumps({"ok": False, "code": result.code,
                                                "message": result.message}))
        return {"ok": True}

    console = Path(__file__).resolve().parent.parent.parent / "frontend"
    if (console / "dist").is_dir():
        # serve the operator console when its build exists (same-origin API)
        app.mount("/dist", StaticFiles(directory=console / "dist"), name="console-js")

        @app.get("/")
        def index():
            return Response(content=(console / "index.html").read_bytes(),
                            media_type="text/html")

    @app.websocket("/ws/telemetry")
    async def ws_telemetry(ws: WebSocket):
        await ws.accept()
        period = runtime.scenario.dt * TELEMETRY_EVERY  # 5 Hz at the defaults
        last_version: int | None = None
        try:
            while True:
                lv = last_version
                frame, version = await asyncio.to_thread(
                    host.call, lambda: runtime.stream_frame(lv))
                if frame is not None:
                    await ws.send_text(json.dumps(frame))
                    last_version = version
                await asyncio.sleep(period)
        except WebSocketDisconnect:
            pass

    return app


def serve(scenario_path: str, seed: int, port: int, host_addr: str = "127.0.0.1") -> None:
    import uvicorn

    from .mapio import load_scenario_file

    scenario = load_scenario_file(scenario_path)
    runtime = SessionRuntime(scenario, seed)
    app = create_app(runtime, pace=True)
    uvicorn.run(app, host=host_addr, port=port, log_level="warning")
