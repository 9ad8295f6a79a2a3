"""HTTP + WebSocket control surface over the acquisition engine.

Endpoints:
  GET  /profiles     profile list
  GET  /status       session status
  POST /session      start a session (409 while one is running)
  POST /session/stop stop the current session
  GET  /spectrum     current analysis snapshot
  GET  /export.csv   analysis CSV
  GET  /scenes       shipped environment files
  WS   /stream       {"type":"frame",...} and {"type":"status",...} messages
"""

from __future__ import annotations

import json
import queue as queue_mod
from pathlib import Path

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles
from starlette.concurrency import run_in_threadpool

from . import analysis, profiles, simulator
from .errors import ConfigError, ConflictError, EnvError, StateError, UnknownProfileError
from .session import AcquisitionEngine, SessionConfig, SessionStatus


def _profile_dict(p: profiles.DeviceProfile) -> dict:
    return {
        "id": p.id,
        "f_min_mhz": p.f_min_mhz,
        "f_max_mhz": p.f_max_mhz,
        "step_khz": p.step_khz,
        "p_min_dbm": p.p_min_dbm,
        "p_max_dbm": p.p_max_dbm,
        "raw_max": p.raw_max,
        "nominal_resolution_dbm": p.nominal_resolution_dbm,
        "channel_count": p.channel_count,
    }


def create_app(engine: AcquisitionEngine | None = None, ui_dir: str | None = None) -> FastAPI:
    engine = engine if engine is not None else AcquisitionEngine()
    app = FastAPI(title="ismscan", docs_url=None, redoc_url=None)
    app.state.engine = engine

    @app.get("/profiles")
    def get_profiles():
        return [_profile_dict(p) for p in profiles.builtin_profiles()]

    @app.get("/status")
    def get_status():
        return engine.status().as_dict()

    @app.post("/session", status_code=201)
    def post_session(payload: dict):
        try:
            cfg = SessionConfig.from_dict(payload)
            engine.start(cfg)
        except ConflictError as exc:
            return JSONResponse(status_code=409, content={"error": str(exc)})
        except (ConfigError, EnvError, UnknownProfileError) as exc:
            return JSONResponse(status_code=400, content={"error": str(exc)})
        return engine.status().as_dict()

    @app.post("/session/stop")
    def post_session_stop():
        engine.stop()
        return engine.status().as_dict()

    @app.get("/spectrum")
    def get_spectrum():
        try:
            spec = engine.spectrum()
        except StateError as exc:
            return JSONResponse(status_code=404, content={"error": str(exc)})
        return {
            "freqs_mhz": list(spec.freqs_mhz),
            "latest_dbm": list(spec.latest_dbm),
            "peak_dbm": list(spec.peak_dbm),
            "avg_dbm": list(spec.avg_dbm),
            "occupancy": list(spec.occupancy),
        }

    @app.get("/export.csv")
    def get_export_csv():
        try:
            text = engine.export_csv()
        except StateError as exc:
            return JSONResponse(status_code=404, content={"error": str(exc)})
        return PlainTextResponse(
            text,
            media_type="text/csv",
            headers={"Content-Disposition": "attachment; filename=spectrum.csv"},
        )

    @app.get("/scenes")
    def get_scenes():
        scenes = []
        for path in simulator.list_scenes():
            scenes.append(
                {
                    "name": path.stem,
                    "path": str(path),
                    "env": json.loads(path.read_text(encoding="utf-8")),
                }
            )
        return scenes

    @app.websocket("/stream")
    async def stream(ws: WebSocket):
        await ws.accept()
        sub = engine.subscribe()
        try:
            while True:
                try:
                    kind, payload = await run_in_threadpool(sub.queue.get, True, 0.25)
                except queue_mod.Empty:
                    if sub.dropped:
                        break
                    continue
                await ws.send_json(_stream_message(kind, payload))
        except WebSocketDisconnect:
            pass
        finally:
            engine.unsubscribe(sub)

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app


def _stream_message(kind: str, payload) -> dict:
    if kind == "frame":
        profile = profiles.profile_by_id(payload.profile_id)
        dbm = analysis.frame_to_dbm(profile, payload.raw)
        return {
            "type": "frame",
            "seq": payload.seq,
            "t_ms": payload.t_ms,
            "profile_id": payload.profile_id,
            "dbm": [float(v) for v in dbm],
        }
    status: SessionStatus = payload
    return {"type": "status", **status.as_dict()}
