"""HTTP session management plus a WebSocket stepping dialogue.

One writer per session: the first open WebSocket owns the session until it
disconnects, and messages on it are processed strictly in arrival order.
"""

from __future__ import annotations

import json
import threading
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.responses import HTMLResponse, JSONResponse, Response

from .errors import EngineError, ParseError
from .session import Session, SessionSettings, handle, session_create

_FALLBACK_PAGE = """<!doctype html>
<html><head><meta charset="utf-8"><title>acpstep</title></head>
<body><h1>acpstep engine</h1>
<p>No web client build found. POST /sessions to create a session and talk to
/sessions/{id}/ws over WebSocket; see protocol.md.</p></body></html>
"""


class SessionRegistry:
    def __init__(self):
        self._lock = threading.Lock()
        self.sessions: dict[str, Session] = {}
        self.locks: dict[str, threading.Lock] = {}
        self.writers: dict[str, Optional[int]] = {}

    def add(self, session: Session) -> None:
        with self._lock:
            self.sessions[session.id] = session
            self.locks[session.id] = threading.Lock()
            self.writers[session.id] = None

    def get(self, session_id: str) -> Optional[Session]:
        return self.sessions.get(session_id)

    def remove(self, session_id: str) -> bool:
        with self._lock:
            self.locks.pop(session_id, None)
            self.writers.pop(session_id, None)
            return self.sessions.pop(session_id, None) is not None


def session_summary(session: Session) -> dict:
    return {
        "id": session.id,
        "statements": len(session.source.statements),
        "ground_rules": len(session.program.rules),
        "active_leaf": session.tree.active_leaf,
        "nodes": len(session.tree),
        "desynchronized": session.desynchronized,
        "diagnostics": list(session.grounding.diagnostics),
    }


def create_app(static_dir: Optional[Path] = None) -> FastAPI:
    app = FastAPI(title="acpstep", version="0.1.0")
    registry = SessionRegistry()
    app.state.registry = registry

    @app.get("/")
    def index() -> Response:
        if static_dir is not None:
            page = static_dir / "index.html"
            if page.exists():
                return HTMLResponse(page.read_text())
        return HTMLResponse(_FALLBACK_PAGE)

    @app.get("/static/{name:path}")
    def static(name: str) -> Response:
        if static_dir is None:
            return Response(status_code=404)
        target = (static_dir / name).resolve()
        if not str(target).startswith(str(static_dir.resolve())) or not target.is_file():
            return Response(status_code=404)
        media = "text/javascript" if target.suffix == ".js" else "text/plain"
        if target.suffix == ".css":
            media = "text/css"
        if target.suffix == ".html":
            media = "text/html"
        return Response(target.read_bytes(), media_type=media)

    @app.post("/sessions")
    def create_session(body: dict) -> JSONResponse:
        text = body.get("program", "")
        if not isinstance(text, str):
            return JSONResponse(
                {"error": {"code": "invalid-params", "message": "program must be text"}},
                status_code=400,
            )
        try:
            settings = SessionSettings.from_json(body.get("settings", {}))
            session = session_create(text, settings)
        except ParseError as err:
            return JSONResponse(
                {
                    "error": {
                        "code": "parse-error",
                        "message": str(err),
                        "line": err.line,
                        "column": err.column,
                    }
                },
                status_code=422,
            )
        except EngineError as err:
            return JSONResponse(
                {"error": {"code": "engine-error", "message": str(err)}},
                status_code=422,
            )
        registry.add(session)
        return JSONResponse(session_summary(session), status_code=201)

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str) -> JSONResponse:
        session = registry.get(session_id)
        if session is None:
            return JSONResponse(
                {"error": {"code": "unknown-session", "message": session_id}},
                status_code=404,
            )
        return JSONResponse(session_summary(session))

    @app.delete("/sessions/{session_id}")
    def delete_session(session_id: str) -> JSONResponse:
        if not registry.remove(session_id):
            return JSONResponse(
                {"error": {"code": "unknown-session", "message": session_id}},
                status_code=404,
            )
        return JSONResponse({"deleted": session_id})

    @app.websocket("/sessions/{session_id}/ws")
    async def stepping_socket(socket: WebSocket, session_id: str) -> None:
        session = registry.get(session_id)
        if session is None:
            await socket.close(code=4404)
            return
        if registry.writers.get(session_id) is not None:
            # single writer per session, enforced server-side
            await socket.close(code=4409)
            return
        registry.writers[session_id] = id(socket)
        await socket.accept()
        lock = registry.locks[session_id]
        try:
            while True:
                raw = await socket.receive_text()
                try:
                    message = json.loads(raw)
                except json.JSONDecodeError:
                    await socket.send_text(
                        json.dumps(
                            {
                                "id": None,
                                "error": {
                                    "code": "invalid-params",
                                    "message": "frame is not JSON",
                                },
                            },
                            sort_keys=True,
                        )
                    )
                    continue
                with lock:
                    response, events = handle(session, message)
                await socket.send_text(json.dumps(response, sort_keys=True))
                for event in events:
                    await socket.send_text(json.dumps(event, sort_keys=True))
        except WebSocketDisconnect:
            pass
        finally:
            registry.writers[session_id] = None

    return app
