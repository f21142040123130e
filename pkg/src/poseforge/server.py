"""Local HTTP API over the session host.

JSON request/response for commands plus a server-sent-event stream for
revision notifications; frames are PNG pulled by revision.  Listens on
localhost only by default (POSEFORGE_PORT, default 7646).
"""

from __future__ import annotations

import json
import queue

from fastapi import FastAPI, Query, Request
from fastapi.responses import JSONResponse, Response, StreamingResponse

from . import errors
from .raster import encode_mask_png, encode_png
from .service import SessionManager
from .study import record_to_dict

DEFAULT_PORT = 7646
PORT_ENV_VAR = "POSEFORGE_PORT"

_STATUS = {
    errors.UnknownSessionError: 404,
    errors.UnknownObjectError: 404,
    errors.LayoutError: 404,
    errors.SessionCompleteError: 409,
    errors.InvalidCommandError: 400,
    errors.ParseError: 400,
    errors.InvalidRotationError: 400,
    errors.OutOfRangeError: 400,
    errors.OutOfBoundsError: 400,
    errors.BehindCameraError: 400,
}


def create_app(manager: SessionManager) -> FastAPI:
    app = FastAPI(title="poseforge annotation service")

    @app.exception_handler(errors.PoseforgeError)
    async def _typed_error(request: Request, exc: errors.PoseforgeError):
        status = _STATUS.get(type(exc), 400)
        return JSONResponse(
            status_code=status,
            content={"error": type(exc).__name__, "detail": str(exc)},
        )

    @app.post("/session")
    def create_session(body: dict):
        user = str(body.get("user", "anonymous"))
        seed = int(body.get("seed", 0))
        session = manager.create_session(user=user, seed=seed)
        state = session.scene_state()
        state["plan"] = [list(entry) for entry in session.plan.entries]
        return state

    @app.post("/session/{session_id}/command")
    def post_command(session_id: str, body: dict):
        session = manager.get(session_id)
        command = body.get("command", body)
        return session.apply(command)

    @app.get("/session/{session_id}/frame")
    def get_frame(
        session_id: str,
        camera: str = Query("original"),
        revision: int | None = Query(None),
        kind: str = Query("color"),
        workers: int = Query(1),
    ):
        session = manager.get(session_id)
        frame, current = session.frame(camera, workers=workers)
        if revision is not None and revision != current:
            return JSONResponse(
                status_code=409,
                content={
                    "error": "RevisionMismatch",
                    "detail": f"requested {revision}, current {current}",
                },
            )
        payload = encode_mask_png(frame.mask) if kind == "mask" else encode_png(frame.color)
        return Response(
            content=payload,
            media_type="image/png",
            headers={"X-Revision": str(current)},
        )

    @app.get("/session/{session_id}/history")
    def get_history(session_id: str):
        session = manager.get(session_id)
        return {"session": session_id, "history": session.history_entries()}

    @app.get("/session/{session_id}/log")
    def get_log(session_id: str):
        session = manager.get(session_id)
        return {
            "session": session_id,
            "records": [record_to_dict(r) for r in session.records],
        }

    @app.get("/session/{session_id}/scene")
    def get_scene(session_id: str):
        return manager.get(session_id).scene_state()

    @app.get("/session/{session_id}/mesh/{object_id}")
    def get_mesh(session_id: str, object_id: str):
        return manager.get(session_id).mesh_payload(object_id)

    @app.get("/session/{session_id}/background")
    def get_background(session_id: str):
        session = manager.get(session_id)
        return Response(
            content=encode_png(session.scene.background), media_type="image/png"
        )

    @app.get("/session/{session_id}/events")
    def get_events(session_id: str, limit: int | None = Query(None)):
        session = manager.get(session_id)
        q = session.subscribe()

        def stream():
            sent = 0
            try:
                while limit is None or sent < limit:
                    try:
                        revision = q.get(timeout=30.0)
                    except queue.Empty:
                        yield ": keepalive\n\n"
                        continue
                    yield f"data: {json.dumps({'revision': revision})}\n\n"
                    sent += 1
            finally:
                session.unsubscribe(q)

        return StreamingResponse(stream(), media_type="text/event-stream")

    return app


def run_server(dataset_root, port: int, log_dir=None, host: str = "127.0.0.1"):
    import uvicorn

    manager = SessionManager(dataset_root, log_dir=log_dir)
    app = create_app(manager)
    uvicorn.run(app, host=host, port=port, log_level="warning")
