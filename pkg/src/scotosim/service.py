"""Local HTTP service for interactive model tuning.

Sessions are plain files under the state directory, one JSON file per
session; the filesystem is the store, so a restart loses nothing. Render
endpoints are read-only against an immutable model snapshot taken per
request; writes to one session serialize behind a per-session lock.
"""

from __future__ import annotations

import base64
import binascii
import json
import logging
import os
import re
import secrets
import threading
from datetime import datetime, timezone
from pathlib import Path

from fastapi import FastAPI, HTTPException, Request, Response
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .invert import compensate, roundtrip_report
from .model import (
    DeficitModel,
    ModelFormatError,
    atomic_write_bytes,
    model_from_dict,
    model_to_dict,
    validate_model,
)
from .raster import ParameterError, amsler_grid, from_png_bytes, region_mask, simulate, to_png_bytes

log = logging.getLogger("scotosim.service")

_ID_RE = re.compile(r"[A-Za-z0-9_-]{1,64}")


def default_amsler_params(size: int) -> tuple[int, int, int]:
    """Chart parameters used when a render request only gives a size."""
    return size, max(2, size // 16), max(1, round(size / 256))


class SessionStore:
    def __init__(self, state_dir):
        self.dir = Path(state_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    def _lock(self, session_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(session_id, threading.Lock())

    def _path(self, session_id: str) -> Path:
        if not _ID_RE.fullmatch(session_id):
            raise KeyError(session_id)
        return self.dir / f"{session_id}.json"

    def create(self) -> str:
        session_id = secrets.token_urlsafe(12)
        self.save(session_id, DeficitModel())
        return session_id

    def load(self, session_id: str) -> DeficitModel:
        path = self._path(session_id)
        if not path.exists():
            raise KeyError(session_id)
        envelope = json.loads(path.read_text(encoding="utf-8"))
        return model_from_dict(envelope["model"])

    def save(self, session_id: str, model: DeficitModel) -> None:
        path = self._path(session_id)
        envelope = {
            "id": session_id,
            "updated_at": datetime.now(timezone.utc).isoformat(),
            "model": model_to_dict(model),
        }
        with self._lock(session_id):
            atomic_write_bytes(path, (json.dumps(envelope, indent=2) + "\n").encode("utf-8"))


def _find_ui_dir() -> Path | None:
    env = os.environ.get("SCOTOSIM_UI_DIR")
    candidates = [Path(env)] if env else []
    candidates += [
        Path.cwd() / "frontend" / "dist",
        Path(__file__).resolve().parents[2] / "frontend" / "dist",
    ]
    for c in candidates:
        if c.is_dir() and (c / "index.html").exists():
            return c
    return None


_NO_UI_PAGE = b"""<!doctype html>
<html><head><title>scotosim</title></head>
<body><h1>scotosim service</h1>
<p>The web UI is not built. Build it with <code>cd frontend && npm install && npm run build</code>,
then restart the service. The JSON API under <code>/api/</code> is fully functional.</p>
</body></html>"""


def create_app(state_dir, static_dir="auto") -> FastAPI:
    app = FastAPI(title="scotosim", docs_url=None, redoc_url=None)
    store = SessionStore(state_dir)

    @app.exception_handler(Exception)
    async def internal_error(request: Request, exc: Exception):
        log.exception("request failed: %s %s", request.method, request.url.path)
        return JSONResponse(status_code=500, content={"detail": "internal error"})

    def get_model(session_id: str) -> DeficitModel:
        try:
            return store.load(session_id)
        except KeyError:
            raise HTTPException(status_code=404, detail="unknown session")

    def png_response(img, headers=None) -> Response:
        return Response(content=to_png_bytes(img), media_type="image/png", headers=headers)

    async def request_body_json(request: Request) -> dict:
        raw = await request.body()
        if not raw:
            return {}
        try:
            body = json.loads(raw)
        except json.JSONDecodeError:
            raise HTTPException(status_code=400, detail="request body is not valid JSON")
        if not isinstance(body, dict):
            raise HTTPException(status_code=400, detail="request body must be a JSON object")
        return body

    def input_image(body: dict):
        spec = body.get("image", "amsler")
        size = body.get("size", 512)
        if not isinstance(size, int) or not 16 <= size <= 4096:
            raise HTTPException(status_code=400, detail="size must be an integer in [16, 4096]")
        if spec == "amsler":
            return amsler_grid(*default_amsler_params(size))
        if not isinstance(spec, str):
            raise HTTPException(status_code=400, detail="image must be 'amsler' or base64 PNG")
        if spec.startswith("data:"):
            spec = spec.split(",", 1)[-1]
        try:
            raw = base64.b64decode(spec, validate=True)
            return from_png_bytes(raw)
        except (binascii.Error, ValueError, OSError):
            raise HTTPException(status_code=400, detail="could not decode PNG image")

    @app.get("/api/health")
    def health():
        return {"status": "ok"}

    @app.post("/api/sessions")
    def create_session():
        return {"id": store.create()}

    @app.get("/api/sessions/{session_id}/model")
    def read_model(session_id: str):
        return model_to_dict(get_model(session_id))

    @app.put("/api/sessions/{session_id}/model")
    async def write_model(session_id: str, request: Request):
        get_model(session_id)  # 404 before validation
        body = await request_body_json(request)
        try:
            model = model_from_dict(body)
        except ModelFormatError as e:
            raise HTTPException(status_code=422, detail={"violations": [str(e)]})
        result = validate_model(model)
        if not result.ok:
            raise HTTPException(status_code=422, detail={"violations": result.violations})
        store.save(session_id, model)
        return {"ok": True, "warnings": result.warnings}

    @app.get("/api/grid")
    def chart(size: int = 512, spacing: int = 32, line: int = 2):
        try:
            return png_response(amsler_grid(size, spacing, line))
        except ParameterError as e:
            raise HTTPException(status_code=400, detail=str(e))

    @app.post("/api/sessions/{session_id}/simulate")
    async def render_simulate(session_id: str, request: Request):
        model = get_model(session_id)
        img = input_image(await request_body_json(request))
        return png_response(simulate(model, img))

    @app.post("/api/sessions/{session_id}/compensate")
    async def render_compensate(session_id: str, request: Request):
        model = get_model(session_id)
        body = await request_body_json(request)
        img = input_image(body)
        gamma_cap = body.get("gamma_cap", 0.9)
        if not isinstance(gamma_cap, (int, float)) or not 0.0 < gamma_cap < 1.0:
            raise HTTPException(status_code=400, detail="gamma_cap must be in (0, 1)")
        result = compensate(model, img, gamma_cap=float(gamma_cap))
        return png_response(
            result.image,
            headers={
                "X-Scotosim-Converged": "true" if result.converged else "false",
                "X-Scotosim-Iterations": str(result.iterations),
            },
        )

    @app.get("/api/sessions/{session_id}/region")
    def render_region(session_id: str, request: Request, size: int = 512):
        model = get_model(session_id)
        cutoff = request.query_params.get("lambda")
        if cutoff is None:
            raise HTTPException(status_code=400, detail="missing lambda query parameter")
        try:
            cutoff_f = float(cutoff)
        except ValueError:
            raise HTTPException(status_code=400, detail="lambda must be a number")
        try:
            return png_response(region_mask(model, cutoff_f, size, size))
        except ParameterError as e:
            raise HTTPException(status_code=400, detail=str(e))

    @app.get("/api/sessions/{session_id}/roundtrip")
    def render_roundtrip(session_id: str, image: str = "amsler", size: int = 512):
        model = get_model(session_id)
        if image != "amsler":
            raise HTTPException(status_code=400, detail="only image=amsler is supported here")
        img = amsler_grid(*default_amsler_params(size))
        return roundtrip_report(model, img).to_dict()

    ui_dir = _find_ui_dir() if static_dir == "auto" else static_dir
    if ui_dir:
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")
    else:

        @app.get("/")
        def placeholder():
            return Response(content=_NO_UI_PAGE, media_type="text/html")

    return app
