"""Interactive instruct-and-execute sessions over HTTP.

A session holds a live workspace plus the history record log and a
transcript; instructions are grounded by the omniscient engine, applied
(unless dry-run), and answered with the resolution, its dependency
annotation, and the new state. Sessions live in memory and are evicted
after an idle timeout.
"""

from __future__ import annotations

import io
import threading
import time as _time
import uuid
from dataclasses import dataclass, field, replace

import numpy as np
from PIL import Image
from fastapi import FastAPI, Query
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response
from pydantic import BaseModel

from .annotate import HistoryRecord, classify_object, classify_position, make_record
from .errors import (
    Ambiguous,
    CellOccupiedConflict,
    HistBlocksError,
    ParseError,
    Unresolvable,
)
from .generate import gen_initial_layout
from .parse import parse
from .render import cell_box, depth_colormap, export_rgb, footprint_box, render
from .resolve import omniscient_ctx, resolve_object, resolve_position
from .world import (
    MAX_BLOCKS,
    Action,
    Workspace,
    apply_action,
    visible_blocks,
)
DEFAULT_TTL_SECONDS = 30 * 60
RASTER_PX = 128


@dataclass
class TranscriptEntry:
    time_index: int
    text: str
    block: str
    dest: dict
    annotation: dict
    timestamp: float


@dataclass
class Session:
    session_id: str
    seed: int
    initial: Workspace
    ws: Workspace
    history: list[HistoryRecord] = field(default_factory=list)
    transcript: list[TranscriptEntry] = field(default_factory=list)
    snapshots: list[Workspace] = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock)
    last_access: float = 0.0


class CreateSessionBody(BaseModel):
    seed: int | None = None
    n_blocks: int = 6


class InstructionBody(BaseModel):
    text: str
    dry_run: bool = False


def _dep_doc(dep) -> dict:
    return {"explicit": dep.explicit, "implicit": dep.implicit,
            "history_indices": list(dep.history_indices),
            "distances": list(dep.distances)}


def create_app(default_seed: int = 0,
               ttl_seconds: float = DEFAULT_TTL_SECONDS) -> FastAPI:
    app = FastAPI(title="histblocks session service")
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])
    sessions: dict[str, Session] = {}
    store_lock = threading.Lock()

    def _sweep():
        now = _time.monotonic()
        with store_lock:
            for sid in [s for s, sess in sessions.items()
                        if now - sess.last_access > ttl_seconds]:
                del sessions[sid]

    def _get(sid: str) -> Session | None:
        _sweep()
        with store_lock:
            sess = sessions.get(sid)
            if sess is not None:
                sess.last_access = _time.monotonic()
            return sess

    def _state_doc(sess: Session, view: str) -> dict:
        vis = visible_blocks(sess.ws)
        blocks = []
        for b in sess.ws.blocks:
            if view == "robot" and b.id not in vis:
                continue
            blocks.append({"id": b.id, "color": b.color, "col": b.cell.col,
                           "row": b.cell.row, "level": b.level, "yaw": b.yaw,
                           "visible": b.id in vis})
        doc = {"session_id": sess.session_id, "view": view,
               "time": sess.ws.time, "grid_side": sess.ws.grid_side,
               "blocks": blocks}
        if view == "robot":
            doc["renders"] = {
                "rgb": f"/sessions/{sess.session_id}/render/rgb",
                "depth": f"/sessions/{sess.session_id}/render/depth"}
        return doc

    def _not_found():
        return JSONResponse(status_code=404,
                            content={"error": "not_found",
                                     "message": "no such session"})

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionBody):
        if not 1 <= body.n_blocks <= MAX_BLOCKS:
            return JSONResponse(
                status_code=400,
                content={"error": "bad_request",
                         "message": f"n_blocks must be in [1, {MAX_BLOCKS}]"})
        seed = default_seed if body.seed is None else body.seed
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed))
        ws = gen_initial_layout(rng, body.n_blocks)
        sess = Session(session_id=uuid.uuid4().hex, seed=seed,
                       initial=ws, ws=ws, last_access=_time.monotonic())
        with store_lock:
            sessions[sess.session_id] = sess
        return {"session_id": sess.session_id,
                "state": _state_doc(sess, "robot")}

    @app.get("/sessions/{sid}/state")
    def get_state(sid: str, view: str = Query("robot")):
        sess = _get(sid)
        if sess is None:
            return _not_found()
        if view not in ("robot", "human"):
            return JSONResponse(status_code=400,
                                content={"error": "bad_request",
                                         "message": "view must be robot or human"})
        with sess.lock:
            return _state_doc(sess, view)

    @app.post("/sessions/{sid}/instruction")
    def post_instruction(sid: str, body: InstructionBody):
        sess = _get(sid)
        if sess is None:
            return _not_found()
        with sess.lock:
            ws = sess.ws
            t = ws.time
            try:
                parsed = parse(body.text)
            except ParseError as e:
                return JSONResponse(status_code=400, content={
                    "error": "parse", "message": str(e),
                    "position": e.position, "expected": list(e.expected)})
            ctx = omniscient_ctx(ws, tuple(r.block for r in sess.history))
            try:
                block = resolve_object(parsed.object_frame, ctx)
                tctx = replace(ctx, target=block,
                               target_color=parsed.object_frame.color)
                dest, level = resolve_position(parsed.position_frame, tctx)
            except Ambiguous as e:
                return JSONResponse(status_code=422, content={
                    "error": "ambiguous", "message": str(e),
                    "candidates": list(e.candidates)})
            except Unresolvable as e:
                return JSONResponse(status_code=422, content={
                    "error": "unresolvable", "message": str(e)})
            except CellOccupiedConflict as e:
                return JSONResponse(status_code=409, content={
                    "error": "conflict", "message": str(e)})
            annotation = {
                "pick": _dep_doc(classify_object(
                    parsed.object_frame, ws, sess.history, t)),
                "place": _dep_doc(classify_position(
                    parsed.position_frame, ws, sess.history, t,
                    block, parsed.object_frame.color)),
            }
            resolution = {
                "block": block,
                "dest": {"col": dest.col, "row": dest.row, "level": level},
                "object_box": list(footprint_box(ws.block(block), ws.grid_side,
                                                 RASTER_PX)),
                "position_box": list(cell_box(dest, ws.grid_side, RASTER_PX)),
            }
            if not body.dry_run:
                action = Action(block, dest)
                try:
                    nxt = apply_action(ws, action)
                except HistBlocksError as e:
                    return JSONResponse(status_code=409, content={
                        "error": "conflict", "message": str(e)})
                sess.snapshots.append(ws)
                sess.history.append(make_record(ws, nxt, action))
                sess.transcript.append(TranscriptEntry(
                    time_index=t, text=body.text, block=block,
                    dest=resolution["dest"], annotation=annotation,
                    timestamp=_time.time()))
                sess.ws = nxt
            return {"applied": not body.dry_run, "resolution": resolution,
                    "annotation": annotation,
                    "state": _state_doc(sess, "robot")}

    @app.post("/sessions/{sid}/undo")
    def undo(sid: str):
        sess = _get(sid)
        if sess is None:
            return _not_found()
        with sess.lock:
            if not sess.snapshots:
                return JSONResponse(status_code=409, content={
                    "error": "conflict", "message": "nothing to undo"})
            sess.ws = sess.snapshots.pop()
            sess.history.pop()
            sess.transcript.pop()
            return {"state": _state_doc(sess, "robot")}

    @app.get("/sessions/{sid}/history")
    def history(sid: str):
        sess = _get(sid)
        if sess is None:
            return _not_found()
        with sess.lock:
            return {
                "records": [{
                    "time": r.time, "block": r.block,
                    "src": {"col": r.src.col, "row": r.src.row,
                            "level": r.src_level},
                    "dst": {"col": r.dst.col, "row": r.dst.row,
                            "level": r.dst_level},
                    "occluded": list(r.occluded)} for r in sess.history],
                "transcript": [{
                    "time": e.time_index, "text": e.text, "block": e.block,
                    "dest": e.dest, "annotation": e.annotation,
                    "timestamp": e.timestamp} for e in sess.transcript],
            }

    @app.get("/sessions/{sid}/render/{kind}")
    def render_view(sid: str, kind: str):
        sess = _get(sid)
        if sess is None:
            return _not_found()
        if kind not in ("rgb", "depth"):
            return JSONResponse(status_code=400,
                                content={"error": "bad_request",
                                         "message": "kind must be rgb or depth"})
        with sess.lock:
            raster = render(sess.ws, RASTER_PX)
        buf = io.BytesIO()
        if kind == "rgb":
            export_rgb(raster, buf)
        else:
            Image.fromarray(depth_colormap(raster.depth), mode="RGB").save(
                buf, format="PNG")
        return Response(content=buf.getvalue(), media_type="image/png")

    return app
