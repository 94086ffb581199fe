"""Stdlib HTTP API over a case work directory (the annotator backend).

Endpoints (JSON bodies unless noted):

    GET    /api/cases                                   case summaries
    GET    /api/cases/{id}/slices/{z}?level=L&width=W   windowed slice PNG
    PUT    /api/cases/{id}/seed                         body {"z","x","y"}
    POST   /api/cases/{id}/segment                      runs 3D propagation
    GET    /api/cases/{id}/mask/{z}                     mask slice PNG (0/255)
    POST   /api/cases/{id}/accept                       stage -> accepted
    DELETE /api/cases/{id}/mask                         clears mask, -> seeded

Reads are served concurrently; segmentation is serialized per case by a lock;
every mutation is persisted to the work directory before the response goes
out.  Responses carry permissive CORS headers so a separately hosted UI can
call in, and an optional static directory is served for non-/api GETs.
"""

from __future__ import annotations

import json
import logging
import re
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlsplit

from .cli import (
    STAGE_ACCEPTED,
    STAGE_IMPORTED,
    STAGE_SEEDED,
    STAGE_SEGMENTED,
    CaseStatus,
    StatusStore,
    segment_case_artifacts,
)
from .phantom import ManifestRecord
from .segmentation import GrowthError, SegmentationParams
from .volume_io import CtVolume, DisplayWindow, encode_png, export_slice_image, load_mask, load_volume

logger = logging.getLogger(__name__)

DEFAULT_WINDOW = DisplayWindow(level=80.0, width=200.0)

_STATIC_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".json": "application/json",
    ".map": "application/json",
    ".png": "image/png",
    ".svg": "image/svg+xml",
    ".ico": "image/x-icon",
}


class ApiError(Exception):
    """Maps straight to an HTTP error response."""

    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code
        self.message = message


class ApiContext:
    """Shared state behind the handler: dataset, statuses, locks, caches."""

    def __init__(
        self,
        records: list[ManifestRecord],
        work_dir,
        store: StatusStore,
        params: SegmentationParams,
        window: DisplayWindow = DEFAULT_WINDOW,
    ):
        self.records = list(records)
        self.by_id = {r.case_id: r for r in self.records}
        self.work_dir = Path(work_dir)
        self.store = store
        self.params = params
        self.window = window
        self._volumes: dict[str, CtVolume] = {}
        self._volumes_lock = threading.Lock()
        self._case_locks: dict[str, threading.Lock] = {}
        self._case_locks_guard = threading.Lock()

    def record(self, case_id: str) -> ManifestRecord:
        if case_id not in self.by_id:
            raise ApiError(404, f"unknown case {case_id!r}")
        return self.by_id[case_id]

    def case_lock(self, case_id: str) -> threading.Lock:
        with self._case_locks_guard:
            return self._case_locks.setdefault(case_id, threading.Lock())

    def volume(self, case_id: str) -> CtVolume:
        with self._volumes_lock:
            if case_id not in self._volumes:
                self._volumes[case_id] = load_volume(self.record(case_id).volume_path)
            return self._volumes[case_id]

    def status(self, case_id: str) -> CaseStatus:
        return self.store.load_or_init(self.record(case_id))

    def summary(self, case_id: str) -> dict:
        status = self.status(case_id)
        if status.n_slices is None:
            status.n_slices = int(self.volume(case_id).voxels.shape[0])
        return status.to_dict()


# ---------------------------------------------------------------------------
# Request handling


_ROUTES: list[tuple[str, re.Pattern, str]] = [
    ("GET", re.compile(r"^/api/cases$"), "_list_cases"),
    ("GET", re.compile(r"^/api/cases/([^/]+)/slices/(\d+)$"), "_get_slice"),
    ("PUT", re.compile(r"^/api/cases/([^/]+)/seed$"), "_put_seed"),
    ("POST", re.compile(r"^/api/cases/([^/]+)/segment$"), "_post_segment"),
    ("GET", re.compile(r"^/api/cases/([^/]+)/mask/(\d+)$"), "_get_mask_slice"),
    ("POST", re.compile(r"^/api/cases/([^/]+)/accept$"), "_post_accept"),
    ("DELETE", re.compile(r"^/api/cases/([^/]+)/mask$"), "_delete_mask"),
]


class ApiHandler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server_version = "ctcad"

    @property
    def ctx(self) -> ApiContext:
        return self.server.ctx  # type: ignore[attr-defined]

    # -- plumbing

    def log_message(self, fmt, *args):  # default handler spams stderr
        logger.debug("%s %s", self.address_string(), fmt % args)

    def _cors(self) -> None:
        self.send_header("Access-Control-Allow-Origin", "*")

    def _send_bytes(self, code: int, body: bytes, content_type: str) -> None:
        self.send_response(code)
        self._cors()
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _send_json(self, code: int, payload) -> None:
        body = (json.dumps(payload, sort_keys=True) + "\n").encode("utf-8")
        self._send_bytes(code, body, "application/json")

    def _read_json_body(self) -> dict:
        length = int(self.headers.get("Content-Length") or 0)
        raw = self.rfile.read(length) if length else b""
        try:
            data = json.loads(raw.decode("utf-8")) if raw else {}
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ApiError(400, f"malformed JSON body: {exc}") from exc
        if not isinstance(data, dict):
            raise ApiError(400, "JSON body must be an object")
        return data

    def _dispatch(self, method: str) -> None:
        url = urlsplit(self.path)
        try:
            for verb, pattern, name in _ROUTES:
                match = pattern.match(url.path)
                if match:
                    if verb != method:
                        raise ApiError(405, f"{method} not allowed for {url.path}")
                    getattr(self, name)(*match.groups(), query=parse_qs(url.query))
                    return
            if method == "GET" and self._serve_static(url.path):
                return
            raise ApiError(404, f"no route for {method} {url.path}")
        except ApiError as exc:
            self._send_json(exc.code, {"error": exc.message})
        except Exception as exc:  # pragma: no cover - last-resort guard
            logger.exception("unhandled error for %s %s", method, self.path)
            self._send_json(500, {"error": f"internal error: {exc}"})

    def do_GET(self):
        self._dispatch("GET")

    def do_PUT(self):
        self._dispatch("PUT")

    def do_POST(self):
        self._dispatch("POST")

    def do_DELETE(self):
        self._dispatch("DELETE")

    def do_OPTIONS(self):
        self.send_response(204)
        self._cors()
        self.send_header("Access-Control-Allow-Methods", "GET, PUT, POST, DELETE, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.send_header("Content-Length", "0")
        self.end_headers()

    # -- static assets (optional annotator bundle)

    def _serve_static(self, path: str) -> bool:
        root = self.server.static_dir  # type: ignore[attr-defined]
        if root is None:
            return False
        rel = path.lstrip("/") or "index.html"
        target = (root / rel).resolve()
        if root.resolve() not in target.parents and target != root.resolve():
            raise ApiError(403, "path escapes the static root")
        if not target.is_file():
            return False
        content_type = _STATIC_TYPES.get(target.suffix, "application/octet-stream")
        self._send_bytes(200, target.read_bytes(), content_type)
        return True

    # -- API routes

    def _list_cases(self, *, query) -> None:
        ctx = self.ctx
        self._send_json(200, [ctx.summary(r.case_id) for r in ctx.records])

    def _get_slice(self, case_id: str, z: str, *, query) -> None:
        ctx = self.ctx
        volume = ctx.volume(case_id)
        zi = int(z)
        if not 0 <= zi < volume.voxels.shape[0]:
            raise ApiError(404, f"slice {zi} outside volume")
        try:
            level = float(query.get("level", [ctx.window.level])[0])
            width = float(query.get("width", [ctx.window.width])[0])
            window = DisplayWindow(level=level, width=width)
        except ValueError as exc:
            raise ApiError(400, f"bad window parameters: {exc}") from exc
        png = encode_png(export_slice_image(volume, zi, window))
        self._send_bytes(200, png, "image/png")

    def _put_seed(self, case_id: str, *, query) -> None:
        ctx = self.ctx
        body = self._read_json_body()
        try:
            seed = {k: int(body[k]) for k in ("z", "x", "y")}
        except (KeyError, TypeError, ValueError) as exc:
            raise ApiError(400, "seed body must carry integer z, x, y") from exc
        volume = ctx.volume(case_id)
        nz, ny, nx = volume.voxels.shape
        if not (0 <= seed["z"] < nz and 0 <= seed["x"] < nx and 0 <= seed["y"] < ny):
            raise ApiError(400, f"seed {seed} outside volume dims {volume.dims}")
        with ctx.case_lock(case_id):
            status = ctx.status(case_id)
            status.seed = seed
            if status.stage == STAGE_IMPORTED:
                status.stage = STAGE_SEEDED
            ctx.store.save(status)
        self._send_json(200, status.to_dict())

    def _post_segment(self, case_id: str, *, query) -> None:
        ctx = self.ctx
        volume = ctx.volume(case_id)
        with ctx.case_lock(case_id):
            status = ctx.status(case_id)
            if status.seed is None:
                raise ApiError(409, f"case {case_id} has no seed")
            try:
                trace = segment_case_artifacts(status, volume, ctx.params, ctx.work_dir, ctx.store)
            except GrowthError as exc:
                raise ApiError(422, f"segmentation failed: {exc}") from exc
        self._send_json(
            200,
            {
                "case_id": case_id,
                "stage": status.stage,
                "mask_path": status.mask_path,
                "seed_used": trace["seed_used"],
                "per_slice": trace["per_slice"],
            },
        )

    def _get_mask_slice(self, case_id: str, z: str, *, query) -> None:
        ctx = self.ctx
        status = ctx.status(case_id)
        if status.mask_path is None:
            raise ApiError(404, f"case {case_id} has no mask")
        mask = load_mask(ctx.work_dir / status.mask_path)
        zi = int(z)
        if not 0 <= zi < mask.bits.shape[0]:
            raise ApiError(404, f"slice {zi} outside mask")
        png = encode_png(mask.bits[zi].astype("uint8") * 255)
        self._send_bytes(200, png, "image/png")

    def _post_accept(self, case_id: str, *, query) -> None:
        ctx = self.ctx
        with ctx.case_lock(case_id):
            status = ctx.status(case_id)
            if status.mask_path is None or status.stage not in (STAGE_SEGMENTED, STAGE_ACCEPTED):
                raise ApiError(409, f"case {case_id} has no segmentation to accept")
            status.stage = STAGE_ACCEPTED
            ctx.store.save(status)
        self._send_json(200, status.to_dict())

    def _delete_mask(self, case_id: str, *, query) -> None:
        ctx = self.ctx
        with ctx.case_lock(case_id):
            status = ctx.status(case_id)
            if status.mask_path is None:
                raise ApiError(404, f"case {case_id} has no mask")
            mask_file = ctx.work_dir / status.mask_path
            trace_file = ctx.work_dir / "masks" / f"{case_id}_trace.json"
            for path in (mask_file, trace_file):
                if path.exists():
                    path.unlink()
            status.mask_path = None
            status.stage = STAGE_SEEDED
            ctx.store.save(status)
        self._send_json(200, status.to_dict())


class ApiServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, address, ctx: ApiContext, static_dir: Path | None):
        super().__init__(address, ApiHandler)
        self.ctx = ctx
        self.static_dir = Path(static_dir) if static_dir else None


def build_server(
    ctx: ApiContext, host: str = "127.0.0.1", port: int = 8765, static_dir=None
) -> ApiServer:
    """Bind (port 0 picks a free one; read ``server_address`` for the result)."""
    return ApiServer((host, port), ctx, static_dir)
