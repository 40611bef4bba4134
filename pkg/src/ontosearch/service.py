"""Read-only JSON-over-HTTP query service on top of a built index directory.

Endpoints:

    GET  /search?q=<text>&k=<n>&ranker=<vector|bm25>   array of ranked hits
    POST /match   {"labels": [...], "k": n}            aggregated hit array
    GET  /concept/<id>                                 concept record
    GET  /healthz                                      status + fingerprints

Hit arrays are built from the exact JSON lines the CLI ``query`` command
prints, so the two surfaces answer byte-identically.  All state is loaded
once and never mutated, which makes concurrent requests safe.
"""

from __future__ import annotations

import json
import logging
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, unquote, urlsplit

from . import store
from .errors import OntoSearchError, UsageError
from .ranker import hit_json_line

logger = logging.getLogger(__name__)


class SearchService:
    """Request logic, independent of the HTTP plumbing for testability."""

    def __init__(self, bundle: store.IndexBundle | None = None):
        self.bundle = bundle

    @property
    def ready(self) -> bool:
        return self.bundle is not None

    def hits_array(self, text: str, k: int, ranker: str) -> str:
        lines = [
            hit_json_line(hit)
            for hit in store.query_hits(self.bundle, text, k, ranker)
        ]
        return "[" + ",".join(lines) + "]"

    def match_array(self, labels: list[str], k: int, ranker: str) -> str:
        lines = [
            hit_json_line(hit)
            for hit in store.match_hits(self.bundle, labels, k, ranker)
        ]
        return "[" + ",".join(lines) + "]"

    def concept_record(self, concept_id: str) -> dict | None:
        if concept_id not in self.bundle.graph:
            return None
        concept = self.bundle.graph.concepts[concept_id]
        return {
            "concept_id": concept.id,
            "labels": list(concept.labels),
            "parent_ids": sorted(concept.parent_ids),
            "child_ids": sorted(self.bundle.graph.children[concept_id]),
        }

    def health(self) -> dict:
        if not self.ready:
            return {"status": "loading"}
        vector = self.bundle.vector
        bm25 = self.bundle.bm25
        return {
            "status": "ok",
            "rankers": self.bundle.rankers,
            "vector_fingerprint": vector.encoder_fingerprint if vector else None,
            "bm25_fingerprint": bm25.fingerprint() if bm25 else None,
        }


class _Handler(BaseHTTPRequestHandler):
    service: SearchService  # set by make_server

    def _send(self, status: int, body: str) -> None:
        raw = body.encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(raw)))
        self.end_headers()
        self.wfile.write(raw)

    def _send_error(self, status: int, code: str, message: str) -> None:
        self._send(status, json.dumps({"error": code, "message": message}))

    def _guard_ready(self) -> bool:
        if not self.service.ready:
            self._send_error(503, "app.Loading", "indexes are still loading")
            return False
        return True

    def _parse_k(self, params: dict) -> int | None:
        raw = params.get("k", ["10"])[0]
        try:
            k = int(raw)
        except ValueError:
            self._send_error(400, "app.UsageError", f"k must be an integer, got {raw!r}")
            return None
        if k < 1:
            self._send_error(400, "app.UsageError", "k must be >= 1")
            return None
        return k

    def do_GET(self):  # noqa: N802  (http.server naming)
        url = urlsplit(self.path)
        if url.path == "/healthz":
            payload = self.service.health()
            self._send(200 if self.service.ready else 503, json.dumps(payload))
            return
        if not self._guard_ready():
            return
        if url.path == "/search":
            params = parse_qs(url.query, keep_blank_values=True)
            if "q" not in params:
                self._send_error(400, "app.UsageError", "missing query parameter q")
                return
            k = self._parse_k(params)
            if k is None:
                return
            ranker = params.get("ranker", ["vector"])[0]
            try:
                self._send(200, self.service.hits_array(params["q"][0], k, ranker))
            except UsageError as exc:
                self._send_error(400, exc.code, exc.message)
            except OntoSearchError as exc:
                self._send_error(400, exc.code, exc.message)
            return
        if url.path.startswith("/concept/"):
            concept_id = unquote(url.path[len("/concept/"):])
            record = self.service.concept_record(concept_id)
            if record is None:
                self._send_error(404, "ontology.UnknownConceptId",
                                 f"unknown concept id {concept_id!r}")
                return
            self._send(200, json.dumps(record, ensure_ascii=False))
            return
        self._send_error(404, "app.NotFound", f"no route for {url.path}")

    def do_POST(self):  # noqa: N802
        url = urlsplit(self.path)
        if url.path != "/match":
            self._send_error(404, "app.NotFound", f"no route for {url.path}")
            return
        if not self._guard_ready():
            return
        length = int(self.headers.get("Content-Length", "0"))
        try:
            body = json.loads(self.rfile.read(length).decode("utf-8") or "{}")
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            self._send_error(400, "app.UsageError", f"bad JSON body: {exc}")
            return
        labels = body.get("labels")
        if not isinstance(labels, list) or not all(isinstance(x, str) for x in labels):
            self._send_error(400, "app.UsageError", "body must carry labels: [str, ...]")
            return
        k = body.get("k", 10)
        if not isinstance(k, int) or k < 1:
            self._send_error(400, "app.UsageError", "k must be an integer >= 1")
            return
        ranker = body.get("ranker", "vector")
        try:
            self._send(200, self.service.match_array(labels, k, ranker))
        except UsageError as exc:
            self._send_error(400, exc.code, exc.message)
        except OntoSearchError as exc:
            self._send_error(400, exc.code, exc.message)

    def log_message(self, format, *args):  # quiet by default
        logger.debug("%s - %s", self.address_string(), format % args)


def make_server(
    service: SearchService, host: str = "127.0.0.1", port: int = 0
) -> ThreadingHTTPServer:
    """Bind a threading HTTP server around ``service`` (port 0 = ephemeral)."""
    handler = type("BoundHandler", (_Handler,), {"service": service})
    return ThreadingHTTPServer((host, port), handler)


def start_in_thread(server: ThreadingHTTPServer) -> threading.Thread:
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return thread


def serve(index_dir: str, host: str, port: int) -> None:
    """Load the index directory and serve until interrupted."""
    service = SearchService()
    server = make_server(service, host, port)
    service.bundle = store.load_bundle(index_dir)
    bound = server.socket.getsockname()
    print(f"serving {index_dir} on http://{bound[0]}:{bound[1]}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
