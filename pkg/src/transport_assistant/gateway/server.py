"""HTTP front end: JSON endpoints, long-poll and SSE push, static console.

Endpoint surface (all JSON unless noted):
  POST /api/session                          -> 201 {session_id, position}
  POST /api/session/{id}/utterance           {text} -> {events}
  POST /api/session/{id}/frames              {content_key, frame_id?} -> {events}
  POST /api/session/{id}/battery             {level} -> {events, battery}
  POST /api/session/{id}/nav/start           {destination, start?, heading?} -> {nav, events}
  POST /api/session/{id}/nav/obstacle        {cell} -> {nav}
  POST /api/session/{id}/nav/tick            {steps?} -> {events}
  POST /api/session/{id}/ride/{rid}/cancel   -> {ride, events}
  GET  /api/session/{id}/state               -> session state view
  GET  /api/session/{id}/push?after=N&wait=S -> {envelopes} (long poll)
  GET  /api/session/{id}/push?after=N&stream=1 -> text/event-stream
  GET  /api/health                           -> {ok}
  GET  /console[/...]                        -> static files when configured
"""

from __future__ import annotations

import json
import mimetypes
import re
import threading
from http import HTTPStatus
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

from .. import dispatch as dispatch_mod
from .. import nav, transit
from ..dialog import EmptyMessage, OutOfRange, SpeechEvent
from .config import GatewayConfig
from .service import AssistantService, PushEnvelope, UnknownSession


MAX_BODY_BYTES = 1 << 20
SSE_POLL_SECONDS = 15.0

_ROUTES = [
    ("POST", re.compile(r"^/api/session$"), "create_session"),
    ("POST", re.compile(r"^/api/session/(?P<sid>[^/]+)/utterance$"), "utterance"),
    ("POST", re.compile(r"^/api/session/(?P<sid>[^/]+)/frames$"), "frames"),
    ("POST", re.compile(r"^/api/session/(?P<sid>[^/]+)/battery$"), "battery"),
    ("POST", re.compile(r"^/api/session/(?P<sid>[^/]+)/nav/start$"), "nav_start"),
    ("POST", re.compile(r"^/api/session/(?P<sid>[^/]+)/nav/obstacle$"), "nav_obstacle"),
    ("POST", re.compile(r"^/api/session/(?P<sid>[^/]+)/nav/tick$"), "nav_tick"),
    ("POST", re.compile(r"^/api/session/(?P<sid>[^/]+)/ride/(?P<rid>[^/]+)/cancel$"), "ride_cancel"),
    ("GET", re.compile(r"^/api/session/(?P<sid>[^/]+)/state$"), "state"),
    ("GET", re.compile(r"^/api/session/(?P<sid>[^/]+)/push$"), "push"),
    ("GET", re.compile(r"^/api/health$"), "health"),
]


class ApiError(Exception):
    def __init__(self, status: int, message: str):
        super().__init__(message)
        self.status = status


def _events_json(events: list[SpeechEvent]) -> list[dict]:
    return [
        {"kind": e.kind.value, "text": e.text, "emitted_at": e.emitted_at}
        for e in events
    ]


def _envelopes_json(envelopes: list[PushEnvelope]) -> list[dict]:
    return [e.to_json() for e in envelopes]


class GatewayServer(ThreadingHTTPServer):
    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, config: GatewayConfig, service: AssistantService):
        super().__init__((config.host, config.port), GatewayHandler)
        self.config = config
        self.service = service


class GatewayHandler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server_version = "transport-assistant"
    # Headers and body go out as separate writes; without TCP_NODELAY the
    # second one stalls behind the client's delayed ACK (~40 ms per request).
    disable_nagle_algorithm = True

    # Access logging off: scenario and latency runs hammer the endpoint.
    def log_message(self, format, *args):  # noqa: A002 - stdlib signature
        pass

    @property
    def service(self) -> AssistantService:
        return self.server.service  # type: ignore[attr-defined]

    def do_POST(self) -> None:
        self._route("POST")

    def do_GET(self) -> None:
        self._route("GET")

    def _route(self, method: str) -> None:
        url = urlparse(self.path)
        try:
            for verb, pattern, name in _ROUTES:
                match = pattern.match(url.path)
                if match and verb == method:
                    getattr(self, f"_handle_{name}")(match.groupdict(), url)
                    return
            if method == "GET" and (url.path == "/console" or url.path.startswith("/console/")):
                self._handle_console(url.path)
                return
            raise ApiError(404, f"no such endpoint: {method} {url.path}")
        except ApiError as exc:
            self._send_json({"error": str(exc)}, status=exc.status)
        except UnknownSession as exc:
            self._send_json({"error": f"unknown session: {exc}"}, status=404)
        except (transit.UnknownPlace, nav.UnknownDestination) as exc:
            self._send_json({"error": f"unknown place: {exc}"}, status=400)
        except dispatch_mod.UnknownRide as exc:
            self._send_json({"error": f"unknown ride: {exc}"}, status=404)
        except dispatch_mod.InvalidTransition as exc:
            self._send_json({"error": str(exc)}, status=409)
        except (OutOfRange, EmptyMessage, ValueError, KeyError) as exc:
            self._send_json({"error": str(exc)}, status=400)
        except BrokenPipeError:
            pass

    # -- handlers ---------------------------------------------------------------

    def _handle_create_session(self, params: dict, url) -> None:
        body = self._read_json(optional=True)
        position = None
        if "position" in body:
            lat, lon = body["position"]
            position = transit.GeoPoint(float(lat), float(lon))
        session_id = self.service.create_session(position)
        state = self.service.get_state(session_id)
        self._send_json(
            {"session_id": session_id, "position": state["position"]}, status=201
        )

    def _handle_utterance(self, params: dict, url) -> None:
        body = self._read_json()
        text = body.get("text")
        if not isinstance(text, str):
            raise ApiError(400, "body must include text: string")
        events = self.service.handle_utterance(params["sid"], text)
        self._send_json({"events": _events_json(events)})

    def _handle_frames(self, params: dict, url) -> None:
        body = self._read_json()
        key = body.get("content_key")
        if not isinstance(key, str) or not key:
            raise ApiError(400, "body must include content_key: string")
        events = self.service.ingest_frame(
            params["sid"], key, frame_id=body.get("frame_id")
        )
        self._send_json({"events": _events_json(events)})

    def _handle_battery(self, params: dict, url) -> None:
        body = self._read_json()
        level = body.get("level")
        if not isinstance(level, int) or isinstance(level, bool):
            raise ApiError(400, "body must include level: integer")
        events = self.service.set_battery(params["sid"], level)
        state = self.service.get_state(params["sid"])
        self._send_json({"events": _events_json(events), "battery": state["battery"]})

    def _handle_nav_start(self, params: dict, url) -> None:
        body = self._read_json()
        destination = body.get("destination")
        if not isinstance(destination, str) or not destination:
            raise ApiError(400, "body must include destination: string")
        start = tuple(body["start"]) if "start" in body else None
        view = self.service.start_nav(
            params["sid"], destination, start=start, heading=body.get("heading")
        )
        self._send_json({"nav": view})

    def _handle_nav_obstacle(self, params: dict, url) -> None:
        body = self._read_json()
        cell = body.get("cell")
        if not isinstance(cell, list) or len(cell) != 2:
            raise ApiError(400, "body must include cell: [x, y]")
        view = self.service.inject_obstacle(params["sid"], (int(cell[0]), int(cell[1])))
        self._send_json({"nav": view})

    def _handle_nav_tick(self, params: dict, url) -> None:
        body = self._read_json(optional=True)
        steps = int(body.get("steps", 1))
        if steps < 1 or steps > 10_000:
            raise ApiError(400, "steps must be in 1..10000")
        events = self.service.tick(params["sid"], steps=steps)
        self._send_json({"events": _events_json(events)})

    def _handle_ride_cancel(self, params: dict, url) -> None:
        view = self.service.cancel_ride(params["sid"], params["rid"])
        self._send_json({"ride": view})

    def _handle_state(self, params: dict, url) -> None:
        self._send_json(self.service.get_state(params["sid"]))

    def _handle_health(self, params: dict, url) -> None:
        self._send_json({"ok": True})

    def _handle_push(self, params: dict, url) -> None:
        query = parse_qs(url.query)
        after = int(query.get("after", ["0"])[0])
        if query.get("stream", ["0"])[0] in ("1", "true"):
            self._stream_sse(params["sid"], after)
            return
        wait_s = min(float(query.get("wait", ["0"])[0]), 60.0)
        envelopes = self.service.events_after(params["sid"], after=after, wait_s=wait_s)
        self._send_json({"envelopes": _envelopes_json(envelopes)})

    def _stream_sse(self, session_id: str, after: int) -> None:
        self.service.last_seq(session_id)  # 404 before headers for unknown sessions
        self.send_response(HTTPStatus.OK)
        self.send_header("Content-Type", "text/event-stream")
        self.send_header("Cache-Control", "no-cache")
        self.send_header("Connection", "close")
        self.end_headers()
        cursor = after
        try:
            while True:
                envelopes = self.service.events_after(
                    session_id, after=cursor, wait_s=SSE_POLL_SECONDS
                )
                if not envelopes:
                    self.wfile.write(b": keepalive\n\n")
                    self.wfile.flush()
                    continue
                for envelope in envelopes:
                    data = json.dumps(envelope.to_json())
                    frame = f"id: {envelope.sequence_number}\ndata: {data}\n\n"
                    self.wfile.write(frame.encode())
                    cursor = envelope.sequence_number
                self.wfile.flush()
        except (BrokenPipeError, ConnectionResetError):
            return  # subscriber went away; the log keeps its place

    def _handle_console(self, path: str) -> None:
        root = self.server.config.console_dir  # type: ignore[attr-defined]
        if not root:
            raise ApiError(404, "console not mounted; build it and set console_dir")
        rel = path[len("/console"):].lstrip("/") or "index.html"
        base = Path(root).resolve()
        target = (base / rel).resolve()
        if not str(target).startswith(str(base)) or not target.is_file():
            raise ApiError(404, f"no such file: {rel}")
        content_type = mimetypes.guess_type(target.name)[0] or "application/octet-stream"
        payload = target.read_bytes()
        self.send_response(HTTPStatus.OK)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    # -- plumbing -----------------------------------------------------------------

    def _read_json(self, optional: bool = False) -> dict:
        length = int(self.headers.get("Content-Length") or 0)
        if length == 0:
            if optional:
                return {}
            raise ApiError(400, "request body required")
        if length > MAX_BODY_BYTES:
            raise ApiError(413, "request body too large")
        raw = self.rfile.read(length)
        try:
            body = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ApiError(400, f"invalid JSON body: {exc}") from exc
        if not isinstance(body, dict):
            raise ApiError(400, "JSON body must be an object")
        return body

    def _send_json(self, payload: dict, status: int = 200) -> None:
        data = json.dumps(payload).encode()
        try:
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(data)))
            self.end_headers()
            self.wfile.write(data)
        except (BrokenPipeError, ConnectionResetError):
            pass


def serve(config: GatewayConfig, service: AssistantService | None = None) -> GatewayServer:
    """Build and return a ready-to-run server (call serve_forever on it)."""
    service = service or AssistantService(config)
    return GatewayServer(config, service)


def run(config: GatewayConfig) -> None:
    """Blocking entry point with the periodic tick timer."""
    server = serve(config)
    host, port = server.server_address[:2]
    print(f"listening on http://{host}:{port}", flush=True)

    stop = threading.Event()

    def tick_loop() -> None:
        while not stop.wait(config.tick_period_s):
            try:
                server.service.tick()
            except Exception as exc:  # keep the timer alive; surface the cause
                print(f"tick error: {exc}", flush=True)

    timer = threading.Thread(target=tick_loop, name="tick-timer", daemon=True)
    timer.start()
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        stop.set()
        server.shutdown()
        server.server_close()
