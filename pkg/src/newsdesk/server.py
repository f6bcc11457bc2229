"""The HTTP service: registration, login, story CRUD, media upload,
paginated search, viewer endpoints, RSS and admin moderation.

Built on the stdlib threading HTTP server; handlers are stateless and
all shared state lives in the store, which serialises writes. Every
error body is a status XML document so clients need a single decoder.
One log line per request goes to stdout: method, path, status,
milliseconds.
"""

from __future__ import annotations

import mimetypes
import re
import sys
import time
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qsl, urlsplit

from . import conffile, wire
from .model import (
    MediaKind,
    ResultPage,
    SearchField,
    Status,
    paginate,
    summarize,
    validate_registration,
)
from .store import (
    BadCredentials,
    BlobTooLarge,
    DuplicateUsername,
    FormatMismatch,
    NotFound,
    Session,
    Store,
    UnknownCategory,
    ValidationError,
)
from .wire import StatusPayload

DEFAULT_MAX_UPLOAD = 10 * 1024 * 1024
# Frame headroom on top of the blob limit for multipart framing and the
# accompanying form fields.
_BODY_OVERHEAD = 64 * 1024

_CONTENT_TYPES = {
    "jpeg": "image/jpeg",
    "mp3": "audio/mpeg",
}


@dataclass
class ServerConfig:
    bind_host: str = "127.0.0.1"
    bind_port: int = 8642
    data_dir: Path = Path("data")
    max_upload_bytes: int = DEFAULT_MAX_UPLOAD
    site_title: str = "Newsdesk"
    admin_usernames: tuple[str, ...] = ()
    static_dir: Path | None = None
    hash_iterations: int = 50_000

    @property
    def bind_address(self) -> str:
        return f"{self.bind_host}:{self.bind_port}"

    @classmethod
    def from_file(cls, path: str | Path) -> "ServerConfig":
        values = conffile.load(path)
        config = cls()
        if "bind_address" in values:
            host, sep, port = values["bind_address"].rpartition(":")
            if not sep:
                raise conffile.ConfigError("bind_address must be host:port")
            config.bind_host = host
            config.bind_port = int(port)
        if "data_dir" in values:
            config.data_dir = Path(values["data_dir"])
        if "max_upload_bytes" in values:
            config.max_upload_bytes = int(values["max_upload_bytes"])
            if config.max_upload_bytes <= 0:
                raise conffile.ConfigError("max_upload_bytes must be positive")
        if "site_title" in values:
            config.site_title = values["site_title"]
        if values.get("admin_usernames"):
            config.admin_usernames = tuple(
                name.strip()
                for name in values["admin_usernames"].split(",")
                if name.strip()
            )
        if values.get("static_dir"):
            config.static_dir = Path(values["static_dir"])
        if "hash_iterations" in values:
            config.hash_iterations = int(values["hash_iterations"])
        return config

    def to_file(self, path: str | Path) -> None:
        conffile.dump(
            path,
            {
                "bind_address": self.bind_address,
                "data_dir": str(self.data_dir),
                "max_upload_bytes": str(self.max_upload_bytes),
                "site_title": self.site_title,
                "admin_usernames": ", ".join(self.admin_usernames),
                "static_dir": str(self.static_dir) if self.static_dir else "",
            },
            header="newsdesk server configuration",
        )


class HttpError(Exception):
    def __init__(self, status: int, message: str, detail=()):
        super().__init__(message)
        self.status = status
        self.payload = StatusPayload("error", message, tuple(detail))


@dataclass
class Request:
    method: str
    path: str
    query: dict[str, str]
    headers: dict
    body: bytes
    params: tuple[str, ...] = ()
    form: dict[str, str] = field(default_factory=dict)


class NewsServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, config: ServerConfig, store: Store | None = None):
        self.config = config
        self.store = store or Store(
            config.data_dir,
            hash_iterations=config.hash_iterations,
            max_blob_bytes=config.max_upload_bytes,
        )
        super().__init__((config.bind_host, config.bind_port), _Handler)
        # Port 0 means "pick one"; reflect the real port back into the
        # config so feed links and logs name the reachable address.
        self.config.bind_port = self.server_address[1]

    @property
    def base_url(self) -> str:
        host, port = self.server_address[:2]
        return f"http://{host}:{port}"

    def handle_error(self, request, client_address):
        # Clients hanging up mid-request are routine, not server faults.
        exc = sys.exc_info()[1]
        if isinstance(exc, (ConnectionResetError, BrokenPipeError)):
            return
        super().handle_error(request, client_address)


def create_server(config: ServerConfig, store: Store | None = None) -> NewsServer:
    return NewsServer(config, store)


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server: NewsServer

    # (method, pattern, handler name)
    ROUTES = [
        ("POST", re.compile(r"^/api/register$"), "handle_register"),
        ("POST", re.compile(r"^/api/login$"), "handle_login"),
        ("POST", re.compile(r"^/api/message$"), "handle_create_message"),
        ("POST", re.compile(r"^/api/message/(\d+)/update$"), "handle_update_message"),
        ("POST", re.compile(r"^/api/media$"), "handle_upload_media"),
        ("GET", re.compile(r"^/api/search$"), "handle_search"),
        ("GET", re.compile(r"^/api/messages$"), "handle_list_messages"),
        ("GET", re.compile(r"^/api/message/(\d+)$"), "handle_get_message"),
        ("GET", re.compile(r"^/api/categories$"), "handle_categories"),
        ("GET", re.compile(r"^/api/media/(\d+)/(\d+)$"), "handle_get_blob"),
        ("GET", re.compile(r"^/feed\.xml$"), "handle_feed"),
        ("POST", re.compile(r"^/api/admin/message/(\d+)/status$"), "handle_set_status"),
        ("DELETE", re.compile(r"^/api/admin/message/(\d+)$"), "handle_delete_message"),
        ("GET", re.compile(r"^/admin(?:/(.*))?$"), "handle_static"),
    ]

    # -- plumbing -----------------------------------------------------

    def do_GET(self):
        self._dispatch("GET")

    def do_POST(self):
        self._dispatch("POST")

    def do_DELETE(self):
        self._dispatch("DELETE")

    def _dispatch(self, method: str) -> None:
        started = time.monotonic()
        url = urlsplit(self.path)
        status = 500
        try:
            request = self._build_request(method, url)
            handler, params = self._route(method, url.path)
            request.params = params
            status, content_type, body = handler(request)
        except HttpError as exc:
            status = exc.status
            content_type = "application/xml; charset=utf-8"
            body = wire.encode_status(exc.payload)
        except (BrokenPipeError, ConnectionResetError):
            return
        except Exception as exc:  # keep serving; surface as a 500
            status = 500
            content_type = "application/xml; charset=utf-8"
            body = wire.encode_status(
                StatusPayload("error", f"internal error: {exc}")
            )
        self._respond(status, content_type, body)
        elapsed_ms = int((time.monotonic() - started) * 1000)
        print(f"{method} {self.path} {status} {elapsed_ms}ms", flush=True)

    def _route(self, method: str, path: str):
        path_known = False
        for route_method, pattern, name in self.ROUTES:
            m = pattern.match(path)
            if m:
                path_known = True
                if route_method == method:
                    return getattr(self, name), m.groups()
        if path_known:
            raise HttpError(405, "method not allowed")
        raise HttpError(404, "not found")

    def _build_request(self, method: str, url) -> Request:
        query = dict(parse_qsl(url.query, keep_blank_values=True))
        body = b""
        if method in ("POST", "PUT"):
            length_header = self.headers.get("Content-Length")
            if length_header is None:
                self.close_connection = True
                raise HttpError(411, "Content-Length required")
            try:
                length = int(length_header)
            except ValueError:
                self.close_connection = True
                raise HttpError(400, "bad Content-Length") from None
            limit = self.server.config.max_upload_bytes + _BODY_OVERHEAD
            if length > limit:
                # The body stays unread; this connection cannot be reused.
                self.close_connection = True
                raise HttpError(413, "request body too large")
            body = self.rfile.read(length)
        request = Request(
            method=method,
            path=url.path,
            query=query,
            headers=self.headers,
            body=body,
        )
        content_type = (self.headers.get("Content-Type") or "").split(";")[0].strip()
        if body and content_type == "application/x-www-form-urlencoded":
            request.form = dict(
                parse_qsl(body.decode("utf-8"), keep_blank_values=True)
            )
        return request

    def _respond(self, status: int, content_type: str, body: bytes) -> None:
        try:
            self.send_response_only(status)
            self.send_header("Content-Type", content_type)
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            if body:
                self.wfile.write(body)
        except (BrokenPipeError, ConnectionResetError):
            pass

    def log_message(self, format, *args):
        # The dispatch loop prints the single request line itself.
        pass

    # -- auth helpers ---------------------------------------------------

    def _token_of(self, request: Request) -> str | None:
        header = request.headers.get("X-Auth-Token")
        if header:
            return header.strip()
        if "token" in request.form:
            return request.form["token"]
        if "token" in request.query:
            return request.query["token"]
        return None

    def _session(self, request: Request) -> Session | None:
        token = self._token_of(request)
        if token is None:
            return None
        return self.server.store.session_for(token)

    def _require_session(self, request: Request) -> Session:
        session = self._session(request)
        if session is None:
            raise HttpError(401, "authentication required")
        return session

    def _require_admin(self, request: Request) -> Session:
        session = self._require_session(request)
        if session.username not in self.server.config.admin_usernames:
            raise HttpError(403, "admin access required")
        return session

    def _is_admin(self, request: Request) -> bool:
        session = self._session(request)
        return (
            session is not None
            and session.username in self.server.config.admin_usernames
        )

    @staticmethod
    def _xml(status: int, body: bytes):
        return status, "application/xml; charset=utf-8", body

    def _status_ok(self, message: str):
        return self._xml(200, wire.encode_status(StatusPayload("ok", message)))

    # -- account endpoints ----------------------------------------------

    def handle_register(self, request: Request):
        form = request.form
        first = form.get("first_name", "")
        last = form.get("last_name", "")
        username = form.get("username", "")
        password = form.get("password", "")
        result = validate_registration(first, last, username, password)
        if not result.ok:
            raise HttpError(422, "registration failed", result.errors)
        try:
            self.server.store.create_user(first, last, username, password)
        except DuplicateUsername:
            raise HttpError(409, "username is taken") from None
        return self._status_ok("registration successful")

    def handle_login(self, request: Request):
        try:
            session = self.server.store.authenticate(
                request.form.get("username", ""), request.form.get("password", "")
            )
        except BadCredentials:
            raise HttpError(401, "bad username or password") from None
        return self._xml(200, wire.encode_session(session.token))

    # -- story endpoints ---------------------------------------------------

    def handle_create_message(self, request: Request):
        session = self._require_session(request)
        form = request.form
        try:
            message_id = self.server.store.insert_message(
                title=form.get("title", ""),
                body=form.get("body", ""),
                place=form.get("place", ""),
                category=form.get("category", ""),
                author=session.username,
            )
        except ValidationError as exc:
            raise HttpError(422, "invalid message", exc.errors) from None
        return self._xml(200, wire.encode_created(message_id))

    def handle_update_message(self, request: Request):
        self._require_session(request)
        message_id = int(request.params[0])
        fields = {
            name: request.form[name]
            for name in ("title", "body", "place", "category")
            if name in request.form
        }
        try:
            self.server.store.update_message(message_id, **fields)
        except NotFound:
            raise HttpError(404, "no such message") from None
        except ValidationError as exc:
            raise HttpError(422, "invalid message", exc.errors) from None
        return self._status_ok("message updated")

    def handle_upload_media(self, request: Request):
        self._require_session(request)
        content_type = request.headers.get("Content-Type", "")
        m = re.search(r'boundary="?([^";]+)"?', content_type)
        if "multipart/form-data" not in content_type or not m:
            raise HttpError(400, "expected multipart/form-data with a boundary")
        try:
            parts = wire.decode_multipart(m.group(1), request.body)
        except wire.FramingError as exc:
            raise HttpError(400, f"bad multipart body: {exc}") from None
        fields = {p.name: p for p in parts}
        file_part = next((p for p in parts if p.filename is not None), None)
        if "message_id" not in fields or "kind" not in fields or file_part is None:
            raise HttpError(
                400, "media upload needs message_id, kind and a file part"
            )
        try:
            message_id = int(fields["message_id"].body.decode("utf-8"))
            kind = MediaKind(fields["kind"].body.decode("utf-8"))
        except (ValueError, UnicodeDecodeError):
            raise HttpError(400, "bad message_id or kind") from None
        format = Path(file_part.filename).suffix.lstrip(".").lower()
        if format == "jpg":
            format = "jpeg"
        if not format and file_part.content_type:
            format = file_part.content_type.rpartition("/")[2]
        if not format:
            raise HttpError(400, "file part needs a format extension")
        try:
            media_id = self.server.store.attach_media(
                message_id, kind, format, file_part.body
            )
        except NotFound:
            raise HttpError(404, "no such message") from None
        except FormatMismatch as exc:
            raise HttpError(415, str(exc)) from None
        except BlobTooLarge as exc:
            raise HttpError(413, str(exc)) from None
        return self._xml(200, wire.encode_created(media_id))

    # -- search and viewer --------------------------------------------------

    def handle_search(self, request: Request):
        self._require_session(request)
        keyword = request.query.get("q", "")
        if not keyword:
            raise HttpError(400, "missing search keyword")
        try:
            fld = SearchField(request.query.get("field", ""))
        except ValueError:
            raise HttpError(400, "field must be title, body or author") from None
        try:
            page_no = int(request.query.get("page", "1"))
        except ValueError:
            raise HttpError(400, "page must be a positive integer") from None
        if page_no < 1:
            raise HttpError(400, "page must be a positive integer")
        store = self.server.store
        ids = store.search_messages(keyword, fld)
        page = paginate(ids, page_no)
        items = tuple(summarize(store.get_message(i)) for i in page.ids)
        result = ResultPage(
            page=page.page, total_matches=page.total_matches, items=items
        )
        return self._xml(200, wire.encode_result_page(result))

    def handle_list_messages(self, request: Request):
        store = self.server.store
        if "category" in request.query:
            try:
                messages = store.list_by_category(request.query["category"])
            except UnknownCategory:
                raise HttpError(404, "no such category") from None
        elif self._is_admin(request):
            messages = store.list_all()
        else:
            messages = store.list_recent()
        items = [summarize(m) for m in messages]
        return self._xml(200, wire.encode_viewer_list(items))

    def handle_get_message(self, request: Request):
        store = self.server.store
        message_id = int(request.params[0])
        try:
            msg = store.get_message(message_id)
        except NotFound:
            raise HttpError(404, "no such message") from None
        if msg.status is Status.INACTIVE and not self._is_admin(request):
            raise HttpError(404, "no such message")
        refs = tuple(
            wire.MediaRef(a.media_id, a.kind.value, a.format, a.byte_length)
            for a in msg.media
        )
        return self._xml(200, wire.encode_news_detail(summarize(msg), refs))

    def handle_categories(self, request: Request):
        names = self.server.store.list_categories()
        return self._xml(200, wire.encode_categories(names))

    def handle_get_blob(self, request: Request):
        store = self.server.store
        message_id = int(request.params[0])
        media_id = int(request.params[1])
        try:
            msg = store.get_message(message_id)
        except NotFound:
            raise HttpError(404, "no such media") from None
        if msg.status is Status.INACTIVE and not self._is_admin(request):
            raise HttpError(404, "no such media")
        try:
            att, blob = store.read_blob(message_id, media_id)
        except NotFound:
            raise HttpError(404, "no such media") from None
        content_type = _CONTENT_TYPES.get(
            att.format, f"{'video' if att.kind is MediaKind.VIDEO else 'application'}/"
            f"{att.format or 'octet-stream'}"
        )
        return 200, content_type, blob

    def handle_feed(self, request: Request):
        store = self.server.store
        items = [summarize(m) for m in store.list_recent()]
        body = wire.encode_rss(
            self.server.config.site_title,
            items,
            link=f"http://{self.server.config.bind_address}/",
        )
        return self._xml(200, body)

    # -- moderation ---------------------------------------------------------

    def handle_set_status(self, request: Request):
        self._require_admin(request)
        message_id = int(request.params[0])
        raw = request.form.get("status", "")
        try:
            status = Status(raw)
        except ValueError:
            raise HttpError(422, "status must be active or inactive") from None
        try:
            self.server.store.set_status(message_id, status)
        except NotFound:
            raise HttpError(404, "no such message") from None
        return self._status_ok(f"message {status.value}")

    def handle_delete_message(self, request: Request):
        self._require_admin(request)
        message_id = int(request.params[0])
        try:
            self.server.store.delete_message(message_id)
        except NotFound:
            raise HttpError(404, "no such message") from None
        return self._status_ok("message deleted")

    # -- static admin UI ------------------------------------------------------

    def handle_static(self, request: Request):
        root = self.server.config.static_dir
        if root is None:
            raise HttpError(404, "no admin interface installed")
        rel = request.params[0] or "index.html"
        target = (root / rel).resolve()
        root = root.resolve()
        if not (target == root or target.is_relative_to(root)):
            raise HttpError(404, "not found")
        if target.is_dir():
            target = target / "index.html"
        if not target.is_file():
            raise HttpError(404, "not found")
        content_type = (
            mimetypes.guess_type(target.name)[0] or "application/octet-stream"
        )
        return 200, content_type, target.read_bytes()
