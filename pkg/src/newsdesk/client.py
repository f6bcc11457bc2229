"""Headless reporter client: everything the mobile newsroom app did,
as a library the CLI drives.

Local state lives in a small data directory: the configured account,
a cached session token and one directory per draft (manifest plus
copies of its attachments, kept after upload). Uploads send the text
first, then each attachment in order; the manifest records progress
after every part so a failed upload resumes without re-sending.
"""

from __future__ import annotations

import http.client
import json
import os
import shutil
import socket
import urllib.parse
from dataclasses import dataclass
from pathlib import Path

from . import conffile, wire
from .model import KIND_FORMATS, MediaKind, ResultPage, SearchField
from .wire import Part, ProtocolError, StatusPayload

CONFIG_NAME = "reporter.conf"
TOKEN_NAME = "session.token"
DRAFTS_DIR = "drafts"

UPLOAD_CHUNK = 8 * 1024

_MAGIC_SNIFFERS = {
    "image": lambda head: head.startswith(b"\xff\xd8\xff"),
    "audio": lambda head: head.startswith(b"ID3")
    or (len(head) >= 2 and head[0] == 0xFF and (head[1] & 0xE0) == 0xE0),
}

_EXTENSIONS = {"image": (".jpeg", ".jpg"), "audio": (".mp3",)}


class ClientError(Exception):
    exit_code = 1


class ConfigMissing(ClientError):
    exit_code = 2


class ValidationFailure(ClientError):
    exit_code = 2

    def __init__(self, message, fields=()):
        super().__init__(message)
        self.fields = tuple(fields)


class NoSuchDraft(ClientError):
    exit_code = 2


class FormatMismatch(ClientError):
    exit_code = 2


class ServerRejected(ClientError):
    """The server answered with a clean error status."""

    exit_code = 2

    def __init__(self, http_status: int, payload: StatusPayload):
        super().__init__(payload.message)
        self.http_status = http_status
        self.payload = payload


class NetworkError(ClientError):
    exit_code = 3


class AuthFailed(ClientError):
    exit_code = 3


class TextUploadFailed(ClientError):
    exit_code = 3


class MediaUploadFailed(ClientError):
    exit_code = 3

    def __init__(self, index: int, cause: str):
        super().__init__(f"attachment #{index + 1} failed: {cause}")
        self.index = index


class WireError(ClientError):
    exit_code = 4


@dataclass(frozen=True)
class ClientConfig:
    username: str
    password: str
    server_url: str


@dataclass
class Attachment:
    source: str  # original path as given
    kind: str
    format: str
    stored_name: str | None = None  # copy inside the draft directory
    media_id: int | None = None  # set once uploaded


@dataclass
class Draft:
    draft_id: int
    title: str
    body: str
    place: str
    category: str
    attachments: list[Attachment]
    upload_state: str = "unsent"  # unsent | text_sent | complete
    message_id: int | None = None


def default_data_dir() -> Path:
    base = os.environ.get("XDG_DATA_HOME")
    root = Path(base) if base else Path.home() / ".local" / "share"
    return root / "newsdesk-reporter"


def _parse_url(url: str):
    parsed = urllib.parse.urlsplit(url)
    if parsed.scheme != "http" or not parsed.hostname:
        raise ValidationFailure(f"server_url must be an absolute http URL: {url!r}")
    return parsed.hostname, parsed.port or 80, parsed.path.rstrip("/")


class HttpSession:
    """One logical connection to the server; bodies are sent in 8 KiB
    slices so upload progress can be observed."""

    def __init__(self, server_url: str, timeout: float = 15.0):
        self.host, self.port, self.prefix = _parse_url(server_url)
        self.timeout = timeout

    def request(
        self,
        method: str,
        path: str,
        *,
        body: bytes = b"",
        content_type: str | None = None,
        token: str | None = None,
        on_sent=None,
    ) -> tuple[int, bytes]:
        conn = http.client.HTTPConnection(self.host, self.port, timeout=self.timeout)
        try:
            conn.putrequest(method, self.prefix + path)
            if token:
                conn.putheader("X-Auth-Token", token)
            if content_type:
                conn.putheader("Content-Type", content_type)
            conn.putheader("Content-Length", str(len(body)))
            conn.endheaders()
            for offset in range(0, len(body), UPLOAD_CHUNK):
                chunk = body[offset : offset + UPLOAD_CHUNK]
                conn.send(chunk)
                if on_sent:
                    on_sent(len(chunk))
            response = conn.getresponse()
            return response.status, response.read()
        except (OSError, socket.timeout, http.client.HTTPException) as exc:
            raise NetworkError(f"cannot reach {self.host}:{self.port}: {exc}") from None
        finally:
            conn.close()


def _encode_form(fields: dict[str, str]) -> bytes:
    return urllib.parse.urlencode(fields).encode("utf-8")


class ReporterClient:
    def __init__(self, data_dir: str | Path | None = None):
        self.data_dir = Path(data_dir) if data_dir else default_data_dir()
        self._config: ClientConfig | None = None

    # -- configuration ------------------------------------------------

    @property
    def config_path(self) -> Path:
        return self.data_dir / CONFIG_NAME

    def configure(self, username: str, password: str, server_url: str) -> ClientConfig:
        if not username or not password or not server_url:
            raise ValidationFailure("username, password and server_url are required")
        _parse_url(server_url)
        config = ClientConfig(username, password, server_url)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        conffile.dump(
            self.config_path,
            {
                "username": config.username,
                "password": config.password,
                "server_url": config.server_url,
            },
            header="newsdesk reporter configuration",
        )
        self._config = config
        self._forget_token()
        return config

    def edit_config(
        self,
        username: str | None = None,
        password: str | None = None,
        server_url: str | None = None,
    ) -> ClientConfig:
        current = self.load_config()
        return self.configure(
            username if username is not None else current.username,
            password if password is not None else current.password,
            server_url if server_url is not None else current.server_url,
        )

    def load_config(self) -> ClientConfig:
        if self._config is not None:
            return self._config
        if not self.config_path.is_file():
            raise ConfigMissing("no configuration found; run configure first")
        values = conffile.load(self.config_path)
        try:
            self._config = ClientConfig(
                values["username"], values["password"], values["server_url"]
            )
        except KeyError as exc:
            raise ConfigMissing(f"configuration is missing {exc}") from None
        return self._config

    # -- session ---------------------------------------------------------

    @property
    def _token_path(self) -> Path:
        return self.data_dir / TOKEN_NAME

    def _cached_token(self) -> str | None:
        if self._token_path.is_file():
            return self._token_path.read_text(encoding="utf-8").strip() or None
        return None

    def _remember_token(self, token: str) -> None:
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self._token_path.write_text(token, encoding="utf-8")

    def _forget_token(self) -> None:
        if self._token_path.exists():
            self._token_path.unlink()

    def _session(self) -> HttpSession:
        return HttpSession(self.load_config().server_url)

    def login(self) -> str:
        """Exchange the configured credentials for a fresh token."""
        config = self.load_config()
        status, body = self._session().request(
            "POST",
            "/api/login",
            body=_encode_form(
                {"username": config.username, "password": config.password}
            ),
            content_type="application/x-www-form-urlencoded",
        )
        if status == 401:
            raise AuthFailed("server rejected the configured credentials")
        if status != 200:
            raise WireError(f"unexpected login response {status}")
        try:
            token = wire.decode_session(body)
        except (ProtocolError, ValueError) as exc:
            raise WireError(f"bad login response: {exc}") from None
        self._remember_token(token)
        return token

    def register(self, first: str, last: str) -> StatusPayload:
        """Create the configured account on the server."""
        config = self.load_config()
        status, body = self._session().request(
            "POST",
            "/api/register",
            body=_encode_form(
                {
                    "first_name": first,
                    "last_name": last,
                    "username": config.username,
                    "password": config.password,
                }
            ),
            content_type="application/x-www-form-urlencoded",
        )
        payload = self._decode_status(body)
        if status != 200:
            raise ServerRejected(status, payload)
        return payload

    def _authed(
        self, method: str, path: str, *, body: bytes = b"",
        content_type: str | None = None, on_sent=None,
    ) -> tuple[int, bytes]:
        session = self._session()
        token = self._cached_token()
        if token is None:
            token = self.login()
        status, response = session.request(
            method, path, body=body, content_type=content_type,
            token=token, on_sent=on_sent,
        )
        if status == 401:
            # Stale token: log in once more, then give up.
            token = self.login()
            status, response = session.request(
                method, path, body=body, content_type=content_type,
                token=token, on_sent=on_sent,
            )
            if status == 401:
                raise AuthFailed("authentication rejected twice")
        return status, response

    @staticmethod
    def _decode_status(body: bytes) -> StatusPayload:
        try:
            return wire.decode_status(body)
        except (ProtocolError, ValueError) as exc:
            raise WireError(f"bad status response: {exc}") from None

    # -- drafts ------------------------------------------------------------

    @property
    def drafts_dir(self) -> Path:
        return self.data_dir / DRAFTS_DIR

    def _draft_dir(self, draft_id: int) -> Path:
        return self.drafts_dir / str(draft_id)

    def _manifest_path(self, draft_id: int) -> Path:
        return self._draft_dir(draft_id) / "manifest.json"

    def _save_draft(self, draft: Draft) -> None:
        path = self._manifest_path(draft.draft_id)
        path.parent.mkdir(parents=True, exist_ok=True)
        payload = {
            "draft_id": draft.draft_id,
            "title": draft.title,
            "body": draft.body,
            "place": draft.place,
            "category": draft.category,
            "upload_state": draft.upload_state,
            "message_id": draft.message_id,
            "attachments": [
                {
                    "source": a.source,
                    "kind": a.kind,
                    "format": a.format,
                    "stored_name": a.stored_name,
                    "media_id": a.media_id,
                }
                for a in draft.attachments
            ],
        }
        tmp = path.with_suffix(".tmp")
        tmp.write_text(json.dumps(payload, indent=2), encoding="utf-8")
        os.replace(tmp, path)

    def _load_draft(self, draft_id: int) -> Draft:
        path = self._manifest_path(draft_id)
        if not path.is_file():
            raise NoSuchDraft(f"no saved draft {draft_id}")
        data = json.loads(path.read_text(encoding="utf-8"))
        return Draft(
            draft_id=data["draft_id"],
            title=data["title"],
            body=data["body"],
            place=data["place"],
            category=data["category"],
            attachments=[Attachment(**a) for a in data["attachments"]],
            upload_state=data["upload_state"],
            message_id=data["message_id"],
        )

    def compose(self, title: str, body: str, place: str, category: str) -> Draft:
        self.load_config()
        errors = []
        if not title.strip():
            errors.append("title")
        if not body.strip():
            errors.append("body")
        if not category.strip():
            errors.append("category")
        if errors:
            raise ValidationFailure(
                f"missing required fields: {', '.join(errors)}", errors
            )
        self.drafts_dir.mkdir(parents=True, exist_ok=True)
        taken = [int(p.name) for p in self.drafts_dir.iterdir() if p.name.isdigit()]
        draft = Draft(
            draft_id=max(taken, default=0) + 1,
            title=title,
            body=body,
            place=place,
            category=category,
            attachments=[],
        )
        self._save_draft(draft)
        return draft

    def attach(self, draft_id: int, file_path: str | Path, kind: str) -> Draft:
        self.load_config()
        draft = self._load_draft(draft_id)
        if draft.upload_state == "complete":
            raise ValidationFailure("draft already uploaded")
        try:
            kind_enum = MediaKind(kind)
        except ValueError:
            raise ValidationFailure("kind must be image, audio or video") from None
        path = Path(file_path)
        if not path.is_file():
            raise FileNotFoundError(f"no such file: {path}")
        format = self._checked_format(kind_enum, path)
        draft.attachments.append(
            Attachment(source=str(path), kind=kind_enum.value, format=format)
        )
        self._save_draft(draft)
        return draft

    def _checked_format(self, kind: MediaKind, path: Path) -> str:
        """Enforce the jpeg/mp3 gate by extension and a magic-byte sniff;
        video passes with whatever extension it has."""
        ext = path.suffix.lower()
        if kind.value in _EXTENSIONS:
            if ext not in _EXTENSIONS[kind.value]:
                expected = KIND_FORMATS[kind.value]
                raise FormatMismatch(
                    f"{kind.value} attachments must be {expected} "
                    f"(got {ext or 'no extension'})"
                )
            head = path.open("rb").read(4)
            if not _MAGIC_SNIFFERS[kind.value](head):
                raise FormatMismatch(
                    f"{path.name} does not look like {KIND_FORMATS[kind.value]}"
                )
            return KIND_FORMATS[kind.value]
        if not ext:
            raise FormatMismatch("video attachments need a file extension")
        return ext.lstrip(".")

    def saved_items(self) -> list[Draft]:
        if not self.drafts_dir.is_dir():
            return []
        ids = sorted(
            int(p.name) for p in self.drafts_dir.iterdir() if p.name.isdigit()
        )
        return [self._load_draft(i) for i in ids]

    def delete_saved(self, draft_id: int) -> None:
        directory = self._draft_dir(draft_id)
        if not directory.is_dir():
            raise NoSuchDraft(f"no saved draft {draft_id}")
        shutil.rmtree(directory)

    # -- upload -------------------------------------------------------------

    def upload(self, draft_id: int, progress=None) -> int:
        """Send the text first, then each attachment in order.

        Progress is reported as whole percentages, non-decreasing, with
        100 exactly once after the final byte. Already-sent parts are
        skipped on retry.
        """
        draft = self._load_draft(draft_id)
        if draft.upload_state == "complete":
            raise ValidationFailure("draft already uploaded")
        self._copy_attachments(draft)

        files_dir = self._draft_dir(draft.draft_id) / "files"
        text_body = None
        if draft.upload_state == "unsent":
            text_body = _encode_form(
                {
                    "title": draft.title,
                    "body": draft.body,
                    "place": draft.place,
                    "category": draft.category,
                }
            )
        pending = [
            (index, att)
            for index, att in enumerate(draft.attachments)
            if att.media_id is None
        ]
        # Media bodies are framed only after the text upload hands back
        # the message id, so the total is an estimate (blob plus a little
        # framing); percentages are capped below 100 until everything is
        # actually delivered.
        total = (len(text_body) if text_body else 0) + sum(
            (files_dir / att.stored_name).stat().st_size + 256
            for _, att in pending
        )
        total = total or 1
        sent = 0
        last = -1

        def report(pct: int) -> None:
            nonlocal last
            if progress and pct > last:
                last = pct
                progress(pct)

        def on_sent(n: int) -> None:
            nonlocal sent
            sent += n
            report(min(99, sent * 100 // total))

        report(0)
        if text_body is not None:
            try:
                status, response = self._authed(
                    "POST",
                    "/api/message",
                    body=text_body,
                    content_type="application/x-www-form-urlencoded",
                    on_sent=on_sent,
                )
            except NetworkError as exc:
                raise TextUploadFailed(str(exc)) from None
            if status != 200:
                raise TextUploadFailed(self._failure_reason(status, response))
            try:
                draft.message_id = wire.decode_created(response)
            except (ProtocolError, ValueError) as exc:
                raise WireError(f"bad create response: {exc}") from None
            draft.upload_state = "text_sent"
            self._save_draft(draft)

        for index, att in pending:
            blob = (files_dir / att.stored_name).read_bytes()
            boundary, multipart_body = wire.encode_multipart(
                [
                    Part("message_id", None, None, str(draft.message_id).encode()),
                    Part("kind", None, None, att.kind.encode()),
                    Part("file", att.stored_name, _blob_content_type(att), blob),
                ]
            )
            try:
                status, response = self._authed(
                    "POST",
                    "/api/media",
                    body=multipart_body,
                    content_type=f"multipart/form-data; boundary={boundary}",
                    on_sent=on_sent,
                )
            except NetworkError as exc:
                raise MediaUploadFailed(index, str(exc)) from None
            if status != 200:
                raise MediaUploadFailed(
                    index, self._failure_reason(status, response)
                )
            try:
                att.media_id = wire.decode_created(response)
            except (ProtocolError, ValueError) as exc:
                raise WireError(f"bad media response: {exc}") from None
            self._save_draft(draft)

        draft.upload_state = "complete"
        self._save_draft(draft)
        report(100)
        return draft.message_id

    def _copy_attachments(self, draft: Draft) -> None:
        """Keep the uploaded story locally with its attachments: copies
        are made into the draft directory the first time upload runs."""
        files_dir = self._draft_dir(draft.draft_id) / "files"
        changed = False
        for index, att in enumerate(draft.attachments):
            if att.stored_name:
                continue
            source = Path(att.source)
            if not source.is_file():
                raise FileNotFoundError(f"attachment vanished: {source}")
            files_dir.mkdir(parents=True, exist_ok=True)
            stored = f"{index + 1}-{source.name}"
            shutil.copyfile(source, files_dir / stored)
            att.stored_name = stored
            changed = True
        if changed:
            self._save_draft(draft)

    def _failure_reason(self, status: int, body: bytes) -> str:
        try:
            payload = wire.decode_status(body)
            return f"HTTP {status}: {payload.message}"
        except Exception:
            return f"HTTP {status}"

    # -- search -------------------------------------------------------------

    def search(self, keyword: str, field: str) -> "Pager":
        try:
            fld = SearchField(field)
        except ValueError:
            raise ValidationFailure("field must be title, body or author") from None
        if not keyword:
            raise ValidationFailure("keyword must not be empty")
        return Pager(self, keyword, fld)

    def fetch_page(self, keyword: str, field: SearchField, page: int) -> ResultPage:
        query = urllib.parse.urlencode(
            {"q": keyword, "field": field.value, "page": page}
        )
        status, body = self._authed("GET", f"/api/search?{query}")
        if status != 200:
            raise ServerRejected(status, self._decode_status(body))
        try:
            return wire.decode_result_page(body)
        except (ProtocolError, ValueError) as exc:
            raise WireError(f"bad search response: {exc}") from None

    # -- editing ---------------------------------------------------------------

    def edit(self, message_id: int, **fields) -> StatusPayload:
        changed = {
            name: value
            for name, value in fields.items()
            if value is not None and name in ("title", "body", "place", "category")
        }
        if not changed:
            raise ValidationFailure("nothing to change")
        status, body = self._authed(
            "POST",
            f"/api/message/{message_id}/update",
            body=_encode_form(changed),
            content_type="application/x-www-form-urlencoded",
        )
        payload = self._decode_status(body)
        if status != 200:
            raise ServerRejected(status, payload)
        return payload

    # -- public reading ----------------------------------------------------------

    def read_feed(self) -> list[str]:
        """Category names, the first drill-down level."""
        status, body = self._session().request("GET", "/api/categories")
        if status != 200:
            raise WireError(f"unexpected response {status}")
        try:
            names = wire.decode_categories(body)
        except (ProtocolError, ValueError) as exc:
            raise WireError(f"bad categories response: {exc}") from None
        return sorted(names, key=str.lower)

    def read_category(self, name: str) -> list[tuple[int, str]]:
        """(id, title) pairs for one category, newest first."""
        query = urllib.parse.urlencode({"category": name})
        status, body = self._session().request("GET", f"/api/messages?{query}")
        if status == 404:
            raise ServerRejected(status, self._decode_status(body))
        if status != 200:
            raise WireError(f"unexpected response {status}")
        try:
            items = wire.decode_news_list(body)
        except (ProtocolError, ValueError) as exc:
            raise WireError(f"bad listing response: {exc}") from None
        return [(item.message_id, item.title) for item in items]

    def read_message(self, message_id: int):
        """Full story text plus its attachment count; never the blobs."""
        status, body = self._session().request("GET", f"/api/message/{message_id}")
        if status == 404:
            raise ServerRejected(status, self._decode_status(body))
        if status != 200:
            raise WireError(f"unexpected response {status}")
        try:
            return wire.decode_news_detail(body)
        except (ProtocolError, ValueError) as exc:
            raise WireError(f"bad message response: {exc}") from None


def _blob_content_type(att: Attachment) -> str:
    if att.kind == "image":
        return "image/jpeg"
    if att.kind == "audio":
        return "audio/mpeg"
    return f"video/{att.format}"


class Pager:
    """Walks search segments; NEXT is offered only while more exist."""

    def __init__(self, client: ReporterClient, keyword: str, field: SearchField):
        self._client = client
        self._keyword = keyword
        self._field = field
        self.current = client.fetch_page(keyword, field, 1)

    @property
    def has_more(self) -> bool:
        return self.current.has_more

    def next(self) -> ResultPage:
        if not self.current.has_more:
            raise ValidationFailure("no further pages")
        self.current = self._client.fetch_page(
            self._keyword, self._field, self.current.page + 1
        )
        return self.current
