"""Shared test plumbing: a bare HTTP helper, corpus generators and the
recording stub server used by the upload tests."""

from __future__ import annotations

import http.client
import random
import threading
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import urlsplit

from newsdesk import wire

TESTDATA = Path(__file__).resolve().parent.parent / "testdata"

_WORDS = (
    "flood storm quake rally match verdict strike festival harvest summit "
    "bridge market school clinic river border station outage recall derby"
).split()

_PLACES = ("Delta", "Northside", "Old Town", "Harbor", "Ridge", "")
_CATEGORIES = ("Weather", "Sports", "Politics", "Local", "Business")


def http_call(
    base_url: str,
    method: str,
    path: str,
    *,
    body: bytes | None = None,
    content_type: str | None = None,
    token: str | None = None,
):
    """(status, headers, body) against a running server; no client lib."""
    parsed = urlsplit(base_url)
    conn = http.client.HTTPConnection(parsed.hostname, parsed.port, timeout=10)
    try:
        headers = {}
        if content_type:
            headers["Content-Type"] = content_type
        if token:
            headers["X-Auth-Token"] = token
        conn.request(method, path, body=body, headers=headers)
        response = conn.getresponse()
        return response.status, dict(response.getheaders()), response.read()
    finally:
        conn.close()


def post_form(base_url, path, fields: dict[str, str], token=None):
    from urllib.parse import urlencode

    return http_call(
        base_url,
        "POST",
        path,
        body=urlencode(fields).encode(),
        content_type="application/x-www-form-urlencoded",
        token=token,
    )


def register_and_login(base_url, username, password, first="Test", last="User"):
    status, _, _ = post_form(
        base_url,
        "/api/register",
        {
            "first_name": first,
            "last_name": last,
            "username": username,
            "password": password,
        },
    )
    assert status in (200, 409), status
    status, _, body = post_form(
        base_url, "/api/login", {"username": username, "password": password}
    )
    assert status == 200, status
    return wire.decode_session(body)


def random_text(rng: random.Random, n_words: int) -> str:
    return " ".join(rng.choice(_WORDS) for _ in range(n_words))


def random_message_fields(rng: random.Random) -> dict[str, str]:
    return {
        "title": random_text(rng, rng.randint(1, 5)).title(),
        "body": random_text(rng, rng.randint(3, 30)) + ".",
        "place": rng.choice(_PLACES),
        "category": rng.choice(_CATEGORIES),
    }


def make_model_message(rng: random.Random, message_id: int, **overrides):
    """A model.Message with randomised fields and a stable timestamp."""
    from newsdesk.model import Message, Status

    fields = random_message_fields(rng)
    base = datetime(2026, 8, 1, tzinfo=timezone.utc)
    values = dict(
        message_id=message_id,
        title=fields["title"],
        body=fields["body"],
        place=fields["place"],
        category=fields["category"],
        author=rng.choice(("ada_l", "ben_w", "cho_k")),
        created_at=base + timedelta(seconds=rng.randint(0, 500_000)),
        updated_at=base + timedelta(seconds=600_000),
        status=Status.ACTIVE,
    )
    values.update(overrides)
    return Message(**values)


# -- recording stub server -------------------------------------------


@dataclass
class StubPlan:
    """What the stub should do; mutate between upload attempts."""

    fail_text: bool = False
    fail_media_at: int | None = None  # fail the Nth media POST (1-based)
    next_message_id: int = 1


@dataclass
class StubLog:
    requests: list = field(default_factory=list)  # (path, part names or form)
    media_posts: int = 0
    media_bytes: list = field(default_factory=list)  # file-part sizes per POST


class _StubHandler(BaseHTTPRequestHandler):
    def do_GET(self):
        server: RecordingStub = self.server  # type: ignore[assignment]
        server.log.requests.append(("get", self.path))
        if self.path.startswith("/api/message/"):
            from datetime import datetime, timezone

            from newsdesk.model import NewsSummary, Status

            summary = NewsSummary(
                message_id=int(self.path.rsplit("/", 1)[1]),
                title="Canned story",
                body="Body text",
                place="Here",
                category="Local",
                author="ada_l",
                created_at=datetime(2026, 8, 1, tzinfo=timezone.utc),
                status=Status.ACTIVE,
                media_count=2,
                thumb_media_id=1,
            )
            refs = (
                wire.MediaRef(1, "image", "jpeg", 10),
                wire.MediaRef(2, "audio", "mp3", 20),
            )
            self._xml(200, wire.encode_news_detail(summary, refs))
            return
        if self.path == "/api/categories":
            self._xml(200, wire.encode_categories(["Local"]))
            return
        self._xml(404, wire.encode_status(wire.StatusPayload("error", "nope")))

    def do_POST(self):
        server: RecordingStub = self.server  # type: ignore[assignment]
        length = int(self.headers.get("Content-Length", "0"))
        body = self.rfile.read(length)
        if self.path == "/api/login":
            self._xml(200, wire.encode_session("f" * 64))
            return
        if self.path == "/api/message":
            server.log.requests.append(("message", body))
            if server.plan.fail_text:
                self._xml(
                    500, wire.encode_status(wire.StatusPayload("error", "boom"))
                )
                return
            self._xml(200, wire.encode_created(server.plan.next_message_id))
            return
        if self.path == "/api/media":
            server.log.media_posts += 1
            content_type = self.headers.get("Content-Type", "")
            boundary = content_type.split("boundary=")[1]
            parts = wire.decode_multipart(boundary, body)
            file_part = next(p for p in parts if p.filename is not None)
            server.log.requests.append(
                ("media", tuple(p.name for p in parts), file_part.filename)
            )
            server.log.media_bytes.append(len(file_part.body))
            if server.plan.fail_media_at == server.log.media_posts:
                self._xml(
                    500, wire.encode_status(wire.StatusPayload("error", "boom"))
                )
                return
            self._xml(200, wire.encode_created(server.log.media_posts))
            return
        self._xml(404, wire.encode_status(wire.StatusPayload("error", "nope")))

    def _xml(self, status, body):
        self.send_response_only(status)
        self.send_header("Content-Type", "application/xml; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, *args):
        pass


class RecordingStub(ThreadingHTTPServer):
    """A fake content server that records every request in order and can
    be told to fail the text POST or the Nth media POST."""

    daemon_threads = True

    def __init__(self):
        self.plan = StubPlan()
        self.log = StubLog()
        super().__init__(("127.0.0.1", 0), _StubHandler)
        self._thread = threading.Thread(
            target=lambda: self.serve_forever(poll_interval=0.02), daemon=True
        )
        self._thread.start()

    @property
    def url(self) -> str:
        return f"http://127.0.0.1:{self.server_address[1]}"

    def reset_log(self):
        self.log = StubLog()

    def close(self):
        self.shutdown()
        self.server_close()
