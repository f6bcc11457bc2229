"""Byte-exact codecs for every payload on the wire.

Four families: the news-list XML (search segments and viewer lists),
status/error XML, RFC 2046 multipart bodies for media upload, and the
RSS 2.0 feed. Encoders go through the canonical XML writer so output is
stable to the byte; decoders tolerate attribute and element order but
reject anything structurally off with a named error. The full element
reference lives in docs/protocol.md.
"""

from __future__ import annotations

import re
import secrets
import string
from dataclasses import dataclass
from datetime import datetime, timezone
from email.utils import format_datetime

from .model import PAGE_SIZE, NewsSummary, ResultPage, Status
from .xmlpull import PullParser, XmlWriter, END_DOCUMENT, START_TAG, END_TAG, TEXT


class ProtocolError(ValueError):
    """A structurally valid XML document that is not a valid payload."""


class FramingError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at byte {offset}")
        self.offset = offset


class BoundaryCollision(RuntimeError):
    pass


@dataclass(frozen=True)
class StatusPayload:
    code: str  # "ok" | "error"
    message: str
    detail: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        if self.code not in ("ok", "error"):
            raise ValueError(f"unknown status code {self.code!r}")
        if self.code == "ok" and self.detail:
            raise ValueError("ok status cannot carry field detail")


@dataclass(frozen=True)
class Part:
    name: str
    filename: str | None
    content_type: str | None
    body: bytes


@dataclass(frozen=True)
class MediaRef:
    """One attachment as listed in a single-story response."""

    media_id: int
    kind: str
    format: str
    byte_length: int


# -- timestamps ------------------------------------------------------

def format_rfc3339(dt: datetime) -> str:
    dt = dt.astimezone(timezone.utc)
    base = dt.strftime("%Y-%m-%dT%H:%M:%S")
    if dt.microsecond:
        return f"{base}.{dt.microsecond:06d}Z"
    return base + "Z"


_RFC3339_RE = re.compile(
    r"^(\d{4})-(\d{2})-(\d{2})T(\d{2}):(\d{2}):(\d{2})(?:\.(\d{1,6}))?"
    r"(?:Z|\+00:00)$"
)


def parse_rfc3339(text: str) -> datetime:
    m = _RFC3339_RE.match(text)
    if not m:
        raise ProtocolError(f"bad timestamp {text!r}")
    year, month, day, hour, minute, second = (int(g) for g in m.groups()[:6])
    frac = m.group(7)
    micro = int(frac.ljust(6, "0")) if frac else 0
    try:
        return datetime(
            year, month, day, hour, minute, second, micro, tzinfo=timezone.utc
        )
    except ValueError as exc:
        raise ProtocolError(f"bad timestamp {text!r}: {exc}") from None


def format_rfc822(dt: datetime) -> str:
    return format_datetime(dt.astimezone(timezone.utc), usegmt=True)


# -- tiny element view over pull events ------------------------------

class _Elem:
    __slots__ = ("name", "attrs", "children", "text")

    def __init__(self, name: str, attrs: dict[str, str]):
        self.name = name
        self.attrs = attrs
        self.children: list[_Elem] = []
        self.text = ""

    def child_map(self) -> dict[str, "_Elem"]:
        seen: dict[str, _Elem] = {}
        for child in self.children:
            if child.name in seen:
                raise ProtocolError(f"duplicate element <{child.name}>")
            seen[child.name] = child
        return seen


def _build_tree(data: bytes) -> _Elem:
    root: _Elem | None = None
    stack: list[_Elem] = []
    for event in PullParser(data):
        if event.kind == START_TAG:
            elem = _Elem(event.name, dict(event.attributes))
            if stack:
                stack[-1].children.append(elem)
            elif root is None:
                root = elem
            stack.append(elem)
        elif event.kind == END_TAG:
            stack.pop()
        elif event.kind == TEXT:
            stack[-1].text += event.content
        elif event.kind == END_DOCUMENT:
            break
    assert root is not None
    return root


def _expect(elem: _Elem, name: str) -> None:
    if elem.name != name:
        raise ProtocolError(f"expected <{name}>, found <{elem.name}>")


def _int_attr(elem: _Elem, name: str) -> int:
    try:
        return int(elem.attrs[name])
    except KeyError:
        raise ProtocolError(f"<{elem.name}> is missing {name!r}") from None
    except ValueError:
        raise ProtocolError(
            f"<{elem.name}> has non-numeric {name!r}"
        ) from None


def _bool_attr(elem: _Elem, name: str) -> bool:
    value = elem.attrs.get(name)
    if value == "true":
        return True
    if value == "false":
        return False
    raise ProtocolError(f"<{elem.name}> has bad boolean {name!r}: {value!r}")


# -- news lists ------------------------------------------------------

_NEWS_FIELDS = ("title", "author", "place", "category", "body", "created", "status")


def _write_news(w: XmlWriter, item: NewsSummary) -> None:
    w.start("news", [("id", str(item.message_id))])
    w.element("title", item.title)
    w.element("author", item.author)
    w.element("place", item.place)
    w.element("category", item.category)
    w.element("body", item.body)
    w.element("created", format_rfc3339(item.created_at))
    w.element("status", item.status.value)
    media_attrs = [("count", str(item.media_count))]
    if item.thumb_media_id is not None:
        media_attrs.append(("thumb", str(item.thumb_media_id)))
    w.element("media", "", media_attrs)
    w.end("news")


def _read_news(elem: _Elem) -> NewsSummary:
    _expect(elem, "news")
    message_id = _int_attr(elem, "id")
    children = elem.child_map()
    for name in children:
        if name not in _NEWS_FIELDS + ("media",):
            raise ProtocolError(f"unexpected element <{name}> in <news>")
    values: dict[str, str] = {}
    for name in _NEWS_FIELDS:
        if name not in children:
            raise ProtocolError(f"<news> is missing <{name}>")
        values[name] = children[name].text
    if "media" not in children:
        raise ProtocolError("<news> is missing <media>")
    media = children["media"]
    count = _int_attr(media, "count")
    thumb = int(media.attrs["thumb"]) if "thumb" in media.attrs else None
    try:
        status = Status(values["status"])
    except ValueError:
        raise ProtocolError(f"unknown status {values['status']!r}") from None
    return NewsSummary(
        message_id=message_id,
        title=values["title"],
        body=values["body"],
        place=values["place"],
        category=values["category"],
        author=values["author"],
        created_at=parse_rfc3339(values["created"]),
        status=status,
        media_count=count,
        thumb_media_id=thumb,
    )


def _encode_newslist(items, page: int, total: int, more: bool) -> bytes:
    w = XmlWriter()
    w.start(
        "newslist",
        [
            ("page", str(page)),
            ("total", str(total)),
            ("more", "true" if more else "false"),
        ],
    )
    for item in items:
        _write_news(w, item)
    w.end("newslist")
    return w.getvalue()


def encode_result_page(page: ResultPage) -> bytes:
    """One search segment; at most five stories by construction."""
    if len(page.items) > PAGE_SIZE:
        raise ValueError("a result page carries at most five items")
    return _encode_newslist(
        page.items, page.page, page.total_matches, page.has_more
    )


def encode_viewer_list(items) -> bytes:
    """The unpaged public listing; reuses the newslist shape."""
    items = tuple(items)
    return _encode_newslist(items, 1, len(items), False)


def decode_news_list(data: bytes) -> tuple[NewsSummary, ...]:
    """Stories from any newslist document, without page bookkeeping."""
    root = _build_tree(data)
    _expect(root, "newslist")
    return tuple(_read_news(child) for child in root.children)


def decode_result_page(data: bytes) -> ResultPage:
    root = _build_tree(data)
    _expect(root, "newslist")
    page_no = _int_attr(root, "page")
    total = _int_attr(root, "total")
    more = _bool_attr(root, "more")
    if page_no < 1 or total < 0:
        raise ProtocolError("page must be >= 1 and total >= 0")
    items = tuple(_read_news(child) for child in root.children)
    if len(items) > PAGE_SIZE:
        raise ProtocolError("more than five items in one segment")
    result = ResultPage(page=page_no, total_matches=total, items=items)
    if result.has_more != more:
        raise ProtocolError("inconsistent 'more' flag")
    return result


# -- single story with its attachment list ---------------------------

def encode_news_detail(item: NewsSummary, media: tuple[MediaRef, ...] = ()) -> bytes:
    w = XmlWriter()
    w.start("news", [("id", str(item.message_id))])
    w.element("title", item.title)
    w.element("author", item.author)
    w.element("place", item.place)
    w.element("category", item.category)
    w.element("body", item.body)
    w.element("created", format_rfc3339(item.created_at))
    w.element("status", item.status.value)
    media_attrs = [("count", str(item.media_count))]
    if item.thumb_media_id is not None:
        media_attrs.append(("thumb", str(item.thumb_media_id)))
    w.start("media", media_attrs)
    for ref in media:
        w.element(
            "item",
            "",
            [
                ("id", str(ref.media_id)),
                ("kind", ref.kind),
                ("format", ref.format),
                ("length", str(ref.byte_length)),
            ],
        )
    w.end("media")
    w.end("news")
    return w.getvalue()


def decode_news_detail(data: bytes) -> tuple[NewsSummary, tuple[MediaRef, ...]]:
    root = _build_tree(data)
    summary = _read_news(root)
    media_elem = root.child_map()["media"]
    refs = []
    for child in media_elem.children:
        _expect(child, "item")
        refs.append(
            MediaRef(
                media_id=_int_attr(child, "id"),
                kind=child.attrs.get("kind", ""),
                format=child.attrs.get("format", ""),
                byte_length=_int_attr(child, "length"),
            )
        )
    return summary, tuple(refs)


# -- status ----------------------------------------------------------

def encode_status(status: StatusPayload) -> bytes:
    w = XmlWriter()
    w.start("status", [("code", status.code)])
    w.element("message", status.message)
    for name, reason in status.detail:
        w.element("field", "", [("name", name), ("reason", reason)])
    w.end("status")
    return w.getvalue()


def decode_status(data: bytes) -> StatusPayload:
    root = _build_tree(data)
    _expect(root, "status")
    code = root.attrs.get("code")
    if code not in ("ok", "error"):
        raise ProtocolError(f"unknown status code {code!r}")
    message = None
    detail: list[tuple[str, str]] = []
    for child in root.children:
        if child.name == "message":
            if message is not None:
                raise ProtocolError("duplicate element <message>")
            message = child.text
        elif child.name == "field":
            if "name" not in child.attrs or "reason" not in child.attrs:
                raise ProtocolError("<field> needs name and reason")
            detail.append((child.attrs["name"], child.attrs["reason"]))
        else:
            raise ProtocolError(f"unexpected element <{child.name}> in <status>")
    if message is None:
        raise ProtocolError("<status> is missing <message>")
    try:
        return StatusPayload(code, message, tuple(detail))
    except ValueError as exc:
        raise ProtocolError(str(exc)) from None


# -- small single-value documents ------------------------------------

def encode_session(token: str) -> bytes:
    w = XmlWriter()
    w.element("session", "", [("token", token)])
    return w.getvalue()


def decode_session(data: bytes) -> str:
    root = _build_tree(data)
    _expect(root, "session")
    if "token" not in root.attrs:
        raise ProtocolError("<session> is missing token")
    return root.attrs["token"]


def encode_created(new_id: int) -> bytes:
    w = XmlWriter()
    w.element("created", "", [("id", str(new_id))])
    return w.getvalue()


def decode_created(data: bytes) -> int:
    root = _build_tree(data)
    _expect(root, "created")
    return _int_attr(root, "id")


def encode_categories(names) -> bytes:
    w = XmlWriter()
    w.start("categories")
    for name in names:
        w.element("category", name)
    w.end("categories")
    return w.getvalue()


def decode_categories(data: bytes) -> tuple[str, ...]:
    root = _build_tree(data)
    _expect(root, "categories")
    names = []
    for child in root.children:
        _expect(child, "category")
        names.append(child.text)
    return tuple(names)


# -- multipart/form-data (RFC 2046 framing) --------------------------

_BOUNDARY_ALPHABET = string.ascii_letters + string.digits
_BOUNDARY_LEN = 30
_MAX_BOUNDARY_TRIES = 16


def _collides(boundary: str, parts) -> bool:
    token = boundary.encode("ascii")
    for part in parts:
        if token in part.body or token in part.name.encode("utf-8"):
            return True
        if part.filename and token in part.filename.encode("utf-8"):
            return True
        if part.content_type and token in part.content_type.encode("ascii"):
            return True
    return False


def encode_multipart(
    parts, boundary: str | None = None
) -> tuple[str, bytes]:
    """Frame parts into one body; returns (boundary, bytes).

    A caller-supplied boundary that occurs in the payload is rejected;
    generated boundaries are redrawn a bounded number of times first.
    """
    parts = tuple(parts)
    if not parts:
        raise ValueError("multipart body needs at least one part")
    names = [p.name for p in parts]
    if len(set(names)) != len(names):
        raise ValueError("part names must be unique")
    if boundary is not None:
        if not (1 <= len(boundary) <= 70) or not boundary.isascii():
            raise ValueError("boundary must be 1-70 ASCII characters")
        if _collides(boundary, parts):
            raise BoundaryCollision(f"boundary {boundary!r} occurs in payload")
    else:
        for _ in range(_MAX_BOUNDARY_TRIES):
            candidate = "".join(
                secrets.choice(_BOUNDARY_ALPHABET) for _ in range(_BOUNDARY_LEN)
            )
            if not _collides(candidate, parts):
                boundary = candidate
                break
        else:
            raise BoundaryCollision("could not find a collision-free boundary")

    out = bytearray()
    delim = b"--" + boundary.encode("ascii")
    for index, part in enumerate(parts):
        if index:
            out += b"\r\n"
        out += delim + b"\r\n"
        disposition = f'Content-Disposition: form-data; name="{part.name}"'
        if part.filename is not None:
            disposition += f'; filename="{part.filename}"'
        out += disposition.encode("utf-8") + b"\r\n"
        if part.content_type is not None:
            out += f"Content-Type: {part.content_type}".encode("ascii") + b"\r\n"
        out += b"\r\n"
        out += part.body
    out += b"\r\n" + delim + b"--\r\n"
    return boundary, bytes(out)


_DISPOSITION_NAME_RE = re.compile(r';\s*name="([^"]*)"')
_DISPOSITION_FILENAME_RE = re.compile(r';\s*filename="([^"]*)"')


def decode_multipart(boundary: str, data: bytes) -> tuple[Part, ...]:
    """Exact inverse of encode_multipart, binary-safe including CRLFs
    embedded in part bodies."""
    delim = b"--" + boundary.encode("ascii")
    if not data.startswith(delim):
        raise FramingError("body does not open with the boundary", 0)
    i = len(delim)
    if data[i : i + 2] == b"--":
        # Legal but partless body: terminator right away.
        _check_tail(data, i + 2)
        return ()
    if data[i : i + 2] != b"\r\n":
        raise FramingError("boundary line not terminated by CRLF", i)
    i += 2
    parts: list[Part] = []
    while True:
        header_end = data.find(b"\r\n\r\n", i)
        if header_end < 0:
            raise FramingError("part headers never end", len(data))
        name, filename, content_type = _parse_part_headers(data[i:header_end], i)
        body_start = header_end + 4
        next_delim = data.find(b"\r\n" + delim, body_start)
        if next_delim < 0:
            raise FramingError("missing closing boundary", len(data))
        body = data[body_start:next_delim]
        parts.append(Part(name, filename, content_type, body))
        i = next_delim + 2 + len(delim)
        if data[i : i + 2] == b"--":
            _check_tail(data, i + 2)
            return tuple(parts)
        if data[i : i + 2] != b"\r\n":
            raise FramingError("boundary line not terminated by CRLF", i)
        i += 2


def _check_tail(data: bytes, i: int) -> None:
    tail = data[i:]
    if tail not in (b"", b"\r\n"):
        raise FramingError("trailing bytes after closing boundary", i)


def _parse_part_headers(
    raw: bytes, offset: int
) -> tuple[str, str | None, str | None]:
    name = None
    filename = None
    content_type = None
    for line in raw.split(b"\r\n"):
        try:
            text = line.decode("utf-8")
        except UnicodeDecodeError:
            raise FramingError("undecodable part header", offset) from None
        key, sep, value = text.partition(":")
        if not sep:
            raise FramingError(f"malformed header line {text!r}", offset)
        key = key.strip().lower()
        value = value.strip()
        if key == "content-disposition":
            if not value.lower().startswith("form-data"):
                raise FramingError("part is not form-data", offset)
            m = _DISPOSITION_NAME_RE.search(value)
            if not m:
                raise FramingError("content-disposition has no name", offset)
            name = m.group(1)
            fm = _DISPOSITION_FILENAME_RE.search(value)
            if fm:
                filename = fm.group(1)
        elif key == "content-type":
            content_type = value
        # Unknown headers are skipped.
    if name is None:
        raise FramingError("part without content-disposition", offset)
    return name, filename, content_type


# -- RSS 2.0 ----------------------------------------------------------

def encode_rss(
    site_title: str,
    items,
    *,
    link: str = "http://localhost/",
    description: str | None = None,
) -> bytes:
    """RSS 2.0 channel over already viewer-ordered stories."""
    w = XmlWriter()
    w.start("rss", [("version", "2.0")])
    w.start("channel")
    w.element("title", site_title)
    w.element("link", link)
    w.element("description", description or site_title)
    for item in items:
        w.start("item")
        w.element("title", item.title)
        w.element("description", item.body)
        w.element("category", item.category)
        w.element("author", item.author)
        w.element("pubDate", format_rfc822(item.created_at))
        w.element("guid", str(item.message_id), [("isPermaLink", "false")])
        w.end("item")
    w.end("channel")
    w.end("rss")
    return w.getvalue()
