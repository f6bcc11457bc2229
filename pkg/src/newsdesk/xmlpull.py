"""Low-footprint streaming XML pull parser and canonical writer.

The parser hands the caller one event at a time (start tag, end tag,
text, end of document) without ever building a tree, and tracks the
exact byte offset of everything it rejects. It is deliberately small:
UTF-8 only, no namespaces, no DTDs, no processing instructions, no
CDATA; comments are skipped; self-closing tags come back as a start/end
pair. The writer produces one canonical byte form so wire fixtures stay
stable: double-quoted attributes, the five predefined entities escaped
everywhere, never a self-closing tag.
"""

from __future__ import annotations

from dataclasses import dataclass

START_TAG = "start_tag"
END_TAG = "end_tag"
TEXT = "text"
END_DOCUMENT = "end_document"

_NAME_START = frozenset(
    b"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz_"
)
_NAME_CHARS = frozenset(
    b"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789_.:-"
)
_WS = frozenset(b" \t\r\n")

_ENTITIES = {b"amp": "&", b"lt": "<", b"gt": ">", b"quot": '"', b"apos": "'"}

_ESCAPES = {
    ord("&"): "&amp;",
    ord("<"): "&lt;",
    ord(">"): "&gt;",
    ord('"'): "&quot;",
    ord("'"): "&apos;",
}


class XmlError(ValueError):
    """Base for parse failures; carries the byte offset of the fault."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at byte {offset}")
        self.offset = offset


class MalformedXml(XmlError):
    pass


class Utf8Error(XmlError):
    pass


class NestingError(ValueError):
    """Writer was handed an end tag that does not match the open element."""


@dataclass(frozen=True)
class XmlEvent:
    kind: str
    name: str | None = None
    attributes: tuple[tuple[str, str], ...] = ()
    content: str | None = None

    @classmethod
    def start(cls, name: str, attributes=()) -> "XmlEvent":
        return cls(START_TAG, name=name, attributes=tuple(attributes))

    @classmethod
    def end(cls, name: str) -> "XmlEvent":
        return cls(END_TAG, name=name)

    @classmethod
    def text(cls, content: str) -> "XmlEvent":
        return cls(TEXT, content=content)

    @classmethod
    def end_document(cls) -> "XmlEvent":
        return cls(END_DOCUMENT)


_END_DOCUMENT_EVENT = XmlEvent.end_document()


class PullParser:
    """Single pass over one UTF-8 document; not shareable mid-parse."""

    def __init__(self, data: bytes):
        self._data = bytes(data)
        self.cursor = 0
        self.open_elements: list[str] = []
        self._started = False
        self._done = False
        self._pending_end: str | None = None
        if self._data[:3] == b"\xef\xbb\xbf":
            self.cursor = 3

    def __iter__(self):
        while not self._done:
            yield self.next_event()

    def next_event(self) -> XmlEvent:
        if self._done:
            raise ValueError("document already fully parsed")
        if self._pending_end is not None:
            name = self._pending_end
            self._pending_end = None
            self.open_elements.pop()
            return XmlEvent.end(name)
        if self.open_elements:
            return self._content_event()
        return self._boundary_event()

    # -- outside the root element ------------------------------------

    def _boundary_event(self) -> XmlEvent:
        d = self._data
        i = self._skip_misc(self.cursor)
        n = len(d)
        if i >= n:
            if not self._started:
                raise MalformedXml("no root element", n)
            self.cursor = n
            self._done = True
            return _END_DOCUMENT_EVENT
        if d[i] != 0x3C:  # <
            raise MalformedXml("text outside the root element", i)
        if self._started:
            raise MalformedXml("content after the root element", i)
        if d[i : i + 2] == b"</":
            raise MalformedXml("end tag without matching start tag", i)
        return self._start_tag(i)

    def _skip_misc(self, i: int) -> int:
        """Whitespace, comments and (before the root) an XML declaration."""
        d = self._data
        n = len(d)
        while i < n:
            if d[i] in _WS:
                i += 1
            elif d[i : i + 4] == b"<!--":
                i = self._skip_comment(i)
            elif not self._started and d[i : i + 5] == b"<?xml":
                end = d.find(b"?>", i + 5)
                if end < 0:
                    raise MalformedXml("unterminated XML declaration", n)
                i = end + 2
            else:
                break
        return i

    def _skip_comment(self, i: int) -> int:
        end = self._data.find(b"-->", i + 4)
        if end < 0:
            raise MalformedXml("unterminated comment", len(self._data))
        return end + 3

    # -- inside an element --------------------------------------------

    def _content_event(self) -> XmlEvent:
        d = self._data
        n = len(d)
        text, i = self._scan_text(self.cursor)
        if i >= n:
            # Text can never end a document while an element is open, so
            # never emit a truncated run: a prefix of the input must not
            # yield events the full input would not.
            raise MalformedXml("unexpected end of input inside element", n)
        if text and text.strip(" \t\r\n"):
            self.cursor = i
            return XmlEvent.text(text)
        # Whitespace-only runs between tags are dropped.
        if d[i : i + 2] == b"</":
            return self._end_tag(i)
        if d[i : i + 2] == b"<!":
            raise MalformedXml("unsupported markup", i)
        if d[i : i + 2] == b"<?":
            raise MalformedXml("processing instructions are not supported", i)
        return self._start_tag(i)

    def _scan_text(self, i: int) -> tuple[str, int]:
        """Collect character data up to the next real tag, decoding
        entities and silently absorbing comments (so a text run split by
        a comment still comes back as one event)."""
        d = self._data
        n = len(d)
        parts: list[str] = []
        while i < n:
            b = d[i]
            if b == 0x3C:  # <
                if d[i : i + 4] == b"<!--":
                    i = self._skip_comment(i)
                    continue
                break
            if b == 0x26:  # &
                decoded, i = self._entity(i)
                parts.append(decoded)
                continue
            j = self._next_special(i)
            parts.append(self._decode(d[i:j], i))
            i = j
        return "".join(parts), i

    def _next_special(self, i: int) -> int:
        d = self._data
        lt = d.find(b"<", i)
        amp = d.find(b"&", i)
        if lt < 0:
            return amp if amp >= 0 else len(d)
        if amp < 0:
            return lt
        return min(lt, amp)

    def _entity(self, i: int) -> tuple[str, int]:
        d = self._data
        end = d.find(b";", i + 1, i + 34)
        if end < 0:
            raise MalformedXml("unterminated entity reference", i)
        body = d[i + 1 : end]
        if body in _ENTITIES:
            return _ENTITIES[body], end + 1
        if body[:1] == b"#":
            try:
                if body[1:2] in (b"x", b"X"):
                    cp = int(body[2:], 16)
                else:
                    cp = int(body[1:], 10)
            except ValueError:
                raise MalformedXml("bad character reference", i) from None
            if not (0 < cp <= 0x10FFFF) or 0xD800 <= cp <= 0xDFFF:
                raise MalformedXml("character reference out of range", i)
            return chr(cp), end + 1
        raise MalformedXml("unknown entity", i)

    def _decode(self, chunk: bytes, offset: int) -> str:
        try:
            return chunk.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise Utf8Error("invalid UTF-8", offset + exc.start) from None

    def _name(self, i: int) -> tuple[str, int]:
        d = self._data
        n = len(d)
        if i >= n or d[i] not in _NAME_START:
            raise MalformedXml("invalid name", i)
        j = i + 1
        while j < n and d[j] in _NAME_CHARS:
            j += 1
        return d[i:j].decode("ascii"), j

    def _skip_ws(self, i: int) -> int:
        d = self._data
        n = len(d)
        while i < n and d[i] in _WS:
            i += 1
        return i

    def _start_tag(self, i: int) -> XmlEvent:
        d = self._data
        n = len(d)
        name, i = self._name(i + 1)
        attrs: list[tuple[str, str]] = []
        seen: set[str] = set()
        while True:
            had_ws = i < n and d[i] in _WS
            i = self._skip_ws(i)
            if i >= n:
                raise MalformedXml("unterminated tag", n)
            if d[i] == 0x3E:  # >
                i += 1
                break
            if d[i : i + 2] == b"/>":
                self._pending_end = name
                i += 2
                break
            if not had_ws:
                raise MalformedXml("expected whitespace in tag", i)
            attr_at = i
            attr_name, i = self._name(i)
            if attr_name in seen:
                raise MalformedXml("duplicate attribute", attr_at)
            seen.add(attr_name)
            i = self._skip_ws(i)
            if i >= n or d[i] != 0x3D:  # =
                raise MalformedXml("expected '=' after attribute name", i)
            i = self._skip_ws(i + 1)
            if i >= n or d[i] not in b"\"'":
                raise MalformedXml("attribute value must be quoted", i)
            value, i = self._attr_value(i)
            attrs.append((attr_name, value))
        self.cursor = i
        self._started = True
        self.open_elements.append(name)
        return XmlEvent.start(name, attrs)

    def _attr_value(self, i: int) -> tuple[str, int]:
        d = self._data
        quote = d[i]
        i += 1
        parts: list[str] = []
        while True:
            j = d.find(bytes([quote]), i)
            if j < 0:
                raise MalformedXml("unterminated attribute value", len(d))
            amp = d.find(b"&", i, j)
            if amp < 0:
                parts.append(self._decode(d[i:j], i))
                return "".join(parts), j + 1
            parts.append(self._decode(d[i:amp], i))
            decoded, i = self._entity(amp)
            parts.append(decoded)

    def _end_tag(self, i: int) -> XmlEvent:
        d = self._data
        n = len(d)
        tag_at = i
        name, i = self._name(i + 2)
        i = self._skip_ws(i)
        if i >= n or d[i] != 0x3E:
            raise MalformedXml("unterminated end tag", i if i < n else n)
        if not self.open_elements or self.open_elements[-1] != name:
            raise MalformedXml(f"mismatched end tag </{name}>", tag_at)
        self.open_elements.pop()
        self.cursor = i + 1
        return XmlEvent.end(name)


def parse_document(data: bytes) -> list[XmlEvent]:
    """All events of one document, end_document included."""
    return list(PullParser(data))


def _escape(value: str) -> str:
    return value.translate(_ESCAPES)


class XmlWriter:
    """Appends canonical event bytes to an internal buffer and refuses
    badly nested end tags."""

    def __init__(self):
        self._buf = bytearray()
        self._open: list[str] = []

    def write_event(self, event: XmlEvent) -> None:
        if event.kind == START_TAG:
            self.start(event.name, event.attributes)
        elif event.kind == END_TAG:
            self.end(event.name)
        elif event.kind == TEXT:
            self.text(event.content or "")
        elif event.kind == END_DOCUMENT:
            if self._open:
                raise NestingError(f"document ended with <{self._open[-1]}> open")
        else:
            raise ValueError(f"unknown event kind {event.kind!r}")

    def start(self, name: str, attributes=()) -> None:
        pieces = [f"<{name}"]
        for attr_name, value in attributes:
            pieces.append(f' {attr_name}="{_escape(value)}"')
        pieces.append(">")
        self._buf += "".join(pieces).encode("utf-8")
        self._open.append(name)

    def end(self, name: str) -> None:
        if not self._open or self._open[-1] != name:
            open_name = self._open[-1] if self._open else None
            raise NestingError(f"</{name}> does not close <{open_name}>")
        self._open.pop()
        self._buf += f"</{name}>".encode("utf-8")

    def text(self, content: str) -> None:
        self._buf += _escape(content).encode("utf-8")

    def element(self, name: str, text: str, attributes=()) -> None:
        self.start(name, attributes)
        if text:
            self.text(text)
        self.end(name)

    def getvalue(self) -> bytes:
        return bytes(self._buf)


def write_events(events) -> bytes:
    writer = XmlWriter()
    for event in events:
        writer.write_event(event)
    return writer.getvalue()
