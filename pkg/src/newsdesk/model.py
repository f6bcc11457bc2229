"""Domain types and the pure rules every other layer reuses.

Everything here is an immutable value or a pure function: registration
validation, the search predicate, the fixed five-per-page pagination and
the newest-first viewer ordering.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum

# One wire segment holds at most five stories. Fixed, not configurable:
# the protocol fixtures depend on it.
PAGE_SIZE = 5

_USERNAME_RE = re.compile(r"^[A-Za-z0-9_]{3,64}$")
MIN_PASSWORD_LEN = 6
MAX_TITLE_LEN = 256

# Declared format required per media kind; video stays unconstrained.
KIND_FORMATS = {"image": "jpeg", "audio": "mp3"}


class Status(str, Enum):
    ACTIVE = "active"
    INACTIVE = "inactive"


class MediaKind(str, Enum):
    IMAGE = "image"
    AUDIO = "audio"
    VIDEO = "video"


class SearchField(str, Enum):
    TITLE = "title"
    BODY = "body"
    AUTHOR = "author"


@dataclass(frozen=True)
class User:
    user_id: int
    first_name: str
    last_name: str
    username: str
    password_digest: str


@dataclass(frozen=True)
class MediaAttachment:
    media_id: int
    message_id: int
    kind: MediaKind
    format: str
    byte_length: int
    storage_path: str


@dataclass(frozen=True)
class Message:
    message_id: int
    title: str
    body: str
    place: str
    category: str
    author: str
    created_at: datetime
    updated_at: datetime
    status: Status
    media: tuple[MediaAttachment, ...] = ()


@dataclass(frozen=True)
class SearchQuery:
    keyword: str
    field: SearchField
    page: int = 1


@dataclass(frozen=True)
class NewsSummary:
    """One story as it travels in list/search responses: the full text
    but only a count (and optional thumbnail id) for attachments."""

    message_id: int
    title: str
    body: str
    place: str
    category: str
    author: str
    created_at: datetime
    status: Status
    media_count: int = 0
    thumb_media_id: int | None = None


@dataclass(frozen=True)
class ResultPage:
    page: int
    total_matches: int
    items: tuple[NewsSummary, ...] = ()

    @property
    def has_more(self) -> bool:
        return self.page * PAGE_SIZE < self.total_matches


@dataclass(frozen=True)
class PageSlice:
    """A paginated window over an ordered id list, before the ids are
    hydrated into summaries."""

    page: int
    total_matches: int
    ids: tuple[int, ...] = ()

    @property
    def has_more(self) -> bool:
        return self.page * PAGE_SIZE < self.total_matches


@dataclass(frozen=True)
class ValidationResult:
    errors: tuple[tuple[str, str], ...] = ()

    @property
    def ok(self) -> bool:
        return not self.errors

    @property
    def fields(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.errors)


def utcnow() -> datetime:
    return datetime.now(timezone.utc)


def validate_registration(
    first: str, last: str, username: str, password: str
) -> ValidationResult:
    """Check a registration form; every failing field is named once."""
    errors: list[tuple[str, str]] = []
    if not first:
        errors.append(("first_name", "must not be empty"))
    if not last:
        errors.append(("last_name", "must not be empty"))
    if not _USERNAME_RE.match(username):
        errors.append(
            ("username", "must be 3-64 characters: letters, digits or underscore")
        )
    if len(password) < MIN_PASSWORD_LEN:
        errors.append(
            ("password", f"must be at least {MIN_PASSWORD_LEN} characters")
        )
    return ValidationResult(tuple(errors))


def validate_message_fields(
    title: str | None = None,
    body: str | None = None,
    category: str | None = None,
    *,
    require_all: bool = False,
) -> ValidationResult:
    """Field rules for creating or editing a story.

    With require_all, missing title/body/category also fail (creation);
    otherwise only supplied values are checked (partial edit). Blank-only
    text is rejected: pure whitespace would not survive the wire
    encoding. Place is free text with no rule.
    """
    errors: list[tuple[str, str]] = []
    if title is None:
        if require_all:
            errors.append(("title", "must not be empty"))
    elif not title.strip():
        errors.append(("title", "must not be empty"))
    elif len(title) > MAX_TITLE_LEN:
        errors.append(("title", f"must be at most {MAX_TITLE_LEN} characters"))
    if body is None:
        if require_all:
            errors.append(("body", "must not be empty"))
    elif not body.strip():
        errors.append(("body", "must not be empty"))
    if category is None:
        if require_all:
            errors.append(("category", "must not be empty"))
    elif not category.strip():
        errors.append(("category", "must not be empty"))
    return ValidationResult(tuple(errors))


def allowed_format(kind: MediaKind, format: str) -> bool:
    required = KIND_FORMATS.get(kind.value)
    return required is None or format == required


def message_matches(msg: Message, keyword: str, field: SearchField) -> bool:
    """Case-insensitive substring match against one searchable field."""
    haystack = {
        SearchField.TITLE: msg.title,
        SearchField.BODY: msg.body,
        SearchField.AUTHOR: msg.author,
    }[field]
    return keyword.lower() in haystack.lower()


def paginate(matching_ids: list[int] | tuple[int, ...], page: int) -> PageSlice:
    """Slice an ordered match list into one five-item segment.

    Pages past the end are empty slices, not errors.
    """
    if page < 1:
        raise ValueError("page numbers start at 1")
    total = len(matching_ids)
    start = (page - 1) * PAGE_SIZE
    return PageSlice(
        page=page,
        total_matches=total,
        ids=tuple(matching_ids[start : start + PAGE_SIZE]),
    )


def message_order_key(msg: Message) -> tuple:
    # Newest first; equal timestamps break toward the higher id.
    return (msg.created_at, msg.message_id)


def viewer_order(messages) -> list[Message]:
    """Active stories, newest first, ready for the public viewer."""
    active = [m for m in messages if m.status is Status.ACTIVE]
    return sorted(active, key=message_order_key, reverse=True)


def summarize(msg: Message) -> NewsSummary:
    thumb = next(
        (a.media_id for a in msg.media if a.kind is MediaKind.IMAGE), None
    )
    return NewsSummary(
        message_id=msg.message_id,
        title=msg.title,
        body=msg.body,
        place=msg.place,
        category=msg.category,
        author=msg.author,
        created_at=msg.created_at,
        status=msg.status,
        media_count=len(msg.media),
        thumb_media_id=thumb,
    )
