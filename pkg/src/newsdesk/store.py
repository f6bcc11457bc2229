"""Embedded persistence: users, sessions, stories and categories in one
JSON-lines record file, media blobs in a per-message directory tree.

Every mutation rewrites the record file atomically (temp file, fsync,
rename), so reopening after a crash always lands on the last committed
state. Blobs are written before their metadata commits; stray blob
files left by a crash in between are swept on open. One writer at a
time, any number of readers: a single lock serialises everything at
desk scale.
"""

from __future__ import annotations

import hashlib
import json
import os
import secrets
import shutil
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from . import model
from .model import (
    MediaAttachment,
    MediaKind,
    Message,
    SearchField,
    Status,
    User,
    message_matches,
    message_order_key,
    utcnow,
    validate_registration,
    validate_message_fields,
)

RECORDS_FILE = "records.db"
MEDIA_DIR = "media"

DEFAULT_HASH_ITERATIONS = 50_000


class StoreError(Exception):
    pass


class DuplicateUsername(StoreError):
    pass


class BadCredentials(StoreError):
    pass


class NotFound(StoreError):
    pass


class UnknownCategory(StoreError):
    pass


class FormatMismatch(StoreError):
    pass


class BlobTooLarge(StoreError):
    pass


class ValidationError(StoreError):
    def __init__(self, errors):
        self.errors = tuple(errors)
        fields = ", ".join(name for name, _ in self.errors)
        super().__init__(f"invalid fields: {fields}")


@dataclass(frozen=True)
class Session:
    token: str
    username: str
    issued_at: datetime


def hash_password(password: str, iterations: int) -> str:
    salt = secrets.token_bytes(16)
    digest = hashlib.pbkdf2_hmac(
        "sha256", password.encode("utf-8"), salt, iterations
    )
    return f"pbkdf2-sha256${iterations}${salt.hex()}${digest.hex()}"


def verify_password(password: str, stored: str) -> bool:
    try:
        scheme, iterations, salt_hex, digest_hex = stored.split("$")
        if scheme != "pbkdf2-sha256":
            return False
        digest = hashlib.pbkdf2_hmac(
            "sha256",
            password.encode("utf-8"),
            bytes.fromhex(salt_hex),
            int(iterations),
        )
        return secrets.compare_digest(digest.hex(), digest_hex)
    except (ValueError, TypeError):
        return False


def _ts(dt: datetime) -> str:
    return dt.astimezone(timezone.utc).isoformat()


def _parse_ts(text: str) -> datetime:
    return datetime.fromisoformat(text)


class Store:
    """All state behind one abstraction; swap the backing later without
    touching callers."""

    def __init__(
        self,
        data_dir: str | Path,
        *,
        fsync: bool = True,
        hash_iterations: int = DEFAULT_HASH_ITERATIONS,
        max_blob_bytes: int | None = None,
    ):
        self.data_dir = Path(data_dir)
        self.records_path = self.data_dir / RECORDS_FILE
        self.media_dir = self.data_dir / MEDIA_DIR
        self._fsync = fsync
        self._hash_iterations = hash_iterations
        self._max_blob_bytes = max_blob_bytes
        self._lock = threading.RLock()

        self._users: dict[str, User] = {}  # keyed by lowercase username? no: exact
        self._sessions: dict[str, Session] = {}
        self._messages: dict[int, Message] = {}
        self._media: dict[int, list[MediaAttachment]] = {}
        self._categories: list[str] = []  # case-preserving, insertion order
        self._next_user_id = 1
        self._next_message_id = 1

        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.media_dir.mkdir(exist_ok=True)
        self._load()
        self._sweep_orphan_blobs()
        if not self.records_path.exists():
            self._commit()

    # -- persistence ---------------------------------------------------

    def _load(self) -> None:
        if not self.records_path.exists():
            return
        for lineno, line in enumerate(
            self.records_path.read_text(encoding="utf-8").splitlines(), start=1
        ):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise StoreError(
                    f"{self.records_path}:{lineno}: corrupt record: {exc}"
                ) from None
            self._apply_record(rec)
        for msg_id, attachments in self._media.items():
            attachments.sort(key=lambda a: a.media_id)
            msg = self._messages[msg_id]
            self._messages[msg_id] = self._with_media(msg)
        if self._users:
            self._next_user_id = max(u.user_id for u in self._users.values()) + 1
        if self._messages:
            self._next_message_id = max(self._messages) + 1

    def _apply_record(self, rec: dict) -> None:
        kind = rec.get("kind")
        if kind == "user":
            user = User(
                rec["user_id"],
                rec["first_name"],
                rec["last_name"],
                rec["username"],
                rec["password_digest"],
            )
            self._users[user.username] = user
        elif kind == "session":
            session = Session(
                rec["token"], rec["username"], _parse_ts(rec["issued_at"])
            )
            self._sessions[session.token] = session
        elif kind == "message":
            msg = Message(
                message_id=rec["message_id"],
                title=rec["title"],
                body=rec["body"],
                place=rec["place"],
                category=rec["category"],
                author=rec["author"],
                created_at=_parse_ts(rec["created_at"]),
                updated_at=_parse_ts(rec["updated_at"]),
                status=Status(rec["status"]),
            )
            self._messages[msg.message_id] = msg
            self._media.setdefault(msg.message_id, [])
        elif kind == "media":
            att = MediaAttachment(
                media_id=rec["media_id"],
                message_id=rec["message_id"],
                kind=MediaKind(rec["media_kind"]),
                format=rec["format"],
                byte_length=rec["byte_length"],
                storage_path=rec["storage_path"],
            )
            self._media.setdefault(att.message_id, []).append(att)
        elif kind == "category":
            self._categories.append(rec["name"])
        else:
            raise StoreError(f"unknown record kind {kind!r}")

    def _records(self):
        for user in sorted(self._users.values(), key=lambda u: u.user_id):
            yield {
                "kind": "user",
                "user_id": user.user_id,
                "first_name": user.first_name,
                "last_name": user.last_name,
                "username": user.username,
                "password_digest": user.password_digest,
            }
        for name in self._categories:
            yield {"kind": "category", "name": name}
        for msg in sorted(self._messages.values(), key=lambda m: m.message_id):
            yield {
                "kind": "message",
                "message_id": msg.message_id,
                "title": msg.title,
                "body": msg.body,
                "place": msg.place,
                "category": msg.category,
                "author": msg.author,
                "created_at": _ts(msg.created_at),
                "updated_at": _ts(msg.updated_at),
                "status": msg.status.value,
            }
            for att in self._media.get(msg.message_id, ()):
                yield {
                    "kind": "media",
                    "media_id": att.media_id,
                    "message_id": att.message_id,
                    "media_kind": att.kind.value,
                    "format": att.format,
                    "byte_length": att.byte_length,
                    "storage_path": att.storage_path,
                }
        for session in self._sessions.values():
            yield {
                "kind": "session",
                "token": session.token,
                "username": session.username,
                "issued_at": _ts(session.issued_at),
            }

    def _commit(self) -> None:
        tmp = self.records_path.with_suffix(".tmp")
        with open(tmp, "w", encoding="utf-8") as fh:
            for rec in self._records():
                fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
            fh.flush()
            if self._fsync:
                os.fsync(fh.fileno())
        os.replace(tmp, self.records_path)
        if self._fsync:
            self._fsync_dir(self.data_dir)

    @staticmethod
    def _fsync_dir(path: Path) -> None:
        fd = os.open(path, os.O_RDONLY)
        try:
            os.fsync(fd)
        finally:
            os.close(fd)

    def _write_blob(self, path: Path, data: bytes) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_name(path.name + ".tmp")
        with open(tmp, "wb") as fh:
            fh.write(data)
            fh.flush()
            if self._fsync:
                os.fsync(fh.fileno())
        os.replace(tmp, path)
        if self._fsync:
            self._fsync_dir(path.parent)

    def _sweep_orphan_blobs(self) -> None:
        """Remove blob files no committed metadata row points at; verify
        every committed row's blob is present with the right length."""
        known: dict[Path, int] = {}
        for attachments in self._media.values():
            for att in attachments:
                known[self.data_dir / att.storage_path] = att.byte_length
        if self.media_dir.exists():
            for child in sorted(self.media_dir.rglob("*"), reverse=True):
                if child.is_file():
                    if child not in known:
                        child.unlink()
                elif child.is_dir() and not any(child.iterdir()):
                    child.rmdir()
        for path, length in known.items():
            if not path.is_file() or path.stat().st_size != length:
                raise StoreError(f"missing or truncated blob {path}")

    def _with_media(self, msg: Message) -> Message:
        media = tuple(self._media.get(msg.message_id, ()))
        return Message(
            message_id=msg.message_id,
            title=msg.title,
            body=msg.body,
            place=msg.place,
            category=msg.category,
            author=msg.author,
            created_at=msg.created_at,
            updated_at=msg.updated_at,
            status=msg.status,
            media=media,
        )

    # -- users and sessions ---------------------------------------------

    def create_user(
        self, first: str, last: str, username: str, password: str
    ) -> int:
        result = validate_registration(first, last, username, password)
        if not result.ok:
            raise ValidationError(result.errors)
        with self._lock:
            if username in self._users:
                raise DuplicateUsername(f"username {username!r} is taken")
            user = User(
                user_id=self._next_user_id,
                first_name=first,
                last_name=last,
                username=username,
                password_digest=hash_password(password, self._hash_iterations),
            )
            self._users[username] = user
            self._next_user_id += 1
            self._commit()
            return user.user_id

    def get_user(self, username: str) -> User:
        with self._lock:
            try:
                return self._users[username]
            except KeyError:
                raise NotFound(f"no user {username!r}") from None

    def authenticate(self, username: str, password: str) -> Session:
        # Identical failure for unknown user and wrong password.
        with self._lock:
            user = self._users.get(username)
            if user is None or not verify_password(password, user.password_digest):
                raise BadCredentials("bad username or password")
            session = Session(
                token=secrets.token_hex(32),
                username=username,
                issued_at=utcnow(),
            )
            self._sessions[session.token] = session
            self._commit()
            return session

    def session_for(self, token: str) -> Session | None:
        with self._lock:
            return self._sessions.get(token)

    # -- categories ------------------------------------------------------

    def _resolve_category(self, name: str) -> str:
        """Existing category matched case-insensitively, else a new one
        preserving the given spelling."""
        for existing in self._categories:
            if existing.lower() == name.lower():
                return existing
        self._categories.append(name)
        return name

    def list_categories(self) -> list[str]:
        with self._lock:
            return sorted(self._categories, key=str.lower)

    def list_by_category(self, name: str) -> list[Message]:
        with self._lock:
            match = next(
                (c for c in self._categories if c.lower() == name.lower()), None
            )
            if match is None:
                raise UnknownCategory(f"no category {name!r}")
            return [
                m
                for m in model.viewer_order(self._messages.values())
                if m.category == match
            ]

    # -- messages ----------------------------------------------------------

    def insert_message(
        self, title: str, body: str, place: str, category: str, author: str
    ) -> int:
        result = validate_message_fields(title, body, category, require_all=True)
        if not result.ok:
            raise ValidationError(result.errors)
        with self._lock:
            now = utcnow()
            msg = Message(
                message_id=self._next_message_id,
                title=title,
                body=body,
                place=place,
                category=self._resolve_category(category),
                author=author,
                created_at=now,
                updated_at=now,
                status=Status.ACTIVE,
            )
            self._messages[msg.message_id] = msg
            self._media[msg.message_id] = []
            self._next_message_id += 1
            self._commit()
            return msg.message_id

    def get_message(self, message_id: int) -> Message:
        with self._lock:
            try:
                return self._messages[message_id]
            except KeyError:
                raise NotFound(f"no message {message_id}") from None

    def update_message(
        self,
        message_id: int,
        *,
        title: str | None = None,
        body: str | None = None,
        place: str | None = None,
        category: str | None = None,
    ) -> Message:
        result = validate_message_fields(title, body, category)
        if not result.ok:
            raise ValidationError(result.errors)
        with self._lock:
            old = self.get_message(message_id)
            msg = Message(
                message_id=old.message_id,
                title=old.title if title is None else title,
                body=old.body if body is None else body,
                place=old.place if place is None else place,
                category=old.category
                if category is None
                else self._resolve_category(category),
                author=old.author,
                created_at=old.created_at,
                updated_at=utcnow(),
                status=old.status,
                media=old.media,
            )
            self._messages[message_id] = msg
            self._commit()
            return msg

    def delete_message(self, message_id: int) -> None:
        with self._lock:
            if message_id not in self._messages:
                raise NotFound(f"no message {message_id}")
            del self._messages[message_id]
            self._media.pop(message_id, None)
            self._commit()
            blob_dir = self.media_dir / str(message_id)
            if blob_dir.exists():
                shutil.rmtree(blob_dir)

    def set_status(self, message_id: int, status: Status) -> Message:
        with self._lock:
            old = self.get_message(message_id)
            if old.status is status:
                return old
            msg = Message(
                message_id=old.message_id,
                title=old.title,
                body=old.body,
                place=old.place,
                category=old.category,
                author=old.author,
                created_at=old.created_at,
                updated_at=old.updated_at,
                status=status,
                media=old.media,
            )
            self._messages[message_id] = msg
            self._commit()
            return msg

    # -- media --------------------------------------------------------------

    def attach_media(
        self, message_id: int, kind: MediaKind, format: str, data: bytes
    ) -> int:
        if not model.allowed_format(kind, format):
            required = model.KIND_FORMATS[kind.value]
            raise FormatMismatch(
                f"{kind.value} attachments must be {required!r}, got {format!r}"
            )
        if self._max_blob_bytes is not None and len(data) > self._max_blob_bytes:
            raise BlobTooLarge(
                f"{len(data)} bytes exceeds the {self._max_blob_bytes} byte limit"
            )
        with self._lock:
            msg = self.get_message(message_id)
            attachments = self._media[message_id]
            media_id = max((a.media_id for a in attachments), default=0) + 1
            rel_path = f"{MEDIA_DIR}/{message_id}/{media_id}.{format}"
            att = MediaAttachment(
                media_id=media_id,
                message_id=message_id,
                kind=kind,
                format=format,
                byte_length=len(data),
                storage_path=rel_path,
            )
            # Blob first, then the metadata commit; a crash in between
            # leaves only an orphan file, swept on the next open.
            self._write_blob(self.data_dir / rel_path, data)
            attachments.append(att)
            self._messages[message_id] = self._with_media(msg)
            self._commit()
            return media_id

    def get_attachment(self, message_id: int, media_id: int) -> MediaAttachment:
        with self._lock:
            for att in self._media.get(message_id, ()):
                if att.media_id == media_id:
                    return att
            raise NotFound(f"no media {media_id} on message {message_id}")

    def read_blob(self, message_id: int, media_id: int) -> tuple[MediaAttachment, bytes]:
        att = self.get_attachment(message_id, media_id)
        return att, (self.data_dir / att.storage_path).read_bytes()

    # -- queries ------------------------------------------------------------

    def search_messages(self, keyword: str, field: SearchField) -> list[int]:
        """Matching ids over all stories, any status, newest first."""
        with self._lock:
            hits = [
                m
                for m in self._messages.values()
                if message_matches(m, keyword, field)
            ]
            hits.sort(key=message_order_key, reverse=True)
            return [m.message_id for m in hits]

    def list_recent(self) -> list[Message]:
        with self._lock:
            return model.viewer_order(self._messages.values())

    def list_all(self) -> list[Message]:
        """Any status, viewer ordering; the moderation view."""
        with self._lock:
            return sorted(
                self._messages.values(), key=message_order_key, reverse=True
            )
