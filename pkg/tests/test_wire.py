import random
from datetime import datetime, timezone

import pytest
from hypothesis import given, settings, strategies as st

from newsdesk import wire
from newsdesk.model import NewsSummary, ResultPage, Status
from newsdesk.wire import (
    BoundaryCollision,
    FramingError,
    Part,
    ProtocolError,
    StatusPayload,
)
from newsdesk.xmlpull import parse_document

from util import TESTDATA

FIXED_TS = datetime(2026, 8, 10, 12, 34, 56, tzinfo=timezone.utc)


def summary(message_id=7, **overrides):
    values = dict(
        message_id=message_id,
        title="Flood in Delta",
        body="Waters rising & roads closed",
        place="Delta",
        category="Weather",
        author="ada_l",
        created_at=FIXED_TS,
        status=Status.ACTIVE,
        media_count=2,
        thumb_media_id=1,
    )
    values.update(overrides)
    return NewsSummary(**values)


# -- strategies -------------------------------------------------------

_wire_text = st.text(max_size=20).filter(
    lambda s: s == "" or s.strip(" \t\r\n") != ""
)
_wire_title = st.text(min_size=1, max_size=20).filter(
    lambda s: s.strip(" \t\r\n") != ""
)
_timestamps = st.datetimes(
    min_value=datetime(1990, 1, 1),
    max_value=datetime(2100, 1, 1),
).map(lambda dt: dt.replace(tzinfo=timezone.utc))


@st.composite
def summaries(draw, message_id=None):
    count = draw(st.integers(0, 4))
    return NewsSummary(
        message_id=message_id or draw(st.integers(1, 10_000)),
        title=draw(_wire_title),
        body=draw(_wire_title),
        place=draw(_wire_text),
        category=draw(_wire_title),
        author=draw(st.from_regex(r"[A-Za-z0-9_]{3,12}", fullmatch=True)),
        created_at=draw(_timestamps),
        status=draw(st.sampled_from(list(Status))),
        media_count=count,
        thumb_media_id=draw(
            st.one_of(st.none(), st.integers(1, max(count, 1)))
        ),
    )


@st.composite
def result_pages(draw):
    items = tuple(draw(st.lists(summaries(), max_size=5)))
    # total and page consistent with a ≤5-item slice of a larger list
    page = draw(st.integers(1, 6))
    if len(items) < 5:
        total = (page - 1) * 5 + len(items)
    else:
        total = page * 5 + draw(st.integers(0, 40))
    return ResultPage(page=page, total_matches=total, items=items)


class TestResultPageCodec:
    def test_empty_page_fixture_bytes(self):
        page = ResultPage(page=1, total_matches=0)
        expected = (TESTDATA / "newslist_empty.xml").read_bytes()
        assert wire.encode_result_page(page) == expected

    def test_single_item_page_fixture_bytes(self):
        page = ResultPage(page=1, total_matches=1, items=(summary(),))
        expected = (TESTDATA / "news_page.xml").read_bytes()
        assert wire.encode_result_page(page) == expected

    def test_twelve_matches_page_one(self):
        items = tuple(summary(i) for i in range(12, 7, -1))
        page = ResultPage(page=1, total_matches=12, items=items)
        data = wire.encode_result_page(page)
        assert b'more="true"' in data
        assert data.count(b"<news ") == 5

    def test_decode_inverts_encode(self):
        page = ResultPage(page=2, total_matches=7, items=(summary(),))
        assert wire.decode_result_page(wire.encode_result_page(page)) == page

    def test_decode_tolerates_attribute_order(self):
        doc = (TESTDATA / "news_page.xml").read_bytes().replace(
            b'<newslist page="1" total="1" more="false">',
            b'<newslist more="false" total="1" page="1">',
        )
        assert wire.decode_result_page(doc).total_matches == 1

    def test_decode_rejects_missing_element(self):
        doc = (TESTDATA / "news_page.xml").read_bytes().replace(
            b"<author>ada_l</author>", b""
        )
        with pytest.raises(ProtocolError, match="author"):
            wire.decode_result_page(doc)

    def test_decode_rejects_unknown_element(self):
        doc = (TESTDATA / "news_page.xml").read_bytes().replace(
            b"<place>Delta</place>", b"<place>Delta</place><rating>5</rating>"
        )
        with pytest.raises(ProtocolError, match="rating"):
            wire.decode_result_page(doc)

    def test_decode_rejects_inconsistent_more_flag(self):
        doc = (TESTDATA / "newslist_empty.xml").read_bytes().replace(
            b'more="false"', b'more="true"'
        )
        with pytest.raises(ProtocolError, match="more"):
            wire.decode_result_page(doc)

    def test_decode_rejects_oversized_segment(self):
        items = tuple(summary(i) for i in range(1, 7))
        doc = wire._encode_newslist(items, 1, 6, False)
        with pytest.raises(ProtocolError, match="five"):
            wire.decode_result_page(doc)

    def test_encode_refuses_more_than_five(self):
        items = tuple(summary(i) for i in range(1, 7))
        with pytest.raises(ValueError):
            wire.encode_result_page(
                ResultPage(page=1, total_matches=6, items=items)
            )

    @settings(max_examples=150)
    @given(result_pages())
    def test_round_trip_property(self, page):
        encoded = wire.encode_result_page(page)
        assert wire.decode_result_page(encoded) == page
        assert parse_document(encoded)  # reparses cleanly

    def test_viewer_list_carries_any_length(self):
        items = tuple(summary(i) for i in range(1, 9))
        data = wire.encode_viewer_list(items)
        assert wire.decode_news_list(data) == items


class TestNewsDetailCodec:
    def test_round_trip_with_media_items(self):
        refs = (
            wire.MediaRef(1, "image", "jpeg", 51203),
            wire.MediaRef(2, "audio", "mp3", 88931),
        )
        data = wire.encode_news_detail(summary(), refs)
        got_summary, got_refs = wire.decode_news_detail(data)
        assert got_summary == summary()
        assert got_refs == refs

    def test_round_trip_without_media(self):
        item = summary(media_count=0, thumb_media_id=None)
        data = wire.encode_news_detail(item, ())
        assert wire.decode_news_detail(data) == (item, ())


class TestStatusCodec:
    def test_ok_fixture_bytes(self):
        payload = StatusPayload("ok", "registration successful")
        assert wire.encode_status(payload) == (
            TESTDATA / "status_ok.xml"
        ).read_bytes()

    def test_error_with_detail_fixture_and_round_trip(self):
        payload = StatusPayload(
            "error",
            "registration failed",
            (
                ("username", "must be 3-64 characters: letters, digits or underscore"),
                ("password", "must be at least 6 characters"),
            ),
        )
        encoded = wire.encode_status(payload)
        assert encoded == (TESTDATA / "status_error_fields.xml").read_bytes()
        assert wire.decode_status(encoded) == payload

    def test_unknown_code_rejected(self):
        doc = b'<status code="warn"><message>hm</message></status>'
        with pytest.raises(ProtocolError):
            wire.decode_status(doc)

    def test_ok_with_detail_rejected(self):
        with pytest.raises(ValueError):
            StatusPayload("ok", "fine", (("field", "reason"),))

    @settings(max_examples=100)
    @given(
        st.sampled_from(["ok", "error"]),
        _wire_title,
        st.lists(st.tuples(_wire_text, _wire_text), max_size=3),
    )
    def test_round_trip_property(self, code, message, detail):
        if code == "ok":
            detail = []
        payload = StatusPayload(code, message, tuple(detail))
        assert wire.decode_status(wire.encode_status(payload)) == payload


class TestMultipartCodec:
    def test_single_text_field_byte_exact(self):
        # Oracle: the RFC 2046 framing written out by hand in testdata.
        _, body = wire.encode_multipart(
            [Part("title", None, None, b"X")], boundary="BOUNDARY"
        )
        assert body == (TESTDATA / "multipart_single_field.bin").read_bytes()

    def test_round_trip_with_binary_payload(self):
        rng = random.Random(42)
        blob = bytes(rng.randrange(256) for _ in range(1024))
        parts = (
            Part("message_id", None, None, b"7"),
            Part("kind", None, None, b"image"),
            Part("file", "shot.jpeg", "image/jpeg", blob),
        )
        boundary, body = wire.encode_multipart(parts)
        assert wire.decode_multipart(boundary, body) == parts

    def test_embedded_crlf_and_boundary_like_bytes_survive(self):
        tricky = b"\r\n--almost-a-boundary\r\n--BOUNDARYish--\r\n\r\n"
        parts = (Part("file", "x.bin", None, tricky),)
        boundary, body = wire.encode_multipart(parts)
        assert wire.decode_multipart(boundary, body)[0].body == tricky

    def test_missing_terminator_is_a_framing_error(self):
        boundary, body = wire.encode_multipart([Part("a", None, None, b"1")])
        truncated = body[: body.rindex(b"--" + boundary.encode() + b"--")]
        with pytest.raises(FramingError):
            wire.decode_multipart(boundary, truncated)

    def test_explicit_boundary_collision_rejected(self):
        with pytest.raises(BoundaryCollision):
            wire.encode_multipart(
                [Part("a", None, None, b"xxCOLLIDExx")], boundary="COLLIDE"
            )

    def test_generated_boundary_never_collides(self):
        rng = random.Random(7)
        for _ in range(50):
            blob = bytes(rng.randrange(256) for _ in range(300))
            boundary, body = wire.encode_multipart(
                [Part("file", "f.bin", None, blob)]
            )
            assert boundary.encode() not in blob
            assert len(boundary) == 30

    def test_duplicate_part_names_rejected(self):
        with pytest.raises(ValueError):
            wire.encode_multipart(
                [Part("a", None, None, b"1"), Part("a", None, None, b"2")]
            )

    def test_decode_reports_offset(self):
        with pytest.raises(FramingError) as exc:
            wire.decode_multipart("B", b"not a multipart body")
        assert exc.value.offset == 0

    @settings(max_examples=150)
    @given(
        st.lists(
            st.tuples(
                st.from_regex(r"[a-z_][a-z0-9_]{0,8}", fullmatch=True),
                st.one_of(st.none(), st.from_regex(r"[a-z0-9.]{1,12}", fullmatch=True)),
                st.binary(max_size=200),
            ),
            min_size=1,
            max_size=4,
            unique_by=lambda t: t[0],
        )
    )
    def test_round_trip_property(self, raw_parts):
        parts = tuple(
            Part(name, filename, "application/octet-stream" if filename else None, body)
            for name, filename, body in raw_parts
        )
        boundary, body = wire.encode_multipart(parts)
        decoded = wire.decode_multipart(boundary, body)
        assert decoded == parts
        assert sum(len(p.body) for p in decoded) == sum(
            len(p.body) for p in parts
        )


class TestRss:
    def test_zero_messages_still_well_formed(self):
        data = wire.encode_rss("Newsdesk", [])
        events = parse_document(data)
        assert events[0].name == "rss"
        assert b"<item>" not in data

    def test_fixture_bytes(self):
        item = summary(body="Waters rising", media_count=0, thumb_media_id=None)
        data = wire.encode_rss("Newsdesk", [item])
        assert data == (TESTDATA / "rss_one_item.xml").read_bytes()

    def test_category_element_present(self):
        item = summary(category="Sports")
        data = wire.encode_rss("Newsdesk", [item])
        assert b"<category>Sports</category>" in data

    @settings(max_examples=50)
    @given(st.lists(summaries(), max_size=6))
    def test_reparses_and_matches_input_model(self, items):
        data = wire.encode_rss("Newsdesk", items)
        events = parse_document(data)
        titles = []
        for i, event in enumerate(events):
            if event.kind == "start_tag" and event.name == "title":
                titles.append(events[i + 1].content if events[i + 1].kind == "text" else "")
        # First title is the channel's, the rest are the items' in order.
        assert titles[0] == "Newsdesk"
        assert titles[1:] == [item.title for item in items]


class TestTimestamps:
    def test_rfc3339_round_trip_with_microseconds(self):
        dt = datetime(2026, 8, 10, 1, 2, 3, 456789, tzinfo=timezone.utc)
        assert wire.parse_rfc3339(wire.format_rfc3339(dt)) == dt

    def test_rfc3339_whole_seconds_has_no_fraction(self):
        assert wire.format_rfc3339(FIXED_TS) == "2026-08-10T12:34:56Z"

    def test_rfc3339_accepts_offset_zero(self):
        assert wire.parse_rfc3339("2026-08-10T12:34:56+00:00") == FIXED_TS

    @pytest.mark.parametrize(
        "text", ["2026-08-10", "2026-13-10T00:00:00Z", "garbage", ""]
    )
    def test_rfc3339_rejects_bad_input(self, text):
        with pytest.raises(ProtocolError):
            wire.parse_rfc3339(text)

    @given(_timestamps)
    def test_rfc3339_round_trip_property(self, dt):
        assert wire.parse_rfc3339(wire.format_rfc3339(dt)) == dt
