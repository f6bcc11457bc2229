import random
from datetime import datetime, timedelta, timezone

import pytest
from hypothesis import given, strategies as st

from newsdesk.model import (
    PAGE_SIZE,
    ResultPage,
    SearchField,
    Status,
    message_matches,
    paginate,
    validate_registration,
    viewer_order,
)

from util import make_model_message


class TestValidateRegistration:
    def test_all_rules_satisfied(self):
        assert validate_registration("Ada", "L", "ada_l", "s3cret99").ok

    def test_empty_first_name(self):
        result = validate_registration("", "L", "ada_l", "s3cret99")
        assert result.fields == ("first_name",)

    def test_multiple_violations_collected(self):
        # Each rule applied independently: 'a!' breaks the username
        # charset/length rule, 'x' is under the password minimum.
        result = validate_registration("Ada", "L", "a!", "x")
        assert result.fields == ("username", "password")

    @pytest.mark.parametrize(
        "username,ok",
        [
            ("ab", False),  # too short
            ("abc", True),
            ("a" * 64, True),
            ("a" * 65, False),
            ("with space", False),
            ("dots.not", False),
            ("under_score_9", True),
        ],
    )
    def test_username_charset(self, username, ok):
        result = validate_registration("A", "B", username, "longenough")
        assert result.ok is ok

    @given(
        st.text(max_size=10),
        st.text(max_size=10),
        st.text(max_size=70),
        st.text(max_size=12),
    )
    def test_pure_and_consistent(self, first, last, username, password):
        one = validate_registration(first, last, username, password)
        two = validate_registration(first, last, username, password)
        assert one == two
        assert one.ok == (not one.errors)


class TestMessageMatches:
    def test_case_insensitive_substring(self):
        msg = make_model_message(random.Random(1), 1, title="Flood in Delta")
        assert message_matches(msg, "flood", SearchField.TITLE)

    def test_absent_substring(self):
        msg = make_model_message(random.Random(2), 1, body="no mention")
        assert not message_matches(msg, "flood", SearchField.BODY)

    def test_author_corpus_against_scan_oracle(self):
        rng = random.Random(20)
        corpus = [make_model_message(rng, i) for i in range(1, 21)]
        for msg in corpus:
            expected = "a" in msg.author.lower()
            assert message_matches(msg, "a", SearchField.AUTHOR) == expected

    @given(st.data())
    def test_agrees_with_lowercase_oracle(self, data):
        rng = random.Random(data.draw(st.integers(0, 2**30)))
        msg = make_model_message(rng, 1)
        keyword = data.draw(st.text(min_size=1, max_size=6))
        field = data.draw(st.sampled_from(list(SearchField)))
        haystack = {
            SearchField.TITLE: msg.title,
            SearchField.BODY: msg.body,
            SearchField.AUTHOR: msg.author,
        }[field]
        assert message_matches(msg, keyword, field) == (
            keyword.lower() in haystack.lower()
        )

    def test_thousand_randomized_pairs_against_oracle(self):
        rng = random.Random(1000)
        fields = list(SearchField)
        for i in range(1000):
            msg = make_model_message(rng, i + 1)
            source = rng.choice((msg.title, msg.body, msg.author, "xyzzy"))
            start = rng.randrange(max(1, len(source)))
            keyword = source[start : start + rng.randint(1, 4)] or "q"
            if rng.random() < 0.5:
                keyword = keyword.upper()
            field = rng.choice(fields)
            haystack = {
                SearchField.TITLE: msg.title,
                SearchField.BODY: msg.body,
                SearchField.AUTHOR: msg.author,
            }[field]
            assert message_matches(msg, keyword, field) == (
                keyword.lower() in haystack.lower()
            )


class TestPaginate:
    def test_first_segment_of_twelve(self):
        ids = list(range(12, 0, -1))
        page = paginate(ids, 1)
        assert len(page.ids) == 5
        assert page.total_matches == 12
        assert page.has_more

    def test_last_segment_of_twelve(self):
        # ceil(12/5) = 3 pages; the last holds 12 mod 5 = 2 items.
        ids = list(range(12, 0, -1))
        page = paginate(ids, 3)
        assert page.ids == (2, 1)
        assert page.total_matches == 12
        assert not page.has_more

    def test_empty_corpus(self):
        page = paginate([], 1)
        assert page.ids == ()
        assert page.total_matches == 0
        assert not page.has_more

    def test_page_beyond_last_is_empty_not_error(self):
        page = paginate([3, 2, 1], 9)
        assert page.ids == ()
        assert not page.has_more

    def test_page_zero_rejected(self):
        with pytest.raises(ValueError):
            paginate([1], 0)

    @given(st.lists(st.integers(), max_size=60))
    def test_pages_concatenate_without_gap_or_overlap(self, ids):
        pages = []
        page_no = 1
        while True:
            page = paginate(ids, page_no)
            pages.extend(page.ids)
            if not page.has_more:
                break
            page_no += 1
        assert pages == ids
        assert all(len(paginate(ids, p).ids) <= PAGE_SIZE
                   for p in range(1, page_no + 1))

    @given(st.lists(st.integers(), max_size=23), st.integers(1, 8))
    def test_has_more_iff_next_page_non_empty(self, ids, page_no):
        page = paginate(ids, page_no)
        assert page.has_more == bool(paginate(ids, page_no + 1).ids)


class TestViewerOrder:
    def _msg(self, message_id, created_at, status=Status.ACTIVE):
        return make_model_message(
            random.Random(message_id), message_id,
            created_at=created_at, status=status,
        )

    def test_newest_first(self):
        t1 = datetime(2026, 8, 1, tzinfo=timezone.utc)
        t2 = t1 + timedelta(hours=1)
        a, b = self._msg(1, t1), self._msg(2, t2)
        assert viewer_order({a, b}) == [b, a]

    def test_equal_timestamps_break_by_id_descending(self):
        t = datetime(2026, 8, 1, tzinfo=timezone.utc)
        a, b = self._msg(1, t), self._msg(2, t)
        assert viewer_order({a, b}) == [b, a]

    def test_inactive_excluded(self):
        t = datetime(2026, 8, 1, tzinfo=timezone.utc)
        a = self._msg(1, t)
        b = self._msg(2, t, status=Status.INACTIVE)
        assert viewer_order({a, b}) == [a]

    def test_matches_stable_sort_oracle(self):
        rng = random.Random(99)
        base = datetime(2026, 8, 1, tzinfo=timezone.utc)
        msgs = [
            self._msg(i, base + timedelta(seconds=rng.randint(0, 5)))
            for i in range(1, 40)
        ]
        # Oracle: stable sort by id desc, then stable sort by time desc.
        oracle = sorted(msgs, key=lambda m: -m.message_id)
        oracle = sorted(oracle, key=lambda m: m.created_at, reverse=True)
        assert viewer_order(msgs) == oracle


class TestResultPage:
    def test_has_more_follows_the_five_per_page_rule(self):
        assert ResultPage(page=1, total_matches=12).has_more
        assert not ResultPage(page=3, total_matches=12).has_more
        assert not ResultPage(page=1, total_matches=5).has_more
        assert ResultPage(page=1, total_matches=6).has_more
