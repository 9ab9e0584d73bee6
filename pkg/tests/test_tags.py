from __future__ import annotations

import pytest
from hypothesis import given, settings, strategies as st

from omegakit.errors import InvalidUtf8, MalformedTag, NotReservedRange, ReservedInText, UnassignedTag
from omegakit.tags import (
    Tag, TagKind, Text, classify_tag, decode_stream, encode_stream, format_listing, is_reserved_char,
    parse_listing, tag_bytes,
)

ARROW = bytes((0xCB, 0xBF))


def test_classify_receiver_self():
    assert classify_tag(b"\xcb\x99") is TagKind.ReceiverSelf


def test_classify_assignment_arrow():
    assert classify_tag(ARROW) is TagKind.AssignmentArrow


def test_classify_outside_range():
    with pytest.raises(NotReservedRange):
        classify_tag(b"\xcb\x41")


def test_classify_requires_two_bytes():
    with pytest.raises(ValueError):
        classify_tag(b"\xcb")


def test_classify_unassigned_pair():
    with pytest.raises(UnassignedTag):
        classify_tag(b"\xcb\xbe")


def test_decode_assignment_example():
    toks = decode_stream(b"x " + ARROW + b" 1")
    assert toks == [Text("x "), Tag(TagKind.AssignmentArrow), Text(" 1")]
    assert toks[1].byte_offset == 2


def test_decode_empty():
    assert decode_stream(b"") == []


def test_decode_left_assoc_with_priority():
    assert decode_stream(b"\xcb\xb17") == [Tag(TagKind.LeftAssoc, 7)]


def test_decode_priority_digit_missing():
    with pytest.raises(MalformedTag):
        decode_stream(b"\xcb\xb1x")


def test_decode_invalid_utf8_reports_offset():
    with pytest.raises(InvalidUtf8) as info:
        decode_stream(b"ab\xff")
    assert info.value.offset == 2


def test_decode_rejects_long_sequences():
    # the old 5/6-byte forms are not UTF-8
    with pytest.raises(InvalidUtf8):
        decode_stream(b"\xf8\x88\x80\x80\x80")


def test_decode_unassigned_reports_offset():
    with pytest.raises(UnassignedTag) as info:
        decode_stream(b"abc\xcb\xbe")
    assert info.value.offset == 3


def test_encode_text():
    assert encode_stream([Text("abc")]) == b"abc"


def test_encode_commutativity():
    assert encode_stream([Tag(TagKind.CommutativityOn)]) == b"\xcb\xa0"


def test_encode_rejects_reserved_in_text():
    with pytest.raises(ReservedInText):
        encode_stream([Text("a˿b")])


def test_tag_bytes_and_char_agree():
    for kind in TagKind:
        assert tag_bytes(kind) == kind.char.encode("utf-8")
        assert is_reserved_char(kind.char)


def test_priority_must_be_digit():
    with pytest.raises(ValueError):
        Tag(TagKind.RightAssoc, 10)
    with pytest.raises(ValueError):
        Tag(TagKind.ExactType, 1)


def test_listing_round_trip():
    toks = decode_stream("Ω ˀ «x»\n".encode() + b"\xcb\xb23")
    assert parse_listing(format_listing(toks)) == toks


# -- properties ------------------------------------------------------------------

_safe_char = st.characters(blacklist_categories=("Cs",)).filter(lambda c: not is_reserved_char(c))
_tag = st.one_of(
    st.sampled_from([k for k in TagKind if not k.has_priority]).map(Tag),
    st.builds(Tag, st.sampled_from([TagKind.LeftAssoc, TagKind.RightAssoc]), st.integers(0, 9)),
)


def _normalize(tokens):
    out = []
    for t in tokens:
        if isinstance(t, Text):
            if not t.run:
                continue
            if out and isinstance(out[-1], Text):
                out[-1] = Text(out[-1].run + t.run)
                continue
        out.append(t)
    return out


token_lists = st.lists(st.one_of(st.text(_safe_char, min_size=1).map(Text), _tag), max_size=20).map(_normalize)


@settings(max_examples=300)
@given(token_lists)
def test_decode_inverts_encode(tokens):
    assert decode_stream(encode_stream(tokens)) == tokens


@settings(max_examples=300)
@given(token_lists)
def test_encode_inverts_decode(tokens):
    data = encode_stream(tokens)
    assert encode_stream(decode_stream(data)) == data


@given(st.text(_safe_char))
def test_plain_text_passes_through(s):
    data = s.encode("utf-8")
    assert encode_stream(decode_stream(data)) == data
    assert all(isinstance(t, Text) for t in decode_stream(data))
