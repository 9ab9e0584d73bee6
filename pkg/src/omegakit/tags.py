"""Reserved-tag codec for ``.omg`` source files.

Source files are ordinary UTF-8.  The 64 two-byte sequences ``0xCB80`` to
``0xCBBF`` (code points U+02C0..U+02FF) are reserved as tags; everything else
is text.  Decoding splits a byte stream into maximal text runs and tags, and
encoding is its exact inverse.

Tag byte assignments
--------------------

==========  ====================  ==========================================
bytes       kind                  notes
==========  ====================  ==========================================
CB80        PrototypeBegin        structural, artifact-defined
CB81        InheritLinkSolid      structural (polymorphic link)
CB82        InheritLinkDotted     structural (implementation link)
CB83        EyeOpen               structural, display only
CB84/CB86   Superscript start/stop
CB85/CB87   Subscript start/stop
CB88        SlotBegin             structural
CB89        BodyBegin             structural
CB8A/CB8B   Comment begin/end     structural
CB8C        PreconditionBegin     structural
CB8D        PostconditionBegin    structural
CB8E        AccessSpec            structural
CB90        ReceiverCloned
CB91        ReceiverShared
CB99        ReceiverSelf
CB9A        ExactType
CBA0        CommutativityOn
CBB1 + d    LeftAssoc             ``d`` is an ASCII digit, the priority
CBB2 + d    RightAssoc            idem
CBBF        AssignmentArrow
==========  ====================  ==========================================

Every other pair in the range is unassigned and rejected.
"""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

from .errors import InvalidUtf8, MalformedTag, NotReservedRange, ReservedInText, UnassignedTag

__all__ = [
    "TagKind",
    "Text",
    "Tag",
    "TagToken",
    "RESERVED_FIRST",
    "RESERVED_LAST",
    "classify_tag",
    "tag_bytes",
    "decode_stream",
    "encode_stream",
    "is_reserved_char",
    "format_listing",
    "parse_listing",
]

RESERVED_FIRST = 0x02C0
RESERVED_LAST = 0x02FF
_RESERVED_RE = re.compile("[\u02c0-\u02ff]")


class TagKind(enum.Enum):
    # value = second byte of the pair (first byte is always 0xCB)
    PrototypeBegin = 0x80
    InheritLinkSolid = 0x81
    InheritLinkDotted = 0x82
    EyeOpen = 0x83
    SuperscriptStart = 0x84
    SubscriptStart = 0x85
    SuperscriptStop = 0x86
    SubscriptStop = 0x87
    SlotBegin = 0x88
    BodyBegin = 0x89
    CommentBegin = 0x8A
    CommentEnd = 0x8B
    PreconditionBegin = 0x8C
    PostconditionBegin = 0x8D
    AccessSpec = 0x8E
    ReceiverCloned = 0x90
    ReceiverShared = 0x91
    ReceiverSelf = 0x99
    ExactType = 0x9A
    CommutativityOn = 0xA0
    LeftAssoc = 0xB1
    RightAssoc = 0xB2
    AssignmentArrow = 0xBF

    @property
    def has_priority(self) -> bool:
        return self in (TagKind.LeftAssoc, TagKind.RightAssoc)

    @property
    def char(self) -> str:
        return chr(RESERVED_FIRST + (self.value - 0x80))


_BY_SECOND_BYTE = {k.value: k for k in TagKind}


@dataclass(frozen=True)
class Text:
    run: str

    def encode(self) -> bytes:
        return self.run.encode("utf-8")


@dataclass(frozen=True)
class Tag:
    kind: TagKind
    priority: int | None = None
    # position in the source file; informational, ignored by equality
    byte_offset: int = field(default=0, compare=False)

    def __post_init__(self):
        if self.kind.has_priority:
            if self.priority is None or not 0 <= self.priority <= 9:
                raise ValueError(f"{self.kind.name} needs a priority digit 0..9")
        elif self.priority is not None:
            raise ValueError(f"{self.kind.name} carries no priority")

    def encode(self) -> bytes:
        out = bytes((0xCB, self.kind.value))
        if self.priority is not None:
            out += str(self.priority).encode("ascii")
        return out


TagToken = Union[Text, Tag]


def tag_bytes(kind: TagKind) -> bytes:
    return bytes((0xCB, kind.value))


def is_reserved_char(ch: str) -> bool:
    return RESERVED_FIRST <= ord(ch) <= RESERVED_LAST


def classify_tag(byte_pair: bytes) -> TagKind:
    """Map a two-byte sequence to its tag kind.

    Raises NotReservedRange for pairs outside 0xCB80..0xCBBF and
    UnassignedTag for reserved pairs that carry no meaning yet.
    """
    if len(byte_pair) != 2:
        raise ValueError("classify_tag expects exactly two bytes")
    first, second = byte_pair[0], byte_pair[1]
    if first != 0xCB or not 0x80 <= second <= 0xBF:
        raise NotReservedRange(f"byte pair {first:02X}{second:02X} is outside CB80..CBBF")
    kind = _BY_SECOND_BYTE.get(second)
    if kind is None:
        raise UnassignedTag(f"reserved tag CB{second:02X} is not assigned")
    return kind


def decode_stream(data: bytes) -> list[TagToken]:
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise InvalidUtf8(f"invalid UTF-8: {exc.reason}", offset=exc.start) from None

    tokens: list[TagToken] = []
    byte_pos = 0
    char_pos = 0
    for m in _RESERVED_RE.finditer(text):
        start = m.start()
        if start > char_pos:
            run = text[char_pos:start]
            tokens.append(Text(run))
            byte_pos += len(run.encode("utf-8"))
        offset = byte_pos
        kind = _classify_char(m.group(), offset)
        char_pos = start + 1
        byte_pos += 2
        priority = None
        if kind.has_priority:
            digit = text[char_pos:char_pos + 1]
            if not ("0" <= digit <= "9" and digit != ""):
                raise MalformedTag(f"{kind.name} must be followed by a digit", offset=offset)
            priority = int(digit)
            char_pos += 1
            byte_pos += 1
        tokens.append(Tag(kind, priority, offset))
    if char_pos < len(text):
        tokens.append(Text(text[char_pos:]))
    return tokens


def _classify_char(ch: str, offset: int) -> TagKind:
    try:
        return classify_tag(ch.encode("utf-8"))
    except UnassignedTag as exc:
        raise UnassignedTag(exc.message, offset=offset) from None


def encode_stream(tokens: Iterable[TagToken]) -> bytes:
    out = bytearray()
    for tok in tokens:
        if isinstance(tok, Text):
            m = _RESERVED_RE.search(tok.run)
            if m:
                raise ReservedInText(
                    f"text run contains reserved code point U+{ord(m.group()):04X}",
                    offset=len(out) + len(tok.run[: m.start()].encode("utf-8")),
                )
            out += tok.encode()
        else:
            out += tok.encode()
    return bytes(out)


# -- readable listing (used by ``omega tags``) --------------------------------

def format_listing(tokens: Sequence[TagToken]) -> str:
    """One token per line: ``TEXT "..."`` (JSON string) or ``TAG Kind [digit]``."""
    lines = []
    for tok in tokens:
        if isinstance(tok, Text):
            lines.append("TEXT " + _quote(tok.run))
        elif tok.priority is not None:
            lines.append(f"TAG {tok.kind.name} {tok.priority}")
        else:
            lines.append(f"TAG {tok.kind.name}")
    return "\n".join(lines) + ("\n" if lines else "")


def _quote(s: str) -> str:
    return json.dumps(s, ensure_ascii=False)


def _unquote(s: str) -> str:
    value = json.loads(s)
    if not isinstance(value, str):
        raise ValueError(f"bad quoted text: {s!r}")
    return value


def parse_listing(listing: str) -> list[TagToken]:
    tokens: list[TagToken] = []
    for lineno, line in enumerate(listing.split("\n"), 1):
        if not line.strip():
            continue
        head, _, rest = line.partition(" ")
        if head == "TEXT":
            tokens.append(Text(_unquote(rest)))
        elif head == "TAG":
            parts = rest.split()
            try:
                kind = TagKind[parts[0]]
            except (KeyError, IndexError):
                raise ValueError(f"line {lineno}: unknown tag {rest!r}") from None
            prio = int(parts[1]) if len(parts) > 1 else None
            tokens.append(Tag(kind, prio))
        else:
            raise ValueError(f"line {lineno}: expected TEXT or TAG")
    return tokens
