"""Phase-1 reader: the tagged part of a prototype file.

A file holds one prototype.  Its layout, in tag terms, is::

    PrototypeBegin  name [ "(" generic, ... ")" ]
    { InheritLinkSolid | InheritLinkDotted  [EyeOpen]  parent-type }
    { CommentBegin  text  CommentEnd }                      (anywhere between sections)
    { SlotBegin  signature
        [AccessSpec  access]
        { PreconditionBegin  text }
        { PostconditionBegin  text }
        [BodyBegin  body-text] }

Bodies and assertion zones are plain text without tags; they are kept
verbatim for the second phase.  A slot without ``BodyBegin`` is an attribute.
See ``docs/format.md`` for the full description.
"""

from __future__ import annotations

import enum
import unicodedata
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence, Union

from .errors import (
    DuplicateSlotKeywords,
    MalformedHeader,
    MissingReceiverMark,
    MultipleReceiverMarks,
    OperatorWithManyKeywords,
    TagInBody,
)
from .tags import Tag, TagKind, TagToken, Text

__all__ = [
    "Style",
    "FormattedName",
    "Named",
    "ExactReceiver",
    "TupleType",
    "BlockType",
    "TypeRef",
    "ReceiverKind",
    "Assoc",
    "Arity",
    "OperatorInfo",
    "Access",
    "Param",
    "SlotSignature",
    "Slot",
    "InheritLink",
    "PrototypeHeader",
    "RECEIVER",
    "ARG",
    "canonical_name",
    "parse_signature",
    "parse_type_text",
    "read_prototype",
    "encode_header",
    "signature_tokens",
    "type_text",
]

PUNCT = set("(){}[],:")


# -- names -------------------------------------------------------------------

class Style(enum.Enum):
    Normal = "normal"
    Superscript = "sup"
    Subscript = "sub"


@dataclass(frozen=True)
class FormattedName:
    segments: tuple[tuple[str, Style], ...]

    def __post_init__(self):
        merged: list[tuple[str, Style]] = []
        for text, style in self.segments:
            if not text:
                continue
            if merged and merged[-1][1] is style:
                merged[-1] = (merged[-1][0] + text, style)
            else:
                merged.append((text, style))
        object.__setattr__(self, "segments", tuple(merged))
        if not merged:
            raise ValueError("a formatted name cannot be empty")

    @classmethod
    def plain(cls, text: str) -> "FormattedName":
        return cls(((text, Style.Normal),))

    @property
    def canonical(self) -> str:
        return canonical_name(self)

    @property
    def words(self) -> tuple[str, ...]:
        return tuple(self.canonical.split())

    def join(self, other: "FormattedName") -> "FormattedName":
        return FormattedName(self.segments + ((" ", Style.Normal),) + other.segments)

    def __str__(self) -> str:
        out = []
        for text, style in self.segments:
            if style is Style.Superscript:
                out.append("^{" + text + "}")
            elif style is Style.Subscript:
                out.append("_{" + text + "}")
            else:
                out.append(text)
        return "".join(out)


def canonical_name(name: FormattedName) -> str:
    return "".join(text for text, _ in name.segments)


def _fname(name: FormattedName | str) -> FormattedName:
    return FormattedName.plain(name) if isinstance(name, str) else name


# -- types -------------------------------------------------------------------

@dataclass(frozen=True)
class Named:
    name: FormattedName
    params: tuple["TypeRef", ...] = ()

    def __init__(self, name, params=()):
        object.__setattr__(self, "name", _fname(name))
        object.__setattr__(self, "params", tuple(params))

    @property
    def canonical(self) -> str:
        return self.name.canonical

    def __str__(self) -> str:
        if self.params:
            return f"{self.canonical}({', '.join(map(str, self.params))})"
        return self.canonical


@dataclass(frozen=True)
class ExactReceiver:
    def __str__(self) -> str:
        return "⊚"


@dataclass(frozen=True)
class TupleType:
    elements: tuple["TypeRef", ...]

    def __post_init__(self):
        if len(self.elements) < 2:
            raise ValueError("a tuple type has at least two elements")

    def __str__(self) -> str:
        return "(" + ", ".join(map(str, self.elements)) + ")"


@dataclass(frozen=True)
class BlockType:
    locals: tuple["TypeRef", ...] = ()
    result: "TypeRef | None" = None

    def __str__(self) -> str:
        head = f"[{', '.join(map(str, self.locals))}] " if self.locals else ""
        return head + "{" + (str(self.result) if self.result is not None else "") + "}"


TypeRef = Union[Named, ExactReceiver, TupleType, BlockType]


# -- signatures --------------------------------------------------------------

class ReceiverKind(enum.Enum):
    Shared = "shared"
    Cloned = "cloned"


class Assoc(enum.Enum):
    Left = "L"
    Right = "R"


class Arity(enum.Enum):
    BinaryInfix = "binary"
    UnaryPrefix = "prefix"
    UnaryPostfix = "postfix"


@dataclass(frozen=True)
class OperatorInfo:
    priority: int
    assoc: Assoc
    commutative: bool
    arity: Arity


@dataclass(frozen=True)
class Access:
    kind: str = "public"  # public | self | named | directory
    names: tuple[str, ...] = ()
    path: str = ""

    @classmethod
    def parse(cls, text: str) -> "Access":
        text = text.strip()
        head, _, rest = text.partition(" ")
        if text in ("", "public"):
            return cls()
        if text == "self":
            return cls("self")
        if head == "names":
            names = tuple(n.strip() for n in rest.split(",") if n.strip())
            if not names:
                raise MalformedHeader("access 'names' needs at least one prototype name")
            return cls("named", names=names)
        if head == "dir":
            if not rest.strip():
                raise MalformedHeader("access 'dir' needs a path")
            return cls("directory", path=rest.strip())
        raise MalformedHeader(f"unknown access specification {text!r}")

    def __str__(self) -> str:
        if self.kind == "public":
            return "public"
        if self.kind == "self":
            return "self"
        if self.kind == "named":
            return "names " + ", ".join(self.names)
        return "dir " + self.path


class _Placeholder(str):
    # compares by identity so a keyword spelled "_" never matches ARG
    def __eq__(self, other):
        return self is other

    def __ne__(self, other):
        return self is not other

    __hash__ = object.__hash__


RECEIVER = _Placeholder("●")
ARG = _Placeholder("_")


@dataclass(frozen=True)
class Param:
    name: FormattedName
    type: TypeRef | None
    delayed: bool = False
    after: int = 0  # index of the keyword this parameter follows
    block_locals: tuple[tuple[FormattedName, TypeRef], ...] = ()


@dataclass(frozen=True)
class SlotSignature:
    keywords: tuple[FormattedName, ...]
    receiver_position: int = 0
    receiver_kind: ReceiverKind = ReceiverKind.Shared
    receiver_delayed: bool = False
    params: tuple[Param, ...] = ()
    return_type: TypeRef | None = None
    operator: OperatorInfo | None = None
    access: Access = Access()
    preconditions: tuple[str, ...] = ()
    postconditions: tuple[str, ...] = ()
    graphical_key: str | None = None

    @property
    def category(self) -> str:
        return "Standard" if self.operator is None else "Operator"

    @property
    def selector(self) -> tuple[str, ...]:
        """Keyword words with formatting and grouping removed."""
        return tuple(w for kw in self.keywords for w in kw.words)

    @property
    def pattern(self) -> tuple[str, ...]:
        """Words interleaved with RECEIVER / ARG placeholders, in reading order."""
        out: list[str] = []
        for i, kw in enumerate(self.keywords):
            if self.receiver_position == i:
                out.append(RECEIVER)
            out.extend(kw.words)
            out.extend(ARG for p in self.params if p.after == i)
        if self.receiver_position == len(self.keywords):
            out.append(RECEIVER)
        return tuple(out)

    @property
    def pattern_text(self) -> str:
        return " ".join(self.pattern)

    @property
    def placeholder_order(self) -> tuple[int, ...]:
        """Placeholders in reading order: -1 is the receiver, k >= 0 is params[k]."""
        order = []
        pi = 0
        for item in self.pattern:
            if item is RECEIVER:
                order.append(-1)
            elif item is ARG:
                order.append(pi)
                pi += 1
        return tuple(order)

    @property
    def glyph_key(self) -> str:
        out = []
        n = 0
        for item in self.pattern:
            if item is RECEIVER or item is ARG:
                out.append(f"A{n}")
                n += 1
            else:
                out.append(item)
        return " ".join(out)

    @property
    def arity(self) -> int:
        return 1 + len(self.params)

    def __str__(self) -> str:
        text = self.pattern_text
        if self.operator is not None:
            text += f" [{self.operator.assoc.value}{self.operator.priority}{'C' if self.operator.commutative else ''}]"
        return text


@dataclass(frozen=True)
class Slot:
    signature: SlotSignature
    raw_body: str | None
    body_line: int = field(default=0, compare=False)
    body_col: int = field(default=0, compare=False)

    @property
    def is_attribute(self) -> bool:
        return self.raw_body is None


@dataclass(frozen=True)
class InheritLink:
    parent: Named
    kind: str = "polymorphic"  # polymorphic (solid) | implementation (dotted)
    eye_open: bool = False

    @property
    def polymorphic(self) -> bool:
        return self.kind == "polymorphic"


@dataclass(frozen=True)
class PrototypeHeader:
    name: FormattedName
    generics: tuple[FormattedName, ...] = ()
    inherit_links: tuple[InheritLink, ...] = ()
    slots: tuple[Slot, ...] = ()
    comments: tuple[str, ...] = ()
    source: str | None = field(default=None, compare=False)

    @property
    def canonical(self) -> str:
        return self.name.canonical


# -- lexing the tagged header regions -----------------------------------------

# lexemes: ("word", FormattedName) | ("punct", ch) | ("recv", ReceiverKind)
#          | ("exact",) | ("assoc", Assoc, prio) | ("comm",)


def _lex_region(tokens: Sequence[TagToken]) -> list[tuple]:
    lexemes: list[tuple] = []
    word: list[tuple[str, Style]] = []
    style = Style.Normal

    def flush():
        if word:
            lexemes.append(("word", FormattedName(tuple(word))))
            word.clear()

    for tok in tokens:
        if isinstance(tok, Text):
            for ch in tok.run:
                if ch.isspace():
                    flush()
                elif ch in PUNCT:
                    flush()
                    lexemes.append(("punct", ch))
                else:
                    word.append((ch, style))
            continue
        k = tok.kind
        if k is TagKind.SuperscriptStart:
            style = Style.Superscript
        elif k is TagKind.SubscriptStart:
            style = Style.Subscript
        elif k in (TagKind.SuperscriptStop, TagKind.SubscriptStop):
            style = Style.Normal
        elif k in (TagKind.ReceiverShared, TagKind.ReceiverCloned):
            flush()
            lexemes.append(("recv", ReceiverKind.Shared if k is TagKind.ReceiverShared else ReceiverKind.Cloned))
        elif k is TagKind.ExactType:
            flush()
            lexemes.append(("exact",))
        elif k in (TagKind.LeftAssoc, TagKind.RightAssoc):
            flush()
            lexemes.append(("assoc", Assoc.Left if k is TagKind.LeftAssoc else Assoc.Right, tok.priority))
        elif k is TagKind.CommutativityOn:
            flush()
            lexemes.append(("comm",))
        else:
            raise MalformedHeader(f"tag {k.name} is not allowed here", offset=tok.byte_offset)
    flush()
    return lexemes


class _Cursor:
    def __init__(self, lexemes: list[tuple]):
        self.lx = lexemes
        self.i = 0

    def peek(self, k: int = 0):
        j = self.i + k
        return self.lx[j] if j < len(self.lx) else None

    def next(self):
        item = self.peek()
        self.i += 1
        return item

    def at_punct(self, ch: str, k: int = 0) -> bool:
        item = self.peek(k)
        return item is not None and item[0] == "punct" and item[1] == ch

    def expect_punct(self, ch: str):
        if not self.at_punct(ch):
            raise MalformedHeader(f"expected {ch!r}, found {self._describe(self.peek())}")
        self.i += 1

    @staticmethod
    def _describe(item) -> str:
        if item is None:
            return "end of signature"
        if item[0] in ("word", "punct"):
            return repr(str(item[1]))
        return item[0]

    def done(self) -> bool:
        return self.i >= len(self.lx)


def _read_words(cur: _Cursor) -> FormattedName | None:
    name = None
    while cur.peek() is not None and cur.peek()[0] == "word":
        w = cur.next()[1]
        name = w if name is None else name.join(w)
    return name


def _parse_type(cur: _Cursor) -> TypeRef:
    item = cur.peek()
    if item is None:
        raise MalformedHeader("expected a type")
    if item[0] == "exact":
        cur.next()
        return ExactReceiver()
    if cur.at_punct("("):
        cur.next()
        elements = [_parse_type(cur)]
        while cur.at_punct(","):
            cur.next()
            elements.append(_parse_type(cur))
        cur.expect_punct(")")
        return elements[0] if len(elements) == 1 else TupleType(tuple(elements))
    if cur.at_punct("{"):
        cur.next()
        locals_: list[TypeRef] = []
        if cur.at_punct("["):
            cur.next()
            locals_.append(_parse_type(cur))
            while cur.at_punct(","):
                cur.next()
                locals_.append(_parse_type(cur))
            cur.expect_punct("]")
        result = None if cur.at_punct("}") else _parse_type(cur)
        cur.expect_punct("}")
        return BlockType(tuple(locals_), result)
    name = _read_words(cur)
    if name is None:
        raise MalformedHeader(f"expected a type name, found {cur._describe(item)}")
    params: list[TypeRef] = []
    if cur.at_punct("("):
        cur.next()
        params.append(_parse_type(cur))
        while cur.at_punct(","):
            cur.next()
            params.append(_parse_type(cur))
        cur.expect_punct(")")
    return Named(name, tuple(params))


def parse_type_lexemes(lexemes: list[tuple]) -> TypeRef:
    cur = _Cursor(lexemes)
    t = _parse_type(cur)
    if not cur.done():
        raise MalformedHeader(f"unexpected {cur._describe(cur.peek())} after type")
    return t


def parse_type_text(text: str) -> TypeRef:
    """Parse a type written as plain text (``⊚`` for the exact receiver type)."""
    return parse_type_lexemes(_lex_plain_with_exact(text))


def _lex_plain_with_exact(text: str) -> list[tuple]:
    out: list[tuple] = []
    for i, part in enumerate(text.split("⊚")):
        if i:
            out.append(("exact",))
        out.extend(_lex_region([Text(part)]))
    return out


def parse_signature(tokens: Sequence[TagToken]) -> SlotSignature:
    """Parse the tokens between SlotBegin and the next zone tag."""
    cur = _Cursor(_lex_region(tokens))
    keywords: list[FormattedName] = []
    params: list[Param] = []
    receiver: tuple[int, ReceiverKind, bool] | None = None
    return_type: TypeRef | None = None
    assoc: tuple[Assoc, int] | None = None
    commutative = False
    last = None  # "kw" | "recv" | "param"

    def add_word(w: FormattedName):
        nonlocal last
        if last == "kw":
            keywords[-1] = keywords[-1].join(w)
        else:
            keywords.append(w)
        last = "kw"

    def set_receiver(kind: ReceiverKind, delayed: bool):
        nonlocal receiver, last
        if receiver is not None:
            raise MultipleReceiverMarks("a signature has exactly one receiver mark")
        if last == "param":
            raise MalformedHeader("the receiver cannot directly follow a parameter")
        receiver = (len(keywords), kind, delayed)
        last = "recv"

    def add_param(p: Param):
        nonlocal last
        if last != "kw":
            raise MalformedHeader(f"parameter {p.name.canonical!r} must follow a keyword")
        params.append(replace(p, after=len(keywords) - 1))
        last = "param"

    while not cur.done():
        item = cur.peek()
        kind = item[0]
        if kind == "word":
            add_word(cur.next()[1])
        elif kind == "recv":
            cur.next()
            set_receiver(item[1], False)
        elif kind == "assoc":
            cur.next()
            if assoc is not None:
                raise MalformedHeader("more than one associativity mark")
            assoc = (item[1], item[2])
        elif kind == "comm":
            cur.next()
            commutative = True
        elif kind == "exact":
            raise MalformedHeader("exact receiver type outside a type position")
        elif cur.at_punct("{"):
            nxt = cur.peek(1)
            if nxt is not None and nxt[0] == "recv" and cur.at_punct("}", 2):
                cur.i += 3
                set_receiver(nxt[1], True)
                continue
            cur.next()
            block_locals: list[tuple[FormattedName, TypeRef]] = []
            if cur.at_punct("["):
                cur.next()
                while True:
                    lname = _read_words(cur)
                    if lname is None:
                        raise MalformedHeader("expected a block local name")
                    cur.expect_punct(":")
                    block_locals.append((lname, _parse_type(cur)))
                    if cur.at_punct(","):
                        cur.next()
                        continue
                    break
                cur.expect_punct("]")
            pname = _read_words(cur)
            if pname is None:
                raise MalformedHeader("expected a parameter name")
            ptype = None
            if cur.at_punct(":"):
                cur.next()
                ptype = _parse_type(cur)
            cur.expect_punct("}")
            add_param(Param(pname, ptype, True, 0, tuple(block_locals)))
        elif cur.at_punct("("):
            cur.next()
            pname = _read_words(cur)
            if pname is None:
                raise MalformedHeader("expected a parameter name")
            cur.expect_punct(":")
            ptype = _parse_type(cur)
            cur.expect_punct(")")
            add_param(Param(pname, ptype, False))
        elif cur.at_punct(":"):
            cur.next()
            return_type = _parse_type(cur)
            # operator marks may trail the return type
            while not cur.done():
                tail = cur.next()
                if tail[0] == "assoc" and assoc is None:
                    assoc = (tail[1], tail[2])
                elif tail[0] == "comm":
                    commutative = True
                else:
                    raise MalformedHeader(f"unexpected {cur._describe(tail)} after return type")
        else:
            raise MalformedHeader(f"unexpected {cur._describe(item)} in signature")

    if receiver is None:
        raise MissingReceiverMark("a signature needs a receiver mark")
    if not keywords:
        raise MalformedHeader("a signature needs at least one keyword")
    position, rkind, rdelayed = receiver

    operator = None
    if assoc is not None:
        if len(keywords) != 1:
            raise OperatorWithManyKeywords(
                f"operator slots take a single keyword, got {[k.canonical for k in keywords]}"
            )
        if position == 0 and len(params) == 1:
            arity = Arity.BinaryInfix
        elif position == 0 and not params:
            arity = Arity.UnaryPostfix
        elif position == 1 and not params:
            arity = Arity.UnaryPrefix
        else:
            raise MalformedHeader("operator slots are binary infix or unary pre/postfix")
        operator = OperatorInfo(assoc[1], assoc[0], commutative, arity)
    elif commutative:
        raise MalformedHeader("commutativity applies to operator slots only")

    return SlotSignature(
        keywords=tuple(keywords),
        receiver_position=position,
        receiver_kind=rkind,
        receiver_delayed=rdelayed,
        params=tuple(params),
        return_type=return_type,
        operator=operator,
    )


# -- file reader ---------------------------------------------------------------

_ZONE_END = {
    TagKind.SlotBegin,
    TagKind.CommentBegin,
    TagKind.InheritLinkSolid,
    TagKind.InheritLinkDotted,
    TagKind.AccessSpec,
    TagKind.PreconditionBegin,
    TagKind.PostconditionBegin,
    TagKind.BodyBegin,
    TagKind.PrototypeBegin,
}
_BODY_END = {TagKind.SlotBegin, TagKind.CommentBegin}


def _locate(tokens: Sequence[TagToken]) -> list[tuple[int, int]]:
    """(line, column) of every token start, 1-based, columns in code points."""
    out = []
    line, col = 1, 1
    for tok in tokens:
        out.append((line, col))
        if isinstance(tok, Text):
            nl = tok.run.count("\n")
            if nl:
                line += nl
                col = len(tok.run) - tok.run.rfind("\n")
            else:
                col += len(tok.run)
        else:
            col += 2 if tok.priority is not None else 1
    return out


def _tag_is(tok: TagToken, kinds) -> bool:
    return isinstance(tok, Tag) and tok.kind in kinds


def _text_only(tokens: Sequence[TagToken], what: str) -> str:
    parts = []
    for tok in tokens:
        if isinstance(tok, Tag):
            raise TagInBody(f"tag {tok.kind.name} inside {what}", offset=tok.byte_offset)
        parts.append(tok.run)
    return "".join(parts)


def _parse_proto_name(tokens: Sequence[TagToken]) -> tuple[FormattedName, tuple[FormattedName, ...]]:
    cur = _Cursor(_lex_region(tokens))
    name = _read_words(cur)
    if name is None:
        raise MalformedHeader("prototype name is missing")
    generics: list[FormattedName] = []
    if cur.at_punct("("):
        cur.next()
        while True:
            g = _read_words(cur)
            if g is None:
                raise MalformedHeader("expected a generic parameter name")
            generics.append(g)
            if cur.at_punct(","):
                cur.next()
                continue
            break
        cur.expect_punct(")")
    if not cur.done():
        raise MalformedHeader(f"unexpected {cur._describe(cur.peek())} after prototype name")
    return name, tuple(generics)


def read_prototype(tokens: Sequence[TagToken], source: str | None = None) -> PrototypeHeader:
    tokens = list(tokens)
    where = _locate(tokens)
    n = len(tokens)
    i = 0

    def zone(start: int, ends) -> int:
        j = start
        while j < n and not _tag_is(tokens[j], ends):
            j += 1
        return j

    def skip_blank(j: int) -> int:
        while j < n and isinstance(tokens[j], Text) and not tokens[j].run.strip():
            j += 1
        return j

    comments: list[str] = []

    def read_comment(j: int) -> int:
        k = j + 1
        while k < n and not _tag_is(tokens[k], {TagKind.CommentEnd}):
            k += 1
        if k >= n:
            raise MalformedHeader("comment is not closed", offset=tokens[j].byte_offset)
        comments.append(_text_only(tokens[j + 1:k], "a comment"))
        return k + 1

    i = skip_blank(i)
    while i < n and _tag_is(tokens[i], {TagKind.CommentBegin}):
        i = skip_blank(read_comment(i))
    if i >= n or not _tag_is(tokens[i], {TagKind.PrototypeBegin}):
        raise MalformedHeader("file must start with a PrototypeBegin tag")
    j = zone(i + 1, _ZONE_END)
    name, generics = _parse_proto_name(tokens[i + 1:j])
    i = j

    links: list[InheritLink] = []
    slots: list[Slot] = []
    seen: dict[tuple[str, ...], list[SlotSignature]] = {}

    while i < n:
        tok = tokens[i]
        if isinstance(tok, Text):
            if tok.run.strip():
                raise MalformedHeader(f"stray text {tok.run.strip()[:20]!r} in header")
            i += 1
            continue
        k = tok.kind
        if k is TagKind.CommentBegin:
            i = read_comment(i)
        elif k in (TagKind.InheritLinkSolid, TagKind.InheritLinkDotted):
            if slots:
                raise MalformedHeader("inheritance links must precede slots", offset=tok.byte_offset)
            j = zone(i + 1, _ZONE_END)
            region = tokens[i + 1:j]
            eye = False
            if region and _tag_is(region[0], {TagKind.EyeOpen}):
                eye = True
                region = region[1:]
            parent = parse_type_lexemes(_lex_region(region))
            if not isinstance(parent, Named):
                raise MalformedHeader("a parent must be a named prototype", offset=tok.byte_offset)
            kind = "polymorphic" if k is TagKind.InheritLinkSolid else "implementation"
            links.append(InheritLink(parent, kind, eye))
            i = j
        elif k is TagKind.SlotBegin:
            j = zone(i + 1, _ZONE_END)
            try:
                sig = parse_signature(tokens[i + 1:j])
            except MalformedHeader as exc:
                if exc.offset is None:
                    exc.offset = tok.byte_offset
                raise
            i = j
            access = Access()
            pres: list[str] = []
            posts: list[str] = []
            body = None
            body_line = body_col = 0
            if i < n and _tag_is(tokens[i], {TagKind.AccessSpec}):
                j = zone(i + 1, _ZONE_END)
                access = Access.parse(_text_only(tokens[i + 1:j], "an access specification"))
                i = j
            while i < n and _tag_is(tokens[i], {TagKind.PreconditionBegin, TagKind.PostconditionBegin}):
                j = zone(i + 1, _ZONE_END)
                text = _text_only(tokens[i + 1:j], "an assertion")
                (pres if tokens[i].kind is TagKind.PreconditionBegin else posts).append(text)
                i = j
            if i < n and _tag_is(tokens[i], {TagKind.BodyBegin}):
                j = zone(i + 1, _BODY_END)
                body_line, body_col = where[i + 1] if i + 1 < n else (where[i][0], where[i][1] + 1)
                body = _text_only(tokens[i + 1:j], "a slot body")
                i = j
            sig = replace(sig, access=access, preconditions=tuple(pres), postconditions=tuple(posts))
            _check_duplicate(seen, sig, tok.byte_offset)
            slots.append(Slot(sig, body, body_line, body_col))
        elif k is TagKind.PrototypeBegin:
            raise MalformedHeader("only one prototype per file", offset=tok.byte_offset)
        else:
            raise MalformedHeader(f"unexpected tag {k.name}", offset=tok.byte_offset)

    return PrototypeHeader(name, generics, tuple(links), tuple(slots), tuple(comments), source)


def _check_duplicate(seen: dict, sig: SlotSignature, offset: int) -> None:
    others = seen.setdefault(sig.selector, [])
    for other in others:
        if sig.operator is None or other.operator is None or sig.operator.arity is other.operator.arity:
            raise DuplicateSlotKeywords(f"slot {sig.pattern_text!r} is declared twice", offset=offset)
    others.append(sig)


# -- re-encoding -------------------------------------------------------------

def _name_tokens(name: FormattedName) -> list[TagToken]:
    out: list[TagToken] = []
    for text, style in name.segments:
        if style is Style.Superscript:
            out += [Tag(TagKind.SuperscriptStart), Text(text), Tag(TagKind.SuperscriptStop)]
        elif style is Style.Subscript:
            out += [Tag(TagKind.SubscriptStart), Text(text), Tag(TagKind.SubscriptStop)]
        else:
            out.append(Text(text))
    return out


def _type_tokens(t: TypeRef) -> list[TagToken]:
    if isinstance(t, ExactReceiver):
        return [Tag(TagKind.ExactType)]
    if isinstance(t, TupleType):
        out: list[TagToken] = [Text("(")]
        for i, e in enumerate(t.elements):
            if i:
                out.append(Text(", "))
            out += _type_tokens(e)
        return out + [Text(")")]
    if isinstance(t, BlockType):
        out = [Text("{")]
        if t.locals:
            out.append(Text("["))
            for i, e in enumerate(t.locals):
                if i:
                    out.append(Text(", "))
                out += _type_tokens(e)
            out.append(Text("] "))
        if t.result is not None:
            out += _type_tokens(t.result)
        return out + [Text("}")]
    out = _name_tokens(t.name)
    if t.params:
        out.append(Text("("))
        for i, p in enumerate(t.params):
            if i:
                out.append(Text(", "))
            out += _type_tokens(p)
        out.append(Text(")"))
    return out


def type_text(t: TypeRef) -> str:
    return str(t)


def signature_tokens(sig: SlotSignature) -> list[TagToken]:
    recv_tag = Tag(TagKind.ReceiverShared if sig.receiver_kind is ReceiverKind.Shared else TagKind.ReceiverCloned)
    parts: list[list[TagToken]] = []
    params_by_kw: dict[int, list[Param]] = {}
    for p in sig.params:
        params_by_kw.setdefault(p.after, []).append(p)

    def receiver_part() -> list[TagToken]:
        return [Text("{"), recv_tag, Text("}")] if sig.receiver_delayed else [recv_tag]

    for i, kw in enumerate(sig.keywords):
        if sig.receiver_position == i:
            parts.append(receiver_part())
        parts.append(_name_tokens(kw))
        for p in params_by_kw.get(i, []):
            if p.delayed:
                part: list[TagToken] = [Text("{")]
                if p.block_locals:
                    part.append(Text("["))
                    for j, (lname, ltype) in enumerate(p.block_locals):
                        if j:
                            part.append(Text(", "))
                        part += _name_tokens(lname) + [Text(": ")] + _type_tokens(ltype)
                    part.append(Text("] "))
                part += _name_tokens(p.name)
                if p.type is not None:
                    part += [Text(": ")] + _type_tokens(p.type)
                part.append(Text("}"))
            else:
                part = [Text("(")] + _name_tokens(p.name) + [Text(": ")] + _type_tokens(p.type) + [Text(")")]
            parts.append(part)
    if sig.receiver_position == len(sig.keywords):
        parts.append(receiver_part())
    out: list[TagToken] = []
    for i, part in enumerate(parts):
        if i:
            out.append(Text(" "))
        out += part
    if sig.return_type is not None:
        out += [Text(" : ")] + _type_tokens(sig.return_type)
    if sig.operator is not None:
        kind = TagKind.LeftAssoc if sig.operator.assoc is Assoc.Left else TagKind.RightAssoc
        out += [Text(" "), Tag(kind, sig.operator.priority)]
        if sig.operator.commutative:
            out.append(Tag(TagKind.CommutativityOn))
    return _merge_text(out)


def _merge_text(tokens: Iterable[TagToken]) -> list[TagToken]:
    out: list[TagToken] = []
    for tok in tokens:
        if isinstance(tok, Text):
            if not tok.run:
                continue
            if out and isinstance(out[-1], Text):
                out[-1] = Text(out[-1].run + tok.run)
                continue
        out.append(tok)
    return out


def encode_header(header: PrototypeHeader) -> list[TagToken]:
    """Canonical token layout for a header; ``read_prototype`` inverts it."""
    out: list[TagToken] = [Tag(TagKind.PrototypeBegin)] + _name_tokens(header.name)
    if header.generics:
        out.append(Text("("))
        for i, g in enumerate(header.generics):
            if i:
                out.append(Text(", "))
            out += _name_tokens(g)
        out.append(Text(")"))
    out.append(Text("\n"))
    for link in header.inherit_links:
        out.append(Tag(TagKind.InheritLinkSolid if link.polymorphic else TagKind.InheritLinkDotted))
        if link.eye_open:
            out.append(Tag(TagKind.EyeOpen))
        out += _type_tokens(link.parent) + [Text("\n")]
    for c in header.comments:
        out += [Tag(TagKind.CommentBegin), Text(c), Tag(TagKind.CommentEnd), Text("\n")]
    for slot in header.slots:
        sig = slot.signature
        out.append(Tag(TagKind.SlotBegin))
        out += signature_tokens(sig)
        out.append(Text("\n"))
        if sig.access != Access():
            out += [Tag(TagKind.AccessSpec), Text(str(sig.access) + "\n")]
        for text in sig.preconditions:
            out += [Tag(TagKind.PreconditionBegin), Text(text)]
        for text in sig.postconditions:
            out += [Tag(TagKind.PostconditionBegin), Text(text)]
        if slot.raw_body is not None:
            out += [Tag(TagKind.BodyBegin), Text(slot.raw_body)]
    return _merge_text(out)


def starts_uppercase(text: str) -> bool:
    return bool(text) and unicodedata.category(text[0]) == "Lu"
