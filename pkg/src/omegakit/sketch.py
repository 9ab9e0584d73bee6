"""A line-oriented, human-typable notation that compiles to ``.omg`` bytes.

The real editor stores tags directly; this notation exists so prototype
files can be written and reviewed in an ordinary text editor::

    @prototype Pixel
    @inherit Clone
    @slot ◉ x : ℤ
    @slot ● x (px: ℤ) y (py: ℤ) : ⊚
    @body
    x ← px
    y ← py
    ●

Markers outside bodies: ``●`` shared receiver, ``◉`` cloned receiver,
``⊚`` exact receiver type, ``«L7»``/``«R7»`` associativity and priority,
``«C»`` commutativity, ``_{..}``/``^{..}`` subscript/superscript.
Directives: ``@prototype``, ``@inherit`` / ``@inherit-impl`` (append
``+eye`` for an open eye), ``@comment``, ``@slot``, ``@access``, ``@pre``,
``@post``, ``@body``.  Continuation lines belong to the previous directive.
"""

from __future__ import annotations

import re
import sys
from pathlib import Path

from .tags import Tag, TagKind, TagToken, Text, encode_stream

__all__ = ["markup_tokens", "sketch_tokens", "compile_sketch"]

_MARK_RE = re.compile(r"«([LR])(\d)»|«C»|_\{([^}]*)\}|\^\{([^}]*)\}|[●◉⊚←]")


def markup_tokens(text: str) -> list[TagToken]:
    out: list[TagToken] = []

    def emit_text(s: str):
        if not s:
            return
        if out and isinstance(out[-1], Text):
            out[-1] = Text(out[-1].run + s)
        else:
            out.append(Text(s))

    pos = 0
    for m in _MARK_RE.finditer(text):
        emit_text(text[pos:m.start()])
        pos = m.end()
        g = m.group()
        if m.group(1):
            kind = TagKind.LeftAssoc if m.group(1) == "L" else TagKind.RightAssoc
            out.append(Tag(kind, int(m.group(2))))
        elif g == "«C»":
            out.append(Tag(TagKind.CommutativityOn))
        elif m.group(3) is not None:
            out += [Tag(TagKind.SubscriptStart)]
            emit_text(m.group(3))
            out.append(Tag(TagKind.SubscriptStop))
        elif m.group(4) is not None:
            out += [Tag(TagKind.SuperscriptStart)]
            emit_text(m.group(4))
            out.append(Tag(TagKind.SuperscriptStop))
        else:
            out.append(Tag({
                "●": TagKind.ReceiverShared,
                "◉": TagKind.ReceiverCloned,
                "⊚": TagKind.ExactType,
                "←": TagKind.AssignmentArrow,
            }[g]))
    emit_text(text[pos:])
    return out


def _directives(source: str) -> list[tuple[str, str, list[str]]]:
    items: list[tuple[str, str, list[str]]] = []
    for lineno, line in enumerate(source.split("\n"), 1):
        if line.startswith("@"):
            name, _, rest = line[1:].partition(" ")
            items.append((name, rest, []))
        elif items:
            items[-1][2].append(line)
        elif line.strip():
            raise ValueError(f"line {lineno}: text before the first directive")
    return items


def _block(inline: str, lines: list[str]) -> str:
    lines = list(lines)
    while lines and not lines[-1].strip():
        lines.pop()
    parts = ([inline] if inline.strip() else []) + lines
    return "".join(p + "\n" for p in parts)


def sketch_tokens(source: str) -> list[TagToken]:
    out: list[TagToken] = []
    for name, rest, more in _directives(source):
        if name == "prototype":
            out += [Tag(TagKind.PrototypeBegin)] + markup_tokens(rest.strip() + "\n")
        elif name in ("inherit", "inherit-impl"):
            target = rest.strip()
            eye = target.endswith("+eye")
            if eye:
                target = target[: -len("+eye")].strip()
            out.append(Tag(TagKind.InheritLinkSolid if name == "inherit" else TagKind.InheritLinkDotted))
            if eye:
                out.append(Tag(TagKind.EyeOpen))
            out += markup_tokens(target + "\n")
        elif name == "comment":
            out += [Tag(TagKind.CommentBegin), Text(_block(rest, more)), Tag(TagKind.CommentEnd), Text("\n")]
        elif name == "slot":
            out += [Tag(TagKind.SlotBegin)] + markup_tokens(rest.strip() + "\n")
        elif name == "access":
            out += [Tag(TagKind.AccessSpec), Text(rest.strip() + "\n")]
        elif name in ("pre", "post"):
            kind = TagKind.PreconditionBegin if name == "pre" else TagKind.PostconditionBegin
            out += [Tag(kind), Text(_block(rest, more))]
        elif name == "body":
            out.append(Tag(TagKind.BodyBegin))
            body = _block(rest, more)
            if body:
                out.append(Text(body))
        else:
            raise ValueError(f"unknown directive @{name}")
    merged: list[TagToken] = []
    for tok in out:
        if isinstance(tok, Text) and merged and isinstance(merged[-1], Text):
            merged[-1] = Text(merged[-1].run + tok.run)
        elif not (isinstance(tok, Text) and not tok.run):
            merged.append(tok)
    return merged


def compile_sketch(source: str) -> bytes:
    return encode_stream(sketch_tokens(source))


def main(argv: list[str] | None = None) -> int:
    """``python -m omegakit.sketch SRC_DIR OUT_DIR``: compile every ``*.sketch`` file."""
    argv = sys.argv[1:] if argv is None else argv
    if len(argv) != 2:
        print("usage: python -m omegakit.sketch SRC_DIR OUT_DIR", file=sys.stderr)
        return 2
    src, dst = Path(argv[0]), Path(argv[1])
    for path in sorted(src.rglob("*.sketch")):
        target = dst / path.relative_to(src).with_suffix(".omg")
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_bytes(compile_sketch(path.read_text(encoding="utf-8")))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
