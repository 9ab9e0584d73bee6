"""``omega``: command-line front end.

Exit status is 0 on success, 1 when diagnostics were printed and 2 for
usage or I/O errors.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path
from typing import Sequence

from .body_parser import BodyParser, body_context
from .checker import Diagnostic, Severity, check_environment
from .completion import LayoutStats, complete
from .environment import Environment, lookup_order
from .errors import OmegaError
from .glyph import Box, hbox, layout, measure_text, render_svg
from .header import ARG, RECEIVER, Arity, read_prototype
from .loader import CORPUS_DIR, MANIFEST_NAME, Loaded, load_roots, offset_position, read_manifest
from .syntax import (
    Assign, Block, BlockCall, DecLit, ExternalLit, Grp, IntLit, LocalRead, MatrixLit,
    Node, OpApply, SelfRef, Send, StrLit, TupleExpr, TypeLit, node_label,
)
from .tags import Tag, TagKind, Text, decode_stream, encode_stream, format_listing, parse_listing

__all__ = ["run", "main", "render_expression", "canonical_header"]


class UsageError(Exception):
    pass


# -- environment selection --------------------------------------------------------

def _roots(args) -> list[Path]:
    """--manifest, then explicit roots, then ./omega.env, then the bundled corpus."""
    if getattr(args, "manifest", None):
        path = Path(args.manifest)
        if not path.is_file():
            raise UsageError(f"manifest {path} not found")
        return read_manifest(path)
    explicit = list(getattr(args, "root", None) or [])
    if getattr(args, "directory", None):
        explicit.append(args.directory)
    if explicit:
        return [Path(r) for r in explicit]
    if Path(MANIFEST_NAME).is_file():
        return read_manifest(MANIFEST_NAME)
    return read_manifest(CORPUS_DIR / MANIFEST_NAME)


def _display(path: str | None) -> str | None:
    if path is None:
        return None
    try:
        return os.path.relpath(path)
    except ValueError:
        return path


def _print_diagnostics(diags: Sequence[Diagnostic], out) -> None:
    for d in sorted(diags, key=Diagnostic.sort_key):
        shown = Diagnostic(d.severity, d.code, d.message, _display(d.file), d.line, d.col, d.span, d.related)
        print(shown.format(), file=out)


def _environment(args, out) -> tuple[Environment | None, Loaded]:
    loaded = load_roots(_roots(args))
    if loaded.diagnostics:
        _print_diagnostics(loaded.diagnostics, out)
    return loaded.env, loaded


# -- fmt -----------------------------------------------------------------------------

_SECTION_START = {
    TagKind.PrototypeBegin: 0,
    TagKind.InheritLinkSolid: 1,
    TagKind.InheritLinkDotted: 1,
    TagKind.CommentBegin: 2,
    TagKind.SlotBegin: 3,
}


def canonical_header(data: bytes) -> bytes:
    """Reorder sections: prototype, inheritance links, comments, then slots
    sorted by pattern.  Link order is kept since it fixes the lookup order;
    every section keeps its bytes."""
    tokens = decode_stream(data)
    header = read_prototype(tokens)
    preamble: list = []
    sections: list[tuple[int, list]] = []
    in_comment = False
    for tok in tokens:
        starts = isinstance(tok, Tag) and tok.kind in _SECTION_START and not in_comment
        if isinstance(tok, Tag) and tok.kind is TagKind.CommentBegin:
            in_comment = True
        elif isinstance(tok, Tag) and tok.kind is TagKind.CommentEnd:
            in_comment = False
        if starts:
            sections.append((_SECTION_START[tok.kind], [tok]))
        elif sections:
            sections[-1][1].append(tok)
        else:
            preamble.append(tok)
    slots = iter(header.slots)
    keyed = []
    for order, (rank, toks) in enumerate(sections):
        key = next(slots).signature.pattern_text if rank == 3 else ""
        if not (toks and isinstance(toks[-1], Text) and toks[-1].run.endswith("\n")):
            toks = toks + [Text("\n")]
        keyed.append(((rank, key, order), toks))
    out = list(preamble)
    for _, toks in sorted(keyed, key=lambda kv: kv[0]):
        for tok in toks:
            if isinstance(tok, Text) and out and isinstance(out[-1], Text):
                out[-1] = Text(out[-1].run + tok.run)
            else:
                out.append(tok)
    return encode_stream(out)


# -- render --------------------------------------------------------------------------

def _text(s: str, sp: float) -> Box:
    return measure_text(s, sp)


def _paren(box: Box, sp: float) -> Box:
    return hbox([_text("(", sp), box, _text(")", sp)])


def render_expression(node: Node, env: Environment, sp: float) -> Box:
    """Box tree for a typed expression; graphical slots use their glyph."""
    gap = 0.6 * sp

    def sub(child: Node) -> Box:
        box = go(child)
        if isinstance(child, (OpApply, BlockCall)) or (isinstance(child, Send) and child.signature.glyph_key not in env.glyphs and child.args):
            return _paren(box, sp)
        return box

    def go(n: Node) -> Box:
        if isinstance(n, Send):
            operands = {-1: n.receiver, **dict(enumerate(n.args))}
            prog = env.glyphs.get(n.signature.glyph_key)
            if prog is not None:
                return layout(prog, [go(operands[c]) for c in n.signature.placeholder_order], sp)
            parts, args = [], iter(n.args)
            for item in n.signature.pattern:
                if item is RECEIVER:
                    if not n.implicit_receiver:
                        parts.append(sub(n.receiver))
                elif item is ARG:
                    parts.append(sub(next(args)))
                else:
                    parts.append(_text(item, sp))
            return hbox(parts, gap)
        if isinstance(n, OpApply):
            ops = [sub(o) for o in n.operands]
            kw = _text(n.keyword, sp)
            if len(ops) == 2:
                return hbox([ops[0], kw, ops[1]], gap)
            if n.signature.operator.arity is Arity.UnaryPrefix:
                return hbox([kw, ops[0]], gap)
            return hbox([ops[0], kw], gap)
        if isinstance(n, Grp):
            parts = []
            for k, s in enumerate(n.statements):
                if k:
                    parts.append(_text(",", sp))
                parts.append(go(s))
            return hbox(parts, gap)
        if isinstance(n, Block):
            return hbox([_text("{", sp), go(n.body), _text("}", sp)], gap)
        if isinstance(n, TupleExpr):
            parts = [_text("(", sp)]
            for k, e in enumerate(n.elements):
                if k:
                    parts.append(_text(",", sp))
                parts.append(go(e))
            return hbox(parts + [_text(")", sp)], gap)
        if isinstance(n, BlockCall):
            return hbox([_text(n.target.name, sp)] + [sub(a) for a in n.args], gap)
        return _text(node_label(n), sp)

    return go(node)


# -- commands ------------------------------------------------------------------------

def _cmd_check(args, out, err) -> int:
    env, loaded = _environment(args, out)
    status = 1 if loaded.diagnostics else 0
    if env is None:
        return 1
    result = check_environment(env)
    _print_diagnostics(result.diagnostics, out)
    return 1 if result.diagnostics or status else 0


def _cmd_fmt(args, out, err) -> int:
    data = _read_bytes(args.file)
    try:
        tokens = decode_stream(data)
        result = canonical_header(data) if args.canonical_header else encode_stream(tokens)
    except OmegaError as exc:
        line, col = offset_position(data, exc.offset)
        print(Diagnostic(Severity.Error, exc.code, exc.message, _display(args.file), line, col).format(), file=out)
        return 1
    _write_bytes(args.output, result, out)
    return 0


def _cmd_mro(args, out, err) -> int:
    env, loaded = _environment(args, out)
    if env is None:
        return 1
    if args.proto not in env.prototypes:
        print(f"error[UnknownPrototype]: no prototype named {args.proto!r}", file=out)
        return 1
    for k, name in enumerate(lookup_order(env, args.proto), 1):
        print(f"{k} {name}" if args.numbered else name, file=out)
    return 1 if loaded.diagnostics else 0


def _cmd_ops(args, out, err) -> int:
    env, loaded = _environment(args, out)
    if env is None:
        return 1
    for keyword, decls in env.operators.items():
        for proto, sig in decls:
            op = sig.operator
            print(f"{keyword} {op.priority} {op.assoc.value} {str(op.commutative).lower()} {proto}", file=out)
    return 1 if loaded.diagnostics else 0


def _default_proto(env: Environment, requested: str | None) -> str:
    if requested:
        if requested not in env.prototypes:
            raise UsageError(f"no prototype named {requested!r}")
        return requested
    return "Main" if "Main" in env.prototypes else sorted(env.prototypes)[0]


def _cmd_render(args, out, err) -> int:
    env, loaded = _environment(args, out)
    if env is None:
        return 1
    proto = _default_proto(env, args.proto)
    parser = BodyParser(env, body_context(env, proto, None))
    grp = parser.parse(args.expr)
    if parser.problems:
        for p in parser.problems:
            col = (p.span[0] if p.span else 0) + 1
            print(f"<expr>:1:{col}: error[{p.code}]: {p.message}", file=out)
        return 1
    try:
        box = render_expression(grp if len(grp.statements) != 1 else grp.statements[0], env, args.sp)
    except OmegaError as exc:
        print(f"<expr>:1:1: error[{exc.code}]: {exc.message}", file=out)
        return 1
    svg = render_svg(box)
    if args.output in (None, "-"):
        out.write(svg)
    else:
        try:
            Path(args.output).write_text(svg, encoding="utf-8")
        except OSError as exc:
            raise UsageError(f"cannot write {args.output}: {exc.strerror}") from None
    return 1 if loaded.diagnostics else 0


def _phrase_before(text: str, pos: int) -> tuple[int, list[str]]:
    """Start of the statement holding ``pos`` and the words typed since."""
    start = pos
    while start > 0 and text[start - 1] not in "\n,←{}[]()":
        start -= 1
    return start, text[start:pos].split()


def _cmd_complete(args, out, err) -> int:
    env, loaded = _environment(args, out)
    if env is None:
        return 1
    path = Path(args.file).resolve()
    data = _read_bytes(args.file)
    if not 0 <= args.offset <= len(data):
        raise UsageError(f"offset {args.offset} is outside the file")
    try:
        upto = data[:args.offset].decode("utf-8")
    except UnicodeDecodeError:
        raise UsageError(f"offset {args.offset} is not on a character boundary") from None
    pos = len(upto)
    text = data.decode("utf-8", errors="replace")
    header = next((h for h in env.prototypes.values() if h.source and Path(h.source).resolve() == path), None)
    if header is None:
        header = read_prototype(decode_stream(data), source=str(path))
    line_starts = [0]
    for k, ch in enumerate(text):
        if ch == "\n":
            line_starts.append(k + 1)
    for slot in header.slots:
        if slot.raw_body is None or not slot.body_line:
            continue
        begin = line_starts[slot.body_line - 1] + slot.body_col - 1
        if begin <= pos <= begin + len(slot.raw_body):
            break
    else:
        print(f"error[NotInBody]: offset {args.offset} is not inside a slot body", file=out)
        return 1
    local_pos = pos - begin
    start, words = _phrase_before(slot.raw_body, local_pos)
    if text[pos - 1:pos].isspace() or pos == begin:
        words.append("")
    proto = header.canonical if header.canonical in env.prototypes else _default_proto(env, None)
    ctx = body_context(env, proto, slot.signature)
    # declarations above the cursor's line enter the scope
    preceding = slot.raw_body[:slot.raw_body.rfind("\n", 0, start) + 1]
    BodyParser(env, ctx).parse(preceding)
    stats = LayoutStats.load(Path(loaded.roots[0]) / "omega.stats") if loaded.roots else None
    typed = [w for w in words if w]
    if not typed:
        return 0
    for c in complete(env, ctx, typed, stats):
        print("\t".join([c.text, c.kind, c.proto or ""]), file=out)
    return 0


def _cmd_tags(args, out, err) -> int:
    if args.action == "decode":
        data = _read_bytes(args.file)
        try:
            out.write(format_listing(decode_stream(data)))
        except OmegaError as exc:
            line, col = offset_position(data, exc.offset)
            print(Diagnostic(Severity.Error, exc.code, exc.message, _display(args.file), line, col).format(), file=out)
            return 1
        return 0
    try:
        listing = Path(args.file).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {args.file}: {exc.strerror}") from None
    try:
        data = encode_stream(parse_listing(listing))
    except (OmegaError, ValueError) as exc:
        code = getattr(exc, "code", "MalformedListing")
        print(f"{_display(args.file)}:1:1: error[{code}]: {exc}", file=out)
        return 1
    _write_bytes(args.output, data, out)
    return 0


def _read_bytes(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _write_bytes(target: str | None, data: bytes, out) -> None:
    if target in (None, "-"):
        buffer = getattr(out, "buffer", None)
        if buffer is not None:
            out.flush()
            buffer.write(data)
            buffer.flush()
        else:
            out.write(data.decode("utf-8"))
        return
    try:
        Path(target).write_bytes(data)
    except OSError as exc:
        raise UsageError(f"cannot write {target}: {exc.strerror}") from None


# -- argument parsing -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    env_opts = argparse.ArgumentParser(add_help=False)
    env_opts.add_argument("--manifest", metavar="F", help=f"manifest listing source roots (default ./{MANIFEST_NAME})")
    env_opts.add_argument("--root", action="append", metavar="DIR", help="source root; may repeat")

    parser = argparse.ArgumentParser(prog="omega", description="Front end for Ω source files.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("check", parents=[env_opts], help="load, parse and type check every slot")
    p.add_argument("directory", nargs="?", help="sole source root when there is no manifest")
    p.set_defaults(func=_cmd_check)

    p = sub.add_parser("fmt", help="decode and re-encode one file")
    p.add_argument("file")
    p.add_argument("--canonical-header", action="store_true", help="rewrite header sections in canonical order")
    p.add_argument("-o", "--output", help="output file (default stdout)")
    p.set_defaults(func=_cmd_fmt)

    p = sub.add_parser("mro", parents=[env_opts], help="print the lookup order of a prototype")
    p.add_argument("proto")
    p.add_argument("--numbered", action="store_true", help="prefix each name with its 1-based rank")
    p.set_defaults(func=_cmd_mro)

    p = sub.add_parser("ops", parents=[env_opts], help="print the operator dictionary")
    p.set_defaults(func=_cmd_ops)

    p = sub.add_parser("render", parents=[env_opts], help="lay out one expression as SVG")
    p.add_argument("--expr", required=True, metavar="TEXT")
    p.add_argument("--sp", type=float, default=10.0, metavar="N", help="font size")
    p.add_argument("-o", "--output", metavar="FILE.svg")
    p.add_argument("--proto", help="prototype whose body the expression is read in (default Main)")
    p.set_defaults(func=_cmd_render)

    p = sub.add_parser("complete", parents=[env_opts], help="completion candidates at a byte offset")
    p.add_argument("--file", required=True, metavar="F")
    p.add_argument("--offset", required=True, type=int, metavar="N")
    p.set_defaults(func=_cmd_complete)

    p = sub.add_parser("tags", help="dump or rebuild a tag token stream")
    p.add_argument("action", choices=("decode", "encode"))
    p.add_argument("file")
    p.add_argument("-o", "--output", help="output file for encode (default stdout)")
    p.set_defaults(func=_cmd_tags)
    return parser


def run(argv: Sequence[str] | None = None, out=None, err=None) -> int:
    out = out if out is not None else sys.stdout
    err = err if err is not None else sys.stderr
    parser = build_parser()
    saved = sys.stderr
    sys.stderr = err
    try:
        args = parser.parse_args(list(argv) if argv is not None else None)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    finally:
        sys.stderr = saved
    try:
        return args.func(args, out, err)
    except UsageError as exc:
        print(f"omega: {exc}", file=err)
        return 2


def main() -> None:
    raise SystemExit(run())
