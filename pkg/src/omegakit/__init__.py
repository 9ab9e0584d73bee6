"""Front end for the Ω visual language: tagged source files, prototype
headers, body parsing and typing, graphical operators and completion."""

from __future__ import annotations

from .body_parser import BodyParser, parse_body, resolve_phrase
from .checker import Diagnostic, check_environment, check_slot_body
from .completion import LayoutStats, ShortcutTable, complete, expand_shortcut
from .environment import Environment, build_environment, check_access, collect_assertions, lookup_order, resolve_slot
from .glyph import layout, load_glyph, render_svg
from .header import read_prototype
from .loader import load_roots
from .tags import classify_tag, decode_stream, encode_stream
from .types import match_signature

__all__ = [
    "BodyParser", "parse_body", "resolve_phrase",
    "Diagnostic", "check_environment", "check_slot_body",
    "LayoutStats", "ShortcutTable", "complete", "expand_shortcut",
    "Environment", "build_environment", "check_access", "collect_assertions", "lookup_order", "resolve_slot",
    "layout", "load_glyph", "render_svg",
    "read_prototype", "load_roots",
    "classify_tag", "decode_stream", "encode_stream",
    "match_signature",
]

__version__ = "0.1.0"
