"""Glyphs: a small stack machine lays out operator arguments.

Run with ``python3 demos/03_rendering.py [out.svg]``.
"""

from __future__ import annotations

import sys

from omegakit.cli import render_expression
from omegakit.body_parser import parse_body
from omegakit.glyph import Box, layout, load_glyph, render_svg
from omegakit.loader import CORPUS_DIR, load_roots

fraction = load_glyph((CORPUS_DIR / "glyphs" / "div.glyph").read_text(encoding="utf-8"))

# Two argument boxes: (width, ascent, descent), descent negative below the baseline.
box = layout(fraction, [Box(10, 8, -2), Box(20, 8, -2)], sp=10)
print(f"fraction box: width {box.width:g}, ascent {box.ascent:g}, descent {box.descent:g}")

# Nested glyphs: the numerator is itself a square root.
env = load_roots([CORPUS_DIR]).env
expr = parse_body("x: ℤ\n(x sqrt) div 2", None, env, "Main").statements[-1]
svg = render_svg(render_expression(expr, env, 12))
target = sys.argv[1] if len(sys.argv) > 1 else None
if target:
    with open(target, "w", encoding="utf-8") as fh:
        fh.write(svg)
    print(f"wrote {target}")
else:
    print(svg)
