from __future__ import annotations

import xml.etree.ElementTree as ET

import pytest
from hypothesis import given, strategies as st

from omegakit.body_parser import parse_body
from omegakit.environment import build_environment
from omegakit.errors import ArityMismatch, GlyphError, MissingOutputs, NegativeWidth, UnbalancedPushPop, UnknownInstruction
from omegakit.glyph import Box, ChildItem, PathItem, TextItem, hbox, layout, load_glyph, measure_text, render_svg
from omegakit.loader import CORPUS_DIR

SVG = "{http://www.w3.org/2000/svg}"
FRACTION = (CORPUS_DIR / "glyphs" / "div.glyph").read_text(encoding="utf-8")
SQRT = (CORPUS_DIR / "glyphs" / "sqrt.glyph").read_text(encoding="utf-8")


def fraction_by_hand(num: Box, den: Box, sp: float):
    """Closed form of the fraction program, written out term by term.

    Argument ``Descent`` reads the depth below the baseline (a positive
    number for a negative box descent).
    """
    gap, pad = 0.46 * sp, 2.0
    d0, d1 = -num.descent, -den.descent
    widest = max(num.width, den.width)
    den_at = ((num.width - den.width) / 2, den.ascent - d0 + 2 * pad)
    num_at = ((widest - num.width) / 2 + 5, d0 - pad - gap)
    ascent = num.ascent - d0 + pad + gap
    descent = -den.ascent + d1 - pad + gap
    return widest + 10, ascent, descent, den_at, num_at


def test_fraction_metrics():
    prog = load_glyph(FRACTION)
    box = layout(prog, [Box(10, 8, -2), Box(20, 8, -2)], 10)
    assert box.width == pytest.approx(30, abs=1e-9)
    assert box.ascent == pytest.approx(12.6, abs=1e-9)
    assert box.descent == pytest.approx(-3.4, abs=1e-9)


def test_fraction_last_push_pops_first():
    a0, a1 = Box(10, 8, -2, (TextItem("n", 1),)), Box(20, 8, -2, (TextItem("d", 1),))
    box = layout(load_glyph(FRACTION), [a0, a1], 10)
    children = [i for i in box.items if isinstance(i, ChildItem)]
    assert [c.box for c in children] == [a1, a0]
    assert (children[0].dx, children[0].dy) == pytest.approx((-5, 10))
    assert (children[1].dx, children[1].dy) == pytest.approx((10, -4.6))


def test_equal_widths_center_numerator():
    box = layout(load_glyph(FRACTION), [Box(20, 8, -2), Box(20, 8, -2)], 10)
    num = [i for i in box.items if isinstance(i, ChildItem)][1]
    assert num.dx == pytest.approx(5)


def test_fraction_rule():
    box = layout(load_glyph(FRACTION), [Box(10, 8, -2), Box(20, 8, -2)], 10)
    (rule,) = [i for i in box.items if isinstance(i, PathItem)]
    assert rule.width == 3
    assert [c for p in rule.points for c in p] == pytest.approx([3, -4.6, 27, -4.6])


box_st = st.builds(Box, st.floats(0, 200), st.floats(0, 100), st.floats(-100, 0))


@given(box_st, box_st, st.floats(1, 50))
def test_fraction_matches_closed_form(num, den, sp):
    box = layout(load_glyph(FRACTION), [num, den], sp)
    width, ascent, descent, den_at, num_at = fraction_by_hand(num, den, sp)
    assert (box.width, box.ascent, box.descent) == pytest.approx((width, ascent, descent))
    children = [i for i in box.items if isinstance(i, ChildItem)]
    assert (children[0].dx, children[0].dy) == pytest.approx(den_at)
    assert (children[1].dx, children[1].dy) == pytest.approx(num_at)


@given(box_st, box_st, st.text(max_size=4), st.text(max_size=4))
def test_layout_reads_only_metrics(num, den, s, t):
    prog = load_glyph(FRACTION)
    plain = layout(prog, [num, den], 10)
    dressed = layout(prog, [Box(num.width, num.ascent, num.descent, (TextItem(s, 1),)),
                            Box(den.width, den.ascent, den.descent, (TextItem(t, 2),))], 10)
    assert (plain.width, plain.ascent, plain.descent) == (dressed.width, dressed.ascent, dressed.descent)
    offsets = lambda b: [(i.dx, i.dy) for i in b.items if isinstance(i, ChildItem)]
    assert offsets(plain) == offsets(dressed)


def test_sqrt():
    arg = measure_text("x", 10)
    box = layout(load_glyph(SQRT), [arg], 10)
    assert box.width == pytest.approx(6 + 5 + 4)
    assert box.ascent == pytest.approx(8 + 1 + 2)
    assert box.descent == pytest.approx(-2)


def test_zero_argument_glyph():
    prog = load_glyph("pi\nMove (0, 0)\nLine (5, 0)\nStroke 1\nAscent <- SP\nDescent <- 0\nWidth <- 5\n")
    assert prog.arity == 0 and prog.push_order == ()
    box = layout(prog, [], 10)
    assert (box.width, box.ascent, box.descent) == (5, 10, 0)


def test_explicit_push_order():
    prog = load_glyph("A0 over A1\nPush A1\nPush A0\nPop (0, 0)\nPop (0, 0)\nAscent <- 1\nDescent <- 0\nWidth <- 1\n")
    assert prog.push_order == (1, 0)


@pytest.mark.parametrize("text, error", [
    ("A0 f\nPush\nAscent <- 1\nDescent <- 0\nWidth <- 1\n", UnbalancedPushPop),
    ("A0 f\nPop (0, 0)\nPush\nAscent <- 1\nDescent <- 0\nWidth <- 1\n", UnbalancedPushPop),
    ("A0 f\nPush\nPop (0, 0)\nAscent <- 1\nWidth <- 1\n", MissingOutputs),
    ("A0 f\nPush\nPop (0, 0)\nWiggle 3\nAscent <- 1\nDescent <- 0\nWidth <- 1\n", UnknownInstruction),
    ("A0 f\nPush\nPop (0, 0)\nAscent <- 1\nAscent <- 2\nDescent <- 0\nWidth <- 1\n", GlyphError),
    ("A0 f\nPush\nAscent <- 1\nPop (0, 0)\nDescent <- 0\nWidth <- 1\n", GlyphError),
    ("A1 f\nPush\nPop (0, 0)\nAscent <- 1\nDescent <- 0\nWidth <- 1\n", GlyphError),
    ("", GlyphError),
])
def test_malformed_programs(text, error):
    with pytest.raises(error):
        load_glyph(text)


def test_arity_and_width_checks():
    with pytest.raises(ArityMismatch):
        layout(load_glyph(FRACTION), [Box(1, 1, 0)], 10)
    prog = load_glyph("z\nAscent <- 0\nDescent <- 0\nWidth <- -1\n")
    with pytest.raises(NegativeWidth):
        layout(prog, [], 10)


def test_measure_text():
    b = measure_text("ab", 10)
    assert (b.width, b.ascent, b.descent) == pytest.approx((12, 8, -2))
    assert b.items == (TextItem("ab", 10),)
    assert measure_text("", 10).items == ()


def test_hbox():
    b = hbox([measure_text("a", 10), Box(4, 20, -1)], gap=2)
    assert (b.width, b.ascent, b.descent) == pytest.approx((12, 20, -2))
    assert [i.dx for i in b.items] == pytest.approx([0, 8])


# -- SVG ---------------------------------------------------------------------------

def parsed(box):
    return ET.fromstring(render_svg(box))


def test_svg_of_fraction():
    box = layout(load_glyph(FRACTION), [measure_text("1", 10), measure_text("2", 10)], 10)
    root = parsed(box)
    paths = list(root.iter(SVG + "path"))
    texts = list(root.iter(SVG + "text"))
    assert len(paths) == 1 and paths[0].get("stroke") == "black"
    assert sorted(t.text for t in texts) == ["1", "2"]


def test_svg_of_empty_box():
    root = parsed(Box(0, 0, 0))
    assert root.tag == SVG + "svg" and list(root) == []
    assert root.get("viewBox") == "0 0 0 0"


def test_svg_nests_offsets():
    inner = Box(5, 5, 0, (PathItem(((0, 0), (5, 0)), 1),))
    outer = Box(20, 10, -2, (ChildItem(Box(10, 5, 0, (ChildItem(inner, 1, 2),)), 3, 4),))
    root = parsed(outer)
    groups = list(root.iter(SVG + "g"))
    assert [g.get("transform") for g in groups] == ["translate(3,4)", "translate(1,2)"]
    assert root.get("viewBox") == "0 -10 20 12"


def test_glyph_does_not_change_the_typed_tree(env):
    bare = build_environment(list(env.prototypes.values()), {})
    with_glyphs = parse_body("1 div 2", None, env, "Main")
    without = parse_body("1 div 2", None, bare, "Main")
    assert with_glyphs == without
