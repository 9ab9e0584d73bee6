"""Graphical operators: description files, box layout and SVG output.

A description file starts with its key, the textual signature with
arguments numbered ``A0``, ``A1``... in reading order, followed by a small
stack-machine program::

    A0 div A1                 // key
    v0 <- SP * 0.46           // registers
    Push                      // push the next argument box
    Pop (dx, dy)              // place the most recently pushed box
    Move (x, y)  Line (x, y)  Stroke w
    Ascent <- ...  Descent <- ...  Width <- ...

Conventions: the y axis points down; ``Ox``/``Oy`` are the glyph origin
(baseline-left, always 0); a box ascent is positive above the baseline and
its descent negative below it.  Inside programs ``Ai.Descent`` reads the
depth of the argument, a non-negative magnitude, so that the fraction
program above yields a box taller than its arguments.  ``Push Ai`` may
name the argument explicitly; a bare ``Push`` takes the next one.
"""

from __future__ import annotations

import ast
import math
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence, Union

from .errors import (
    ArityMismatch,
    GlyphError,
    MissingOutputs,
    NegativeWidth,
    UnbalancedPushPop,
    UnknownInstruction,
)

__all__ = [
    "AssignReg",
    "Push",
    "Pop",
    "Move",
    "Line",
    "Stroke",
    "SetOutput",
    "GlyphProgram",
    "PathItem",
    "TextItem",
    "ChildItem",
    "Box",
    "load_glyph",
    "load_glyph_dir",
    "layout",
    "measure_text",
    "hbox",
    "render_svg",
]

_ARG_RE = re.compile(r"^A(\d+)$")
_OUTPUTS = ("Ascent", "Descent", "Width")


# -- program -------------------------------------------------------------------

@dataclass(frozen=True)
class Expr:
    source: str
    tree: ast.expr = field(compare=False, repr=False)


@dataclass(frozen=True)
class AssignReg:
    name: str
    expr: Expr


@dataclass(frozen=True)
class Push:
    arg: int


@dataclass(frozen=True)
class Pop:
    dx: Expr
    dy: Expr


@dataclass(frozen=True)
class Move:
    x: Expr
    y: Expr


@dataclass(frozen=True)
class Line:
    x: Expr
    y: Expr


@dataclass(frozen=True)
class Stroke:
    width: Expr


@dataclass(frozen=True)
class SetOutput:
    name: str  # Ascent | Descent | Width
    expr: Expr


Instruction = Union[AssignReg, Push, Pop, Move, Line, Stroke, SetOutput]


@dataclass(frozen=True)
class GlyphProgram:
    key: str
    instructions: tuple[Instruction, ...]

    @property
    def arity(self) -> int:
        return sum(1 for w in self.key.split() if _ARG_RE.match(w))

    @property
    def push_order(self) -> tuple[int, ...]:
        return tuple(i.arg for i in self.instructions if isinstance(i, Push))


_ALLOWED = (
    ast.Expression, ast.BinOp, ast.UnaryOp, ast.Add, ast.Sub, ast.Mult, ast.Div,
    ast.USub, ast.UAdd, ast.Constant, ast.Name, ast.Load, ast.Attribute, ast.Call,
)


def _expr(text: str, lineno: int, arity: int) -> Expr:
    try:
        tree = ast.parse(text.strip(), mode="eval")
    except SyntaxError:
        raise GlyphError(f"line {lineno}: cannot read expression {text.strip()!r}") from None
    for node in ast.walk(tree):
        if not isinstance(node, _ALLOWED):
            raise GlyphError(f"line {lineno}: {type(node).__name__} is not allowed in {text.strip()!r}")
        if isinstance(node, ast.Constant) and not isinstance(node.value, (int, float)):
            raise GlyphError(f"line {lineno}: only numeric constants are allowed")
        if isinstance(node, ast.Call):
            if not (isinstance(node.func, ast.Name) and node.func.id in ("Max", "Min") and len(node.args) == 2 and not node.keywords):
                raise GlyphError(f"line {lineno}: only Max(a, b) and Min(a, b) can be called")
        if isinstance(node, ast.Attribute):
            m = isinstance(node.value, ast.Name) and _ARG_RE.match(node.value.id)
            if not m or node.attr not in _OUTPUTS:
                raise GlyphError(f"line {lineno}: unknown metric {ast.unparse(node)!r}")
            if int(m.group(1)) >= arity:
                raise GlyphError(f"line {lineno}: {node.value.id} is not an argument of this glyph")
    return Expr(text.strip(), tree.body)


def _pair(text: str, lineno: int, arity: int) -> tuple[Expr, Expr]:
    text = text.strip()
    if not (text.startswith("(") and text.endswith(")")):
        raise GlyphError(f"line {lineno}: expected (x, y)")
    try:
        tree = ast.parse(text, mode="eval").body
    except SyntaxError:
        raise GlyphError(f"line {lineno}: cannot read {text!r}") from None
    if not isinstance(tree, ast.Tuple) or len(tree.elts) != 2:
        raise GlyphError(f"line {lineno}: expected two coordinates")
    return (_expr(ast.unparse(tree.elts[0]), lineno, arity), _expr(ast.unparse(tree.elts[1]), lineno, arity))


def load_glyph(text: str) -> GlyphProgram:
    lines = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        code = raw.split("//", 1)[0].strip()
        if code:
            lines.append((lineno, code))
    if not lines:
        raise GlyphError("empty glyph description")
    key_line, key = lines[0]
    words = key.split()
    args = [int(m.group(1)) for w in words if (m := _ARG_RE.match(w))]
    if args != list(range(len(args))):
        raise GlyphError(f"line {key_line}: arguments of the key must be A0, A1, ... in order")
    key = " ".join(words)
    arity = len(args)

    instructions: list[Instruction] = []
    next_push = 0
    pushes = pops = 0
    outputs: dict[str, int] = {}
    for lineno, code in lines[1:]:
        head = code.split(None, 1)[0] if code.split() else ""
        head = head.split("(", 1)[0]
        rest = code[len(head):]
        if "<-" in code:
            name, _, rhs = code.partition("<-")
            name = name.strip()
            if name in _OUTPUTS:
                if name in outputs:
                    raise GlyphError(f"line {lineno}: {name} is set twice")
                outputs[name] = lineno
                instructions.append(SetOutput(name, _expr(rhs, lineno, arity)))
            elif re.fullmatch(r"[A-Za-z_][A-Za-z_0-9]*", name) and name not in ("SP", "Ox", "Oy") and not _ARG_RE.match(name):
                instructions.append(AssignReg(name, _expr(rhs, lineno, arity)))
            else:
                raise GlyphError(f"line {lineno}: {name!r} cannot be assigned")
        elif head == "Push":
            target = rest.strip()
            if target:
                m = _ARG_RE.match(target)
                if not m or int(m.group(1)) >= arity:
                    raise GlyphError(f"line {lineno}: Push takes an argument name A0..A{arity - 1}")
                arg = int(m.group(1))
            else:
                arg = next_push
            next_push = arg + 1
            pushes += 1
            instructions.append(Push(arg))
        elif head == "Pop":
            pops += 1
            if pops > pushes:
                raise UnbalancedPushPop(f"line {lineno}: Pop without a pushed box")
            instructions.append(Pop(*_pair(rest, lineno, arity)))
        elif head in ("Move", "Line"):
            cls = Move if head == "Move" else Line
            instructions.append(cls(*_pair(rest, lineno, arity)))
        elif head == "Stroke":
            instructions.append(Stroke(_expr(rest, lineno, arity)))
        else:
            raise UnknownInstruction(f"line {lineno}: unknown instruction {code!r}", offset=lineno)
        if outputs and isinstance(instructions[-1], (Push, Pop)):
            raise GlyphError(f"line {lineno}: outputs must come after every Push and Pop")
    if pushes != pops:
        raise UnbalancedPushPop(f"{pushes} Push but {pops} Pop")
    if pushes != arity:
        raise UnbalancedPushPop(f"key {key!r} has {arity} arguments but the program pushes {pushes}")
    pushed = sorted(i.arg for i in instructions if isinstance(i, Push))
    if pushed != list(range(arity)):
        raise UnbalancedPushPop("every argument must be pushed exactly once")
    missing = [o for o in _OUTPUTS if o not in outputs]
    if missing:
        raise MissingOutputs(f"glyph {key!r} does not set {', '.join(missing)}")
    return GlyphProgram(key, tuple(instructions))


def load_glyph_dir(directory: Path | str) -> dict[str, GlyphProgram]:
    out: dict[str, GlyphProgram] = {}
    for path in sorted(Path(directory).glob("*.glyph")):
        prog = load_glyph(path.read_text(encoding="utf-8"))
        if prog.key in out:
            raise GlyphError(f"two glyph files for key {prog.key!r}")
        out[prog.key] = prog
    return out


# -- boxes -------------------------------------------------------------------

@dataclass(frozen=True)
class PathItem:
    points: tuple[tuple[float, float], ...]
    width: float


@dataclass(frozen=True)
class TextItem:
    run: str
    size: float


@dataclass(frozen=True)
class ChildItem:
    box: "Box"
    dx: float
    dy: float


@dataclass(frozen=True)
class Box:
    width: float
    ascent: float
    descent: float
    items: tuple[Union[PathItem, TextItem, ChildItem], ...] = ()

    @property
    def height(self) -> float:
        return self.ascent - self.descent


def measure_text(run: str, sp: float) -> Box:
    """Fixed linear metric model, independent of any font."""
    return Box(0.6 * sp * len(run), 0.8 * sp, -0.2 * sp, (TextItem(run, sp),) if run else ())


def hbox(parts: Sequence[Box], gap: float = 0.0) -> Box:
    """Place boxes side by side on a common baseline."""
    items = []
    x = 0.0
    for k, b in enumerate(parts):
        if k:
            x += gap
        items.append(ChildItem(b, x, 0.0))
        x += b.width
    ascent = max((b.ascent for b in parts), default=0.0)
    descent = min((b.descent for b in parts), default=0.0)
    return Box(x, ascent, descent, tuple(items))


class _Eval:
    def __init__(self, args: Sequence[Box], sp: float):
        self.args = args
        self.env: dict[str, float] = {"SP": sp, "Ox": 0.0, "Oy": 0.0}

    def __call__(self, e: Expr) -> float:
        return self._eval(e.tree)

    def _eval(self, node) -> float:
        if isinstance(node, ast.Constant):
            return float(node.value)
        if isinstance(node, ast.Name):
            if node.id not in self.env:
                raise GlyphError(f"register {node.id!r} is read before it is set")
            return self.env[node.id]
        if isinstance(node, ast.Attribute):
            box = self.args[int(node.value.id[1:])]
            if node.attr == "Width":
                return box.width
            if node.attr == "Ascent":
                return box.ascent
            return -box.descent  # depth
        if isinstance(node, ast.UnaryOp):
            v = self._eval(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp):
            a, b = self._eval(node.left), self._eval(node.right)
            if isinstance(node.op, ast.Add):
                return a + b
            if isinstance(node.op, ast.Sub):
                return a - b
            if isinstance(node.op, ast.Mult):
                return a * b
            if b == 0:
                raise GlyphError("division by zero in glyph program")
            return a / b
        if isinstance(node, ast.Call):
            a, b = (self._eval(x) for x in node.args)
            return max(a, b) if node.func.id == "Max" else min(a, b)
        raise GlyphError(f"cannot evaluate {ast.unparse(node)}")


def layout(prog: GlyphProgram, args: Sequence[Box], sp: float) -> Box:
    if len(args) != prog.arity:
        raise ArityMismatch(f"glyph {prog.key!r} takes {prog.arity} boxes, got {len(args)}")
    ev = _Eval(args, sp)
    stack: list[Box] = []
    items: list = []
    polyline: list[tuple[float, float]] = []
    out: dict[str, float] = {}
    for ins in prog.instructions:
        if isinstance(ins, AssignReg):
            ev.env[ins.name] = ev(ins.expr)
        elif isinstance(ins, Push):
            stack.append(args[ins.arg])
        elif isinstance(ins, Pop):
            box = stack.pop()
            items.append(ChildItem(box, ev(ins.dx), ev(ins.dy)))
        elif isinstance(ins, Move):
            if len(polyline) > 1:
                items.append(PathItem(tuple(polyline), 1.0))
            polyline = [(ev(ins.x), ev(ins.y))]
        elif isinstance(ins, Line):
            if not polyline:
                polyline = [(0.0, 0.0)]
            polyline.append((ev(ins.x), ev(ins.y)))
        elif isinstance(ins, Stroke):
            if len(polyline) > 1:
                items.append(PathItem(tuple(polyline), ev(ins.width)))
            polyline = []
        elif isinstance(ins, SetOutput):
            out[ins.name] = ev(ins.expr)
    width = out["Width"]
    if width < 0:
        raise NegativeWidth(f"glyph {prog.key!r} computed width {width}")
    return Box(width, out["Ascent"], out["Descent"], tuple(items))


# -- SVG -----------------------------------------------------------------------

def _num(x: float) -> str:
    if math.isclose(x, round(x), abs_tol=1e-9):
        return str(int(round(x)))
    return f"{x:.6g}"


def _emit(parent: ET.Element, box: Box) -> None:
    for item in box.items:
        if isinstance(item, ChildItem):
            g = ET.SubElement(parent, "g", transform=f"translate({_num(item.dx)},{_num(item.dy)})")
            _emit(g, item.box)
        elif isinstance(item, PathItem):
            d = " ".join(("M" if k == 0 else "L") + f" {_num(x)} {_num(y)}" for k, (x, y) in enumerate(item.points))
            ET.SubElement(parent, "path", {
                "d": d,
                "fill": "none",
                "stroke": "black",
                "stroke-width": _num(item.width),
                "stroke-linecap": "round",
            })
        else:
            t = ET.SubElement(parent, "text", {"x": "0", "y": "0", "font-size": _num(item.size)})
            t.text = item.run


def render_svg(root: Box) -> str:
    svg = ET.Element("svg", {
        "xmlns": "http://www.w3.org/2000/svg",
        "version": "1.1",
        "viewBox": f"0 {_num(-root.ascent)} {_num(root.width)} {_num(root.ascent - root.descent)}",
        "width": _num(root.width),
        "height": _num(root.ascent - root.descent),
    })
    _emit(svg, root)
    return ET.tostring(svg, encoding="unicode") + "\n"

