"""Body tokens and the typed expression tree produced by the body parser.

Every node records its source ``span`` as character offsets into the body
text and its static ``type`` (``None`` for statements without a value).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

from .header import SlotSignature, TypeRef

Span = tuple[int, int]


# -- tokens -------------------------------------------------------------------

@dataclass(frozen=True)
class Word:
    text: str
    span: Span

    @property
    def starts_uppercase(self) -> bool:
        from .header import starts_uppercase
        return starts_uppercase(self.text)


@dataclass(frozen=True)
class Number:
    text: str
    span: Span


@dataclass(frozen=True)
class StringLit:
    text: str
    span: Span


@dataclass(frozen=True)
class Punct:
    ch: str  # one of ( ) { } [ ] , : and newline
    span: Span


@dataclass(frozen=True)
class Arrow:
    span: Span


@dataclass(frozen=True)
class SelfMark:
    span: Span


@dataclass(frozen=True)
class ExactTypeMark:
    span: Span


@dataclass(frozen=True)
class External:
    text: str
    span: Span


@dataclass(frozen=True)
class MatrixText:
    # a bracketed two-dimensional literal; kept opaque
    text: str
    span: Span


BodyToken = Union[Word, Number, StringLit, Punct, Arrow, SelfMark, ExactTypeMark, External, MatrixText]


# -- expression tree -----------------------------------------------------------

@dataclass(frozen=True, kw_only=True)
class Node:
    span: Span
    type: TypeRef | None = None

    def children(self) -> tuple["Node", ...]:
        return ()

    def walk(self):
        yield self
        for child in self.children():
            yield from child.walk()


@dataclass(frozen=True, kw_only=True)
class IntLit(Node):
    text: str
    value: int


@dataclass(frozen=True, kw_only=True)
class DecLit(Node):
    text: str
    value: float


@dataclass(frozen=True, kw_only=True)
class StrLit(Node):
    value: str


@dataclass(frozen=True, kw_only=True)
class ExternalLit(Node):
    text: str


@dataclass(frozen=True, kw_only=True)
class MatrixLit(Node):
    text: str


@dataclass(frozen=True, kw_only=True)
class SelfRef(Node):
    pass


@dataclass(frozen=True, kw_only=True)
class TypeLit(Node):
    name: str


@dataclass(frozen=True, kw_only=True)
class LocalRead(Node):
    name: str
    # reading a delayed parameter evaluates its block
    evaluates_block: bool = False


@dataclass(frozen=True, kw_only=True)
class TupleExpr(Node):
    elements: tuple[Node, ...]

    def children(self):
        return self.elements


@dataclass(frozen=True, kw_only=True)
class Grp(Node):
    statements: tuple[Node, ...]

    def children(self):
        return self.statements


@dataclass(frozen=True, kw_only=True)
class Block(Node):
    locals: tuple[tuple[str, TypeRef], ...]
    body: Grp

    def children(self):
        return (self.body,)


@dataclass(frozen=True, kw_only=True)
class Send(Node):
    """A Standard slot invocation (attribute read or function call)."""

    proto: str
    signature: SlotSignature
    receiver: Node
    args: tuple[Node, ...]
    implicit_receiver: bool = False
    # placeholder indices in evaluation order; -1 is the receiver
    eval_order: tuple[int, ...] = ()

    def children(self):
        return (self.receiver,) + self.args


@dataclass(frozen=True, kw_only=True)
class OpApply(Node):
    proto: str
    signature: SlotSignature
    keyword: str
    operands: tuple[Node, ...]
    # the declaration was found on the right operand (commutativity)
    swapped: bool = False
    eval_order: tuple[int, ...] = ()

    def children(self):
        return self.operands


@dataclass(frozen=True, kw_only=True)
class BlockCall(Node):
    # the ``local Arg`` message form; the callee is a block-valued local
    target: LocalRead
    args: tuple[Node, ...]

    def children(self):
        return (self.target,) + self.args


@dataclass(frozen=True, kw_only=True)
class Target(Node):
    name: str
    kind: str  # local | attribute
    proto: str | None = None
    signature: SlotSignature | None = None


@dataclass(frozen=True, kw_only=True)
class Assign(Node):
    targets: tuple[Target, ...]
    value: Node
    destructure: bool = False

    def children(self):
        return self.targets + (self.value,)


@dataclass(frozen=True, kw_only=True)
class LocalDecl(Node):
    names: tuple[tuple[str, TypeRef], ...]


@dataclass(frozen=True, kw_only=True)
class ErrorNode(Node):
    """Stands in for a statement that failed to parse or type."""

    code: str
    message: str


def node_label(node: Node) -> str:
    """Short one-line rendering, used in ambiguity messages and dumps."""
    if isinstance(node, (IntLit, DecLit)):
        return node.text
    if isinstance(node, StrLit):
        return '"' + node.value + '"'
    if isinstance(node, ExternalLit):
        return "`" + node.text + "`"
    if isinstance(node, MatrixLit):
        return "[" + node.text + "]"
    if isinstance(node, SelfRef):
        return "●"
    if isinstance(node, TypeLit):
        return node.name
    if isinstance(node, LocalRead):
        return node.name
    if isinstance(node, TupleExpr):
        return "(" + ", ".join(node_label(e) for e in node.elements) + ")"
    if isinstance(node, Block):
        head = "[" + ", ".join(f"{n}: {t}" for n, t in node.locals) + "] " if node.locals else ""
        return head + "{" + ", ".join(node_label(s) for s in node.body.statements) + "}"
    if isinstance(node, Grp):
        return ", ".join(node_label(s) for s in node.statements)
    if isinstance(node, Send):
        from .header import ARG, RECEIVER
        args = iter(node.args)
        parts = []
        for item in node.signature.pattern:
            if item is RECEIVER:
                if not node.implicit_receiver:
                    parts.append(_wrap(node.receiver))
            elif item is ARG:
                parts.append(_wrap(next(args)))
            else:
                parts.append(item)
        return " ".join(parts)
    if isinstance(node, OpApply):
        ops = [_wrap(o) for o in node.operands]
        if len(ops) == 2:
            return f"{ops[0]} {node.keyword} {ops[1]}"
        from .header import Arity
        if node.signature.operator.arity is Arity.UnaryPrefix:
            return f"{node.keyword} {ops[0]}"
        return f"{ops[0]} {node.keyword}"
    if isinstance(node, BlockCall):
        return " ".join([node.target.name] + [_wrap(a) for a in node.args])
    if isinstance(node, Assign):
        return " ← ".join(t.name for t in node.targets) + " ← " + node_label(node.value)
    if isinstance(node, LocalDecl):
        return ", ".join(f"{n}: {t}" for n, t in node.names)
    if isinstance(node, ErrorNode):
        return f"<{node.code}>"
    return type(node).__name__


def _wrap(node: Node) -> str:
    text = node_label(node)
    if isinstance(node, (Send, OpApply, BlockCall)) and " " in text:
        return "(" + text + ")"
    return text
