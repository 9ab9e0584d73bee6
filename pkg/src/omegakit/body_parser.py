"""Phase-2 parser for slot bodies.

Bodies are plain text.  Parsing proceeds outside-in:

1. ``tokenize_body`` produces words, literals and punctuation;
2. brackets are grouped, a group splits into lines and statements, and an
   assignment prefix ``a ← b ← ...`` is peeled off each statement;
3. ``split_operators`` cuts an expression at operator keywords taken from the
   operator dictionary;
4. each operand is a phrase of words and atoms, resolved by ``resolve_phrase``
   with a chart over word spans and the signature trie;
5. ``build_operator_tree`` nests the operands by priority and associativity,
   and the operand types pick each operator declaration.

Typing is done during parsing because the phrase resolver prunes candidate
slots by parameter type.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

from .environment import Environment, TrieNode
from .errors import (
    DanglingOperator,
    IndeterministicAssociativity,
    NoInterpretation,
    NotAssignable,
    OmegaError,
    ParseError,
    ParseErrors,
    TagInBody,
    TrueAmbiguity,
    UnknownTarget,
    UnknownType,
    UnterminatedString,
)
from .header import (
    ARG,
    RECEIVER,
    Arity,
    Assoc,
    BlockType,
    ExactReceiver,
    FormattedName,
    Named,
    SlotSignature,
    TupleType,
    TypeRef,
    parse_type_lexemes,
    starts_uppercase,
)
from .syntax import (
    Arrow,
    Assign,
    Block,
    BlockCall,
    BodyToken,
    DecLit,
    ErrorNode,
    ExactTypeMark,
    External,
    ExternalLit,
    Grp,
    IntLit,
    LocalDecl,
    LocalRead,
    MatrixLit,
    MatrixText,
    Node,
    Number,
    OpApply,
    Punct,
    SelfMark,
    SelfRef,
    Send,
    StringLit,
    StrLit,
    Target,
    TupleExpr,
    TypeLit,
    Word,
    node_label,
)
from .tags import is_reserved_char
from .types import (
    ANY,
    DECIMAL,
    INTEGER,
    STRING,
    ArgInfo,
    Match,
    NoMatch,
    TypeContext,
    assignable,
    is_type_var,
    literal_fits,
    literal_out_of_range,
    match_signature,
    receiver_proto,
    resolve_operator,
    substitute_exact,
    type_key,
)

__all__ = [
    "tokenize_body",
    "OpOccurrence",
    "OperandSegment",
    "Segmentation",
    "split_operators",
    "OpTree",
    "build_operator_tree",
    "resolve_phrase",
    "parse_body",
    "BodyParser",
    "Problem",
]

_PUNCT = set("(){}[],:")
_NUMBER_RE = re.compile(r"\d+(?:\.\d+)?")
_SPECIAL = set('"`←●⊚') | _PUNCT


# -- tokens ------------------------------------------------------------------

def tokenize_body(text: str) -> list[BodyToken]:
    """Split a body into tokens; every token carries its character span."""
    out: list[BodyToken] = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if is_reserved_char(ch):
            raise TagInBody(f"reserved tag U+{ord(ch):04X} inside a body", offset=i)
        if ch == "\n":
            out.append(Punct("\n", (i, i + 1)))
            i += 1
        elif ch.isspace():
            i += 1
        elif ch == '"':
            j = i + 1
            buf = []
            while j < n and text[j] != '"':
                if text[j] == "\\" and j + 1 < n:
                    j += 1
                buf.append(text[j])
                j += 1
            if j >= n:
                raise UnterminatedString("string literal is not closed", offset=i)
            out.append(StringLit("".join(buf), (i, j + 1)))
            i = j + 1
        elif ch == "`":
            j = text.find("`", i + 1)
            if j < 0:
                raise UnterminatedString("external code is not closed", offset=i)
            out.append(External(text[i + 1:j], (i, j + 1)))
            i = j + 1
        elif ch == "[":
            close = _matching_bracket(text, i)
            k = close + 1
            while k < n and text[k] in " \t":
                k += 1
            if k < n and text[k] == "{":
                out.append(Punct("[", (i, i + 1)))
                i += 1
            else:
                out.append(MatrixText(text[i + 1:close], (i, close + 1)))
                i = close + 1
        elif ch in _PUNCT:
            out.append(Punct(ch, (i, i + 1)))
            i += 1
        elif ch == "←":
            out.append(Arrow((i, i + 1)))
            i += 1
        elif ch == "●":
            out.append(SelfMark((i, i + 1)))
            i += 1
        elif ch == "⊚":
            out.append(ExactTypeMark((i, i + 1)))
            i += 1
        elif ch.isdigit():
            m = _NUMBER_RE.match(text, i)
            out.append(Number(m.group(), (i, m.end())))
            i = m.end()
        else:
            j = i
            while j < n and not text[j].isspace() and text[j] not in _SPECIAL and not is_reserved_char(text[j]):
                j += 1
            word = text[i:j]
            out.append(SelfMark((i, j)) if word == "self" else Word(word, (i, j)))
            i = j
    return out


def _matching_bracket(text: str, start: int) -> int:
    depth = 0
    for k in range(start, len(text)):
        if text[k] == "[":
            depth += 1
        elif text[k] == "]":
            depth -= 1
            if depth == 0:
                return k
    raise ParseError("'[' is not closed", offset=start)


# -- bracket grouping --------------------------------------------------------

@dataclass
class Bracket:
    open: str  # "(" or "{"
    items: list
    span: tuple[int, int]
    # tokens of a ``[locals]`` prefix on a block, or None
    locals: list | None = None


def _group(tokens: Sequence[BodyToken]) -> list:
    stack: list[tuple[str, int, list, list | None]] = []
    current: list = []
    pending_locals: list | None = None
    pending_start = 0
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if isinstance(tok, Punct) and tok.ch == "[":
            j = i + 1
            depth = 1
            while j < len(tokens):
                t = tokens[j]
                if isinstance(t, Punct) and t.ch == "[":
                    depth += 1
                elif isinstance(t, Punct) and t.ch == "]":
                    depth -= 1
                    if depth == 0:
                        break
                j += 1
            pending_locals = list(tokens[i + 1:j])
            pending_start = tok.span[0]
            i = j + 1
            continue
        if isinstance(tok, Punct) and tok.ch in "({":
            start = pending_start if (tok.ch == "{" and pending_locals is not None) else tok.span[0]
            stack.append((tok.ch, start, current, pending_locals if tok.ch == "{" else None))
            pending_locals = None
            current = []
        elif isinstance(tok, Punct) and tok.ch in ")}":
            if not stack:
                raise ParseError(f"unbalanced {tok.ch!r}", offset=tok.span[0])
            opener, start, outer, locs = stack.pop()
            if {"(": ")", "{": "}"}[opener] != tok.ch:
                raise ParseError(f"{opener!r} closed by {tok.ch!r}", offset=tok.span[0])
            outer.append(Bracket(opener, current, (start, tok.span[1]), locs))
            current = outer
        elif isinstance(tok, Punct) and tok.ch == "]":
            raise ParseError("unbalanced ']'", offset=tok.span[0])
        else:
            current.append(tok)
        i += 1
    if stack:
        raise ParseError(f"{stack[-1][0]!r} is not closed", offset=stack[-1][1])
    if pending_locals is not None:
        raise ParseError("block locals without a block", offset=pending_start)
    return current


def _span_of(item) -> tuple[int, int]:
    return item.span


def _items_span(items: Sequence) -> tuple[int, int]:
    return (_span_of(items[0])[0], _span_of(items[-1])[1])


def _is_punct(item, ch: str) -> bool:
    return isinstance(item, Punct) and item.ch == ch


def _split(items: Sequence, ch: str) -> list[list]:
    parts: list[list] = [[]]
    for it in items:
        if _is_punct(it, ch):
            parts.append([])
        else:
            parts[-1].append(it)
    return parts


# -- operator segmentation ------------------------------------------------------

@dataclass(frozen=True)
class OpOccurrence:
    keyword: str
    arity: Arity
    span: tuple[int, int]
    priority: int = 0
    assoc: Assoc = Assoc.Left


@dataclass
class OperandSegment:
    items: list
    prefix: list[OpOccurrence] = field(default_factory=list)  # outermost first
    postfix: list[OpOccurrence] = field(default_factory=list)  # innermost first


@dataclass
class Segmentation:
    operands: list[OperandSegment]
    binaries: list[OpOccurrence]


def _forms(ops, keyword: str) -> set[Arity]:
    return {sig.operator.arity for _, sig in ops.get(keyword, ())}


def split_operators(tokens: Sequence, ops) -> Segmentation:
    """Cut an item sequence at operator keywords.

    ``ops`` maps an operator keyword to its declarations.  A run of operator
    words between two operands reads as ``postfix* binary prefix*``; runs
    before the first operand must be prefix, runs after the last postfix.
    """
    runs: list[tuple[str, list]] = []
    for it in tokens:
        kind = "op" if isinstance(it, Word) and it.text in ops else "mat"
        if runs and runs[-1][0] == kind:
            runs[-1][1].append(it)
        else:
            runs.append((kind, [it]))
    if not any(k == "mat" for k, _ in runs):
        if runs:
            w = runs[0][1][0]
            raise DanglingOperator(f"operator {w.text!r} has no operand", span=w.span)
        raise ParseError("empty expression")

    def occ(w: Word, arity: Arity) -> OpOccurrence:
        return OpOccurrence(w.text, arity, w.span)

    operands: list[OperandSegment] = []
    binaries: list[OpOccurrence] = []
    leading: list[Word] = []
    idx = 0
    if runs[0][0] == "op":
        leading = runs[0][1]
        idx = 1
    for w in leading:
        if Arity.UnaryPrefix not in _forms(ops, w.text):
            raise DanglingOperator(f"operator {w.text!r} lacks a left operand", span=w.span)
    operands.append(OperandSegment(list(runs[idx][1]), [occ(w, Arity.UnaryPrefix) for w in leading]))
    idx += 1
    while idx < len(runs):
        words = runs[idx][1]
        if idx + 1 >= len(runs):
            for w in words:
                if Arity.UnaryPostfix not in _forms(ops, w.text):
                    raise DanglingOperator(f"operator {w.text!r} lacks a right operand", span=w.span)
            operands[-1].postfix += [occ(w, Arity.UnaryPostfix) for w in words]
            break
        choices = []
        for j, w in enumerate(words):
            if (Arity.BinaryInfix in _forms(ops, w.text)
                    and all(Arity.UnaryPostfix in _forms(ops, v.text) for v in words[:j])
                    and all(Arity.UnaryPrefix in _forms(ops, v.text) for v in words[j + 1:])):
                choices.append(j)
        if not choices:
            w = words[0]
            raise DanglingOperator(f"operator sequence {' '.join(v.text for v in words)!r} cannot be read", span=w.span)
        if len(choices) > 1:
            raise TrueAmbiguity(
                f"operator sequence {' '.join(v.text for v in words)!r} is ambiguous; add parentheses",
                span=_items_span(words),
            )
        j = choices[0]
        operands[-1].postfix += [occ(w, Arity.UnaryPostfix) for w in words[:j]]
        binaries.append(occ(words[j], Arity.BinaryInfix))
        operands.append(OperandSegment(list(runs[idx + 1][1]), [occ(w, Arity.UnaryPrefix) for w in words[j + 1:]]))
        idx += 2
    return Segmentation(operands, binaries)


# -- precedence ------------------------------------------------------------------

@dataclass(frozen=True)
class OpTree:
    op: object
    left: object
    right: object


def build_operator_tree(operands: Sequence, occurrences: Sequence):
    """Nest ``operands[0] op0 operands[1] op1 ...`` by priority (higher binds
    tighter) and associativity.  Occurrences need ``priority`` and ``assoc``.

    Two operators of equal priority but opposite associativity that are not
    separated by a lower-priority operator make the nesting undecidable.
    """
    if len(operands) != len(occurrences) + 1:
        raise ValueError("operands and operators must alternate")
    _check_mixed(occurrences)
    pos = 0

    def climb(min_prio: int):
        nonlocal pos
        lhs = operands[pos]
        while pos < len(occurrences) and occurrences[pos].priority >= min_prio:
            op = occurrences[pos]
            pos += 1
            rhs = climb(op.priority + 1 if op.assoc is Assoc.Left else op.priority)
            lhs = OpTree(op, lhs, rhs)
        return lhs

    return climb(0)


def _check_mixed(occurrences: Sequence) -> None:
    # stack of (priority, assoc) for the chain seen so far; a lower priority
    # closes every higher level
    levels: list[tuple[int, Assoc, object]] = []
    for op in occurrences:
        while levels and levels[-1][0] > op.priority:
            levels.pop()
        if levels and levels[-1][0] == op.priority:
            if levels[-1][1] is not op.assoc:
                raise IndeterministicAssociativity(
                    f"operators of priority {op.priority} mix left and right associativity; add parentheses",
                    span=getattr(op, "span", None),
                )
        else:
            levels.append((op.priority, op.assoc, op))


# -- phrase chart ---------------------------------------------------------------

@dataclass
class _Entry:
    node: Node
    score: tuple[int, ...]
    block: bool
    ties: list[Node] = field(default_factory=list)
    inherited: bool = False

    @property
    def ambiguous(self) -> bool:
        return bool(self.ties) or self.inherited


def _merge_scores(*parts: Iterable[int]) -> tuple[int, ...]:
    out: list[int] = []
    for p in parts:
        out.extend(p)
    return tuple(sorted(out, reverse=True))


def _insert(table: dict, node: Node, score, block: bool, inherited: bool) -> None:
    key = (type_key(node.type), block)
    cur = table.get(key)
    if cur is None or score > cur.score:
        table[key] = _Entry(node, score, block, [], inherited)
    elif score == cur.score and node != cur.node and node not in cur.ties:
        cur.ties.append(node)
    elif score == cur.score and node == cur.node:
        cur.inherited = cur.inherited and inherited


def arg_info(node: Node) -> ArgInfo:
    lit = node.value if isinstance(node, (IntLit, DecLit)) else None
    return ArgInfo(node.type, isinstance(node, Block), lit)


def _retype(node: Node, t: TypeRef | None) -> Node:
    if isinstance(node, (IntLit, DecLit)) and t is not None and type_key(t) != type_key(node.type):
        return replace(node, type=t)
    return node


_IMPLICIT = object()


@dataclass(frozen=True)
class _Miss:
    span: tuple[int, int]
    code: str
    message: str


class PhraseChart:
    """CYK-style chart: entries per word span, at two levels.

    ``arg`` holds what may fill an argument position (atoms, locals, type
    names, zero-argument slots of the receiver); ``expr`` adds complete
    messages.  Each table keeps the best entry per (type, literal-block)
    and the interpretations tied with it.
    """

    def __init__(self, items: Sequence, ctx: TypeContext, env: Environment, glyph_orders=None):
        self.items = list(items)
        self.ctx = ctx
        self.env = env
        self.n = len(self.items)
        self.arg: dict[tuple[int, int], dict] = {}
        self.expr: dict[tuple[int, int], dict] = {}
        self.misses: list[_Miss] = []
        self.glyph_orders = glyph_orders or {}
        self._span_cache: dict[tuple[int, int], tuple[int, int]] = {}

    # spans of items in body coordinates
    def text_span(self, i: int, j: int) -> tuple[int, int]:
        return (_span_of(self.items[i])[0], _span_of(self.items[j - 1])[1])

    def words(self, i: int, j: int) -> list[str] | None:
        out = []
        for it in self.items[i:j]:
            if not isinstance(it, Word):
                return None
            out.append(it.text)
        return out

    def run(self) -> None:
        for length in range(1, self.n + 1):
            for i in range(0, self.n - length + 1):
                j = i + length
                self._fill_arg(i, j)
                self._fill_expr(i, j)

    def _fill_arg(self, i: int, j: int) -> None:
        table: dict = {}
        self.arg[(i, j)] = table
        if j - i == 1 and isinstance(self.items[i], Node):
            node = self.items[i]
            _insert(table, node, (), isinstance(node, Block), False)
            return
        words = self.words(i, j)
        if words is None:
            return
        name = " ".join(words)
        span = self.text_span(i, j)
        ctx = self.ctx
        if ctx.has_local(name):
            if name in ctx.delayed:
                locals_, result = ctx.delayed[name]
                if not locals_:
                    _insert(table, LocalRead(span=span, type=result, name=name, evaluates_block=True),
                            (len(words),), False, False)
            else:
                _insert(table, LocalRead(span=span, type=ctx.lookup(name), name=name), (len(words),), False, False)
            # a local hides slots and types spelled the same way
            return
        if name in self.env.prototypes and starts_uppercase(name):
            _insert(table, TypeLit(span=span, type=Named(name), name=name), (len(words),), False, False)
        node = self.env.trie.walk((RECEIVER,) + tuple(words))
        if node is not None and node.slots:
            self._complete(table, node, i, j, _IMPLICIT, [], [])

    def _fill_expr(self, i: int, j: int) -> None:
        table: dict = {}
        self.expr[(i, j)] = table
        for key, e in self.arg[(i, j)].items():
            table[key] = _Entry(e.node, e.score, e.block, list(e.ties), e.inherited)
        self._block_calls(table, i, j)
        root = self.env.trie
        rnode = root.child(RECEIVER)
        if rnode is not None:
            self._walk(table, rnode, i, j, i, _IMPLICIT, [], [])
            for k in range(i + 1, j):
                for e in self.expr[(i, k)].values():
                    self._walk(table, rnode, i, j, k, e, [], [])
        for label, child in root.children.items():
            if label is RECEIVER or label is ARG:
                continue
            self._walk(table, root, i, j, i, None, [], [], only=label)

    def _block_calls(self, table: dict, i: int, j: int) -> None:
        for k in range(i + 1, j):
            words = self.words(i, k)
            if words is None:
                continue
            name = " ".join(words)
            if not self.ctx.has_local(name):
                continue
            if name in self.ctx.delayed:
                locals_, result = self.ctx.delayed[name]
            else:
                t = self.ctx.lookup(name)
                if not isinstance(t, BlockType):
                    continue
                locals_, result = t.locals, t.result
            if not locals_:
                continue
            want = locals_[0] if len(locals_) == 1 else TupleType(tuple(locals_))
            for e in self.arg[(k, j)].values():
                if e.block:
                    continue
                info = arg_info(e.node)
                ok = (info.literal is not None and literal_fits(info.literal, want)) or assignable(self.env, e.node.type, want) is None
                if not ok:
                    continue
                target = LocalRead(span=self.text_span(i, k), type=self.ctx.lookup(name), name=name)
                node = BlockCall(span=self.text_span(i, j), type=result, target=target, args=(_retype(e.node, want),))
                _insert(table, node, _merge_scores((len(words),), e.score), False, e.ambiguous)

    def _walk(self, table, tnode: TrieNode, i, j, pos, receiver, args, parts, only=None) -> None:
        """Extend a partial match of a signature pattern over items[pos:j]."""
        if pos == j and tnode.slots and only is None:
            self._complete(table, tnode, i, j, receiver, args, parts)
        labels = [only] if only is not None else list(tnode.children)
        for label in labels:
            child = tnode.children[label]
            if label is ARG or label is RECEIVER:
                for k in range(pos + 1, j + 1):
                    if (pos, k) == (i, j):
                        continue
                    for e in self.arg[(pos, k)].values():
                        if label is ARG:
                            self._walk(table, child, i, j, k, receiver, args + [e], parts + [e])
                        elif receiver is None:
                            self._walk(table, child, i, j, k, e, args, parts + [e])
            elif pos < j:
                it = self.items[pos]
                if isinstance(it, Word) and it.text == label:
                    self._walk(table, child, i, j, pos + 1, receiver, args, parts)

    def _complete(self, table, tnode: TrieNode, i, j, receiver, args, parts) -> None:
        pattern = tnode.key
        selector = tuple(w for w in pattern if w is not RECEIVER and w is not ARG)
        span = self.text_span(i, j)
        if receiver is _IMPLICIT:
            recv_node = SelfRef(span=(span[0], span[0]), type=self.ctx.self_type)
            recv_info = ArgInfo(self.ctx.self_type)
            recv_score: tuple[int, ...] = ()
            recv_amb = False
        else:
            recv_node = receiver.node
            recv_info = arg_info(recv_node)
            recv_score = receiver.score
            recv_amb = receiver.ambiguous
        proto = receiver_proto(self.env, recv_info)
        if proto is None:
            self.misses.append(_Miss(span, "SlotNotFound", f"{recv_info.type} has no slot {' '.join(pattern)!r}"))
            return
        found = None
        for p in self.env.ancestors_with_self(proto):
            for slot in self.env.declared(p, selector):
                if slot.signature.operator is None and slot.signature.pattern == pattern:
                    found = (p, slot.signature)
                    break
            if found:
                break
        if found is None:
            self.misses.append(_Miss(span, "SlotNotFound", f"{proto} has no slot {' '.join(pattern)!r}"))
            return
        declaring, sig = found
        m = match_signature(self.env, declaring, sig, recv_info, [arg_info(e.node) for e in args])
        if not m:
            self.misses.append(_Miss(span, m.code, m.message))
            return
        new_args = tuple(_retype(e.node, t) for e, t in zip(args, m.arg_types))
        node = Send(
            span=span,
            type=m.result,
            proto=declaring,
            signature=sig,
            receiver=recv_node,
            args=new_args,
            implicit_receiver=receiver is _IMPLICIT,
            eval_order=eval_order(sig, self.glyph_orders.get(sig.glyph_key)),
        )
        score = _merge_scores((len(selector),), recv_score, *(e.score for e in args))
        inherited = recv_amb or any(e.ambiguous for e in args)
        _insert(table, node, score, False, inherited)

    def result(self) -> Node:
        if self.n == 0:
            raise ParseError("empty expression")
        table = self.expr[(0, self.n)]
        span = self.text_span(0, self.n)
        if not table:
            full = [m for m in self.misses if m.span == span]
            if full:
                order = {"CallFormMismatch": 0, "LiteralOutOfRange": 1, "TypeMismatch": 2, "SlotNotFound": 3}
                best = min(full, key=lambda m: order.get(m.code, 9))
                exc = {
                    "CallFormMismatch": _err("CallFormMismatch"),
                    "LiteralOutOfRange": _err("LiteralOutOfRange"),
                    "TypeMismatch": _err("TypeMismatch"),
                }.get(best.code, NoInterpretation)
                raise exc(best.message, span=span)
            text = " ".join(node_label(it) if isinstance(it, Node) else it.text for it in self.items)
            raise NoInterpretation(f"no slot, local or type explains {text!r}", span=span)
        best = max(e.score for e in table.values())
        winners = [e for e in table.values() if e.score == best]
        nodes = [n for e in winners for n in [e.node] + e.ties]
        if len(nodes) > 1 or winners[0].ambiguous:
            labels = sorted({node_label(n) for n in nodes})
            msg = "phrase has several readings of equal length"
            if len(labels) > 1:
                msg += ": " + " | ".join(labels)
            raise TrueAmbiguity(msg + "; add parentheses", interpretations=nodes, span=span)
        return winners[0].node


def _err(code: str):
    from . import errors
    return getattr(errors, code)


def eval_order(sig: SlotSignature, push_order: Sequence[int] | None = None) -> tuple[int, ...]:
    """Receiver first; then arguments in reading order, or in the order a
    glyph program pushes them."""
    placeholders = sig.placeholder_order
    rest = [p for p in placeholders if p != -1]
    if push_order:
        ordered = [placeholders[a] for a in push_order if 0 <= a < len(placeholders) and placeholders[a] != -1]
        seen = set()
        rest = [p for p in ordered + rest if not (p in seen or seen.add(p))]
    return (-1,) + tuple(rest)


def resolve_phrase(phrase: Sequence, ctx: TypeContext, env: Environment) -> Node:
    """Resolve a phrase of words (strings or Word tokens) and typed atoms."""
    items = []
    pos = 0
    for it in phrase:
        if isinstance(it, str):
            items.append(Word(it, (pos, pos + len(it))))
            pos += len(it) + 1
        else:
            items.append(it)
            pos = _span_of(it)[1] + 1
    chart = PhraseChart(items, ctx, env, _glyph_orders(env))
    chart.run()
    return chart.result()


def _glyph_orders(env: Environment) -> dict:
    return {key: prog.push_order for key, prog in getattr(env, "glyphs", {}).items()}


# -- statements and bodies ---------------------------------------------------------

@dataclass(frozen=True)
class Problem:
    code: str
    message: str
    span: tuple[int, int] | None


class BodyParser:
    """Parses and types one body, collecting problems per statement."""

    def __init__(self, env: Environment, ctx: TypeContext):
        self.env = env
        self.ctx = ctx
        self.problems: list[Problem] = []
        self.glyph_orders = _glyph_orders(env)

    # entry point
    def parse(self, text: str) -> Grp:
        try:
            tokens = tokenize_body(text)
            items = _group(tokens)
        except OmegaError as exc:
            self._record(exc)
            return Grp(span=(0, len(text)), type=None, statements=(ErrorNode(span=exc.span or (0, 0), code=exc.code, message=exc.message),))
        return self.grp(items, self.ctx, (0, len(text)))

    def _record(self, exc: OmegaError) -> ErrorNode:
        self.problems.append(Problem(exc.code, exc.message, exc.span))
        return ErrorNode(span=exc.span or (0, 0), code=exc.code, message=exc.message)

    def grp(self, items: list, ctx: TypeContext, span) -> Grp:
        statements: list[Node] = []
        for line in _split(items, "\n"):
            if not line:
                continue
            if any(_is_punct(it, ":") for it in line):
                try:
                    statements.append(self.local_decl(line, ctx))
                except OmegaError as exc:
                    statements.append(self._record(exc))
                continue
            for body in _split(line, ","):
                if not body:
                    continue
                try:
                    statements.append(self.statement(body, ctx))
                except OmegaError as exc:
                    if exc.span is None:
                        exc.span = _items_span(body)
                    statements.append(self._record(exc))
        last = statements[-1] if statements else None
        t = last.type if last is not None and not isinstance(last, (Assign, LocalDecl, ErrorNode)) else None
        return Grp(span=span, type=t, statements=tuple(statements))

    # -- local declarations
    def local_decl(self, line: list, ctx: TypeContext) -> LocalDecl:
        declared = self.declarations(line, ctx)
        for name, t in declared:
            ctx.declare(name, t)
        return LocalDecl(span=_items_span(line), type=None, names=tuple(declared))

    def declarations(self, items: list, ctx: TypeContext) -> list[tuple[str, TypeRef]]:
        flat = _flatten(items)
        # entries: name [':' type] separated by top-level commas
        entries: list[list] = [[]]
        depth = 0
        for tok in flat:
            if isinstance(tok, Punct) and tok.ch in "({[":
                depth += 1
            elif isinstance(tok, Punct) and tok.ch in ")}]":
                depth -= 1
            if depth == 0 and _is_punct(tok, ","):
                entries.append([])
            else:
                entries[-1].append(tok)
        out: list[tuple[str, TypeRef | None]] = []
        for entry in entries:
            colon = next((k for k, t in enumerate(entry) if _is_punct(t, ":")), None)
            name_toks = entry if colon is None else entry[:colon]
            if not name_toks or not all(isinstance(t, Word) for t in name_toks):
                raise ParseError("a local declaration is 'name: Type'", span=_items_span(entry) if entry else None)
            name = " ".join(t.text for t in name_toks)
            t = None if colon is None else self.type_from_tokens(entry[colon + 1:], ctx)
            out.append((name, t))
        if out[-1][1] is None:
            raise ParseError(f"local {out[-1][0]!r} has no type", span=_items_span(items))
        # untyped names take the type of the next typed one
        result: list[tuple[str, TypeRef]] = []
        pending: list[str] = []
        for name, t in out:
            pending.append(name)
            if t is not None:
                result += [(p, t) for p in pending]
                pending = []
        return result

    def type_from_tokens(self, toks: list, ctx: TypeContext) -> TypeRef:
        if not toks:
            raise ParseError("expected a type")
        lexemes = []
        for t in _expand_brackets(toks):
            if isinstance(t, Word):
                lexemes.append(("word", FormattedName.plain(t.text)))
            elif isinstance(t, Punct):
                lexemes.append(("punct", t.ch))
            elif isinstance(t, ExactTypeMark):
                lexemes.append(("exact",))
            else:
                raise ParseError("unexpected token in a type", span=t.span)
        try:
            tref = parse_type_lexemes(lexemes)
        except OmegaError as exc:
            raise ParseError(exc.message, span=_items_span(toks)) from None
        tref = substitute_exact(tref, ctx.self_type)
        self.check_type(tref, ctx, _items_span(toks))
        return tref

    def check_type(self, t: TypeRef | None, ctx: TypeContext, span) -> None:
        if isinstance(t, Named):
            if t.canonical not in self.env.prototypes and not is_type_var(self.env, ctx.proto, t):
                raise UnknownType(f"unknown type {t.canonical!r}", span=span)
            for p in t.params:
                self.check_type(p, ctx, span)
        elif isinstance(t, TupleType):
            for e in t.elements:
                self.check_type(e, ctx, span)
        elif isinstance(t, BlockType):
            for e in t.locals:
                self.check_type(e, ctx, span)
            self.check_type(t.result, ctx, span)

    # -- statements
    def statement(self, items: list, ctx: TypeContext) -> Node:
        arrows = [k for k, it in enumerate(items) if isinstance(it, Arrow)]
        if not arrows:
            return self.expression(items, ctx)
        bounds = [-1] + arrows
        target_parts = [items[a + 1:b] for a, b in zip(bounds, bounds[1:])]
        value_items = items[arrows[-1] + 1:]
        if not value_items:
            raise ParseError("assignment without a value", span=items[arrows[-1]].span)
        targets = [self.target(part, ctx, items[arrows[k]].span) for k, part in enumerate(target_parts)]
        value = self.expression(value_items, ctx)
        span = _items_span(items)
        t = value.type
        destructure = (len(targets) > 1 and isinstance(t, TupleType) and len(t.elements) == len(targets))
        if destructure:
            for target, et in zip(targets, t.elements):
                self.check_store(target, et, None, ctx)
        else:
            lit = value.value if isinstance(value, (IntLit, DecLit)) else None
            for target in targets:
                self.check_store(target, t, lit, ctx)
            if lit is not None and len(targets) == 1:
                value = _retype(value, targets[0].type) if literal_fits(lit, targets[0].type) else value
        return Assign(span=span, type=None, targets=tuple(targets), value=value, destructure=destructure)

    def check_store(self, target: Target, t, literal, ctx) -> None:
        if literal is not None and literal_fits(literal, target.type):
            return
        if literal is not None and literal_out_of_range(literal, target.type):
            self.problems.append(Problem("LiteralOutOfRange", f"{literal} does not fit {target.type}", target.span))
            return
        code = assignable(self.env, t, target.type)
        if code:
            shown = "nothing" if t is None else str(t)
            self.problems.append(Problem(code, f"cannot assign {shown} to {target.name!r} of type {target.type}", target.span))

    def target(self, part: list, ctx: TypeContext, arrow_span) -> Target:
        if not part:
            raise ParseError("assignment arrow without a target", span=arrow_span)
        span = _items_span(part)
        name = " ".join(it.text for it in part) if all(isinstance(it, Word) for it in part) else None
        if name is not None and ctx.has_local(name):
            if name in ctx.delayed:
                raise NotAssignable(f"delayed parameter {name!r} cannot be assigned", span=span)
            return Target(span=span, type=ctx.lookup(name), name=name, kind="local")
        if name is not None:
            words = tuple(name.split())
            for p in self.env.ancestors_with_self(ctx.proto):
                for slot in self.env.declared(p, words):
                    sig = slot.signature
                    if sig.operator is None and sig.pattern == (RECEIVER,) + words:
                        if not slot.is_attribute:
                            raise NotAssignable(f"{name!r} is a function slot of {p}, not an attribute", span=span)
                        t = substitute_exact(sig.return_type, ctx.self_type)
                        return Target(span=span, type=t, name=name, kind="attribute", proto=p, signature=sig)
        # something readable but not a local or an attribute of the receiver
        try:
            self.phrase(part, ctx)
        except OmegaError:
            raise UnknownTarget(f"{_show_items(part)!r} is neither a local nor an attribute", span=span) from None
        raise NotAssignable(
            f"{_show_items(part)!r} cannot be assigned; only locals and attributes of the receiver can", span=span
        )

    # -- expressions
    def expression(self, items: list, ctx: TypeContext) -> Node:
        seg = split_operators(items, self.env.operators)
        operands = []
        for operand in seg.operands:
            node = self.phrase(operand.items, ctx)
            for op in operand.postfix:
                node = self.unary(op, node)
            for op in reversed(operand.prefix):
                node = self.unary(op, node)
            operands.append(node)
        if not seg.binaries:
            return operands[0]
        occurrences = [self.priority_of(op, operands[k], operands[k + 1]) for k, op in enumerate(seg.binaries)]
        tree = build_operator_tree(operands, occurrences)
        return self.fold(tree)

    def priority_of(self, op: OpOccurrence, left: Node, right: Node) -> OpOccurrence:
        decls = [sig.operator for _, sig in self.env.operators[op.keyword] if sig.operator.arity is Arity.BinaryInfix]
        info = decls[0]
        if len({(d.priority, d.assoc) for d in decls}) > 1:
            found = resolve_operator(self.env, op.keyword, Arity.BinaryInfix, [arg_info(left), arg_info(right)])
            if not isinstance(found, NoMatch):
                info = found[1].operator
        return replace(op, priority=info.priority, assoc=info.assoc)

    def fold(self, tree) -> Node:
        if not isinstance(tree, OpTree):
            return tree
        left = self.fold(tree.left)
        right = self.fold(tree.right)
        return self.apply(tree.op, [left, right])

    def unary(self, op: OpOccurrence, operand: Node) -> Node:
        return self.apply(op, [operand])

    def apply(self, op: OpOccurrence, operands: list[Node]) -> Node:
        found = resolve_operator(self.env, op.keyword, op.arity, [arg_info(o) for o in operands])
        if isinstance(found, NoMatch):
            exc = _err(found.code) if found.code != "SlotNotFound" else NoInterpretation
            raise exc(found.message, span=op.span)
        proto, sig, m = found
        if m.swapped:
            operands = [_retype(operands[0], m.arg_types[0]), operands[1]]
            order = (1, 0)
        else:
            operands = [operands[0]] + [_retype(o, t) for o, t in zip(operands[1:], m.arg_types)]
            order = tuple(range(len(operands)))
        span = (min([op.span[0]] + [o.span[0] for o in operands]), max([op.span[1]] + [o.span[1] for o in operands]))
        return OpApply(span=span, type=m.result, proto=proto, signature=sig, keyword=op.keyword,
                       operands=tuple(operands), swapped=m.swapped, eval_order=order)

    def phrase(self, items: list, ctx: TypeContext) -> Node:
        resolved = []
        for it in items:
            if isinstance(it, Word):
                resolved.append(it)
            else:
                resolved.append(self.atom(it, ctx))
        if len(resolved) == 1 and isinstance(resolved[0], Node):
            return resolved[0]
        chart = PhraseChart(resolved, ctx, self.env, self.glyph_orders)
        chart.run()
        return chart.result()

    def atom(self, it, ctx: TypeContext) -> Node:
        if isinstance(it, Number):
            if "." in it.text:
                return DecLit(span=it.span, type=DECIMAL, text=it.text, value=float(it.text))
            return IntLit(span=it.span, type=INTEGER, text=it.text, value=int(it.text))
        if isinstance(it, StringLit):
            return StrLit(span=it.span, type=STRING, value=it.text)
        if isinstance(it, External):
            return ExternalLit(span=it.span, type=ANY, text=it.text)
        if isinstance(it, MatrixText):
            return MatrixLit(span=it.span, type=ANY, text=it.text)
        if isinstance(it, SelfMark):
            return SelfRef(span=it.span, type=ctx.self_type)
        if isinstance(it, ExactTypeMark):
            return TypeLit(span=it.span, type=ctx.self_type, name=ctx.proto)
        if isinstance(it, Bracket) and it.open == "(":
            return self.paren(it, ctx)
        if isinstance(it, Bracket):
            return self.block(it, ctx)
        if isinstance(it, Arrow):
            raise ParseError("unexpected assignment arrow", span=it.span)
        raise ParseError(f"unexpected {getattr(it, 'ch', it)!r}", span=it.span)

    def paren(self, br: Bracket, ctx: TypeContext) -> Node:
        items = [it for it in br.items if not _is_punct(it, "\n")]
        parts = _split(items, ",")
        if not items:
            raise ParseError("empty parentheses", span=br.span)
        if len(parts) == 1:
            return self.statement_value(parts[0], ctx)
        if any(not p for p in parts):
            raise ParseError("empty tuple element", span=br.span)
        elements = tuple(self.statement_value(p, ctx) for p in parts)
        return TupleExpr(span=br.span, type=TupleType(tuple(e.type for e in elements)), elements=elements)

    def statement_value(self, items: list, ctx: TypeContext) -> Node:
        node = self.statement(items, ctx)
        if isinstance(node, Assign):
            raise ParseError("an assignment has no value", span=node.span)
        return node

    def block(self, br: Bracket, ctx: TypeContext) -> Block:
        declared = self.declarations(br.locals, ctx) if br.locals else []
        inner = ctx.push(dict(declared))
        for name, _ in declared:
            inner.delayed.pop(name, None)
        body = self.grp(br.items, inner, br.span)
        t = BlockType(tuple(t for _, t in declared), body.type)
        return Block(span=br.span, type=t, locals=tuple(declared), body=body)


def _expand_brackets(toks: Sequence) -> list:
    """Undo the opaque reading of ``[...]`` inside a type such as ``{[ℤ] ℤ}``."""
    out = []
    for t in toks:
        if isinstance(t, MatrixText):
            start = t.span[0]
            inner = [_shift(x, start + 1) for x in tokenize_body(t.text)]
            out += [Punct("[", (start, start + 1))] + _expand_brackets(inner) + [Punct("]", (t.span[1] - 1, t.span[1]))]
        else:
            out.append(t)
    return out


def _shift(tok, delta: int):
    return replace(tok, span=(tok.span[0] + delta, tok.span[1] + delta))


def _show_items(items: Sequence) -> str:
    return " ".join(getattr(it, "text", "…") for it in items)


def _flatten(items: Sequence) -> list:
    out = []
    for it in items:
        if isinstance(it, Bracket):
            if it.locals is not None:
                out.append(Punct("[", (it.span[0], it.span[0] + 1)))
                out.extend(_flatten(it.locals))
                out.append(Punct("]", (it.span[0], it.span[0] + 1)))
            out.append(Punct(it.open, (it.span[0], it.span[0] + 1)))
            out.extend(_flatten(it.items))
            out.append(Punct(")" if it.open == "(" else "}", (it.span[1] - 1, it.span[1])))
        else:
            out.append(it)
    return out


def body_context(env: Environment, proto: str, signature: SlotSignature | None) -> TypeContext:
    """Initial scope of a body: its parameters, with ⊚ read as the prototype."""
    ctx = TypeContext(proto, signature)
    if signature is None:
        return ctx
    self_type = ctx.self_type
    for p in signature.params:
        name = p.name.canonical
        t = substitute_exact(p.type, self_type)
        if p.delayed:
            locals_ = tuple(substitute_exact(lt, self_type) for _, lt in p.block_locals)
            ctx.delayed[name] = (locals_, t)
            ctx.declare(name, BlockType(locals_, t))
        else:
            ctx.declare(name, t)
    return ctx


def parse_body(text: str, signature: SlotSignature | None, env: Environment, proto: str) -> Grp:
    """Parse and type a body; raises ParseErrors listing every problem."""
    parser = BodyParser(env, body_context(env, proto, signature))
    grp = parser.parse(text)
    if parser.problems:
        errs = []
        for p in parser.problems:
            e = ParseError(p.message, span=p.span)
            e.code = p.code
            errs.append(e)
        raise ParseErrors(errs)
    return grp
