"""Whole-slot checking on top of the body parser.

The body parser already types every expression and reports parse, binding
and assignment problems.  This module adds the checks that need the finished
tree (access rights, cloneability, the declared return type, redefinitions)
and turns everything into located diagnostics.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable

from .body_parser import BodyParser, body_context
from .environment import Environment, check_access
from .header import Named, PrototypeHeader, Slot, SlotSignature
from .syntax import Assign, BlockCall, ErrorNode, Grp, LocalDecl, Node, OpApply, Send
from .types import assignable, substitute_exact, types_equal

__all__ = ["Severity", "Diagnostic", "CheckedSlot", "CheckResult", "check_slot_body", "check_environment"]


class Severity(enum.Enum):
    Error = "error"
    Warning = "warning"


@dataclass(frozen=True)
class Diagnostic:
    severity: Severity
    code: str
    message: str
    file: str | None = None
    line: int = 1
    col: int = 1
    # character offsets into the slot body, when the problem lies in one
    span: tuple[int, int] | None = None
    related: tuple[tuple[str | None, int, int], ...] = ()

    def sort_key(self):
        return (self.file or "", self.line, self.col, self.code, self.message)

    def format(self) -> str:
        return f"{self.file or '<memory>'}:{self.line}:{self.col}: {self.severity.value}[{self.code}]: {self.message}"


@dataclass(frozen=True)
class CheckedSlot:
    proto: str
    slot: Slot
    body: Grp | None
    diagnostics: tuple[Diagnostic, ...]

    @property
    def checked(self) -> bool:
        return not any(d.severity is Severity.Error for d in self.diagnostics)


@dataclass
class CheckResult:
    slots: list[CheckedSlot] = field(default_factory=list)
    diagnostics: list[Diagnostic] = field(default_factory=list)

    @property
    def errors(self) -> list[Diagnostic]:
        return [d for d in self.diagnostics if d.severity is Severity.Error]


def _position(slot: Slot, offset: int) -> tuple[int, int]:
    text = slot.raw_body or ""
    before = text[:offset]
    nl = before.count("\n")
    if nl == 0:
        return slot.body_line, slot.body_col + offset
    return slot.body_line + nl, offset - before.rfind("\n")


def check_slot_body(slot: Slot, env: Environment, proto: str) -> tuple[Grp | None, list[Diagnostic]]:
    """Type one slot body and collect its diagnostics.

    Attributes have no body and yield ``(None, [])``.
    """
    if slot.is_attribute or slot.raw_body is None:
        return None, []
    header = env.prototypes.get(proto)
    source = header.source if header else None
    sig = slot.signature
    ctx = body_context(env, proto, sig)
    parser = BodyParser(env, ctx)
    grp = parser.parse(slot.raw_body)
    out: list[Diagnostic] = []

    def emit(code: str, message: str, span, severity=Severity.Error):
        line, col = _position(slot, span[0] if span else 0)
        out.append(Diagnostic(severity, code, message, source, line, col, span))

    for p in parser.problems:
        emit(p.code, p.message, p.span)

    delayed = {p.name.canonical for p in sig.params if p.delayed}
    for node in grp.walk():
        if isinstance(node, (Send, OpApply)):
            verdict = check_access(env, proto, (node.proto, node.signature))
            if not verdict:
                emit("AccessDenied", verdict.reason, node.span)
        if isinstance(node, Send) and node.signature.selector == ("clone",):
            recv = getattr(node.receiver.type, "canonical", None)
            if recv in env.prototypes and "Clone" not in env.ancestors_with_self(recv):
                emit("NotCloneable", f"{recv} does not inherit Clone", node.span)
        if isinstance(node, BlockCall) and node.target.name not in delayed:
            emit("RareForm", f"block-valued local {node.target.name!r} called with an argument", node.span, Severity.Warning)
        if isinstance(node, Assign):
            for t in node.targets:
                if t.kind == "attribute" and not env.is_ancestor(proto, t.proto):
                    emit("AttributeEncapsulation", f"attribute {t.name!r} of {t.proto} assigned outside it", t.span)

    expected = substitute_exact(sig.return_type, ctx.self_type)
    last = grp.statements[-1] if grp.statements else None
    if expected is not None and not isinstance(last, ErrorNode) and not parser.problems:
        found = None if last is None or isinstance(last, (Assign, LocalDecl)) else last.type
        if found is None or assignable(env, found, expected):
            shown = "nothing" if found is None else str(found)
            emit("ReturnTypeMismatch", f"body of {sig.pattern_text!r} yields {shown}, declared {expected}",
                 last.span if last is not None else None)
    return grp, out


def _redefinition_diagnostics(env: Environment, header: PrototypeHeader) -> list[Diagnostic]:
    out = []
    for slot in header.slots:
        sig = slot.signature
        for ancestor in env.ancestors_with_self(header.canonical)[1:]:
            hit = [s for s in env.declared(ancestor, sig.selector)
                   if s.signature.pattern == sig.pattern and _same_category(s.signature, sig)]
            if not hit:
                continue
            self_type = Named(header.canonical)
            mine = substitute_exact(sig.return_type, self_type)
            theirs = substitute_exact(hit[0].signature.return_type, self_type)
            if not types_equal(mine, theirs):
                out.append(Diagnostic(
                    Severity.Error, "RedefinitionMismatch",
                    f"{sig.pattern_text!r} returns {sig.return_type} but {ancestor} declares {hit[0].signature.return_type}",
                    header.source, slot.body_line or 1, slot.body_col or 1,
                ))
            break
    return out


def _same_category(a: SlotSignature, b: SlotSignature) -> bool:
    if (a.operator is None) != (b.operator is None):
        return False
    return a.operator is None or a.operator.arity is b.operator.arity


def check_environment(env: Environment, only: Iterable[str] | None = None) -> CheckResult:
    """Check every slot body of every prototype (or of ``only``).

    Diagnostics are sorted by file and position, so the result does not
    depend on the order prototypes were loaded in.
    """
    result = CheckResult()
    names = sorted(only if only is not None else env.prototypes)
    for name in names:
        header = env.prototypes[name]
        result.diagnostics.extend(_redefinition_diagnostics(env, header))
        for slot in header.slots:
            body, diags = check_slot_body(slot, env, name)
            result.slots.append(CheckedSlot(name, slot, body, tuple(diags)))
            result.diagnostics.extend(diags)
    result.diagnostics.sort(key=Diagnostic.sort_key)
    return result
