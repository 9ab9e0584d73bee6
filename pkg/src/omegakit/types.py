"""Static types: assignability, literal widths and signature matching."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .environment import Environment, substitute_generics
from .header import BlockType, ExactReceiver, Named, SlotSignature, TupleType, TypeRef

__all__ = [
    "AnyType",
    "ANY",
    "INTEGER",
    "DECIMAL",
    "STRING",
    "TypeContext",
    "ArgInfo",
    "Match",
    "NoMatch",
    "type_key",
    "types_equal",
    "assignable",
    "literal_fits",
    "substitute_exact",
    "match_signature",
    "receiver_proto",
    "resolve_operator",
]


@dataclass(frozen=True)
class AnyType:
    """Type of externals and opaque literals; compatible with everything."""

    def __str__(self) -> str:
        return "?"


ANY = AnyType()
INTEGER = Named("ℤ")
DECIMAL = Named("ℝ32")
STRING = Named("String")

# mapped machine widths accepted for literals, by family
INT_RANGES = {
    "ℤ8": (-(2 ** 7), 2 ** 7 - 1),
    "ℤ16": (-(2 ** 15), 2 ** 15 - 1),
    "ℤ32": (-(2 ** 31), 2 ** 31 - 1),
    "ℤ64": (-(2 ** 63), 2 ** 63 - 1),
    "ℕ8": (0, 2 ** 8 - 1),
    "ℕ16": (0, 2 ** 16 - 1),
    "ℕ32": (0, 2 ** 32 - 1),
    "ℕ64": (0, 2 ** 64 - 1),
}
DECIMAL_TYPES = {"ℝ", "ℝ32", "ℝ64"}

_TYPE_VAR_RE = re.compile(r"^[A-Z][0-9]*$")


@dataclass
class TypeContext:
    """What a body sees while it is checked."""

    proto: str
    signature: SlotSignature | None = None
    scopes: list[dict[str, TypeRef]] = field(default_factory=lambda: [{}])
    delayed: dict[str, tuple] = field(default_factory=dict)  # name -> block local types
    generics: dict[str, TypeRef] = field(default_factory=dict)

    @property
    def self_type(self) -> Named:
        return Named(self.proto)

    def lookup(self, name: str) -> TypeRef | None:
        for scope in reversed(self.scopes):
            if name in scope:
                return scope[name]
        return None

    def has_local(self, name: str) -> bool:
        return any(name in scope for scope in self.scopes)

    def local_names(self) -> list[str]:
        names: dict[str, None] = {}
        for scope in self.scopes:
            names.update(dict.fromkeys(scope))
        return list(names)

    def declare(self, name: str, t: TypeRef) -> None:
        self.scopes[-1][name] = t

    def push(self, bindings: Mapping[str, TypeRef] | None = None) -> "TypeContext":
        return TypeContext(self.proto, self.signature, self.scopes + [dict(bindings or {})], dict(self.delayed), self.generics)


def type_key(t: TypeRef | None) -> str:
    """Canonical text of a type; formatting does not matter."""
    if t is None:
        return "void"
    if isinstance(t, Named):
        if t.params:
            return t.canonical + "(" + ", ".join(type_key(p) for p in t.params) + ")"
        return t.canonical
    if isinstance(t, TupleType):
        return "(" + ", ".join(type_key(e) for e in t.elements) + ")"
    if isinstance(t, BlockType):
        head = "[" + ", ".join(type_key(e) for e in t.locals) + "]" if t.locals else ""
        return head + "{" + (type_key(t.result) if t.result is not None else "") + "}"
    return str(t)


def types_equal(a: TypeRef | None, b: TypeRef | None) -> bool:
    if isinstance(a, AnyType) or isinstance(b, AnyType):
        return True
    if isinstance(a, TupleType) and isinstance(b, TupleType):
        return len(a.elements) == len(b.elements) and all(types_equal(x, y) for x, y in zip(a.elements, b.elements))
    return type_key(a) == type_key(b)


def assignable(env: Environment, source: TypeRef | None, target: TypeRef | None) -> str | None:
    """None when a ``source`` value may be stored where ``target`` is expected.

    Otherwise the diagnostic code: ``PolymorphismForbidden`` when the target
    is an ancestor reached only through an implementation link,
    ``TypeMismatch`` for anything else.
    """
    if isinstance(source, AnyType) or isinstance(target, AnyType):
        return None
    if types_equal(source, target):
        return None
    if isinstance(source, TupleType) and isinstance(target, TupleType):
        if len(source.elements) != len(target.elements):
            return "TypeMismatch"
        for s, t in zip(source.elements, target.elements):
            code = assignable(env, s, t)
            if code:
                return code
        return None
    if isinstance(source, Named) and isinstance(target, Named):
        s, t = source.canonical, target.canonical
        if s in env.prototypes and t in env.prototypes and env.is_ancestor(s, t):
            if t != s and not env.polymorphic_ancestor(s, t):
                return "PolymorphismForbidden"
            if target.params and source.params != target.params and s == t:
                return "TypeMismatch"
            return None
    return "TypeMismatch"


def literal_fits(value, target: TypeRef | None) -> bool:
    """Whether a numeric literal may take the mapped type ``target``."""
    if not isinstance(target, Named) or target.params:
        return False
    name = target.canonical
    if isinstance(value, int):
        if name == "ℤ":
            return True
        rng = INT_RANGES.get(name)
        return rng is not None and rng[0] <= value <= rng[1]
    return name in DECIMAL_TYPES


def literal_out_of_range(value, target: TypeRef | None) -> bool:
    return (isinstance(value, int) and isinstance(target, Named)
            and target.canonical in INT_RANGES and not literal_fits(value, target))


def substitute_exact(t: TypeRef | None, receiver: TypeRef | None) -> TypeRef | None:
    """Replace every ⊚ in ``t`` by the receiver's static type."""
    if isinstance(t, ExactReceiver):
        return receiver
    if isinstance(t, Named) and t.params:
        return Named(t.name, tuple(substitute_exact(p, receiver) for p in t.params))
    if isinstance(t, TupleType):
        return TupleType(tuple(substitute_exact(e, receiver) for e in t.elements))
    if isinstance(t, BlockType):
        return BlockType(tuple(substitute_exact(e, receiver) for e in t.locals), substitute_exact(t.result, receiver))
    return t


def is_type_var(env: Environment, declaring: str, t: TypeRef | None) -> bool:
    if not isinstance(t, Named) or t.params:
        return False
    name = t.canonical
    if name in env.prototypes:
        return False
    return env.is_generic_of(declaring, name) or bool(_TYPE_VAR_RE.match(name))


@dataclass(frozen=True)
class ArgInfo:
    """What a call site offers for one placeholder."""

    type: TypeRef | None
    block_literal: bool = False
    literal: int | float | None = None
    block_locals: tuple[TypeRef, ...] = ()


@dataclass(frozen=True)
class Match:
    result: TypeRef | None
    # final type of every argument (literal widths applied)
    arg_types: tuple[TypeRef | None, ...]
    bindings: tuple[tuple[str, TypeRef | None], ...] = ()
    swapped: bool = False


@dataclass(frozen=True)
class NoMatch:
    position: int  # -1 receiver, k >= 0 parameter index
    code: str  # TypeMismatch | CallFormMismatch | LiteralOutOfRange
    message: str

    def __bool__(self) -> bool:
        return False


class _Unifier:
    def __init__(self, env: Environment, declaring: str, receiver: TypeRef | None, bindings):
        self.env = env
        self.declaring = declaring
        self.receiver = receiver
        self.bindings: dict[str, TypeRef | None] = dict(bindings)

    def expected(self, t: TypeRef | None) -> TypeRef | None:
        return substitute_generics(substitute_exact(t, self.receiver), {k: v for k, v in self.bindings.items() if v is not None})

    def unify(self, declared: TypeRef | None, actual: TypeRef | None, literal=None) -> tuple[bool, TypeRef | None, str]:
        """(ok, final actual type, failure code)."""
        exp = self.expected(declared)
        if is_type_var(self.env, self.declaring, exp):
            name = exp.canonical
            if name in self.bindings:
                exp = self.bindings[name]
            else:
                self.bindings[name] = actual
                return True, actual, ""
        if isinstance(exp, TupleType) and isinstance(actual, TupleType) and len(exp.elements) == len(actual.elements):
            finals = []
            for d, a in zip(exp.elements, actual.elements):
                ok, f, code = self.unify(d, a)
                if not ok:
                    return False, actual, code
                finals.append(f)
            return True, TupleType(tuple(finals)), ""
        if literal is not None and not isinstance(literal, bool) and exp is not None:
            if literal_fits(literal, exp):
                return True, exp, ""
            if literal_out_of_range(literal, exp):
                return False, actual, "LiteralOutOfRange"
        if isinstance(declared, ExactReceiver):
            # the exact receiver type admits no subtype
            return (types_equal(actual, exp), actual, "TypeMismatch")
        code = assignable(self.env, actual, exp)
        return (code is None, actual, code or "")


def match_signature(
    env: Environment,
    declaring: str,
    sig: SlotSignature,
    receiver: ArgInfo,
    args: Sequence[ArgInfo],
) -> Match | NoMatch:
    """Check a call site against one declaration (no commutativity retry)."""
    if len(args) != len(sig.params):
        return NoMatch(len(args), "TypeMismatch", f"{sig.pattern_text!r} takes {len(sig.params)} arguments")
    if sig.receiver_delayed != receiver.block_literal:
        what = "a literal block" if sig.receiver_delayed else "a plain value"
        return NoMatch(-1, "CallFormMismatch", f"receiver of {sig.pattern_text!r} must be {what}")
    recv_type = receiver.type
    if receiver.block_literal and isinstance(recv_type, BlockType):
        recv_type = recv_type.result
    initial = env.parent_bindings(recv_type, declaring) if isinstance(recv_type, Named) else {}
    u = _Unifier(env, declaring, recv_type, initial)
    finals: list[TypeRef | None] = []
    for k, (param, arg) in enumerate(zip(sig.params, args)):
        if param.delayed != arg.block_literal:
            if param.delayed:
                msg = f"argument {param.name.canonical!r} of {sig.pattern_text!r} must be written as a block {{...}}"
            else:
                msg = f"argument {param.name.canonical!r} of {sig.pattern_text!r} is not a delayed block"
            return NoMatch(k, "CallFormMismatch", msg)
        if param.delayed:
            block = arg.type if isinstance(arg.type, BlockType) else BlockType((), arg.type)
            want_locals = [t for _, t in param.block_locals]
            if len(want_locals) != len(block.locals):
                return NoMatch(k, "TypeMismatch",
                               f"block for {param.name.canonical!r} must declare {len(want_locals)} local(s)")
            for wl, gl in zip(want_locals, block.locals):
                if not types_equal(u.expected(wl), gl):
                    return NoMatch(k, "TypeMismatch", f"block local of type {gl} where {u.expected(wl)} is expected")
            if param.type is not None:
                ok, _, code = u.unify(param.type, block.result)
                if not ok:
                    return NoMatch(k, code, f"block result {block.result} does not fit {u.expected(param.type)}")
            finals.append(arg.type)
            continue
        ok, final, code = u.unify(param.type, arg.type, arg.literal)
        if not ok:
            return NoMatch(k, code or "TypeMismatch",
                           f"argument {param.name.canonical!r} of {sig.pattern_text!r}: "
                           f"{_show(arg.type)} does not fit {_show(u.expected(param.type))}")
        finals.append(final)
    result = u.expected(sig.return_type)
    return Match(result, tuple(finals), tuple(sorted(u.bindings.items())))


def receiver_proto(env: Environment, info: ArgInfo) -> str | None:
    """Prototype whose lookup order answers a message sent to ``info``."""
    t = info.type
    if info.block_literal and isinstance(t, BlockType):
        t = t.result
    if isinstance(t, Named) and t.canonical in env.prototypes:
        return t.canonical
    return None


def resolve_operator(env: Environment, keyword: str, arity, operands: Sequence[ArgInfo]):
    """First declaration of ``keyword`` along the receiver's lookup order whose
    types match; a commutative binary declaration found on the right
    operand's type is tried with the operands swapped.

    Returns ``(proto, signature, Match)`` or the first NoMatch met.
    """
    from .environment import candidate_slots

    first_fail: NoMatch | None = None
    recv = receiver_proto(env, operands[0])
    if recv is not None:
        for proto, slot in candidate_slots(env, recv, [keyword], arity):
            m = match_signature(env, proto, slot.signature, operands[0], operands[1:])
            if m:
                return proto, slot.signature, m
            first_fail = first_fail or m
    if len(operands) == 2:
        other = receiver_proto(env, operands[1])
        if other is not None:
            for proto, slot in candidate_slots(env, other, [keyword], arity):
                sig = slot.signature
                if not sig.operator.commutative:
                    continue
                m = match_signature(env, proto, sig, operands[1], operands[:1])
                if m:
                    return proto, sig, Match(m.result, (m.arg_types[0],), m.bindings, swapped=True)
    if first_fail is not None:
        return first_fail
    shown = " ".join(str(o.type) for o in operands)
    return NoMatch(-1, "SlotNotFound", f"no operator {keyword!r} applies to {shown}")


def _show(t) -> str:
    return "nothing" if t is None else str(t)
