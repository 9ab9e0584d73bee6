"""Global, immutable index over every prototype header.

Built once per load: the inheritance graph with its lookup order, the
operator dictionary used to segment bodies, and the signature trie shared by
the body parser and auto-completion.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import (
    GlyphArityMismatch,
    InheritanceCycle,
    NameCollision,
    SlotNotFound,
    UnknownParent,
    UnknownPrototype,
)
from .header import (
    ARG,
    RECEIVER,
    Arity,
    InheritLink,
    Named,
    PrototypeHeader,
    Slot,
    SlotSignature,
    TypeRef,
)

__all__ = [
    "TrieNode",
    "Environment",
    "Allowed",
    "Denied",
    "Assertion",
    "build_environment",
    "lookup_order",
    "resolve_slot",
    "check_access",
    "collect_assertions",
]


@dataclass
class TrieNode:
    key: tuple[str, ...] = ()
    children: dict[str, "TrieNode"] = field(default_factory=dict)
    # (declaring prototype, slot) whose full pattern ends here
    slots: list[tuple[str, Slot]] = field(default_factory=list)

    def child(self, label: str) -> "TrieNode | None":
        return self.children.get(label)

    def walk(self, labels: Iterable[str]) -> "TrieNode | None":
        node: TrieNode | None = self
        for label in labels:
            node = node.children.get(label) if node else None
        return node

    def iter_nodes(self):
        yield self
        for label in sorted(self.children, key=_label_sort):
            yield from self.children[label].iter_nodes()

    def terminal_nodes(self) -> list["TrieNode"]:
        return [n for n in self.iter_nodes() if n.slots]

    def all_slots(self):
        for node in self.iter_nodes():
            yield from node.slots


def _label_sort(label: str):
    return (0 if label is RECEIVER else 1 if label is ARG else 2, str(label))


@dataclass
class Environment:
    prototypes: dict[str, PrototypeHeader]
    operators: dict[str, tuple[tuple[str, SlotSignature], ...]]
    trie: TrieNode
    parents: dict[str, tuple[InheritLink, ...]]
    children: dict[str, tuple[str, ...]]
    slot_index: dict[str, dict[tuple[str, ...], tuple[Slot, ...]]]
    glyphs: dict = field(default_factory=dict)
    _orders: dict[str, tuple[str, ...]] = field(default_factory=dict, repr=False)

    def header(self, name: str) -> PrototypeHeader:
        try:
            return self.prototypes[name]
        except KeyError:
            raise UnknownPrototype(f"unknown prototype {name!r}") from None

    def has_prototype(self, name: str) -> bool:
        return name in self.prototypes

    def declared(self, proto: str, selector: tuple[str, ...]) -> tuple[Slot, ...]:
        return self.slot_index.get(proto, {}).get(selector, ())

    def is_generic_of(self, proto: str, name: str) -> bool:
        header = self.prototypes.get(proto)
        return header is not None and any(g.canonical == name for g in header.generics)

    def ancestors_with_self(self, proto: str) -> tuple[str, ...]:
        return (proto,) + lookup_order(self, proto)

    def is_ancestor(self, child: str, ancestor: str) -> bool:
        return ancestor == child or ancestor in lookup_order(self, child)

    def polymorphic_ancestor(self, child: str, ancestor: str) -> bool:
        """True when ``ancestor`` is reachable from ``child`` through solid links only."""
        if child == ancestor:
            return True
        seen = set()
        stack = [child]
        while stack:
            cur = stack.pop()
            for link in self.parents.get(cur, ()):
                if not link.polymorphic:
                    continue
                parent = link.parent.canonical
                if parent == ancestor:
                    return True
                if parent not in seen:
                    seen.add(parent)
                    stack.append(parent)
        return False

    def parent_bindings(self, receiver: Named, declaring: str) -> dict[str, TypeRef]:
        """Generic bindings of ``declaring`` as seen from a receiver type.

        Walks the inheritance path (lookup order) substituting parent-link type
        arguments.  Unbound generics are simply absent from the result.
        """
        start = receiver.canonical
        header = self.prototypes.get(start)
        if header is None:
            return {}
        bindings = {}
        if receiver.params and len(receiver.params) == len(header.generics):
            bindings = {g.canonical: t for g, t in zip(header.generics, receiver.params)}
        if start == declaring:
            return bindings
        path = self._path_to(start, declaring)
        if path is None:
            return {}
        for link in path:
            parent = self.prototypes[link.parent.canonical]
            args = [substitute_generics(p, bindings) for p in link.parent.params]
            bindings = {}
            if len(args) == len(parent.generics):
                for g, t in zip(parent.generics, args):
                    if not (isinstance(t, Named) and not t.params and self._unbound_generic(t)):
                        bindings[g.canonical] = t
        return bindings

    def _unbound_generic(self, t: Named) -> bool:
        return t.canonical not in self.prototypes

    def _path_to(self, start: str, target: str) -> list[InheritLink] | None:
        def dfs(cur: str, seen: set) -> list[InheritLink] | None:
            for link in self.parents.get(cur, ()):
                parent = link.parent.canonical
                if parent in seen:
                    continue
                seen.add(parent)
                if parent == target:
                    return [link]
                rest = dfs(parent, seen)
                if rest is not None:
                    return [link] + rest
            return None

        return dfs(start, {start})


def substitute_generics(t: TypeRef | None, bindings: Mapping[str, TypeRef]) -> TypeRef | None:
    from .header import BlockType, TupleType

    if t is None or not bindings:
        return t
    if isinstance(t, Named):
        if not t.params and t.canonical in bindings:
            return bindings[t.canonical]
        if t.params:
            return Named(t.name, tuple(substitute_generics(p, bindings) for p in t.params))
        return t
    if isinstance(t, TupleType):
        return TupleType(tuple(substitute_generics(e, bindings) for e in t.elements))
    if isinstance(t, BlockType):
        return BlockType(tuple(substitute_generics(e, bindings) for e in t.locals), substitute_generics(t.result, bindings))
    return t


def build_environment(headers: Sequence[PrototypeHeader], glyphs: Mapping | None = None) -> Environment:
    by_name: dict[str, list[PrototypeHeader]] = {}
    for h in headers:
        by_name.setdefault(h.canonical, []).append(h)
    for name, hs in sorted(by_name.items()):
        if len(hs) > 1:
            raise NameCollision(name, [h.source or str(h.name) for h in hs])

    prototypes = {name: hs[0] for name, hs in sorted(by_name.items())}

    parents: dict[str, tuple[InheritLink, ...]] = {}
    children: dict[str, list[str]] = {name: [] for name in prototypes}
    for name, h in prototypes.items():
        for link in h.inherit_links:
            pname = link.parent.canonical
            if pname not in prototypes:
                raise UnknownParent(f"{name} inherits unknown prototype {pname!r}")
            children[pname].append(name)
        parents[name] = tuple(h.inherit_links)
    _check_acyclic(prototypes, parents)

    slot_index: dict[str, dict[tuple[str, ...], tuple[Slot, ...]]] = {}
    operators: dict[str, list[tuple[str, SlotSignature]]] = {}
    root = TrieNode()
    for name, h in prototypes.items():
        index: dict[tuple[str, ...], list[Slot]] = {}
        for slot in h.slots:
            sig = slot.signature
            index.setdefault(sig.selector, []).append(slot)
            if sig.operator is not None:
                operators.setdefault(sig.keywords[0].canonical, []).append((name, sig))
            else:
                node = root
                prefix: list[str] = []
                for label in sig.pattern:
                    prefix.append(label)
                    nxt = node.children.get(label)
                    if nxt is None:
                        nxt = node.children[label] = TrieNode(tuple(prefix))
                    node = nxt
                node.slots.append((name, slot))
        slot_index[name] = {k: tuple(v) for k, v in index.items()}

    env = Environment(
        prototypes=prototypes,
        operators={k: tuple(v) for k, v in sorted(operators.items())},
        trie=root,
        parents=parents,
        children={k: tuple(sorted(v)) for k, v in children.items()},
        slot_index=slot_index,
    )
    if glyphs:
        env.glyphs = _bind_glyphs(env, glyphs)
    return env


def _bind_glyphs(env: Environment, glyphs: Mapping) -> dict:
    bound = {}
    for key, prog in sorted(glyphs.items()):
        words = tuple(w for w in key.split() if not _is_arg_name(w))
        for proto, slots in env.slot_index.items():
            for slot in slots.get(words, ()):
                sig = slot.signature
                if sig.glyph_key != key or prog.arity != sig.arity:
                    raise GlyphArityMismatch(
                        f"glyph {key!r} ({prog.arity} arguments) does not fit slot "
                        f"{sig.pattern_text!r} of {proto} ({sig.arity} arguments)"
                    )
        bound[key] = prog
    return bound


def _is_arg_name(word: str) -> bool:
    return len(word) >= 2 and word[0] == "A" and word[1:].isdigit()


def _check_acyclic(prototypes, parents) -> None:
    WHITE, GREY, BLACK = 0, 1, 2
    color = {name: WHITE for name in prototypes}
    stack_path: list[str] = []

    def visit(name: str):
        color[name] = GREY
        stack_path.append(name)
        for link in parents.get(name, ()):
            p = link.parent.canonical
            if color[p] == GREY:
                i = stack_path.index(p)
                raise InheritanceCycle(stack_path[i:] + [p])
            if color[p] == WHITE:
                visit(p)
        stack_path.pop()
        color[name] = BLACK

    for name in prototypes:
        if color[name] == WHITE:
            visit(name)


def lookup_order(env: Environment, proto: str) -> tuple[str, ...]:
    """Ancestors scanned when a slot lookup misses on ``proto`` itself.

    Depth-first over declared parents: each parent is followed by its own
    ancestors before the next declared parent; a prototype reached twice is
    only kept at its first visit.
    """
    cached = env._orders.get(proto)
    if cached is not None:
        return cached
    if proto not in env.prototypes:
        raise UnknownPrototype(f"unknown prototype {proto!r}")
    order: list[str] = []
    seen = {proto}

    def visit(name: str):
        for link in env.parents.get(name, ()):
            p = link.parent.canonical
            if p in seen:
                continue
            seen.add(p)
            order.append(p)
            visit(p)

    visit(proto)
    result = tuple(order)
    env._orders[proto] = result
    return result


def _receiver_name(receiver_type) -> str:
    if isinstance(receiver_type, str):
        return receiver_type
    if isinstance(receiver_type, Named):
        return receiver_type.canonical
    raise SlotNotFound(f"type {receiver_type} has no slots")


def _selector(keywords) -> tuple[str, ...]:
    words: list[str] = []
    for kw in keywords:
        text = kw if isinstance(kw, str) else kw.canonical
        words.extend(text.split())
    return tuple(words)


def candidate_slots(env: Environment, receiver_type, keywords, arity: Arity | None = None) -> list[tuple[str, Slot]]:
    """Every declaration of the selector visible from the receiver, in lookup order."""
    recv = _receiver_name(receiver_type)
    if recv not in env.prototypes:
        raise UnknownPrototype(f"unknown prototype {recv!r}")
    selector = _selector(keywords)
    found = []
    for proto in env.ancestors_with_self(recv):
        for slot in env.declared(proto, selector):
            op = slot.signature.operator
            if arity is None or (op is not None and op.arity is arity):
                found.append((proto, slot))
    return found


def resolve_slot(env: Environment, receiver_type, keywords, arity: Arity | None = None) -> tuple[str, SlotSignature]:
    found = candidate_slots(env, receiver_type, keywords, arity)
    if not found:
        raise SlotNotFound(f"no slot {' '.join(_selector(keywords))!r} for {_receiver_name(receiver_type)}")
    if arity is None:
        # prefer a Standard slot, then a binary operator, within the first declaring prototype
        first = found[0][0]
        same = [f for f in found if f[0] == first]
        same.sort(key=lambda f: (f[1].signature.operator is not None,
                                 f[1].signature.operator.arity is not Arity.BinaryInfix if f[1].signature.operator else False))
        proto, slot = same[0]
    else:
        proto, slot = found[0]
    return proto, slot.signature


# -- access ------------------------------------------------------------------

@dataclass(frozen=True)
class Allowed:
    def __bool__(self) -> bool:
        return True


@dataclass(frozen=True)
class Denied:
    reason: str

    def __bool__(self) -> bool:
        return False


def check_access(env: Environment, caller: str, callee: tuple[str, SlotSignature]):
    declaring, sig = callee
    access = sig.access
    if access.kind == "public" or caller == declaring:
        return Allowed()
    if access.kind == "self":
        if caller in env.prototypes and env.is_ancestor(caller, declaring):
            return Allowed()
        return Denied(f"{sig.pattern_text!r} of {declaring} is reserved to its receiver")
    if access.kind == "named":
        if caller in access.names:
            return Allowed()
        return Denied(f"{sig.pattern_text!r} of {declaring} is restricted to {', '.join(access.names)}")
    # directory
    decl_src = env.prototypes[declaring].source
    caller_src = env.prototypes[caller].source if caller in env.prototypes else None
    if caller_src is None:
        return Denied(f"{caller} has no source file to compare with directory {access.path!r}")
    base = Path(decl_src).parent if decl_src else Path(".")
    directory = (base / access.path).resolve()
    try:
        Path(caller_src).resolve().relative_to(directory)
        return Allowed()
    except ValueError:
        return Denied(f"{caller} is outside directory {access.path!r} allowed for {sig.pattern_text!r}")


# -- assertions --------------------------------------------------------------

@dataclass(frozen=True)
class Assertion:
    text: str
    origin: str


IGNORE_MARK = "⊘"


def _parse_ignore(text: str) -> tuple[str, int] | None:
    body = text.strip()
    if not body.startswith(IGNORE_MARK):
        return None
    rest = body[len(IGNORE_MARK):].strip()
    origin, _, index = rest.rpartition(" ")
    if not origin or not index.isdigit():
        return None
    return origin.strip(), int(index)


def collect_assertions(env: Environment, proto: str, sig: SlotSignature) -> tuple[list[Assertion], list[Assertion]]:
    """Pre/postconditions of a slot and of every redefinition above it.

    A child zone written ``⊘ Origin k`` drops the k-th (1-based) assertion
    that ``Origin`` declares for the same slot.
    """
    arity = sig.operator.arity if sig.operator else None
    pres: list[Assertion] = []
    posts: list[Assertion] = []
    ignored_pre: set[tuple[str, int]] = set()
    ignored_post: set[tuple[str, int]] = set()
    for p in env.ancestors_with_self(proto):
        for slot in env.declared(p, sig.selector):
            other = slot.signature
            if (other.operator.arity if other.operator else None) is not arity:
                continue
            for texts, out, ignored in ((other.preconditions, pres, ignored_pre),
                                        (other.postconditions, posts, ignored_post)):
                k = 0
                for text in texts:
                    marker = _parse_ignore(text)
                    if marker is not None:
                        ignored.add(marker)
                        continue
                    k += 1
                    if (p, k) not in ignored:
                        out.append(Assertion(text, p))
    return pres, posts
