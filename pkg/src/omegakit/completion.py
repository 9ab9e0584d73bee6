"""Input assistance: completion, shortcut expansion and block layout hints."""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .environment import Environment, TrieNode, check_access
from .header import ARG, RECEIVER, SlotSignature, starts_uppercase
from .syntax import Block, Node, Send
from .types import TypeContext

__all__ = [
    "Candidate",
    "complete",
    "ShortcutTable",
    "DEFAULT_SHORTCUTS",
    "REPLACEMENT_NAMES",
    "expand_shortcut",
    "Layout",
    "LayoutStats",
    "layout_key",
    "observe_layouts",
]

log = logging.getLogger(__name__)


# -- completion ----------------------------------------------------------------

@dataclass(frozen=True)
class Candidate:
    kind: str  # slot | type | local
    text: str  # pattern text for slots, the name otherwise
    proto: str | None = None
    signature: SlotSignature | None = None
    # words of the prefix used as an explicit receiver, if any
    receiver: str | None = None


def _pattern_matches(pattern: Sequence[str], typed: Sequence[str]) -> bool:
    """The typed words are a prefix of the pattern's words; the last one may
    be partial."""
    words = [w for w in pattern if w is not RECEIVER and w is not ARG]
    if len(typed) > len(words) or not typed:
        return False
    for k, t in enumerate(typed):
        if k == len(typed) - 1:
            if not words[k].startswith(t):
                return False
        elif words[k] != t:
            return False
    return True


def _introducing(env: Environment, decls: list[tuple[str, SlotSignature]]) -> list[tuple[str, SlotSignature]]:
    """Drop redefinitions: keep declarations no ancestor also declares."""
    protos = {p for p, _ in decls}
    return [(p, s) for p, s in decls if not any(a in protos for a in env.ancestors_with_self(p)[1:])]


def complete(
    env: Environment,
    scope: TypeContext,
    prefix: Sequence[str],
    stats: "LayoutStats | None" = None,
) -> list[Candidate]:
    """Candidates for the phrase being typed.

    ``prefix`` holds the words typed since the start of the phrase; the last
    one may be incomplete.  Slots come from the signature trie: keyword-first
    patterns, patterns whose receiver is the current prototype, and patterns
    whose receiver is a local named by the leading words.  Locals and (for
    an uppercase start) type names complete a single word.
    """
    prefix = [w for w in prefix if w]
    if not prefix:
        return []
    out: list[Candidate] = []
    caller = scope.proto

    def allowed(proto: str, sig: SlotSignature) -> bool:
        return bool(check_access(env, caller, (proto, sig)))

    by_pattern: dict[tuple, list[tuple[str, SlotSignature]]] = {}
    for node in env.trie.iter_nodes():
        for proto, slot in node.slots:
            by_pattern.setdefault(node.key, []).append((proto, slot.signature))

    # keyword-first patterns: any receiver declaring the slot will do
    for pattern, decls in by_pattern.items():
        if pattern[0] is RECEIVER or not _pattern_matches(pattern, prefix):
            continue
        for proto, sig in _introducing(env, decls):
            if allowed(proto, sig):
                out.append(Candidate("slot", " ".join(pattern), proto, sig))

    # receiver-first patterns: implicit receiver, or a local named up front
    receivers: list[tuple[str | None, str, list[str]]] = []
    if scope.proto in env.prototypes:
        receivers.append((None, scope.proto, list(prefix)))
    for k in range(1, len(prefix)):
        name = " ".join(prefix[:k])
        t = scope.lookup(name) if scope.has_local(name) and name not in scope.delayed else None
        canonical = getattr(t, "canonical", None)
        if canonical in env.prototypes:
            receivers.append((name, canonical, list(prefix[k:])))
    for recv_words, recv_proto, typed in receivers:
        chain = env.ancestors_with_self(recv_proto)
        for pattern, decls in by_pattern.items():
            if pattern[0] is not RECEIVER or not _pattern_matches(pattern, typed):
                continue
            selector = tuple(w for w in pattern if w is not RECEIVER and w is not ARG)
            found = None
            for p in chain:
                for slot in env.declared(p, selector):
                    if slot.signature.operator is None and slot.signature.pattern == pattern:
                        found = (p, slot.signature)
                        break
                if found:
                    break
            if found and allowed(*found):
                out.append(Candidate("slot", " ".join(pattern), found[0], found[1], recv_words))

    whole = " ".join(prefix)
    for name in scope.local_names():
        if name.startswith(whole):
            out.append(Candidate("local", name))
    if len(prefix) == 1 and starts_uppercase(prefix[0]):
        for name in env.prototypes:
            if name.startswith(prefix[0]):
                out.append(Candidate("type", name, name))

    def usage(c: Candidate) -> int:
        if stats is None or c.signature is None:
            return 0
        return stats.usage(c.signature)

    unique = list(dict.fromkeys(out))
    return sorted(unique, key=lambda c: (-usage(c), c.text, {"slot": 0, "local": 1, "type": 2}[c.kind], c.proto or "", c.receiver or ""))


# -- shortcuts -------------------------------------------------------------------

REPLACEMENT_NAMES = {
    "Arrow": "←",
    "SelfMark": "●",
    "ExactType": "⊚",
    "LessEqual": "≤",
    "GreaterEqual": "≥",
    "NotEqual": "≠",
}

DEFAULT_SHORTCUTS = {
    "<-": "←",
    "<=": "≤",
    ">=": "≥",
    "!=": "≠",
    "self": "●",
}


@dataclass
class ShortcutTable:
    entries: dict[str, str] = field(default_factory=lambda: dict(DEFAULT_SHORTCUTS))

    def __post_init__(self):
        keys = sorted(self.entries)
        for a in keys:
            if not a:
                raise ValueError("empty shortcut")
            for b in keys:
                if a != b and b.startswith(a):
                    raise ValueError(f"shortcut {a!r} is a prefix of {b!r}")

    def match(self, tail: str) -> tuple[str, str] | None:
        best = None
        for short, repl in self.entries.items():
            if not tail.endswith(short):
                continue
            before = tail[: len(tail) - len(short)]
            # word-like shortcuts only fire at a word boundary
            if short[0].isalnum() and before and (before[-1].isalnum() or before[-1] == "_"):
                continue
            if best is None or len(short) > len(best[0]):
                best = (short, repl)
        return best

    @classmethod
    def load(cls, path: Path | str) -> "ShortcutTable":
        """Read ``shortcut TAB replacement-name`` lines; defaults fill the rest."""
        entries = dict(DEFAULT_SHORTCUTS)
        for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            if not line.strip() or line.startswith("#"):
                continue
            short, sep, name = line.partition("\t")
            name = name.strip()
            if not sep or name not in REPLACEMENT_NAMES:
                log.warning("%s:%d: ignoring shortcut line %r", path, lineno, line)
                continue
            entries = {k: v for k, v in entries.items() if v != REPLACEMENT_NAMES[name]}
            entries[short] = REPLACEMENT_NAMES[name]
        return cls(entries)

    def save(self, path: Path | str) -> None:
        names = {v: k for k, v in REPLACEMENT_NAMES.items()}
        lines = [f"{short}\t{names[repl]}" for short, repl in sorted(self.entries.items())]
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def expand_shortcut(tail: str, table: ShortcutTable | None = None) -> str | None:
    """Replacement for the longest shortcut ending ``tail``, if any."""
    found = (table or ShortcutTable()).match(tail)
    return found[1] if found else None


# -- layout statistics ------------------------------------------------------------

class Layout(enum.Enum):
    SingleLine = "single"
    MultiLine = "multi"


def layout_key(sig: SlotSignature, position: int) -> str:
    """Node key: the slot's pattern and the placeholder index (reading order)."""
    return f"{sig.pattern_text}@{position}"


@dataclass
class LayoutStats:
    counts: dict[str, list[int]] = field(default_factory=dict)

    def suggest_layout(self, sig: SlotSignature, position: int) -> Layout:
        single, multi = self.counts.get(layout_key(sig, position), (0, 0))
        return Layout.MultiLine if multi > single else Layout.SingleLine

    def record_usage(self, sig: SlotSignature, position: int, layout: Layout) -> None:
        c = self.counts.setdefault(layout_key(sig, position), [0, 0])
        c[0 if layout is Layout.SingleLine else 1] += 1

    def usage(self, sig: SlotSignature) -> int:
        head = sig.pattern_text + "@"
        return sum(sum(v) for k, v in self.counts.items() if k.startswith(head))

    @classmethod
    def load(cls, path: Path | str) -> "LayoutStats":
        stats = cls()
        p = Path(path)
        if not p.exists():
            return stats
        for lineno, line in enumerate(p.read_text(encoding="utf-8").splitlines(), 1):
            if not line.strip():
                continue
            parts = line.split("\t")
            try:
                key, single, multi = parts[0], int(parts[1]), int(parts[2])
                if len(parts) != 3 or single < 0 or multi < 0:
                    raise ValueError
            except (ValueError, IndexError):
                log.warning("%s:%d: skipping corrupted statistics line", path, lineno)
                continue
            c = stats.counts.setdefault(key, [0, 0])
            c[0] += single
            c[1] += multi
        return stats

    def save(self, path: Path | str) -> None:
        lines = [f"{k}\t{s}\t{m}" for k, (s, m) in sorted(self.counts.items())]
        Path(path).write_text("".join(line + "\n" for line in lines), encoding="utf-8")


def observe_layouts(stats: LayoutStats, root: Node, text: str) -> None:
    """Record how every block argument in a typed body is laid out."""
    for node in root.walk():
        if not isinstance(node, Send):
            continue
        operands = {-1: node.receiver}
        operands.update(enumerate(node.args))
        for position, code in enumerate(node.signature.placeholder_order):
            arg = operands.get(code)
            if isinstance(arg, Block):
                inner = text[arg.span[0]:arg.span[1]]
                stats.record_usage(node.signature, position, Layout.MultiLine if "\n" in inner else Layout.SingleLine)
