"""Independent reference implementations used to cross-check the parser.

Neither oracle shares code with ``omegakit.body_parser``: the phrase oracle
enumerates every parse tree by brute force (no trie, no chart, no pruning)
and the precedence oracle splits at the loosest operator recursively.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

from omegakit.syntax import LocalRead, Send

RECV = "●"
HOLE = "_"


# -- phrases ----------------------------------------------------------------------

@dataclass(frozen=True)
class Outcome:
    kind: str  # ok | ambiguous | none
    tree: tuple | None = None
    readings: frozenset = frozenset()


def phrase_oracle(words: Sequence[str], patterns: Sequence[Sequence[str]], locals_: set[str]) -> Outcome:
    """Best reading of ``words`` in a one-type world.

    Every slot lives on the current prototype, takes and returns that type,
    and every local has that type, so only shapes matter.  A reading scores
    the descending list of word counts of its selectors and local names;
    the highest score wins and a tie between distinct trees is ambiguous.
    """
    words = tuple(words)
    n = len(words)
    pats = [tuple(p) for p in patterns]

    def kw_count(p) -> int:
        return sum(1 for t in p if t not in (RECV, HOLE))

    @lru_cache(maxsize=None)
    def args(i: int, j: int) -> tuple:
        """Argument-level readings: locals and zero-argument own slots."""
        name = " ".join(words[i:j])
        if name in locals_:
            return ((("local", name), (j - i,)),)
        out = []
        for p in pats:
            if p[0] == RECV and HOLE not in p and RECV not in p[1:] and p[1:] == words[i:j]:
                out.append((("send", " ".join(p), "impl", ()), (kw_count(p),)))
        return tuple(out)

    def match(p, t, pos, i, j, recv, got, score):
        """Yield completed sends for pattern ``p`` from token ``t`` at ``pos``."""
        if t == len(p):
            if pos == j:
                yield ("send", " ".join(p), recv, tuple(got)), tuple(sorted(score + (kw_count(p),), reverse=True))
            return
        tok = p[t]
        if tok in (RECV, HOLE):
            if t == 0 and tok == RECV:
                yield from match(p, 1, pos, i, j, "impl", got, score)
                for k in range(pos + 1, j):
                    for tree, s in exprs(pos, k):
                        yield from match(p, 1, k, i, j, tree, got, score + s)
                return
            for k in range(pos + 1, j + 1):
                if (pos, k) == (i, j):
                    continue
                for tree, s in args(pos, k):
                    if tok == RECV:
                        yield from match(p, t + 1, k, i, j, tree, got, score + s)
                    else:
                        yield from match(p, t + 1, k, i, j, recv, got + [tree], score + s)
            return
        if pos < j and words[pos] == tok:
            yield from match(p, t + 1, pos + 1, i, j, recv, got, score)

    @lru_cache(maxsize=None)
    def exprs(i: int, j: int) -> tuple:
        out = dict()
        for tree, s in args(i, j):
            out[tree] = s
        for p in pats:
            for tree, s in match(p, 0, i, i, j, None, [], ()):
                out[tree] = max(s, out.get(tree, s))
        return tuple(out.items())

    if n == 0:
        return Outcome("none")
    readings = exprs(0, n)
    if not readings:
        return Outcome("none")
    best = max(s for _, s in readings)
    top = frozenset(t for t, s in readings if s == best)
    if len(top) > 1:
        return Outcome("ambiguous", readings=top)
    return Outcome("ok", next(iter(top)), top)


def canonical(node) -> tuple:
    """The oracle's tree shape for a node produced by the real parser."""
    if isinstance(node, LocalRead):
        return ("local", node.name)
    if isinstance(node, Send):
        recv = "impl" if node.implicit_receiver else canonical(node.receiver)
        return ("send", node.signature.pattern_text, recv, tuple(canonical(a) for a in node.args))
    raise TypeError(f"unexpected node {type(node).__name__}")


# -- operator chains ------------------------------------------------------------------

class Mixed(Exception):
    """Equal priorities with different associativity meet in one subtree."""


def precedence_oracle(operands: Sequence, ops: Sequence[tuple[str, int, str]]):
    """Nest ``operands`` joined by ``ops`` (keyword, priority, 'L' or 'R').

    Splits at the loosest priority: the last occurrence for left
    associativity, the first for right.  Returns nested tuples
    ``(keyword, left, right)``.
    """
    if not ops:
        return operands[0]
    low = min(p for _, p, _ in ops)
    at = [k for k, (_, p, _) in enumerate(ops) if p == low]
    kinds = {ops[k][2] for k in at}
    if len(kinds) > 1:
        raise Mixed(low)
    k = at[-1] if kinds == {"L"} else at[0]
    left = precedence_oracle(operands[: k + 1], ops[:k])
    right = precedence_oracle(operands[k + 1:], ops[k + 1:])
    return (ops[k][0], left, right)
