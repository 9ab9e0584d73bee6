"""Completion, shortcuts and layout hints.

Run with ``python3 demos/04_input_assistance.py``.
"""

from __future__ import annotations

from omegakit.body_parser import body_context, parse_body
from omegakit.completion import Layout, LayoutStats, complete, expand_shortcut, observe_layouts
from omegakit.header import parse_type_text
from omegakit.loader import CORPUS_DIR, load_roots

env = load_roots([CORPUS_DIR]).env


def scope(proto: str, **locals_):
    ctx = body_context(env, proto, None)
    for name, t in locals_.items():
        ctx.declare(name, parse_type_text(t))
    return ctx


for words, ctx in [
    (["if"], scope("Main")),
    (["new"], scope("Main")),
    (["Str"], scope("Main")),
    (["f", "fib"], scope("Main", f="Fibonacci")),  # fiborec is private to Fibonacci
]:
    found = [f"{c.text} ({c.kind}, {c.proto})" for c in complete(env, ctx, words)]
    print(f"{' '.join(words):8} -> {found}")

# Shortcuts turn ASCII spellings into symbols as they are typed.
for tail in ("x <-", "a <=", "myself", "x self"):
    print(f"{tail!r:10} -> {expand_shortcut(tail)}")

# Layout statistics: first while blocks are short, bodies are long.
stats = LayoutStats()
short = "k: ℤ\nwhile {k ≤ 3} do {\n  k ← k next\n}\n"
for _ in range(5):
    observe_layouts(stats, parse_body(short, None, env, "Main"), short)
sig = next(s.signature for s in env.prototypes["Boolean"].slots if s.signature.pattern_text == "while ● do _")
print("while blocks:", [stats.suggest_layout(sig, k).value for k in (0, 1)])
