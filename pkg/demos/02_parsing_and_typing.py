"""Second phase: bodies are plain text, parsed against the whole environment.

Run with ``python3 demos/02_parsing_and_typing.py``.
"""

from __future__ import annotations

from dataclasses import replace

from omegakit.body_parser import parse_body
from omegakit.checker import check_environment, check_slot_body
from omegakit.errors import ParseErrors
from omegakit.loader import CORPUS_DIR, load_roots
from omegakit.syntax import node_label

env = load_roots([CORPUS_DIR]).env


def show(text: str, proto: str = "Main") -> None:
    try:
        grp = parse_body(text, None, env, proto)
    except ParseErrors as exc:
        print(f"{text!r:32} -> {', '.join(e.code for e in exc.errors)}")
        return
    labels = "; ".join(node_label(s) for s in grp.statements)
    print(f"{text!r:32} -> {labels}  : {grp.type}")


# No parentheses are needed when the longest reading is unique.
show("factorial 5 print", "Factorial")
# Operators come from headers: priority and associativity decide nesting.
show("- 3 + 4 * 5")
# + is commutative, so ℤ + ℝ32 is answered by ℝ32's declaration.
show("1 + 2.5")
# && takes a literal block on its right.
show("b: Boolean\nb && {b}")
show("b: Boolean\nb && b")
# A clone keeps the exact type of its receiver.
show("p: Pixel\np clone")

# The whole corpus checks without a single diagnostic.
result = check_environment(env)
print(f"corpus: {len(result.slots)} slots, {len(result.diagnostics)} diagnostics")

# Editing one body shows how diagnostics are located and reported.
helper = next(s for s in env.prototypes["Main"].slots if s.signature.pattern_text == "● helper")
_, diags = check_slot_body(replace(helper, raw_body='"forty-two"'), env, "Main")
for d in diags:
    print(d.format())
