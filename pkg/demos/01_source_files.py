"""Tour of a prototype file: tags, the header, and the lookup order.

Run with ``python3 demos/01_source_files.py``.
"""

from __future__ import annotations

from omegakit.environment import lookup_order
from omegakit.loader import CORPUS_DIR, load_roots
from omegakit.tags import decode_stream, encode_stream, format_listing

path = CORPUS_DIR / "protos" / "Pixel.omg"
data = path.read_bytes()

# The file is UTF-8 with a handful of reserved two-byte code points as tags.
tokens = decode_stream(data)
print(f"{path.name}: {len(data)} bytes, {len(tokens)} tokens")
print(format_listing(tokens[:8]))
assert encode_stream(tokens) == data  # the codec is lossless

# Loading every root builds the environment: headers, trie, operators, DAG.
loaded = load_roots([CORPUS_DIR])
env = loaded.env
pixel = env.prototypes["Pixel"]
print("Pixel slots:")
for slot in pixel.slots:
    kind = "attribute" if slot.is_attribute else "function"
    print(f"  {slot.signature.pattern_text:<18} {kind}")

# Slot lookup walks declared parents depth first, each prototype once.
for name in ("String", "Boolean", "Pixel"):
    print(f"lookup order of {name}: {', '.join(lookup_order(env, name))}")
