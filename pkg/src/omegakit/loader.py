"""Finding and loading source roots into an environment."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .checker import Diagnostic, Severity
from .environment import Environment, build_environment
from .errors import GlyphError, OmegaError
from .glyph import GlyphProgram, load_glyph
from .header import PrototypeHeader, read_prototype
from .tags import decode_stream

__all__ = ["MANIFEST_NAME", "Loaded", "read_manifest", "load_roots", "load_header", "offset_position", "CORPUS_DIR"]

MANIFEST_NAME = "omega.env"
CORPUS_DIR = Path(__file__).parent / "corpus"


@dataclass
class Loaded:
    env: Environment | None
    roots: list[Path]
    files: dict[str, Path] = field(default_factory=dict)  # prototype -> file
    diagnostics: list[Diagnostic] = field(default_factory=list)


def read_manifest(path: Path | str) -> list[Path]:
    """Source roots listed one per line, relative to the manifest's directory."""
    path = Path(path)
    base = path.parent
    roots = []
    for line in path.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            roots.append((base / line).resolve())
    return roots


def offset_position(data: bytes, offset: int | None) -> tuple[int, int]:
    """1-based line and code-point column of a byte offset."""
    if offset is None:
        return 1, 1
    before = data[:offset].decode("utf-8", errors="replace")
    nl = before.count("\n")
    return nl + 1, len(before) - (before.rfind("\n") + 1) + 1


def load_header(path: Path) -> PrototypeHeader:
    return read_prototype(decode_stream(path.read_bytes()), source=str(path))


def _error(exc: OmegaError, file: Path | str | None, data: bytes | None = None) -> Diagnostic:
    line, col = offset_position(data, exc.offset) if data is not None else (1, 1)
    return Diagnostic(Severity.Error, exc.code, exc.message, str(file) if file else None, line, col)


def load_roots(roots: Sequence[Path | str]) -> Loaded:
    """Load every ``.omg`` file and every ``glyphs/*.glyph`` file under ``roots``.

    Files that fail to read are reported and skipped; the environment is
    ``None`` when it cannot be built at all.
    """
    roots = [Path(r).resolve() for r in roots]
    loaded = Loaded(None, roots)
    headers: list[PrototypeHeader] = []
    glyphs: dict[str, GlyphProgram] = {}
    for root in roots:
        if not root.is_dir():
            loaded.diagnostics.append(Diagnostic(Severity.Error, "MissingRoot", f"source root {root} is not a directory", str(root)))
            continue
        for path in sorted(root.rglob("*.omg")):
            data = path.read_bytes()
            try:
                header = read_prototype(decode_stream(data), source=str(path))
            except OmegaError as exc:
                loaded.diagnostics.append(_error(exc, path, data))
                continue
            headers.append(header)
            loaded.files.setdefault(header.canonical, path)
            if path.stem != header.canonical:
                loaded.diagnostics.append(Diagnostic(
                    Severity.Warning, "FileNameMismatch",
                    f"prototype {header.canonical!r} is stored in {path.name}", str(path)))
        for path in sorted(root.rglob("*.glyph")):
            try:
                prog = load_glyph(path.read_text(encoding="utf-8"))
            except GlyphError as exc:
                loaded.diagnostics.append(_error(exc, path))
                continue
            if prog.key in glyphs:
                loaded.diagnostics.append(Diagnostic(Severity.Error, "GlyphError", f"second glyph for {prog.key!r}", str(path)))
                continue
            glyphs[prog.key] = prog
    try:
        loaded.env = build_environment(headers, glyphs)
    except OmegaError as exc:
        where = None
        for name in getattr(exc, "path", ()) or getattr(exc, "locations", ()) or ():
            where = loaded.files.get(name, name)
            break
        loaded.diagnostics.append(_error(exc, where))
    return loaded
