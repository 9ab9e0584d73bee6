from __future__ import annotations

import io
import shutil
import subprocess
import sys
import xml.etree.ElementTree as ET

import pytest

from omegakit.cli import run
from omegakit.loader import CORPUS_DIR
from omegakit.sketch import compile_sketch

SVG = "{http://www.w3.org/2000/svg}"


def omega(*argv):
    out, err = io.StringIO(), io.StringIO()
    status = run(list(argv), out, err)
    return status, out.getvalue(), err.getvalue()


@pytest.fixture(autouse=True)
def elsewhere(tmp_path, monkeypatch):
    # no ./omega.env here, so commands fall back to the bundled corpus
    monkeypatch.chdir(tmp_path)


@pytest.fixture
def workspace(tmp_path):
    root = tmp_path / "ws"
    shutil.copytree(CORPUS_DIR, root, ignore=shutil.ignore_patterns("sketches"))
    return root


def test_check_corpus_is_silent():
    assert omega("check") == (0, "", "")


def test_check_reports_diagnostics(workspace):
    (workspace / "protos" / "Bad.omg").write_bytes(
        compile_sketch("@prototype Bad\n@slot ● go\n@body\nx: Boolean\nx && x\n"))
    status, out, _ = omega("check", str(workspace))
    assert status == 1
    (line,) = out.splitlines()
    assert line.endswith("error[CallFormMismatch]: argument 'other' of '● && _' must be written as a block {...}")
    assert "Bad.omg:4:3:" in line  # the && of the second body line


def test_check_with_manifest(workspace, tmp_path):
    (tmp_path / "omega.env").write_text("# roots\nws\n", encoding="utf-8")
    assert omega("check")[0] == 0
    assert omega("check", "--manifest", str(tmp_path / "omega.env"))[0] == 0


def test_missing_manifest_is_usage_error():
    status, out, err = omega("check", "--manifest", "nowhere.env")
    assert status == 2 and err.startswith("omega: manifest")


def test_mro():
    assert omega("mro", "String")[1].split("\n") == ["Hashable", "Clone", "Print", "Utils", "Comparable", ""]
    assert omega("mro", "Boolean")[1] == "Print\nUtils\n"
    assert omega("mro", "--numbered", "Boolean")[1] == "1 Print\n2 Utils\n"


def test_mro_unknown():
    status, out, _ = omega("mro", "Nope")
    assert status == 1 and "UnknownPrototype" in out


def test_ops():
    lines = omega("ops")[1].splitlines()
    assert "&& 2 L false Boolean" in lines
    assert "+ 7 L true Numeric" in lines and "+ 7 L true ℝ32" in lines
    assert "- 9 R false Numeric" in lines


def test_render(tmp_path):
    target = tmp_path / "out.svg"
    status, out, _ = omega("render", "--expr", "1 div 2", "--sp", "10", "-o", str(target))
    assert (status, out) == (0, "")
    root = ET.parse(target).getroot()
    assert len(list(root.iter(SVG + "path"))) == 1
    assert sorted(t.text for t in root.iter(SVG + "text")) == ["1", "2"]


def test_render_plain_expression_to_stdout():
    status, out, _ = omega("render", "--expr", "1 + 2")
    root = ET.fromstring(out)
    assert status == 0 and [t.text for t in root.iter(SVG + "text")] == ["1", "+", "2"]


def test_render_error():
    status, out, _ = omega("render", "--expr", "zork")
    assert status == 1 and out.startswith("<expr>:1:1: error[SlotNotFound]")


def test_fmt_is_identity(tmp_path):
    for path in sorted((CORPUS_DIR / "protos").glob("*.omg")):
        target = tmp_path / "copy.omg"
        assert omega("fmt", str(path), "-o", str(target))[0] == 0
        assert target.read_bytes() == path.read_bytes(), path.name


def test_fmt_canonical_header(tmp_path):
    src = tmp_path / "P.omg"
    src.write_bytes(compile_sketch("@prototype P\n@comment note\n@inherit Q\n@slot ● b\n@body 1\n@slot ● a\n@body 2\n"))
    target = tmp_path / "out.omg"
    assert omega("fmt", "--canonical-header", str(src), "-o", str(target))[0] == 0
    text = target.read_bytes().decode("utf-8")
    assert text.index("Q") < text.index("note") < text.index("ˑ a") < text.index("ˑ b")  # receiver mark is a tag
    again = tmp_path / "again.omg"
    omega("fmt", "--canonical-header", str(target), "-o", str(again))
    assert again.read_bytes() == target.read_bytes()


def test_tags_round_trip(tmp_path):
    path = CORPUS_DIR / "protos" / "Pixel.omg"
    listing = tmp_path / "pixel.txt"
    status, out, _ = omega("tags", "decode", str(path))
    assert status == 0 and out.startswith("TAG PrototypeBegin\nTEXT \"Pixel\\n\"\n")
    listing.write_text(out, encoding="utf-8")
    rebuilt = tmp_path / "Pixel.omg"
    assert omega("tags", "encode", str(listing), "-o", str(rebuilt))[0] == 0
    assert rebuilt.read_bytes() == path.read_bytes()


def test_tags_decode_reports_bad_pair(tmp_path):
    path = tmp_path / "x.omg"
    path.write_bytes("ˀA\nok ".encode("utf-8") + bytes([0xCB, 0xBE]))
    status, out, _ = omega("tags", "decode", str(path))
    assert status == 1 and ":2:4: error[UnassignedTag]" in out


def test_complete(workspace):
    draft = workspace / "protos" / "Draft.omg"
    data = compile_sketch("@prototype Draft\n@slot ● go\n@body\ns: String\ns si")
    draft.write_bytes(data)
    status, out, _ = omega("complete", "--root", str(workspace), "--file", str(draft), "--offset", str(len(data) - 1))
    assert (status, out) == (0, "● size\tslot\tString\n")


def test_complete_if(workspace):
    draft = workspace / "protos" / "Draft.omg"
    data = compile_sketch("@prototype Draft\n@slot ● go\n@body\nif")
    draft.write_bytes(data)
    out = omega("complete", "--root", str(workspace), "--file", str(draft), "--offset", str(len(data) - 1))[1]
    assert out == "if ● then _\tslot\tBoolean\nif ● then _ else _\tslot\tBoolean\n"


def test_complete_outside_body():
    path = CORPUS_DIR / "protos" / "Main.omg"
    status, out, _ = omega("complete", "--file", str(path), "--offset", "0")
    assert status == 1 and "NotInBody" in out


@pytest.mark.parametrize("argv", [[], ["frob"], ["mro"], ["check", "--bogus"], ["render"], ["tags", "peel", "x"]])
def test_usage_errors(argv):
    status, out, err = omega(*argv)
    assert status == 2 and out == "" and "usage:" in err


def test_offset_inside_a_character():
    path = CORPUS_DIR / "protos" / "Main.omg"
    status, _, err = omega("complete", "--file", str(path), "--offset", "1")
    assert status == 2 and "character boundary" in err


def test_unreadable_file():
    status, _, err = omega("fmt", "does-not-exist.omg")
    assert status == 2 and err.startswith("omega: cannot read")


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "omegakit", "mro", "Boolean"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout == "Print\nUtils\n"
