from __future__ import annotations

import logging

import pytest
from hypothesis import given, strategies as st

from omegakit.body_parser import parse_body
from omegakit.completion import (
    DEFAULT_SHORTCUTS, Layout, LayoutStats, ShortcutTable, complete, expand_shortcut, layout_key,
    observe_layouts,
)

from conftest import scope, slot_of


def texts(cands, kind=None):
    return [c.text for c in cands if kind is None or c.kind == kind]


# -- complete ------------------------------------------------------------------------

def test_if_offers_only_boolean_slots(env):
    cands = complete(env, scope(env, "Main"), ["if"])
    assert [(c.text, c.proto) for c in cands] == [("if ● then _", "Boolean"), ("if ● then _ else _", "Boolean")]


def test_partial_word(env):
    assert texts(complete(env, scope(env, "Main"), ["wh"])) == ["while ● do _"]


def test_new_lists_receiver_after_keyword(env):
    cands = complete(env, scope(env, "Main"), ["new"])
    assert [(c.text, c.proto) for c in cands] == [("new ● x _ y _", "Pixel")]


def test_uppercase_prefix_gives_types(env):
    assert texts(complete(env, scope(env, "Main"), ["Str"]), "type") == ["String", "String buffer"]


def test_locals(env):
    cands = complete(env, scope(env, "Main", total="ℤ", tally="ℤ"), ["t"])
    assert texts(cands, "local") == ["tally", "total"]


def test_receiver_named_by_a_local(env):
    cands = complete(env, scope(env, "Main", s="String"), ["s", "si"])
    assert [(c.text, c.proto, c.receiver) for c in cands] == [("● size", "String", "s")]


def test_inherited_slots_of_a_local(env):
    cands = complete(env, scope(env, "Main", p="Pixel"), ["p", "cl"])
    assert [(c.text, c.proto) for c in cands] == [("● clone", "Clone")]


def test_implicit_receiver(env):
    cands = complete(env, scope(env, "Pixel"), ["dist"])
    assert [(c.text, c.proto, c.receiver) for c in cands] == [("● distance _", "Pixel", None)]


def test_access_filter(env):
    outside = complete(env, scope(env, "Main", f="Fibonacci"), ["f", "fib"])
    assert texts(outside) == ["● fibonacci _"]
    inside = complete(env, scope(env, "Fibonacci"), ["fib"])
    assert texts(inside) == ["● fibonacci _", "● fiborec _"]


def test_nothing_to_offer(env):
    assert complete(env, scope(env, "Main"), ["zz"]) == []
    assert complete(env, scope(env, "Main"), []) == []


def test_usage_ranks_first(env):
    stats = LayoutStats()
    sig = slot_of(env, "Boolean", "if ● then _ else _").signature
    stats.record_usage(sig, 1, Layout.SingleLine)
    cands = complete(env, scope(env, "Main"), ["if"], stats)
    assert texts(cands) == ["if ● then _ else _", "if ● then _"]


# -- shortcuts --------------------------------------------------------------------------

def test_default_shortcuts():
    assert expand_shortcut("x <-") == "←"
    assert expand_shortcut("a <=") == "≤"
    assert expand_shortcut("a <") is None
    assert expand_shortcut("b !=") == "≠"


def test_word_shortcut_needs_boundary():
    assert expand_shortcut("x self") == "●"
    assert expand_shortcut("myself") is None


def test_table_is_prefix_free():
    with pytest.raises(ValueError):
        ShortcutTable({"<": "≤", "<=": "≤"})


def test_longest_suffix_wins():
    table = ShortcutTable({"=>": "≥", "<==>": "≠"})
    assert table.match("a <==>") == ("<==>", "≠")


def test_keys_file_round_trip(tmp_path):
    path = tmp_path / "omega.keys"
    path.write_text("<<\tArrow\n# comment\n", encoding="utf-8")
    table = ShortcutTable.load(path)
    assert expand_shortcut("x <<", table) == "←"
    assert expand_shortcut("x <-", table) is None
    table.save(tmp_path / "again.keys")
    assert ShortcutTable.load(tmp_path / "again.keys") == table


def test_bad_keys_line_is_skipped(tmp_path, caplog):
    path = tmp_path / "omega.keys"
    path.write_text("<<\tNoSuchName\n", encoding="utf-8")
    with caplog.at_level(logging.WARNING):
        table = ShortcutTable.load(path)
    assert table.entries == DEFAULT_SHORTCUTS and "ignoring" in caplog.text


# -- layout statistics ----------------------------------------------------------------------

ONE_LINE = "k: ℤ\nwhile {k ≤ 3} do {\n  k ← k next\n}\n"
TWO_LINES = "k: ℤ\nwhile {\n  k ≤ 3\n} do {\n  k ← k next\n}\n"


def test_while_blocks_follow_usage(env):
    stats = LayoutStats()
    for text in [ONE_LINE] * 9 + [TWO_LINES]:
        observe_layouts(stats, parse_body(text, None, env, "Main"), text)
    sig = slot_of(env, "Boolean", "while ● do _").signature
    assert stats.suggest_layout(sig, 0) is Layout.SingleLine
    assert stats.suggest_layout(sig, 1) is Layout.MultiLine
    assert stats.counts[layout_key(sig, 0)] == [9, 1]


def test_empty_stats_default_single(env):
    sig = slot_of(env, "Boolean", "while ● do _").signature
    assert LayoutStats().suggest_layout(sig, 0) is Layout.SingleLine


def test_three_multi_line_records(env):
    sig = slot_of(env, "Boolean", "while ● do _").signature
    stats = LayoutStats()
    for _ in range(3):
        stats.record_usage(sig, 1, Layout.MultiLine)
    assert stats.suggest_layout(sig, 1) is Layout.MultiLine
    assert stats.suggest_layout(sig, 0) is Layout.SingleLine


@given(st.integers(0, 20), st.integers(0, 20))
def test_majority_vote(singles, multis):
    stats = LayoutStats({"k@0": [singles, multis]})

    class Sig:
        pattern_text = "k"

    want = Layout.MultiLine if multis > singles else Layout.SingleLine
    assert stats.suggest_layout(Sig, 0) is want


def test_record_increments_one_counter(env):
    sig = slot_of(env, "Boolean", "while ● do _").signature
    stats = LayoutStats()
    stats.record_usage(sig, 0, Layout.SingleLine)
    assert stats.counts == {layout_key(sig, 0): [1, 0]}


def test_stats_file(tmp_path, caplog):
    path = tmp_path / "omega.stats"
    path.write_text("while ● do _@0\t4\t1\nbroken line\nx@0\t-1\t2\nwhile ● do _@1\t0\t3\n", encoding="utf-8")
    with caplog.at_level(logging.WARNING):
        stats = LayoutStats.load(path)
    assert stats.counts == {"while ● do _@0": [4, 1], "while ● do _@1": [0, 3]}
    assert caplog.text.count("corrupted") == 2
    stats.save(tmp_path / "copy.stats")
    assert LayoutStats.load(tmp_path / "copy.stats") == stats
    assert LayoutStats.load(tmp_path / "missing.stats").counts == {}
