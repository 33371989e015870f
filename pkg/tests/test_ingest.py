import datetime as dt
import io
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from scalenest.errors import DuplicateIdError, InputError, LevelRangeError, ParseError
from scalenest.ingest import (IngestConfig, IngestStats, InvalidRecordPolicy, aggregate_map,
                              build_all_maps, build_finest_map, ipc_to_path, parse_patents,
                              prepare_records, read_rewrite_table, write_records)
from scalenest.model import PatentRecord, ScalePair


def _cell(wmap, geo, tech):
    i = [str(l) for l in wmap.row_labels].index(geo)
    j = [str(l) for l in wmap.col_labels].index(tech)
    return wmap.weights[i, j]


def test_parse_single_line():
    recs = parse_patents(['{"id":"p1","geo":["US.CA"],"tech":["A.A01.A01B.33"]}'])
    assert len(recs) == 1
    assert [str(c) for c in recs[0].geo_codes] == ["US.CA"]
    assert [str(c) for c in recs[0].tech_codes] == ["A.A01.A01B.33"]


def test_parse_missing_tech_reports_line():
    lines = ['{"id":"p1","geo":["US.CA"],"tech":["A.A01"]}', "", '{"id":"p2","geo":["US.CA"]}']
    with pytest.raises(ParseError) as exc:
        parse_patents(lines)
    assert exc.value.lineno == 3
    assert "line 3" in str(exc.value)


def test_parse_duplicate_id():
    line = '{"id":"p1","geo":["US.CA"],"tech":["A.A01"]}'
    with pytest.raises(DuplicateIdError):
        parse_patents([line, line])


@pytest.mark.parametrize("line", ["not json", "[1, 2]", '{"geo":["US"],"tech":["A"]}',
                                  '{"id":"a","geo":"US","tech":["A"]}',
                                  '{"id":"a","geo":["US"],"tech":["A"],"date":"2020-13-01"}'])
def test_parse_malformed(line):
    with pytest.raises(ParseError):
        parse_patents([line])


def test_write_then_parse_round_trip():
    recs = [PatentRecord.from_strings("a", ["US.CA"], ["A.A01"], dt.date(2001, 2, 3)),
            PatentRecord.from_strings("b", ["US.NY", "FR.75"], ["G.G06", "A.A01"])]
    buf = io.StringIO()
    write_records(recs, buf)
    assert parse_patents(buf.getvalue().splitlines()) == recs


def test_equal_share_four_cells():
    rec = PatentRecord.from_strings("p", ["US.CA", "US.NY"], ["A.A01", "G.G06"])
    w = build_finest_map([rec], IngestConfig(2, 2))
    assert w.weights.shape == (2, 2)
    np.testing.assert_array_equal(w.weights, np.full((2, 2), 0.25))


def test_singleton_record_weight_one():
    w = build_finest_map([PatentRecord.from_strings("p", ["US.CA"], ["A.A01"])], IngestConfig(2, 2))
    assert w.weights.tolist() == [[1.0]]


def test_identical_records_add():
    a = PatentRecord.from_strings("a", ["US.CA", "US.NY"], ["A.A01"])
    b = PatentRecord.from_strings("b", ["US.CA", "US.NY"], ["A.A01"])
    one = build_finest_map([a], IngestConfig(2, 2))
    two = build_finest_map([a, b], IngestConfig(2, 2))
    np.testing.assert_array_equal(two.weights, 2 * one.weights)


def test_aggregate_to_nation_and_section():
    rec = PatentRecord.from_strings("p", ["US.CA", "US.NY"], ["A.A01", "G.G06"])
    w = build_finest_map([rec], IngestConfig(2, 2))
    top = aggregate_map(w, ScalePair(1, 1))
    assert _cell(top, "US", "A") == pytest.approx(0.5, abs=1e-12)
    assert top.total == pytest.approx(1.0, rel=1e-9)


def test_aggregate_identity_and_single_axis():
    recs = [PatentRecord.from_strings("a", ["US.CA"], ["A.A01"]),
            PatentRecord.from_strings("b", ["US.NY"], ["A.A02"]),
            PatentRecord.from_strings("c", ["FR.75"], ["A.A01", "B.B01"])]
    w = build_finest_map(recs, IngestConfig(2, 2))
    assert aggregate_map(w, ScalePair(2, 2)) is w
    half = aggregate_map(w, ScalePair(1, 2))
    assert half.col_labels == w.col_labels
    assert [str(l) for l in half.row_labels] == ["FR", "US"]
    with pytest.raises(LevelRangeError):
        aggregate_map(half, ScalePair(2, 2))


geo_codes = st.sampled_from(["US.CA.SF", "US.CA.LA", "US.NY.NYC", "FR.IDF.PAR", "FR.ARA.LYO", "DE.BY.MUC"])
tech_codes = st.sampled_from(["A.A01.A01B", "A.A01.A01C", "A.A23.A23L", "G.G06.G06F", "G.G06.G06N", "H.H04.H04L"])
records = st.lists(
    st.tuples(st.sets(geo_codes, min_size=1, max_size=3), st.sets(tech_codes, min_size=1, max_size=3)),
    min_size=1, max_size=25,
).map(lambda rows: [PatentRecord.from_strings(f"r{i}", sorted(g), sorted(t))
                    for i, (g, t) in enumerate(rows)])


@settings(max_examples=60, deadline=None)
@given(records)
def test_aggregation_commutes_and_preserves_total(recs):
    w = build_finest_map(recs, IngestConfig(3, 3))
    assert w.total == pytest.approx(len(recs), rel=1e-9)
    for g in (1, 2, 3):
        for t in (1, 2, 3):
            direct = aggregate_map(w, ScalePair(g, t))
            via_geo = aggregate_map(aggregate_map(w, ScalePair(g, 3)), ScalePair(g, t))
            via_tech = aggregate_map(aggregate_map(w, ScalePair(3, t)), ScalePair(g, t))
            assert np.abs(direct.weights - via_geo.weights).max() <= 1e-9
            assert np.abs(direct.weights - via_tech.weights).max() <= 1e-9
            assert direct.total == pytest.approx(len(recs), rel=1e-9)


@settings(max_examples=40, deadline=None)
@given(records, st.randoms(use_true_random=False))
def test_finest_map_ignores_record_order(recs, rnd):
    shuffled = list(recs)
    rnd.shuffle(shuffled)
    a = build_finest_map(recs, IngestConfig(2, 2))
    b = build_finest_map(shuffled, IngestConfig(2, 2))
    assert a.row_labels == b.row_labels and a.col_labels == b.col_labels
    np.testing.assert_allclose(a.weights, b.weights, rtol=0, atol=1e-12)


def test_shared_coarse_prefix_accumulates():
    rec = PatentRecord.from_strings("p", ["US.CA"], ["A.A01", "A.A23"])
    maps = build_all_maps([rec], IngestConfig(2, 2))
    assert maps[ScalePair(2, 1)].weights.tolist() == [[1.0]]
    assert maps[ScalePair(2, 2)].weights.tolist() == [[0.5, 0.5]]


def test_ipc_rewrite():
    assert ipc_to_path("A01B 33/00") == "A.A01.A01B.A01B33-00"
    assert ipc_to_path("H04L  9/3247") == "H.H04.H04L.H04L9-3247"
    with pytest.raises(ValueError):
        ipc_to_path("A01")
    table = read_rewrite_table(["# comment", "A01B 33/00 = A.A01.A01B.A01B33-00", ""])
    recs = parse_patents([json.dumps({"id": "x", "geo": ["US"], "tech": ["A01B 33/00"]})],
                         rewrite=table)
    assert str(recs[0].tech_codes[0]) == "A.A01.A01B.A01B33-00"


def test_date_window_filters_before_maps():
    lines = [json.dumps({"id": "a", "geo": ["US.CA"], "tech": ["A.A01"], "date": "2001-01-01"}),
             json.dumps({"id": "b", "geo": ["US.NY"], "tech": ["A.A01"], "date": "2005-06-30"}),
             json.dumps({"id": "c", "geo": ["US.TX"], "tech": ["A.A01"]})]
    window = (dt.date(2005, 1, 1), dt.date(2005, 12, 31))
    recs = parse_patents(lines, IngestConfig(2, 2, window))
    assert [r.id for r in recs] == ["b"]
    stats = IngestStats()
    kept = prepare_records(parse_patents(lines), IngestConfig(2, 2, window), stats)
    assert [r.id for r in kept] == ["b"]
    assert (stats.parsed, stats.filtered, stats.used) == (3, 2, 1)


def test_invalid_policy_reject_and_skip():
    recs = [PatentRecord.from_strings("ok", ["US.CA"], ["A.A01"]),
            PatentRecord.from_strings("short", ["US"], ["A.A01"])]
    with pytest.raises(InputError, match="short"):
        prepare_records(recs, IngestConfig(2, 2))
    stats = IngestStats()
    kept = prepare_records(recs, IngestConfig(2, 2, None, InvalidRecordPolicy.SKIP), stats)
    assert [r.id for r in kept] == ["ok"] and stats.skipped == 1
    assert "records_skipped = 1" in stats.manifest_lines()


def test_ingest_config_checks():
    with pytest.raises(ValueError):
        IngestConfig(0, 1)
    with pytest.raises(ValueError):
        IngestConfig(1, 1, (dt.date(2002, 1, 1), dt.date(2001, 1, 1)))
