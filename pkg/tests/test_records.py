import io
import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from metacluster.records import (
    FieldMask,
    Record,
    export_line,
    ingest,
    serialize_for_compression,
    tokenize,
    write_records,
)


def ingest_lines(*lines: str):
    return ingest(io.StringIO("".join(line + "\n" for line in lines)))


class TestIngest:
    def test_single_line(self):
        line = '{"id":"r1","fields":{"europeana:dataProvider":["BL"],"dc:title":["The Oil Shop part 01"]}}'
        result = ingest_lines(line)
        assert len(result.records) == 1
        assert not result.rejects
        record = result.records[0]
        assert record.id == "r1"
        assert record.provider == "BL"
        assert record.fields["dc:title"] == ("The Oil Shop part 01",)
        assert record.kind == "original"

    def test_missing_title_and_description_rejected(self):
        line = '{"id":"r1","fields":{"dc:subject":["maps"]}}'
        result = ingest_lines(line)
        assert not result.records
        assert len(result.rejects) == 1
        assert result.rejects[0].line == 1
        assert "dc:title" in result.rejects[0].reason

    def test_empty_stream(self):
        result = ingest(io.StringIO(""))
        assert result.records == []
        assert result.rejects == []

    def test_duplicate_id_rejects_later_occurrence(self):
        line = '{"id":"r1","fields":{"dc:title":["a"]}}'
        result = ingest_lines(line, line)
        assert len(result.records) == 1
        assert len(result.rejects) == 1
        assert result.rejects[0].line == 2
        assert "duplicate" in result.rejects[0].reason

    def test_malformed_json_line_number(self):
        good = '{"id":"r1","fields":{"dc:title":["a"]}}'
        result = ingest_lines(good, "{not json", good.replace("r1", "r2"))
        assert [r.id for r in result.records] == ["r1", "r2"]
        assert result.rejects[0].line == 2

    def test_provider_fallback(self):
        line = '{"id":"r1","fields":{"europeana:provider":["Agg"],"dc:title":["a"]}}'
        result = ingest_lines(line)
        assert result.records[0].provider == "Agg"

    def test_data_provider_wins_over_provider(self):
        line = (
            '{"id":"r1","fields":{"europeana:provider":["Agg"],'
            '"europeana:dataProvider":["Museum"],"dc:title":["a"]}}'
        )
        result = ingest_lines(line)
        assert result.records[0].provider == "Museum"

    def test_no_provider_fields_gives_empty_provider(self):
        line = '{"id":"r1","fields":{"dc:title":["a"]}}'
        result = ingest_lines(line)
        assert result.records[0].provider == ""

    def test_blank_lines_skipped(self):
        line = '{"id":"r1","fields":{"dc:title":["a"]}}'
        result = ingest(io.StringIO("\n" + line + "\n\n"))
        assert len(result.records) == 1
        assert not result.rejects

    def test_bad_value_shapes_rejected(self):
        result = ingest_lines(
            '{"id":"r1","fields":{"dc:title":"not a list"}}',
            '{"id":"r2","fields":{"dc:title":[1,2]}}',
            '{"id":"","fields":{"dc:title":["a"]}}',
            '["not an object"]',
        )
        assert not result.records
        assert [r.line for r in result.rejects] == [1, 2, 3, 4]


class TestTokenize:
    def test_numbers_dropped(self):
        record = Record("r", "p", {"dc:title": ("Map 1873 of London",)})
        assert tokenize(record, FieldMask.of("dc:title")) == ["map", "of", "london"]

    def test_mask_with_absent_field(self):
        record = Record("r", "p", {"dc:title": ("One Map",), "dc:type": ("image",)})
        mask = FieldMask.of("dc:title", "dc:subject")
        assert tokenize(record, mask) == ["one", "map"]

    def test_case_folding_keeps_duplicates(self):
        record = Record("r", "p", {"dc:title": ("Lithograph; LITHOGRAPH",)})
        assert tokenize(record, None) == ["lithograph", "lithograph"]

    def test_mixed_alphanumeric_tokens_kept(self):
        record = Record("r", "p", {"dc:title": ("no5 part 07",)})
        assert tokenize(record, None) == ["no5", "part"]

    def test_sorted_field_order_and_punctuation(self):
        record = Record(
            "r", "p", {"dc:title": ("b-title",), "dc:creator": ("A.Creator",)}
        )
        assert tokenize(record, None) == ["a", "creator", "b", "title"]

    def test_idempotent_under_renormalization(self):
        record = Record("r", "p", {"dc:title": ("Déjà Vu; 42 no5 MAPS",)})
        tokens = tokenize(record, None)
        rebuilt = Record("r2", "p", {"dc:title": (" ".join(tokens),)})
        assert tokenize(rebuilt, None) == tokens


class TestSerialize:
    def test_deterministic(self):
        record = Record("r", "p", {"dc:title": ("a", "b"), "dc:type": ("t",)})
        assert serialize_for_compression(record) == serialize_for_compression(record)

    def test_content_addressing(self):
        a = Record("r1", "p", {"dc:title": ("a",), "dc:type": ("t",)})
        b = Record("r2", "q", {"dc:type": ("t",), "dc:title": ("a",)})
        assert serialize_for_compression(a) == serialize_for_compression(b)

    def test_unselected_fields_ignored(self):
        mask = FieldMask.of("dc:title")
        a = Record("r1", "p", {"dc:title": ("a",), "dc:type": ("x",)})
        b = Record("r2", "p", {"dc:title": ("a",), "dc:type": ("y",)})
        assert serialize_for_compression(a, mask) == serialize_for_compression(b, mask)
        assert serialize_for_compression(a, mask) != serialize_for_compression(a)

    def test_value_order_matters_but_field_order_does_not(self):
        a = Record("r1", "p", {"dc:title": ("a", "b")})
        b = Record("r2", "p", {"dc:title": ("b", "a")})
        assert serialize_for_compression(a) != serialize_for_compression(b)


field_names = st.sampled_from(
    ["dc:title", "dc:description", "dc:subject", "dc:type", "dc:creator", "dcterms:spatial"]
)
values = st.lists(st.text(min_size=1, max_size=20), min_size=1, max_size=3)


@st.composite
def record_documents(draw):
    extra = draw(st.dictionaries(field_names, values, max_size=4))
    extra["dc:title"] = draw(values)
    rid = draw(st.text(min_size=1, max_size=12))
    return rid, extra


@given(record_documents(), st.randoms(use_true_random=False))
def test_serialization_ignores_input_field_order(doc, rnd):
    rid, fields = doc
    names = list(fields)
    rnd.shuffle(names)
    a = Record(rid, "p", {n: tuple(fields[n]) for n in fields})
    b = Record(rid, "p", {n: tuple(fields[n]) for n in names})
    assert serialize_for_compression(a) == serialize_for_compression(b)
    assert tokenize(a) == tokenize(b)


@given(st.lists(record_documents(), max_size=8, unique_by=lambda d: d[0]))
def test_export_ingest_round_trip(docs):
    records = [Record(rid, "", {n: tuple(v) for n, v in fields.items()}) for rid, fields in docs]
    buffer = io.StringIO()
    write_records(records, buffer)
    buffer.seek(0)
    result = ingest(buffer)
    assert not result.rejects
    original = {(r.id, tuple(sorted(r.fields.items()))) for r in records}
    restored = {(r.id, tuple(sorted(r.fields.items()))) for r in result.records}
    assert restored == original


def test_export_line_is_single_json_line():
    record = Record("r", "p", {"dc:title": ("with\nnewline",)})
    line = export_line(record)
    assert "\n" not in line
    assert json.loads(line)["fields"]["dc:title"] == ["with\nnewline"]
