import pytest
from hypothesis import given, strategies as st

from harmonkit.errors import CsvFormatError, HarmonkitError, VocabularyError
from harmonkit.tablecore import (
    Table,
    distinct_values,
    load_table,
    load_vocabulary,
    parse_vocabulary,
    table_from_csv_text,
    table_to_csv,
)

from conftest import FIXTURES, STUDY_COLUMNS


class TestLoadTable:
    def test_empty_field_becomes_absent(self, tmp_path):
        p = tmp_path / "t.csv"
        p.write_text("a,b\n1,\n")
        table = load_table(p)
        assert table.columns == ["a", "b"]
        assert table.rows == [["1", None]]

    def test_quoted_empty_field_is_empty_string(self, tmp_path):
        p = tmp_path / "t.csv"
        p.write_text('a,b\n"",x\n')
        assert load_table(p).rows == [["", "x"]]

    def test_na_text_is_preserved_as_data(self, tmp_path):
        p = tmp_path / "t.csv"
        p.write_text("a\nNA\n")
        assert load_table(p).rows == [["NA"]]

    def test_projection_subsets_and_reorders(self, tmp_path):
        p = tmp_path / "t.csv"
        p.write_text("Country,FIGO_stage\nUS,II\n")
        table = load_table(p, columns=["FIGO_stage"])
        assert table.columns == ["FIGO_stage"]
        assert table.rows == [["II"]]

    def test_missing_requested_column_names_it(self, tmp_path):
        p = tmp_path / "t.csv"
        p.write_text("a,b\n1,2\n")
        with pytest.raises(HarmonkitError, match="Tumor_Size"):
            load_table(p, columns=["a", "Tumor_Size"])

    def test_dou_fixture_loads_the_study_columns(self):
        table = load_table(FIXTURES / "dou.csv", columns=STUDY_COLUMNS)
        assert table.columns == STUDY_COLUMNS
        assert len(table.columns) == 11
        assert len(table.rows) == 20

    def test_file_not_found(self, tmp_path):
        with pytest.raises(HarmonkitError, match="not found"):
            load_table(tmp_path / "missing.csv")

    def test_ragged_row_rejected(self):
        with pytest.raises(CsvFormatError, match="expected 2"):
            table_from_csv_text("t", "a,b\n1\n")

    def test_unbalanced_quote_rejected(self):
        with pytest.raises(CsvFormatError, match="unterminated"):
            table_from_csv_text("t", 'a,b\n"oops,2\n')

    def test_quote_inside_unquoted_field_rejected(self):
        with pytest.raises(CsvFormatError, match="quote"):
            table_from_csv_text("t", 'a\nx"y\n')

    def test_crlf_and_embedded_newlines(self):
        table = table_from_csv_text("t", 'a,b\r\n"x\ny",2\r\n')
        assert table.rows == [["x\ny", "2"]]

    def test_duplicate_header_rejected(self):
        with pytest.raises(HarmonkitError, match="duplicate column"):
            table_from_csv_text("t", "a,a\n1,2\n")

    def test_bom_is_stripped_from_header(self, tmp_path):
        p = tmp_path / "t.csv"
        p.write_bytes(b"\xef\xbb\xbfa,b\n1,2\n")
        assert load_table(p).columns == ["a", "b"]


class TestTableInvariants:
    def test_rows_must_match_width(self):
        with pytest.raises(HarmonkitError, match="expected 2"):
            Table(name="t", columns=["a", "b"], rows=[["1"]])

    def test_cell_count_is_rows_times_columns(self, dou_table):
        total = sum(len(row) for row in dou_table.rows)
        assert total == len(dou_table.rows) * len(dou_table.columns)


class TestRoundTrip:
    def test_write_then_load_identical(self, dou_table):
        text = table_to_csv(dou_table)
        again = table_from_csv_text(dou_table.name, text)
        assert again.columns == dou_table.columns
        assert again.rows == dou_table.rows

    def test_load_write_load_is_stable(self):
        messy = 'a,b\n"plain",2\n"with ""q""",3\n'
        t1 = table_from_csv_text("t", messy)
        text1 = table_to_csv(t1)
        t2 = table_from_csv_text("t", text1)
        assert table_to_csv(t2) == text1
        assert t2.rows == t1.rows

    def test_none_and_empty_string_survive(self):
        table = Table(name="t", columns=["a"], rows=[[None], [""], ["NA"]])
        again = table_from_csv_text("t", table_to_csv(table))
        assert again.rows == [[None], [""], ["NA"]]

    @given(
        st.lists(
            st.lists(
                st.one_of(st.none(), st.text(alphabet='ab,"\n x', max_size=6)),
                min_size=2, max_size=2,
            ),
            max_size=8,
        )
    )
    def test_roundtrip_property(self, rows):
        table = Table(name="t", columns=["c1", "c2"], rows=rows)
        again = table_from_csv_text("t", table_to_csv(table))
        assert again.rows == table.rows


class TestDistinctValues:
    def test_dedupes_and_drops_absent(self):
        table = Table(name="t", columns=["g"], rows=[["G1"], ["G1"], [None], ["G2"]])
        assert distinct_values(table, "g") == ["G1", "G2"]

    def test_empty_table(self):
        assert distinct_values(Table(name="t", columns=["g"], rows=[]), "g") == []

    def test_unknown_column(self, dou_table):
        with pytest.raises(HarmonkitError, match="unknown column"):
            distinct_values(dou_table, "nope")

    def test_fixture_figo_stage_values(self, dou_table):
        assert distinct_values(dou_table, "FIGO_stage") == ["II", "IIIA", "IIIB"]

    def test_row_order_invariance(self, dou_table):
        reversed_rows = Table(
            name="t", columns=dou_table.columns, rows=list(reversed(dou_table.rows))
        )
        for col in dou_table.columns:
            assert distinct_values(dou_table, col) == distinct_values(reversed_rows, col)


class TestVocabulary:
    def test_fixture_tumor_grade_domain(self, vocabulary):
        values = vocabulary.domain_of("tumor_grade")
        assert len(values) == 11
        assert {"G1", "G2", "G3", "Low Grade", "Not Reported"} <= set(values)

    def test_duplicate_attribute_rejected(self):
        doc = {
            "name": "v",
            "attributes": [
                {"name": "gender", "description": "", "domain": {"kind": "free"}},
                {"name": "gender", "description": "", "domain": {"kind": "free"}},
            ],
        }
        with pytest.raises(VocabularyError, match="gender"):
            parse_vocabulary(doc)

    def test_empty_schema_is_valid(self):
        schema = parse_vocabulary({"name": "v", "attributes": []})
        assert schema.attribute_names() == []

    def test_empty_enum_domain_rejected(self):
        doc = {
            "name": "v",
            "attributes": [
                {"name": "x", "description": "", "domain": {"kind": "enum", "values": []}}
            ],
        }
        with pytest.raises(VocabularyError, match="x"):
            parse_vocabulary(doc)

    def test_unknown_keys_rejected(self):
        with pytest.raises(VocabularyError, match="extra"):
            parse_vocabulary({"name": "v", "attributes": [], "extra": 1})
        doc = {
            "name": "v",
            "attributes": [
                {"name": "x", "description": "", "domain": {"kind": "free", "bogus": 1}}
            ],
        }
        with pytest.raises(VocabularyError, match="bogus"):
            parse_vocabulary(doc)

    def test_load_fixture_file(self):
        schema = load_vocabulary(FIXTURES / "gdc_vocabulary.json")
        assert schema.name == "gdc_fixture"
        assert "primary_diagnosis" in schema.attribute_names()

    def test_values_on_numeric_domain_rejected(self):
        doc = {
            "name": "v",
            "attributes": [
                {"name": "x", "description": "", "domain": {"kind": "numeric", "values": ["1"]}}
            ],
        }
        with pytest.raises(VocabularyError, match="values"):
            parse_vocabulary(doc)
