"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s` to see the lines live.
"""

import json
import random
import tempfile
import time
from contextlib import contextmanager
from pathlib import Path

import pytest

from harmonkit import matchers as matchers_mod
from harmonkit.agent.loop import run_playbook, run_session
from harmonkit.agent.planner import RestlessPlanner
from harmonkit.agent.reviewers import MockReviewer
from harmonkit.agent.session import HarmonizationSession
from harmonkit.errors import AgentLoopError
from harmonkit.evaluation import evaluate
from harmonkit.mapspec import Dictionary, build_spec, parse_spec, serialize_spec
from harmonkit.matchers import MatchMethod, match_schema, match_values, top_matches
from harmonkit.materialize import materialize_mapping, union_tables, write_table
from harmonkit.provenance import ProvenanceLog, replay
from harmonkit.tablecore import (
    Domain,
    Table,
    TargetAttribute,
    TargetSchema,
    distinct_values,
    load_table,
    load_vocabulary,
)

from conftest import FIXTURES, GOLDEN, STUDY_COLUMNS, VALUE_COLUMNS
from oracles import oracle_match_values, oracle_rank
from randspec import random_spec

TFIDF = MatchMethod.parse("tfidf_ngram")


@contextmanager
def criterion(name):
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE {name}: FAIL", flush=True)
        raise
    print(f"ACCEPTANCE {name}: PASS", flush=True)


# -- randomized matcher instances --

_ALPHABET = "abcdefghij XYZ_01-."


def _unique_names(rng, count, max_len=12):
    names, seen = [], set()
    while len(names) < count:
        name = "".join(rng.choice(_ALPHABET) for _ in range(rng.randint(0, max_len)))
        if name not in seen:
            seen.add(name)
            names.append(name)
    return names


def _random_instance(seed):
    rng = random.Random(seed)
    columns = _unique_names(rng, rng.randint(1, 30))
    attr_names = _unique_names(rng, rng.randint(1, 20))
    attributes = []
    enum_attrs = []
    for name in attr_names:
        roll = rng.random()
        if roll < 0.7:
            domain_values = _unique_names(rng, rng.randint(1, 100))
            attributes.append(
                TargetAttribute(name=name, description="", domain=Domain(kind="enum", values=tuple(domain_values)))
            )
            enum_attrs.append(name)
        elif roll < 0.85:
            attributes.append(TargetAttribute(name=name, description="", domain=Domain(kind="free")))
        else:
            attributes.append(TargetAttribute(name=name, description="", domain=Domain(kind="numeric")))
    schema = TargetSchema(name=f"rand{seed}", attributes=attributes)

    token_pool = _unique_names(rng, 25)
    n_rows = rng.randint(0, 30)
    rows = [
        [rng.choice([None] + token_pool) for _ in columns]
        for _ in range(n_rows)
    ]
    table = Table(name=f"t{seed}", columns=columns, rows=rows)

    pairs = []
    if enum_attrs and n_rows:
        for column in rng.sample(columns, min(len(columns), rng.randint(1, 4))):
            pairs.append((column, rng.choice(enum_attrs)))
    return table, schema, pairs, rng


def test_matcher_oracle_equivalence():
    with criterion("matcher oracle equivalence (seeds 0-49)"):
        started = time.monotonic()
        for seed in range(50):
            table, schema, pairs, rng = _random_instance(seed)
            attr_names = schema.attribute_names()

            engine = match_schema(table, schema, TFIDF)
            for match in engine:
                best, score = oracle_rank(match.source_column, attr_names, "tfidf_ngram")[0]
                assert match.target_attribute == (None if score == 0.0 else best)
                assert match.score == pytest.approx(score, abs=1e-9)

            for column in rng.sample(table.columns, min(3, len(table.columns))):
                k = rng.randint(1, len(attr_names))
                ranked = top_matches(table, column, schema, k, TFIDF)
                expected = oracle_rank(column, attr_names, "tfidf_ngram")[:k]
                assert [name for name, _ in ranked] == [name for name, _ in expected]
                for (_, got), (_, want) in zip(ranked, expected):
                    assert got == pytest.approx(want, abs=1e-9)

            for vtable in match_values(table, schema, pairs, TFIDF):
                if vtable.skipped:
                    continue
                domain = schema.domain_of(vtable.target_attribute)
                values = distinct_values(table, vtable.source_column)
                expected = oracle_match_values(values, domain, "tfidf_ngram")
                assert len(vtable.matches) == len(expected)
                for match, (value, best, score) in zip(vtable.matches, expected):
                    assert (match.source_value, match.target_value) == (value, best)
                    assert match.score == pytest.approx(score, abs=1e-9)
        elapsed = time.monotonic() - started
        assert elapsed < 10.0, f"oracle equivalence took {elapsed:.1f}s"


def test_grade_dictionary_golden():
    with criterion("grade-dictionary golden spec and 6-row materialization"):
        started = time.monotonic()
        matches = [
            matchers_mod.ColumnMatch(
                source_column="Histologic_Grade_FIGO", target_attribute="tumor_grade",
                score=0.32, method="tfidf_ngram",
            )
        ]
        value_table = matchers_mod.ValueMatchTable(
            source_column="Histologic_Grade_FIGO",
            target_attribute="tumor_grade",
            matches=[
                matchers_mod.correct_value_match(
                    matchers_mod.ValueMatch(source_value=f"FIGO grade {i}", target_value="Low Grade", score=0.29),
                    f"G{i}",
                )
                for i in (1, 2, 3)
            ],
        )
        spec = build_spec(matches, [value_table])
        (entry,) = spec.entries
        assert entry.transform == Dictionary(
            matches=(("FIGO grade 1", "G1"), ("FIGO grade 2", "G2"), ("FIGO grade 3", "G3"))
        )
        assert serialize_spec(spec) == serialize_spec(parse_spec((FIXTURES / "grade_dictionary.mapping.json").read_text()))

        table = load_table(FIXTURES / "grades6.csv")
        assert len(table.rows) == 6
        harmonized = materialize_mapping(table, spec)
        assert [row[0] for row in harmonized.rows] == ["G1", "G2", "G3", "G2", "G1", "G3"]
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "grades6_harmonized.csv"
            write_table(harmonized, path)
            assert path.read_bytes() == (GOLDEN / "grades6_harmonized.csv").read_bytes()
        elapsed = time.monotonic() - started
        assert elapsed < 1.0, f"grade-dictionary golden took {elapsed:.1f}s"


def test_spec_roundtrip():
    with criterion("spec round-trip (grade dictionary + 100 randomized specs)"):
        committed = (FIXTURES / "grade_dictionary.mapping.json").read_text()
        once = serialize_spec(parse_spec(committed))
        assert serialize_spec(parse_spec(once)) == once
        for seed in range(100):
            spec = random_spec(random.Random(seed))
            text = serialize_spec(spec)
            assert parse_spec(text) == spec
            assert serialize_spec(parse_spec(text)) == text


def test_scripted_session_reproducibility(tmp_path):
    with criterion("scripted session reproducibility (3 runs + replay)"):
        started = time.monotonic()
        outputs = []
        log_path = None
        for i in range(3):
            out_dir = tmp_path / f"run{i}"
            session = run_playbook(
                FIXTURES / "playbook_dou.json", FIXTURES / "corrections_dou.json", out_dir
            )
            log_path = session.log.path
            outputs.append((
                (out_dir / "dou.mapping.json").read_bytes(),
                (out_dir / "dou_harmonized.csv").read_bytes(),
                tuple(ProvenanceLog.load(log_path).canonical_lines(include_ts=False)),
            ))
        assert outputs[0] == outputs[1] == outputs[2]
        assert outputs[0][0] == (GOLDEN / "dou.mapping.json").read_bytes()
        assert outputs[0][1] == (GOLDEN / "dou_harmonized.csv").read_bytes()

        spec = replay(ProvenanceLog.load(log_path), base_dir=FIXTURES)
        assert serialize_spec(spec).encode("utf-8") == outputs[0][0]
        elapsed = time.monotonic() - started
        assert elapsed < 5.0, f"scripted sessions took {elapsed:.1f}s"


def test_union_additivity():
    with criterion("union additivity (153 + 190 = 343, null fill, associativity)"):
        t1 = load_table(FIXTURES / "cohort_t1.csv")
        t2 = load_table(FIXTURES / "cohort_t2.csv")
        assert (len(t1.rows), len(t2.rows)) == (153, 190)
        union = union_tables([t1, t2])
        assert len(union.rows) == 343
        assert union.columns == ["Sample_ID", "Histologic_Grade_FIGO", "Country", "Age", "Histologic_grade", "BMI"]
        grade_t2 = union.columns.index("Histologic_grade")
        grade_t1 = union.columns.index("Histologic_Grade_FIGO")
        for row in union.rows[:153]:
            assert row[grade_t2] is None and row[grade_t1] is not None
        for row in union.rows[153:]:
            assert row[grade_t1] is None and row[grade_t2] is not None

        rng = random.Random(4242)
        pool = [f"c{i}" for i in range(5)]
        for _ in range(25):
            tables = []
            for tag in range(3):
                columns = rng.sample(pool, rng.randint(1, 4))
                rows = [
                    [rng.choice([None, "x", f"{tag}.{r}.{c}"]) for c in range(len(columns))]
                    for r in range(rng.randint(0, 4))
                ]
                tables.append(Table(name=f"t{tag}", columns=columns, rows=rows))
            nested = union_tables([union_tables(tables[:2]), tables[2]])
            flat = union_tables(tables)
            assert nested.columns == flat.columns and nested.rows == flat.rows


def test_directional_table1_analogue(scripted_run):
    with criterion("directional analogue: corrected F1 > baseline F1 on both tasks"):
        truth_schema = json.loads((FIXTURES / "truth_schema.json").read_text())
        truth_values = json.loads((FIXTURES / "truth_values.json").read_text())
        table = load_table(FIXTURES / "dou.csv", columns=STUDY_COLUMNS)
        schema = load_vocabulary(FIXTURES / "gdc_vocabulary.json")

        baseline_matches = match_schema(table, schema, TFIDF)
        baseline_pred = {m.source_column: m.target_attribute for m in baseline_matches}
        traps = [c for c, t in baseline_pred.items() if truth_schema.get(c) != t]
        assert len(traps) >= 2, f"expected >= 2 seeded lexical traps, got {traps}"

        session, _ = scripted_run
        corrected_pred = {
            m.source_column: m.target_attribute for m in session.state.column_matches
        }
        base_schema = evaluate(baseline_pred, truth_schema, "schema_matching")
        corr_schema = evaluate(corrected_pred, truth_schema, "schema_matching")
        assert corr_schema.f1 > base_schema.f1

        baseline_pairs = [(c, baseline_pred[c]) for c in VALUE_COLUMNS if baseline_pred.get(c)]
        baseline_value_pred = {}
        for vtable in match_values(table, schema, baseline_pairs, TFIDF):
            if vtable.skipped:
                continue
            baseline_value_pred[vtable.source_column] = {
                m.source_value: m.target_value for m in vtable.matches
            }
        corrected_value_pred = {
            vt.source_column: {m.source_value: m.target_value for m in vt.matches}
            for vt in session.state.value_tables
            if not vt.skipped
        }
        base_values = evaluate(baseline_value_pred, truth_values, "value_mapping")
        corr_values = evaluate(corrected_value_pred, truth_values, "value_mapping")
        assert corr_values.f1 > base_values.f1
        assert corr_values.f1 == 1.0


def test_eval_harness_arithmetic():
    with criterion("eval harness arithmetic (7-of-9 and perfect cases)"):
        truth = {f"col{i}": f"attr{i}" for i in range(9)}
        pred = dict(truth)
        pred["col0"], pred["col5"] = "bad0", "bad5"
        report = evaluate(pred, truth, "schema_matching")
        assert report.precision == pytest.approx(7 / 9)
        assert report.recall == pytest.approx(7 / 9)
        assert report.f1 == pytest.approx(7 / 9)
        perfect = evaluate(truth, truth, "schema_matching")
        assert (perfect.accuracy, perfect.precision, perfect.recall, perfect.f1) == (1.0, 1.0, 1.0, 1.0)


def test_agent_loop_termination(tmp_path, scripted_run):
    with criterion("agent loop termination (budget abort + scripted <= 20 steps)"):
        schema = load_vocabulary(FIXTURES / "gdc_vocabulary.json")
        session = HarmonizationSession.create(
            "s-restless", schema, artifact_dir=tmp_path, base_dir=FIXTURES, max_steps=8
        )
        with pytest.raises(AgentLoopError, match="budget"):
            run_session(session, RestlessPlanner("race"), MockReviewer())
        assert session.state.step_count == 8
        calls = [r for r in session.log.records if r.kind == "tool_call"]
        results = [r for r in session.log.records if r.kind == "tool_result"]
        assert len(calls) == 8 and len(results) == 8
        assert [r.seq for r in session.log.records] == list(range(len(session.log.records)))

        scripted_session, _ = scripted_run
        assert scripted_session.state.step_count <= 20
        assert scripted_session.state.phase == "materialized"
