import json

import pytest
from fastapi.testclient import TestClient

from harmonkit.config import ServiceConfig
from harmonkit.service import create_app

from conftest import FIXTURES, GOLDEN, STUDY_COLUMNS, VALUE_COLUMNS

DOU_CSV = (FIXTURES / "dou.csv").read_text(encoding="utf-8")


@pytest.fixture()
def client(tmp_path):
    app = create_app(
        ServiceConfig(provenance_dir=str(tmp_path / "prov")), base_dir=FIXTURES
    )
    with TestClient(app) as c:
        c.provenance_dir = tmp_path / "prov"
        yield c


def _create(client):
    response = client.post("/sessions", json={"vocabulary_path": "gdc_vocabulary.json"})
    assert response.status_code == 201
    return response.json()["session_id"]


def _upload(client, sid):
    response = client.post(
        f"/sessions/{sid}/tables",
        json={"name": "dou", "csv_text": DOU_CSV, "columns": STUDY_COLUMNS},
    )
    assert response.status_code == 201
    return response


def _corrected_flow(client, sid):
    """The dou workflow with the same decisions the scripted session makes."""
    _upload(client, sid)
    assert client.post(f"/sessions/{sid}/match-schema", json={}).status_code == 200
    for column, target in [
        ("Histologic_type", "primary_diagnosis"),
        ("Tumor_Size_cm", "tumor_largest_dimension_diameter"),
    ]:
        response = client.post(
            f"/sessions/{sid}/decisions",
            json={"subject": {"kind": "column", "column": column}, "verdict": "replace", "target": target},
        )
        assert response.status_code == 200
    assert client.post(
        f"/sessions/{sid}/match-values", json={"source_columns": VALUE_COLUMNS}
    ).status_code == 200
    for column, value, target in [
        ("Histologic_Grade_FIGO", "FIGO grade 1", "G1"),
        ("Histologic_Grade_FIGO", "FIGO grade 2", "G2"),
        ("Histologic_Grade_FIGO", "FIGO grade 3", "G3"),
        ("FIGO_stage", "II", "Stage II"),
    ]:
        response = client.post(
            f"/sessions/{sid}/decisions",
            json={"subject": {"kind": "value", "column": column, "value": value},
                  "verdict": "replace", "target": target},
        )
        assert response.status_code == 200
    assert client.post(f"/sessions/{sid}/spec", json={}).status_code == 200
    assert client.post(f"/sessions/{sid}/materialize", json={}).status_code == 200


class TestSessionLifecycle:
    def test_create_and_info(self, client):
        sid = _create(client)
        info = client.get(f"/sessions/{sid}").json()
        assert info["phase"] == "created"
        assert client.get("/sessions").json()["sessions"] == [sid]

    def test_create_with_inline_vocabulary(self, client):
        doc = json.loads((FIXTURES / "gdc_vocabulary.json").read_text())
        response = client.post("/sessions", json={"vocabulary": doc})
        assert response.status_code == 201

    def test_create_without_vocabulary_fails(self, client):
        response = client.post("/sessions", json={})
        assert response.status_code == 400
        body = response.json()
        assert set(body) == {"error", "detail"}

    def test_unknown_session_404(self, client):
        assert client.get("/sessions/session-nope").status_code == 404

    def test_upload_and_phase(self, client):
        sid = _create(client)
        _upload(client, sid)
        assert client.get(f"/sessions/{sid}").json()["phase"] == "tables_loaded"


class TestPhaseGating:
    def test_match_schema_before_upload_409(self, client):
        sid = _create(client)
        response = client.post(f"/sessions/{sid}/match-schema", json={})
        assert response.status_code == 409
        assert response.json()["error"] == "conflict"

    def test_materialize_before_spec_409(self, client):
        sid = _create(client)
        _upload(client, sid)
        assert client.post(f"/sessions/{sid}/materialize", json={}).status_code == 409

    def test_match_values_before_schema_409(self, client):
        sid = _create(client)
        _upload(client, sid)
        assert client.post(f"/sessions/{sid}/match-values", json={}).status_code == 409

    def test_upload_after_matching_409(self, client):
        sid = _create(client)
        _upload(client, sid)
        client.post(f"/sessions/{sid}/match-schema", json={})
        assert _upload_status(client, sid) == 409


def _upload_status(client, sid):
    return client.post(
        f"/sessions/{sid}/tables", json={"name": "again", "csv_text": "a\n1\n"}
    ).status_code


class TestMatchesAndDecisions:
    def test_correction_flow_shows_corrected_from(self, client):
        sid = _create(client)
        _upload(client, sid)
        client.post(f"/sessions/{sid}/match-schema", json={})
        response = client.post(
            f"/sessions/{sid}/decisions",
            json={"subject": {"kind": "column", "column": "Histologic_type"},
                  "verdict": "replace", "target": "primary_diagnosis"},
        )
        assert response.status_code == 200
        match = next(
            m for m in client.get(f"/sessions/{sid}/matches").json()["matches"]
            if m["source"] == "Histologic_type"
        )
        assert match["corrected"] is True
        assert match["corrected_from"] == "history_of_tumor_type"

    def test_alternatives_delegate_to_top_matches(self, client):
        sid = _create(client)
        _upload(client, sid)
        client.post(f"/sessions/{sid}/match-schema", json={})
        response = client.get(f"/sessions/{sid}/matches/Histologic_type/alternatives?k=10")
        alternatives = response.json()["alternatives"]
        assert len(alternatives) == 10
        assert alternatives[0]["target"] == "history_of_tumor_type"
        assert any(a["target"] == "primary_diagnosis" for a in alternatives)
        scores = [a["score"] for a in alternatives]
        assert scores == sorted(scores, reverse=True)

    def test_invalid_replacement_400(self, client):
        sid = _create(client)
        _upload(client, sid)
        client.post(f"/sessions/{sid}/match-schema", json={})
        response = client.post(
            f"/sessions/{sid}/decisions",
            json={"subject": {"kind": "column", "column": "Gender"},
                  "verdict": "replace", "target": "not_an_attribute"},
        )
        assert response.status_code == 400

    def test_decision_before_match_409(self, client):
        sid = _create(client)
        _upload(client, sid)
        response = client.post(
            f"/sessions/{sid}/decisions",
            json={"subject": {"kind": "column", "column": "Gender"}, "verdict": "keep"},
        )
        assert response.status_code == 409


class TestQuestionsAndAnswers:
    def test_unknown_question_404(self, client):
        sid = _create(client)
        response = client.post(f"/sessions/{sid}/answers", json={"question_id": "q-404", "answer": "x"})
        assert response.status_code == 404

    def test_paused_scripted_session_continues_over_http(self, tmp_path):
        """A session that escalated to the user resumes through the API."""
        import pytest as _pytest

        from harmonkit.agent.loop import run_playbook
        from harmonkit.errors import AgentLoopError

        corrections = tmp_path / "strict.json"
        corrections.write_text('{"threshold": 2.0, "columns": {}, "values": {}}')
        prov_dir = tmp_path / "prov"
        with _pytest.raises(AgentLoopError, match="await user input"):
            run_playbook(
                FIXTURES / "playbook_dou.json", corrections,
                tmp_path / "out", provenance_dir=prov_dir,
            )

        app = create_app(ServiceConfig(provenance_dir=str(prov_dir)), base_dir=FIXTURES)
        with TestClient(app) as client:
            (sid,) = client.get("/sessions").json()["sessions"]
            questions = client.get(f"/sessions/{sid}/questions").json()["questions"]
            open_questions = [q for q in questions if q["status"] == "open"]
            assert len(open_questions) >= len(STUDY_COLUMNS)
            target_q = next(
                q for q in open_questions
                if (q["regarding"] or {}).get("column") == "Histologic_type"
            )
            assert "primary_diagnosis" in target_q["options"]

            response = client.post(
                f"/sessions/{sid}/answers",
                json={"question_id": target_q["question_id"], "answer": "primary_diagnosis"},
            )
            assert response.status_code == 200
            match = next(
                m for m in client.get(f"/sessions/{sid}/matches").json()["matches"]
                if m["source"] == "Histologic_type"
            )
            assert match["target"] == "primary_diagnosis"
            assert match["corrected_from"] == "history_of_tumor_type"

            # double-submit of the same answer: the question is closed now
            again = client.post(
                f"/sessions/{sid}/answers",
                json={"question_id": target_q["question_id"], "answer": "primary_diagnosis"},
            )
            assert again.status_code == 409
            assert again.json()["error"] == "conflict"

        # the answer survives another restart: question closed, match corrected
        app2 = create_app(ServiceConfig(provenance_dir=str(prov_dir)), base_dir=FIXTURES)
        with TestClient(app2) as client2:
            questions = client2.get(f"/sessions/{sid}/questions").json()["questions"]
            answered = next(
                q for q in questions if q["question_id"] == target_q["question_id"]
            )
            assert answered["status"] == "closed"
            match = next(
                m for m in client2.get(f"/sessions/{sid}/matches").json()["matches"]
                if m["source"] == "Histologic_type"
            )
            assert match["target"] == "primary_diagnosis"


class TestArtifactsAndEquality:
    def test_http_flow_matches_cli_goldens(self, client):
        sid = _create(client)
        _corrected_flow(client, sid)
        spec = client.get(f"/sessions/{sid}/artifacts/dou.mapping.json")
        assert spec.content == (GOLDEN / "dou.mapping.json").read_bytes()
        csv = client.get(f"/sessions/{sid}/artifacts/dou_harmonized.csv")
        assert csv.content == (GOLDEN / "dou_harmonized.csv").read_bytes()

    def test_unknown_artifact_404(self, client):
        sid = _create(client)
        assert client.get(f"/sessions/{sid}/artifacts/nope.csv").status_code == 404

    def test_provenance_lists_every_mutation(self, client):
        sid = _create(client)
        _corrected_flow(client, sid)
        records = client.get(f"/sessions/{sid}/provenance").json()["records"]
        decisions = [r for r in records if r["kind"] == "user_decision"]
        assert len(decisions) == 6  # 2 column + 4 value replacements
        kinds = {r["kind"] for r in records}
        assert {"user_prompt", "tool_call", "tool_result", "artifact"} <= kinds


class TestRestartRestore:
    def test_sessions_survive_restart(self, client, tmp_path):
        sid = _create(client)
        _corrected_flow(client, sid)
        # a second app instance over the same provenance dir
        app2 = create_app(
            ServiceConfig(provenance_dir=str(client.provenance_dir)), base_dir=FIXTURES
        )
        with TestClient(app2) as client2:
            info = client2.get(f"/sessions/{sid}").json()
            assert info["phase"] == "materialized"
            spec = client2.get(f"/sessions/{sid}/artifacts/dou.mapping.json")
            assert spec.content == (GOLDEN / "dou.mapping.json").read_bytes()
            matches = client2.get(f"/sessions/{sid}/matches").json()["matches"]
            fixed = next(m for m in matches if m["source"] == "Histologic_type")
            assert fixed["corrected_from"] == "history_of_tumor_type"

    def test_restore_midway_session(self, client):
        sid = _create(client)
        _upload(client, sid)
        client.post(f"/sessions/{sid}/match-schema", json={})
        app2 = create_app(
            ServiceConfig(provenance_dir=str(client.provenance_dir)), base_dir=FIXTURES
        )
        with TestClient(app2) as client2:
            assert client2.get(f"/sessions/{sid}").json()["phase"] == "schema_matched"
            # and the restored session continues to work
            response = client2.post(
                f"/sessions/{sid}/match-values", json={"source_columns": ["Gender"]}
            )
            assert response.status_code == 200


class TestConfigEndpoint:
    def test_threshold_exposed(self, client):
        body = client.get("/config").json()
        assert body["low_score_threshold"] == 0.5


class TestConcurrency:
    def test_parallel_mutations_keep_logs_gap_free(self, client):
        """Same-session requests serialize; different sessions run in parallel."""
        import concurrent.futures

        sids = [_create(client) for _ in range(3)]
        for sid in sids:
            _upload(client, sid)
            assert client.post(f"/sessions/{sid}/match-schema", json={}).status_code == 200

        def decide(sid, column, target):
            return client.post(
                f"/sessions/{sid}/decisions",
                json={"subject": {"kind": "column", "column": column},
                      "verdict": "replace", "target": target},
            ).status_code

        jobs = []
        with concurrent.futures.ThreadPoolExecutor(max_workers=6) as pool:
            for sid in sids:
                jobs.append(pool.submit(decide, sid, "Histologic_type", "primary_diagnosis"))
                jobs.append(pool.submit(decide, sid, "Tumor_Size_cm", "tumor_largest_dimension_diameter"))
        assert all(job.result() == 200 for job in jobs)

        from harmonkit.provenance import ProvenanceLog

        for sid in sids:
            log = ProvenanceLog.load(client.provenance_dir / f"{sid}.provenance.jsonl")
            assert [r.seq for r in log.records] == list(range(len(log.records)))
            decisions = [r for r in log.records if r.kind == "user_decision"]
            assert len(decisions) == 2
