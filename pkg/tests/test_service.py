"""HTTP surface: schemas, validation, error mapping, statelessness."""

import json
from concurrent.futures import ThreadPoolExecutor

import pytest
from fastapi.testclient import TestClient

from refmed.engine import Engine
from refmed.service import create_app


@pytest.fixture(scope="module")
def engine(built_index):
    config, _ = built_index
    with Engine.open(config) as eng:
        yield eng


@pytest.fixture(scope="module")
def client(engine):
    return TestClient(create_app(lambda: engine))


class TestHealth:
    def test_healthz(self, client, engine):
        resp = client.get("/healthz")
        assert resp.status_code == 200
        body = resp.json()
        assert body["status"] == "ok"
        assert body["docs"] == len(engine.docs)
        assert body["schema_version"] == "1"

    def test_503_before_indices_open(self):
        unready = TestClient(create_app(lambda: None))
        assert unready.get("/healthz").status_code == 503
        assert unready.post("/search", json={"query": "x"}).status_code == 503
        assert unready.get("/abstract/1").status_code == 503

    def test_config_sanitized(self, client):
        body = client.get("/config").json()
        assert body["config"]["weights"] == {"w_lex": 0.7, "w_sem": 0.3}
        assert "url" not in json.dumps(body)


class TestAbstract:
    def test_found(self, client, engine):
        pmid = next(iter(engine.docs))
        body = client.get(f"/abstract/{pmid}").json()
        assert body["pmid"] == pmid
        assert body["title"] == engine.docs[pmid].title

    def test_unknown_pmid_404(self, client):
        resp = client.get("/abstract/999999999")
        assert resp.status_code == 404
        assert "999999999" in resp.json()["error"]


class TestSearch:
    def test_basic_search(self, client):
        resp = client.post("/search", json={"query": "q000t0 q000t1 q000t2", "k": 5})
        assert resp.status_code == 200
        hits = resp.json()["hits"]
        assert 1 <= len(hits) <= 5
        assert hits[0]["rank"] == 1
        assert set(hits[0]) == {"rank", "pmid", "title", "norm_lex", "norm_sem", "fused"}

    def test_negative_weight_field_level_400(self, client):
        resp = client.post("/search", json={"query": "x", "w_lex": -1})
        assert resp.status_code == 400
        fields = {f["field"] for f in resp.json()["fields"]}
        assert "w_lex" in fields

    def test_missing_query_400(self, client):
        resp = client.post("/search", json={})
        assert resp.status_code == 400
        assert any("query" in f["field"] for f in resp.json()["fields"])

    def test_blank_query_400(self, client):
        assert client.post("/search", json={"query": "   "}).status_code == 400

    def test_bad_k_400(self, client):
        assert client.post("/search", json={"query": "x", "k": 0}).status_code == 400

    def test_journal_filter_respected(self, client, engine):
        resp = client.post(
            "/search", json={"query": "q000t0 q000t1 q000t2", "k": 10, "journal": "BMJ"}
        )
        for hit in resp.json()["hits"]:
            assert engine.docs[hit["pmid"]].journal == "BMJ"


class TestAnswer:
    def test_answer_shape(self, client):
        resp = client.post("/answer", json={"question": "q000t0 q000t1 q000t2 q000t3"})
        assert resp.status_code == 200
        body = resp.json()
        assert set(body) == {
            "schema_version", "answer", "truncated", "citations", "audit", "context",
        }
        assert len(body["context"]) == 10
        assert body["context"][0]["rank"] == 1
        for span in body["citations"]:
            assert body["answer"][span["start"] : span["end"]].upper().startswith("PUBMED")
        audit = body["audit"]
        assert set(audit["valid"]) <= set(audit["distinct_cited"])

    def test_stub_answers_deterministic(self, client):
        payload = {"question": "q001t0 q001t1 q001t2 q001t3"}
        first = client.post("/answer", json=payload).content
        for _ in range(3):
            assert client.post("/answer", json=payload).content == first

    def test_weight_override_changes_context(self, client):
        question = {"question": "q002t0 q002t1 q002t2 q002t3 q002t4 q002t5"}
        lex = client.post("/answer", json={**question, "w_lex": 1.0, "w_sem": 0.0}).json()
        sem = client.post("/answer", json={**question, "w_lex": 0.0, "w_sem": 1.0}).json()
        assert [c["pmid"] for c in lex["context"]] != [c["pmid"] for c in sem["context"]]

    def test_generation_failure_is_502_with_leg(self, built_index):
        from dataclasses import replace

        from refmed.config import LLMClientConfig

        config, _ = built_index
        bad = replace(
            config,
            llm=LLMClientConfig(kind="http", url="http://127.0.0.1:1/v1/chat"),
        )
        with Engine.open(bad) as engine:
            client = TestClient(create_app(lambda: engine))
            resp = client.post("/answer", json={"question": "q000t0 q000t1"})
            assert resp.status_code == 502
            assert resp.json()["leg"] == "generation"


class TestUiMount:
    def test_static_console_served_when_present(self, engine, tmp_path):
        ui = tmp_path / "dist"
        ui.mkdir()
        (ui / "index.html").write_text("<html><body>console</body></html>", encoding="utf-8")
        mounted = TestClient(create_app(lambda: engine, ui_dir=ui))
        resp = mounted.get("/ui/")
        assert resp.status_code == 200
        assert "console" in resp.text

    def test_absent_ui_dir_is_fine(self, engine, tmp_path):
        client = TestClient(create_app(lambda: engine, ui_dir=tmp_path / "missing"))
        assert client.get("/healthz").status_code == 200


class TestStatelessness:
    def test_concurrent_storm_matches_serial_replay(self, client):
        payloads = [
            {"query": f"q{i:03d}t0 q{i:03d}t1 q{i:03d}t2", "k": 10} for i in range(8)
        ] * 4
        serial = [client.post("/search", json=p).content for p in payloads]
        with ThreadPoolExecutor(max_workers=8) as pool:
            storm = list(pool.map(lambda p: client.post("/search", json=p).content, payloads))
        assert storm == serial
