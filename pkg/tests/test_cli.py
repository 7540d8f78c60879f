"""Command-line verbs exercised end to end on a small corpus."""

import json

import pytest

from refmed.cli import main
from refmed.synthetic import hybrid_fixture

from conftest import write_corpus


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    docs, queries = hybrid_fixture(seed=50, n_docs=100, n_queries=8)
    corpus = write_corpus(root / "corpus.jsonl", docs)
    index_dir = root / "index"
    assert main(["index", "build", "--corpus", str(corpus), "--index-dir", str(index_dir)]) == 0
    return root, corpus, index_dir, queries


class TestIngest:
    def test_stats_written(self, workspace, tmp_path):
        _, corpus, _, _ = workspace
        out = tmp_path / "stats.json"
        assert main(["ingest", "--corpus", str(corpus), "--stats-out", str(out)]) == 0
        stats = json.loads(out.read_text())
        assert stats["total_records"] == stats["empty_skipped"] + stats["indexed_documents"]
        assert stats["indexed_documents"] == 100


class TestSearch:
    def test_jsonl_output(self, workspace, capsys):
        _, corpus, index_dir, queries = workspace
        assert (
            main(
                [
                    "search",
                    "--corpus", str(corpus),
                    "--index-dir", str(index_dir),
                    "--query", queries[0].text,
                    "--k", "5",
                ]
            )
            == 0
        )
        lines = [l for l in capsys.readouterr().out.splitlines() if l.strip()]
        assert 1 <= len(lines) <= 5
        hit = json.loads(lines[0])
        assert set(hit) == {"doc_pmid", "norm_lex", "norm_sem", "fused"}

    def test_mode_lexical(self, workspace, capsys):
        _, corpus, index_dir, queries = workspace
        main(
            [
                "search",
                "--corpus", str(corpus),
                "--index-dir", str(index_dir),
                "--query", queries[0].text,
                "--mode", "lexical",
            ]
        )
        for line in capsys.readouterr().out.splitlines():
            hit = json.loads(line)
            assert hit["norm_sem"] == 0.0 or hit["fused"] == hit["norm_lex"]


class TestAnswer:
    def test_answer_json(self, workspace, capsys):
        _, corpus, index_dir, queries = workspace
        assert (
            main(
                [
                    "answer",
                    "--corpus", str(corpus),
                    "--index-dir", str(index_dir),
                    "--query", queries[0].text,
                ]
            )
            == 0
        )
        body = json.loads(capsys.readouterr().out)
        assert body["answer"]
        assert body["citations"]
        assert not body["audit"]["hallucinated"]


class TestAudit:
    def test_audit_report(self, tmp_path, capsys):
        answers = tmp_path / "answers.jsonl"
        contexts = tmp_path / "contexts.jsonl"
        report = tmp_path / "report.json"
        answers.write_text(
            json.dumps(
                {"question_id": "q1", "model": "m", "text": "Claim (PUBMED:11). Bad (PUBMED:99)."}
            )
            + "\n",
            encoding="utf-8",
        )
        contexts.write_text(
            json.dumps(
                {
                    "question_id": "q1",
                    "question": "Q?",
                    "abstracts": [
                        {"pmid": "11", "title": "T1", "abstract": "A1."},
                        {"pmid": "12", "title": "T2", "abstract": "A2."},
                    ],
                }
            )
            + "\n",
            encoding="utf-8",
        )
        assert (
            main(
                [
                    "audit",
                    "--answers", str(answers),
                    "--contexts", str(contexts),
                    "--report", str(report),
                ]
            )
            == 0
        )
        audits = json.loads(report.read_text())
        assert audits[0]["audit"]["valid"] == ["11"]
        assert audits[0]["audit"]["hallucinated"][0]["pmid"] == "99"


class TestEval:
    def test_eval_ir_markdown_and_json(self, workspace, tmp_path):
        _, corpus, index_dir, queries = workspace
        qrels = tmp_path / "qrels.jsonl"
        qrels.write_text(
            "\n".join(
                json.dumps(
                    {
                        "question_id": q.question_id,
                        "question": q.text,
                        "gold_pmids": sorted(q.gold_pmids),
                    }
                )
                for q in queries
            )
            + "\n",
            encoding="utf-8",
        )
        configs = tmp_path / "configs.json"
        configs.write_text(
            json.dumps(
                [
                    {"name": "hybrid default", "mode": "hybrid"},
                    {"name": "pure lexical", "mode": "lexical"},
                ]
            ),
            encoding="utf-8",
        )
        out_md = tmp_path / "table.md"
        assert (
            main(
                [
                    "eval", "ir",
                    "--corpus", str(corpus),
                    "--index-dir", str(index_dir),
                    "--qrels", str(qrels),
                    "--configs", str(configs),
                    "--out", str(out_md),
                ]
            )
            == 0
        )
        table = out_md.read_text()
        assert "hybrid default" in table and "P@10" in table

        out_json = tmp_path / "table.json"
        main(
            [
                "eval", "ir",
                "--corpus", str(corpus),
                "--index-dir", str(index_dir),
                "--qrels", str(qrels),
                "--out", str(out_json),
            ]
        )
        rows = json.loads(out_json.read_text())
        assert len(rows) == 13  # default comparison table

    def test_eval_answers(self, tmp_path):
        answers = tmp_path / "answers.jsonl"
        contexts = tmp_path / "contexts.jsonl"
        labels = tmp_path / "labels.jsonl"
        out = tmp_path / "report.json"
        answers.write_text(
            json.dumps({"question_id": "q1", "model": "m", "text": "See (PUBMED:11)."}) + "\n",
            encoding="utf-8",
        )
        contexts.write_text(
            json.dumps(
                {
                    "question_id": "q1",
                    "question": "Q?",
                    "abstracts": [
                        {"pmid": "11", "title": "T1", "abstract": "A1."},
                        {"pmid": "12", "title": "T2", "abstract": "A2."},
                    ],
                }
            )
            + "\n",
            encoding="utf-8",
        )
        labels.write_text(
            json.dumps({"question_id": "q1", "labels": {"11": "relevant", "12": "relevant"}})
            + "\n",
            encoding="utf-8",
        )
        assert (
            main(
                [
                    "eval", "answers",
                    "--answers", str(answers),
                    "--contexts", str(contexts),
                    "--labels", str(labels),
                    "--out", str(out),
                ]
            )
            == 0
        )
        report = json.loads(out.read_text())
        assert report["reference_recall"] == pytest.approx(0.5)
        assert report["total_references"] == 1
