"""Index directory lifecycle: manifest commit protocol, checksum
verification, crash injection, and the writer/reader lock."""

import json
from pathlib import Path

import pytest

import refmed.persist as persist
from refmed.config import EngineConfig
from refmed.engine import Engine
from refmed.persist import (
    DirLock,
    IndexCorruptError,
    IndexLockError,
    build_all,
    read_manifest,
    verify_checksums,
)
from refmed.synthetic import hybrid_fixture

from conftest import write_corpus


@pytest.fixture()
def workspace(tmp_path):
    docs, _ = hybrid_fixture(seed=77, n_docs=60, n_queries=5)
    corpus = write_corpus(tmp_path / "corpus.jsonl", docs)
    return EngineConfig(corpus_path=str(corpus), index_dir=str(tmp_path / "index"))


class TestBuildAndOpen:
    def test_round_trip_checksums_verify(self, workspace):
        manifest = build_all(workspace)
        index_dir = Path(workspace.index_dir)
        assert read_manifest(index_dir).corpus_fingerprint == manifest.corpus_fingerprint
        verify_checksums(index_dir, manifest)
        with Engine.open(workspace) as engine:
            assert len(engine.docs) == manifest.document_count

    def test_corrupt_postings_byte_fails_naming_file(self, workspace):
        build_all(workspace)
        lexical = Path(workspace.index_dir) / persist.LEXICAL_NAME
        raw = bytearray(lexical.read_bytes())
        raw[len(raw) // 2] ^= 0xFF
        lexical.write_bytes(bytes(raw))
        with pytest.raises(IndexCorruptError, match=persist.LEXICAL_NAME):
            Engine.open(workspace)

    def test_rebuild_same_corpus_same_fingerprint(self, workspace):
        first = build_all(workspace)
        second = build_all(workspace)
        assert first.corpus_fingerprint == second.corpus_fingerprint

    def test_missing_manifest_is_never_committed(self, workspace):
        (Path(workspace.index_dir)).mkdir(parents=True, exist_ok=True)
        with pytest.raises(IndexCorruptError, match="manifest"):
            Engine.open(workspace)

    def test_component_files_deterministic(self, workspace, tmp_path):
        build_all(workspace)
        other = EngineConfig(
            corpus_path=workspace.corpus_path, index_dir=str(tmp_path / "index2")
        )
        build_all(other)
        for name in (persist.DOCS_NAME, persist.LEXICAL_NAME, persist.SEMANTIC_NAME, persist.VECTORS_NAME):
            a = (Path(workspace.index_dir) / name).read_bytes()
            b = (Path(other.index_dir) / name).read_bytes()
            assert a == b, name


class TestCrashSafety:
    def test_injected_crashes_never_leave_openable_corruption(self, workspace, monkeypatch):
        # Fail the Nth component write for every N; after each crash the
        # directory must either refuse to open or open a prior good state.
        class Boom(RuntimeError):
            pass

        real_write = persist._write_bytes
        total_writes = 6  # docs, lexical, vectors, semantic, stats, manifest

        for fail_at in range(1, total_writes + 1):
            counter = {"n": 0}

            def crashing(path, data, _fail_at=fail_at, _counter=counter):
                _counter["n"] += 1
                if _counter["n"] == _fail_at:
                    raise Boom(f"injected crash at write {_fail_at}")
                real_write(path, data)

            monkeypatch.setattr(persist, "_write_bytes", crashing)
            with pytest.raises(Boom):
                build_all(workspace)
            monkeypatch.setattr(persist, "_write_bytes", real_write)
            with pytest.raises(IndexCorruptError):
                Engine.open(workspace)

        # A clean build afterwards commits and opens.
        build_all(workspace)
        with Engine.open(workspace) as engine:
            assert len(engine.docs) > 0

    def test_crash_after_commit_preserves_previous_state(self, workspace, monkeypatch):
        manifest = build_all(workspace)

        real_write = persist._write_bytes
        counter = {"n": 0}

        def crash_before_manifest(path, data):
            counter["n"] += 1
            if path.name == persist.MANIFEST_NAME:
                raise RuntimeError("injected crash before manifest rename")
            real_write(path, data)

        monkeypatch.setattr(persist, "_write_bytes", crash_before_manifest)
        with pytest.raises(RuntimeError):
            build_all(workspace)
        monkeypatch.setattr(persist, "_write_bytes", real_write)

        # The old manifest still governs; files it names are unchanged
        # because rebuilds are deterministic for the same corpus.
        with Engine.open(workspace) as engine:
            assert len(engine.docs) == manifest.document_count


class TestLocking:
    def test_reader_excludes_writer(self, workspace):
        build_all(workspace)
        with Engine.open(workspace):
            with pytest.raises(IndexLockError):
                build_all(workspace)

    def test_many_readers_allowed(self, workspace):
        build_all(workspace)
        with Engine.open(workspace), Engine.open(workspace):
            pass

    def test_writer_excludes_reader(self, workspace):
        build_all(workspace)
        index_dir = Path(workspace.index_dir)
        with DirLock(index_dir, exclusive=True):
            with pytest.raises(IndexLockError):
                Engine.open(workspace)


class TestManifestFormat:
    def test_manifest_lists_components_with_sizes(self, workspace):
        manifest = build_all(workspace)
        expected = {
            persist.DOCS_NAME,
            persist.LEXICAL_NAME,
            persist.SEMANTIC_NAME,
            persist.VECTORS_NAME,
            persist.STATS_NAME,
        }
        assert set(manifest.files) == expected
        for name, meta in manifest.files.items():
            path = Path(workspace.index_dir) / name
            assert meta["bytes"] == path.stat().st_size

    def test_stats_payload_consistent(self, workspace):
        manifest = build_all(workspace)
        stats = json.loads((Path(workspace.index_dir) / persist.STATS_NAME).read_text())
        assert stats["indexed_documents"] == manifest.document_count
        assert stats["total_records"] == stats["empty_skipped"] + stats["indexed_documents"]
