"""Index directory lifecycle: atomic builds, checksummed opens, locking.

Build protocol: every component file is written to <name>.partial, fsynced,
and atomically renamed into place; the manifest is written last the same
way. A crash at any point therefore leaves either no manifest (the
directory does not open) or a complete previous state - never an
openable-but-wrong index. The manifest records a sha256 per component and
open_engine verifies them all before loading anything.

One writer xor many readers, enforced by an advisory lock on .lock in the
index directory: the builder takes it exclusive, readers take it shared.
"""

from __future__ import annotations

import fcntl
import hashlib
import json
import os
from collections import Counter
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from .config import EngineConfig
from .corpus import CorpusStats, chunk_corpus, ingest_corpus
from .lexical import build_lexical_index
from .semantic import HashingEmbedder, HttpEmbedder, SemanticIndex

MANIFEST_NAME = "manifest.json"
DOCS_NAME = "docs.jsonl"
LEXICAL_NAME = "lexical.idx"
SEMANTIC_NAME = "semantic.idx"
VECTORS_NAME = "vectors.f32"
STATS_NAME = "stats.json"
LOCK_NAME = ".lock"
FORMAT_VERSION = 1


class IndexCorruptError(RuntimeError):
    """Checksum or structure failure naming the offending file."""


class IndexLockError(RuntimeError):
    pass


class DirLock:
    """Advisory flock on the index directory. exclusive=True for the
    builder, shared for readers. Non-blocking: contention is an error."""

    def __init__(self, index_dir: Path, exclusive: bool):
        self.path = index_dir / LOCK_NAME
        self.exclusive = exclusive
        self._fd: int | None = None

    def acquire(self) -> "DirLock":
        self._fd = os.open(self.path, os.O_RDWR | os.O_CREAT, 0o644)
        flag = fcntl.LOCK_EX if self.exclusive else fcntl.LOCK_SH
        try:
            fcntl.flock(self._fd, flag | fcntl.LOCK_NB)
        except OSError as exc:
            os.close(self._fd)
            self._fd = None
            kind = "writer" if self.exclusive else "reader"
            raise IndexLockError(f"cannot acquire {kind} lock on {self.path}: {exc}") from exc
        return self

    def release(self) -> None:
        if self._fd is not None:
            fcntl.flock(self._fd, fcntl.LOCK_UN)
            os.close(self._fd)
            self._fd = None

    def __enter__(self) -> "DirLock":
        return self.acquire()

    def __exit__(self, *exc_info) -> None:
        self.release()


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def _write_bytes(path: Path, data: bytes) -> None:
    """Write via .partial and atomic rename. Tests monkeypatch this to
    inject crashes between build steps."""
    partial = path.with_name(path.name + ".partial")
    with open(partial, "wb") as fh:
        fh.write(data)
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(partial, path)


@dataclass(frozen=True)
class IndexManifest:
    format_version: int
    corpus_fingerprint: str
    document_count: int
    chunk_count: int
    files: dict[str, dict]
    built_at: str

    def to_json(self) -> str:
        return json.dumps(
            {
                "format_version": self.format_version,
                "corpus_fingerprint": self.corpus_fingerprint,
                "document_count": self.document_count,
                "chunk_count": self.chunk_count,
                "files": self.files,
                "built_at": self.built_at,
            },
            indent=2,
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "IndexManifest":
        raw = json.loads(text)
        return cls(
            format_version=raw["format_version"],
            corpus_fingerprint=raw["corpus_fingerprint"],
            document_count=raw["document_count"],
            chunk_count=raw["chunk_count"],
            files=raw["files"],
            built_at=raw["built_at"],
        )


def _make_embedder(config: EngineConfig):
    if config.embedder.kind == "stub":
        return HashingEmbedder(dim=config.embedder.dim)
    return HttpEmbedder(url=config.embedder.url, dim=config.embedder.dim)


def build_all(config: EngineConfig) -> IndexManifest:
    """Build both indices and the document store from one corpus pass.

    Both indices cover the identical document set. Component files land
    before the manifest; the manifest rename is the commit point.
    """
    corpus_path = config.require_corpus()
    index_dir = Path(config.index_dir)
    index_dir.mkdir(parents=True, exist_ok=True)

    with DirLock(index_dir, exclusive=True):
        fingerprint = sha256_file(corpus_path)

        with open(corpus_path, "r", encoding="utf-8") as fh:
            doc_iter, stats = ingest_corpus(fh, config.tokenizer)
            docs = list(doc_iter)
        stats.validate()

        docs_bytes = ("\n".join(d.to_json() for d in docs) + "\n").encode("utf-8")
        _write_bytes(index_dir / DOCS_NAME, docs_bytes)

        lexical = build_lexical_index(docs, config.bm25)
        _write_bytes(index_dir / LEXICAL_NAME, lexical.to_bytes())

        counters: Counter = Counter()
        chunks = list(chunk_corpus(docs, config.tokenizer, stats=stats, counters=counters))
        if not chunks:
            raise ValueError("corpus produced no chunks; nothing to index")
        embedder = _make_embedder(config)
        vectors = embedder.embed_batch([c.text for c in chunks])
        semantic = SemanticIndex.build(
            vectors,
            [(c.doc_pmid, c.seq) for c in chunks],
            params=config.hnsw,
            clip_quantile=config.clip_quantile,
        )
        _write_bytes(index_dir / VECTORS_NAME, semantic.vectors_to_bytes())
        _write_bytes(index_dir / SEMANTIC_NAME, semantic.store_to_bytes())

        stats_payload = dict(stats.to_dict(), oversized_sentences=counters["oversized_sentences"])
        _write_bytes(
            index_dir / STATS_NAME,
            (json.dumps(stats_payload, indent=2, sort_keys=True) + "\n").encode("utf-8"),
        )

        files = {}
        for name in (DOCS_NAME, LEXICAL_NAME, SEMANTIC_NAME, VECTORS_NAME, STATS_NAME):
            path = index_dir / name
            files[name] = {"sha256": sha256_file(path), "bytes": path.stat().st_size}
        manifest = IndexManifest(
            format_version=FORMAT_VERSION,
            corpus_fingerprint=fingerprint,
            document_count=len(docs),
            chunk_count=len(chunks),
            files=files,
            built_at=datetime.now(timezone.utc).isoformat(),
        )
        _write_bytes(index_dir / MANIFEST_NAME, manifest.to_json().encode("utf-8"))
        return manifest


def read_manifest(index_dir: Path) -> IndexManifest:
    manifest_path = index_dir / MANIFEST_NAME
    if not manifest_path.exists():
        raise IndexCorruptError(f"no manifest at {manifest_path}; index was never committed")
    manifest = IndexManifest.from_json(manifest_path.read_text(encoding="utf-8"))
    if manifest.format_version != FORMAT_VERSION:
        raise IndexCorruptError(f"unsupported index format version {manifest.format_version}")
    return manifest


def verify_checksums(index_dir: Path, manifest: IndexManifest) -> None:
    for name, meta in sorted(manifest.files.items()):
        path = index_dir / name
        if not path.exists():
            raise IndexCorruptError(f"missing index component: {name}")
        actual = sha256_file(path)
        if actual != meta["sha256"]:
            raise IndexCorruptError(
                f"checksum mismatch in {name}: expected {meta['sha256']}, got {actual}"
            )
