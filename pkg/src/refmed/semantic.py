"""Dense retrieval: pluggable embedder, int8-quantized HNSW search, and
full-precision rescoring.

The index keeps two aligned stores per chunk: int8 codes traversed by the
HNSW graph, and the original float32 vectors in a flat, alignment-padded
file designed for memory mapping. Queries are quantized with the index's
params for graph traversal; rescoring recomputes exact dot products from
the full-precision store using the unquantized query.
"""

from __future__ import annotations

from dataclasses import dataclass
from io import BytesIO
from pathlib import Path

import numpy as np

from . import codec
from .analysis import analyze
from .hnsw import HnswGraph, HNSWParams
from .quantize import QuantizationParams, dequantize, fit_quantization, quantize

_STORE_MAGIC = b"RMSQ"
_VEC_MAGIC = b"RMFV"
_VERSION = 1
_VEC_HEADER_BYTES = 64  # magic, version, count, dim, zero padding to 64-byte alignment

DEFAULT_EMBED_DIM = 384


class EmbedderError(RuntimeError):
    """The embedding backend failed; never silently returns zeros."""


class IndexNotSealedError(RuntimeError):
    pass


@dataclass(frozen=True)
class SemanticHit:
    node_id: int
    doc_pmid: str
    chunk_seq: int
    approx_score: float
    exact_score: float | None = None

    @property
    def score(self) -> float:
        return self.exact_score if self.exact_score is not None else self.approx_score


class HashingEmbedder:
    """Deterministic bag-of-tokens feature hashing, L2 normalized.

    Each analyzed token is hashed (crc32) to a bucket and a sign; token
    counts accumulate and the vector is normalized to unit length. Fast,
    dependency-free, and stable across runs, which makes every downstream
    pipeline test reproducible without a model.
    """

    def __init__(self, dim: int = DEFAULT_EMBED_DIM):
        if dim < 2:
            raise ValueError("dim must be >= 2")
        self.dim = dim

    def embed(self, text: str) -> np.ndarray:
        if not text or not text.strip():
            raise ValueError("cannot embed empty text")
        from zlib import crc32

        vec = np.zeros(self.dim, dtype=np.float64)
        for token in analyze(text):
            h = crc32(token.encode("utf-8"))
            sign = 1.0 if (h >> 31) & 1 else -1.0
            vec[h % self.dim] += sign
        norm = float(np.linalg.norm(vec))
        if norm == 0.0:  # sign cancellation; fall back to a unit basis vector
            vec[crc32(text.encode("utf-8")) % self.dim] = 1.0
            norm = 1.0
        return (vec / norm).astype(np.float32)

    def embed_batch(self, texts: list[str]) -> np.ndarray:
        return np.stack([self.embed(t) for t in texts]) if texts else np.zeros((0, self.dim), np.float32)


class HttpEmbedder:
    """Client for an external embedding endpoint.

    POST {url} {"texts": [...]} -> {"vectors": [[...], ...]}. Transport or
    shape errors surface as EmbedderError.
    """

    def __init__(self, url: str, dim: int, timeout: float = 30.0):
        self.url = url
        self.dim = dim
        self.timeout = timeout

    def embed_batch(self, texts: list[str]) -> np.ndarray:
        import httpx

        if any(not t or not t.strip() for t in texts):
            raise ValueError("cannot embed empty text")
        try:
            resp = httpx.post(self.url, json={"texts": texts}, timeout=self.timeout)
            resp.raise_for_status()
            payload = resp.json()
        except Exception as exc:  # noqa: BLE001 - boundary, re-raised typed
            raise EmbedderError(f"embedder at {self.url} failed: {exc}") from exc
        vectors = payload.get("vectors")
        if not isinstance(vectors, list) or len(vectors) != len(texts):
            raise EmbedderError(f"embedder at {self.url} returned a malformed response")
        arr = np.asarray(vectors, dtype=np.float32)
        if arr.shape != (len(texts), self.dim):
            raise EmbedderError(
                f"embedder returned shape {arr.shape}, expected ({len(texts)}, {self.dim})"
            )
        if not np.all(np.isfinite(arr)):
            raise EmbedderError("embedder returned non-finite components")
        return arr

    def embed(self, text: str) -> np.ndarray:
        return self.embed_batch([text])[0]


class SemanticIndex:
    """Sealed chunk-level vector index. Unlimited concurrent readers."""

    def __init__(
        self,
        graph: HnswGraph,
        codes: np.ndarray,
        quant: QuantizationParams,
        full_vectors: np.ndarray,
        chunk_refs: list[tuple[str, int]],
        params: HNSWParams,
    ):
        if len(chunk_refs) != graph.count or full_vectors.shape[0] != graph.count:
            raise ValueError("graph, vectors, and chunk mapping must be aligned")
        self.graph = graph
        self.codes = codes
        self.quant = quant
        self.full_vectors = full_vectors
        self.chunk_refs = chunk_refs
        self.params = params
        self._sealed = True

    @property
    def count(self) -> int:
        return self.graph.count

    @property
    def dim(self) -> int:
        return self.graph.dim

    @classmethod
    def build(
        cls,
        vectors: np.ndarray,
        chunk_refs: list[tuple[str, int]],
        params: HNSWParams = HNSWParams(),
        clip_quantile: float = 0.99,
    ) -> "SemanticIndex":
        """Fit quantization on the vectors, insert their dequantized forms
        into a fresh graph, and seal."""
        vectors = np.ascontiguousarray(vectors, dtype=np.float32)
        if vectors.ndim != 2 or vectors.shape[0] != len(chunk_refs):
            raise ValueError("vectors must be (n, dim) aligned with chunk_refs")
        if vectors.shape[0] == 0:
            raise ValueError("cannot build a semantic index over zero chunks")
        quant = fit_quantization(vectors, clip_quantile)
        codes = quantize(vectors, quant)
        approx = dequantize(codes, quant)
        graph = HnswGraph(vectors.shape[1], params)
        for row in approx:
            graph.insert(row)
        return cls(graph, codes, quant, vectors, list(chunk_refs), params)

    def search(
        self,
        query: np.ndarray,
        k: int,
        rescore: bool = True,
        candidates: int = 100,
    ) -> list[SemanticHit]:
        """Approximate top-k, optionally rescored with exact dot products.

        With rescore, `candidates` results are fetched by quantized graph
        search and the top-k of that set is returned in exact-score order;
        hits then carry both scores. Ties break by ascending chunk id.
        """
        if not self._sealed:
            raise IndexNotSealedError("index must be sealed before search")
        if k < 1:
            raise ValueError("k must be >= 1")
        if k > candidates:
            raise ValueError(f"k ({k}) must not exceed candidates ({candidates})")
        query = np.ascontiguousarray(query, dtype=np.float32)
        q_approx = dequantize(quantize(query, self.quant), self.quant)
        fetch = candidates if rescore else k
        ef = max(self.params.ef_search, fetch)
        approx_hits = self.graph.search(q_approx, fetch, ef=ef)
        if not rescore:
            return [self._hit(node, approx, None) for approx, node in approx_hits]
        ids = np.array([node for _, node in approx_hits], dtype=np.intp)
        exact = np.asarray(self.full_vectors[ids], dtype=np.float32) @ query
        approx_by_node = {node: score for score, node in approx_hits}
        order = np.lexsort((ids, -exact))[:k]
        return [
            self._hit(int(ids[i]), approx_by_node[int(ids[i])], float(exact[i]))
            for i in order.tolist()
        ]

    def exact_search(self, query: np.ndarray, k: int) -> list[SemanticHit]:
        """Full scan over the full-precision store; the brute-force oracle."""
        query = np.ascontiguousarray(query, dtype=np.float32)
        scores = np.asarray(self.full_vectors, dtype=np.float32) @ query
        ids = np.arange(self.count, dtype=np.intp)
        order = np.lexsort((ids, -scores))[:k]
        return [self._hit(int(i), float(scores[i]), float(scores[i])) for i in order.tolist()]

    def _hit(self, node: int, approx: float, exact: float | None) -> SemanticHit:
        pmid, seq = self.chunk_refs[node]
        return SemanticHit(
            node_id=node, doc_pmid=pmid, chunk_seq=seq, approx_score=approx, exact_score=exact
        )

    # -- persistence ----------------------------------------------------------

    def store_to_bytes(self) -> bytes:
        """Quantized store: header, quantization params, codes, chunk map, graph."""
        buf = BytesIO()
        buf.write(_STORE_MAGIC)
        codec.write_u32(buf, _VERSION)
        codec.write_u64(buf, self.count)
        codec.write_u32(buf, self.dim)
        codec.write_f64(buf, self.quant.clip_quantile)
        buf.write(self.quant.offset.astype("<f4").tobytes())
        buf.write(self.quant.scale.astype("<f4").tobytes())
        buf.write(self.codes.astype(np.int8).tobytes())
        for pmid, seq in self.chunk_refs:
            codec.write_str(buf, pmid)
            codec.write_varint(buf, seq)
        graph_bytes = self.graph.graph_to_bytes()
        codec.write_u64(buf, len(graph_bytes))
        buf.write(graph_bytes)
        return buf.getvalue()

    def vectors_to_bytes(self) -> bytes:
        """Full-precision store: 64-byte header, then row-major float32."""
        header = BytesIO()
        header.write(_VEC_MAGIC)
        codec.write_u32(header, _VERSION)
        codec.write_u64(header, self.count)
        codec.write_u32(header, self.dim)
        raw = header.getvalue()
        return raw + b"\x00" * (_VEC_HEADER_BYTES - len(raw)) + np.ascontiguousarray(
            self.full_vectors, dtype="<f4"
        ).tobytes()

    @classmethod
    def load(cls, store_path: Path, vectors_path: Path, mmap_vectors: bool = True) -> "SemanticIndex":
        with open(vectors_path, "rb") as fh:
            head = BytesIO(fh.read(_VEC_HEADER_BYTES))
        codec.expect_magic(head, _VEC_MAGIC, "vector store")
        version = codec.read_u32(head)
        if version != _VERSION:
            raise codec.CodecError(f"unsupported vector store version {version}")
        count = codec.read_u64(head)
        dim = codec.read_u32(head)
        if mmap_vectors:
            full = np.memmap(
                vectors_path, dtype="<f4", mode="r", offset=_VEC_HEADER_BYTES, shape=(count, dim)
            )
        else:
            full = np.fromfile(vectors_path, dtype="<f4", offset=_VEC_HEADER_BYTES).reshape(
                count, dim
            )

        buf = BytesIO(store_path.read_bytes())
        codec.expect_magic(buf, _STORE_MAGIC, "quantized store")
        version = codec.read_u32(buf)
        if version != _VERSION:
            raise codec.CodecError(f"unsupported quantized store version {version}")
        s_count = codec.read_u64(buf)
        s_dim = codec.read_u32(buf)
        if (s_count, s_dim) != (count, dim):
            raise codec.CodecError("quantized store and vector store disagree on shape")
        clip_quantile = codec.read_f64(buf)
        offset = np.frombuffer(buf.read(4 * dim), dtype="<f4").copy()
        scale = np.frombuffer(buf.read(4 * dim), dtype="<f4").copy()
        quant = QuantizationParams(offset=offset, scale=scale, clip_quantile=clip_quantile)
        codes = np.frombuffer(buf.read(count * dim), dtype=np.int8).reshape(count, dim).copy()
        chunk_refs = []
        for _ in range(count):
            pmid = codec.read_str(buf)
            seq = codec.read_varint(buf)
            chunk_refs.append((pmid, seq))
        graph_len = codec.read_u64(buf)
        graph = HnswGraph.graph_from_bytes(buf.read(graph_len), dequantize(codes, quant))
        return cls(graph, codes, quant, full, chunk_refs, graph.params)
