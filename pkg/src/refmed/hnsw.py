"""Hierarchical navigable small world graph for approximate nearest
neighbors under the dot-product metric.

Layout follows the standard construction: every vector lives at layer 0;
each node is assigned a maximum layer by sampling floor(-ln(u) * mL) with
mL = 1 / ln(M), so layer populations decay geometrically. Search descends
greedily from the entry point through the upper layers, then runs a
beam search of width ef at layer 0.

Internally "distance" is the negated dot product, so smaller is closer and
plain min-heaps apply. All candidate heaps carry (distance, node_id)
tuples, which makes tie handling, and therefore the whole build, fully
deterministic for a fixed seed and insertion order.

A new node's outgoing links are chosen with the diversity heuristic: a
candidate is kept only if it is closer to the query than to any
already-selected neighbor, and rejected candidates backfill remaining
slots in distance order. Overflow pruning keeps the closest links, which
measured no worse here and is far cheaper. The layer-0 degree cap is 4*M:
uniform high-dimensional vectors are a worst case for navigability, and
2*M leaves top-10 recall through a 100-candidate fetch around 0.90 where
4*M reaches 0.99.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from heapq import heappop, heappush
from io import BytesIO

import numpy as np

from . import codec

_MAGIC = b"RMHG"
_VERSION = 1


@dataclass(frozen=True)
class HNSWParams:
    M: int = 16
    ef_construction: int = 200
    ef_search: int = 128
    seed: int = 42  # level-assignment RNG; fixed so rebuilds are identical

    def __post_init__(self) -> None:
        if self.M < 2:
            raise ValueError("M must be >= 2")
        if self.ef_construction < 1 or self.ef_search < 1:
            raise ValueError("ef values must be >= 1")


class HnswGraph:
    def __init__(self, dim: int, params: HNSWParams = HNSWParams()):
        self.dim = dim
        self.params = params
        self.m0 = 4 * params.M
        self._ml = 1.0 / math.log(params.M)
        self._rng = np.random.Generator(np.random.PCG64(params.seed))
        capacity = 1024
        self._vectors = np.zeros((capacity, dim), dtype=np.float32)
        self.count = 0
        self.levels: list[int] = []
        # neighbors[node][layer] -> list of neighbor ids
        self.neighbors: list[list[list[int]]] = []
        self.entry_point = -1
        self.max_level = -1
        # Visited bookkeeping is per-thread scratch state so concurrent
        # searches over a sealed graph never interfere.
        self._scratch = threading.local()

    # -- storage ------------------------------------------------------------

    def _ensure_capacity(self, needed: int) -> None:
        cap = self._vectors.shape[0]
        if needed <= cap:
            return
        new_cap = max(needed, int(cap * 1.5))
        grown = np.zeros((new_cap, self.dim), dtype=np.float32)
        grown[: self.count] = self._vectors[: self.count]
        self._vectors = grown

    def _visit_marks(self) -> tuple[np.ndarray, int]:
        """Per-thread epoch-marked visited array covering current capacity."""
        scratch = self._scratch
        marks = getattr(scratch, "marks", None)
        capacity = self._vectors.shape[0]
        if marks is None or marks.shape[0] < capacity:
            marks = np.zeros(capacity, dtype=np.int64)
            scratch.marks = marks
            scratch.epoch = 0
        scratch.epoch += 1
        return marks, scratch.epoch

    @property
    def vectors(self) -> np.ndarray:
        return self._vectors[: self.count]

    def _dists(self, query: np.ndarray, ids: np.ndarray) -> np.ndarray:
        return -(self._vectors[ids] @ query)

    # -- construction ---------------------------------------------------------

    def _sample_level(self) -> int:
        u = 1.0 - self._rng.random()  # in (0, 1]
        return int(-math.log(u) * self._ml)

    def insert(self, vector: np.ndarray) -> int:
        vector = np.ascontiguousarray(vector, dtype=np.float32)
        if vector.shape != (self.dim,):
            raise ValueError(f"expected vector of dim {self.dim}, got {vector.shape}")
        node = self.count
        self._ensure_capacity(node + 1)
        self._vectors[node] = vector
        self.count += 1
        level = self._sample_level()
        self.levels.append(level)
        self.neighbors.append([[] for _ in range(level + 1)])

        if self.entry_point < 0:
            self.entry_point = node
            self.max_level = level
            return node

        eps = [self.entry_point]
        for layer in range(self.max_level, level, -1):
            found = self._search_layer(vector, eps, layer, 1)
            eps = [found[0][1]]

        for layer in range(min(level, self.max_level), -1, -1):
            candidates = self._search_layer(vector, eps, layer, self.params.ef_construction)
            m_max = self.m0 if layer == 0 else self.params.M
            selected = self._select_diverse(candidates, m_max)
            self.neighbors[node][layer] = list(selected)
            for nb in selected:
                nb_links = self.neighbors[nb][layer]
                nb_links.append(node)
                if len(nb_links) > m_max:
                    self._prune(nb, layer, m_max)
            eps = [n for _, n in candidates]

        if level > self.max_level:
            self.entry_point = node
            self.max_level = level
        return node

    def _select_diverse(self, candidates: list[tuple[float, int]], m: int) -> list[int]:
        """Diversity-aware neighbor choice over (distance, id) candidates.

        candidates must be sorted by ascending distance. A candidate joins
        the result only if it is closer to the query than to every node
        already selected; rejected candidates backfill remaining slots in
        distance order.
        """
        if len(candidates) <= m:
            return [n for _, n in candidates]
        result: list[int] = []
        # Selected vectors in a preallocated block; avoids per-iteration
        # fancy indexing in the inner check.
        selected = np.empty((m, self.dim), dtype=np.float32)
        discarded: list[int] = []
        for dist, node in candidates:
            if len(result) >= m:
                break
            if not result:
                selected[0] = self._vectors[node]
                result.append(node)
                continue
            to_selected = -(selected[: len(result)] @ self._vectors[node])
            if dist < float(to_selected.min()):
                selected[len(result)] = self._vectors[node]
                result.append(node)
            else:
                discarded.append(node)
        for node in discarded:
            if len(result) >= m:
                break
            result.append(node)
        return result

    def _prune(self, node: int, layer: int, m_max: int) -> None:
        links = self.neighbors[node][layer]
        ids = np.array(links, dtype=np.intp)
        dists = self._dists(self._vectors[node], ids)
        order = np.lexsort((ids, dists))[:m_max]
        self.neighbors[node][layer] = [links[i] for i in order.tolist()]

    # -- search ---------------------------------------------------------------

    def _search_layer(
        self, query: np.ndarray, entry_points: list[int], layer: int, ef: int
    ) -> list[tuple[float, int]]:
        """Beam search at one layer; returns (distance, node) ascending."""
        marks, epoch = self._visit_marks()

        eps = np.array(entry_points, dtype=np.intp)
        marks[eps] = epoch
        dists = self._dists(query, eps)

        candidates: list[tuple[float, int]] = []  # min-heap on distance
        best: list[tuple[float, int]] = []  # max-heap on distance via negation
        for d, n in zip(dists.tolist(), entry_points):
            heappush(candidates, (d, n))
            heappush(best, (-d, n))

        while candidates:
            dist, node = heappop(candidates)
            if len(best) >= ef and dist > -best[0][0]:
                break
            links = self.neighbors[node][layer]
            if not links:
                continue
            ids = np.array(links, dtype=np.intp)
            fresh = ids[marks[ids] != epoch]
            if fresh.size == 0:
                continue
            marks[fresh] = epoch
            fresh_dists = self._dists(query, fresh)
            for d, n in zip(fresh_dists.tolist(), fresh.tolist()):
                if len(best) < ef:
                    heappush(candidates, (d, n))
                    heappush(best, (-d, n))
                elif d < -best[0][0]:
                    heappush(candidates, (d, n))
                    heappush(best, (-d, n))
                    heappop(best)
        found = [(-neg, n) for neg, n in best]
        found.sort()
        return found

    def search(self, query: np.ndarray, k: int, ef: int | None = None) -> list[tuple[float, int]]:
        """Top-k (dot-product score, node) pairs, best first.

        ef defaults to the configured ef_search and is clamped to at
        least k.
        """
        if self.count == 0:
            raise RuntimeError("cannot search an empty graph")
        query = np.ascontiguousarray(query, dtype=np.float32)
        if ef is None:
            ef = self.params.ef_search
        ef = max(ef, k)
        eps = [self.entry_point]
        for layer in range(self.max_level, 0, -1):
            found = self._search_layer(query, eps, layer, 1)
            eps = [found[0][1]]
        found = self._search_layer(query, eps, 0, ef)
        top = found[:k]
        return [(-dist, node) for dist, node in top]

    # -- integrity ------------------------------------------------------------

    def validate(self) -> dict:
        """Structural checks: link validity, level bookkeeping, reachability.

        Reachability is BFS from the entry point restricted to each layer's
        node set; a healthy graph reaches every node at every layer.
        """
        bad_refs = 0
        layer_nodes: dict[int, set[int]] = {}
        for node in range(self.count):
            for layer in range(self.levels[node] + 1):
                layer_nodes.setdefault(layer, set()).add(node)
                for nb in self.neighbors[node][layer]:
                    if not (0 <= nb < self.count) or self.levels[nb] < layer:
                        bad_refs += 1
        reachable: dict[int, float] = {}
        for layer, nodes in layer_nodes.items():
            if self.entry_point not in nodes:
                reachable[layer] = 0.0
                continue
            seen = {self.entry_point}
            frontier = [self.entry_point]
            while frontier:
                nxt: list[int] = []
                for node in frontier:
                    for nb in self.neighbors[node][layer]:
                        if nb not in seen:
                            seen.add(nb)
                            nxt.append(nb)
                frontier = nxt
            reachable[layer] = len(seen & nodes) / len(nodes)
        return {
            "node_count": self.count,
            "max_level": self.max_level,
            "entry_point": self.entry_point,
            "entry_level": self.levels[self.entry_point] if self.count else -1,
            "bad_refs": bad_refs,
            "layer_sizes": {layer: len(nodes) for layer, nodes in layer_nodes.items()},
            "reachable_fraction": reachable,
        }

    # -- persistence ----------------------------------------------------------

    def graph_to_bytes(self) -> bytes:
        """Serialize topology only; vector storage is owned by the caller."""
        buf = BytesIO()
        buf.write(_MAGIC)
        codec.write_u32(buf, _VERSION)
        codec.write_u64(buf, self.count)
        codec.write_u32(buf, self.dim)
        codec.write_u32(buf, self.params.M)
        codec.write_u32(buf, self.params.ef_construction)
        codec.write_u32(buf, self.params.ef_search)
        codec.write_u64(buf, self.params.seed)
        codec.write_varint(buf, self.entry_point + 1)
        codec.write_varint(buf, self.max_level + 1)
        for node in range(self.count):
            codec.write_varint(buf, self.levels[node])
            for layer in range(self.levels[node] + 1):
                links = self.neighbors[node][layer]
                codec.write_varint(buf, len(links))
                for nb in links:
                    codec.write_varint(buf, nb)
        return buf.getvalue()

    @classmethod
    def graph_from_bytes(cls, data: bytes, vectors: np.ndarray) -> "HnswGraph":
        buf = BytesIO(data)
        codec.expect_magic(buf, _MAGIC, "hnsw graph")
        version = codec.read_u32(buf)
        if version != _VERSION:
            raise codec.CodecError(f"unsupported hnsw graph version {version}")
        count = codec.read_u64(buf)
        dim = codec.read_u32(buf)
        params = HNSWParams(
            M=codec.read_u32(buf),
            ef_construction=codec.read_u32(buf),
            ef_search=codec.read_u32(buf),
            seed=codec.read_u64(buf),
        )
        graph = cls(dim, params)
        graph.entry_point = codec.read_varint(buf) - 1
        graph.max_level = codec.read_varint(buf) - 1
        if vectors.shape != (count, dim):
            raise codec.CodecError(
                f"vector store shape {vectors.shape} does not match graph ({count}, {dim})"
            )
        graph._ensure_capacity(count)
        graph._vectors[:count] = vectors
        graph.count = count
        for _ in range(count):
            level = codec.read_varint(buf)
            graph.levels.append(level)
            layers = []
            for _ in range(level + 1):
                n_links = codec.read_varint(buf)
                layers.append([codec.read_varint(buf) for _ in range(n_links)])
            graph.neighbors.append(layers)
        return graph
