"""refmed: referenced biomedical question answering.

Hybrid lexical+semantic retrieval over an abstract corpus, context
assembly and prompting of a pluggable answer generator, citation
extraction and auditing, and an evaluation harness for retrieval and
answer quality.
"""

from .analysis import STOPWORDS, TokenizerSpec, analyze, count_tokens, sentence_segment, tokenize
from .citations import (
    CitationAudit,
    CitationSpan,
    audit_answer,
    digit_distance,
    extract_citations,
    title_matches_question,
)
from .config import EngineConfig, load_config
from .corpus import Chunk, CorpusStats, Document, chunk_document, ingest_corpus
from .engine import Engine
from .evalharness import (
    Qrels,
    RetrievalConfig,
    answer_eval,
    average_precision_at_k,
    precision_at_k,
    run_ir_eval,
)
from .hnsw import HNSWParams, HnswGraph
from .hybrid import (
    FusedHit,
    HybridWeights,
    SearchHit,
    aggregate_chunks,
    fuse,
    hybrid_search,
    normalize_scores,
)
from .lexical import BM25Params, LexicalIndex, MetadataFilter, build_lexical_index
from .persist import IndexManifest, build_all
from .quantize import QuantizationParams, dequantize, fit_quantization, quantize
from .ragchain import (
    ContextBundle,
    GenerationConfig,
    PromptTemplate,
    ReferencedAnswer,
    TEMPLATES,
    build_context,
    generate_answer,
    render_prompt,
    truncate_incomplete_final_sentence,
)
from .semantic import HashingEmbedder, SemanticIndex

__version__ = "0.1.0"

__all__ = [
    "BM25Params",
    "Chunk",
    "CitationAudit",
    "CitationSpan",
    "ContextBundle",
    "CorpusStats",
    "Document",
    "Engine",
    "EngineConfig",
    "FusedHit",
    "GenerationConfig",
    "HNSWParams",
    "HashingEmbedder",
    "HnswGraph",
    "HybridWeights",
    "IndexManifest",
    "LexicalIndex",
    "MetadataFilter",
    "PromptTemplate",
    "Qrels",
    "QuantizationParams",
    "ReferencedAnswer",
    "RetrievalConfig",
    "STOPWORDS",
    "SearchHit",
    "SemanticIndex",
    "TEMPLATES",
    "TokenizerSpec",
    "aggregate_chunks",
    "analyze",
    "answer_eval",
    "audit_answer",
    "average_precision_at_k",
    "build_all",
    "build_context",
    "build_lexical_index",
    "chunk_document",
    "count_tokens",
    "dequantize",
    "digit_distance",
    "extract_citations",
    "fit_quantization",
    "fuse",
    "generate_answer",
    "hybrid_search",
    "ingest_corpus",
    "load_config",
    "normalize_scores",
    "precision_at_k",
    "quantize",
    "render_prompt",
    "run_ir_eval",
    "sentence_segment",
    "title_matches_question",
    "tokenize",
    "truncate_incomplete_final_sentence",
]
