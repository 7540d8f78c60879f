"""Engine configuration: one declarative YAML file, env vars, then CLI flags.

Precedence when the same knob is set in several places: CLI flags win over
environment variables, which win over the file.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from pathlib import Path

import yaml

from .analysis import TokenizerSpec
from .hnsw import HNSWParams
from .hybrid import HybridWeights
from .lexical import BM25Params
from .ragchain import GenerationConfig

ENV_EMBEDDER_URL = "REFMED_EMBEDDER_URL"
ENV_LLM_URL = "REFMED_LLM_URL"
ENV_BIND = "REFMED_BIND"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class EmbedderConfig:
    kind: str = "stub"  # stub | http
    dim: int = 384
    url: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("stub", "http"):
            raise ConfigError(f"embedder kind must be stub or http, got {self.kind!r}")
        if self.kind == "http" and not self.url:
            raise ConfigError("http embedder requires a url")


@dataclass(frozen=True)
class LLMClientConfig:
    kind: str = "stub"  # stub | replay | http
    url: str | None = None
    model: str | None = None
    replay_path: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("stub", "replay", "http"):
            raise ConfigError(f"llm kind must be stub, replay or http, got {self.kind!r}")
        if self.kind == "http" and not self.url:
            raise ConfigError("http llm client requires a url")
        if self.kind == "replay" and not self.replay_path:
            raise ConfigError("replay llm client requires a replay_path")


@dataclass(frozen=True)
class SearchConfig:
    leg_depth: int = 100  # per-leg fetch, also the rescore candidate count
    concurrent_legs: bool = True
    allow_degraded: bool = False
    remove_stopwords: bool = True


@dataclass(frozen=True)
class EngineConfig:
    corpus_path: str = "corpus.jsonl"
    index_dir: str = "index"
    tokenizer: TokenizerSpec = field(default_factory=TokenizerSpec)
    bm25: BM25Params = field(default_factory=BM25Params)
    hnsw: HNSWParams = field(default_factory=HNSWParams)
    clip_quantile: float = 0.99
    weights: HybridWeights = field(default_factory=HybridWeights)
    embedder: EmbedderConfig = field(default_factory=EmbedderConfig)
    llm: LLMClientConfig = field(default_factory=LLMClientConfig)
    generation: GenerationConfig = field(default_factory=GenerationConfig)
    template_kind: str = "zero_shot"
    search: SearchConfig = field(default_factory=SearchConfig)
    bind: str = "127.0.0.1:8000"
    context_size: int = 10

    def require_corpus(self) -> Path:
        path = Path(self.corpus_path)
        if not path.exists():
            raise ConfigError(f"corpus file does not exist: {path}")
        return path

    def to_sanitized_dict(self) -> dict:
        """Config view served over HTTP: endpoint URLs redacted."""
        return {
            "corpus_path": self.corpus_path,
            "index_dir": self.index_dir,
            "tokenizer": {"kind": self.tokenizer.kind, "identifier": self.tokenizer.identifier},
            "bm25": {"k1": self.bm25.k1, "b": self.bm25.b},
            "hnsw": {
                "M": self.hnsw.M,
                "ef_construction": self.hnsw.ef_construction,
                "ef_search": self.hnsw.ef_search,
                "seed": self.hnsw.seed,
            },
            "clip_quantile": self.clip_quantile,
            "weights": {"w_lex": self.weights.w_lex, "w_sem": self.weights.w_sem},
            "embedder": {"kind": self.embedder.kind, "dim": self.embedder.dim},
            "llm": {"kind": self.llm.kind},
            "generation": {"max_new_tokens": self.generation.max_new_tokens},
            "template_kind": self.template_kind,
            "search": {
                "leg_depth": self.search.leg_depth,
                "concurrent_legs": self.search.concurrent_legs,
                "allow_degraded": self.search.allow_degraded,
                "remove_stopwords": self.search.remove_stopwords,
            },
            "context_size": self.context_size,
        }


def _section(raw: dict, key: str) -> dict:
    value = raw.get(key) or {}
    if not isinstance(value, dict):
        raise ConfigError(f"config section {key!r} must be a mapping")
    return value


def config_from_dict(raw: dict) -> EngineConfig:
    try:
        tok = _section(raw, "tokenizer")
        bm25 = _section(raw, "bm25")
        hnsw = _section(raw, "hnsw")
        weights = _section(raw, "weights")
        embedder = _section(raw, "embedder")
        llm = _section(raw, "llm")
        generation = _section(raw, "generation")
        search = _section(raw, "search")
        return EngineConfig(
            corpus_path=raw.get("corpus", "corpus.jsonl"),
            index_dir=raw.get("index_dir", "index"),
            tokenizer=TokenizerSpec(
                kind=tok.get("kind", "whitespace_punct"),
                identifier=tok.get("identifier", ""),
            ),
            bm25=BM25Params(k1=bm25.get("k1", 1.2), b=bm25.get("b", 0.75)),
            hnsw=HNSWParams(
                M=hnsw.get("M", 16),
                ef_construction=hnsw.get("ef_construction", 200),
                ef_search=hnsw.get("ef_search", 128),
                seed=hnsw.get("seed", 42),
            ),
            clip_quantile=raw.get("clip_quantile", 0.99),
            weights=HybridWeights(
                w_lex=weights.get("w_lex", 0.7), w_sem=weights.get("w_sem", 0.3)
            ),
            embedder=EmbedderConfig(
                kind=embedder.get("kind", "stub"),
                dim=embedder.get("dim", 384),
                url=embedder.get("url"),
            ),
            llm=LLMClientConfig(
                kind=llm.get("kind", "stub"),
                url=llm.get("url"),
                model=llm.get("model"),
                replay_path=llm.get("replay_path"),
            ),
            generation=GenerationConfig(
                max_new_tokens=generation.get("max_new_tokens", 1225),
                extra=generation.get("extra", {}),
            ),
            template_kind=raw.get("template_kind", "zero_shot"),
            search=SearchConfig(
                leg_depth=search.get("leg_depth", 100),
                concurrent_legs=search.get("concurrent_legs", True),
                allow_degraded=search.get("allow_degraded", False),
                remove_stopwords=search.get("remove_stopwords", True),
            ),
            bind=raw.get("bind", "127.0.0.1:8000"),
            context_size=raw.get("context_size", 10),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def apply_env_overrides(config: EngineConfig, env: dict | None = None) -> EngineConfig:
    env = os.environ if env is None else env
    if ENV_EMBEDDER_URL in env:
        config = replace(
            config,
            embedder=EmbedderConfig(kind="http", dim=config.embedder.dim, url=env[ENV_EMBEDDER_URL]),
        )
    if ENV_LLM_URL in env:
        config = replace(
            config,
            llm=LLMClientConfig(kind="http", url=env[ENV_LLM_URL], model=config.llm.model),
        )
    if ENV_BIND in env:
        config = replace(config, bind=env[ENV_BIND])
    return config


def load_config(path: Path | str, env: dict | None = None) -> EngineConfig:
    raw = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")
    return apply_env_overrides(config_from_dict(raw), env)
