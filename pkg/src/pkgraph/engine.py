"""Assembly root: builds the store, embedder, extractor, resolver, ingestor,
and retriever from one configuration. The CLI, HTTP service, and benchmark
harness all drive this object."""
from __future__ import annotations

import ipaddress
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .community import refresh_communities
from .embedder import ExternalEmbedder, ReferenceEmbedder
from .errors import BindAddressError
from .extraction import HttpExtractor, ReferenceExtractor
from .ingestion import Ingestor, load_record
from .model import LeidenConfig, Partition, RetrievalConfig, SourceRecord
from .resolution import Resolver
from .retrieval import ModelGenerator, QueryResult, Retriever, StructuredGenerator
from .store import DEFAULT_DIMENSION, Store, open_store

STORE_PATH_ENV = "RUVA_STORE"


@dataclass
class ServiceConfig:
    store_path: str = "memory.pkg"
    bind_host: str = "127.0.0.1"
    port: int = 8642
    dimension: int = DEFAULT_DIMENSION
    retrieval: RetrievalConfig = field(default_factory=RetrievalConfig)
    embedder: str = "reference"        # "reference" | URL
    extractor: str = "reference"       # "reference" | URL
    generator: str = "structured"      # "structured" | URL
    leiden_seed: int = 0
    leiden_gamma: float = 1.0
    allow_non_loopback: bool = False   # sovereignty guard override
    ui_dir: Optional[str] = None       # serve the frontend from here if set

    def leiden_config(self) -> LeidenConfig:
        return LeidenConfig(resolution=self.leiden_gamma, seed=self.leiden_seed)

    def check_bind(self) -> None:
        if self.allow_non_loopback:
            return
        host = self.bind_host
        if host in ("localhost",):
            return
        try:
            if ipaddress.ip_address(host).is_loopback:
                return
        except ValueError:
            pass
        raise BindAddressError(
            f"refusing to bind {host}: pass --unsafe-bind to serve beyond loopback")


class Engine:
    def __init__(self, config: ServiceConfig, create: bool = True,
                 store: Optional[Store] = None):
        self.config = config
        self.store: Store = store if store is not None else open_store(
            config.store_path, create_if_missing=create,
            dimension=config.dimension)
        self.embedder = (ReferenceEmbedder(self.store.dimension)
                         if config.embedder == "reference"
                         else ExternalEmbedder(config.embedder, self.store.dimension))
        self.extractor = (ReferenceExtractor() if config.extractor == "reference"
                          else HttpExtractor(config.extractor))
        self.generator = (StructuredGenerator() if config.generator == "structured"
                          else ModelGenerator(config.generator))
        self.resolver = Resolver(self.store, self.embedder)
        self.ingestor = Ingestor(self.store, self.embedder, self.extractor,
                                 self.resolver)
        self.retriever = Retriever(self.store, self.embedder, config.retrieval,
                                   config.leiden_config())

    def close(self):
        self.store.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    # --- operations shared by CLI and service ------------------------------

    def ingest_directory(self, directory):
        return self.ingestor.ingest_path(directory)

    def ingest_file(self, path):
        record = load_record(path)
        if record is None:
            return None
        return self.ingestor.ingest_record(record)

    def ingest_record_payload(self, payload: dict):
        record = SourceRecord.make(
            payload["modality"], payload.get("text", ""),
            start=payload.get("start"), end=payload.get("end"),
            metadata=payload.get("metadata"))
        return self.ingestor.ingest_record(record)

    def query(self, question: str, *, n_hops: Optional[int] = None,
              k_anchors: Optional[int] = None, max_nodes: Optional[int] = None,
              min_similarity: Optional[float] = None,
              include_communities: Optional[bool] = None) -> QueryResult:
        base = self.config.retrieval
        cfg = RetrievalConfig(
            k_anchors=base.k_anchors if k_anchors is None else k_anchors,
            n_hops=base.n_hops if n_hops is None else n_hops,
            max_nodes=base.max_nodes if max_nodes is None else max_nodes,
            min_similarity=(base.min_similarity if min_similarity is None
                            else min_similarity),
            include_communities=(base.include_communities
                                 if include_communities is None
                                 else include_communities),
        )
        return self.retriever.answer_query(question, cfg, self.generator)

    def forget(self, node_id: str):
        return self.store.delete_cascade(node_id)

    def communities(self, level: Optional[int] = None) -> list[Partition]:
        partitions = refresh_communities(self.store, self.config.leiden_config())
        if level is None:
            return partitions
        return [p for p in partitions if p.level == level]

    def stats(self) -> dict:
        return self.store.stats()


def open_engine(store_path=None, create: bool = True, **overrides) -> Engine:
    config = ServiceConfig(**overrides)
    if store_path is not None:
        config.store_path = str(store_path)
    return Engine(config, create=create)


def resolve_store_path(option: Optional[str]) -> str:
    """CLI precedence: explicit flag, then RUVA_STORE, then ./memory.pkg."""
    if option:
        return option
    return os.environ.get(STORE_PATH_ENV) or str(Path("memory.pkg"))
