"""External HTTP contracts: embedder, extractor, vision, generator, judge.

All exercised through httpx mock transports so the wire shapes stay pinned.
"""
import json

import httpx
import numpy as np
import pytest

from pkgraph.embedder import ExternalEmbedder
from pkgraph.errors import (
    EmptyTextError,
    ExtractionError,
    GenerationError,
    ProviderError,
    VisionClientError,
)
from pkgraph.extraction import HttpExtractor, HttpVisionClient, caption_image
from pkgraph.model import Literal, Mention, RetrievedSubgraph, SourceRecord
from pkgraph.retrieval import ModelGenerator


def _client(handler):
    return httpx.Client(transport=httpx.MockTransport(handler))


def _unit(d):
    v = np.zeros(d)
    v[0] = 1.0
    return v.tolist()


class TestExternalEmbedder:
    def test_happy_path_posts_texts(self):
        seen = {}

        def handler(request):
            seen["body"] = json.loads(request.content)
            return httpx.Response(200, json={"vectors": [_unit(8), _unit(8)]})

        emb = ExternalEmbedder("http://emb/v1", dimension=8,
                               client=_client(handler))
        out = emb.embed_batch(["a", "b"])
        assert seen["body"] == {"texts": ["a", "b"]}
        assert len(out) == 2 and out[0].shape == (8,)

    def test_wrong_dimension_rejected(self):
        def handler(request):
            return httpx.Response(200, json={"vectors": [_unit(4)]})

        emb = ExternalEmbedder("http://emb", dimension=8, client=_client(handler))
        with pytest.raises(ProviderError):
            emb.embed("hello")

    def test_non_unit_vector_rejected(self):
        def handler(request):
            return httpx.Response(200, json={"vectors": [[2.0] + [0.0] * 7]})

        emb = ExternalEmbedder("http://emb", dimension=8, client=_client(handler))
        with pytest.raises(ProviderError):
            emb.embed("hello")

    def test_unreachable_is_provider_error(self):
        def handler(request):
            raise httpx.ConnectError("refused")

        emb = ExternalEmbedder("http://emb", dimension=8, client=_client(handler))
        with pytest.raises(ProviderError):
            emb.embed("hello")

    def test_empty_text_still_local_error(self):
        emb = ExternalEmbedder("http://emb", dimension=8,
                               client=_client(lambda r: httpx.Response(200)))
        with pytest.raises(EmptyTextError):
            emb.embed("   ")


class TestHttpExtractor:
    def test_triples_parsed(self):
        def handler(request):
            body = json.loads(request.content)
            assert body["record"]["modality"] == "note"
            return httpx.Response(200, json={"triples": [
                {"subject": {"surface": "User", "type_hint": "User"},
                 "predicate": "owns",
                 "object": {"surface": "Groceries", "type_hint": "Note"}},
                {"subject": {"surface": "Groceries", "type_hint": "Note"},
                 "predicate": "amount", "object": {"value": "4 EUR"},
                 "confidence": 0.8},
            ]})

        extractor = HttpExtractor("http://x/extract", client=_client(handler))
        record = SourceRecord.make("note", "milk and bread, 4 EUR")
        triples = extractor.extract(record)
        assert isinstance(triples[0].obj, Mention)
        assert triples[1].obj == Literal("4 EUR")
        assert triples[1].confidence == 0.8
        assert all(t.source == record.id for t in triples)

    def test_failure_raises_for_retry(self):
        def handler(request):
            return httpx.Response(500, json={"oops": True})

        extractor = HttpExtractor("http://x", client=_client(handler))
        with pytest.raises(ExtractionError):
            extractor.extract(SourceRecord.make("note", "text"))

    def test_malformed_triple_rejected(self):
        def handler(request):
            return httpx.Response(200, json={"triples": [{"bad": "shape"}]})

        extractor = HttpExtractor("http://x", client=_client(handler))
        with pytest.raises(ExtractionError):
            extractor.extract(SourceRecord.make("note", "text"))


class TestHttpVisionClient:
    def test_caption_round_trip(self):
        def handler(request):
            assert request.content == b"rawbytes"
            return httpx.Response(200, json={"caption": "Train ticket, 95 EUR"})

        client = HttpVisionClient("http://v/caption", client=_client(handler))
        assert caption_image(b"rawbytes", client) == "Train ticket, 95 EUR"

    def test_error_surfaces(self):
        def handler(request):
            return httpx.Response(503)

        client = HttpVisionClient("http://v", client=_client(handler))
        with pytest.raises(VisionClientError):
            caption_image(b"x", client)


class TestModelGenerator:
    def _subgraph(self, engine):
        from conftest import find_node

        event = find_node(engine.store, "Event")
        return engine.retriever.expand([event.id])

    def test_cites_whole_subgraph(self, scenario1_engine):
        def handler(request):
            body = json.loads(request.content)
            assert "NODE" in body["context"]
            assert body["question"] == "what happened?"
            return httpx.Response(200, json={"answer": "A trip happened."})

        generator = ModelGenerator("http://llm/answer", client=_client(handler))
        subgraph = self._subgraph(scenario1_engine)
        answer = generator.generate("what happened?", subgraph)
        assert not answer.refused
        assert answer.engine == "model"
        assert set(answer.citations) == subgraph.node_ids

    def test_failure_is_generation_error(self, scenario1_engine):
        def handler(request):
            raise httpx.ConnectError("down")

        generator = ModelGenerator("http://llm", client=_client(handler))
        with pytest.raises(GenerationError):
            generator.generate("q", self._subgraph(scenario1_engine))

    def test_empty_subgraph_refuses_without_calling(self):
        def handler(request):
            raise AssertionError("must not call the model with no evidence")

        generator = ModelGenerator("http://llm", client=_client(handler))
        answer = generator.generate(
            "q", RetrievedSubgraph(anchors=[], nodes=[], hops={}, edges=[]))
        assert answer.refused
