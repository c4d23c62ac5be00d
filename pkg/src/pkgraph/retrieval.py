"""Read path: anchor search, bounded topological expansion, deterministic
subgraph serialization, and answer generation with citations.

Refusal is a first-class outcome: an empty subgraph, an unmatched question,
or missing evidence all yield the exact refusal string, never a guess.
"""
from __future__ import annotations

import re
import time
from collections import deque
from decimal import Decimal
from typing import Optional

from . import ids
from .community import project_store_graph, leiden
from .errors import GenerationError, UnknownAnchorError
from .model import (
    Answer,
    Edge,
    LeidenConfig,
    Node,
    RetrievalConfig,
    RetrievedSubgraph,
    ScoredNode,
)
from .store import Store


class QueryResult:
    """Answer plus its evidence and phase timings (retrieval vs generation)."""

    def __init__(self, answer: Answer, subgraph: RetrievedSubgraph,
                 retrieval_ms: float, generation_ms: float):
        self.answer = answer
        self.subgraph = subgraph
        self.retrieval_ms = retrieval_ms
        self.generation_ms = generation_ms


class Retriever:
    def __init__(self, store: Store, embedder,
                 config: Optional[RetrievalConfig] = None,
                 leiden_config: Optional[LeidenConfig] = None):
        self.store = store
        self.embedder = embedder
        self.config = config or RetrievalConfig()
        self.leiden_config = leiden_config or LeidenConfig()

    # --- anchor search ---------------------------------------------------

    def anchor_search(self, query: str,
                      cfg: Optional[RetrievalConfig] = None) -> list[ScoredNode]:
        cfg = cfg or self.config
        # embed the informative words only; function-word trigrams would
        # drown the signal in sparse hash space
        reduced = " ".join(_tokens(query)) or query
        vector = self.embedder.embed(reduced)
        return self.store.knn(vector, cfg.k_anchors, cfg.min_similarity)

    # --- topological expansion ----------------------------------------------

    def expand(self, anchors: list[ScoredNode] | list[str],
               cfg: Optional[RetrievalConfig] = None) -> RetrievedSubgraph:
        """Breadth-first in both directions from all anchors at once.

        Every node is admitted at its minimal hop distance <= N; when the
        node budget runs out, lower hop wins, then higher anchor score, then
        smaller id. All edges among admitted nodes are included.
        """
        cfg = cfg or self.config
        scored = [a if isinstance(a, ScoredNode) else ScoredNode(a, 0.0)
                  for a in anchors]
        with self.store.locked():
            for anchor in scored:
                if not self.store.has_node(anchor.id):
                    raise UnknownAnchorError(anchor.id)

            # hop distance per anchor; a node's score is the best score among
            # anchors that reach it at its minimal distance
            hop: dict[str, int] = {}
            best_score: dict[str, float] = {}
            for anchor in scored:
                dist = self._bfs(anchor.id, cfg.n_hops)
                for node_id, d in dist.items():
                    if node_id not in hop or d < hop[node_id]:
                        hop[node_id] = d
                        best_score[node_id] = anchor.score
                    elif d == hop[node_id]:
                        best_score[node_id] = max(best_score[node_id], anchor.score)

            ordered = sorted(hop, key=lambda n: (hop[n], -best_score[n], n))
            admitted = ordered[:cfg.max_nodes]
            truncated = len(ordered) > cfg.max_nodes

            if cfg.include_communities and len(admitted) < cfg.max_nodes:
                level0 = self._level0_assignment()
                anchor_comms = {level0[a.id] for a in scored if a.id in level0}
                admitted_set = set(admitted)
                extras = sorted(n for n, c in level0.items()
                                if c in anchor_comms and n not in admitted_set)
                for node_id in extras:
                    if len(admitted) >= cfg.max_nodes:
                        truncated = True
                        break
                    admitted.append(node_id)
                    hop[node_id] = cfg.n_hops + 1  # appended, not traversed

            admitted_set = set(admitted)
            nodes = [self.store.get_node(n) for n in admitted]
            seen_edges: set[str] = set()
            edges: list[Edge] = []
            for node_id in admitted:
                for edge, _ in self.store.neighbors(node_id):
                    if edge.id in seen_edges:
                        continue
                    if edge.src in admitted_set and edge.dst in admitted_set:
                        seen_edges.add(edge.id)
                        edges.append(edge)
            edges.sort(key=lambda e: e.id)

        subgraph = RetrievedSubgraph(
            anchors=scored, nodes=nodes,
            hops={n: hop[n] for n in admitted},
            edges=edges, truncated=truncated,
        )
        subgraph.context = serialize_subgraph(subgraph)
        return subgraph

    def _bfs(self, start: str, max_hops: int) -> dict[str, int]:
        dist = {start: 0}
        frontier = deque([start])
        while frontier:
            current = frontier.popleft()
            d = dist[current]
            if d >= max_hops:
                continue
            for _, neighbor in self.store.neighbors(current):
                if neighbor.id not in dist:
                    dist[neighbor.id] = d + 1
                    frontier.append(neighbor.id)
        return dist

    def _level0_assignment(self) -> dict[str, int]:
        """Level-0 communities; computed ephemerally when stale so the read
        path never mutates the store."""
        if not self.store.communities_stale:
            partitions = self.store.partitions()
            if partitions:
                return partitions[0].assignment
        graph = project_store_graph(self.store)
        if graph.n == 0:
            return {}
        return leiden(graph, self.leiden_config)[0].assignment

    # --- full query ----------------------------------------------------------

    def answer_query(self, question: str, cfg: Optional[RetrievalConfig] = None,
                     generator=None) -> QueryResult:
        cfg = cfg or self.config
        generator = generator or StructuredGenerator()
        t0 = time.perf_counter()
        with self.store.locked():  # one consistent snapshot for search + expand
            anchors = self.anchor_search(question, cfg)
            if not anchors:
                subgraph = RetrievedSubgraph(anchors=[], nodes=[], hops={},
                                             edges=[])
                retrieval_ms = (time.perf_counter() - t0) * 1000.0
                return QueryResult(Answer.refusal(engine=generator.engine),
                                   subgraph, retrieval_ms, 0.0)
            subgraph = self.expand(anchors, cfg)
        retrieval_ms = (time.perf_counter() - t0) * 1000.0

        t1 = time.perf_counter()
        answer = generator.generate(question, subgraph)
        generation_ms = (time.perf_counter() - t1) * 1000.0
        return QueryResult(answer, subgraph, retrieval_ms, generation_ms)


# --- serialization ------------------------------------------------------------

def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if hasattr(value, "isoformat"):
        return ids.instant_str(value)
    if isinstance(value, float) and value == int(value):
        return str(int(value))
    return str(value)


def _node_line(node: Node) -> str:
    props = ", ".join(f"{k}={_format_value(v)}"
                      for k, v in sorted(node.properties.items()))
    line = f'NODE {node.label} "{node.display_name}" {{{props}}}'
    if node.valid_start is not None:
        end = node.valid_end or node.valid_start
        line += f" [t={ids.instant_str(node.valid_start)}/{ids.instant_str(end)}]"
    return line


def serialize_subgraph(subgraph: RetrievedSubgraph) -> str:
    """Byte-stable text form: NODE lines by (hop, id), then EDGE lines by
    (predicate, src, dst). An empty subgraph is the empty string."""
    if not subgraph.nodes:
        return ""
    by_id = {n.id: n for n in subgraph.nodes}
    lines = [_node_line(n) for n in
             sorted(subgraph.nodes, key=lambda n: (subgraph.hops.get(n.id, 0), n.id))]
    for edge in sorted(subgraph.edges, key=lambda e: (e.predicate, e.src, e.dst)):
        src = by_id[edge.src].display_name
        dst = by_id[edge.dst].display_name
        lines.append(f'EDGE "{src}" -{edge.predicate}-> "{dst}"')
    return "\n".join(lines)


# --- structured generation ------------------------------------------------------

_STOPWORDS = frozenset("""
    a an and are at because but by did do does for from had has have how i in
    is it me my of on or our so that the their them then there this to was we
    were what when where which who will with you your much many arrive arrived
    arriving get got went go going happen happened start started
""".split())

_TEMPORAL_RE = re.compile(r"\bdid\b\s+(?P<x>.+?)\s+\b(?P<cmp>before|after)\b\s+(?P<y>.+)",
                          re.IGNORECASE)
_SUM_RE = re.compile(r"\bhow much\b.*?\b(?:spen[dt]|costs?|paid|pay)\b", re.IGNORECASE)
_LOOKUP_RE = re.compile(r"\b(?P<wh>what|when|where)\s+(?:is|was|are|were)\b\s*(?P<rest>.+)",
                        re.IGNORECASE)


def _tokens(text: str) -> list[str]:
    raw = re.findall(r"[a-z0-9]+(?:'[a-z]+)?", text.lower())
    out = []
    for token in raw:
        token = token.split("'")[0]
        if token and token not in _STOPWORDS:
            out.append(token)
    return out


def _name_tokens(node: Node) -> set[str]:
    return set(re.findall(r"[a-z0-9]+", node.display_name.lower()))


def _match_nodes(tokens: list[str], nodes: list[Node]) -> list[tuple[int, Node]]:
    """Nodes scored by name-token overlap, best first, id-stable."""
    wanted = set(tokens)
    scored = [(len(wanted & _name_tokens(n)), n) for n in nodes]
    scored = [(s, n) for s, n in scored if s > 0]
    scored.sort(key=lambda p: (-p[0], p[1].id))
    return scored


class StructuredGenerator:
    """Deterministic extractive answerer. Every emitted fact is read (or
    summed) from the retrieved subgraph; no match or no evidence means the
    exact refusal string."""

    engine = "structured"

    def generate(self, question: str, subgraph: RetrievedSubgraph) -> Answer:
        if not subgraph.nodes:
            return Answer.refusal(engine=self.engine)
        m = _TEMPORAL_RE.search(question)
        if m:
            return self._temporal(m, subgraph) or Answer.refusal(engine=self.engine)
        if _SUM_RE.search(question):
            return self._sum(subgraph) or Answer.refusal(engine=self.engine)
        m = _LOOKUP_RE.search(question)
        if m:
            return self._lookup(m, subgraph) or Answer.refusal(engine=self.engine)
        return Answer.refusal(engine=self.engine)

    # TEMPORAL-COMPARE: did <X> ... before|after <Y>
    def _temporal(self, m, subgraph: RetrievedSubgraph) -> Optional[Answer]:
        x_tokens = _tokens(m.group("x"))
        y_tokens = _tokens(m.group("y"))
        if not x_tokens or not y_tokens:
            return None
        y_candidates = [n for _, n in _match_nodes(y_tokens, subgraph.nodes)
                        if n.valid_start is not None]
        if not y_candidates:
            return None
        y_node = y_candidates[0]
        x_evidence = self._timestamped_match(x_tokens, subgraph, y_node)
        if x_evidence is None:
            return None
        word = "before" if x_evidence.valid_start < y_node.valid_start else "after"
        text = f"{x_evidence.display_name} was {word} {y_node.display_name}."
        return Answer(text=text, citations=[x_evidence.id, y_node.id],
                      refused=False, engine=self.engine)

    def _timestamped_match(self, tokens: list[str], subgraph: RetrievedSubgraph,
                           y_node: Node) -> Optional[Node]:
        """The X-linked timestamped node: the matched node itself when it has
        an instant (ties resolved toward Y's timeframe), else the best
        timestamped neighbor inside the subgraph."""
        matches = [(s, n) for s, n in _match_nodes(tokens, subgraph.nodes)
                   if n.id != y_node.id]
        if not matches:
            return None
        stamped = [(s, n) for s, n in matches if n.valid_start is not None]
        if stamped:
            return min(stamped, key=lambda p: (
                -p[0], abs((p[1].valid_start - y_node.valid_start).total_seconds()),
                p[1].id))[1]
        by_id = {n.id: n for n in subgraph.nodes}
        top = matches[0][1]
        linked = sorted({e.dst if e.src == top.id else e.src
                         for e in subgraph.edges if top.id in (e.src, e.dst)})
        near = [by_id[i] for i in linked
                if i in by_id and by_id[i].valid_start is not None
                and i != y_node.id]
        if not near:
            return None
        return min(near, key=lambda n: (
            abs((n.valid_start - y_node.valid_start).total_seconds()), n.id))

    # SUM-AGGREGATE: how much ... spent|cost
    def _sum(self, subgraph: RetrievedSubgraph) -> Optional[Answer]:
        if not subgraph.anchors:
            return None
        best = sorted(subgraph.anchors, key=lambda a: (-a.score, a.id))[0]
        reachable = self._reachable_from(best.id, subgraph)
        by_id = {n.id: n for n in subgraph.nodes}
        totals: dict[str, Decimal] = {}
        contributors: list[str] = []
        for node_id in sorted(reachable):
            node = by_id.get(node_id)
            if node is None:
                continue
            value = node.properties.get("amount_value")
            code = node.properties.get("amount_currency")
            if isinstance(value, (int, float)) and isinstance(code, str):
                totals[code] = totals.get(code, Decimal(0)) + Decimal(str(value))
                contributors.append(node_id)
        if not contributors:
            return None
        parts = [f"{_trim_decimal(totals[code])} {code}" for code in sorted(totals)]
        if len(contributors) == 1:
            tail = f" ({by_id[contributors[0]].display_name})."
        else:
            tail = f" ({len(contributors)} items)."
        text = "You have spent " + " and ".join(parts) + tail
        return Answer(text=text, citations=contributors, refused=False,
                      engine=self.engine)

    @staticmethod
    def _reachable_from(start: str, subgraph: RetrievedSubgraph) -> set[str]:
        # the User root is a hub joining every memory; walking through it
        # would sum unrelated spending, so reachability stops there
        adjacency: dict[str, set[str]] = {}
        for edge in subgraph.edges:
            if ids.USER_ROOT_ID in (edge.src, edge.dst):
                continue
            adjacency.setdefault(edge.src, set()).add(edge.dst)
            adjacency.setdefault(edge.dst, set()).add(edge.src)
        seen = {start}
        frontier = deque([start])
        while frontier:
            for neighbor in sorted(adjacency.get(frontier.popleft(), ())):
                if neighbor not in seen:
                    seen.add(neighbor)
                    frontier.append(neighbor)
        return seen

    # LOOKUP: what|when|where is ...
    def _lookup(self, m, subgraph: RetrievedSubgraph) -> Optional[Answer]:
        wh = m.group("wh").lower()
        tokens = _tokens(m.group("rest"))
        if not tokens:
            return None
        matches = _match_nodes(tokens, subgraph.nodes)
        if not matches:
            return None
        token_set = set(tokens)
        if wh == "when":
            for _, node in matches:
                if node.valid_start is None:
                    continue
                text = f"{node.display_name}: {ids.instant_str(node.valid_start)}"
                end = node.valid_end or node.valid_start
                if end != node.valid_start:
                    text += f" to {ids.instant_str(end)}"
                return Answer(text=text + ".", citations=[node.id], refused=False,
                              engine=self.engine)
            return None
        if wh == "where":
            for _, node in matches:
                location = node.properties.get("location")
                if isinstance(location, str):
                    return Answer(
                        text=f"{node.display_name} location: {location}.",
                        citations=[node.id], refused=False, engine=self.engine)
            return None
        # what: first property (by match rank) whose key words all appear in
        # the question; fall back to a label summary of the best match
        for _, node in matches:
            for key in sorted(node.properties):
                words = key.split("#")[0].split("_")
                if all(w in token_set for w in words) and not isinstance(
                        node.properties[key], bool):
                    value = _format_value(node.properties[key])
                    return Answer(
                        text=f"{node.display_name} {key}: {value}.",
                        citations=[node.id], refused=False, engine=self.engine)
        top = matches[0][1]
        return Answer(text=f"{top.display_name} ({top.label}).",
                      citations=[top.id], refused=False, engine=self.engine)


def _trim_decimal(value: Decimal) -> str:
    text = format(value.normalize(), "f")
    return text


class ModelGenerator:
    """External answerer: POST {"context", "question"} -> {"answer"}; the
    whole retrieved subgraph is cited since the model saw all of it."""

    engine = "model"

    def __init__(self, url: str, timeout: float = 120.0, client=None):
        import httpx

        self.url = url
        self._client = client or httpx.Client(timeout=timeout)

    def generate(self, question: str, subgraph: RetrievedSubgraph) -> Answer:
        import httpx

        if not subgraph.nodes:
            return Answer.refusal(engine=self.engine)
        try:
            resp = self._client.post(self.url, json={
                "context": subgraph.context, "question": question})
            resp.raise_for_status()
            text = resp.json()["answer"]
        except (httpx.HTTPError, ValueError, KeyError) as exc:
            raise GenerationError(f"model generator failed: {exc}") from exc
        return Answer(text=text, citations=[n.id for n in subgraph.nodes],
                      refused=False, engine=self.engine)
