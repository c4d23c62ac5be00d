"""Entity resolution: decide whether a mention denotes an existing node.

Rules fire in fixed priority — exact key, initial expansion (Person/Contact
only), embedding similarity with structural corroboration — and resolution
is a pure function of (store state, mention); mutations happen in apply().

Canonical survivor rule: when two differently-keyed nodes merge, the one
keyed by the longer surface survives (ties: lexicographically smaller key).
This keeps the final graph independent of ingestion order.
"""
from __future__ import annotations

from typing import Optional

from . import ids
from .embedder import cosine, node_embedding_text
from .errors import LabelMismatchError, SelfMergeError
from .model import Edge, Mention, Node, ResolutionDecision
from .store import USER_ROOT_ID, Store

DEFAULT_TAU = 0.90
INITIAL_EXPANSION_LABELS = frozenset({"Person", "Contact"})


def _is_initial(short: str, full: str) -> bool:
    s = short.rstrip(".")
    return len(s) == 1 and len(full) > 1 and full.startswith(s)


def initials_compatible(key_a: str, key_b: str) -> bool:
    """True when two canonical name keys agree under initial expansion:
    same token count (>= 2), equal final token, and every other position
    equal or an initial of its counterpart. Symmetric by construction."""
    a, b = key_a.split(), key_b.split()
    if len(a) != len(b) or len(a) < 2:
        return False
    if a[-1] != b[-1]:
        return False
    for x, y in zip(a[:-1], b[:-1]):
        if x == y or _is_initial(x, y) or _is_initial(y, x):
            continue
        return False
    return True


def _prefers_mention_key(mention: Mention, candidate: Node) -> bool:
    """Should the merged node be re-keyed to the mention's surface?"""
    if mention.key == candidate.canonical_key:
        return False
    a, b = len(mention.surface), len(candidate.display_name)
    if a != b:
        return a > b
    return mention.key < candidate.canonical_key


class Resolver:
    def __init__(self, store: Store, embedder, tau: float = DEFAULT_TAU,
                 use_community_gate: bool = True):
        self.store = store
        self.embedder = embedder
        self.tau = tau
        self.use_community_gate = use_community_gate

    # --- decision (read-only) ---------------------------------------------

    def resolve(self, mention: Mention, head_id: Optional[str] = None) -> ResolutionDecision:
        label = mention.type_hint
        key = mention.key

        # rule 1: exact canonical key (alias table included)
        hit = self.store.find_by_key(label, key)
        if hit is not None:
            return ResolutionDecision(mention=mention, outcome="merged", node=hit,
                                      rule_fired="exact_key")

        # rule 2: initial expansion, people-like labels only
        if label in INITIAL_EXPANSION_LABELS:
            candidates = [n for n in self.store.nodes_with_label(label)
                          if n.canonical_key != key
                          and initials_compatible(key, n.canonical_key)]
            if candidates:
                winner = self._break_tie(candidates)
                if _prefers_mention_key(mention, winner):
                    return ResolutionDecision(
                        mention=mention, outcome="merged",
                        node=ids.node_id(label, key),
                        rule_fired="initial_expansion",
                        merge_victim=winner.id, create_survivor=True)
                return ResolutionDecision(mention=mention, outcome="merged",
                                          node=winner.id,
                                          rule_fired="initial_expansion")

        # rule 3: embedding similarity plus structural corroboration
        match = self._embedding_match(mention, label, head_id)
        if match is not None:
            winner, score = match
            return ResolutionDecision(mention=mention, outcome="merged",
                                      node=winner.id, rule_fired="embedding_match",
                                      score=score)

        return ResolutionDecision(mention=mention, outcome="created",
                                  node=ids.node_id(label, key), rule_fired="none")

    @staticmethod
    def _break_tie(candidates: list[Node]) -> Node:
        return min(candidates, key=lambda n: (n.created_at, n.id))

    def _embedding_match(self, mention: Mention, label: str,
                         head_id: Optional[str]) -> Optional[tuple[Node, float]]:
        query = self.embedder.embed(mention.surface)
        scored = []
        for node in self.store.nodes_with_label(label):
            if not node.has_vector:
                continue
            vec = self.store.index.get(node.id)
            if vec is None:
                continue
            score = cosine(query, vec)
            if score >= self.tau and self._corroborated(node, head_id):
                scored.append((node, score))
        if not scored:
            return None
        winner = self._break_tie([n for n, _ in scored])
        score = {n.id: s for n, s in scored}[winner.id]
        return winner, score

    def _corroborated(self, candidate: Node, head_id: Optional[str]) -> bool:
        """Similarity alone over-merges short names; require the candidate to
        share a non-root neighbor with the record's head, or (optionally) a
        community with one of the head's neighbors. The community check uses
        the coarsest level: it asks "same world?", not "same neighborhood?"."""
        if head_id is None or not self.store.has_node(head_id):
            return False
        head_nbrs = {n.id for _, n in self.store.neighbors(head_id)} - {USER_ROOT_ID}
        cand_nbrs = {n.id for _, n in self.store.neighbors(candidate.id)} - {USER_ROOT_ID}
        if head_nbrs & cand_nbrs:
            return True
        if self.use_community_gate and not self.store.communities_stale:
            partitions = self.store.partitions()
            if partitions:
                coarsest = partitions[-1].assignment
                cand_comm = coarsest.get(candidate.id)
                if cand_comm is not None and any(
                        coarsest.get(nid) == cand_comm for nid in head_nbrs):
                    return True
        return False

    # --- application (mutating) ---------------------------------------------

    def apply(self, decision: ResolutionDecision, record_id: str) -> str:
        """Materialize a decision: create the node and/or execute the merge."""
        mention = decision.mention
        with self.store.transaction():
            if decision.outcome == "created" or decision.create_survivor:
                node = Node(id=decision.node, label=mention.type_hint,
                            display_name=mention.surface, canonical_key=mention.key,
                            provenance={record_id})
                is_new = not self.store.has_node(decision.node)
                self.store.upsert_node(node)
                if is_new:
                    self._reembed(decision.node)
            else:
                survivor = self.store.get_node(decision.node)
                self.store.upsert_node(Node(
                    id=survivor.id, label=survivor.label,
                    display_name=survivor.display_name,
                    canonical_key=survivor.canonical_key,
                    provenance={record_id}))
                if mention.key != survivor.canonical_key:
                    self.store.set_alias(survivor.label, mention.key, survivor.id)
            if decision.merge_victim is not None:
                self.merge_nodes(decision.node, decision.merge_victim)
        return decision.node

    def merge_nodes(self, survivor_id: str, victim_id: str) -> str:
        """Fold victim into survivor: edges re-pointed (deduped), properties
        merged under the store conflict policy, provenance unioned, longer
        display name kept, victim key aliased to the survivor."""
        if survivor_id == victim_id:
            raise SelfMergeError("cannot merge a node into itself")
        with self.store.transaction():
            survivor = self.store.get_node(survivor_id)
            victim = self.store.get_node(victim_id)
            if survivor.label != victim.label:
                raise LabelMismatchError(
                    f"cannot merge {victim.label} into {survivor.label}")

            incident = [e for e, _ in self.store.neighbors(victim_id, "out")]
            incident += [e for e, _ in self.store.neighbors(victim_id, "in")
                         if e.src != victim_id]  # self-loops only once
            for edge in incident:
                src = survivor_id if edge.src == victim_id else edge.src
                dst = survivor_id if edge.dst == victim_id else edge.dst
                self.store.delete_edge(edge.id)
                # an edge between the pair becomes a survivor self-loop,
                # preserving the (predicate, endpoint) multiset literally
                self.store.upsert_edge(Edge.make(src, edge.predicate, dst,
                                                 properties=dict(edge.properties),
                                                 provenance=set(edge.provenance)))

            display = survivor.display_name
            if len(victim.display_name) > len(display):
                display = victim.display_name
            merged = Node(
                id=survivor.id, label=survivor.label, display_name=display,
                canonical_key=survivor.canonical_key,
                properties=survivor.properties,  # upsert merges victim's below
                valid_start=survivor.valid_start or victim.valid_start,
                valid_end=survivor.valid_end or victim.valid_end,
                provenance=survivor.provenance | victim.provenance,
                has_vector=survivor.has_vector, created_at=survivor.created_at,
            )
            self.store.put_node_raw(merged)
            self.store.upsert_node(Node(id=survivor.id, label=survivor.label,
                                        display_name=display,
                                        canonical_key=survivor.canonical_key,
                                        properties=dict(victim.properties)))

            for (label, key), target in sorted(self.store.aliases().items()):
                if target == victim_id:
                    self.store.set_alias(label, key, survivor_id)
            self.store.set_alias(victim.label, victim.canonical_key, survivor_id)

            for rid, entry in sorted(self.store.records().items()):
                if entry["head"] == victim_id:
                    self.store.record_put_raw(rid, survivor_id, entry["at"])

            self.store.remove_vector(victim_id)
            self.store.delete_cascade(victim_id)
            self._reembed(survivor_id)
        return survivor_id

    def _reembed(self, node_id: str) -> None:
        node = self.store.get_node(node_id)
        self.store.remove_vector(node_id)
        self.store.add_vector(node_id, self.embedder.embed(node_embedding_text(node)))
