"""Leiden community detection over the undirected projection of the graph.

Phases per the method this follows: local moving, refinement, aggregation.
Quality is modularity with resolution gamma,

    Q = sum_c [ internal(c)/m  -  gamma * (tot_degree(c) / 2m)^2 ]

with self-loops (which appear on aggregate graphs) counting once toward m
and twice toward their node's degree. Everything is deterministic under the
seed: node order comes from one seeded generator, refinement picks uniformly
among quality-non-decreasing merges through the same generator, and reported
community ids are renumbered by smallest member.

The User root is excluded from the projection: it neighbors everything and
would glue the graph into one giant community.
"""
from __future__ import annotations

import math
import random
from collections import defaultdict, deque
from typing import Optional

from .errors import EmptyGraphError
from .model import LeidenConfig, Partition
from .store import USER_ROOT_ID, Store

_EPS = 1e-12


class UndirectedGraph:
    """Weighted undirected graph on integer nodes with optional self-loops."""

    def __init__(self, n: int, names: Optional[list[str]] = None):
        self.n = n
        self.names = names if names is not None else [str(i) for i in range(n)]
        self.adj: list[dict[int, float]] = [dict() for _ in range(n)]

    def add_weight(self, u: int, v: int, w: float = 1.0):
        if w < 0:
            raise ValueError("edge weights must be >= 0")
        self.adj[u][v] = self.adj[u].get(v, 0.0) + w
        if u != v:
            self.adj[v][u] = self.adj[v].get(u, 0.0) + w

    def degrees(self) -> list[float]:
        return [sum(w for v, w in nbrs.items() if v != u) + 2.0 * nbrs.get(u, 0.0)
                for u, nbrs in enumerate(self.adj)]

    def total_weight(self) -> float:
        m = 0.0
        for u, nbrs in enumerate(self.adj):
            for v, w in nbrs.items():
                if v > u:
                    m += w
                elif v == u:
                    m += w
        return m


def modularity(graph: UndirectedGraph, membership: list[int], gamma: float) -> float:
    """Modularity of an assignment, accumulated with fsum for stability."""
    m = graph.total_weight()
    if m == 0:
        return 0.0
    k = graph.degrees()
    internal: dict[int, float] = defaultdict(float)
    tot: dict[int, float] = defaultdict(float)
    for u in range(graph.n):
        tot[membership[u]] += k[u]
        for v, w in graph.adj[u].items():
            if v == u:
                internal[membership[u]] += w
            elif v > u and membership[v] == membership[u]:
                internal[membership[u]] += w
    terms = []
    for c in tot:
        terms.append(internal.get(c, 0.0) / m - gamma * (tot[c] / (2.0 * m)) ** 2)
    return math.fsum(terms)


def _local_move(graph: UndirectedGraph, membership: list[int], gamma: float,
                rng: random.Random, m: float, k: list[float],
                trace: Optional[list[float]] = None) -> bool:
    """Greedy node moves (queue-based); returns True when anything moved."""
    n = graph.n
    comm_tot: dict[int, float] = defaultdict(float)
    for u in range(n):
        comm_tot[membership[u]] += k[u]
    next_comm = max(membership) + 1 if membership else 0

    order = list(range(n))
    rng.shuffle(order)
    queue = deque(order)
    queued = [True] * n
    improved = False
    q_running = trace[-1] if trace else None

    while queue:
        u = queue.popleft()
        queued[u] = False
        a = membership[u]
        w_to: dict[int, float] = defaultdict(float)
        for v, w in graph.adj[u].items():
            if v != u:
                w_to[membership[v]] += w
        k_u = k[u]
        sigma_rest = comm_tot[a] - k_u
        base = w_to.get(a, 0.0)

        best_comm, best_gain = a, 0.0
        for b in sorted(w_to):
            if b == a:
                continue
            gain = (w_to[b] - base) / m \
                - gamma * k_u * (comm_tot[b] - sigma_rest) / (2.0 * m * m)
            if gain > best_gain + _EPS:
                best_gain, best_comm = gain, b
        # detaching into a fresh singleton community can also pay off
        if comm_tot[a] > k_u:
            gain = -base / m + gamma * k_u * sigma_rest / (2.0 * m * m)
            if gain > best_gain + _EPS:
                best_gain, best_comm = gain, next_comm

        if best_comm != a:
            if best_comm == next_comm:
                next_comm += 1
            membership[u] = best_comm
            comm_tot[a] -= k_u
            comm_tot[best_comm] += k_u
            improved = True
            if trace is not None:
                q_running += best_gain
                trace.append(q_running)
            for v in graph.adj[u]:
                if v != u and membership[v] != best_comm and not queued[v]:
                    queue.append(v)
                    queued[v] = True
    return improved


def _refine(graph: UndirectedGraph, membership: list[int], gamma: float,
            rng: random.Random, m: float, k: list[float]) -> list[int]:
    """Split each community into well-connected subcommunities.

    Starts from singletons; a node still alone merges into a neighboring
    subcommunity of its own community, chosen uniformly among the
    quality-non-decreasing options (seeded). Requiring an actual edge keeps
    every refined community connected.
    """
    n = graph.n
    refined = list(range(n))
    ref_tot = k[:]
    ref_size = [1] * n

    order = list(range(n))
    rng.shuffle(order)
    for u in order:
        if ref_size[refined[u]] > 1:
            continue
        w_to: dict[int, float] = defaultdict(float)
        for v, w in graph.adj[u].items():
            if v != u and membership[v] == membership[u]:
                w_to[refined[v]] += w
        k_u = k[u]
        options = []
        for t in sorted(w_to):
            if t == refined[u]:
                continue
            gain = w_to[t] / m - gamma * k_u * ref_tot[t] / (2.0 * m * m)
            if gain >= -_EPS:
                options.append(t)
        if options:
            target = options[rng.randrange(len(options))]
            ref_size[refined[u]] -= 1
            refined[u] = target
            ref_size[target] += 1
            ref_tot[target] += k_u
    return refined


def _aggregate(graph: UndirectedGraph, refined: list[int], membership: list[int],
               groups: list[list[int]]):
    """Collapse refined communities into nodes; returns (graph, init membership,
    groups mapping aggregate nodes to original node indices)."""
    comms = sorted(set(refined), key=lambda c: min(u for u in range(graph.n)
                                                   if refined[u] == c))
    remap = {c: i for i, c in enumerate(comms)}
    agg = UndirectedGraph(len(comms))
    for u in range(graph.n):
        for v, w in graph.adj[u].items():
            if v < u:
                continue
            cu, cv = remap[refined[u]], remap[refined[v]]
            if cu == cv:
                agg.adj[cu][cu] = agg.adj[cu].get(cu, 0.0) + w
            else:
                agg.add_weight(cu, cv, w)
    new_groups: list[list[int]] = [[] for _ in comms]
    init = [0] * len(comms)
    for u in range(graph.n):
        c = remap[refined[u]]
        new_groups[c].extend(groups[u])
        init[c] = membership[u]
    # inherited community labels compacted for the next level
    labels = {c: i for i, c in enumerate(sorted(set(init)))}
    init = [labels[c] for c in init]
    return agg, init, new_groups


def _flatten(membership: list[int], groups: list[list[int]], n0: int) -> list[int]:
    flat = [0] * n0
    for agg_node, comm in enumerate(membership):
        for orig in groups[agg_node]:
            flat[orig] = comm
    return flat


def _split_disconnected(graph: UndirectedGraph, flat: list[int]) -> list[int]:
    """Break any disconnected community into its components (never lowers Q)."""
    members: dict[int, list[int]] = defaultdict(list)
    for u, c in enumerate(flat):
        members[c].append(u)
    out = flat[:]
    next_id = max(flat) + 1
    for c, nodes in sorted(members.items()):
        node_set = set(nodes)
        seen: set[int] = set()
        components = []
        for start in nodes:
            if start in seen:
                continue
            comp = [start]
            seen.add(start)
            stack = [start]
            while stack:
                x = stack.pop()
                for y in graph.adj[x]:
                    if y in node_set and y not in seen:
                        seen.add(y)
                        comp.append(y)
                        stack.append(y)
            components.append(comp)
        for comp in components[1:]:
            for u in comp:
                out[u] = next_id
            next_id += 1
    return out


def _canonical(flat: list[int]) -> list[int]:
    """Renumber communities 0..k-1 by smallest member index."""
    first_seen: dict[int, int] = {}
    for u, c in enumerate(flat):
        first_seen.setdefault(c, u)
    order = sorted(first_seen, key=lambda c: first_seen[c])
    remap = {c: i for i, c in enumerate(order)}
    return [remap[c] for c in flat]


_OUTER_MAX = 20   # full passes per run; tiny graphs converge in 2-4
_RESTARTS = 10    # seeded restarts, best final quality wins


def _leiden_once(graph: UndirectedGraph, gamma: float, max_levels: int,
                 rng: random.Random, m: float,
                 trace: Optional[list[float]]) -> list[list[int]]:
    """One full run: repeat (move, refine, aggregate) passes from the current
    flat partition until a pass makes no move. Returns the level hierarchy of
    the last improving pass (refined partitions, then the final move result)."""
    n0 = graph.n
    flat = list(range(n0))
    best_levels: list[list[int]] = [flat]
    if trace is not None:
        trace.append(modularity(graph, flat, gamma))

    for _ in range(_OUTER_MAX):
        g = graph
        groups = [[u] for u in range(n0)]
        membership = _canonical(flat)
        level_flats: list[list[int]] = []
        improved_any = False
        final_flat = flat
        for _ in range(max(1, max_levels)):
            k = g.degrees()
            improved = _local_move(g, membership, gamma, rng, m, k, trace)
            improved_any |= improved
            final_flat = _flatten(membership, groups, n0)
            if not improved:
                break
            refined = _refine(g, membership, gamma, rng, m, k)
            level_flats.append(_flatten(refined, groups, n0))
            if len(set(refined)) == g.n:
                break  # nothing aggregated; a further pass cannot move
            g, membership, groups = _aggregate(g, refined, membership, groups)
        if not improved_any:
            break
        flat = final_flat
        level_flats.append(final_flat)
        best_levels = level_flats
    return best_levels


_REPAIR_LIMIT = 2048  # polish passes only below this size
_SWAP_LIMIT = 512     # all-pairs swap search only below this size


def _move_gain(graph: UndirectedGraph, k: list[float], m: float, gamma: float,
               membership: list[int], comm_tot: dict[int, float],
               u: int, b: int) -> float:
    """Exact modularity delta of moving u into community b."""
    a = membership[u]
    w_to_a = w_to_b = 0.0
    for x, w in graph.adj[u].items():
        if x == u:
            continue
        if membership[x] == a:
            w_to_a += w
        elif membership[x] == b:
            w_to_b += w
    sigma_rest = comm_tot[a] - k[u]
    return (w_to_b - w_to_a) / m \
        - gamma * k[u] * (comm_tot.get(b, 0.0) - sigma_rest) / (2.0 * m * m)


def _merge_step(graph: UndirectedGraph, flat: list[int], gamma: float, m: float,
                k: list[float], best_q: float, seed: int) -> Optional[list[int]]:
    """Merge one adjacent community pair and re-converge node moves; first
    strict improvement wins."""
    pairs = sorted({tuple(sorted((flat[u], flat[v])))
                    for u in range(graph.n) for v in graph.adj[u]
                    if flat[u] != flat[v]})
    for c1, c2 in pairs:
        membership = _canonical([c1 if c == c2 else c for c in flat])
        _local_move(graph, membership, gamma, random.Random(seed ^ 0x9E3779B9),
                    m, k, None)
        if modularity(graph, membership, gamma) > best_q + _EPS:
            return membership
    return None


def _swap_step(graph: UndirectedGraph, flat: list[int], gamma: float, m: float,
               k: list[float]) -> Optional[list[int]]:
    """Exchange the communities of one node pair (Kernighan-Lin style); these
    escape optima where each single move loses but the pair together wins."""
    n = graph.n
    comm_tot: dict[int, float] = defaultdict(float)
    for u in range(n):
        comm_tot[flat[u]] += k[u]
    for u in range(n):
        for v in range(u + 1, n):
            a, b = flat[u], flat[v]
            if a == b:
                continue
            g1 = _move_gain(graph, k, m, gamma, flat, comm_tot, u, b)
            flat[u] = b
            comm_tot[a] -= k[u]
            comm_tot[b] += k[u]
            g2 = _move_gain(graph, k, m, gamma, flat, comm_tot, v, a)
            if g1 + g2 > _EPS:
                flat[v] = a
                comm_tot[b] -= k[v]
                comm_tot[a] += k[v]
                return flat
            flat[u] = a
            comm_tot[a] += k[u]
            comm_tot[b] -= k[u]
    return None


def _polish(graph: UndirectedGraph, flat: list[int], gamma: float, m: float,
            seed: int) -> Optional[list[int]]:
    """Strictly-improving post passes over the converged partition."""
    k = graph.degrees()
    best_q = modularity(graph, flat, gamma)
    improved_any = False
    for _ in range(256):
        step = _merge_step(graph, flat, gamma, m, k, best_q, seed)
        if step is None and graph.n <= _SWAP_LIMIT:
            step = _swap_step(graph, flat[:], gamma, m, k)
            if step is not None:
                membership = _canonical(step)
                _local_move(graph, membership, gamma, random.Random(seed),
                            m, k, None)
                step = membership
        if step is None:
            break
        q = modularity(graph, step, gamma)
        if q <= best_q + _EPS:
            break
        flat, best_q, improved_any = step, q, True
    return flat if improved_any else None


def leiden(graph: UndirectedGraph, config: LeidenConfig,
           trace: Optional[list[float]] = None) -> list[Partition]:
    """Hierarchical partitions, finest first; the last is the flat answer.

    Level l+1 communities are unions of level-l communities by construction
    (each level reports the refined partition the next level aggregates, and
    the top level is the final move partition). Several seeded restarts run
    and the one with the best final quality is reported, so results stay
    deterministic under (graph, seed).
    """
    if graph.n == 0:
        raise EmptyGraphError("cannot cluster an empty graph")
    gamma = config.resolution
    n0 = graph.n
    m = graph.total_weight()

    if m == 0:
        assignment = {graph.names[u]: u for u in range(n0)}
        return [Partition(level=0, assignment=assignment, quality=0.0)]

    best_levels: Optional[list[list[int]]] = None
    best_q = -math.inf
    best_trace: list[float] = []
    for restart in range(_RESTARTS):
        rng = random.Random(config.seed * 1_000_003 + restart)
        run_trace: list[float] = []
        levels = _leiden_once(graph, gamma, config.max_levels, rng, m, run_trace)
        q = modularity(graph, levels[-1], gamma)
        if q > best_q + _EPS:
            best_q, best_levels, best_trace = q, levels, run_trace
    if graph.n <= _REPAIR_LIMIT:
        repaired = _polish(graph, best_levels[-1], gamma, m, config.seed)
        if repaired is not None:
            best_levels = [repaired]
            best_trace.append(modularity(graph, repaired, gamma))
    if trace is not None:
        trace.extend(best_trace)

    partitions: list[Partition] = []
    previous: Optional[list[int]] = None
    for flat in best_levels:
        flat = _canonical(_split_disconnected(graph, flat))
        if flat == previous:
            continue
        assignment = {graph.names[u]: flat[u] for u in range(n0)}
        partitions.append(Partition(level=len(partitions), assignment=assignment,
                                    quality=modularity(graph, flat, gamma)))
        previous = flat
    return partitions


# --- store integration -------------------------------------------------------

def project_store_graph(store: Store) -> UndirectedGraph:
    """Undirected projection: direction dropped, parallel predicates summed,
    the User root left out."""
    names = [nid for nid in store.node_ids() if nid != USER_ROOT_ID]
    pos = {nid: i for i, nid in enumerate(names)}
    graph = UndirectedGraph(len(names), names)
    snapshot = store.export_graph()
    for edge in snapshot.edges:
        if edge.src == USER_ROOT_ID or edge.dst == USER_ROOT_ID:
            continue
        graph.add_weight(pos[edge.src], pos[edge.dst], 1.0)
    return graph


def refresh_communities(store: Store, config: Optional[LeidenConfig] = None
                        ) -> list[Partition]:
    """Recompute assignments when stale; otherwise return what is persisted."""
    if not store.communities_stale:
        existing = store.partitions()
        if existing or project_store_graph(store).n == 0:
            return existing
    graph = project_store_graph(store)
    if graph.n == 0:
        store.set_partitions([])
        return []
    partitions = leiden(graph, config or LeidenConfig())
    store.set_partitions(partitions)
    return partitions
