"""Influence-driven extraction via approximate Personalized PageRank.

Scores come from the forward-push approximation run on the entity walk
graph (type edges and literals excluded): maintain an estimate p and a
residual r with r(source) = 1; repeatedly pick the vertex with the
highest residual-to-degree ratio (ties by vertex id), convert an alpha
fraction of its residual into estimate, and spread the rest equally over
its neighbors. Vertices with no neighbors return their residual to the
source, which keeps total mass conserved and testable.

At termination every residual sits below epsilon * degree, which bounds
the pointwise gap to the stationary PPR by the same amount on undirected
walk graphs.
"""

from __future__ import annotations

import heapq
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .errors import DuplicateTarget, EmptyTargetSet, KgsliceError
from .graph import BOTH, OUTGOING, KnowledgeGraph, Subgraph
from .tasks import TaskSpec, resolve_targets
from .walks import _derived_rng, get_initial_vertices


@dataclass
class PprParams:
    alpha: float = 0.25
    epsilon: float = 0.0002
    direction: str = BOTH

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise KgsliceError("alpha must be in (0, 1)")
        if self.epsilon <= 0.0:
            raise KgsliceError("epsilon must be > 0")
        if self.direction not in (OUTGOING, BOTH):
            raise KgsliceError(f"bad direction {self.direction!r}")


@dataclass
class InfluenceScores:
    source: int
    scores: dict[int, float]
    residuals: dict[int, float] = field(default_factory=dict)

    def mass(self) -> float:
        return sum(self.scores.values()) + sum(self.residuals.values())


def approximate_ppr(kg: KnowledgeGraph, source: int, params: PprParams) -> InfluenceScores:
    """Forward-push PPR estimate from one source vertex."""
    kg._check_vertex(source)
    adj = kg.walk_adjacency(params.direction)
    alpha, eps = params.alpha, params.epsilon
    p: dict[int, float] = {}
    r: dict[int, float] = {source: 1.0}

    def ready(u: int, ru: float) -> bool:
        deg = len(adj.get(u, ()))
        return ru > 0.0 if deg == 0 else ru >= eps * deg

    # lazy max-heap on residual/degree ratio, ties by vertex id
    heap: list[tuple[float, int]] = []

    def enqueue(u: int) -> None:
        ru = r.get(u, 0.0)
        if ready(u, ru):
            deg = len(adj.get(u, ()))
            ratio = ru / deg if deg else float("inf")
            heapq.heappush(heap, (-ratio, u))

    enqueue(source)
    while heap:
        neg_ratio, u = heapq.heappop(heap)
        ru = r.get(u, 0.0)
        nbrs = adj.get(u, ())
        deg = len(nbrs)
        if not ready(u, ru):
            continue  # stale entry
        current_ratio = ru / deg if deg else float("inf")
        if current_ratio != -neg_ratio:
            continue  # stale entry
        if deg == 0:
            if u == source:
                # the walk can only teleport home: the whole residual converts
                p[u] = p.get(u, 0.0) + ru
                r[u] = 0.0
            else:
                p[u] = p.get(u, 0.0) + alpha * ru
                r[u] = 0.0
                r[source] = r.get(source, 0.0) + (1.0 - alpha) * ru
                enqueue(source)
            continue
        p[u] = p.get(u, 0.0) + alpha * ru
        r[u] = 0.0
        share = (1.0 - alpha) * ru / deg
        for w in nbrs:
            r[w] = r.get(w, 0.0) + share
        for w in set(nbrs):
            enqueue(w)

    residuals = {u: ru for u, ru in r.items() if ru > 0.0}
    scores = {u: pu for u, pu in p.items() if pu > 0.0}
    return InfluenceScores(source=source, scores=scores, residuals=residuals)


def influence_scores(
    kg: KnowledgeGraph, targets, params: PprParams, workers: int = 1
) -> list[InfluenceScores]:
    """One independent PPR run per target, returned in target order."""
    targets = list(targets)
    if not targets:
        raise EmptyTargetSet("no targets for influence scoring")
    if len(set(targets)) != len(targets):
        raise DuplicateTarget("duplicate target vertices")
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda t: approximate_ppr(kg, t, params), targets))
    return [approximate_ppr(kg, t, params) for t in targets]


def select_topk(targets, scores: list[InfluenceScores], k: int) -> list[tuple[int, int]]:
    """Per target, its k highest-scored neighbors (self excluded).

    Ties break toward the smaller vertex id; targets with fewer than k
    scored neighbors contribute fewer pairs.
    """
    if k < 1:
        raise KgsliceError("k must be >= 1")
    pairs: list[tuple[int, int]] = []
    for target, inf in zip(targets, scores):
        candidates = [(u, s) for u, s in inf.scores.items() if u != target]
        candidates.sort(key=lambda us: (-us[1], us[0]))
        pairs.extend((target, u) for u, _ in candidates[:k])
    return pairs


def build_partition(kg: KnowledgeGraph, pairs, bs: int, rng) -> set[int]:
    """Greedy batch of bs targets whose neighbor sets overlap most.

    Starts from a random target, then repeatedly adds the target whose
    neighbor set intersects the accumulated neighbor pool the most (ties
    by vertex id). Returns the chosen targets plus their neighbors.
    """
    if not pairs:
        raise KgsliceError("no (target, neighbor) pairs to partition")
    neighbor_sets: dict[int, set[int]] = {}
    for t, u in pairs:
        neighbor_sets.setdefault(t, set()).add(u)
    remaining = sorted(neighbor_sets)
    start = remaining[rng.randrange(len(remaining))]
    selected = [start]
    remaining.remove(start)
    pool = set(neighbor_sets[start])
    while remaining and len(selected) < bs:
        best = max(remaining, key=lambda t: (len(neighbor_sets[t] & pool), -t))
        remaining.remove(best)
        selected.append(best)
        pool |= neighbor_sets[best]
    return set(selected) | pool


def extract_influence(
    kg: KnowledgeGraph,
    task: TaskSpec,
    bs: int,
    k: int,
    params: PprParams,
    seed: int = 0,
    workers: int = 1,
) -> Subgraph:
    """Influence-based extraction: score, select top-k, partition, induce.

    Vertices of the induced subgraph with no in-subgraph path to a target
    are dropped; a top-k selection can occasionally skip the connecting
    vertex of a distant neighbor, and such strays never influence the
    targets' embeddings.
    """
    targets = resolve_targets(kg, task)
    if not targets:
        raise EmptyTargetSet("task has no target vertices")
    scores = influence_scores(kg, targets, params, workers=workers)
    pairs = select_topk(targets, scores, k)
    if pairs:
        partition = build_partition(kg, pairs, bs, _derived_rng(seed, "partition"))
    else:
        # every target is isolated in the walk graph: plain target batch
        partition = set(get_initial_vertices(bs, targets, seed))
    sg = kg.induced_subgraph(partition, keep_type_triples=True)

    in_sg_targets = set(targets) & sg.vertices
    adj: dict[int, set[int]] = {}
    for s, _, o in sg.non_type_triples:
        adj.setdefault(s, set()).add(o)
        adj.setdefault(o, set()).add(s)
    reachable = set(in_sg_targets)
    frontier = list(in_sg_targets)
    while frontier:
        u = frontier.pop()
        for w in adj.get(u, ()):
            if w not in reachable:
                reachable.add(w)
                frontier.append(w)
    if reachable != sg.vertices:
        sg = kg.induced_subgraph(reachable, keep_type_triples=True)
    sg.provenance = {
        "engine": "ibs",
        "batch_size": bs,
        "top_k": k,
        "alpha": params.alpha,
        "epsilon": params.epsilon,
        "direction": params.direction,
        "seed": seed,
    }
    return sg
