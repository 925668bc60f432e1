"""Cluster correspondence between two namings.

The intersection graph is bipartite: one node per concept on each side,
edge weight = number of shared member activations. A D-family partition
groups nodes into sets whose induced subgraphs have hop-diameter <= D and
maximizes the total weight of edges internal to the sets. D=1 is ordinary
maximum-weight matching; D=2 additionally lets one concept absorb a
refinement of itself on the other side. The exact solver is a memoized
recursion over families and runs while the graph fits the budget; beyond
it, a local-search heuristic seeded with the D=1 optimum takes over (and
therefore never scores below it).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import NoCommonActivations, UnsupportedD
from .model import Naming

DEFAULT_EXACT_BUDGET = 20  # max node count for the exact D=2 search

LEFT = "left"
RIGHT = "right"


@dataclass(frozen=True)
class IntersectionGraph:
    """Weighted bipartite graph between two namings' concepts.

    Node i < len(left) is left concept ``left[i]``; node len(left)+j is
    right concept ``right[j]``. Edges carry strictly positive integer
    weights and are sorted by (left index, right index).
    """

    left: tuple[str, ...]
    right: tuple[str, ...]
    edges: tuple[tuple[int, int, int], ...]

    @property
    def n_nodes(self) -> int:
        return len(self.left) + len(self.right)

    def node_label(self, node: int) -> tuple[str, str]:
        if node < len(self.left):
            return (LEFT, self.left[node])
        return (RIGHT, self.right[node - len(self.left)])

    def weight_matrix(self) -> np.ndarray:
        w = np.zeros((len(self.left), len(self.right)), dtype=np.int64)
        for li, ri, weight in self.edges:
            w[li, ri] = weight
        return w

    def adjacency(self) -> dict[int, dict[int, int]]:
        """Node -> {neighbor: weight}, symmetric, in global node indices."""
        adj: dict[int, dict[int, int]] = {u: {} for u in range(self.n_nodes)}
        off = len(self.left)
        for li, ri, weight in self.edges:
            adj[li][off + ri] = weight
            adj[off + ri][li] = weight
        return adj

    def total_weight(self) -> int:
        return sum(w for _, _, w in self.edges)


@dataclass(frozen=True)
class DFamilyPartition:
    """A diameter-constrained partition of an intersection graph's nodes.

    Families are sorted node-index tuples covering left + right; ``score``
    is the total weight of edges with both endpoints in one family.
    ``exact`` reports whether the score is a certified global optimum.
    """

    d: int
    families: tuple[tuple[int, ...], ...]
    score: int
    exact: bool


def build_intersection_graph(naming_i: Naming, naming_j: Naming) -> IntersectionGraph:
    """Intersection graph of two cleaned namings of the same class.

    Concepts are ordered by concept_id on both sides so the node indexing
    is deterministic. Pairs with an empty intersection get no edge.
    """
    left_concepts = sorted(naming_i.concepts, key=lambda c: c.concept_id)
    right_concepts = sorted(naming_j.concepts, key=lambda c: c.concept_id)
    edges = []
    for li, lc in enumerate(left_concepts):
        for ri, rc in enumerate(right_concepts):
            shared = len(lc.members & rc.members)
            if shared > 0:
                edges.append((li, ri, shared))
    return IntersectionGraph(
        left=tuple(c.concept_id for c in left_concepts),
        right=tuple(c.concept_id for c in right_concepts),
        edges=tuple(edges),
    )


def _assignment_score(weights: np.ndarray) -> int:
    if weights.size == 0:
        return 0
    rows, cols = linear_sum_assignment(weights, maximize=True)
    return int(weights[rows, cols].sum())


def _partition_from_pairs(
    graph: IntersectionGraph, pairs: list[tuple[int, int, int]], d: int, exact: bool
) -> DFamilyPartition:
    off = len(graph.left)
    used: set[int] = set()
    families = []
    for li, ri, _ in pairs:
        families.append((li, off + ri))
        used.update(families[-1])
    for node in range(graph.n_nodes):
        if node not in used:
            families.append((node,))
    families.sort()
    return DFamilyPartition(
        d=d,
        families=tuple(families),
        score=sum(w for _, _, w in pairs),
        exact=exact,
    )


def max_weight_matching(graph: IntersectionGraph) -> DFamilyPartition:
    """Maximum-weight bipartite matching (the D=1 optimum).

    The score comes from the assignment solver; among equally optimal
    matchings the edge set is canonicalized to the lexicographically least
    one by (left index, right index), so results are stable across solver
    versions.
    """
    if not graph.edges:
        return _partition_from_pairs(graph, [], d=1, exact=True)
    weights = graph.weight_matrix()
    best = _assignment_score(weights)

    chosen: list[tuple[int, int, int]] = []
    forced = 0
    row_alive = list(range(len(graph.left)))
    col_alive = list(range(len(graph.right)))
    for li, ri, w in graph.edges:  # already sorted lexicographically
        if li not in row_alive or ri not in col_alive:
            continue
        rows = [r for r in row_alive if r != li]
        cols = [c for c in col_alive if c != ri]
        rest = weights[np.ix_(rows, cols)] if rows and cols else np.zeros((0, 0))
        if forced + w + _assignment_score(rest) == best:
            chosen.append((li, ri, w))
            forced += w
            row_alive = rows
            col_alive = cols
    return _partition_from_pairs(graph, chosen, d=1, exact=True)


# ---------------------------------------------------------------------------
# Diameter checking and family scoring


def family_within_diameter(
    graph: IntersectionGraph, nodes: tuple[int, ...], d: int
) -> bool:
    """BFS check that the induced subgraph on ``nodes`` has diameter <= d.

    Singletons pass vacuously; disconnected induced subgraphs fail.
    """
    if len(nodes) == 1:
        return True
    node_set = set(nodes)
    adj = graph.adjacency()
    for source in nodes:
        dist = {source: 0}
        frontier = [source]
        while frontier:
            nxt = []
            for u in frontier:
                for v in adj[u]:
                    if v in node_set and v not in dist:
                        dist[v] = dist[u] + 1
                        nxt.append(v)
            frontier = nxt
        if len(dist) < len(nodes) or max(dist.values()) > d:
            return False
    return True


def _internal_weight(adj: dict[int, dict[int, int]], nodes) -> int:
    node_set = set(nodes)
    return sum(w for u in nodes for v, w in adj[u].items() if v in node_set and u < v)


def partition_score(graph: IntersectionGraph, families) -> int:
    adj = graph.adjacency()
    return sum(_internal_weight(adj, f) for f in families)


# ---------------------------------------------------------------------------
# Exact D-family search


def _subsets(items: list[int]):
    for mask in range(1 << len(items)):
        yield [items[i] for i in range(len(items)) if mask >> i & 1]


def _candidate_families(graph, adj, u: int, mask: int, d: int):
    """All diameter-valid families within the ``mask`` node set that contain ``u``.

    For D=1: the singleton and each matched pair. For D=2: exactly the
    induced complete-bipartite blocks through ``u`` (two opposite-side
    nodes must be adjacent to sit at odd distance <= 2; same-side nodes
    then meet through any cross node).
    """
    yield (u,), 0
    if d == 1:
        for v in sorted(adj[u]):
            if mask >> v & 1:
                yield tuple(sorted((u, v))), adj[u][v]
        return
    n_left = len(graph.left)
    u_left = u < n_left
    neighbors = sorted(v for v in adj[u] if mask >> v & 1)
    for opposite in _subsets(neighbors):
        if not opposite:
            continue
        same_pool = sorted(
            x
            for x in range(graph.n_nodes)
            if mask >> x & 1
            and x != u
            and (x < n_left) == u_left
            and all(o in adj[x] for o in opposite)
        )
        for extra in _subsets(same_pool):
            family = tuple(sorted([u, *extra, *opposite]))
            yield family, _internal_weight(adj, family)


def _exact_d_family(graph: IntersectionGraph, d: int) -> DFamilyPartition:
    adj = graph.adjacency()
    memo: dict[int, tuple[int, tuple[tuple[int, ...], ...]]] = {}

    def solve(mask: int) -> tuple[int, tuple[tuple[int, ...], ...]]:
        if mask == 0:
            return 0, ()
        if mask in memo:
            return memo[mask]
        u = (mask & -mask).bit_length() - 1
        best_score = -1
        best_families: tuple[tuple[int, ...], ...] = ()
        for family, weight in sorted(_candidate_families(graph, adj, u, mask, d)):
            fam_mask = 0
            for v in family:
                fam_mask |= 1 << v
            sub_score, sub_families = solve(mask & ~fam_mask)
            if weight + sub_score > best_score:
                best_score = weight + sub_score
                best_families = (family,) + sub_families
        memo[mask] = (best_score, best_families)
        return best_score, best_families

    score, families = solve((1 << graph.n_nodes) - 1)
    return DFamilyPartition(d=d, families=tuple(sorted(families)), score=score, exact=True)


# ---------------------------------------------------------------------------
# Heuristic D-family search (greedy growth on the D=1 seed + local moves)


def _heuristic_d_family(graph: IntersectionGraph, d: int) -> DFamilyPartition:
    adj = graph.adjacency()
    seed = max_weight_matching(graph)
    families: list[list[int]] = [list(f) for f in seed.families]

    def gain_to(node: int, fam: list[int]) -> int:
        return sum(adj[node].get(v, 0) for v in fam)

    def valid(nodes: list[int]) -> bool:
        return len(nodes) <= 1 or family_within_diameter(graph, tuple(nodes), d)

    def canon() -> None:
        for fam in families:
            fam.sort()
        families.sort()

    # phase 1: attach singletons to the adjacent family with maximum gain
    attached = True
    while attached:
        attached = False
        canon()
        best = None  # (gain, node, target index)
        for fi, fam in enumerate(families):
            if len(fam) != 1:
                continue
            node = fam[0]
            for ti, target in enumerate(families):
                if ti == fi:
                    continue
                gain = gain_to(node, target)
                if gain > 0 and valid(sorted(target + [node])):
                    if best is None or gain > best[0]:
                        best = (gain, node, ti)
        if best is not None:
            _, node, ti = best
            families[ti].append(node)
            families.remove([node])
            attached = True

    # phase 2: single-node moves and family merges until no improvement
    improved = True
    while improved:
        improved = False
        canon()
        for fi in range(len(families)):
            src = families[fi]
            for node in list(src):
                rest = [v for v in src if v != node]
                if rest and not valid(rest):
                    continue
                loss = gain_to(node, rest)
                for ti in range(len(families) + 1):
                    if ti == fi:
                        continue
                    target = families[ti] if ti < len(families) else []
                    gain = gain_to(node, target)
                    if gain - loss > 0 and valid(sorted(target + [node])):
                        src.remove(node)
                        if ti < len(families):
                            families[ti].append(node)
                        else:
                            families.append([node])
                        improved = True
                        break
                if improved:
                    break
            if improved:
                break
        if improved:
            families = [f for f in families if f]
            continue
        for fi in range(len(families)):
            for ti in range(fi + 1, len(families)):
                cross = sum(gain_to(v, families[ti]) for v in families[fi])
                if cross > 0 and valid(sorted(families[fi] + families[ti])):
                    families[fi] = sorted(families[fi] + families[ti])
                    del families[ti]
                    improved = True
                    break
            if improved:
                break

    canon()
    fams = tuple(tuple(f) for f in families)
    return DFamilyPartition(
        d=d, families=fams, score=partition_score(graph, fams), exact=False
    )


def d_family_matching(
    graph: IntersectionGraph, d: int, budget: int = DEFAULT_EXACT_BUDGET
) -> DFamilyPartition:
    """Best D-family partition of an intersection graph.

    D=1 is solved exactly (assignment problem). D=2 is solved exactly while
    the node count fits ``budget``; larger graphs fall back to the local
    search heuristic and report ``exact=False``.
    """
    if d not in (1, 2):
        raise UnsupportedD(f"D-family matching supports D in {{1, 2}}, got {d}")
    if d == 1:
        return max_weight_matching(graph)
    if graph.n_nodes <= budget:
        return _exact_d_family(graph, d)
    return _heuristic_d_family(graph, d)


def agreement_score(
    partition: DFamilyPartition, naming_i: Naming, naming_j: Naming
) -> float:
    """Partition score as a fraction of the activations named by both annotators."""
    common = len(naming_i.named_set() & naming_j.named_set())
    if common == 0:
        raise NoCommonActivations(
            f"'{naming_i.annotator_id}' and '{naming_j.annotator_id}' share no "
            "named activations"
        )
    return partition.score / common


def partition_document(graph: IntersectionGraph, partition: DFamilyPartition) -> dict:
    """JSON-ready partition result: families tagged by side, per-edge breakdown."""
    node_family = {}
    for fi, fam in enumerate(partition.families):
        for node in fam:
            node_family[node] = fi
    off = len(graph.left)
    edges = []
    for li, ri, w in graph.edges:
        edges.append(
            {
                "left": graph.left[li],
                "right": graph.right[ri],
                "weight": w,
                "internal": node_family[li] == node_family[off + ri],
            }
        )
    families = []
    for fam in partition.families:
        members = [
            {"side": side, "concept_id": cid}
            for side, cid in (graph.node_label(n) for n in fam)
        ]
        families.append({"members": members})
    return {
        "d": partition.d,
        "score": partition.score,
        "exact": partition.exact,
        "families": families,
        "edges": edges,
    }
