"""Cap per-sentence candidate lists at five via edit-distance clustering.

Candidates are clustered by the normalized Levenshtein distance between
their rendered triplet texts (agglomerative, average linkage); the
token-richest member of each cluster survives. Everything here is pure and
deterministic: ties in merge distance break on the lexicographically
smallest candidate-id pair, ties in token count on the smaller order key.
"""

from __future__ import annotations

from dataclasses import dataclass

from .extraction import EventCandidate, render_triplet

DEFAULT_CAP = 5


def levenshtein(a: str, b: str) -> int:
    """Minimal number of single-character edits (insert/delete/substitute)."""
    if a == b:
        return 0
    if len(a) < len(b):
        a, b = b, a
    previous = list(range(len(b) + 1))
    for i, char_a in enumerate(a, start=1):
        current = [i]
        for j, char_b in enumerate(b, start=1):
            cost = 0 if char_a == char_b else 1
            current.append(
                min(previous[j] + 1, current[j - 1] + 1, previous[j - 1] + cost)
            )
        previous = current
    return previous[-1]


def normalized_levenshtein(a: str, b: str) -> float:
    """Length-normalized edit distance in [0, 1]: 2d / (|a| + |b| + d).

    0 iff the strings are equal (both empty included); 1 when exactly one
    is empty. Remains a metric.
    """
    if a == b:
        return 0.0
    d = levenshtein(a, b)
    return 2.0 * d / (len(a) + len(b) + d)


@dataclass(frozen=True)
class Dendrogram:
    """Agglomeration history: nodes 0..n-1 are leaves (candidate ids, in
    input order); merge i creates node n+i from (node_a, node_b) at `height`."""

    leaves: tuple[str, ...]
    merges: tuple[tuple[int, int, float], ...]


def _average_linkage(
    members_a: list[int], members_b: list[int], distances: list[list[float]]
) -> float:
    total = 0.0
    for i in members_a:
        for j in members_b:
            total += distances[i][j]
    return total / (len(members_a) * len(members_b))


def build_dendrogram(ids: list[str], texts: list[str]) -> Dendrogram:
    """Full agglomerative average-linkage clustering over rendered texts."""
    n = len(ids)
    distances = [[0.0] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            d = normalized_levenshtein(texts[i], texts[j])
            distances[i][j] = d
            distances[j][i] = d

    # Active clusters: node id -> (leaf member indices, smallest candidate id).
    active: dict[int, tuple[list[int], str]] = {
        i: ([i], ids[i]) for i in range(n)
    }
    merges: list[tuple[int, int, float]] = []
    next_node = n
    while len(active) > 1:
        best: tuple[float, str, str, int, int] | None = None
        nodes = sorted(active)
        for ai in range(len(nodes)):
            for bi in range(ai + 1, len(nodes)):
                node_a, node_b = nodes[ai], nodes[bi]
                dist = _average_linkage(active[node_a][0], active[node_b][0], distances)
                min_id, max_id = sorted((active[node_a][1], active[node_b][1]))
                key = (dist, min_id, max_id, node_a, node_b)
                if best is None or key < best:
                    best = key
        assert best is not None
        dist, _, _, node_a, node_b = best
        members = active[node_a][0] + active[node_b][0]
        min_id = min(active[node_a][1], active[node_b][1])
        del active[node_a], active[node_b]
        active[next_node] = (members, min_id)
        merges.append((node_a, node_b, dist))
        next_node += 1
    return Dendrogram(leaves=tuple(ids), merges=tuple(merges))


def cut_dendrogram(dendrogram: Dendrogram, k: int) -> list[list[str]]:
    """Clusters after stopping the agglomeration at min(k, n) clusters,
    ordered by first appearance of a member in the input."""
    n = len(dendrogram.leaves)
    if n == 0:
        return []
    k = min(k, n)
    active: dict[int, list[int]] = {i: [i] for i in range(n)}
    for merge_index, (node_a, node_b, _) in enumerate(dendrogram.merges):
        if len(active) <= k:
            break
        active[n + merge_index] = active.pop(node_a) + active.pop(node_b)
    clusters = sorted(active.values(), key=min)
    return [[dendrogram.leaves[i] for i in sorted(members)] for members in clusters]


def cluster_candidates(candidates: list[EventCandidate], k: int = DEFAULT_CAP) -> list[list[str]]:
    """Group one sentence's candidates into min(k, n) clusters of ids."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if not candidates:
        return []
    ids = [c.id for c in candidates]
    texts = [render_triplet(c) for c in candidates]
    return cut_dendrogram(build_dendrogram(ids, texts), k)


def reduce_candidates(
    candidates: list[EventCandidate], k: int = DEFAULT_CAP
) -> list[EventCandidate]:
    """Keep at most k candidates: the token-richest member of each cluster.

    Pass-through when the list already fits. Output is ordered by predicate
    position (order key) and is always a subset of the input.
    """
    if len(candidates) <= k:
        return list(candidates)
    by_id = {c.id: c for c in candidates}
    kept: list[EventCandidate] = []
    for cluster in cluster_candidates(candidates, k):
        members = [by_id[cid] for cid in cluster]
        members.sort(key=lambda c: (-c.token_count(), c.order_key, c.id))
        kept.append(members[0])
    kept.sort(key=lambda c: (c.order_key, c.id))
    return kept
