"""Ranking evaluation for triple completion and entity typing."""

import logging
from dataclasses import dataclass

import numpy as np

from .errors import EmptyEvaluation, InvalidQuery
from .model.scoring import g_mean, triple_distance
from .model.spaces import get_space

log = logging.getLogger(__name__)

DEFAULT_KS = (1, 3, 10)


@dataclass(frozen=True)
class RankResult:
    """Rank of one gold answer; ties give the mean rank of the tie group."""

    query: int
    rank: float
    candidates: int


def rank_from_scores(scores, gold, ascending=True):
    """Rank of ``scores[gold]`` among ``scores``.

    Strictly better candidates each count 1; the tie group containing the
    gold answer shares the mean of the positions it spans.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if not 0 <= gold < len(scores):
        raise InvalidQuery(f"gold index {gold} outside pool of {len(scores)}")
    s = scores if ascending else -scores
    target = s[gold]
    better = int(np.sum(s < target))
    ties = int(np.sum(s == target))
    return better + (ties + 1) / 2.0


def _pool_size(kg, view):
    return kg.n_entities if view == "inst" else kg.n_concepts


def _filter_mask(n, gold, head, rel, known):
    keep = np.ones(n, dtype=bool)
    for t in known.get((head, rel), ()):
        if t != gold:
            keep[t] = False
    return keep


def _index_known(triples):
    index = {}
    for h, r, t in triples:
        index.setdefault((int(h), int(r)), set()).add(int(t))
    return index


def rank_query(query, params, kg, view="inst", filtered=True, known=None, query_id=0):
    """Rank the gold tail of ``(head, rel, tail)`` against every candidate tail.

    ``view`` is ``"inst"`` (entities) or ``"onto"`` (concepts). When
    ``filtered``, other tails known to be true for ``(head, rel)``, taken
    from ``known`` (an iterable of id triples, default the graph's own),
    are removed from the pool first.
    """
    if view not in ("inst", "onto"):
        raise ValueError(f"completion view must be 'inst' or 'onto', got {view!r}")
    h, r, t = (int(x) for x in query)
    n = _pool_size(kg, view)
    if not 0 <= t < n:
        raise InvalidQuery(f"gold tail {t} is not a candidate")
    if not 0 <= h < n or not 0 <= r < len(kg.relations(view)):
        raise InvalidQuery(f"unknown head or relation in {query!r}")
    cands = np.arange(n)
    rows = np.column_stack([np.full(n, h), np.full(n, r), cands])
    scores = triple_distance(params, view, rows)
    if filtered:
        index = known if isinstance(known, dict) else _index_known(kg.triples(view) if known is None else known)
        keep = _filter_mask(n, t, h, r, index)
        gold = int(np.sum(keep[:t]))
        scores = scores[keep]
    else:
        gold = t
    return RankResult(query_id, rank_from_scores(scores, gold, ascending=True), len(scores))


def _ranks(results):
    ranks = np.array([r.rank if isinstance(r, RankResult) else r for r in results], dtype=np.float64)
    if ranks.size == 0:
        raise EmptyEvaluation("no ranked queries")
    return ranks


def mrr(results):
    """Mean reciprocal rank."""
    return float(np.mean(1.0 / _ranks(results)))


def hits_at_k(results, k):
    """Fraction of queries whose rank is at most ``k``."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    return float(np.mean(_ranks(results) <= k))


def summarize(results, ks=DEFAULT_KS):
    out = {"mrr": mrr(results)}
    for k in ks:
        out[f"hits@{k}"] = hits_at_k(results, k)
    out["count"] = len(results)
    return out


def evaluate_completion(kg, params, view="inst", test=None, filtered=True, ks=DEFAULT_KS):
    """Tail-prediction metrics over ``test`` id triples (default: the training triples).

    The filter set is the union of the graph's triples and ``test``.
    """
    test = kg.triples(view) if test is None else np.asarray(test, dtype=np.int64).reshape(-1, 3)
    known = _index_known(np.concatenate([kg.triples(view), test]))
    results = [rank_query(q, params, kg, view, filtered, known, i) for i, q in enumerate(test)]
    return summarize(results, ks)


TYPING_MODES = ("relation", "image")


def typing_scores(params, entity, rel=None, mode="relation"):
    """Distance-like score of ``entity`` against every concept (lower is better).

    ``"relation"`` uses the trained cross-view triple score for relation
    ``rel``. ``"image"`` ignores the relation and biases and measures the
    base ontology-space distance from the relation-averaged image of the
    entity.
    """
    if mode == "relation":
        n = len(params.concept_points)
        rows = np.column_stack([np.full(n, entity), np.full(n, rel), np.arange(n)])
        return triple_distance(params, "cross", rows)
    if mode == "image":
        image = g_mean(params, [entity])
        return get_space(params.onto_space).base_distance(image, params.concept_points)
    raise ValueError(f"typing mode must be one of {TYPING_MODES}, got {mode!r}")


def evaluate_typing(kg, params, test=None, filtered=True, ks=DEFAULT_KS, mode="relation"):
    """Entity typing metrics over ``test`` cross-view id triples (default: the graph's own).

    Each query ``(entity, rel, ?concept)`` ranks every concept with
    :func:`typing_scores`. Entities that are not bridges in ``params`` have
    no cross-view image and are skipped; the count is reported as
    ``skipped``. Accuracy equals Hits@1.
    """
    test = kg.cross_triples if test is None else np.asarray(test, dtype=np.int64).reshape(-1, 3)
    types = {}
    for h, r, t in np.concatenate([kg.cross_triples, test]):
        key = int(h) if mode == "image" else (int(h), int(r))
        types.setdefault(key, set()).add(int(t))
    results, skipped, cache = [], 0, {}
    for i, (h, r, t) in enumerate(test):
        h, r, t = int(h), int(r), int(t)
        if not 0 <= t < kg.n_concepts:
            raise InvalidQuery(f"gold concept {t} is not a candidate")
        if not 0 <= r < len(params.cross_weight):
            raise InvalidQuery(f"unknown cross-view relation {r}")
        if not (0 <= h < len(params.is_bridge) and params.is_bridge[h]):
            skipped += 1
            continue
        key = h if mode == "image" else (h, r)
        if key not in cache:
            cache[key] = typing_scores(params, h, r, mode)
        scores = cache[key]
        gold = t
        if filtered:
            keep = np.ones(len(scores), dtype=bool)
            keep[[c for c in types[key] if c != t]] = False
            gold = int(np.sum(keep[:t]))
            scores = scores[keep]
        results.append(RankResult(i, rank_from_scores(scores, gold, ascending=True), len(scores)))
    if skipped:
        log.warning("skipped %d typing queries for entities without a cross-view image", skipped)
    out = summarize(results, ks)
    out["accuracy"] = out["hits@1"] if 1 in ks else hits_at_k(results, 1)
    out["skipped"] = skipped
    return out
