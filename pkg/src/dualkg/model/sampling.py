"""Negative sampling by head or tail corruption."""

import numpy as np

from ..errors import SamplingExhausted

MAX_TRIES = 100


def candidate_pools(kg, view):
    """Return ``(head_pool, tail_pool)`` id arrays for corrupting ``view`` triples.

    Entity-to-entity sides draw from all entities, concept sides from all
    concepts; cross-view heads draw from bridge entities only, so a
    corrupted cross triple still has a head living on the intersection ring.
    """
    entities = np.arange(kg.n_entities)
    concepts = np.arange(kg.n_concepts)
    if view == "inst":
        return entities, entities
    if view == "onto":
        return concepts, concepts
    if view == "cross":
        return kg.bridge_ids, concepts
    raise ValueError(f"unknown view {view!r}")


def sample_negative(triple, view, kg, rng, max_tries=MAX_TRIES, pools=None):
    """Corrupt ``triple`` into one absent from ``kg``.

    A fair coin picks head or tail; the replacement is uniform over the
    matching pool. Raises SamplingExhausted after ``max_tries`` misses.
    ``pools`` optionally passes precomputed :func:`candidate_pools`.
    """
    h, r, t = (int(x) for x in triple)
    known = kg.known(view)
    heads, tails = candidate_pools(kg, view) if pools is None else pools
    for _ in range(max_tries):
        if rng.random() < 0.5:
            cand = (int(heads[rng.integers(len(heads))]), r, t)
        else:
            cand = (h, r, int(tails[rng.integers(len(tails))]))
        if cand not in known:
            return cand
    raise SamplingExhausted(f"no corruption of {triple!r} found in {max_tries} draws")


def sample_batch(triples, view, kg, rng, ratio=1):
    """Pair every triple with ``ratio`` negatives, skipping exhausted ones.

    Returns ``(pos, neg, skipped)`` with aligned ``(m, 3)`` arrays.
    """
    pos, neg = [], []
    skipped = 0
    pools = candidate_pools(kg, view)
    for row in np.asarray(triples, dtype=np.int64).reshape(-1, 3).tolist():
        for _ in range(ratio):
            try:
                neg.append(sample_negative(row, view, kg, rng, pools=pools))
            except SamplingExhausted:
                skipped += 1
                continue
            pos.append(tuple(row))
    empty = np.empty((0, 3), dtype=np.int64)
    if not pos:
        return empty, empty.copy(), skipped
    return np.array(pos, dtype=np.int64), np.array(neg, dtype=np.int64), skipped
