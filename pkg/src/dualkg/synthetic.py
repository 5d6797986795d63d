"""Small synthetic two-view graphs and a deterministic splitter."""

import numpy as np

from .model.graph import TwoViewKG


def cycles(n_cycles, length, relation="next", prefix="e"):
    """Labeled triples of ``n_cycles`` directed cycles of ``length`` entities."""
    out = []
    for c in range(n_cycles):
        names = [f"{prefix}{c * length + i}" for i in range(length)]
        out += [(names[i], relation, names[(i + 1) % length]) for i in range(length)]
    return out


def binary_tree(depth, relation="subclass_of", prefix="c"):
    """Child-to-parent triples of a complete binary tree; node 0 is the root."""
    n = 2 ** (depth + 1) - 1
    return [(f"{prefix}{i}", relation, f"{prefix}{(i - 1) // 2}") for i in range(1, n)]


def toy_kg():
    """Two 3-cycles of entities, a 7-concept binary tree and 2 bridge entities.

    ``e0`` is typed as leaf ``c3`` and ``e3`` as leaf ``c5``.
    """
    cross = [("e0", "type", "c3"), ("e3", "type", "c5")]
    return TwoViewKG.from_labeled(cycles(2, 3), binary_tree(2), cross)


def ablation_kg(n_cycles=4, length=5, depth=3, seed=0):
    """Cycle-dominated entity view, pure-tree ontology, one bridge per cycle.

    Each cycle's first entity is typed as a distinct random leaf.
    """
    rng = np.random.default_rng(seed)
    n_leaves = 2**depth
    first_leaf = n_leaves - 1
    leaves = rng.choice(n_leaves, size=n_cycles, replace=n_cycles > n_leaves) + first_leaf
    cross = [(f"e{c * length}", "type", f"c{leaf}") for c, leaf in enumerate(leaves)]
    return TwoViewKG.from_labeled(cycles(n_cycles, length), binary_tree(depth), cross)


def split_triples(triples, fractions, seed=0):
    """Shuffle ``triples`` and cut them into consecutive parts by ``fractions``."""
    triples = list(triples)
    fractions = np.asarray(fractions, dtype=np.float64)
    if np.any(fractions < 0) or fractions.sum() <= 0:
        raise ValueError(f"invalid split fractions {fractions.tolist()}")
    fractions = fractions / fractions.sum()
    order = np.random.default_rng(seed).permutation(len(triples))
    bounds = np.round(np.cumsum(fractions) * len(triples)).astype(int)
    parts, start = [], 0
    for end in bounds:
        parts.append([triples[i] for i in order[start:end]])
        start = end
    return parts
