"""Immutable two-view knowledge graph."""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from ..errors import SchemaViolation

VIEWS = ("inst", "onto", "cross")


def _vocab(items):
    seen = {}
    for item in items:
        if item not in seen:
            seen[item] = len(seen)
    return seen


@dataclass(frozen=True, eq=False)
class TwoViewKG:
    """Entities, concepts, three disjoint relation families and their triples.

    Triples are stored as ``(n, 3)`` int arrays of ``(head, relation, tail)``
    ids into the matching vocabularies:

    * ``inst_triples``: entity -> entity over ``inst_relations``
    * ``onto_triples``: concept -> concept over ``onto_relations``
    * ``cross_triples``: entity -> concept over ``cross_relations``

    An entity is a bridge iff it heads at least one cross triple.
    """

    entities: tuple
    concepts: tuple
    inst_relations: tuple
    onto_relations: tuple
    cross_relations: tuple
    inst_triples: np.ndarray
    onto_triples: np.ndarray
    cross_triples: np.ndarray
    duplicates: int = field(default=0)

    @classmethod
    def from_labeled(cls, inst=(), onto=(), cross=()):
        """Build a graph from labeled ``(head, relation, tail)`` string triples.

        Duplicate triples are dropped and counted in ``duplicates``.
        Vocabulary ids follow first appearance.
        """
        raw = [[tuple(x) for x in t] for t in (inst, onto, cross)]
        inst, onto, cross = (list(dict.fromkeys(t)) for t in raw)
        duplicates = sum(map(len, raw)) - len(inst) - len(onto) - len(cross)
        entities = _vocab([x for h, _, t in inst for x in (h, t)] + [h for h, _, _ in cross])
        concepts = _vocab([x for h, _, t in onto for x in (h, t)] + [t for _, _, t in cross])
        clash = set(entities) & set(concepts)
        if clash:
            raise SchemaViolation(f"identifiers used as both entity and concept: {sorted(clash)[:5]}")
        rel_i = _vocab(r for _, r, _ in inst)
        rel_o = _vocab(r for _, r, _ in onto)
        rel_x = _vocab(r for _, r, _ in cross)
        for a, b, names in ((rel_i, rel_o, "instance/ontology"), (rel_i, rel_x, "instance/cross"), (rel_o, rel_x, "ontology/cross")):
            shared = set(a) & set(b)
            if shared:
                raise SchemaViolation(f"{names} relation vocabularies overlap: {sorted(shared)[:5]}")

        def encode(triples, hv, rv, tv):
            if not triples:
                return np.empty((0, 3), dtype=np.int64)
            return np.array([(hv[h], rv[r], tv[t]) for h, r, t in triples], dtype=np.int64)

        return cls(
            entities=tuple(entities),
            concepts=tuple(concepts),
            inst_relations=tuple(rel_i),
            onto_relations=tuple(rel_o),
            cross_relations=tuple(rel_x),
            inst_triples=encode(inst, entities, rel_i, entities),
            onto_triples=encode(onto, concepts, rel_o, concepts),
            cross_triples=encode(cross, entities, rel_x, concepts),
            duplicates=duplicates,
        )

    def __eq__(self, other):
        if not isinstance(other, TwoViewKG):
            return NotImplemented
        names = ("entities", "concepts", "inst_relations", "onto_relations", "cross_relations")
        return all(getattr(self, n) == getattr(other, n) for n in names) and all(
            np.array_equal(self.triples(v), other.triples(v)) for v in VIEWS
        )

    __hash__ = None

    @property
    def n_entities(self):
        return len(self.entities)

    @property
    def n_concepts(self):
        return len(self.concepts)

    def triples(self, view):
        return {"inst": self.inst_triples, "onto": self.onto_triples, "cross": self.cross_triples}[view]

    def relations(self, view):
        return {"inst": self.inst_relations, "onto": self.onto_relations, "cross": self.cross_relations}[view]

    @cached_property
    def is_bridge(self):
        flags = np.zeros(self.n_entities, dtype=bool)
        flags[self.cross_triples[:, 0]] = True
        return flags

    @cached_property
    def bridge_ids(self):
        return np.flatnonzero(self.is_bridge)

    @cached_property
    def _known(self):
        return {v: frozenset(map(tuple, self.triples(v).tolist())) for v in VIEWS}

    def known(self, view):
        """Set of ``(h, r, t)`` id tuples present in ``view``."""
        return self._known[view]

    def bridge_inst_mask(self):
        """Boolean mask over ``inst_triples`` touching at least one bridge entity."""
        t = self.inst_triples
        return self.is_bridge[t[:, 0]] | self.is_bridge[t[:, 2]]

    def encode(self, view, labeled):
        """Map labeled triples to ids of this graph; raises KeyError on unknown labels."""
        heads = {"inst": self.entities, "onto": self.concepts, "cross": self.entities}[view]
        tails = {"inst": self.entities, "onto": self.concepts, "cross": self.concepts}[view]
        hv = {x: i for i, x in enumerate(heads)}
        tv = {x: i for i, x in enumerate(tails)}
        rv = {x: i for i, x in enumerate(self.relations(view))}
        rows = [(hv[h], rv[r], tv[t]) for h, r, t in labeled]
        return np.array(rows, dtype=np.int64).reshape(-1, 3)
