"""Triple scoring for the three relation families, with analytic gradients.

The batched entry points take ``(n, 3)`` id arrays and read geometry from a
:class:`ParamStore`; the point-level functions (``score_instance``,
``score_onto``, ``score_cross``, ``g_transform``) mirror them for single
triples and tests.
"""

from collections import defaultdict

import numpy as np

from .. import poincare, sphere
from ..errors import UnknownRelation
from .spaces import get_space


class Grads:
    """Sparse gradient accumulator: parameter name -> (row ids, rows)."""

    def __init__(self):
        self._parts = defaultdict(list)

    def add(self, name, idx, rows):
        self._parts[name].append((np.asarray(idx, dtype=np.int64).ravel(), np.asarray(rows, dtype=np.float64)))

    def __contains__(self, name):
        return name in self._parts

    def names(self):
        return list(self._parts)

    def drop(self, name, mask_fn):
        """Remove rows whose id satisfies ``mask_fn(ids) == True``."""
        kept = []
        for idx, rows in self._parts.get(name, []):
            keep = ~mask_fn(idx)
            kept.append((idx[keep], rows[keep]))
        if name in self._parts:
            self._parts[name] = kept

    def get(self, name):
        """Return ``(unique_ids, summed_rows)`` for ``name``."""
        parts = self._parts.get(name)
        if not parts:
            return np.empty(0, dtype=np.int64), None
        idx = np.concatenate([p[0] for p in parts])
        rows = np.concatenate([p[1].reshape((len(p[0]),) + p[1].shape[1:]) for p in parts])
        uniq, inv = np.unique(idx, return_inverse=True)
        out = np.zeros((len(uniq),) + rows.shape[1:])
        np.add.at(out, inv, rows)
        return uniq, out

    def dense(self, name, shape):
        out = np.zeros(shape)
        ids, rows = self.get(name)
        if rows is not None:
            out[ids] = rows
        return out


# ---------------------------------------------------------------------------
# cross-view transform


def _g_forward(points, weight, bias, radius):
    v = poincare.log0(points)
    z = np.einsum("nij,nj->ni", weight, v)
    m = poincare.exp0(z)
    a = poincare.mobius_add(m, bias)
    t = np.tanh(a)
    flat = t.copy()
    flat[:, -1] = 0.0
    # zero images are nudged along the first axis before projection
    zero = np.linalg.norm(flat, axis=1) == 0.0
    flat[zero, 0] += 1e-12
    out = sphere.proj_ring(flat, radius)
    return out, (points, weight, bias, radius, v, z, m, t, flat)


def _g_vjp(cache, grad_out):
    points, weight, bias, radius, v, z, m, t, flat = cache
    g_flat, g_radius = sphere.proj_ring_vjp(flat, radius, grad_out)
    g_a = g_flat * (1.0 - t * t)
    g_m, g_bias = poincare.mobius_add_vjp(m, bias, g_a)
    g_z = poincare.exp0_vjp(z, g_m)
    g_weight = np.einsum("ni,nj->nij", g_z, v)
    g_v = np.einsum("nij,ni->nj", weight, g_z)
    g_points = poincare.log0_vjp(points, g_v)
    return g_points, g_weight, g_bias, g_radius


def _check_cross_ids(params, rel_ids):
    n = len(params.cross_weight)
    rel_ids = np.asarray(rel_ids, dtype=np.int64)
    if rel_ids.size and (rel_ids.min() < 0 or rel_ids.max() >= n):
        raise UnknownRelation(f"cross-view relation id out of range [0, {n})")
    return rel_ids


def g_transform(e, rel, params):
    """Map bridge point(s) ``e`` into the ontology space through relation ``rel``.

    ``proj_ring(tanh(W_rel (x) e (+) b_rel))`` where ``(x)`` is the Mobius
    matrix-vector product and ``(+)`` Mobius addition; ``tanh`` acts per
    coordinate. The image lies on the intersection ring.
    """
    e = np.asarray(e, dtype=np.float64)
    rows = np.atleast_2d(e)
    rel_ids = _check_cross_ids(params, np.broadcast_to(np.asarray(rel), (len(rows),)))
    out, _ = _g_forward(rows, params.cross_weight[rel_ids], params.cross_bias[rel_ids], params.ring_radius)
    return out[0] if e.ndim == 1 else out


def g_mean(params, entity_ids):
    """Average of the per-relation images over every cross-view relation."""
    entity_ids = np.asarray(entity_ids, dtype=np.int64)
    k = len(params.cross_weight)
    if k == 0:
        raise UnknownRelation("graph has no cross-view relations")
    points = params.entity_points[entity_ids]
    acc = np.zeros_like(points)
    for rel in range(k):
        acc += g_transform(points, np.full(len(points), rel), params)
    return acc / k


# ---------------------------------------------------------------------------
# batched scoring


def _instance_points(params, idx):
    x = params.entity_points[idx]
    if params.inst_space == "sphere" and params.center != 0.0:
        x = x.copy()
        x[:, -1] -= params.center
    return x


def triple_distance(params, view, triples):
    """Distance-like plausibility (lower is better) for each row of ``triples``."""
    return _distance(params, view, np.asarray(triples, dtype=np.int64).reshape(-1, 3), None, None)


def accumulate_grad(params, view, triples, weights, grads):
    """Add ``sum_i weights[i] * grad(distance_i)`` into ``grads``; return distances.

    ``weights`` may be a callable mapping the distances to the weights, so a
    loss can pick its active terms from the same forward pass.
    """
    triples = np.asarray(triples, dtype=np.int64).reshape(-1, 3)
    if not callable(weights):
        weights = np.asarray(weights, dtype=np.float64)
    return _distance(params, view, triples, weights, grads)


def _distance(params, view, triples, weights, grads):
    h, r, t = triples[:, 0], triples[:, 1], triples[:, 2]
    want_grad = grads is not None
    space = get_space(params.space(view))
    table = params.relations(view)
    rel = table.rows(r)
    if view == "inst":
        head = _instance_points(params, h)
        tail = _instance_points(params, t)
        bh = params.entity_bias[h]
        bt = params.entity_bias[t]
        head_name = tail_name = "entity_points"
        bias_name = "entity_bias"
    elif view == "onto":
        head = params.concept_points[h]
        tail = params.concept_points[t]
        bh = params.concept_bias[h]
        bt = params.concept_bias[t]
        head_name = tail_name = "concept_points"
        bias_name = "concept_bias"
    elif view == "cross":
        r = _check_cross_ids(params, r)
        points = params.entity_points[h]
        head, cache = _g_forward(points, params.cross_weight[r], params.cross_bias[r], params.ring_radius)
        tail = params.concept_points[t]
        bh = np.zeros(len(h))
        bt = params.concept_bias[t]
        head_name, tail_name = None, "concept_points"
        bias_name = "concept_bias"
    else:
        raise ValueError(f"unknown view {view!r}")

    if not want_grad:
        return space.distance(head, rel, tail, bh, bt)

    dist, g = space.distance_grad(head, rel, tail, bh, bt)
    if callable(weights):
        weights = np.asarray(weights(dist), dtype=np.float64)
    w = weights[:, None]
    if view == "cross":
        g_points, g_weight, g_bias, g_radius = _g_vjp(cache, g["head"] * w)
        grads.add("entity_points", h, g_points)
        grads.add("cross_weight", r, g_weight)
        grads.add("cross_bias", r, g_bias)
        if params.inst_space == "sphere":
            # ring radius sqrt(w^2 - c^2): d/dc = -c / radius
            grads.add("center", [0], [np.sum(g_radius) * (-params.center / params.ring_radius)])
    else:
        grads.add(head_name, h, g["head"] * w)
        if view == "inst" and params.inst_space == "sphere":
            shift = -np.sum(g["head"][:, -1] * weights) - np.sum(g["tail"][:, -1] * weights)
            grads.add("center", [0], [shift])
    grads.add(tail_name, t, g["tail"] * w)
    for fld in space.relation_fields:
        grads.add(f"{view}.{fld}", r, g[fld] * w)
    if space.uses_bias:
        if view != "cross":
            grads.add(bias_name, h, g["b_head"] * weights)
        grads.add(bias_name, t, g["b_tail"] * weights)
    return dist


# ---------------------------------------------------------------------------
# point-level wrappers


def score_instance(head, angles, tail):
    """Spherical distance between the rotated head and the tail (lower is better)."""
    return sphere.dist_s(sphere.f_rot(head, angles), tail)


def score_onto(head, stretch, translation, tail, b_head=0.0, b_tail=0.0):
    """MuRP plausibility of a concept triple (higher is better)."""
    return poincare.murp_score(head, stretch, translation, tail, b_head, b_tail)


def score_cross(e, rel, c, params, c_bias=0.0):
    """Ontology-space plausibility of ``(entity point e, cross relation rel, concept point c)``.

    The entity is mapped with :func:`g_transform` and scored by the ontology
    space with the relation's own parameters; the head bias is 0 and
    ``c_bias`` is the concept's bias. Sign follows the ontology space's
    native convention (higher is better for the ball).
    """
    image = g_transform(e, rel, params)
    rel_rows = params.cross.rows(np.atleast_1d(np.asarray(rel)))
    if np.ndim(e) == 1:
        rel_rows = {k: v[0] for k, v in rel_rows.items()}
    space = get_space(params.onto_space)
    dist = space.distance(image, rel_rows, np.asarray(c, dtype=np.float64), 0.0, c_bias)
    return -dist if space.name == "ball" else dist
