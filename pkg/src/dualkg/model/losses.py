"""Margin hinge losses over (positive, negative) triple pairs.

Every loss is the mean over pairs of ``max(0, margin + d_pos - d_neg)``
where ``d`` is the distance-like triple value of
:func:`dualkg.model.scoring.triple_distance` (for the ball this is the
negated MuRP score, so the hinge reads ``margin + phi_neg - phi_pos``).
Passing a :class:`~dualkg.model.scoring.Grads` accumulates the gradient of
the returned mean.
"""

import numpy as np

from .scoring import accumulate_grad, triple_distance


def hinge(d_pos, d_neg, margin):
    return np.maximum(0.0, margin + np.asarray(d_pos) - np.asarray(d_neg))


def _terms(params, view, pos, neg, margin, grads, scale):
    """Sum of hinge terms for one view; gradients are weighted by ``scale``."""
    pos = np.asarray(pos, dtype=np.int64).reshape(-1, 3)
    neg = np.asarray(neg, dtype=np.int64).reshape(-1, 3)
    if len(pos) != len(neg):
        raise ValueError("positive and negative batches differ in length")
    if len(pos) == 0:
        return 0.0
    if grads is None:
        return float(np.sum(hinge(triple_distance(params, view, pos), triple_distance(params, view, neg), margin)))
    n = len(pos)
    terms = []

    def weights(dist):
        terms.append(hinge(dist[:n], dist[n:], margin))
        active = (terms[0] > 0.0) * scale
        return np.concatenate([active, -active])

    # one forward pass over positives and negatives together
    accumulate_grad(params, view, np.concatenate([pos, neg]), weights, grads)
    return float(np.sum(terms[0]))


def view_loss(params, view, pos, neg, margin, grads=None):
    """Mean hinge loss of one relation family."""
    n = len(pos)
    if n == 0:
        return 0.0
    return _terms(params, view, pos, neg, margin, grads, 1.0 / n) / n


def loss_instance(params, pos, neg, margin, grads=None):
    """Mean instance-view hinge over entity triples."""
    return view_loss(params, "inst", pos, neg, margin, grads)


def loss_onto(params, pos, neg, margin, grads=None):
    """Mean ontology-view hinge over concept triples."""
    return view_loss(params, "onto", pos, neg, margin, grads)


def loss_cross(params, pos, neg, margin, grads=None):
    """Mean hinge over entity-to-concept triples."""
    return view_loss(params, "cross", pos, neg, margin, grads)


def loss_bridge(params, inst_pos, inst_neg, cross_pos, cross_neg, margin_inst, margin_cross, grads=None):
    """Mean over a mixed batch of bridge-incident entity pairs and cross pairs.

    Each pair contributes its own view's hinge; the sum is divided by the
    total number of pairs.
    """
    n = len(inst_pos) + len(cross_pos)
    if n == 0:
        return 0.0
    total = _terms(params, "inst", inst_pos, inst_neg, margin_inst, grads, 1.0 / n)
    total += _terms(params, "cross", cross_pos, cross_neg, margin_cross, grads, 1.0 / n)
    return total / n
