"""Per-view triple scorers.

Each space turns ``(head, relation, tail)`` rows into a *distance-like*
value, lower meaning more plausible, so every hinge loss has the same form
``max(0, margin + d_pos - d_neg)``. For the ball the value is the negated
MuRP score. ``distance_grad`` returns the value and a dict of gradients
keyed by ``head``, ``tail``, the relation fields, and, for the ball,
``b_head``/``b_tail``.
"""

import numpy as np

from .. import poincare, sphere


class SphereSpace:
    name = "sphere"
    relation_fields = ("angles",)
    uses_bias = False

    def distance(self, head, rel, tail, b_head=None, b_tail=None):
        return sphere.dist_s(sphere.f_rot(head, rel["angles"]), tail)

    def distance_grad(self, head, rel, tail, b_head=None, b_tail=None):
        rotated = sphere.f_rot(head, rel["angles"])
        dist, g_rot, g_tail = sphere.dist_s_grad(rotated, tail)
        g_head, g_angles = sphere.f_rot_vjp(head, rel["angles"], g_rot)
        return dist, {"head": g_head, "tail": g_tail, "angles": g_angles}

    def base_distance(self, x, y):
        return sphere.dist_s(x, y)

    def init_relations(self, n, d, rng):
        return {"angles": rng.uniform(0.0, 2.0 * np.pi, size=(n, d - 1))}


class BallSpace:
    name = "ball"
    relation_fields = ("stretch", "translation")
    uses_bias = True

    def distance(self, head, rel, tail, b_head=0.0, b_tail=0.0):
        return -poincare.murp_score(head, rel["stretch"], rel["translation"], tail, b_head, b_tail)

    def distance_grad(self, head, rel, tail, b_head=0.0, b_tail=0.0):
        score, g = poincare.murp_score_grad(
            head, rel["stretch"], rel["translation"], tail, b_head, b_tail
        )
        return -score, {k: -v for k, v in g.items()}

    def base_distance(self, x, y):
        return poincare.dist_h(x, y)

    def init_relations(self, n, d, rng):
        translation = random_disk_points(n, d, rng, 0.0, 0.1)
        return {"stretch": rng.uniform(-1.0, 1.0, size=(n, d)), "translation": translation}


class FlatSpace:
    name = "flat"
    relation_fields = ("translation",)
    uses_bias = False

    def distance(self, head, rel, tail, b_head=None, b_tail=None):
        return np.linalg.norm(head + rel["translation"] - tail, axis=-1)

    def distance_grad(self, head, rel, tail, b_head=None, b_tail=None):
        diff = head + rel["translation"] - tail
        dist = np.linalg.norm(diff, axis=-1)
        g = diff / np.maximum(dist, 1e-12)[..., None]
        return dist, {"head": g, "translation": g.copy(), "tail": -g}

    def base_distance(self, x, y):
        return np.linalg.norm(np.asarray(x) - np.asarray(y), axis=-1)

    def init_relations(self, n, d, rng):
        return {"translation": rng.normal(scale=0.1 / np.sqrt(d), size=(n, d))}


_SPACES = {"sphere": SphereSpace(), "ball": BallSpace(), "flat": FlatSpace()}


def get_space(name):
    try:
        return _SPACES[name]
    except KeyError:
        raise ValueError(f"unknown space {name!r}; expected one of {sorted(_SPACES)}") from None


def random_ball_points(n, d, rng, low, high):
    """Points with uniform direction and norm uniform in ``[low, high)``."""
    direction = rng.normal(size=(n, d))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    return direction * rng.uniform(low, high, size=(n, 1))


def random_disk_points(n, d, rng, low, high):
    """As :func:`random_ball_points` but on the disk ``x_d = 0``."""
    out = np.zeros((n, d))
    out[:, : d - 1] = random_ball_points(n, d - 1, rng, low, high)
    return out
