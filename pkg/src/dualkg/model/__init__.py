"""Two-view graph, parameters, scoring, losses and negative sampling."""

from .graph import VIEWS, TwoViewKG
from .losses import hinge, loss_bridge, loss_cross, loss_instance, loss_onto, view_loss
from .params import ParamStore, RelationTable
from .sampling import sample_batch, sample_negative
from .scoring import (
    Grads,
    accumulate_grad,
    g_mean,
    g_transform,
    score_cross,
    score_instance,
    score_onto,
    triple_distance,
)
from .spaces import get_space

__all__ = [
    "VIEWS",
    "Grads",
    "ParamStore",
    "RelationTable",
    "TwoViewKG",
    "accumulate_grad",
    "g_mean",
    "g_transform",
    "get_space",
    "hinge",
    "loss_bridge",
    "loss_cross",
    "loss_instance",
    "loss_onto",
    "sample_batch",
    "sample_negative",
    "score_cross",
    "score_instance",
    "score_onto",
    "triple_distance",
    "view_loss",
]
