"""Initialization and the three-step training loop.

Each epoch runs, in ``config.step_order``:

1. entity-to-entity triples with bridge entities frozen,
2. concept-to-concept triples,
3. alternating mini-batches of cross-view triples (bridge points updated in
   the ontology geometry) and bridge-incident entity triples (bridge points
   updated in the instance geometry).

Every update is followed by a projection back onto the parameter's
constraint set, so :meth:`ParamStore.invariant_violations` is empty after
every step.
"""

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from . import poincare, sphere
from .coords import mpc
from .errors import DivergenceDetected
from .model.graph import TwoViewKG
from .model.losses import loss_cross, loss_instance, loss_onto
from .model.params import SPACES, ParamStore, RelationTable
from .model.sampling import sample_batch
from .model.scoring import Grads
from .model.spaces import get_space, random_ball_points, random_disk_points

log = logging.getLogger(__name__)

VARIANTS = ("so-fc", "so-lc")
LOSS_LIMIT = 1e6
CENTER_GAP = 1e-3


@dataclass
class TrainConfig:
    dim: int = 10
    lr: float = 1e-2
    margin_inst: float = 0.5
    margin_onto: float = 0.5
    margin_cross: float | None = None
    epochs: int = 100
    batch_size: int = 128
    neg_ratio: int = 1
    seed: int = 0
    variant: str = "so-fc"
    inst_space: str = "sphere"
    onto_space: str = "ball"
    checkpoint_every: int = 0
    step_order: tuple = (1, 2, 3)
    shell_norm: float | None = None

    def __post_init__(self):
        self.step_order = tuple(int(s) for s in self.step_order)
        if self.dim < 3:
            raise ValueError(f"dim must be >= 3, got {self.dim}")
        if not self.lr >= 0.0:
            raise ValueError(f"learning rate must be >= 0, got {self.lr}")
        for name in ("margin_inst", "margin_onto", "margin_cross"):
            value = getattr(self, name)
            if value is not None and not value > 0.0:
                raise ValueError(f"{name} must be > 0, got {value}")
        if self.epochs < 0 or self.batch_size < 1 or self.neg_ratio < 1:
            raise ValueError("epochs >= 0, batch_size >= 1 and neg_ratio >= 1 are required")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        for space in (self.inst_space, self.onto_space):
            if space not in SPACES:
                raise ValueError(f"space must be one of {SPACES}, got {space!r}")
        if self.variant == "so-lc" and self.inst_space != "sphere":
            raise ValueError("the learnable-center variant needs a sphere instance space")
        if sorted(self.step_order) != [1, 2, 3]:
            raise ValueError(f"step_order must be a permutation of (1, 2, 3), got {self.step_order}")
        if self.shell_norm is not None and not 0.0 < self.shell_norm < 1.0:
            raise ValueError(f"shell_norm must lie in (0, 1), got {self.shell_norm}")
        if self.checkpoint_every < 0:
            raise ValueError("checkpoint_every must be >= 0")

    @property
    def cross_margin(self):
        return self.margin_onto if self.margin_cross is None else self.margin_cross

    def to_dict(self):
        out = asdict(self)
        out["step_order"] = list(self.step_order)
        return out

    @classmethod
    def from_dict(cls, data):
        return cls(**data)


@dataclass
class TrainState:
    """Resumable snapshot taken at an epoch boundary."""

    params: ParamStore
    rng_state: dict
    epoch: int
    losses: list = field(default_factory=list)


@dataclass
class FitResult:
    params: ParamStore
    losses: list
    rng_state: dict


# ---------------------------------------------------------------------------
# initialization


def _random_shell(n, d, w, rng):
    return mpc(rng.uniform(0.0, 2.0 * np.pi, size=(n, d - 1)), w).reshape(n, d)


def init_params(kg: TwoViewKG, config: TrainConfig, rng) -> ParamStore:
    """Random starting point satisfying every invariant.

    Each parameter group draws from its own substream seeded by a fixed
    number of draws from ``rng``, so changing one view's space leaves the
    other view's initialization and the later training draws untouched.
    """
    d = config.dim
    streams = [np.random.default_rng(s) for s in rng.integers(0, 2**63, size=6)]
    w_rng, ent_rng, con_rng, inst_rng, onto_rng, cross_rng = streams
    w = float(w_rng.uniform(0.1, 0.9))
    if config.shell_norm is not None:
        w = config.shell_norm
    bridge = kg.is_bridge.copy()

    if config.inst_space == "sphere":
        entities = _random_shell(kg.n_entities, d, w, ent_rng)
    else:
        entities = random_ball_points(kg.n_entities, d, ent_rng, 0.05, 0.9)
    if config.onto_space == "sphere":
        concepts = _random_shell(kg.n_concepts, d, w, con_rng)
    else:
        concepts = random_disk_points(kg.n_concepts, d, con_rng, 0.05, 0.9)

    inst = RelationTable(**get_space(config.inst_space).init_relations(len(kg.inst_relations), d, inst_rng))
    onto_space = get_space(config.onto_space)
    onto = RelationTable(**onto_space.init_relations(len(kg.onto_relations), d, onto_rng))
    cross = RelationTable(**onto_space.init_relations(len(kg.cross_relations), d, cross_rng))
    for table, space in ((inst, config.inst_space), (onto, config.onto_space), (cross, config.onto_space)):
        if space == "ball":
            table.translation[:, -1] = 0.0

    n_cross = len(kg.cross_relations)
    params = ParamStore(
        entity_points=entities,
        entity_bias=np.zeros(kg.n_entities),
        is_bridge=bridge,
        concept_points=concepts,
        concept_bias=np.zeros(kg.n_concepts),
        inst=inst,
        onto=onto,
        cross=cross,
        cross_weight=np.tile(np.eye(d), (n_cross, 1, 1)),
        cross_bias=np.zeros((n_cross, d)),
        shell_norm=float(w),
        center=0.0,
        inst_space=config.inst_space,
        onto_space=config.onto_space,
    )
    _settle_bridges(params, np.flatnonzero(bridge))
    return params


# ---------------------------------------------------------------------------
# constraint maintenance


def _clip(x):
    return poincare.clip_ball(x)


def _settle_bridges(params, ids):
    """Put bridge rows ``ids`` back on the ring (sphere) or the disk (other spaces)."""
    if len(ids) == 0:
        return
    x = params.entity_points[ids]
    if params.inst_space == "sphere":
        x = sphere.proj_ring(x, params.ring_radius)
    else:
        x = x.copy()
        x[:, -1] = 0.0
        x = _clip(x)
        x[:, -1] = 0.0
    params.entity_points[ids] = x


def _settle_entities(params, ids):
    """Put non-bridge rows ``ids`` back on their shell or inside the ball."""
    if len(ids) == 0:
        return
    x = params.entity_points[ids]
    if params.inst_space == "sphere":
        rel = x.copy()
        rel[:, -1] -= params.center
        rel = sphere.proj_s(rel, params.shell_norm)
        rel[:, -1] += params.center
        x = rel
    else:
        x = _clip(x)
    params.entity_points[ids] = x


def enforce_invariants(params):
    """Project every constrained parameter onto its feasible set."""
    bridge = params.is_bridge
    _settle_entities(params, np.flatnonzero(~bridge))
    _settle_bridges(params, np.flatnonzero(bridge))
    if params.onto_space == "sphere":
        params.concept_points = sphere.proj_s(params.concept_points, params.shell_norm)
    elif params.onto_space == "ball":
        params.concept_points = _pin(_clip(params.concept_points))
    else:
        params.concept_points = _clip(params.concept_points)
    for view in ("inst", "onto", "cross"):
        table = params.relations(view)
        if table.angles is not None:
            table.angles = sphere.wrap_angles(table.angles)
        if table.translation is not None and params.space(view) == "ball":
            table.translation = _pin(_clip(table.translation))
    if len(params.cross_bias):
        params.cross_bias = _pin(_clip(params.cross_bias))


def _pin(x):
    x = np.array(x, dtype=np.float64)
    x[..., -1] = 0.0
    return x


# ---------------------------------------------------------------------------
# update rules


def _point_step(space, x, g, lr, w=None, center=0.0, pinned=False):
    if space == "sphere":
        rel = x.copy()
        rel[:, -1] -= center
        rel = sphere.sphere_step(rel, g, lr, w)
        rel[:, -1] += center
        return rel
    if space == "ball":
        return poincare.ball_step(x, g, lr, pinned=pinned)
    out = _clip(x - lr * g)
    if pinned:
        out[:, -1] = 0.0
    return out


def _update_entities(params, ids, g, lr, bridge_rule):
    bridge = params.is_bridge[ids]
    free, fixed = ids[~bridge], ids[bridge]
    if len(free):
        params.entity_points[free] = _point_step(
            params.inst_space, params.entity_points[free], g[~bridge], lr, params.shell_norm, params.center
        )
    if len(fixed) == 0 or bridge_rule == "freeze":
        return
    x = params.entity_points[fixed]
    if bridge_rule == "inst":
        pinned = params.inst_space != "sphere"
        if params.inst_space == "sphere":
            x = _point_step("sphere", x, g[bridge], lr, params.shell_norm, params.center)
        else:
            x = _point_step(params.inst_space, x, g[bridge], lr, pinned=pinned)
    else:
        x = poincare.ball_step(x, g[bridge], lr)
    params.entity_points[fixed] = x
    _settle_bridges(params, fixed)


def _update_table(params, view, grads, lr):
    table = params.relations(view)
    space = params.space(view)
    for fld, arr in table.items():
        ids, g = grads.get(f"{view}.{fld}")
        if g is None:
            continue
        if fld == "angles":
            arr[ids] = sphere.angle_step(arr[ids], g, lr)
        elif fld == "stretch":
            arr[ids] = poincare.stretch_step(arr[ids], g, lr)
        elif space == "ball":
            arr[ids] = poincare.ball_step(arr[ids], g, lr, pinned=True)
        else:
            arr[ids] = arr[ids] - lr * g


def apply_grads(params, grads, lr, bridge_rule="freeze"):
    """Apply one optimizer step for every parameter present in ``grads``.

    ``bridge_rule`` selects how bridge-entity rows move: ``"freeze"`` keeps
    them fixed, ``"inst"`` steps in the instance geometry and ``"onto"`` in
    the ball, both followed by a return to the ring.
    """
    ids, g = grads.get("entity_points")
    if g is not None:
        _update_entities(params, ids, g, lr, bridge_rule)
    ids, g = grads.get("entity_bias")
    if g is not None:
        params.entity_bias[ids] = poincare.bias_step(params.entity_bias[ids], g, lr)
    ids, g = grads.get("concept_points")
    if g is not None:
        x = params.concept_points[ids]
        space = params.onto_space
        params.concept_points[ids] = _point_step(space, x, g, lr, params.shell_norm, pinned=space == "ball")
    ids, g = grads.get("concept_bias")
    if g is not None:
        params.concept_bias[ids] = poincare.bias_step(params.concept_bias[ids], g, lr)
    for view in ("inst", "onto", "cross"):
        _update_table(params, view, grads, lr)
    ids, g = grads.get("cross_weight")
    if g is not None:
        params.cross_weight[ids] -= lr * g
    ids, g = grads.get("cross_bias")
    if g is not None:
        params.cross_bias[ids] = poincare.ball_step(params.cross_bias[ids], g, lr, pinned=True)


def center_step(params, grad_center, lr):
    """Plain gradient step on the sphere center offset, then re-projection.

    The offset is clamped to ``|center| <= shell_norm - 1e-3``; every sphere
    point is then returned to the shifted shell and every bridge point to
    the ring of radius ``sqrt(shell_norm^2 - center^2)``.
    """
    limit = params.shell_norm - CENTER_GAP
    params.center = float(np.clip(params.center - lr * grad_center, -limit, limit))
    _settle_entities(params, np.flatnonzero(~params.is_bridge))
    _settle_bridges(params, np.flatnonzero(params.is_bridge))
    return params.center


# ---------------------------------------------------------------------------
# epoch loop


def _batches(triples, batch_size, rng):
    order = rng.permutation(len(triples))
    return [triples[order[i : i + batch_size]] for i in range(0, len(order), batch_size)]


def _check(loss, step, epoch):
    if not np.isfinite(loss) or loss > LOSS_LIMIT:
        raise DivergenceDetected(f"loss {loss!r} in step {step} of epoch {epoch}")


def _run_batch(params, kg, view, batch, config, rng, bridge_rule, epoch, step):
    pos, neg, _ = sample_batch(batch, view, kg, rng, config.neg_ratio)
    if len(pos) == 0:
        return None
    grads = Grads()
    if view == "inst":
        loss = loss_instance(params, pos, neg, config.margin_inst, grads)
    elif view == "onto":
        loss = loss_onto(params, pos, neg, config.margin_onto, grads)
    else:
        loss = loss_cross(params, pos, neg, config.cross_margin, grads)
    _check(loss, step, epoch)
    apply_grads(params, grads, config.lr, bridge_rule)
    if config.variant == "so-lc" and view != "onto":
        _, g = grads.get("center")
        if g is not None:
            center_step(params, float(g[0]), config.lr)
    return loss


def _step_losses(losses):
    return float(np.mean(losses)) if losses else 0.0


def train_epoch(kg, params, config, rng, epoch=0):
    """Run one epoch in place; returns ``(params, {"inst", "onto", "bridge"} losses)``."""
    bridge_mask = kg.bridge_inst_mask()
    record = {}
    for step in config.step_order:
        losses = []
        if step == 1:
            for batch in _batches(kg.inst_triples, config.batch_size, rng):
                loss = _run_batch(params, kg, "inst", batch, config, rng, "freeze", epoch, 1)
                if loss is not None:
                    losses.append(loss)
            record["inst"] = _step_losses(losses)
        elif step == 2:
            for batch in _batches(kg.onto_triples, config.batch_size, rng):
                loss = _run_batch(params, kg, "onto", batch, config, rng, "freeze", epoch, 2)
                if loss is not None:
                    losses.append(loss)
            record["onto"] = _step_losses(losses)
        else:
            cross = _batches(kg.cross_triples, config.batch_size, rng)
            inst = _batches(kg.inst_triples[bridge_mask], config.batch_size, rng)
            for i in range(max(len(cross), len(inst))):
                if i < len(cross):
                    loss = _run_batch(params, kg, "cross", cross[i], config, rng, "onto", epoch, 3)
                    if loss is not None:
                        losses.append(loss)
                if i < len(inst):
                    loss = _run_batch(params, kg, "inst", inst[i], config, rng, "inst", epoch, 3)
                    if loss is not None:
                        losses.append(loss)
            record["bridge"] = _step_losses(losses)
        enforce_invariants(params)
    return params, record


def fit(kg, config, resume=None, checkpoint_callback=None, epoch_callback=None):
    """Train for ``config.epochs`` epochs.

    ``resume`` is a :class:`TrainState` to continue from. ``checkpoint_callback``
    receives a :class:`TrainState` every ``config.checkpoint_every`` epochs;
    ``epoch_callback(epoch, params, losses)`` runs after every epoch.
    """
    rng = np.random.default_rng(config.seed)
    if resume is None:
        params = init_params(kg, config, rng)
        start, trace = 0, []
    else:
        params = resume.params.copy()
        rng.bit_generator.state = resume.rng_state
        start, trace = resume.epoch, list(resume.losses)
    for epoch in range(start, config.epochs):
        params, losses = train_epoch(kg, params, config, rng, epoch)
        trace.append(losses)
        log.debug("epoch %d losses %s", epoch + 1, losses)
        if epoch_callback is not None:
            epoch_callback(epoch + 1, params, losses)
        if checkpoint_callback is not None and config.checkpoint_every and (epoch + 1) % config.checkpoint_every == 0:
            checkpoint_callback(TrainState(params.copy(), rng.bit_generator.state, epoch + 1, list(trace)))
    return FitResult(params, trace, rng.bit_generator.state)
