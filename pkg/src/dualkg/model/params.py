"""Parameter containers for the embedding model."""

import dataclasses
from dataclasses import dataclass

import numpy as np

from ..poincare import MAX_NORM

SPACES = ("sphere", "ball", "flat")
RELATION_FIELDS = ("angles", "stretch", "translation")


@dataclass
class RelationTable:
    """Per-relation parameters; only the fields a space uses are set.

    ``angles`` (n, d-1) for sphere rotations, ``stretch`` (n, d) for the
    diagonal MuRP matrix, ``translation`` (n, d) for ball or flat translations.
    """

    angles: np.ndarray | None = None
    stretch: np.ndarray | None = None
    translation: np.ndarray | None = None

    def rows(self, idx):
        return {f: getattr(self, f)[idx] for f in RELATION_FIELDS if getattr(self, f) is not None}

    def items(self):
        return [(f, getattr(self, f)) for f in RELATION_FIELDS if getattr(self, f) is not None]

    def copy(self):
        return RelationTable(**{f: None if a is None else a.copy() for f, a in self.__dict__.items()})


@dataclass
class ParamStore:
    """All trainable state.

    Entity points are stored in absolute coordinates. With a sphere instance
    space they satisfy ``|x - center * e_d| = shell_norm``; bridge entities
    additionally have ``x_d = 0`` and hence lie on the ring of radius
    ``sqrt(shell_norm^2 - center^2)``. Concept points, cross-view bias
    vectors and relation translations are pinned to the disk ``x_d = 0``.
    """

    entity_points: np.ndarray
    entity_bias: np.ndarray
    is_bridge: np.ndarray
    concept_points: np.ndarray
    concept_bias: np.ndarray
    inst: RelationTable
    onto: RelationTable
    cross: RelationTable
    cross_weight: np.ndarray
    cross_bias: np.ndarray
    shell_norm: float
    center: float = 0.0
    inst_space: str = "sphere"
    onto_space: str = "ball"

    @property
    def dim(self):
        return self.entity_points.shape[1]

    @property
    def ring_radius(self):
        return float(np.sqrt(self.shell_norm**2 - self.center**2))

    def relations(self, view):
        return {"inst": self.inst, "onto": self.onto, "cross": self.cross}[view]

    def space(self, view):
        return self.inst_space if view == "inst" else self.onto_space

    def copy(self):
        kw = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            kw[f.name] = v.copy() if hasattr(v, "copy") else v
        return ParamStore(**kw)

    def arrays(self):
        """Flat ``name -> ndarray`` view of every array-valued field."""
        out = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if isinstance(v, RelationTable):
                for name, arr in v.items():
                    out[f"{f.name}.{name}"] = arr
            elif isinstance(v, np.ndarray):
                out[f.name] = v
        return out

    def scalars(self):
        return {
            "shell_norm": float(self.shell_norm),
            "center": float(self.center),
            "inst_space": self.inst_space,
            "onto_space": self.onto_space,
        }

    @classmethod
    def from_parts(cls, arrays, scalars):
        tables = {"inst": {}, "onto": {}, "cross": {}}
        plain = {}
        for name, arr in arrays.items():
            if "." in name:
                table, fld = name.split(".", 1)
                tables[table][fld] = arr
            else:
                plain[name] = arr
        return cls(
            **plain,
            **{k: RelationTable(**v) for k, v in tables.items()},
            shell_norm=scalars["shell_norm"],
            center=scalars["center"],
            inst_space=scalars["inst_space"],
            onto_space=scalars["onto_space"],
        )

    def __eq__(self, other):
        if not isinstance(other, ParamStore):
            return NotImplemented
        a, b = self.arrays(), other.arrays()
        return (
            self.scalars() == other.scalars()
            and a.keys() == b.keys()
            and all(np.array_equal(a[k], b[k]) and a[k].dtype == b[k].dtype for k in a)
        )

    __hash__ = None

    def invariant_violations(self, tol=1e-9):
        """List human-readable descriptions of every violated constraint."""
        problems = []
        d = self.dim
        x = self.entity_points
        bridge = self.is_bridge
        if self.inst_space == "sphere":
            if not abs(self.center) < self.shell_norm:
                problems.append(f"|center| {self.center} >= shell norm {self.shell_norm}")
            rel = x.copy()
            rel[:, -1] -= self.center
            gap = np.abs(np.linalg.norm(rel, axis=1) - self.shell_norm)
            if np.any(gap[~bridge] > tol):
                problems.append(f"entity off shell by {gap[~bridge].max():.3g}")
            if bridge.any():
                ring = np.abs(np.linalg.norm(x[bridge, : d - 1], axis=1) - self.ring_radius)
                if ring.max() > tol:
                    problems.append(f"bridge entity off ring by {ring.max():.3g}")
        elif self.inst_space == "ball" and np.any(np.linalg.norm(x, axis=1) > MAX_NORM + tol):
            problems.append("entity outside ball")
        if bridge.any() and np.any(x[bridge, -1] != 0.0):
            problems.append("bridge entity with non-zero last coordinate")
        c = self.concept_points
        if self.onto_space == "sphere":
            gap = np.abs(np.linalg.norm(c, axis=1) - self.shell_norm)
            if np.any(gap > tol):
                problems.append(f"concept off shell by {gap.max():.3g}")
        elif self.onto_space == "ball":
            if np.any(np.linalg.norm(c, axis=1) > MAX_NORM + tol):
                problems.append("concept outside ball")
            if np.any(c[:, -1] != 0.0):
                problems.append("concept with non-zero last coordinate")
        for view in ("inst", "onto", "cross"):
            table = self.relations(view)
            if table.angles is not None:
                a = table.angles
                if np.any((a < 0.0) | (a >= 2.0 * np.pi)):
                    problems.append(f"{view} angle outside [0, 2pi)")
            if table.translation is not None and self.space(view) == "ball":
                t = table.translation
                if np.any(np.linalg.norm(t, axis=1) > MAX_NORM + tol):
                    problems.append(f"{view} translation outside ball")
                if np.any(t[:, -1] != 0.0):
                    problems.append(f"{view} translation with non-zero last coordinate")
        if len(self.cross_bias):
            if np.any(np.linalg.norm(self.cross_bias, axis=1) > MAX_NORM + tol):
                problems.append("cross bias outside ball")
            if np.any(self.cross_bias[:, -1] != 0.0):
                problems.append("cross bias with non-zero last coordinate")
        for name, arr in self.arrays().items():
            if arr.dtype.kind == "f" and not np.all(np.isfinite(arr)):
                problems.append(f"non-finite values in {name}")
        return problems
