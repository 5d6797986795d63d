"""Triple files, checkpoints and embedding export.

Checkpoint layout (all integers little-endian)::

    DUALKG-CHECKPOINT <version>\\n
    <sha256 hex of everything after this line>\\n
    <header JSON>\\n
    <raw array bytes, in header order>

The header is serialized with sorted keys and every array is written in C
order, so equal states produce byte-identical files.
"""

import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ChecksumMismatch, ParseError, UnsupportedVersion
from .model.graph import VIEWS, TwoViewKG
from .model.params import ParamStore
from .train import TrainConfig, TrainState

log = logging.getLogger(__name__)

MAGIC = b"DUALKG-CHECKPOINT"
FORMAT_VERSION = 1


# ---------------------------------------------------------------------------
# triple files


def read_triples(path):
    """Parse a UTF-8 ``head<TAB>relation<TAB>tail`` file into string triples."""
    path = Path(path)
    out = []
    with path.open("r", encoding="utf-8", newline="\n") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.removesuffix("\n")
            parts = line.split("\t")
            if len(parts) != 3:
                raise ParseError(path, lineno, f"expected 3 tab-separated fields, found {len(parts)}")
            if any(p == "" or p != p.strip() for p in parts):
                raise ParseError(path, lineno, "empty identifier or surrounding whitespace")
            out.append(tuple(parts))
    return out


def write_triples(path, triples):
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        for h, r, t in triples:
            fh.write(f"{h}\t{r}\t{t}\n")


def load_kg(inst_path, onto_path, cross_path=None):
    """Build a :class:`TwoViewKG` from the three triple files.

    ``cross_path`` may be ``None`` for a graph without bridge entities.
    Duplicate triples are kept once and reported through a warning.
    """
    inst = read_triples(inst_path)
    onto = read_triples(onto_path)
    cross = read_triples(cross_path) if cross_path is not None else []
    kg = TwoViewKG.from_labeled(inst, onto, cross)
    if kg.duplicates:
        log.warning("dropped %d duplicate triples", kg.duplicates)
    return kg


# ---------------------------------------------------------------------------
# checkpoints


@dataclass
class Checkpoint:
    config: TrainConfig
    params: ParamStore
    kg: TwoViewKG
    rng_state: dict
    epoch: int
    losses: list = field(default_factory=list)
    version: int = FORMAT_VERSION

    @classmethod
    def from_state(cls, config, kg, state):
        return cls(config, state.params, kg, state.rng_state, state.epoch, list(state.losses))

    def to_state(self):
        return TrainState(self.params.copy(), self.rng_state, self.epoch, list(self.losses))

    def __eq__(self, other):
        if not isinstance(other, Checkpoint):
            return NotImplemented
        return (
            self.version == other.version
            and self.config == other.config
            and self.params == other.params
            and self.kg == other.kg
            and self.rng_state == other.rng_state
            and self.epoch == other.epoch
            and self.losses == other.losses
        )


def _kg_arrays(kg):
    return {f"kg.{v}_triples": np.ascontiguousarray(kg.triples(v), dtype=np.int64) for v in VIEWS}


def _encode(ckpt):
    arrays = {f"params.{k}": v for k, v in ckpt.params.arrays().items()}
    arrays.update(_kg_arrays(ckpt.kg))
    metas, chunks, offset = [], [], 0
    for name in sorted(arrays):
        arr = np.ascontiguousarray(arrays[name])
        data = arr.astype(arr.dtype.newbyteorder("<"), copy=False).tobytes()
        metas.append({"name": name, "dtype": arr.dtype.str.replace(">", "<"), "shape": list(arr.shape), "offset": offset})
        chunks.append(data)
        offset += len(data)
    kg = ckpt.kg
    header = {
        "config": ckpt.config.to_dict(),
        "rng_state": ckpt.rng_state,
        "epoch": ckpt.epoch,
        "losses": ckpt.losses,
        "scalars": ckpt.params.scalars(),
        "arrays": metas,
        "payload_bytes": offset,
        "kg": {
            "entities": list(kg.entities),
            "concepts": list(kg.concepts),
            "inst_relations": list(kg.inst_relations),
            "onto_relations": list(kg.onto_relations),
            "cross_relations": list(kg.cross_relations),
            "duplicates": kg.duplicates,
        },
    }
    text = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return text + b"\n" + b"".join(chunks)


def save_checkpoint(ckpt, path):
    """Write ``ckpt`` to ``path`` atomically (write to a sibling, then rename)."""
    body = _encode(ckpt)
    digest = hashlib.sha256(body).hexdigest().encode("ascii")
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with tmp.open("wb") as fh:
        fh.write(MAGIC + b" " + str(ckpt.version).encode("ascii") + b"\n" + digest + b"\n" + body)
    tmp.replace(path)


def load_checkpoint(path):
    """Read a checkpoint written by :func:`save_checkpoint`."""
    raw = Path(path).read_bytes()
    first, _, rest = raw.partition(b"\n")
    magic, _, version = first.partition(b" ")
    if magic != MAGIC:
        raise ChecksumMismatch(f"{path}: not a checkpoint file")
    try:
        version = int(version)
    except ValueError:
        raise ChecksumMismatch(f"{path}: unreadable format version") from None
    if version != FORMAT_VERSION:
        raise UnsupportedVersion(f"{path}: format version {version}, expected {FORMAT_VERSION}")
    digest, _, body = rest.partition(b"\n")
    if hashlib.sha256(body).hexdigest().encode("ascii") != digest:
        raise ChecksumMismatch(f"{path}: content checksum mismatch")
    text, _, payload = body.partition(b"\n")
    header = json.loads(text)
    if len(payload) != header["payload_bytes"]:
        raise ChecksumMismatch(f"{path}: payload length mismatch")
    arrays = {}
    for meta in header["arrays"]:
        dtype = np.dtype(meta["dtype"])
        count = int(np.prod(meta["shape"], dtype=np.int64))
        arr = np.frombuffer(payload, dtype=dtype, count=count, offset=meta["offset"])
        arrays[meta["name"]] = arr.reshape(meta["shape"]).astype(dtype.newbyteorder("="), copy=True)
    params = ParamStore.from_parts(
        {k.removeprefix("params."): v for k, v in arrays.items() if k.startswith("params.")},
        header["scalars"],
    )
    meta = header["kg"]
    kg = TwoViewKG(
        entities=tuple(meta["entities"]),
        concepts=tuple(meta["concepts"]),
        inst_relations=tuple(meta["inst_relations"]),
        onto_relations=tuple(meta["onto_relations"]),
        cross_relations=tuple(meta["cross_relations"]),
        inst_triples=arrays["kg.inst_triples"],
        onto_triples=arrays["kg.onto_triples"],
        cross_triples=arrays["kg.cross_triples"],
        duplicates=meta["duplicates"],
    )
    return Checkpoint(
        config=TrainConfig.from_dict(header["config"]),
        params=params,
        kg=kg,
        rng_state=header["rng_state"],
        epoch=header["epoch"],
        losses=header["losses"],
        version=version,
    )


# ---------------------------------------------------------------------------
# embedding export


def export_embeddings(params, kg, path):
    """Write one row per entity and concept.

    Columns: ``id kind space norm bias x1 .. xd``. ``kind`` is ``entity``,
    ``bridge`` or ``concept``; ``norm`` is the Euclidean norm of the stored
    point; values are written with 17 significant digits.
    """
    d = params.dim
    cols = ["id", "kind", "space", "norm", "bias"] + [f"x{i + 1}" for i in range(d)]
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        fh.write("\t".join(cols) + "\n")
        groups = (
            (kg.entities, params.entity_points, params.entity_bias, params.inst_space, params.is_bridge),
            (kg.concepts, params.concept_points, params.concept_bias, params.onto_space, None),
        )
        for names, points, bias, space, bridge in groups:
            norms = np.linalg.norm(points, axis=1)
            for i, name in enumerate(names):
                kind = "concept" if bridge is None else ("bridge" if bridge[i] else "entity")
                values = [norms[i], bias[i], *points[i]]
                fh.write("\t".join([name, kind, space] + [format(float(v), ".17g") for v in values]) + "\n")


def load_embeddings(path):
    """Read :func:`export_embeddings` output into ``{kind: (ids, points, bias)}``."""
    rows = {}
    with Path(path).open("r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split("\t")
        if header[:5] != ["id", "kind", "space", "norm", "bias"]:
            raise ParseError(path, 1, "unexpected header")
        for lineno, line in enumerate(fh, start=2):
            parts = line.rstrip("\n").split("\t")
            if len(parts) != len(header):
                raise ParseError(path, lineno, f"expected {len(header)} columns, found {len(parts)}")
            rows.setdefault(parts[1], []).append(parts)
    out = {}
    for kind, items in rows.items():
        ids = [p[0] for p in items]
        bias = np.array([float(p[4]) for p in items])
        points = np.array([[float(x) for x in p[5:]] for p in items])
        out[kind] = (ids, points, bias)
    return out
