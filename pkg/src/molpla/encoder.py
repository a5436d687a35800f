"""Shared GIN graph encoder, readout and the four projection heads.

Node/edge features are sums of per-attribute embedding rows (MASK uses each
table's reserved row). Each GIN layer computes
MLP((1 + eps) * h_v + sum_{u in N(v)} (h_u + e_uv)) followed by layer norm,
ReLU (omitted on the last layer) and dropout (train mode). Disconnected
components never exchange messages, so encoding a disjoint union equals
encoding the parts.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from . import vocab
from .graph import MolGraph


class EmptyGraphError(ValueError):
    """Readout needs at least one node."""


@dataclass(frozen=True)
class EncoderConfig:
    d: int = 300
    n_layers: int = 5
    condition_bits: int = 64
    dropout: float = 0.0
    leaky_slope: float = 0.01
    seed: int = 0

    def to_obj(self) -> dict:
        return {"d": self.d, "n_layers": self.n_layers,
                "condition_bits": self.condition_bits,
                "dropout": self.dropout, "leaky_slope": self.leaky_slope,
                "seed": self.seed}

    @staticmethod
    def from_obj(obj: dict) -> "EncoderConfig":
        return EncoderConfig(**obj)


class ParameterStore:
    """Ordered named parameter tensors (float64 in memory)."""

    def __init__(self):
        self.tensors: dict[str, ad.Tensor] = {}

    def add(self, name: str, data: np.ndarray) -> ad.Tensor:
        if name in self.tensors:
            raise KeyError(f"duplicate parameter {name}")
        t = ad.Tensor(np.asarray(data, dtype=np.float64), requires_grad=True)
        self.tensors[name] = t
        return t

    def __getitem__(self, name: str) -> ad.Tensor:
        return self.tensors[name]

    def __contains__(self, name: str) -> bool:
        return name in self.tensors

    def names(self) -> list[str]:
        return list(self.tensors)

    def zero_grad(self) -> None:
        for t in self.tensors.values():
            t.grad = None

    def copy(self) -> "ParameterStore":
        ps = ParameterStore()
        for name, t in self.tensors.items():
            ps.add(name, t.data.copy())
        return ps

    def all_finite(self) -> bool:
        return all(np.isfinite(t.data).all() for t in self.tensors.values())


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def init_params(config: EncoderConfig) -> ParameterStore:
    """Deterministic initialization: Glorot-uniform affine weights, zero
    biases, N(0, 0.02) embedding tables, eps = 0."""
    rng = np.random.default_rng(config.seed)
    d = config.d
    ps = ParameterStore()
    for i, size in enumerate(vocab.NODE_TABLE_SIZES):
        ps.add(f"node_embed/{vocab.NODE_ATTR_NAMES[i]}",
               rng.normal(0.0, 0.02, size=(size, d)))
    for i, size in enumerate(vocab.EDGE_TABLE_SIZES):
        ps.add(f"edge_embed/{vocab.EDGE_ATTR_NAMES[i]}",
               rng.normal(0.0, 0.02, size=(size, d)))
    for layer in range(config.n_layers):
        ps.add(f"gin/{layer}/W1", _glorot(rng, d, 2 * d))
        ps.add(f"gin/{layer}/b1", np.zeros(2 * d))
        ps.add(f"gin/{layer}/W2", _glorot(rng, 2 * d, d))
        ps.add(f"gin/{layer}/b2", np.zeros(d))
        ps.add(f"gin/{layer}/eps", np.zeros(()))
        ps.add(f"gin/{layer}/ln_gamma", np.ones(d))
        ps.add(f"gin/{layer}/ln_beta", np.zeros(d))
    for head, d_in in (("graph_head", d), ("node_head", d),
                       ("query_head", d + config.condition_bits),
                       ("rgroup_head", d)):
        ps.add(f"{head}/W1", _glorot(rng, d_in, d))
        ps.add(f"{head}/b1", np.zeros(d))
        ps.add(f"{head}/W2", _glorot(rng, d, d))
        ps.add(f"{head}/b2", np.zeros(d))
    return ps


# ---------------------------------------------------------------------------
# batch packing
# ---------------------------------------------------------------------------

class GraphBatch:
    """A disjoint union of graphs flattened to index arrays."""

    def __init__(self, graphs: list[MolGraph]):
        node_idx = [[] for _ in vocab.NODE_TABLE_SIZES]
        edge_idx = [[] for _ in vocab.EDGE_TABLE_SIZES]
        src: list[int] = []
        dst: list[int] = []
        graph_id: list[int] = []
        offsets: list[int] = []
        total = 0
        for gi, g in enumerate(graphs):
            offsets.append(total)
            for a in g.atoms:
                rows = vocab.atom_embedding_indices(
                    a.atomic_number, a.formal_charge, a.chirality_tag,
                    a.hybridization, a.num_explicit_hs, a.aromatic)
                for k, row in enumerate(rows):
                    node_idx[k].append(row)
                graph_id.append(gi)
            for u, v, b in g.bonds:
                rows = vocab.bond_embedding_indices(
                    b.bond_type, b.bond_direction, b.stereo, b.conjugated,
                    b.aromatic)
                for direction in ((u, v), (v, u)):
                    src.append(total + direction[0])
                    dst.append(total + direction[1])
                    for k, row in enumerate(rows):
                        edge_idx[k].append(row)
            total += g.n_atoms
        self.n_nodes = total
        self.n_graphs = len(graphs)
        self.offsets = offsets
        self.node_idx = [np.asarray(x, dtype=np.int64) for x in node_idx]
        self.edge_idx = [np.asarray(x, dtype=np.int64) for x in edge_idx]
        self.src = np.asarray(src, dtype=np.int64)
        self.dst = np.asarray(dst, dtype=np.int64)
        self.graph_id = np.asarray(graph_id, dtype=np.int64)


def embed_attributes_batch(batch: GraphBatch, params: ParameterStore
                           ) -> tuple[ad.Tensor, ad.Tensor]:
    node_feat = None
    for k, name in enumerate(vocab.NODE_ATTR_NAMES):
        rows = ad.gather(params[f"node_embed/{name}"], batch.node_idx[k])
        node_feat = rows if node_feat is None else ad.add(node_feat, rows)
    d = params["node_embed/atomic_number"].data.shape[1]
    if batch.src.size:
        edge_feat = None
        for k, name in enumerate(vocab.EDGE_ATTR_NAMES):
            rows = ad.gather(params[f"edge_embed/{name}"], batch.edge_idx[k])
            edge_feat = rows if edge_feat is None else ad.add(edge_feat, rows)
    else:
        edge_feat = ad.Tensor(np.zeros((0, d)))
    return node_feat, edge_feat


def encode_batch(batch: GraphBatch, params: ParameterStore,
                 config: EncoderConfig, *, train: bool = False,
                 rng: np.random.Generator | None = None) -> ad.Tensor:
    h, edge_feat = embed_attributes_batch(batch, params)
    drop_rng = rng if (train and config.dropout > 0) else None
    for layer in range(config.n_layers):
        eps = params[f"gin/{layer}/eps"]
        self_term = ad.mul(h, ad.add(eps, ad.Tensor(1.0)))
        if batch.src.size:
            neigh = ad.neighbor_aggregate(h, batch.src, batch.dst, edge_feat)
            z = ad.add(self_term, neigh)
        else:
            z = self_term
        z = ad.add(ad.matmul(z, params[f"gin/{layer}/W1"]), params[f"gin/{layer}/b1"])
        z = ad.relu(z)
        z = ad.add(ad.matmul(z, params[f"gin/{layer}/W2"]), params[f"gin/{layer}/b2"])
        z = ad.layer_norm(z, params[f"gin/{layer}/ln_gamma"],
                          params[f"gin/{layer}/ln_beta"])
        if layer < config.n_layers - 1:
            z = ad.relu(z)
        z = ad.dropout(z, config.dropout, drop_rng)
        h = z
    return h


def readout_batch(h: ad.Tensor, batch: GraphBatch) -> ad.Tensor:
    if batch.n_nodes == 0:
        raise EmptyGraphError("cannot read out an empty graph")
    return ad.segment_mean(h, batch.graph_id, batch.n_graphs)


def _head(name: str, x: ad.Tensor, params: ParameterStore,
          slope: float) -> ad.Tensor:
    z = ad.add(ad.matmul(x, params[f"{name}/W1"]), params[f"{name}/b1"])
    z = ad.leaky_relu(z, slope)
    return ad.add(ad.matmul(z, params[f"{name}/W2"]), params[f"{name}/b2"])


def project_graph_t(h, params, config) -> ad.Tensor:
    return _head("graph_head", h, params, config.leaky_slope)


def project_node_t(h, params, config) -> ad.Tensor:
    return _head("node_head", h, params, config.leaky_slope)


def project_query_t(q, condition, params, config) -> ad.Tensor:
    cond = ad.as_tensor(np.asarray(condition, dtype=np.float64))
    return _head("query_head", ad.concat_cols(q, cond), params,
                 config.leaky_slope)


def project_rgroup_t(h, params, config) -> ad.Tensor:
    return _head("rgroup_head", h, params, config.leaky_slope)


# ---------------------------------------------------------------------------
# single-graph conveniences (eval mode, ndarray in/out)
# ---------------------------------------------------------------------------

def embed_attributes(g: MolGraph, params: ParameterStore
                     ) -> tuple[np.ndarray, np.ndarray]:
    batch = GraphBatch([g])
    node, edge = embed_attributes_batch(batch, params)
    # de-duplicate directed edges back to one row per bond
    return node.data, edge.data[::2] if edge.data.size else edge.data


def encode(g: MolGraph, params: ParameterStore,
           config: EncoderConfig) -> np.ndarray:
    """Eval-mode node representations for one graph (n x d)."""
    return encode_batch(GraphBatch([g]), params, config).data


def readout(h: np.ndarray) -> np.ndarray:
    if h.shape[0] == 0:
        raise EmptyGraphError("cannot read out an empty graph")
    return h.mean(axis=0)


def project_graph(h, params, config) -> np.ndarray:
    return project_graph_t(ad.Tensor(np.atleast_2d(h)), params, config).data[0]


def project_node(h, params, config) -> np.ndarray:
    return project_node_t(ad.Tensor(np.atleast_2d(h)), params, config).data[0]


def project_query(q, condition, params, config) -> np.ndarray:
    return project_query_t(ad.Tensor(np.atleast_2d(q)),
                           np.atleast_2d(np.asarray(condition, dtype=np.float64)),
                           params, config).data[0]


def project_rgroup(h, params, config) -> np.ndarray:
    return project_rgroup_t(ad.Tensor(np.atleast_2d(h)), params, config).data[0]


# ---------------------------------------------------------------------------
# checkpoint container: magic + u32 manifest length + manifest JSON +
# little-endian float32 arrays in manifest order
# ---------------------------------------------------------------------------

_MAGIC = b"MPLC"


def save_checkpoint(path, params: ParameterStore, config: EncoderConfig,
                    extra: dict | None = None) -> None:
    arrays = [{"name": name, "shape": list(params[name].data.shape)}
              for name in params.names()]
    manifest = {
        "format_version": 1,
        "config": config.to_obj(),
        "seed": config.seed,
        "arrays": arrays,
        "extra": extra or {},
    }
    blob = json.dumps(manifest, sort_keys=True, separators=(",", ":")).encode()
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(struct.pack("<I", len(blob)))
        f.write(blob)
        for name in params.names():
            f.write(params[name].data.astype("<f4").tobytes())


def load_checkpoint(path) -> tuple[ParameterStore, EncoderConfig, dict]:
    with open(path, "rb") as f:
        if f.read(4) != _MAGIC:
            raise ValueError(f"{path} is not a checkpoint file")
        (n,) = struct.unpack("<I", f.read(4))
        manifest = json.loads(f.read(n).decode())
        ps = ParameterStore()
        for entry in manifest["arrays"]:
            shape = tuple(entry["shape"])
            count = int(np.prod(shape)) if shape else 1
            raw = np.frombuffer(f.read(4 * count), dtype="<f4")
            ps.add(entry["name"], raw.reshape(shape).astype(np.float64))
    config = EncoderConfig.from_obj(manifest["config"])
    return ps, config, manifest


def checkpoint_hash(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()[:16]
