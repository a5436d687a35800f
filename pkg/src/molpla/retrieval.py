"""R-group embedding library, exact inner-product top-k retrieval, MRR and
Recall@K evaluation, and the naive baselines.

Retrieval scores are inner products between the condition-augmented query
stub projection and the library's R-group projections (exact exhaustive
search; ties broken by canonical key ascending). Projections were trained
with cosine similarity; the inner-product/cosine mismatch at retrieval time
follows the source protocol.
"""

from __future__ import annotations

import json
import logging
import struct
from dataclasses import dataclass, field

import numpy as np

from .dataset import PretrainDataset, RGroupRecord
from .encoder import (EncoderConfig, GraphBatch, ParameterStore, encode_batch,
                      project_query_t, project_rgroup_t, readout_batch)
from .graph import MolGraph
from .smiles import parse_smiles

log = logging.getLogger(__name__)

DEFAULT_TOP_K = 1000


class NotAStubError(ValueError):
    """The referenced template atom is not a masked stub."""


class MissingGroundTruthError(ValueError):
    """A test instance lacks its decoupled R-group keys."""


@dataclass
class RGroupLibrary:
    keys: list[str]
    smiles: list[str]
    embeddings: np.ndarray  # N x d, float32
    popularity: np.ndarray  # N, int64
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.keys) != self.embeddings.shape[0]:
            raise ValueError("keys/embedding row mismatch")

    @property
    def size(self) -> int:
        return len(self.keys)

    def index_of(self, key: str) -> int | None:
        if not hasattr(self, "_index"):
            self._index = {k: i for i, k in enumerate(self.keys)}
        return self._index.get(key)


@dataclass
class RetrievalResult:
    ranked: list[tuple[str, float]]  # (key, score), non-increasing scores
    template_smiles: str = ""
    stub_index: int = -1
    condition: str = ""
    k: int = 0

    def keys(self) -> list[str]:
        return [k for k, _ in self.ranked]


def build_library(params: ParameterStore, config: EncoderConfig,
                  rgroup_table: list[RGroupRecord],
                  metadata: dict | None = None,
                  batch_size: int = 256) -> RGroupLibrary:
    """Embed every R-group record: encode -> mean readout -> R-group head.
    Unparsable records are skipped with a log entry."""
    keys, smiles, pops, graphs = [], [], [], []
    for rec in rgroup_table:
        try:
            graphs.append(parse_smiles(rec.smiles))
        except ValueError as exc:
            log.warning("skipping R-group %s: %s", rec.key, exc)
            continue
        keys.append(rec.key)
        smiles.append(rec.smiles)
        pops.append(rec.count)
    rows = []
    for start in range(0, len(graphs), batch_size):
        chunk = graphs[start:start + batch_size]
        pack = GraphBatch(chunk)
        h = encode_batch(pack, params, config)
        pooled = readout_batch(h, pack)
        rows.append(project_rgroup_t(pooled, params, config).data)
    emb = (np.concatenate(rows, axis=0) if rows
           else np.zeros((0, config.d))).astype("<f4")
    return RGroupLibrary(keys=keys, smiles=smiles, embeddings=emb,
                         popularity=np.asarray(pops, dtype=np.int64),
                         metadata=metadata or {})


def query_embedding(template: MolGraph, stub_index: int,
                    condition: np.ndarray, params: ParameterStore,
                    config: EncoderConfig) -> np.ndarray:
    if not (0 <= stub_index < template.n_atoms):
        raise NotAStubError(f"stub index {stub_index} out of range")
    if not template.atoms[stub_index].is_stub:
        raise NotAStubError(f"atom {stub_index} is not a stub")
    pack = GraphBatch([template])
    h = encode_batch(pack, params, config)
    q = h.data[stub_index:stub_index + 1]
    import molpla.autodiff as ad
    cond = np.atleast_2d(np.asarray(condition, dtype=np.float64))
    return project_query_t(ad.Tensor(q), cond, params, config).data[0]


def _top_k(scores: np.ndarray, keys: list[str], k: int) -> list[tuple[str, float]]:
    """Exact top-k by score descending, ties by key ascending."""
    order = sorted(range(len(keys)), key=lambda i: (-scores[i], keys[i]))
    return [(keys[i], float(scores[i])) for i in order[:k]]


def retrieve(template: MolGraph, stub_index: int, condition: np.ndarray,
             library: RGroupLibrary, params: ParameterStore,
             config: EncoderConfig, k: int = DEFAULT_TOP_K) -> RetrievalResult:
    z_c = query_embedding(template, stub_index, condition, params, config)
    scores = library.embeddings.astype(np.float64) @ z_c
    from .patterns import bits_to_string
    from .smiles import write_smiles
    return RetrievalResult(
        ranked=_top_k(scores, library.keys, k),
        template_smiles=write_smiles(template), stub_index=stub_index,
        condition=bits_to_string(np.asarray(condition).astype(np.uint8)),
        k=k)


def baseline_retrieve(mode: str, library: RGroupLibrary, k: int = DEFAULT_TOP_K,
                      template: MolGraph | None = None, stub_index: int = -1,
                      params: ParameterStore | None = None,
                      config: EncoderConfig | None = None,
                      rng: np.random.Generator | None = None) -> RetrievalResult:
    """Baselines: 'random' (seeded uniform sample), 'popularity' (fixed most
    frequent keys), 'cond_none'/'cond_all' (retrieval with the condition
    overridden to all zeros/ones)."""
    if mode == "random":
        if rng is None:
            rng = np.random.default_rng(0)
        n = library.size
        picked = rng.permutation(n)[:k]
        return RetrievalResult([(library.keys[i], 0.0) for i in picked], k=k)
    if mode == "popularity":
        order = sorted(range(library.size),
                       key=lambda i: (-library.popularity[i], library.keys[i]))
        return RetrievalResult(
            [(library.keys[i], float(library.popularity[i]))
             for i in order[:k]], k=k)
    if mode in ("cond_none", "cond_all"):
        from .patterns import CONDITION_BITS
        bits = (np.zeros(CONDITION_BITS) if mode == "cond_none"
                else np.ones(CONDITION_BITS))
        return retrieve(template, stub_index, bits, library, params, config, k)
    raise ValueError(f"unknown baseline mode {mode}")


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

@dataclass
class RetrievalMetrics:
    mrr: float
    recall_at: dict[int, float]
    n_queries: int

    def to_obj(self, dataset: str = "") -> dict:
        obj = {"dataset": dataset, "MRR": self.mrr, "n_queries": self.n_queries}
        for k, v in sorted(self.recall_at.items()):
            obj[f"R@{k}"] = v
        return obj


def _ranks_from_lists(key_lists: list[list[str]], truths: list[str],
                      window: int) -> list[int]:
    """Rank of each truth in its candidate list (0 = absent/outside
    window)."""
    ranks = []
    for keys, truth in zip(key_lists, truths):
        try:
            r = keys.index(truth) + 1
            ranks.append(r if r <= window else 0)
        except ValueError:
            ranks.append(0)
    return ranks


def metrics_from_ranks(ranks: list[int], k_list=(10, 50, 100)) -> RetrievalMetrics:
    n = len(ranks)
    if n == 0:
        raise MissingGroundTruthError("no queries to evaluate")
    mrr = float(np.mean([1.0 / r if r > 0 else 0.0 for r in ranks]))
    recall = {k: float(np.mean([1 if 0 < r <= k else 0 for r in ranks]))
              for k in k_list}
    return RetrievalMetrics(mrr, recall, n)


def evaluate_retrieval(dataset: PretrainDataset, split: str,
                       library: RGroupLibrary, params: ParameterStore,
                       config: EncoderConfig, k_list=(10, 50, 100),
                       window: int = DEFAULT_TOP_K, mode: str = "model",
                       rng: np.random.Generator | None = None,
                       limit: int | None = None) -> RetrievalMetrics:
    """MRR / R@K over every (query stub, ground-truth key) pair of a split.

    mode 'model' uses the trained retrieval; 'random'/'popularity'/
    'cond_none'/'cond_all' evaluate the corresponding baseline on the same
    queries.
    """
    from .learning import TrainInstance

    records = dataset.split(split)
    if limit is not None:
        records = records[:limit]
    ranks: list[int] = []
    for rec in records:
        if not rec.rgroup_keys:
            raise MissingGroundTruthError(
                f"instance {rec.obj['mol']} lacks ground-truth keys")
        inst = TrainInstance.from_record(rec)
        query = parse_smiles(rec.obj["query"])
        for cut_i in range(inst.n_cuts):
            truth = rec.rgroup_keys[cut_i]
            stub = rec.obj["linker_map"][cut_i][1]
            if mode == "model":
                res = retrieve(query, stub, inst.conditions[cut_i], library,
                               params, config, k=window)
            elif mode in ("cond_none", "cond_all"):
                res = baseline_retrieve(mode, library, k=window,
                                        template=query, stub_index=stub,
                                        params=params, config=config)
            elif mode == "random":
                res = baseline_retrieve("random", library, k=window, rng=rng)
            elif mode == "popularity":
                res = baseline_retrieve("popularity", library, k=window)
            else:
                raise ValueError(f"unknown mode {mode}")
            ranks.extend(_ranks_from_lists([res.keys()], [truth], window))
    return metrics_from_ranks(ranks, k_list)


# ---------------------------------------------------------------------------
# library file: magic + u32 manifest length + manifest JSON + f32 matrix
# ---------------------------------------------------------------------------

_MAGIC = b"MPLL"


def save_library(path, library: RGroupLibrary) -> None:
    manifest = {
        "format_version": 1,
        "n": library.size,
        "d": int(library.embeddings.shape[1]) if library.size else 0,
        "keys": library.keys,
        "smiles": library.smiles,
        "popularity": [int(p) for p in library.popularity],
        "metadata": library.metadata,
    }
    blob = json.dumps(manifest, sort_keys=True, separators=(",", ":")).encode()
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(struct.pack("<I", len(blob)))
        f.write(blob)
        f.write(library.embeddings.astype("<f4").tobytes())


def load_library(path) -> RGroupLibrary:
    with open(path, "rb") as f:
        if f.read(4) != _MAGIC:
            raise ValueError(f"{path} is not a library file")
        (n,) = struct.unpack("<I", f.read(4))
        manifest = json.loads(f.read(n).decode())
        count, d = manifest["n"], manifest["d"]
        emb = np.frombuffer(f.read(4 * count * d), dtype="<f4").reshape(count, d)
    return RGroupLibrary(
        keys=manifest["keys"], smiles=manifest["smiles"],
        embeddings=emb.copy(),
        popularity=np.asarray(manifest["popularity"], dtype=np.int64),
        metadata=manifest["metadata"])


def library_hash(path) -> str:
    import hashlib
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()[:16]
