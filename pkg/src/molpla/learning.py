"""Dual InfoNCE losses, the three-objective pre-training loop and the
fine-tuning protocol.

L1 aligns graph projections of the original and decomposed views (the
decomposed side stop-gradded); L2 aligns each original linker node with the
sum of its masked stub pair (stop-gradded); L3 co-embeds condition-augmented
query stubs with their decoupled R-groups. The total loss is their plain
sum; gradients reach the shared encoder through every non-stopped branch.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import autodiff as ad
from .dataset import InstanceRecord, PretrainDataset, scaffold_split
from .encoder import (EncoderConfig, GraphBatch, ParameterStore, encode_batch,
                      init_params, project_graph_t, project_node_t,
                      project_query_t, project_rgroup_t, readout_batch,
                      save_checkpoint)
from .graph import MolGraph
from .smiles import parse_smiles

log = logging.getLogger(__name__)


class ZeroVectorError(ValueError):
    """InfoNCE input row with zero norm."""


class LabelError(ValueError):
    """Non-binary labels passed to a classification fine-tune."""


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 0.001
    batch_size: int = 512
    max_epochs: int = 100
    patience: int = 10
    tau1: float = 0.01
    tau2: float = 0.05
    tau3: float = 0.01
    d: int = 300
    n_layers: int = 5
    dropout: float = 0.0
    seed: int = 0
    core_mode: str = "putative"

    def encoder_config(self) -> EncoderConfig:
        return EncoderConfig(d=self.d, n_layers=self.n_layers,
                             dropout=self.dropout, seed=self.seed)


@dataclass(frozen=True)
class FinetuneConfig:
    lr: float = 0.0001
    batch_size: int = 32
    max_epochs: int = 100
    patience: int = 10
    dropout: float = 0.3
    n_seeds: int = 5
    seed: int = 0
    freeze_encoder: bool = False


# ---------------------------------------------------------------------------
# InfoNCE
# ---------------------------------------------------------------------------

def info_nce(x, y, tau: float) -> ad.Tensor:
    """Dual-direction InfoNCE over cosine similarities with in-batch
    negatives. Rows of x and y pair up positionally."""
    x, y = ad.as_tensor(x), ad.as_tensor(y)
    if x.data.shape != y.data.shape:
        raise ValueError("x and y must have matching shapes")
    if not len(x.data):
        raise ValueError("empty batch")
    for side, t in (("x", x), ("y", y)):
        norms = np.linalg.norm(t.data, axis=1)
        if (norms == 0).any():
            raise ZeroVectorError(f"zero-norm row in {side}")
    b = x.data.shape[0]
    xn = ad.l2_normalize_rows(x)
    yn = ad.l2_normalize_rows(y)
    sim = ad.scale(ad.matmul(xn, ad.transpose(yn)), 1.0 / tau)
    fwd = ad.sum_all(ad.diag(ad.log_softmax_rows(sim)))
    bwd = ad.sum_all(ad.diag(ad.log_softmax_rows(ad.transpose(sim))))
    return ad.scale(ad.add(fwd, bwd), -1.0 / (2.0 * b))


# ---------------------------------------------------------------------------
# training instances
# ---------------------------------------------------------------------------

@dataclass
class TrainInstance:
    """A decomposition instance parsed and pre-packed for batching."""
    mol: MolGraph
    decomposed: MolGraph  # query + decoupled R-groups, one disconnected graph
    m_nodes: list[int]  # per cut: linker node in mol coords
    q_stubs: list[int]  # per cut: query stub in decomposed coords
    r_stubs: list[int]  # per cut: R-group stub in decomposed coords
    rgroup_seg: np.ndarray  # per decomposed node: cut index or -1
    conditions: np.ndarray  # n_cuts x condition_bits
    rgroup_keys: list[str]
    mol_pack: GraphBatch = field(repr=False, default=None)
    dec_pack: GraphBatch = field(repr=False, default=None)

    @property
    def n_cuts(self) -> int:
        return len(self.m_nodes)

    @staticmethod
    def from_record(rec: InstanceRecord) -> "TrainInstance":
        mol = parse_smiles(rec.obj["mol"])
        query = parse_smiles(rec.obj["query"])
        rgroups = [parse_smiles(s) for s in rec.obj["rgroups"]]
        dec, offsets = MolGraph.union([query] + rgroups)
        m_nodes, q_stubs, r_stubs = [], [], []
        seg = np.full(dec.n_atoms, -1, dtype=np.int64)
        for k, (m_idx, q_stub, r_stub) in enumerate(rec.obj["linker_map"]):
            m_nodes.append(m_idx)
            q_stubs.append(q_stub)  # query is at offset 0
            r_off = offsets[k + 1]
            r_stubs.append(r_off + r_stub)
            n_r = rgroups[k].n_atoms
            seg[r_off:r_off + n_r] = k
        return TrainInstance(
            mol=mol, decomposed=dec, m_nodes=m_nodes, q_stubs=q_stubs,
            r_stubs=r_stubs, rgroup_seg=seg,
            conditions=np.stack(rec.conditions).astype(np.float64),
            rgroup_keys=list(rec.rgroup_keys),
            mol_pack=GraphBatch([mol]), dec_pack=GraphBatch([dec]))


def _concat_packs(packs: list[GraphBatch]) -> GraphBatch:
    """Fast disjoint concatenation of pre-built packs."""
    out = GraphBatch.__new__(GraphBatch)
    node_off = np.cumsum([0] + [p.n_nodes for p in packs[:-1]])
    graph_off = np.cumsum([0] + [p.n_graphs for p in packs[:-1]])
    out.n_nodes = sum(p.n_nodes for p in packs)
    out.n_graphs = sum(p.n_graphs for p in packs)
    out.offsets = [int(o) for o in node_off]
    out.node_idx = [np.concatenate([p.node_idx[k] for p in packs])
                    for k in range(len(packs[0].node_idx))]
    out.edge_idx = [np.concatenate([p.edge_idx[k] for p in packs])
                    for k in range(len(packs[0].edge_idx))]
    out.src = np.concatenate([p.src + o for p, o in zip(packs, node_off)])
    out.dst = np.concatenate([p.dst + o for p, o in zip(packs, node_off)])
    out.graph_id = np.concatenate(
        [p.graph_id + o for p, o in zip(packs, graph_off)])
    return out


@dataclass
class StepLosses:
    l1: float
    l2: float
    l3: float
    total: float
    b1: int
    b2: int
    b3: int


def pretrain_step(instances: list[TrainInstance], params: ParameterStore,
                  config: TrainConfig,
                  rng: np.random.Generator | None = None,
                  backward: bool = True,
                  stopped_cache: dict | None = None,
                  loss_weights: tuple[float, float, float] = (1.0, 1.0, 1.0)
                  ) -> StepLosses:
    """One forward/backward pass over a batch of instances. Gradients are
    accumulated into ``params`` (call zero_grad first); the optimizer step is
    the caller's job.

    ``stopped_cache``: finite-difference harness hook. The stop-gradient
    branches are constants of the optimization objective; passing a dict
    caches their base-point values (first call) and replays them (later
    calls) so numeric differentiation sees the same function the analytic
    gradient is taken of.
    """
    if not instances:
        raise ValueError("empty batch")
    enc_cfg = config.encoder_config()

    mol_pack = _concat_packs([inst.mol_pack for inst in instances])
    dec_pack = _concat_packs([inst.dec_pack for inst in instances])

    m_pos, q_pos, r_pos, seg, conditions = [], [], [], [], []
    n_cuts = 0
    for bi, inst in enumerate(instances):
        m_off = mol_pack.offsets[bi]
        d_off = dec_pack.offsets[bi]
        m_pos.extend(m_off + np.asarray(inst.m_nodes))
        q_pos.extend(d_off + np.asarray(inst.q_stubs))
        r_pos.extend(d_off + np.asarray(inst.r_stubs))
        local = inst.rgroup_seg.copy()
        local[local >= 0] += n_cuts
        seg.append(local)
        conditions.append(inst.conditions)
        n_cuts += inst.n_cuts
    m_pos = np.asarray(m_pos, dtype=np.int64)
    q_pos = np.asarray(q_pos, dtype=np.int64)
    r_pos = np.asarray(r_pos, dtype=np.int64)
    seg = np.concatenate(seg)
    conditions = np.concatenate(conditions, axis=0)

    h_m = encode_batch(mol_pack, params, enc_cfg, train=backward, rng=rng)
    h_d = encode_batch(dec_pack, params, enc_cfg, train=backward, rng=rng)

    # L1: graph-level contrast, decomposed side stop-gradded
    z_gm = project_graph_t(readout_batch(h_m, mol_pack), params, enc_cfg)
    if stopped_cache is not None and "z_gd" in stopped_cache:
        z_gd = ad.Tensor(stopped_cache["z_gd"])
    else:
        z_gd = ad.stopgrad(project_graph_t(readout_batch(h_d, dec_pack),
                                           params, enc_cfg))
        if stopped_cache is not None:
            stopped_cache["z_gd"] = z_gd.data
    loss1 = info_nce(z_gm, z_gd, config.tau1)

    # L2: linker node vs masked stub pair (stub side stop-gradded)
    z_m = project_node_t(ad.gather(h_m, m_pos), params, enc_cfg)
    if stopped_cache is not None and "z_p" in stopped_cache:
        z_p = ad.Tensor(stopped_cache["z_p"])
    else:
        pair = ad.add(ad.gather(h_d, q_pos), ad.gather(h_d, r_pos))
        z_p = ad.stopgrad(project_node_t(pair, params, enc_cfg))
        if stopped_cache is not None:
            stopped_cache["z_p"] = z_p.data
    loss2 = info_nce(z_m, z_p, config.tau2)

    # L3: condition-augmented query stub vs decoupled R-group readout
    z_c = project_query_t(ad.gather(h_d, q_pos), conditions, params, enc_cfg)
    z_r = project_rgroup_t(ad.segment_mean(h_d, seg, n_cuts), params, enc_cfg)
    loss3 = info_nce(z_c, z_r, config.tau3)

    w1, w2, w3 = loss_weights
    total = ad.add(ad.add(ad.scale(loss1, w1), ad.scale(loss2, w2)),
                   ad.scale(loss3, w3))
    if backward:
        total.backward()
    return StepLosses(float(loss1.data), float(loss2.data), float(loss3.data),
                      float(total.data), len(instances), n_cuts, n_cuts)


# ---------------------------------------------------------------------------
# optimizer
# ---------------------------------------------------------------------------

class Adam:
    def __init__(self, params: ParameterStore, lr: float,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.t = 0
        self.m = {name: np.zeros_like(params[name].data)
                  for name in params.names()}
        self.v = {name: np.zeros_like(params[name].data)
                  for name in params.names()}

    def step(self) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        bias1 = 1.0 - b1 ** self.t
        bias2 = 1.0 - b2 ** self.t
        for name in self.params.names():
            tensor = self.params[name]
            if tensor.grad is None:
                continue
            g = tensor.grad
            self.m[name] = b1 * self.m[name] + (1 - b1) * g
            self.v[name] = b2 * self.v[name] + (1 - b2) * g * g
            mhat = self.m[name] / bias1
            vhat = self.v[name] / bias2
            tensor.data -= self.lr * mhat / (np.sqrt(vhat) + self.eps)


# ---------------------------------------------------------------------------
# pre-training loop
# ---------------------------------------------------------------------------

@dataclass
class EpochLog:
    epoch: int
    l1: float
    l2: float
    l3: float
    total: float
    val_total: float
    b1_mean: float
    b2_mean: float


def _epoch_batches(n: int, batch_size: int, rng: np.random.Generator):
    order = rng.permutation(n)
    for start in range(0, n, batch_size):
        yield order[start:start + batch_size]


def _eval_loss(instances: list[TrainInstance], params: ParameterStore,
               config: TrainConfig) -> float:
    total, count = 0.0, 0
    for start in range(0, len(instances), config.batch_size):
        batch = instances[start:start + config.batch_size]
        losses = pretrain_step(batch, params, config, backward=False)
        total += losses.total * len(batch)
        count += len(batch)
    return total / max(count, 1)


def pretrain(dataset: PretrainDataset, config: TrainConfig,
             out_dir: str | Path | None = None,
             callback=None) -> tuple[ParameterStore, list[EpochLog]]:
    """Adam over shuffled batches with per-epoch validation early stopping.
    The best-validation parameter snapshot is returned (and checkpointed when
    ``out_dir`` is given)."""
    train = [TrainInstance.from_record(r) for r in dataset.split("train")]
    valid = [TrainInstance.from_record(r) for r in dataset.split("valid")]
    if not train or not valid:
        raise ValueError("dataset needs non-empty train and valid splits")

    params = init_params(config.encoder_config())
    opt = Adam(params, lr=config.lr)
    history: list[EpochLog] = []
    best_val = float("inf")
    best_params = params.copy()
    best_epoch = -1
    bad_epochs = 0

    for epoch in range(config.max_epochs):
        rng = np.random.default_rng([config.seed, epoch])
        sums = np.zeros(4)
        n_seen = 0
        b1s, b2s = [], []
        for batch_idx in _epoch_batches(len(train), config.batch_size, rng):
            batch = [train[i] for i in batch_idx]
            params.zero_grad()
            losses = pretrain_step(batch, params, config, rng=rng)
            opt.step()
            sums += np.array([losses.l1, losses.l2, losses.l3,
                              losses.total]) * len(batch)
            n_seen += len(batch)
            b1s.append(losses.b1)
            b2s.append(losses.b2)
        val_total = _eval_loss(valid, params, config)
        entry = EpochLog(epoch, *(sums / n_seen), val_total,
                         float(np.mean(b1s)), float(np.mean(b2s)))
        history.append(entry)
        log.info("epoch %d train L=%.4f (L1=%.4f L2=%.4f L3=%.4f) val L=%.4f",
                 epoch, entry.total, entry.l1, entry.l2, entry.l3, val_total)
        if callback is not None:
            callback(entry)
        if val_total < best_val:
            best_val = val_total
            best_params = params.copy()
            best_epoch = epoch
            bad_epochs = 0
            if out_dir is not None:
                _persist(best_params, config, out_dir, history, best_epoch,
                         best_val)
        else:
            bad_epochs += 1
            if bad_epochs >= config.patience:
                break
    if out_dir is not None:
        _persist(best_params, config, out_dir, history, best_epoch, best_val)
    return best_params, history


def _persist(params: ParameterStore, config: TrainConfig, out_dir,
             history: list[EpochLog], best_epoch: int, best_val: float) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_checkpoint(out / "checkpoint.bin", params, config.encoder_config(),
                    extra={"best_epoch": best_epoch, "best_val": best_val,
                           "core_mode": config.core_mode})
    with open(out / "loss_curve.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["epoch", "L1", "L2", "L3", "L", "val_L", "B1_mean",
                    "B2_mean"])
        for e in history:
            w.writerow([e.epoch, f"{e.l1:.6f}", f"{e.l2:.6f}", f"{e.l3:.6f}",
                        f"{e.total:.6f}", f"{e.val_total:.6f}",
                        f"{e.b1_mean:.2f}", f"{e.b2_mean:.2f}"])


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------

def auroc(scores, labels) -> float:
    """Rank-based AUROC with average ranks on ties."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    pos = labels == 1
    n_pos, n_neg = int(pos.sum()), int((~pos).sum())
    if n_pos == 0 or n_neg == 0:
        return 0.5
    order = np.argsort(scores, kind="stable")
    ranks = np.empty(len(scores), dtype=np.float64)
    sorted_scores = scores[order]
    i = 0
    while i < len(scores):
        j = i
        while j + 1 < len(scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def rmse(pred, target) -> float:
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    return float(np.sqrt(np.mean((pred - target) ** 2)))


# ---------------------------------------------------------------------------
# fine-tuning
# ---------------------------------------------------------------------------

def _forward_property(graphs_pack: GraphBatch, params: ParameterStore,
                      head_w: ad.Tensor, head_b: ad.Tensor,
                      enc_cfg: EncoderConfig, *, train: bool,
                      rng=None, freeze: bool = False) -> ad.Tensor:
    h = encode_batch(graphs_pack, params, enc_cfg, train=train, rng=rng)
    if freeze:
        h = ad.stopgrad(h)
    pooled = readout_batch(h, graphs_pack)
    return ad.add(ad.matmul(pooled, head_w), head_b)


def finetune(pretrained: ParameterStore, enc_cfg: EncoderConfig,
             rows: list[tuple[str, float]], task_type: str,
             config: FinetuneConfig | None = None) -> dict:
    """Scaffold-split fine-tuning with a linear task head; returns the test
    metric (AUROC or RMSE) as mean/std over ``n_seeds`` runs."""
    config = config or FinetuneConfig()
    if task_type not in ("classification", "regression"):
        raise ValueError(f"unknown task type {task_type}")
    labels = np.array([float(lbl) for _, lbl in rows])
    if task_type == "classification" and not set(np.unique(labels)) <= {0.0, 1.0}:
        raise LabelError("classification labels must be binary 0/1")
    graphs = [parse_smiles(s) for s, _ in rows]
    split = scaffold_split(graphs, (8, 1, 1), config.seed)
    packs = [GraphBatch([g]) for g in graphs]
    idx = {name: [i for i, s in enumerate(split) if s == name]
           for name in ("train", "valid", "test")}
    if not idx["train"] or not idx["valid"] or not idx["test"]:
        raise ValueError("fine-tune split produced an empty partition")

    scores = []
    for run in range(config.n_seeds):
        scores.append(_finetune_once(pretrained, enc_cfg, packs, labels, idx,
                                     task_type, config, seed=config.seed + run))
    arr = np.array(scores)
    metric = "auroc" if task_type == "classification" else "rmse"
    return {"metric": metric, "mean": float(arr.mean()),
            "std": float(arr.std()), "runs": [float(s) for s in scores],
            "n_train": len(idx["train"]), "n_valid": len(idx["valid"]),
            "n_test": len(idx["test"])}


def _finetune_once(pretrained: ParameterStore, enc_cfg: EncoderConfig,
                   packs, labels, idx, task_type, config: FinetuneConfig,
                   seed: int) -> float:
    rng_init = np.random.default_rng(seed)
    params = pretrained.copy()
    d = enc_cfg.d
    head_w = params.add("task_head/W", rng_init.normal(0, 0.01, size=(d, 1)))
    head_b = params.add("task_head/b", np.zeros(1))
    enc_cfg = EncoderConfig(**{**enc_cfg.to_obj(), "dropout": config.dropout})
    opt = Adam(params, lr=config.lr)

    def eval_scores(which: str) -> np.ndarray:
        out = []
        for i in idx[which]:
            z = _forward_property(packs[i], params, head_w, head_b, enc_cfg,
                                  train=False)
            out.append(float(z.data[0, 0]))
        return np.array(out)

    def val_metric() -> float:
        preds = eval_scores("valid")
        y = labels[idx["valid"]]
        if task_type == "classification":
            return -auroc(preds, y)  # lower is better
        return rmse(preds, y)

    best = float("inf")
    best_state = {n: params[n].data.copy() for n in params.names()}
    bad = 0
    train_idx = np.array(idx["train"])
    for epoch in range(config.max_epochs):
        rng = np.random.default_rng([seed, epoch])
        order = rng.permutation(len(train_idx))
        for start in range(0, len(order), config.batch_size):
            chunk = train_idx[order[start:start + config.batch_size]]
            pack = _concat_packs([packs[i] for i in chunk])
            y = labels[chunk][:, None]
            params.zero_grad()
            z = _forward_property(pack, params, head_w, head_b, enc_cfg,
                                  train=True, rng=rng,
                                  freeze=config.freeze_encoder)
            if task_type == "classification":
                loss = ad.bce_with_logits(z, y)
            else:
                diff = ad.sub(z, ad.Tensor(y))
                loss = ad.mean_all(ad.mul(diff, diff))
            loss.backward()
            opt.step()
        m = val_metric()
        if m < best - 1e-12:
            best = m
            best_state = {n: params[n].data.copy() for n in params.names()}
            bad = 0
        else:
            bad += 1
            if bad >= config.patience:
                break
    for n in params.names():
        params[n].data[...] = best_state[n]
    preds = eval_scores("test")
    y = labels[idx["test"]]
    if task_type == "classification":
        return auroc(preds, y)
    return rmse(preds, y)
