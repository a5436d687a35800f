"""Corpus pre-processing: core extraction, decomposition, R-group table with
common-R filtering, condition vectors, scaffold splits and persistence.

Dataset files are gzipped line-JSON (one per split) plus an R-group table
and a manifest carrying the config hash and registry version; gzip members
are written with mtime=0 so reruns are byte-identical.
"""

from __future__ import annotations

import gzip
import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .canon import canonical_key
from .decompose import (DecompositionInstance, NoRingError, RuleSet,
                        enumerate_decompositions, enumerate_putative_cores,
                        murcko_scaffold)
from .graph import MolGraph
from .patterns import (PatternRegistry, bits_to_string, default_registry,
                       string_to_bits)
from .smiles import SmilesSyntaxError, ValenceError, parse_smiles

log = logging.getLogger(__name__)

FORMAT_VERSION = 1


@dataclass(frozen=True)
class DatasetConfig:
    max_cores: int = 10
    min_core_atoms: int = 4
    common_percentile: float = 99.99
    ratios: tuple[float, float, float] = (8.0, 1.0, 1.0)
    seed: int = 7
    core_mode: str = "putative"  # or "murcko"

    def to_obj(self) -> dict:
        return {
            "max_cores": self.max_cores,
            "min_core_atoms": self.min_core_atoms,
            "common_percentile": self.common_percentile,
            "ratios": list(self.ratios),
            "seed": self.seed,
            "core_mode": self.core_mode,
        }

    def hash(self) -> str:
        text = json.dumps(self.to_obj(), sort_keys=True)
        return hashlib.sha256(text.encode()).hexdigest()[:16]


@dataclass
class RGroupRecord:
    key: str
    smiles: str
    count: int
    condition: np.ndarray
    is_common: bool = False

    def to_obj(self) -> dict:
        return {"key": self.key, "smiles": self.smiles, "count": self.count,
                "condition": bits_to_string(self.condition),
                "is_common": self.is_common}

    @staticmethod
    def from_obj(obj: dict) -> "RGroupRecord":
        return RGroupRecord(obj["key"], obj["smiles"], obj["count"],
                            string_to_bits(obj["condition"]), obj["is_common"])


@dataclass
class InstanceRecord:
    """One serialized decomposition instance plus its training annotations."""
    obj: dict  # decompose-module schema
    mol_index: int
    split: str
    rgroup_keys: list[str]
    conditions: list[np.ndarray]

    def to_obj(self) -> dict:
        out = dict(self.obj)
        out["mol_index"] = self.mol_index
        out["split"] = self.split
        out["rgroup_keys"] = self.rgroup_keys
        out["conditions"] = [bits_to_string(c) for c in self.conditions]
        return out

    @staticmethod
    def from_obj(obj: dict) -> "InstanceRecord":
        base = {k: obj[k] for k in ("mol", "core_id", "subset_id", "query",
                                    "rgroups", "cuts", "linker_map")}
        return InstanceRecord(base, obj["mol_index"], obj["split"],
                              obj["rgroup_keys"],
                              [string_to_bits(s) for s in obj["conditions"]])


@dataclass
class PretrainDataset:
    config: DatasetConfig
    instances: list[InstanceRecord]
    rgroup_table: list[RGroupRecord]
    split_of_molecule: dict[int, str]
    stats: dict
    skipped: list[dict] = field(default_factory=list)
    registry_version: int = 0

    def split(self, name: str) -> list[InstanceRecord]:
        return [r for r in self.instances if r.split == name]

    def rgroup_by_key(self) -> dict[str, RGroupRecord]:
        return {r.key: r for r in self.rgroup_table}


# ---------------------------------------------------------------------------
# splits
# ---------------------------------------------------------------------------

def scaffold_split(molecules: list[MolGraph], ratios=(8.0, 1.0, 1.0),
                   seed: int = 0) -> list[str]:
    """Group molecules by Murcko-scaffold key, sort groups by size descending
    (ties by key), then fill train, valid, test greedily to the ratios.
    Whole groups never split. Fully deterministic (the seed is accepted for
    interface stability; group order leaves it nothing to decide)."""
    del seed
    total = len(molecules)
    if total == 0:
        return []
    norm = float(sum(ratios))
    groups: dict[str, list[int]] = {}
    for i, mol in enumerate(molecules):
        scaffold = murcko_scaffold(mol)
        key = canonical_key(scaffold) if scaffold.n_atoms else "<acyclic>"
        groups.setdefault(key, []).append(i)
    ordered = sorted(groups.items(), key=lambda kv: (-len(kv[1]), kv[0]))

    train_quota = total * ratios[0] / norm
    valid_quota = total * (ratios[0] + ratios[1]) / norm
    labels = [""] * total
    assigned = 0
    for _, members in ordered:
        if assigned < train_quota:
            name = "train"
        elif assigned < valid_quota:
            name = "valid"
        else:
            name = "test"
        for i in members:
            labels[i] = name
        assigned += len(members)
    return labels


# ---------------------------------------------------------------------------
# R-group table
# ---------------------------------------------------------------------------

def common_threshold(counts: list[int], percentile: float) -> float:
    """Count value above which an R-group is 'common': the percentile over
    the distinct R-groups' counts. With all-equal counts nothing exceeds
    the threshold."""
    if not counts:
        return float("inf")
    return float(np.percentile(np.asarray(counts, dtype=np.float64), percentile))


def dedup_rgroups(instances: list[DecompositionInstance],
                  registry: PatternRegistry | None = None,
                  percentile: float = 99.99) -> list[RGroupRecord]:
    """Aggregate decoupled R-groups by canonical key. Spec interface; the
    dataset builder uses the same logic inline for speed."""
    registry = registry or default_registry()
    counts: dict[str, int] = {}
    graphs: dict[str, MolGraph] = {}
    for inst in instances:
        for rg in inst.rgroups:
            key = canonical_key(rg)
            counts[key] = counts.get(key, 0) + 1
            graphs.setdefault(key, rg)
    return _make_records(counts, graphs, registry, percentile)


def _make_records(counts: dict[str, int], graphs: dict[str, MolGraph],
                  registry: PatternRegistry, percentile: float) -> list[RGroupRecord]:
    from .smiles import write_smiles
    threshold = common_threshold(list(counts.values()), percentile)
    records = []
    for key in sorted(counts):
        g = graphs[key]
        records.append(RGroupRecord(
            key=key, smiles=write_smiles(g), count=counts[key],
            condition=registry.condition_vector(g),
            is_common=counts[key] > threshold))
    return records


# ---------------------------------------------------------------------------
# pipeline
# ---------------------------------------------------------------------------

def build_pretrain_dataset(corpus: list[str], config: DatasetConfig | None = None,
                           registry: PatternRegistry | None = None
                           ) -> PretrainDataset:
    """Full pre-processing pipeline over a list of SMILES strings."""
    config = config or DatasetConfig()
    registry = registry or default_registry()
    rules = RuleSet(min_core_atoms=config.min_core_atoms)

    molecules: list[MolGraph | None] = []
    skipped: list[dict] = []
    for idx, smi in enumerate(corpus):
        try:
            molecules.append(parse_smiles(smi))
        except (SmilesSyntaxError, ValenceError) as exc:
            molecules.append(None)
            skipped.append({"index": idx, "smiles": smi, "reason": str(exc)})
            log.warning("skipping molecule %d (%s): %s", idx, smi, exc)

    # decomposition per molecule
    per_mol_instances: dict[int, list[DecompositionInstance]] = {}
    core_count_hist: dict[int, int] = {}
    core_key_counts: dict[str, int] = {}
    pairs_total = 0
    for idx, mol in enumerate(molecules):
        if mol is None:
            continue
        if not mol.is_connected():
            skipped.append({"index": idx, "smiles": corpus[idx],
                            "reason": "disconnected molecule"})
            molecules[idx] = None
            continue
        try:
            if config.core_mode == "murcko":
                scaffold, atoms = _murcko_core(mol)
                cores = [(scaffold, atoms)]
            else:
                cores = enumerate_putative_cores(mol, rules, config.max_cores)
        except NoRingError:
            skipped.append({"index": idx, "smiles": corpus[idx],
                            "reason": "acyclic molecule"})
            continue
        core_count_hist[len(cores)] = core_count_hist.get(len(cores), 0) + 1
        pairs_total += len(cores)
        insts = []
        for core_id, (core_g, core_atoms) in enumerate(cores):
            core_key_counts[canonical_key(core_g)] = (
                core_key_counts.get(canonical_key(core_g), 0) + 1)
            insts.extend(enumerate_decompositions(mol, core_atoms, core_id=core_id))
        per_mol_instances[idx] = insts

    # R-group table over every decoupled R-group occurrence
    counts: dict[str, int] = {}
    graphs: dict[str, MolGraph] = {}
    inst_keys: dict[int, list[list[str]]] = {}
    for idx, insts in per_mol_instances.items():
        keys_per_inst = []
        for inst in insts:
            keys = [canonical_key(rg) for rg in inst.rgroups]
            keys_per_inst.append(keys)
            for k, rg in zip(keys, inst.rgroups):
                counts[k] = counts.get(k, 0) + 1
                graphs.setdefault(k, rg)
        inst_keys[idx] = keys_per_inst
    records = _make_records(counts, graphs, registry, config.common_percentile)
    by_key = {r.key: r for r in records}

    # common-R filter: drop instances with strictly more than half common
    split_labels = scaffold_split(
        [m for m in molecules if m is not None], config.ratios, config.seed)
    label_of: dict[int, str] = {}
    li = 0
    for idx, mol in enumerate(molecules):
        if mol is not None:
            label_of[idx] = split_labels[li]
            li += 1

    instances: list[InstanceRecord] = []
    n_dropped_common = 0
    for idx in sorted(per_mol_instances):
        for inst, keys in zip(per_mol_instances[idx], inst_keys[idx]):
            n_common = sum(1 for k in keys if by_key[k].is_common)
            if 2 * n_common > len(keys):
                n_dropped_common += 1
                continue
            instances.append(InstanceRecord(
                obj=inst.to_obj(), mol_index=idx, split=label_of[idx],
                rgroup_keys=keys,
                conditions=[by_key[k].condition for k in keys]))

    th = common_threshold(list(counts.values()), config.common_percentile)
    stats = {
        "n_corpus": len(corpus),
        "n_parsed": sum(1 for m in molecules if m is not None),
        "n_skipped": len(skipped),
        "mol_core_pairs": pairs_total,
        "core_count_hist": {str(k): v for k, v in sorted(core_count_hist.items())},
        "core_count_median": _median(core_count_hist),
        "instances_before_filter": sum(len(v) for v in per_mol_instances.values()),
        "instances_dropped_common": n_dropped_common,
        "instances": len(instances),
        "rgroup_occurrences": sum(counts.values()),
        "rgroups_distinct": len(records),
        "common_threshold": th if th != float("inf") else None,
        "n_common": sum(1 for r in records if r.is_common),
        "top_cores": sorted(core_key_counts.items(),
                            key=lambda kv: (-kv[1], kv[0]))[:20],
        "top_rgroups": sorted(((r.key, r.count) for r in records),
                              key=lambda kv: (-kv[1], kv[0]))[:20],
        "split_counts": {name: sum(1 for r in instances if r.split == name)
                         for name in ("train", "valid", "test")},
        "split_molecules": {name: sum(1 for v in label_of.values() if v == name)
                            for name in ("train", "valid", "test")},
    }
    return PretrainDataset(config=config, instances=instances,
                           rgroup_table=records, split_of_molecule=label_of,
                           stats=stats, skipped=skipped,
                           registry_version=registry.version)


def _murcko_core(mol: MolGraph):
    from .decompose import murcko_scaffold_atoms
    scaffold, atoms = murcko_scaffold_atoms(mol)
    if scaffold.n_atoms == 0:
        raise NoRingError("acyclic molecule")
    return scaffold, frozenset(atoms)


def _median(hist: dict[int, int]) -> float | None:
    values = []
    for k, v in sorted(hist.items()):
        values.extend([k] * v)
    if not values:
        return None
    return float(np.median(values))


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

def _gzip_lines(path: Path, lines: list[str]) -> None:
    with open(path, "wb") as raw:
        with gzip.GzipFile(fileobj=raw, mode="wb", mtime=0) as f:
            for line in lines:
                f.write(line.encode())
                f.write(b"\n")


def _read_gzip_lines(path: Path) -> list[str]:
    with gzip.open(path, "rt") as f:
        return [line.rstrip("\n") for line in f if line.strip()]


def save_dataset(ds: PretrainDataset, out_dir: str | Path) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name in ("train", "valid", "test"):
        lines = [json.dumps(r.to_obj(), sort_keys=True, separators=(",", ":"))
                 for r in ds.split(name)]
        _gzip_lines(out / f"{name}.jsonl.gz", lines)
    _gzip_lines(out / "rgroups.jsonl.gz",
                [json.dumps(r.to_obj(), sort_keys=True, separators=(",", ":"))
                 for r in ds.rgroup_table])
    with open(out / "stats.json", "w") as f:
        json.dump(ds.stats, f, indent=1, sort_keys=True)
    manifest = {
        "format_version": FORMAT_VERSION,
        "config": ds.config.to_obj(),
        "config_hash": ds.config.hash(),
        "registry_version": ds.registry_version,
        "counts": {name: len(ds.split(name)) for name in ("train", "valid", "test")},
        "n_rgroups": len(ds.rgroup_table),
        "n_skipped": len(ds.skipped),
    }
    with open(out / "manifest.json", "w") as f:
        json.dump(manifest, f, indent=1, sort_keys=True)
    if ds.skipped:
        with open(out / "skipped.json", "w") as f:
            json.dump(ds.skipped, f, indent=1, sort_keys=True)


def load_dataset(out_dir: str | Path) -> PretrainDataset:
    out = Path(out_dir)
    with open(out / "manifest.json") as f:
        manifest = json.load(f)
    config = DatasetConfig(**{**DatasetConfig().to_obj(), **manifest["config"],
                              "ratios": tuple(manifest["config"]["ratios"])})
    instances = []
    split_of_molecule: dict[int, str] = {}
    for name in ("train", "valid", "test"):
        for line in _read_gzip_lines(out / f"{name}.jsonl.gz"):
            rec = InstanceRecord.from_obj(json.loads(line))
            instances.append(rec)
            split_of_molecule[rec.mol_index] = rec.split
    rgroups = [RGroupRecord.from_obj(json.loads(line))
               for line in _read_gzip_lines(out / "rgroups.jsonl.gz")]
    stats = {}
    stats_path = out / "stats.json"
    if stats_path.exists():
        with open(stats_path) as f:
            stats = json.load(f)
    return PretrainDataset(config=config, instances=instances,
                           rgroup_table=rgroups,
                           split_of_molecule=split_of_molecule, stats=stats,
                           registry_version=manifest["registry_version"])


def dataset_hash(out_dir: str | Path) -> str:
    """Hash of the split files + R-group table (cache invalidation key)."""
    h = hashlib.sha256()
    out = Path(out_dir)
    for name in ("train.jsonl.gz", "valid.jsonl.gz", "test.jsonl.gz",
                 "rgroups.jsonl.gz"):
        h.update((out / name).read_bytes())
    return h.hexdigest()[:16]
