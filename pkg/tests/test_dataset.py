import gzip
import json

import numpy as np
import pytest

from molpla.canon import canonical_key
from molpla.dataset import (DatasetConfig, build_pretrain_dataset,
                            common_threshold, dedup_rgroups, load_dataset,
                            save_dataset, scaffold_split)
from molpla.decompose import enumerate_decompositions, enumerate_putative_cores
from molpla.patterns import (CONDITION_BITS, bits_to_string, condition_vector,
                             default_registry)
from molpla.smiles import parse_smiles


def names_of(bits):
    reg = default_registry()
    return {reg.entries[i].name for i in range(CONDITION_BITS) if bits[i]}


class TestConditionVectors:
    def test_hydroxyl_only(self):
        bits = condition_vector(parse_smiles("*~O"))
        assert names_of(bits) == {"hydroxyl"}

    def test_benzoyl(self):
        bits = condition_vector(parse_smiles("*~C(=O)c1ccccc1"))
        assert {"carbonyl", "ketone", "aromatic_carbocycle"} <= names_of(bits)
        assert "hydroxyl" not in names_of(bits)

    def test_methyl_not_empty(self):
        bits = condition_vector(parse_smiles("*~C"))
        assert "any_carbon" in names_of(bits)

    def test_registry_audit_no_empty_vectors(self, small_dataset):
        for rec in small_dataset.rgroup_table:
            assert rec.condition.sum() >= 1, rec.key

    def test_length_fixed(self):
        assert condition_vector(parse_smiles("*~O")).size == CONDITION_BITS

    def test_registry_file_matches_code(self):
        from molpla.patterns import _build_default
        reg_file = default_registry()
        reg_code = _build_default()
        assert reg_file.version == reg_code.version
        assert reg_file.names() == reg_code.names()


class TestScaffoldSplit:
    def test_ten_singletons(self):
        mols = [parse_smiles(s) for s in (
            "c1ccccc1", "c1ccncc1", "c1ccoc1", "c1ccsc1", "C1CCCCC1",
            "C1CCNCC1", "C1CCOC1", "c1cnccn1", "c1ccc2ccccc2c1", "C1CCOCC1")]
        labels = scaffold_split(mols, (8, 1, 1), seed=0)
        counts = {x: labels.count(x) for x in set(labels)}
        assert counts == {"train": 8, "valid": 1, "test": 1}

    def test_groups_never_split(self):
        mols = [parse_smiles("Cc1ccccc1")] * 9 + [parse_smiles("CC1CCCCC1")]
        labels = scaffold_split(mols, (8, 1, 1), seed=0)
        assert len(set(labels[:9])) == 1

    def test_determinism(self, corpus_graphs):
        a = scaffold_split(corpus_graphs[:100], (8, 1, 1), seed=5)
        b = scaffold_split(corpus_graphs[:100], (8, 1, 1), seed=5)
        assert a == b

    def test_ratio_window(self, corpus_graphs):
        labels = scaffold_split(corpus_graphs, (8, 1, 1), seed=0)
        frac = labels.count("test") / len(labels)
        assert 0.08 <= frac <= 0.12

    def test_no_scaffold_crosses_splits(self, corpus_graphs):
        from molpla.decompose import murcko_scaffold
        labels = scaffold_split(corpus_graphs, (8, 1, 1), seed=0)
        seen: dict[str, str] = {}
        for g, label in zip(corpus_graphs, labels):
            key = canonical_key(murcko_scaffold(g))
            assert seen.setdefault(key, label) == label

    def test_no_molecule_crosses_splits(self, small_dataset):
        split_of: dict[int, str] = {}
        for rec in small_dataset.instances:
            assert split_of.setdefault(rec.mol_index, rec.split) == rec.split


class TestRGroupTable:
    def test_dedup_counts(self):
        g = parse_smiles("Oc1ccccc1O")
        core = next(atoms for cg, atoms in enumerate_putative_cores(g)
                    if canonical_key(cg) == canonical_key(parse_smiles("c1ccccc1")))
        insts = enumerate_decompositions(g, core)
        records = dedup_rgroups(insts)
        assert len(records) == 1  # both cuts give the same hydroxyl
        assert records[0].count == 4  # (2 singles) + (2 in the pair instance)

    def test_atom_order_insensitive(self):
        a = parse_smiles("*~OC")
        b = parse_smiles("CO~*")
        assert canonical_key(a) == canonical_key(b)

    def test_percentile_all_equal_none_common(self):
        assert common_threshold([3, 3, 3], 99.99) == 3.0
        # strict > threshold: nothing marked common

    def test_sum_counts_equals_occurrences(self, small_dataset):
        total = sum(r.count for r in small_dataset.rgroup_table)
        assert total == small_dataset.stats["rgroup_occurrences"]
        keys = [r.key for r in small_dataset.rgroup_table]
        assert len(keys) == len(set(keys))


class TestBuildPipeline:
    def test_acyclic_molecule_skipped(self):
        ds = build_pretrain_dataset(["CCCC"], DatasetConfig())
        assert ds.stats["instances"] == 0
        assert len(ds.skipped) == 1
        assert "acyclic" in ds.skipped[0]["reason"]

    def test_parse_errors_never_fatal(self):
        ds = build_pretrain_dataset(["C(", "Cc1ccccc1"], DatasetConfig())
        assert len(ds.skipped) == 1
        assert ds.stats["instances"] >= 1

    def test_common_filter_forced(self):
        # three molecules sharing one hydroxyl R-group; percentile 0 makes
        # every R-group common, so single-R instances are dropped
        corpus = ["Oc1ccccc1", "Oc1ccncc1", "Oc1ccccc1C"]
        ds0 = build_pretrain_dataset(corpus, DatasetConfig(common_percentile=0.0))
        for rec in ds0.rgroup_table:
            assert not rec.is_common or rec.count > 0
        # with percentile 0 the threshold is the min count; strictly-greater
        # marks every above-min R-group common
        ds = build_pretrain_dataset(corpus, DatasetConfig(common_percentile=0.0))
        hydroxyl_key = canonical_key(parse_smiles("*~O"))
        rec = next(r for r in ds.rgroup_table if r.key == hydroxyl_key)
        assert rec.is_common
        for inst in ds.instances:
            keys = inst.rgroup_keys
            n_common = sum(1 for k in keys
                           if next(r for r in ds.rgroup_table
                                   if r.key == k).is_common)
            assert 2 * n_common <= len(keys)

    def test_count_law_per_core(self, corpus):
        from molpla.decompose import identify_rgroups
        smi = corpus[3]
        g = parse_smiles(smi)
        for cg, atoms in enumerate_putative_cores(g):
            k = len(identify_rgroups(g, atoms))
            assert len(enumerate_decompositions(g, atoms)) == 2 ** k - 1

    def test_determinism(self, corpus):
        a = build_pretrain_dataset(corpus[:30], DatasetConfig())
        b = build_pretrain_dataset(corpus[:30], DatasetConfig())
        assert [r.to_obj() for r in a.instances] == [r.to_obj() for r in b.instances]
        assert [r.to_obj() for r in a.rgroup_table] == [r.to_obj() for r in b.rgroup_table]


class TestPersistence:
    def test_save_load_round_trip(self, small_dataset, tmp_path):
        save_dataset(small_dataset, tmp_path)
        back = load_dataset(tmp_path)
        assert len(back.instances) == len(small_dataset.instances)
        assert [r.key for r in back.rgroup_table] == \
            [r.key for r in small_dataset.rgroup_table]
        assert back.config == small_dataset.config

    def test_byte_identical_reruns(self, corpus, tmp_path):
        ds1 = build_pretrain_dataset(corpus[:25], DatasetConfig())
        ds2 = build_pretrain_dataset(corpus[:25], DatasetConfig())
        save_dataset(ds1, tmp_path / "a")
        save_dataset(ds2, tmp_path / "b")
        for name in ("train.jsonl.gz", "valid.jsonl.gz", "test.jsonl.gz",
                     "rgroups.jsonl.gz", "manifest.json", "stats.json"):
            assert (tmp_path / "a" / name).read_bytes() == \
                (tmp_path / "b" / name).read_bytes(), name

    def test_manifest_contents(self, small_dataset, tmp_path):
        save_dataset(small_dataset, tmp_path)
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["registry_version"] == 1
        assert "config_hash" in manifest
        with gzip.open(tmp_path / "train.jsonl.gz", "rt") as f:
            row = json.loads(f.readline())
        for field in ("mol", "query", "rgroups", "cuts", "linker_map",
                      "conditions", "rgroup_keys", "split"):
            assert field in row
