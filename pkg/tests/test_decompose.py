import pytest

from molpla.canon import canonical_key
from molpla.decompose import (EmptySubsetError, MultiAttachmentError,
                              NoRingError, decompose, enumerate_decompositions,
                              enumerate_putative_cores, identify_rgroups,
                              murcko_scaffold, remerge)
from molpla.smiles import parse_smiles


def key(smi):
    return canonical_key(parse_smiles(smi))


def test_murcko_toluene_is_benzene():
    assert canonical_key(murcko_scaffold(parse_smiles("Cc1ccccc1"))) == key("c1ccccc1")


def test_murcko_benzene_fixpoint():
    assert canonical_key(murcko_scaffold(parse_smiles("c1ccccc1"))) == key("c1ccccc1")


def test_murcko_acyclic_empty():
    assert murcko_scaffold(parse_smiles("CCCC")).n_atoms == 0


def test_murcko_keeps_linkers():
    g = parse_smiles("c1ccccc1CCc1ccncc1")
    scaffold = murcko_scaffold(g)
    assert scaffold.n_atoms == 14  # both rings plus the 2-carbon linker


def test_cores_benzene_single():
    cores = enumerate_putative_cores(parse_smiles("c1ccccc1"))
    assert len(cores) == 1
    assert canonical_key(cores[0][0]) == key("c1ccccc1")


def test_cores_toluene():
    cores = enumerate_putative_cores(parse_smiles("Cc1ccccc1"))
    keys = {canonical_key(c) for c, _ in cores}
    assert keys == {key("c1ccccc1"), key("Cc1ccccc1")}


def test_cores_acyclic_raises():
    with pytest.raises(NoRingError):
        enumerate_putative_cores(parse_smiles("CCCC"))


def test_cores_properties(corpus, rng):
    from molpla.decompose import extract_fragment
    from molpla.rings import ring_info
    for smi in corpus[:40]:
        g = parse_smiles(smi)
        cores = enumerate_putative_cores(g)
        assert 1 <= len(cores) <= 10
        murcko_key = canonical_key(murcko_scaffold(g))
        assert murcko_key in {canonical_key(c) for c, _ in cores}
        for core_g, atoms in cores:
            sub, _ = g.subgraph(atoms)
            assert sub.is_connected()
            assert ring_info(sub).n_rings >= 1
            assert canonical_key(extract_fragment(g, atoms)) == canonical_key(core_g)


def test_core_cap_and_determinism():
    smi = "CCOC(=O)c1ccc(NC(=O)Cc2ccco2)cc1OCC(=O)NC"
    g = parse_smiles(smi)
    a = enumerate_putative_cores(g)
    b = enumerate_putative_cores(g)
    assert len(a) <= 10
    assert [canonical_key(x) for x, _ in a] == [canonical_key(x) for x, _ in b]


def test_identify_rgroups_toluene():
    g = parse_smiles("Cc1ccccc1")
    core = next(atoms for cg, atoms in enumerate_putative_cores(g)
                if canonical_key(cg) == key("c1ccccc1"))
    branches = identify_rgroups(g, core)
    assert len(branches) == 1
    atoms, (u, v) = branches[0]
    assert len(atoms) == 1 and u in core and v in atoms


def test_identify_rgroups_core_is_whole():
    g = parse_smiles("c1ccccc1")
    assert identify_rgroups(g, frozenset(range(6))) == []


def test_identify_rgroups_three_branches():
    g = parse_smiles("Cc1cc(O)cc(N)c1")
    core = next(atoms for cg, atoms in enumerate_putative_cores(g)
                if canonical_key(cg) == key("c1ccccc1"))
    assert len(identify_rgroups(g, core)) == 3


def test_multi_attachment_rejected():
    g = parse_smiles("C1CCC2(CC1)CCCC2")  # spiro: pick a bad "core"
    # core = one ring minus the spiro atom: branch reattaches twice
    from molpla.rings import ring_info
    info = ring_info(g)
    ring0 = set(info.rings[0])
    spiro = next(i for i in range(g.n_atoms)
                 if sum(i in r for r in (set(info.rings[0]), set(info.rings[1]))) == 2)
    bad_core = frozenset(ring0 - {spiro})
    with pytest.raises(MultiAttachmentError):
        identify_rgroups(g, bad_core)


def test_decompose_single_branch_toluene():
    g = parse_smiles("Cc1ccccc1")
    core = next(atoms for cg, atoms in enumerate_putative_cores(g)
                if canonical_key(cg) == key("c1ccccc1"))
    inst = decompose(g, core, {0})
    assert canonical_key(inst.query_template) == key("*~c1ccccc1")
    assert len(inst.rgroups) == 1
    assert canonical_key(inst.rgroups[0]) == key("*~C")
    assert inst.cuts[0].linker_node_m == inst.cuts[0].core_atom


def test_decompose_empty_subset():
    g = parse_smiles("Cc1ccccc1")
    core = enumerate_putative_cores(g)[0][1]
    with pytest.raises(EmptySubsetError):
        decompose(g, core, set())


def test_count_law():
    g = parse_smiles("Cc1cc(O)cc(N)c1")
    core = next(atoms for cg, atoms in enumerate_putative_cores(g)
                if canonical_key(cg) == key("c1ccccc1"))
    insts = enumerate_decompositions(g, core)
    assert len(insts) == 7  # k=3 case
    subset_ids = sorted(i.subset_id for i in insts)
    assert subset_ids == list(range(1, 8))


def test_partition_and_mask_invariants(corpus):
    for smi in corpus[:25]:
        g = parse_smiles(smi)
        for core_id, (cg, atoms) in enumerate(enumerate_putative_cores(g)):
            for inst in enumerate_decompositions(g, atoms, core_id=core_id):
                q = inst.query_template
                non_stub_q = sum(1 for a in q.atoms if not a.is_stub)
                non_stub_r = sum(1 for rg in inst.rgroups
                                 for a in rg.atoms if not a.is_stub)
                assert non_stub_q + non_stub_r == g.n_atoms
                assert len(q.stub_indices()) == len(inst.cuts)
                for rg in inst.rgroups:
                    assert len(rg.stub_indices()) == 1
                    masked = [b for _, _, b in rg.bonds if b.is_masked]
                    assert len(masked) == 1
                # stubs and masked bonds only at cut sites
                masked_q = [b for _, _, b in q.bonds if b.is_masked]
                assert len(masked_q) == len(inst.cuts)


def test_remerge_round_trip(corpus):
    for smi in corpus[:25]:
        g = parse_smiles(smi)
        for core_id, (cg, atoms) in enumerate(enumerate_putative_cores(g)):
            for inst in enumerate_decompositions(g, atoms, core_id=core_id):
                assert canonical_key(remerge(inst)) == canonical_key(g)


def test_serialization_schema():
    g = parse_smiles("Cc1cc(O)cc(N)c1")
    core = next(atoms for cg, atoms in enumerate_putative_cores(g)
                if canonical_key(cg) == key("c1ccccc1"))
    inst = enumerate_decompositions(g, core)[2]
    obj = inst.to_obj()
    for field in ("mol", "core_id", "subset_id", "query", "rgroups", "cuts",
                  "linker_map"):
        assert field in obj
    q = parse_smiles(obj["query"])
    for m_idx, q_stub, _ in obj["linker_map"]:
        assert q.atoms[q_stub].is_stub
        mol = parse_smiles(obj["mol"])
        assert not mol.atoms[m_idx].is_stub
    for cut, (m_idx, _, _) in zip(obj["cuts"], obj["linker_map"]):
        assert cut["core_atom"] == m_idx
