import pytest

from molpla.match import Pattern, has_match, match_pattern
from molpla.smiles import parse_smiles

from .oracles import brute_force_matches

HYDROXYL = Pattern.from_smiles("O", {0: {"min_h": 1, "max_degree": 1}}, "hydroxyl")
BENZENE = Pattern.from_smiles("c1ccccc1", name="benzene")
CARBONYL = Pattern.from_smiles("C=O", name="carbonyl")


def test_hydroxyl_in_ethanol():
    assert match_pattern(parse_smiles("CCO"), HYDROXYL) == [(2,)]


def test_benzene_in_toluene():
    matches = match_pattern(parse_smiles("Cc1ccccc1"), BENZENE)
    assert len(matches) == 12  # 6 rotations x 2 reflections
    assert len({frozenset(m) for m in matches}) == 1


def test_carbonyl_absent():
    assert match_pattern(parse_smiles("CCO"), CARBONYL) == []


def test_monomorphism_fused_rings():
    # pattern edges must exist; extra target edges are allowed
    assert has_match(parse_smiles("c1ccc2ccccc2c1"), BENZENE)


@pytest.mark.parametrize("target,pattern", [
    ("CCO", HYDROXYL),
    ("Cc1ccccc1", BENZENE),
    ("CC(=O)OC", Pattern.from_smiles("C(=O)OC")),
    ("CC(=O)N", Pattern.from_smiles("NC=O")),
    ("OCC(O)CO", HYDROXYL),
    ("C1CC1C#N", Pattern.from_smiles("C#N")),
    ("c1ccoc1C", Pattern.from_smiles("o", {0: {"in_ring": True}})),
])
def test_against_brute_force(target, pattern):
    g = parse_smiles(target)
    assert g.n_atoms <= 12
    assert match_pattern(g, pattern) == brute_force_matches(g, pattern)


def test_wildcard_atom():
    p = Pattern.from_smiles("O=*")  # carbonyl-ish with wildcard partner
    assert has_match(parse_smiles("CC(C)=O"), p)
    assert has_match(parse_smiles("CS(C)=O"), p)
    assert not has_match(parse_smiles("CCO"), p)


def test_constraints_conjunctive():
    secondary_amine = Pattern.from_smiles("N", {0: {"h_count": 1, "degree": 2}})
    assert has_match(parse_smiles("CNC"), secondary_amine)
    assert not has_match(parse_smiles("CN(C)C"), secondary_amine)
    assert not has_match(parse_smiles("CN"), secondary_amine)


def test_deterministic_order():
    g = parse_smiles("OCCO")
    m1 = match_pattern(g, HYDROXYL)
    m2 = match_pattern(g, HYDROXYL)
    assert m1 == m2 == sorted(m1)


def test_pattern_requires_connected():
    with pytest.raises(ValueError):
        Pattern.from_smiles("C.C")
