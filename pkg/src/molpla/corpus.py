"""Deterministic synthetic corpus of drug-like molecules.

Molecules are assembled from ring scaffolds plus substituent fragments on
our own graph representation, so every emitted SMILES parses back and is
valence-clean by construction. Substituent popularity is skewed so the
common-R-group filter has something to do. Also generates the 200-molecule
classification task whose planted label (presence of an in-ring nitrogen)
correlates with scaffold family yet transfers across held-out scaffolds.
"""

from __future__ import annotations

import numpy as np

from .canon import canonical_key
from .graph import BondAttrs, MolGraph
from .rings import ring_info
from .smiles import derive_attributes, parse_smiles, write_smiles
from .vocab import BOND_SINGLE

SCAFFOLDS = [
    "c1ccccc1",            # benzene
    "n1ccccc1",            # pyridine
    "c1ccncn1",            # pyrimidine
    "c1cnccn1",            # pyrazine
    "c1ccoc1",             # furan
    "c1ccsc1",             # thiophene
    "c1ccc2ccccc2c1",      # naphthalene
    "c1ccc2ncccc2c1",      # quinoline
    "C1CCCCC1",            # cyclohexane
    "C1CCCC1",             # cyclopentane
    "C1CCNCC1",            # piperidine
    "C1COCCN1",            # morpholine
    "C1CNCCN1",            # piperazine
    "C1CCOCC1",            # tetrahydropyran
    "C1CCOC1",             # tetrahydrofuran
    "O=C1CCCCC1",          # cyclohexanone
    "c1ccc2occc2c1",       # benzofuran
    "C1Cc2ccccc2C1",       # indane
    "c1ccc(-c2ccccc2)cc1", # biphenyl
    "C1CCN(c2ccccc2)CC1",  # phenylpiperidine
    "c1ccc2c(c1)OCO2",     # benzodioxole
    "c1ccnnc1",            # pyridazine
    "c1cscn1",             # thiazole
    "c1cocn1",             # oxazole
]

# fragment SMILES; atom 0 is the attachment root (loses one H on attach)
FRAGMENTS = [
    "C", "CC", "CCC", "C(C)C", "O", "OC", "OCC", "N", "N(C)C", "F", "Cl",
    "Br", "C(=O)C", "C(=O)O", "C(=O)OC", "C(=O)N", "C#N", "C(F)(F)F",
    "[N+](=O)[O-]", "S", "SC", "C=C", "CCO", "c1ccccc1", "Cc1ccccc1",
    "C(=O)c1ccco1", "N1CCCCC1", "N1CCOCC1", "S(C)(=O)=O", "OC(F)(F)F",
    "OCc1ccccc1", "NC(=O)C", "C1CCCC1", "c1ccncc1", "S(=O)(=O)N",
    "CN", "OCCO", "C(=O)NC", "CC(F)(F)F", "Oc1ccccc1",
    "OC(C)C", "NCC", "CNC", "C(=O)OCC", "OC(=O)C", "NS(C)(=O)=O",
    "C#CC", "C=CC", "OCC(F)(F)F", "C1CCNCC1", "c1ccsc1", "Cc1ccco1",
    "Cc1ccncc1", "NC(=O)c1ccccc1", "Oc1ccc(F)cc1", "OCc1ccncc1",
]


def attach(base: MolGraph, site: int, fragment: MolGraph, root: int = 0) -> MolGraph:
    """Join fragment's root to base's site with a single bond, consuming one
    hydrogen on each side where available."""
    merged, offsets = MolGraph.union([base, fragment])
    atoms = list(merged.atoms)
    froot = offsets[1] + root
    for idx in (site, froot):
        a = atoms[idx]
        if (a.num_explicit_hs or 0) > 0:
            atoms[idx] = a.replace(num_explicit_hs=a.num_explicit_hs - 1)
    bonds = list(merged.bonds) + [(site, froot, BondAttrs(BOND_SINGLE))]
    return derive_attributes(MolGraph(atoms, bonds))


def open_sites(g: MolGraph) -> list[int]:
    """Ring atoms with at least one hydrogen to give up."""
    info = ring_info(g)
    return [i for i, a in enumerate(g.atoms)
            if info.atom_in_ring[i] and (a.num_explicit_hs or 0) >= 1]


def _fragment_weights(n: int) -> np.ndarray:
    w = 1.0 / np.arange(1, n + 1) ** 0.7  # Zipf-ish popularity skew
    return w / w.sum()


def generate_corpus(n: int = 500, seed: int = 20240) -> list[str]:
    """n unique molecules as SMILES lines."""
    rng = np.random.default_rng(seed)
    scaffolds = [parse_smiles(s) for s in SCAFFOLDS]
    weights = _fragment_weights(len(FRAGMENTS))
    fragments = [parse_smiles(s) for s in FRAGMENTS]

    out: list[str] = []
    seen: set[str] = set()
    attempt = 0
    while len(out) < n:
        scaffold = scaffolds[attempt % len(scaffolds)]
        attempt += 1
        n_subs = int(rng.choice([1, 2, 3], p=[0.30, 0.42, 0.28]))
        mol = scaffold
        ok = True
        for _ in range(n_subs):
            sites = open_sites(mol)
            if not sites:
                ok = False
                break
            site = int(sites[rng.integers(len(sites))])
            frag = fragments[int(rng.choice(len(fragments), p=weights))]
            mol = attach(mol, site, frag)
        if not ok:
            continue
        key = canonical_key(mol)
        if key in seen:
            continue
        seen.add(key)
        out.append(write_smiles(mol))
    return out


def _has_ring_nitrogen(g: MolGraph) -> bool:
    info = ring_info(g)
    return any(a.atomic_number == 7 and info.atom_in_ring[i]
               for i, a in enumerate(g.atoms))


def generate_task(n: int = 200, seed: int = 777) -> list[tuple[str, int]]:
    """(smiles, label) rows; label 1 iff the molecule has an in-ring
    nitrogen. Families are balanced so scaffold-held-out splits still carry
    both classes."""
    rng = np.random.default_rng(seed)
    scaffolds = [parse_smiles(s) for s in SCAFFOLDS]
    weights = _fragment_weights(len(FRAGMENTS))
    fragments = [parse_smiles(s) for s in FRAGMENTS]

    per_family = -(-n // len(scaffolds))
    rows: list[tuple[str, int]] = []
    seen: set[str] = set()
    for scaffold in scaffolds:
        made = 0
        guard = 0
        while made < per_family and guard < 200:
            guard += 1
            mol = scaffold
            for _ in range(int(rng.choice([1, 2], p=[0.5, 0.5]))):
                sites = open_sites(mol)
                if not sites:
                    break
                site = int(sites[rng.integers(len(sites))])
                frag = fragments[int(rng.choice(len(fragments), p=weights))]
                mol = attach(mol, site, frag)
            key = canonical_key(mol)
            if key in seen:
                continue
            seen.add(key)
            rows.append((write_smiles(mol), int(_has_ring_nitrogen(mol))))
            made += 1
    return rows[:n]
