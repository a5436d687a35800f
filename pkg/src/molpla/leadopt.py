"""Re-attachment of retrieved R-groups, PCA node coloring and descriptor
reporting: the lead-optimization end of the pipeline.

Re-attachment deletes the masked stub pair, bonds the two boundary atoms and
enumerates the severed bond's unmasked attributes (single/double/triple, or
aromatic when both endpoints are aromatic ring atoms), lowering hydrogen
counts minimally where a valence would overflow. Only valence-clean,
connected candidates survive.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import vocab
from .canon import canonical_key
from .encoder import EncoderConfig, ParameterStore, encode
from .graph import BondAttrs, MolGraph
from .rings import ring_info
from .smiles import derive_attributes, write_smiles
from .valence import allowed_valences, valence_check


class NoStubError(ValueError):
    """Re-attachment needs a masked stub on each fragment."""


class DegenerateError(ValueError):
    """All node representations identical; kept for API compatibility (the
    implemented convention returns all-zero scores instead of raising)."""


@dataclass
class ReattachmentCandidate:
    molecule: MolGraph
    filled_bond: BondAttrs
    source_rgroup_key: str
    valid: bool
    smiles: str = ""
    score: float = 0.0
    descriptor_delta: dict = field(default_factory=dict)

    def to_obj(self) -> dict:
        return {
            "smiles": self.smiles,
            "bond_type": self.filled_bond.bond_type,
            "rgroup_key": self.source_rgroup_key,
            "valid": self.valid,
            "score": self.score,
            "descriptor_delta": self.descriptor_delta,
        }


def _single_stub(g: MolGraph, which: str) -> int:
    stubs = g.stub_indices()
    if len(stubs) != 1:
        raise NoStubError(f"{which} must carry exactly one stub, has {len(stubs)}")
    return stubs[0]


def _strip_stub(g: MolGraph, stub: int) -> tuple[MolGraph, dict[int, int], int]:
    """Remove one stub; returns (graph, index map, boundary atom new index)."""
    neighbors = [j for j, _ in g.neighbors(stub)]
    if len(neighbors) != 1:
        raise NoStubError("stub must have exactly one neighbor")
    keep = [i for i in range(g.n_atoms) if i != stub]
    sub, index_map = g.subgraph(keep)
    return sub, index_map, index_map[neighbors[0]]


_LINKER_ELEMENTS = (6, 7, 8, 16)  # C, N, O, S bridging-atom enumeration


def reattach(template: MolGraph, stub_index: int, rgroup: MolGraph,
             rgroup_key: str = "", score: float = 0.0,
             enumerate_linker_element: bool = False
             ) -> list[ReattachmentCandidate]:
    """All valid molecules obtained by filling the masked linker joint
    between the template's stub and the R-group's stub. Deduplicated by
    canonical key; an empty list is a legitimate result."""
    if not (0 <= stub_index < template.n_atoms) or not template.atoms[stub_index].is_stub:
        raise NoStubError(f"template atom {stub_index} is not a stub")
    r_stub = _single_stub(rgroup, "R-group")

    t_graph, _, t_boundary = _strip_stub(template, stub_index)
    r_graph, _, r_boundary_local = _strip_stub(rgroup, r_stub)
    merged, offsets = MolGraph.union([t_graph, r_graph])
    r_boundary = offsets[1] + r_boundary_local

    t_ring = ring_info(t_graph).atom_in_ring[t_boundary]
    r_ring = ring_info(r_graph).atom_in_ring[r_boundary_local]
    t_atom = t_graph.atoms[t_boundary]
    r_atom = r_graph.atoms[r_boundary_local]

    bond_options = [vocab.BOND_SINGLE, vocab.BOND_DOUBLE, vocab.BOND_TRIPLE]
    if (t_atom.aromatic and r_atom.aromatic and t_ring and r_ring):
        bond_options.append(vocab.BOND_AROMATIC)

    candidates: list[ReattachmentCandidate] = []
    seen: set[str] = set()
    for bond_type in bond_options:
        attrs = BondAttrs(bond_type, aromatic=(bond_type == vocab.BOND_AROMATIC))
        trial = MolGraph(list(merged.atoms),
                         list(merged.bonds) + [(t_boundary, r_boundary, attrs)])
        adjusted = _adjust_hydrogens(trial, (t_boundary, r_boundary))
        if adjusted is None:
            continue
        adjusted = derive_attributes(adjusted)
        valid = not valence_check(adjusted) and adjusted.is_connected()
        if not valid:
            continue
        key = canonical_key(adjusted)
        if key in seen:
            continue
        seen.add(key)
        candidates.append(ReattachmentCandidate(
            molecule=adjusted, filled_bond=attrs, source_rgroup_key=rgroup_key,
            valid=True, smiles=write_smiles(adjusted), score=score))

    if enumerate_linker_element:
        for z in _LINKER_ELEMENTS:
            cand = _bridged_candidate(merged, t_boundary, r_boundary, z,
                                      rgroup_key, score)
            if cand is not None and canonical_key(cand.molecule) not in seen:
                seen.add(canonical_key(cand.molecule))
                candidates.append(cand)
    return candidates


def _adjust_hydrogens(g: MolGraph, atoms: tuple[int, ...]) -> MolGraph | None:
    """Minimally lower H counts on ``atoms`` to absorb the new bond; None if
    a valence cannot be satisfied even at zero hydrogens."""
    new_atoms = list(g.atoms)
    for i in atoms:
        a = new_atoms[i]
        allowed = allowed_valences(a.atomic_number, a.formal_charge)
        if allowed is None:
            continue
        bsum = g.bond_order_sum(i, masked_as_one=False)
        h = a.num_explicit_hs or 0
        overflow = bsum + h - allowed[-1]
        if overflow > 0:
            if overflow > h:
                return None
            new_atoms[i] = a.replace(num_explicit_hs=h - overflow)
    return MolGraph(new_atoms, g.bonds)


def _bridged_candidate(merged: MolGraph, t_boundary: int, r_boundary: int,
                       z: int, rgroup_key: str, score: float
                       ) -> ReattachmentCandidate | None:
    from .graph import AtomAttrs
    bridge = len(merged.atoms)
    atoms = list(merged.atoms) + [AtomAttrs(atomic_number=z)]
    bonds = list(merged.bonds) + [
        (t_boundary, bridge, BondAttrs(vocab.BOND_SINGLE)),
        (r_boundary, bridge, BondAttrs(vocab.BOND_SINGLE)),
    ]
    trial = MolGraph(atoms, bonds)
    allowed = allowed_valences(z, 0)
    fill = max(0, allowed[0] - 2) if allowed else 0
    atoms[bridge] = atoms[bridge].replace(num_explicit_hs=fill)
    trial = MolGraph(atoms, bonds)
    adjusted = _adjust_hydrogens(trial, (t_boundary, r_boundary))
    if adjusted is None:
        return None
    adjusted = derive_attributes(adjusted)
    if valence_check(adjusted) or not adjusted.is_connected():
        return None
    return ReattachmentCandidate(
        molecule=adjusted, filled_bond=BondAttrs(vocab.BOND_SINGLE),
        source_rgroup_key=rgroup_key, valid=True,
        smiles=write_smiles(adjusted), score=score)


# ---------------------------------------------------------------------------
# PCA node coloring
# ---------------------------------------------------------------------------

@dataclass
class NodeColoring:
    scores: np.ndarray  # per-atom first principal component score
    eigenvalue: float
    converged: bool


def node_pca_coloring(mol: MolGraph, params: ParameterStore,
                      config: EncoderConfig, tol: float = 1e-8,
                      max_iter: int = 10_000) -> NodeColoring:
    """First principal component of the node representations by power
    iteration; centered scores, sign fixed so the largest-|loading|
    coordinate is positive. Identical rows give all-zero scores."""
    if mol.n_atoms < 2:
        raise ValueError("PCA coloring needs at least two atoms")
    h = encode(mol, params, config)
    x = h - h.mean(axis=0, keepdims=True)
    cov = (x.T @ x) / x.shape[0]
    scale = np.abs(cov).max()
    if not np.isfinite(scale) or scale < 1e-18:
        return NodeColoring(np.zeros(mol.n_atoms), 0.0, True)

    rng = np.random.default_rng(12345)
    v = rng.normal(size=cov.shape[0])
    v /= np.linalg.norm(v)
    converged = False
    for _ in range(max_iter):
        w = cov @ v
        norm = np.linalg.norm(w)
        if norm < 1e-18:
            return NodeColoring(np.zeros(mol.n_atoms), 0.0, True)
        w /= norm
        if np.linalg.norm(w - v) < tol or np.linalg.norm(w + v) < tol:
            v = w
            converged = True
            break
        v = w
    eigenvalue = float(v @ cov @ v)
    if v[int(np.argmax(np.abs(v)))] < 0:
        v = -v
    return NodeColoring(x @ v, eigenvalue, converged)


# ---------------------------------------------------------------------------
# descriptors
# ---------------------------------------------------------------------------

def descriptor_report(mol: MolGraph) -> dict:
    """Simple structural descriptor set standing in for drug-likeness
    scoring: heavy atoms, molecular weight, rings, rotatable bonds, H-bond
    donors/acceptors."""
    info = ring_info(mol)
    heavy = [i for i, a in enumerate(mol.atoms) if not a.is_stub]
    mw = 0.0
    hbd = hba = 0
    for i in heavy:
        a = mol.atoms[i]
        mw += vocab.ATOMIC_MASS.get(a.atomic_number, 0.0)
        mw += (a.num_explicit_hs or 0) * vocab.ATOMIC_MASS[1]
        if a.atomic_number in (7, 8):
            hba += 1
            if (a.num_explicit_hs or 0) >= 1:
                hbd += 1
    rot = 0
    for k, (u, v, b) in enumerate(mol.bonds):
        if info.bond_in_ring[k] or b.bond_type != vocab.BOND_SINGLE:
            continue
        if mol.atoms[u].is_stub or mol.atoms[v].is_stub:
            continue
        if mol.heavy_degree(u) >= 2 and mol.heavy_degree(v) >= 2:
            rot += 1
    return {
        "heavy_atoms": len(heavy),
        "mol_weight": round(mw, 3),
        "rings": info.n_rings,
        "rotatable_bonds": rot,
        "h_donors": hbd,
        "h_acceptors": hba,
    }


def descriptor_delta(before: dict, after: dict) -> dict:
    return {k: (before[k], after[k]) for k in before}


# ---------------------------------------------------------------------------
# end-to-end lead optimization
# ---------------------------------------------------------------------------

@dataclass
class OptimizeReport:
    original_smiles: str
    template_smiles: str
    stub_index: int
    cut: tuple[int, int]
    condition: str
    candidates: list[ReattachmentCandidate]
    valid_fraction: float
    n_retrieved: int

    def to_obj(self) -> dict:
        return {
            "original": self.original_smiles,
            "query": self.template_smiles,
            "stub_index": self.stub_index,
            "cut": list(self.cut),
            "condition_bits": self.condition,
            "valid_fraction": self.valid_fraction,
            "n_retrieved": self.n_retrieved,
            "candidates": [c.to_obj() for c in self.candidates],
        }


def optimize_lead(mol: MolGraph, cut_bond: tuple[int, int],
                  library, params: ParameterStore, config: EncoderConfig,
                  k: int = 1000, condition: np.ndarray | None = None
                  ) -> OptimizeReport:
    """Decompose ``mol`` at ``cut_bond`` (core side first), retrieve top-k
    R-groups for the masked stub, re-attach each and report validity and
    descriptor deltas, ranked by retrieval score."""
    from .decompose import decompose, identify_rgroups
    from .patterns import bits_to_string, condition_vector
    from .retrieval import retrieve
    from .smiles import parse_smiles

    u, v = cut_bond
    if mol.bond_between(u, v) is None:
        raise ValueError(f"no bond between atoms {u} and {v}")
    # core = the component containing u once the bond is severed
    remaining = [(a, b, bb) for a, b, bb in mol.bonds
                 if {a, b} != {u, v}]
    probe = MolGraph(mol.atoms, remaining)
    comp = probe.components
    if comp[u] == comp[v]:
        raise ValueError("cut bond must be acyclic")
    core_atoms = frozenset(i for i in range(mol.n_atoms) if comp[i] == comp[u])
    branches = identify_rgroups(mol, core_atoms)
    target = next(bi for bi, (atoms, cut) in enumerate(branches)
                  if v in atoms and cut == (u, v))
    inst = decompose(mol, core_atoms, {target}, branches=branches)
    template = inst.query_template
    stub = inst.cuts[0].stub_q
    own_rgroup = inst.rgroups[0]
    if condition is None:
        condition = condition_vector(own_rgroup)

    before = descriptor_report(mol)
    candidates: list[ReattachmentCandidate] = []
    n_retrieved = 0
    if k > 0:
        result = retrieve(template, stub, condition, library, params, config, k)
        n_retrieved = len(result.ranked)
        smiles_of = dict(zip(library.keys, library.smiles))
        for key, score in result.ranked:
            rg = parse_smiles(smiles_of[key])
            for cand in reattach(template, stub, rg, rgroup_key=key,
                                 score=score):
                cand.descriptor_delta = descriptor_delta(
                    before, descriptor_report(cand.molecule))
                candidates.append(cand)
    candidates.sort(key=lambda c: (-c.score, c.smiles))
    valid_fraction = (len({c.source_rgroup_key for c in candidates}) /
                      n_retrieved) if n_retrieved else 0.0
    return OptimizeReport(
        original_smiles=write_smiles(mol),
        template_smiles=write_smiles(template), stub_index=stub,
        cut=(u, v),
        condition=bits_to_string(np.asarray(condition).astype(np.uint8)),
        candidates=candidates, valid_fraction=valid_fraction,
        n_retrieved=n_retrieved)
