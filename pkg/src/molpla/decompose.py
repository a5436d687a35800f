"""Scaffold extraction, R-group identification and masked-linker-joint
decomposition.

A molecule is split at cuttable bonds (acyclic single bonds that are
ring-to-substituent, C-N, C-O or S-N) into a fragment tree; putative cores
are the ring-containing connected subtrees. Decomposing a core's branch
subset replaces each cut bond by a pair of masked stubs, one on the query
template and one on the decoupled R-group.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from . import vocab
from .canon import canonical_key
from .graph import BondAttrs, MolGraph, masked_bond, stub_atom
from .rings import ring_info
from .smiles import write_smiles_with_order


class NoRingError(ValueError):
    """Core enumeration needs at least one ring."""


class MultiAttachmentError(ValueError):
    """A peripheral branch touches the core through more than one bond."""


class EmptySubsetError(ValueError):
    """Decomposition needs a non-empty branch subset."""


DEFAULT_MIN_CORE_ATOMS = 4
DEFAULT_MAX_CORES = 10

_CN = frozenset({6, 7})
_CO = frozenset({6, 8})
_SN = frozenset({16, 7})


@dataclass(frozen=True)
class RuleSet:
    """Which acyclic single bonds may be cut when enumerating cores."""
    ring_to_substituent: bool = True
    carbon_nitrogen: bool = True  # amide + amine
    carbon_oxygen: bool = True  # ester + ether
    sulfur_nitrogen: bool = True  # sulfonamide
    min_core_atoms: int = DEFAULT_MIN_CORE_ATOMS

    def bond_is_cuttable(self, g: MolGraph, u: int, v: int, attrs: BondAttrs,
                         bond_in_ring: bool, atom_in_ring) -> bool:
        if bond_in_ring or attrs.bond_type != vocab.BOND_SINGLE:
            return False
        au, av = g.atoms[u], g.atoms[v]
        if au.is_stub or av.is_stub:
            return False
        if self.ring_to_substituent and atom_in_ring[u] != atom_in_ring[v]:
            return True
        pair = frozenset({au.atomic_number, av.atomic_number})
        if self.carbon_nitrogen and pair == _CN:
            return True
        if self.carbon_oxygen and pair == _CO:
            return True
        if self.sulfur_nitrogen and pair == _SN:
            return True
        return False


@dataclass(frozen=True)
class CutRecord:
    """One severed bond: indices on the original molecule plus the stub
    positions it produced."""
    core_atom: int  # core-side boundary atom in the original graph
    r_atom: int  # R-side boundary atom in the original graph
    original_bond: BondAttrs
    stub_q: int  # stub index in the query template
    stub_r: int  # stub index in the decoupled R-group
    linker_node_m: int  # designated linker node in the original (== core_atom)

    def to_obj(self) -> dict:
        b = self.original_bond
        return {
            "core_atom": self.core_atom,
            "r_atom": self.r_atom,
            "bond": {
                "bond_type": b.bond_type,
                "bond_direction": b.bond_direction,
                "bond_stereochemistry": b.stereo,
                "conjugation": b.conjugated,
                "aromaticity": b.aromatic,
            },
        }


@dataclass
class DecompositionInstance:
    original: MolGraph
    query_template: MolGraph
    rgroups: list[MolGraph]
    cuts: list[CutRecord]
    core_id: int = 0
    subset_id: int = 0
    core_atoms: frozenset[int] = field(default_factory=frozenset)

    def decomposed_union(self) -> tuple[MolGraph, list[int]]:
        """G_D: the query template and every decoupled R-group as one
        disconnected graph; returns (graph, offsets) with offsets[0] the
        template, offsets[1:] the R-groups."""
        return MolGraph.union([self.query_template] + self.rgroups)

    def to_obj(self) -> dict:
        mol_s, mol_order = write_smiles_with_order(self.original)
        q_s, q_order = write_smiles_with_order(self.query_template)
        q_pos = {old: new for new, old in enumerate(q_order)}
        mol_pos = {old: new for new, old in enumerate(mol_order)}
        rg_entries = []
        rg_pos = []
        for rg in self.rgroups:
            s, order = write_smiles_with_order(rg)
            rg_entries.append(s)
            rg_pos.append({old: new for new, old in enumerate(order)})
        cuts = []
        linker_map = []
        for k, cut in enumerate(self.cuts):
            obj = cut.to_obj()
            obj["core_atom"] = mol_pos[cut.core_atom]
            obj["r_atom"] = mol_pos[cut.r_atom]
            cuts.append(obj)
            linker_map.append([mol_pos[cut.linker_node_m], q_pos[cut.stub_q],
                               rg_pos[k][cut.stub_r]])
        return {
            "mol": mol_s,
            "core_id": self.core_id,
            "subset_id": self.subset_id,
            "query": q_s,
            "rgroups": rg_entries,
            "cuts": cuts,
            "linker_map": linker_map,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_obj(), separators=(",", ":"))


# ---------------------------------------------------------------------------
# scaffolds and cores
# ---------------------------------------------------------------------------

def extract_fragment(g: MolGraph, atoms) -> MolGraph:
    """Induced subgraph with severed bonds healed by hydrogen fill-up, so an
    extracted scaffold reads as a standalone molecule (toluene's scaffold is
    benzene, not an H-depleted ring). Derived attributes are recomputed."""
    from .graph import BOND_ORDER
    from .smiles import derive_attributes

    kept = sorted(set(atoms))
    keep_set = set(kept)
    sub, index_map = g.subgraph(kept)
    new_atoms = list(sub.atoms)
    for old in kept:
        severed = 0
        for j, b in g.neighbors(old):
            if j not in keep_set:
                severed += BOND_ORDER.get(b.bond_type, 1)
        if severed and not g.atoms[old].is_stub:
            a = new_atoms[index_map[old]]
            new_atoms[index_map[old]] = a.replace(
                num_explicit_hs=(a.num_explicit_hs or 0) + severed)
    return derive_attributes(MolGraph(new_atoms, sub.bonds))


def murcko_scaffold(g: MolGraph) -> MolGraph:
    """Ring systems plus linkers: iteratively delete degree-1 non-ring atoms
    until fixpoint. Acyclic molecules give the empty graph."""
    return murcko_scaffold_atoms(g)[0]


def murcko_scaffold_atoms(g: MolGraph) -> tuple[MolGraph, list[int]]:
    """Murcko scaffold plus the surviving original atom indices."""
    info = ring_info(g)
    keep = set(range(g.n_atoms))
    degree = {i: g.degree(i) for i in keep}
    changed = True
    while changed:
        changed = False
        for i in sorted(keep):
            if degree[i] <= 1 and not info.atom_in_ring[i]:
                keep.discard(i)
                for j, _ in g.neighbors(i):
                    if j in keep:
                        degree[j] -= 1
                changed = True
    kept = sorted(keep)
    if not kept:
        return MolGraph([], []), []
    return extract_fragment(g, kept), kept


def cuttable_bonds(g: MolGraph, rules: RuleSet | None = None) -> list[int]:
    """Indices into g.bonds of bonds the rule set allows cutting."""
    rules = rules or RuleSet()
    info = ring_info(g)
    out = []
    for k, (u, v, attrs) in enumerate(g.bonds):
        if rules.bond_is_cuttable(g, u, v, attrs, info.bond_in_ring[k],
                                  info.atom_in_ring):
            out.append(k)
    return out


def _fragment_tree(g: MolGraph, cut_idx: list[int]) -> tuple[list[int], list[tuple[int, int, int]]]:
    """Contract non-cuttable bonds: returns (fragment label per atom,
    tree edges as (frag_a, frag_b, bond_index))."""
    cut_set = set(cut_idx)
    label = [-1] * g.n_atoms
    adj: list[list[int]] = [[] for _ in range(g.n_atoms)]
    for k, (u, v, _) in enumerate(g.bonds):
        if k not in cut_set:
            adj[u].append(v)
            adj[v].append(u)
    n_frag = 0
    for start in range(g.n_atoms):
        if label[start] != -1:
            continue
        stack = [start]
        label[start] = n_frag
        while stack:
            i = stack.pop()
            for j in adj[i]:
                if label[j] == -1:
                    label[j] = n_frag
                    stack.append(j)
        n_frag += 1
    edges = [(label[g.bonds[k][0]], label[g.bonds[k][1]], k) for k in cut_idx]
    return label, edges


def _connected_subtrees(n_frag: int, edges: list[tuple[int, int, int]],
                        limit: int = 4096) -> list[frozenset[int]]:
    """All connected fragment sets of the (forest-shaped) fragment graph.

    Cuttable bonds are acyclic, so the fragment graph is a forest and every
    connected fragment set is reachable by deleting boundary edges only.
    Enumeration is capped at ``limit`` sets as a safety valve.
    """
    adj: dict[int, set[int]] = {i: set() for i in range(n_frag)}
    for a, b, _ in edges:
        adj[a].add(b)
        adj[b].add(a)
    results: list[frozenset[int]] = []

    # Standard rooted enumeration: subtrees containing node r, never touching
    # nodes < r, enumerated by expanding a frontier.
    def expand(current: frozenset[int], frontier: list[int], r: int) -> None:
        if len(results) >= limit:
            return
        results.append(current)
        for k, f in enumerate(frontier):
            new_frontier = frontier[k + 1:] + [
                x for x in sorted(adj[f]) if x > r and x not in current
                and x not in frontier]
            expand(current | {f}, new_frontier, r)
            if len(results) >= limit:
                return

    for r in range(n_frag):
        expand(frozenset({r}), [x for x in sorted(adj[r]) if x > r], r)
        if len(results) >= limit:
            break
    return results


def enumerate_putative_cores(g: MolGraph, rules: RuleSet | None = None,
                             max_cores: int = DEFAULT_MAX_CORES
                             ) -> list[tuple[MolGraph, frozenset[int]]]:
    """Candidate cores as (subgraph, original atom set), deduplicated by
    canonical key. The Murcko scaffold is always present; above
    ``max_cores`` a deterministic sample (seeded by the molecule's canonical
    key, Murcko always kept) is returned.
    """
    if not g.is_connected():
        raise ValueError("core enumeration expects a connected molecule")
    rules = rules or RuleSet()
    info = ring_info(g)
    if info.n_rings == 0:
        raise NoRingError("molecule has no ring")

    cut_idx = cuttable_bonds(g, rules)
    label, edges = _fragment_tree(g, cut_idx)
    frag_atoms: dict[int, list[int]] = {}
    for i, f in enumerate(label):
        frag_atoms.setdefault(f, []).append(i)
    n_frag = len(frag_atoms)

    murcko_g, murcko_atoms = murcko_scaffold_atoms(g)
    murcko_key = canonical_key(murcko_g)

    seen: dict[str, tuple[MolGraph, frozenset[int]]] = {}
    order: list[str] = []
    for frag_set in _connected_subtrees(n_frag, edges):
        atoms = [i for f in frag_set for i in frag_atoms[f]]
        if len(atoms) < rules.min_core_atoms:
            continue
        if not any(info.atom_in_ring[i] for i in atoms):
            continue
        sub = extract_fragment(g, atoms)
        key = canonical_key(sub)
        if key not in seen:
            seen[key] = (sub, frozenset(atoms))
            order.append(key)

    if murcko_key not in seen and murcko_g.n_atoms:
        seen[murcko_key] = (murcko_g, frozenset(murcko_atoms))
        order.append(murcko_key)

    if len(order) > max_cores:
        mol_key = canonical_key(g)
        seed = int.from_bytes(
            hashlib.sha256(mol_key.encode()).digest()[:8], "little")
        rng = np.random.default_rng(seed)
        rest = [k for k in order if k != murcko_key]
        picked = list(rng.choice(len(rest), size=max_cores - 1, replace=False))
        kept_keys = [murcko_key] + [rest[i] for i in sorted(picked)]
        order = [k for k in order if k in set(kept_keys)]

    return [seen[k] for k in order]


# ---------------------------------------------------------------------------
# R-groups and decomposition
# ---------------------------------------------------------------------------

def identify_rgroups(g: MolGraph, core_atoms: frozenset[int] | set[int]
                     ) -> list[tuple[frozenset[int], tuple[int, int]]]:
    """Peripheral branches of a core: each maximal connected component of
    (atoms minus core), with its single cut bond (core_atom, r_atom).

    Raises MultiAttachmentError when a branch touches the core through more
    than one bond. Deterministic order (by smallest branch atom).
    """
    core = set(core_atoms)
    if not core:
        raise ValueError("empty core")
    rest = [i for i in range(g.n_atoms) if i not in core]
    unvisited = set(rest)
    branches = []
    while unvisited:
        start = min(unvisited)
        comp = {start}
        stack = [start]
        unvisited.discard(start)
        while stack:
            i = stack.pop()
            for j, _ in g.neighbors(i):
                if j in unvisited:
                    unvisited.discard(j)
                    comp.add(j)
                    stack.append(j)
        attach = []
        for i in sorted(comp):
            for j, _ in g.neighbors(i):
                if j in core:
                    attach.append((j, i))
        if len(attach) != 1:
            raise MultiAttachmentError(
                f"branch {sorted(comp)} attaches to the core via "
                f"{len(attach)} bonds")
        branches.append((frozenset(comp), attach[0]))
    branches.sort(key=lambda b: min(b[0]))
    return branches


def decompose(g: MolGraph, core_atoms: frozenset[int] | set[int],
              subset: set[int] | frozenset[int],
              branches: list[tuple[frozenset[int], tuple[int, int]]] | None = None,
              core_id: int = 0, subset_id: int = 0) -> DecompositionInstance:
    """Decouple the branch subset (indices into identify_rgroups' output)
    from the core, inserting a masked stub pair at each severed bond."""
    if not subset:
        raise EmptySubsetError("subset of branches must be non-empty")
    if branches is None:
        branches = identify_rgroups(g, core_atoms)
    subset = sorted(subset)
    for b in subset:
        if not 0 <= b < len(branches):
            raise IndexError(f"branch index {b} out of range")

    decoupled_atoms: set[int] = set()
    for b in subset:
        decoupled_atoms |= branches[b][0]

    # query template: everything except decoupled branches, plus one stub per cut
    q_atoms = [i for i in range(g.n_atoms) if i not in decoupled_atoms]
    q_sub, q_map = g.subgraph(q_atoms)
    q_atom_list = list(q_sub.atoms)
    q_bonds = list(q_sub.bonds)

    rgroups: list[MolGraph] = []
    cuts: list[CutRecord] = []
    for b in subset:
        branch_atoms, (u, v) = branches[b]
        original_bond = g.bond_between(u, v)
        stub_q_idx = len(q_atom_list)
        q_atom_list.append(stub_atom())
        q_bonds.append((q_map[u], stub_q_idx, masked_bond()))

        r_sub, r_map = g.subgraph(branch_atoms)
        r_atom_list = list(r_sub.atoms)
        r_bonds = list(r_sub.bonds)
        stub_r_idx = len(r_atom_list)
        r_atom_list.append(stub_atom())
        r_bonds.append((r_map[v], stub_r_idx, masked_bond()))
        rgroups.append(MolGraph(r_atom_list, r_bonds))

        cuts.append(CutRecord(core_atom=u, r_atom=v, original_bond=original_bond,
                              stub_q=stub_q_idx, stub_r=stub_r_idx,
                              linker_node_m=u))

    query = MolGraph(q_atom_list, q_bonds)
    return DecompositionInstance(original=g, query_template=query,
                                 rgroups=rgroups, cuts=cuts, core_id=core_id,
                                 subset_id=subset_id,
                                 core_atoms=frozenset(core_atoms))


def enumerate_decompositions(g: MolGraph, core_atoms: frozenset[int] | set[int],
                             core_id: int = 0) -> list[DecompositionInstance]:
    """One instance per non-empty branch subset: 2^k - 1 instances for k
    branches, in ascending bitmask order."""
    branches = identify_rgroups(g, core_atoms)
    k = len(branches)
    out = []
    for mask in range(1, 1 << k):
        subset = {b for b in range(k) if mask & (1 << b)}
        out.append(decompose(g, core_atoms, subset, branches=branches,
                             core_id=core_id, subset_id=mask))
    return out


def remerge(inst: DecompositionInstance) -> MolGraph:
    """Invert a decomposition: drop stubs and restore each cut bond with its
    original attributes. The result is isomorphic to the original."""
    q = inst.query_template
    q_keep = [i for i in range(q.n_atoms) if not q.atoms[i].is_stub]
    merged_atoms = [q.atoms[i] for i in q_keep]
    q_pos = {old: new for new, old in enumerate(q_keep)}
    merged_bonds = [(q_pos[u], q_pos[v], b) for u, v, b in q.bonds
                    if u in q_pos and v in q_pos]

    r_pos_all = []
    for rg in inst.rgroups:
        keep = [i for i in range(rg.n_atoms) if not rg.atoms[i].is_stub]
        off = len(merged_atoms)
        pos = {old: off + new for new, old in enumerate(keep)}
        merged_atoms.extend(rg.atoms[i] for i in keep)
        merged_bonds.extend((pos[u], pos[v], b) for u, v, b in rg.bonds
                            if u in pos and v in pos)
        r_pos_all.append(pos)

    for k, cut in enumerate(inst.cuts):
        # the stub's sole neighbor is the boundary atom on each side
        q_boundary = next(j for j, _ in q.neighbors(cut.stub_q))
        rg = inst.rgroups[k]
        r_boundary = next(j for j, _ in rg.neighbors(cut.stub_r))
        merged_bonds.append((q_pos[q_boundary], r_pos_all[k][r_boundary],
                             cut.original_bond))
    return MolGraph(merged_atoms, merged_bonds)
