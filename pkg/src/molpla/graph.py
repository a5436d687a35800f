"""Attributed molecular graph data model.

Graphs are immutable-by-convention: every transformation returns a new
``MolGraph``. The MASK sentinel for any attribute is ``None`` (serialized
as JSON ``null``); a stub atom carries MASK for every attribute.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Iterable, Iterator, Sequence

from . import vocab


class MolGraphError(ValueError):
    """Structural problem in a molecular graph."""


@dataclass(frozen=True)
class AtomAttrs:
    atomic_number: int | None
    formal_charge: int | None = 0
    chirality_tag: int | None = vocab.CHI_NONE
    hybridization: int | None = vocab.HYB_NONE
    num_explicit_hs: int | None = 0
    aromatic: bool | None = False
    is_stub: bool = False

    def replace(self, **kw) -> "AtomAttrs":
        return replace(self, **kw)


@dataclass(frozen=True)
class BondAttrs:
    bond_type: int | None
    bond_direction: int | None = vocab.DIR_NONE
    stereo: int | None = vocab.STEREO_NONE
    conjugated: bool | None = False
    aromatic: bool | None = False

    def replace(self, **kw) -> "BondAttrs":
        return replace(self, **kw)

    @property
    def is_masked(self) -> bool:
        return self.bond_type is None


def stub_atom() -> AtomAttrs:
    """An attachment stub: every attribute is MASK."""
    return AtomAttrs(atomic_number=None, formal_charge=None, chirality_tag=None,
                     hybridization=None, num_explicit_hs=None, aromatic=None,
                     is_stub=True)


def masked_bond() -> BondAttrs:
    """A fully masked linker edge."""
    return BondAttrs(bond_type=None, bond_direction=None, stereo=None,
                     conjugated=None, aromatic=None)


# Integer contribution of one bond to an atom's valence sum; aromatic bonds
# are pooled and counted as floor(1.5 * n) by the callers.
BOND_ORDER = {vocab.BOND_SINGLE: 1, vocab.BOND_DOUBLE: 2, vocab.BOND_TRIPLE: 3}

# Elements whose aromatic participation is lone-pair donation (O, S, Se, Te).
_LONE_PAIR_AROMATIC = {8, 16, 34, 52}


class MolGraph:
    """An attributed molecular graph, possibly disconnected.

    ``bonds`` is a list of ``(u, v, BondAttrs)`` with ``u < v`` normalized.
    """

    __slots__ = ("atoms", "bonds", "_adj", "_components")

    def __init__(self, atoms: Sequence[AtomAttrs],
                 bonds: Iterable[tuple[int, int, BondAttrs]]):
        self.atoms: tuple[AtomAttrs, ...] = tuple(atoms)
        norm = []
        seen = set()
        n = len(self.atoms)
        for u, v, attrs in bonds:
            if not (0 <= u < n and 0 <= v < n):
                raise MolGraphError(f"bond ({u},{v}) endpoint out of range")
            if u == v:
                raise MolGraphError(f"self-bond on atom {u}")
            if u > v:
                u, v = v, u
            if (u, v) in seen:
                raise MolGraphError(f"duplicate bond ({u},{v})")
            seen.add((u, v))
            norm.append((u, v, attrs))
        self.bonds: tuple[tuple[int, int, BondAttrs], ...] = tuple(norm)
        self._adj = None
        self._components = None

    # -- basic accessors ---------------------------------------------------

    @property
    def n_atoms(self) -> int:
        return len(self.atoms)

    @property
    def adjacency(self) -> tuple[tuple[tuple[int, BondAttrs], ...], ...]:
        if self._adj is None:
            adj: list[list[tuple[int, BondAttrs]]] = [[] for _ in self.atoms]
            for u, v, attrs in self.bonds:
                adj[u].append((v, attrs))
                adj[v].append((u, attrs))
            self._adj = tuple(tuple(x) for x in adj)
        return self._adj

    def neighbors(self, i: int) -> tuple[tuple[int, BondAttrs], ...]:
        return self.adjacency[i]

    def degree(self, i: int) -> int:
        return len(self.adjacency[i])

    def bond_between(self, u: int, v: int) -> BondAttrs | None:
        for w, attrs in self.adjacency[u]:
            if w == v:
                return attrs
        return None

    @property
    def components(self) -> tuple[int, ...]:
        """Connected-component label per atom (labels are 0..k-1 in order
        of first appearance)."""
        if self._components is None:
            labels = [-1] * self.n_atoms
            label = 0
            for start in range(self.n_atoms):
                if labels[start] != -1:
                    continue
                stack = [start]
                labels[start] = label
                while stack:
                    i = stack.pop()
                    for j, _ in self.adjacency[i]:
                        if labels[j] == -1:
                            labels[j] = label
                            stack.append(j)
                label += 1
            self._components = tuple(labels)
        return self._components

    @property
    def n_components(self) -> int:
        return (max(self.components) + 1) if self.n_atoms else 0

    def is_connected(self) -> bool:
        return self.n_components <= 1

    def stub_indices(self) -> list[int]:
        return [i for i, a in enumerate(self.atoms) if a.is_stub]

    # -- transformations ---------------------------------------------------

    def subgraph(self, atom_indices: Iterable[int]) -> tuple["MolGraph", dict[int, int]]:
        """Induced subgraph; returns (graph, old_index -> new_index map)."""
        keep = sorted(set(atom_indices))
        index_map = {old: new for new, old in enumerate(keep)}
        atoms = [self.atoms[i] for i in keep]
        bonds = [(index_map[u], index_map[v], attrs)
                 for u, v, attrs in self.bonds
                 if u in index_map and v in index_map]
        return MolGraph(atoms, bonds), index_map

    def permute(self, perm: Sequence[int]) -> "MolGraph":
        """Relabel atoms so that new index ``perm[i]`` holds old atom ``i``."""
        if sorted(perm) != list(range(self.n_atoms)):
            raise MolGraphError("not a permutation")
        atoms: list[AtomAttrs | None] = [None] * self.n_atoms
        for old, new in enumerate(perm):
            atoms[new] = self.atoms[old]
        bonds = [(perm[u], perm[v], attrs) for u, v, attrs in self.bonds]
        return MolGraph(atoms, bonds)  # type: ignore[arg-type]

    @staticmethod
    def union(graphs: Sequence["MolGraph"]) -> tuple["MolGraph", list[int]]:
        """Disjoint union; returns (graph, atom-index offset per input)."""
        atoms: list[AtomAttrs] = []
        bonds: list[tuple[int, int, BondAttrs]] = []
        offsets = []
        for g in graphs:
            off = len(atoms)
            offsets.append(off)
            atoms.extend(g.atoms)
            bonds.extend((u + off, v + off, attrs) for u, v, attrs in g.bonds)
        return MolGraph(atoms, bonds), offsets

    # -- serialization -----------------------------------------------------

    def to_obj(self) -> dict:
        atoms = []
        for a in self.atoms:
            atoms.append({
                "atomic_number": a.atomic_number,
                "formal_charge": a.formal_charge,
                "chirality_tag": a.chirality_tag,
                "hybridization": a.hybridization,
                "num_explicit_hs": a.num_explicit_hs,
                "aromaticity": a.aromatic,
                "is_stub": a.is_stub,
            })
        bonds = []
        for u, v, b in self.bonds:
            bonds.append({
                "u": u,
                "v": v,
                "bond_type": b.bond_type,
                "bond_direction": b.bond_direction,
                "bond_stereochemistry": b.stereo,
                "conjugation": b.conjugated,
                "aromaticity": b.aromatic,
            })
        return {"atoms": atoms, "bonds": bonds}

    def to_json(self) -> str:
        return json.dumps(self.to_obj(), separators=(",", ":"))

    @staticmethod
    def from_obj(obj: dict) -> "MolGraph":
        atoms = [AtomAttrs(
            atomic_number=a["atomic_number"],
            formal_charge=a["formal_charge"],
            chirality_tag=a["chirality_tag"],
            hybridization=a["hybridization"],
            num_explicit_hs=a["num_explicit_hs"],
            aromatic=a["aromaticity"],
            is_stub=bool(a.get("is_stub", False)),
        ) for a in obj["atoms"]]
        bonds = [(b["u"], b["v"], BondAttrs(
            bond_type=b["bond_type"],
            bond_direction=b["bond_direction"],
            stereo=b["bond_stereochemistry"],
            conjugated=b["conjugation"],
            aromatic=b["aromaticity"],
        )) for b in obj["bonds"]]
        return MolGraph(atoms, bonds)

    @staticmethod
    def from_json(text: str) -> "MolGraph":
        return MolGraph.from_obj(json.loads(text))

    # -- misc ----------------------------------------------------------------

    def heavy_degree(self, i: int) -> int:
        """Number of non-stub neighbors."""
        return sum(1 for j, _ in self.adjacency[i] if not self.atoms[j].is_stub)

    def bond_order_sum(self, i: int, *, masked_as_one: bool) -> int:
        """Integer valence contribution of atom i's bonds.

        Aromatic bonds are pooled as floor(1.5 * count), except for lone-pair
        donors (O, S, Se, Te) where each counts 1 (their Kekulé bonds are all
        single). Masked bonds count 1 when ``masked_as_one`` else 0.
        """
        total = 0
        n_aromatic = 0
        for _, attrs in self.adjacency[i]:
            if attrs.bond_type is None:
                total += 1 if masked_as_one else 0
            elif attrs.bond_type == vocab.BOND_AROMATIC:
                n_aromatic += 1
            elif attrs.bond_type in BOND_ORDER:
                total += BOND_ORDER[attrs.bond_type]
            else:
                total += 1  # reserved bond types count as single
        if self.atoms[i].atomic_number in _LONE_PAIR_AROMATIC:
            total += n_aromatic
        else:
            total += (3 * n_aromatic) // 2
        return total

    def __repr__(self) -> str:
        return f"MolGraph(n_atoms={self.n_atoms}, n_bonds={len(self.bonds)})"

    def atoms_iter(self) -> Iterator[tuple[int, AtomAttrs]]:
        return enumerate(self.atoms)
