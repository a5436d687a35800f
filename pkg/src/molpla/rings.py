"""Ring perception: a minimum cycle basis in the smallest-set-of-smallest-rings
style, plus per-atom/per-bond ring membership flags."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .graph import MolGraph


@dataclass(frozen=True)
class RingInfo:
    rings: tuple[tuple[int, ...], ...]  # each ring: ordered atom cycle
    atom_in_ring: tuple[bool, ...]
    bond_in_ring: tuple[bool, ...]  # aligned with g.bonds

    @property
    def n_rings(self) -> int:
        return len(self.rings)


def _shortest_cycle_through(g: MolGraph, u: int, v: int) -> tuple[int, ...] | None:
    """Shortest cycle containing bond (u, v): BFS from u to v avoiding the
    bond itself."""
    parent = {u: -1}
    queue = deque([u])
    while queue:
        i = queue.popleft()
        for j, _ in g.neighbors(i):
            if i == u and j == v:
                continue
            if j not in parent:
                parent[j] = i
                if j == v:
                    path = [v]
                    while path[-1] != u:
                        path.append(parent[path[-1]])
                    return tuple(path)
                queue.append(j)
    return None


def _bond_index_map(g: MolGraph) -> dict[tuple[int, int], int]:
    return {(u, v): k for k, (u, v, _) in enumerate(g.bonds)}


def _ring_bond_vector(ring: tuple[int, ...], bmap: dict[tuple[int, int], int], n_bonds: int) -> int:
    """Ring as a bitmask over bond indices (GF(2) vector packed in an int)."""
    vec = 0
    for a, b in zip(ring, ring[1:] + ring[:1]):
        key = (a, b) if a < b else (b, a)
        vec |= 1 << bmap[key]
    return vec


def ring_info(g: MolGraph) -> RingInfo:
    """Minimum cycle basis via shortest-cycle-per-bond candidates with GF(2)
    independence filtering. Exact for molecular-scale graphs."""
    n_bonds = len(g.bonds)
    dim = n_bonds - g.n_atoms + g.n_components
    if dim <= 0:
        return RingInfo((), (False,) * g.n_atoms, (False,) * n_bonds)

    bmap = _bond_index_map(g)
    candidates = []
    for u, v, _ in g.bonds:
        cyc = _shortest_cycle_through(g, u, v)
        if cyc is not None:
            candidates.append(cyc)
    # Shortest first; ties broken by the atom tuple for determinism.
    candidates.sort(key=lambda c: (len(c), c))

    basis: list[int] = []  # row-echelon GF(2) vectors
    rings: list[tuple[int, ...]] = []
    seen = set()
    for cyc in candidates:
        canon = tuple(sorted(cyc))
        if canon in seen:
            continue
        seen.add(canon)
        vec = _ring_bond_vector(cyc, bmap, n_bonds)
        reduced = vec
        for b in basis:
            reduced = min(reduced, reduced ^ b)
        if reduced:
            basis.append(reduced)
            basis.sort(reverse=True)
            rings.append(cyc)
            if len(rings) == dim:
                break

    atom_flags = [False] * g.n_atoms
    bond_flags = [False] * n_bonds
    for cyc in rings:
        for a, b in zip(cyc, cyc[1:] + cyc[:1]):
            atom_flags[a] = atom_flags[b] = True
            key = (a, b) if a < b else (b, a)
            bond_flags[bmap[key]] = True
    # Bonds whose two endpoints lie on one cycle but were not visited (e.g.
    # chords across selected rings) still count as ring bonds when they close
    # an independent cycle; mark any bond both of whose endpoints are in-ring
    # and which lies on some cycle (cheap recheck).
    for k, (u, v, _) in enumerate(g.bonds):
        if not bond_flags[k] and atom_flags[u] and atom_flags[v]:
            if _shortest_cycle_through(g, u, v) is not None:
                bond_flags[k] = True
                atom_flags[u] = atom_flags[v] = True
    return RingInfo(tuple(rings), tuple(atom_flags), tuple(bond_flags))
