"""Graph canonicalization: Morgan-style iterative neighborhood refinement
with deterministic tie-breaking, then canonical SMILES emission.

Keys deliberately ignore chirality tags and bond directions so that
stereoisomers collapse (2D-structure deduplication). Tie-breaking among
refinement-equivalent atoms picks by a deep BFS signature and finally by
input index; atoms still tied at that point are automorphic for
molecular-scale graphs, so the emitted string does not depend on the pick.
"""

from __future__ import annotations

from collections import deque

from . import vocab
from .graph import MolGraph
from .smiles import _emit


def _initial_invariants(g: MolGraph) -> list[tuple]:
    inv = []
    for i, a in enumerate(g.atoms):
        inv.append((
            a.is_stub,
            -1 if a.atomic_number is None else a.atomic_number,
            -99 if a.formal_charge is None else a.formal_charge,
            -1 if a.num_explicit_hs is None else a.num_explicit_hs,
            -1 if a.aromatic is None else int(a.aromatic),
            g.degree(i),
        ))
    return inv


def _bond_code(attrs) -> int:
    return vocab.MASK_BOND_TYPE if attrs.bond_type is None else attrs.bond_type


def _refine(g: MolGraph, ranks: list[int]) -> list[int]:
    """One stable refinement pass: iterate until the partition stops
    splitting."""
    n = g.n_atoms
    while True:
        sigs = []
        for i in range(n):
            nb = sorted((_bond_code(b), ranks[j]) for j, b in g.neighbors(i))
            sigs.append((ranks[i], tuple(nb)))
        order = sorted(range(n), key=lambda i: sigs[i])
        new_ranks = [0] * n
        r = 0
        for k, i in enumerate(order):
            if k > 0 and sigs[i] != sigs[order[k - 1]]:
                r += 1
            new_ranks[i] = r
        if new_ranks == ranks:
            return ranks
        ranks = new_ranks


def _bfs_signature(g: MolGraph, start: int, ranks: list[int]) -> tuple:
    """Permutation-invariant profile of the graph as seen from ``start``."""
    dist = {start: 0}
    queue = deque([start])
    layers: list[list[tuple[int, int]]] = []
    while queue:
        i = queue.popleft()
        d = dist[i]
        while len(layers) <= d:
            layers.append([])
        layers[d].append((ranks[i], tuple(sorted(
            (_bond_code(b), ranks[j]) for j, b in g.neighbors(i)))))
        for j, _ in g.neighbors(i):
            if j not in dist:
                dist[j] = d + 1
                queue.append(j)
    return tuple(tuple(sorted(layer)) for layer in layers)


def canonical_ranks(g: MolGraph) -> list[int]:
    """A canonical total order of atoms (0..n-1), invariant under input
    atom permutation."""
    n = g.n_atoms
    inv = _initial_invariants(g)
    order = sorted(range(n), key=lambda i: inv[i])
    ranks = [0] * n
    r = 0
    for k, i in enumerate(order):
        if k > 0 and inv[i] != inv[order[k - 1]]:
            r += 1
        ranks[i] = r
    ranks = _refine(g, ranks)

    while len(set(ranks)) < n:
        # split the lowest-rank tied class deterministically
        by_rank: dict[int, list[int]] = {}
        for i, rk in enumerate(ranks):
            by_rank.setdefault(rk, []).append(i)
        tied_rank = min(rk for rk, members in by_rank.items() if len(members) > 1)
        members = by_rank[tied_rank]
        sig_of = {i: _bfs_signature(g, i, ranks) for i in members}
        best_sig = min(sig_of.values())
        candidates = [i for i in members if sig_of[i] == best_sig]
        chosen = min(candidates)  # automorphic at this point in practice
        ranks = [rk + 1 if rk > tied_rank or (rk == tied_rank and i != chosen)
                 else rk for i, rk in enumerate(ranks)]
        ranks = _refine(g, ranks)
    return ranks


def canonical_key(g: MolGraph) -> str:
    """Canonical string key: equal for all atom-order permutations of a
    graph, distinct with overwhelming probability otherwise. Chirality and
    bond directions are ignored."""
    if g.n_atoms == 0:
        return ""
    ranks = canonical_ranks(g)
    text, _ = _emit(g, ranks, include_stereo=False, sort_components=True)
    return text


def canonical_smiles(g: MolGraph) -> str:
    """Stereo-preserving SMILES in canonical atom order."""
    if g.n_atoms == 0:
        return ""
    ranks = canonical_ranks(g)
    text, _ = _emit(g, ranks, include_stereo=True, sort_components=True)
    return text
