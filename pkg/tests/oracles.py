"""Independent brute-force oracles used to freeze expected values.

These deliberately avoid the library's own algorithms: matching enumerates
raw injective mappings, cycle checks walk all simple cycles, and gradients
come from central finite differences.
"""

from itertools import permutations

import numpy as np

from molpla.graph import MolGraph
from molpla.match import Pattern, _atom_matches, _bond_matches
from molpla.rings import ring_info


def brute_force_matches(g: MolGraph, p: Pattern) -> list[tuple[int, ...]]:
    """All injective pattern-atom -> graph-atom mappings that preserve
    pattern edges (monomorphism), by raw enumeration. Only for tiny graphs."""
    pg = p.graph
    t_ring = ring_info(g).atom_in_ring
    results = []
    for combo in permutations(range(g.n_atoms), pg.n_atoms):
        ok = True
        for pi, ti in enumerate(combo):
            if not _atom_matches(pg, pi, g, ti, p.constraints.get(pi), t_ring):
                ok = False
                break
        if not ok:
            continue
        for u, v, pb in pg.bonds:
            tb = g.bond_between(combo[u], combo[v])
            if tb is None or not _bond_matches(pb, tb):
                ok = False
                break
        if ok:
            results.append(tuple(combo))
    return sorted(results)


def all_simple_cycles(g: MolGraph, max_len: int = 12) -> list[frozenset]:
    """Every simple cycle (as an atom set) up to max_len, by DFS."""
    cycles = set()

    def walk(start, current, path, visited):
        for j, _ in g.neighbors(current):
            if j == start and len(path) >= 3:
                cycles.add(frozenset(path))
            elif j not in visited and j > start and len(path) < max_len:
                walk(start, j, path + [j], visited | {j})

    for start in range(g.n_atoms):
        walk(start, start, [start], {start})
    return sorted(cycles, key=lambda c: (len(c), sorted(c)))


def finite_difference(fn, arrays: list[np.ndarray], eps: float = 1e-6):
    """Central-difference gradients of scalar fn(arrays) w.r.t. each array."""
    grads = []
    for arr in arrays:
        g = np.zeros_like(arr)
        flat = arr.reshape(-1) if arr.shape else arr.reshape(1)
        gflat = g.reshape(-1) if arr.shape else g.reshape(1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            lp = fn()
            flat[i] = orig - eps
            lm = fn()
            flat[i] = orig
            gflat[i] = (lp - lm) / (2 * eps)
        grads.append(g)
    return grads


def relative_tensor_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    denom = max(np.linalg.norm(numeric), np.linalg.norm(analytic), 1e-10)
    return float(np.linalg.norm(analytic - numeric) / denom)
