"""Pattern definition and VF2-style subgraph monomorphism matching.

Patterns are MolGraph-shaped templates: a stub atom (all attributes MASK)
is a full wildcard, and per-atom constraints (exact/min/max degree, exact
or minimum H count, ring membership) narrow matches further. Pattern edges
must exist in the target (monomorphism), so fused-ring targets still match
plain ring patterns.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import vocab
from .graph import MolGraph
from .rings import ring_info
from .smiles import parse_smiles


@dataclass(frozen=True)
class AtomConstraint:
    degree: int | None = None  # exact neighbor count
    min_degree: int | None = None
    max_degree: int | None = None
    h_count: int | None = None  # exact num_explicit_hs
    min_h: int | None = None
    in_ring: bool | None = None
    any_aromatic: bool = False  # relax the aromatic-flag equality

    @staticmethod
    def from_obj(obj: dict) -> "AtomConstraint":
        return AtomConstraint(
            degree=obj.get("degree"),
            min_degree=obj.get("min_degree"),
            max_degree=obj.get("max_degree"),
            h_count=obj.get("h_count"),
            min_h=obj.get("min_h"),
            in_ring=obj.get("in_ring"),
            any_aromatic=bool(obj.get("any_aromatic", False)),
        )

    def to_obj(self) -> dict:
        obj = {}
        for name in ("degree", "min_degree", "max_degree", "h_count", "min_h",
                     "in_ring"):
            value = getattr(self, name)
            if value is not None:
                obj[name] = value
        if self.any_aromatic:
            obj["any_aromatic"] = True
        return obj


@dataclass(frozen=True)
class Pattern:
    graph: MolGraph
    constraints: dict[int, AtomConstraint] = field(default_factory=dict)
    name: str = ""

    def __post_init__(self):
        if self.graph.n_atoms == 0:
            raise ValueError("empty pattern")
        if not self.graph.is_connected():
            raise ValueError("pattern must be connected")

    @staticmethod
    def from_smiles(text: str, constraints: dict[int, dict] | None = None,
                    name: str = "") -> "Pattern":
        g = parse_smiles(text)
        cons = {int(k): AtomConstraint.from_obj(v)
                for k, v in (constraints or {}).items()}
        return Pattern(g, cons, name)


def _atom_matches(p: MolGraph, pi: int, t: MolGraph, ti: int,
                  cons: AtomConstraint | None, t_ring: tuple[bool, ...]) -> bool:
    pa, ta = p.atoms[pi], t.atoms[ti]
    if not pa.is_stub:
        if ta.is_stub:
            return False
        if pa.atomic_number is not None and pa.atomic_number != ta.atomic_number:
            return False
        if pa.formal_charge is not None and pa.formal_charge != (ta.formal_charge or 0):
            return False
        aromatic_relaxed = cons.any_aromatic if cons else False
        if not aromatic_relaxed and pa.aromatic is not None:
            if bool(pa.aromatic) != bool(ta.aromatic):
                return False
    if cons is None:
        return True
    deg = t.degree(ti)
    if cons.degree is not None and deg != cons.degree:
        return False
    if cons.min_degree is not None and deg < cons.min_degree:
        return False
    if cons.max_degree is not None and deg > cons.max_degree:
        return False
    h = ta.num_explicit_hs or 0
    if cons.h_count is not None and h != cons.h_count:
        return False
    if cons.min_h is not None and h < cons.min_h:
        return False
    if cons.in_ring is not None and t_ring[ti] != cons.in_ring:
        return False
    return True


def _bond_matches(pb, tb) -> bool:
    if pb.bond_type is None:  # wildcard edge
        return True
    if tb.bond_type is None:
        return False
    if pb.bond_type == vocab.BOND_AROMATIC:
        return tb.bond_type == vocab.BOND_AROMATIC or bool(tb.aromatic)
    return pb.bond_type == tb.bond_type


def match_pattern(g: MolGraph, p: Pattern) -> list[tuple[int, ...]]:
    """All embeddings of pattern ``p`` into ``g``.

    Each result maps pattern atom k to graph atom result[k]. Results are
    sorted for determinism; an empty list means no match.
    """
    pg = p.graph
    np_, nt = pg.n_atoms, g.n_atoms
    if np_ > nt:
        return []
    t_ring = ring_info(g).atom_in_ring

    # match order: BFS through the connected pattern so each new atom has a
    # matched neighbor to anchor on
    order = [0]
    seen = {0}
    anchor: dict[int, int] = {}
    queue = [0]
    while queue:
        i = queue.pop(0)
        for j, _ in pg.neighbors(i):
            if j not in seen:
                seen.add(j)
                anchor[j] = i
                order.append(j)
                queue.append(j)

    results: list[tuple[int, ...]] = []
    mapping: dict[int, int] = {}
    used: set[int] = set()

    def backtrack(step: int) -> None:
        if step == np_:
            results.append(tuple(mapping[k] for k in range(np_)))
            return
        pi = order[step]
        cons = p.constraints.get(pi)
        if step == 0:
            candidates = range(nt)
        else:
            ai = anchor[pi]
            candidates = [j for j, _ in g.neighbors(mapping[ai])]
        for ti in candidates:
            if ti in used:
                continue
            if not _atom_matches(pg, pi, g, ti, cons, t_ring):
                continue
            ok = True
            for pj, pb in pg.neighbors(pi):
                if pj in mapping:
                    tb = g.bond_between(ti, mapping[pj])
                    if tb is None or not _bond_matches(pb, tb):
                        ok = False
                        break
            if not ok:
                continue
            mapping[pi] = ti
            used.add(ti)
            backtrack(step + 1)
            del mapping[pi]
            used.discard(ti)

    backtrack(0)
    results.sort()
    return results


def has_match(g: MolGraph, p: Pattern) -> bool:
    """Cheaper early-exit variant of match_pattern."""
    pg = p.graph
    np_, nt = pg.n_atoms, g.n_atoms
    if np_ > nt:
        return False
    t_ring = ring_info(g).atom_in_ring
    order = [0]
    seen = {0}
    anchor: dict[int, int] = {}
    queue = [0]
    while queue:
        i = queue.pop(0)
        for j, _ in pg.neighbors(i):
            if j not in seen:
                seen.add(j)
                anchor[j] = i
                order.append(j)
                queue.append(j)

    mapping: dict[int, int] = {}
    used: set[int] = set()

    def backtrack(step: int) -> bool:
        if step == np_:
            return True
        pi = order[step]
        cons = p.constraints.get(pi)
        candidates = (range(nt) if step == 0
                      else [j for j, _ in g.neighbors(mapping[anchor[pi]])])
        for ti in candidates:
            if ti in used:
                continue
            if not _atom_matches(pg, pi, g, ti, cons, t_ring):
                continue
            ok = True
            for pj, pb in pg.neighbors(pi):
                if pj in mapping:
                    tb = g.bond_between(ti, mapping[pj])
                    if tb is None or not _bond_matches(pb, tb):
                        ok = False
                        break
            if not ok:
                continue
            mapping[pi] = ti
            used.add(ti)
            if backtrack(step + 1):
                return True
            del mapping[pi]
            used.discard(ti)
        return False

    return backtrack(0)
