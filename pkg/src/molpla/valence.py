"""Allowed-valence table and valence checking.

The table covers the organic subset; unknown (element, charge) pairs skip
the check entirely. Aromatic bonds contribute floor(1.5 * count) so that
ring-fusion atoms (three aromatic bonds) sum to 4, matching their Kekulé
count.
"""

from __future__ import annotations

from dataclasses import dataclass

from .graph import MolGraph
from .vocab import SYMBOL_TO_Z

# element Z -> tuple of allowed total valences (sorted ascending)
_BASE: dict[int, tuple[int, ...]] = {
    SYMBOL_TO_Z["B"]: (3,),
    SYMBOL_TO_Z["C"]: (4,),
    SYMBOL_TO_Z["N"]: (3,),
    SYMBOL_TO_Z["O"]: (2,),
    SYMBOL_TO_Z["S"]: (2, 4, 6),
    SYMBOL_TO_Z["P"]: (3, 5),
    SYMBOL_TO_Z["F"]: (1,),
    SYMBOL_TO_Z["Cl"]: (1,),
    SYMBOL_TO_Z["Br"]: (1,),
    SYMBOL_TO_Z["I"]: (1,),
    SYMBOL_TO_Z["Si"]: (4,),
}

# (Z, charge) overrides
_CHARGED: dict[tuple[int, int], tuple[int, ...]] = {
    (SYMBOL_TO_Z["N"], 1): (4,),
    (SYMBOL_TO_Z["O"], -1): (1,),
}


def allowed_valences(atomic_number: int | None, charge: int | None) -> tuple[int, ...] | None:
    """Allowed valence set for an (element, charge) pair, or None if the
    combination is outside the table (then no check applies)."""
    if atomic_number is None:
        return None
    c = charge or 0
    if c != 0:
        return _CHARGED.get((atomic_number, c))
    return _BASE.get(atomic_number)


@dataclass(frozen=True)
class ValenceViolation:
    atom_index: int
    atomic_number: int
    observed: int
    allowed: tuple[int, ...]

    def __str__(self) -> str:
        return (f"atom {self.atom_index} (Z={self.atomic_number}) valence "
                f"{self.observed} exceeds allowed {self.allowed}")


def valence_check(g: MolGraph) -> list[ValenceViolation]:
    """List valence violations for all non-stub atoms.

    Masked bonds are skipped; a violation is a valence sum (bond orders plus
    explicit hydrogens) strictly above the largest allowed valence.
    """
    violations = []
    for i, atom in enumerate(g.atoms):
        if atom.is_stub:
            continue
        allowed = allowed_valences(atom.atomic_number, atom.formal_charge)
        if allowed is None:
            continue
        observed = g.bond_order_sum(i, masked_as_one=False) + (atom.num_explicit_hs or 0)
        if observed > allowed[-1]:
            violations.append(ValenceViolation(i, atom.atomic_number, observed, allowed))
    return violations


def implicit_h_fill(atomic_number: int, charge: int, bond_sum: int) -> int | None:
    """Hydrogens the parser adds to an unbracketed atom: fill up to the
    smallest allowed valence >= bond_sum. None when the element has no table
    entry (then 0 hydrogens are added) or the bonds already exceed every
    allowed valence (caller raises)."""
    allowed = allowed_valences(atomic_number, charge)
    if allowed is None:
        return None
    for v in allowed:
        if bond_sum <= v:
            return v - bond_sum
    return -1  # sentinel: exceeds every allowed valence
