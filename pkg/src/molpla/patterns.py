"""Functional-group pattern registry and condition vectors.

The registry is a versioned data file (``data/patterns.json``) of 64 slots;
unused slots are reserved and always contribute a 0 bit. A condition vector
marks, for one R-group, which patterns match its non-stub subgraph.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .graph import MolGraph
from .match import Pattern, has_match

REGISTRY_VERSION = 1
CONDITION_BITS = 64

# (name, pattern_smiles, {atom_index: constraint_obj}); order defines bits.
_DEFS: list[tuple[str, str, dict[int, dict]]] = [
    ("hydroxyl", "O", {0: {"min_h": 1, "max_degree": 1}}),
    ("primary_amine", "N", {0: {"min_h": 2, "max_degree": 1}}),
    ("secondary_amine", "N", {0: {"h_count": 1, "degree": 2}}),
    ("tertiary_amine", "N", {0: {"h_count": 0, "degree": 3}}),
    ("amide", "NC=O", {}),
    ("ester", "C(=O)OC", {}),
    ("ether", "COC", {1: {"h_count": 0}}),
    ("carbonyl", "C=O", {}),
    ("carboxylic_acid", "C(=O)O", {2: {"min_h": 1}}),
    ("ketone", "CC=O", {0: {"any_aromatic": True}, 1: {"h_count": 0}}),
    ("aldehyde", "C=O", {0: {"min_h": 1}}),
    ("nitro", "[N+](=O)[O-]", {}),
    ("nitrile", "C#N", {}),
    ("sulfonamide", "NS(=O)=O", {}),
    ("sulfone", "S(=O)=O", {}),
    ("thiol", "S", {0: {"min_h": 1, "max_degree": 1}}),
    ("thioether", "CSC", {1: {"h_count": 0}}),
    ("fluoro", "F", {}),
    ("chloro", "Cl", {}),
    ("bromo", "Br", {}),
    ("iodo", "I", {}),
    ("aromatic_carbocycle", "c1ccccc1", {}),
    ("aromatic_n_heterocycle", "n", {0: {"in_ring": True}}),
    ("aromatic_o_heterocycle", "o", {0: {"in_ring": True}}),
    ("aromatic_s_heterocycle", "s", {0: {"in_ring": True}}),
    ("saturated_n_heterocycle", "N", {0: {"in_ring": True}}),
    ("saturated_o_heterocycle", "O", {0: {"in_ring": True}}),
    ("saturated_s_heterocycle", "S", {0: {"in_ring": True}}),
    ("alkyl_chain", "CC", {0: {"in_ring": False}, 1: {"in_ring": False}}),
    ("any_carbon", "C", {0: {"any_aromatic": True}}),
    ("trifluoromethyl", "C(F)(F)F", {}),
    ("urea", "NC(=O)N", {}),
    ("guanidine", "NC(=N)N", {}),
    ("phosphoryl", "P=O", {}),
    ("alkene", "C=C", {}),
    ("alkyne", "C#C", {}),
    ("phenol", "Oc1ccccc1", {0: {"min_h": 1}}),
    ("aniline", "Nc1ccccc1", {}),
    ("benzylic_carbon", "Cc1ccccc1", {0: {"in_ring": False}}),
    ("methoxy", "OC", {1: {"h_count": 3}}),
    ("dimethylamino", "N(C)C", {1: {"h_count": 3}, 2: {"h_count": 3}}),
    # a decoupled double-bonded oxygen (e.g. a ketone's =O severed by the
    # Murcko rule) is a bare O with no hydrogens and no heavy neighbors
    ("oxo", "O", {0: {"h_count": 0, "max_degree": 0}}),
]


@dataclass(frozen=True)
class RegistryEntry:
    index: int
    name: str
    pattern: Pattern | None  # None for reserved slots


class PatternRegistry:
    def __init__(self, entries: list[RegistryEntry], version: int):
        if len(entries) != CONDITION_BITS:
            raise ValueError(f"registry must have {CONDITION_BITS} slots")
        self.entries = entries
        self.version = version
        self._by_name = {e.name: e for e in entries if e.pattern is not None}

    @property
    def active(self) -> list[RegistryEntry]:
        return [e for e in self.entries if e.pattern is not None]

    def names(self) -> list[str]:
        return [e.name for e in self.active]

    def resolve(self, names) -> np.ndarray:
        """Condition vector from named bits."""
        bits = np.zeros(CONDITION_BITS, dtype=np.uint8)
        for name in names:
            entry = self._by_name.get(name)
            if entry is None:
                raise KeyError(f"unknown pattern name {name!r}")
            bits[entry.index] = 1
        return bits

    def condition_vector(self, rg: MolGraph) -> np.ndarray:
        """Bits over the R-group's non-stub subgraph. The R-group must carry
        exactly one stub (decoupled form)."""
        non_stub = [i for i, a in enumerate(rg.atoms) if not a.is_stub]
        if len(non_stub) == rg.n_atoms:
            sub = rg
        else:
            sub, _ = rg.subgraph(non_stub)
        bits = np.zeros(CONDITION_BITS, dtype=np.uint8)
        if sub.n_atoms == 0:
            return bits
        for e in self.entries:
            if e.pattern is not None and has_match(sub, e.pattern):
                bits[e.index] = 1
        return bits

    def to_obj(self) -> dict:
        slots = []
        for e in self.entries:
            if e.pattern is None:
                slots.append({"index": e.index, "name": e.name,
                              "pattern_smiles": None, "constraints": {}})
            else:
                slots.append({
                    "index": e.index,
                    "name": e.name,
                    "pattern_smiles": _DEFS[e.index][1],
                    "constraints": {str(k): v.to_obj()
                                    for k, v in e.pattern.constraints.items()},
                })
        return {"registry_version": self.version, "patterns": slots}


def _build_default() -> PatternRegistry:
    entries = []
    for i, (name, smi, cons) in enumerate(_DEFS):
        entries.append(RegistryEntry(i, name, Pattern.from_smiles(smi, cons, name)))
    for i in range(len(_DEFS), CONDITION_BITS):
        entries.append(RegistryEntry(i, f"reserved_{i}", None))
    return PatternRegistry(entries, REGISTRY_VERSION)


def load_registry_obj(obj: dict) -> PatternRegistry:
    entries = []
    for slot in obj["patterns"]:
        if slot["pattern_smiles"] is None:
            entries.append(RegistryEntry(slot["index"], slot["name"], None))
        else:
            entries.append(RegistryEntry(
                slot["index"], slot["name"],
                Pattern.from_smiles(slot["pattern_smiles"],
                                    {int(k): v for k, v in slot["constraints"].items()},
                                    slot["name"])))
    return PatternRegistry(entries, obj["registry_version"])


_default: PatternRegistry | None = None


def default_registry() -> PatternRegistry:
    """The registry from the shipped data file (falls back to the in-code
    definitions, which are identical)."""
    global _default
    if _default is None:
        try:
            text = (resources.files("molpla") / "data" / "patterns.json").read_text()
            _default = load_registry_obj(json.loads(text))
        except FileNotFoundError:
            _default = _build_default()
    return _default


def condition_vector(rg: MolGraph) -> np.ndarray:
    return default_registry().condition_vector(rg)


def bits_to_string(bits: np.ndarray) -> str:
    return "".join("1" if b else "0" for b in bits)


def string_to_bits(s: str) -> np.ndarray:
    return np.array([1 if ch == "1" else 0 for ch in s], dtype=np.uint8)
