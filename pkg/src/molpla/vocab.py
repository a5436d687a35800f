"""Attribute vocabularies for molecular graphs.

Every atom/bond attribute is a small categorical with a fixed table size;
the last index of each table is reserved for the MASK sentinel (represented
as ``None`` on the data model side). The two boolean tables have no spare
slot, so their MASK embeds as row 0.
"""

from __future__ import annotations

# Node attribute table sizes, in canonical order.
N_ATOMIC_NUMBER = 128
N_FORMAL_CHARGE = 11
N_CHIRALITY = 9
N_HYBRIDIZATION = 9
N_NUM_EXPLICIT_HS = 9
N_AROMATIC = 2

# Edge attribute table sizes, in canonical order.
N_BOND_TYPE = 22
N_BOND_DIRECTION = 7
N_BOND_STEREO = 6
N_CONJUGATED = 2
N_BOND_AROMATIC = 2

NODE_TABLE_SIZES = (
    N_ATOMIC_NUMBER,
    N_FORMAL_CHARGE,
    N_CHIRALITY,
    N_HYBRIDIZATION,
    N_NUM_EXPLICIT_HS,
    N_AROMATIC,
)
EDGE_TABLE_SIZES = (
    N_BOND_TYPE,
    N_BOND_DIRECTION,
    N_BOND_STEREO,
    N_CONJUGATED,
    N_BOND_AROMATIC,
)

NODE_ATTR_NAMES = (
    "atomic_number",
    "formal_charge",
    "chirality_tag",
    "hybridization",
    "num_explicit_hs",
    "aromaticity",
)
EDGE_ATTR_NAMES = (
    "bond_type",
    "bond_direction",
    "bond_stereochemistry",
    "conjugation",
    "aromaticity",
)

# Chirality tags (categorical, no 3D perception).
CHI_NONE = 0
CHI_CW = 1  # @@
CHI_CCW = 2  # @
CHI_OTHER = 3

# Hybridization codes, derived heuristically from structure.
HYB_NONE = 0
HYB_S = 1
HYB_SP = 2
HYB_SP2 = 3
HYB_SP3 = 4
HYB_SP3D = 5
HYB_SP3D2 = 6
HYB_OTHER = 7

# Bond type codes; 4..20 are reserved (dative and exotic orders).
BOND_SINGLE = 0
BOND_DOUBLE = 1
BOND_TRIPLE = 2
BOND_AROMATIC = 3

# Bond direction codes.
DIR_NONE = 0
DIR_UP = 1  # /
DIR_DOWN = 2  # \

# Bond stereochemistry codes (parsed SMILES never sets these; reserved).
STEREO_NONE = 0
STEREO_ANY = 1
STEREO_Z = 2
STEREO_E = 3
STEREO_OTHER = 4

# MASK embedding row per table (last index; boolean tables fold to row 0).
MASK_ATOMIC_NUMBER = N_ATOMIC_NUMBER - 1
MASK_FORMAL_CHARGE = N_FORMAL_CHARGE - 1
MASK_CHIRALITY = N_CHIRALITY - 1
MASK_HYBRIDIZATION = N_HYBRIDIZATION - 1
MASK_NUM_EXPLICIT_HS = N_NUM_EXPLICIT_HS - 1
MASK_AROMATIC = 0
MASK_BOND_TYPE = N_BOND_TYPE - 1
MASK_BOND_DIRECTION = N_BOND_DIRECTION - 1
MASK_BOND_STEREO = N_BOND_STEREO - 1
MASK_CONJUGATED = 0
MASK_BOND_AROMATIC = 0

NODE_MASK_INDICES = (
    MASK_ATOMIC_NUMBER,
    MASK_FORMAL_CHARGE,
    MASK_CHIRALITY,
    MASK_HYBRIDIZATION,
    MASK_NUM_EXPLICIT_HS,
    MASK_AROMATIC,
)
EDGE_MASK_INDICES = (
    MASK_BOND_TYPE,
    MASK_BOND_DIRECTION,
    MASK_BOND_STEREO,
    MASK_CONJUGATED,
    MASK_BOND_AROMATIC,
)

# Valid chemical ranges (everything outside is out-of-vocabulary).
MAX_ATOMIC_NUMBER = 118
MIN_FORMAL_CHARGE = -5
MAX_FORMAL_CHARGE = 4
MAX_NUM_EXPLICIT_HS = 7

ELEMENTS = (
    "H", "He", "Li", "Be", "B", "C", "N", "O", "F", "Ne",
    "Na", "Mg", "Al", "Si", "P", "S", "Cl", "Ar", "K", "Ca",
    "Sc", "Ti", "V", "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn",
    "Ga", "Ge", "As", "Se", "Br", "Kr", "Rb", "Sr", "Y", "Zr",
    "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag", "Cd", "In", "Sn",
    "Sb", "Te", "I", "Xe", "Cs", "Ba", "La", "Ce", "Pr", "Nd",
    "Pm", "Sm", "Eu", "Gd", "Tb", "Dy", "Ho", "Er", "Tm", "Yb",
    "Lu", "Hf", "Ta", "W", "Re", "Os", "Ir", "Pt", "Au", "Hg",
    "Tl", "Pb", "Bi", "Po", "At", "Rn", "Fr", "Ra", "Ac", "Th",
    "Pa", "U", "Np", "Pu", "Am", "Cm", "Bk", "Cf", "Es", "Fm",
    "Md", "No", "Lr", "Rf", "Db", "Sg", "Bh", "Hs", "Mt", "Ds",
    "Rg", "Cn", "Nh", "Fl", "Mc", "Lv", "Ts", "Og",
)

SYMBOL_TO_Z = {sym: z for z, sym in enumerate(ELEMENTS, start=1)}
Z_TO_SYMBOL = {z: sym for sym, z in SYMBOL_TO_Z.items()}

# Organic subset: writable without brackets when charge/H-count are default.
ORGANIC_SUBSET = {"B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I"}
AROMATIC_SYMBOLS = {"b", "c", "n", "o", "p", "s"}

# Standard atomic weights for the descriptor report (common elements; the
# bundled corpus stays inside this set, unknown elements contribute 0).
ATOMIC_MASS = {
    1: 1.008, 2: 4.003, 3: 6.941, 4: 9.012, 5: 10.811, 6: 12.011,
    7: 14.007, 8: 15.999, 9: 18.998, 10: 20.180, 11: 22.990, 12: 24.305,
    13: 26.982, 14: 28.086, 15: 30.974, 16: 32.066, 17: 35.453, 18: 39.948,
    19: 39.098, 20: 40.078, 26: 55.845, 29: 63.546, 30: 65.38, 33: 74.922,
    34: 78.971, 35: 79.904, 53: 126.904,
}


def atom_embedding_indices(atomic_number, formal_charge, chirality,
                           hybridization, num_explicit_hs, aromatic):
    """Map one atom's attributes to its six embedding-table rows.

    ``None`` is the MASK sentinel. Raises IndexError on out-of-vocabulary
    values, matching the encoder contract.
    """
    if atomic_number is None:
        z = MASK_ATOMIC_NUMBER
    elif 1 <= atomic_number <= MAX_ATOMIC_NUMBER:
        z = atomic_number
    else:
        raise IndexError(f"atomic number {atomic_number} out of vocabulary")
    if formal_charge is None:
        c = MASK_FORMAL_CHARGE
    elif MIN_FORMAL_CHARGE <= formal_charge <= MAX_FORMAL_CHARGE:
        c = formal_charge - MIN_FORMAL_CHARGE
    else:
        raise IndexError(f"formal charge {formal_charge} out of vocabulary")
    if chirality is None:
        ch = MASK_CHIRALITY
    elif 0 <= chirality < MASK_CHIRALITY:
        ch = chirality
    else:
        raise IndexError(f"chirality tag {chirality} out of vocabulary")
    if hybridization is None:
        hy = MASK_HYBRIDIZATION
    elif 0 <= hybridization < MASK_HYBRIDIZATION:
        hy = hybridization
    else:
        raise IndexError(f"hybridization {hybridization} out of vocabulary")
    if num_explicit_hs is None:
        nh = MASK_NUM_EXPLICIT_HS
    elif 0 <= num_explicit_hs <= MAX_NUM_EXPLICIT_HS:
        nh = num_explicit_hs
    else:
        raise IndexError(f"H count {num_explicit_hs} out of vocabulary")
    ar = MASK_AROMATIC if aromatic is None else int(bool(aromatic))
    return (z, c, ch, hy, nh, ar)


def bond_embedding_indices(bond_type, direction, stereo, conjugated, aromatic):
    """Map one bond's attributes to its five embedding-table rows."""
    if bond_type is None:
        bt = MASK_BOND_TYPE
    elif 0 <= bond_type < MASK_BOND_TYPE:
        bt = bond_type
    else:
        raise IndexError(f"bond type {bond_type} out of vocabulary")
    if direction is None:
        d = MASK_BOND_DIRECTION
    elif 0 <= direction < MASK_BOND_DIRECTION:
        d = direction
    else:
        raise IndexError(f"bond direction {direction} out of vocabulary")
    if stereo is None:
        st = MASK_BOND_STEREO
    elif 0 <= stereo < MASK_BOND_STEREO:
        st = stereo
    else:
        raise IndexError(f"bond stereo {stereo} out of vocabulary")
    cj = MASK_CONJUGATED if conjugated is None else int(bool(conjugated))
    ar = MASK_BOND_AROMATIC if aromatic is None else int(bool(aromatic))
    return (bt, d, st, cj, ar)
