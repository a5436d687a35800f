"""SMILES parsing and writing for the supported subset.

Supported: organic subset, brackets (charge, H count, @/@@; isotopes are
parsed and dropped), ring closures including %nn, `.` components, `*` stub
atoms and `~` masked bonds, /\\ bond directions. Aromaticity comes from the
notation (lowercase, `:`), never from perception. Parsed graphs are
hydrogen-suppressed: implicit hydrogens are folded into num_explicit_hs, a
masked bond counting as order 1 for that purpose.
"""

from __future__ import annotations

import re

from . import vocab
from .graph import AtomAttrs, BondAttrs, MolGraph, masked_bond, stub_atom
from .valence import ValenceViolation, allowed_valences, implicit_h_fill


class SmilesSyntaxError(ValueError):
    """Malformed SMILES text."""


class ValenceError(ValueError):
    """A non-stub atom exceeds its allowed valence after H assignment."""


_BOND_SYMBOLS = {"-", "=", "#", ":", "~", "/", "\\"}
_BRACKET_RE = re.compile(
    r"^(?P<isotope>\d+)?(?P<symbol>\*|[A-Z][a-z]?|[bcnops])"
    r"(?P<chiral>@@|@)?(?P<hcount>H\d*)?(?P<charge>\+\+|--|[+-]\d*)?$"
)

_MULTIPLE = (vocab.BOND_DOUBLE, vocab.BOND_TRIPLE, vocab.BOND_AROMATIC)


class _ParsedAtom:
    __slots__ = ("symbol", "aromatic", "charge", "chirality", "h_count", "is_stub")

    def __init__(self, symbol, aromatic, charge, chirality, h_count, is_stub):
        self.symbol = symbol
        self.aromatic = aromatic
        self.charge = charge
        self.chirality = chirality
        self.h_count = h_count  # None = implicit (fill later)
        self.is_stub = is_stub


def _parse_bracket(content: str, pos: int) -> _ParsedAtom:
    m = _BRACKET_RE.match(content)
    if not m:
        raise SmilesSyntaxError(f"bad bracket atom [{content}] at position {pos}")
    symbol = m.group("symbol")
    if symbol == "*":
        return _ParsedAtom("*", None, None, None, None, True)
    aromatic = symbol.islower()
    element = symbol.capitalize() if aromatic else symbol
    if element not in vocab.SYMBOL_TO_Z:
        raise SmilesSyntaxError(f"unknown element '{symbol}' at position {pos}")
    chiral = m.group("chiral")
    chirality = (vocab.CHI_CW if chiral == "@@"
                 else vocab.CHI_CCW if chiral == "@" else vocab.CHI_NONE)
    hc = m.group("hcount")
    h_count = 0
    if hc is not None:
        h_count = int(hc[1:]) if len(hc) > 1 else 1
    cg = m.group("charge")
    charge = 0
    if cg:
        if cg == "++":
            charge = 2
        elif cg == "--":
            charge = -2
        elif len(cg) == 1:
            charge = 1 if cg == "+" else -1
        else:
            charge = int(cg) if cg[0] == "+" else -int(cg[1:])
    return _ParsedAtom(element, aromatic, charge, chirality, h_count, False)


def parse_smiles(text: str) -> MolGraph:
    """Parse a SMILES string into a MolGraph.

    Raises SmilesSyntaxError on malformed text and ValenceError when an
    unbracketed atom's bonds exceed every allowed valence, or a bracket
    atom's declared bonds+H do.
    """
    if not text or not text.strip():
        raise SmilesSyntaxError("empty SMILES")
    text = text.strip()
    if any(ch.isspace() for ch in text):
        raise SmilesSyntaxError("whitespace inside SMILES")

    parsed: list[_ParsedAtom] = []
    bonds: list[tuple[int, int, str | None]] = []  # (u, v, symbol written u->v)
    prev: int | None = None
    pending: str | None = None
    branch_stack: list[int] = []
    ring_open: dict[int, tuple[int, str | None]] = {}

    def add_atom(pa: _ParsedAtom) -> None:
        nonlocal prev, pending
        idx = len(parsed)
        parsed.append(pa)
        if prev is not None:
            bonds.append((prev, idx, pending))
        elif pending is not None:
            raise SmilesSyntaxError("dangling bond symbol before atom start")
        prev = idx
        pending = None

    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch == "(":
            if prev is None:
                raise SmilesSyntaxError(f"branch before any atom at position {i}")
            if pending is not None:
                raise SmilesSyntaxError(f"bond symbol before '(' at position {i}")
            branch_stack.append(prev)
            i += 1
        elif ch == ")":
            if not branch_stack:
                raise SmilesSyntaxError(f"unbalanced ')' at position {i}")
            if pending is not None:
                raise SmilesSyntaxError(f"dangling bond before ')' at position {i}")
            prev = branch_stack.pop()
            i += 1
        elif ch == ".":
            if pending is not None or branch_stack:
                raise SmilesSyntaxError(f"misplaced '.' at position {i}")
            prev = None
            i += 1
        elif ch in _BOND_SYMBOLS:
            if pending is not None:
                raise SmilesSyntaxError(f"double bond symbol at position {i}")
            pending = ch
            i += 1
        elif ch.isdigit() or ch == "%":
            if ch == "%":
                if i + 2 >= n or not text[i + 1:i + 3].isdigit():
                    raise SmilesSyntaxError(f"bad %nn ring closure at position {i}")
                num = int(text[i + 1:i + 3])
                i += 3
            else:
                num = int(ch)
                i += 1
            if prev is None:
                raise SmilesSyntaxError("ring closure before any atom")
            if num in ring_open:
                other, open_sym = ring_open.pop(num)
                if other == prev:
                    raise SmilesSyntaxError(f"ring bond {num} closes on its own atom")
                sym = pending
                if open_sym is not None and sym is not None and open_sym != sym:
                    raise SmilesSyntaxError(f"conflicting ring bond symbols for {num}")
                if sym is None:
                    sym = open_sym
                # written orientation: open -> close
                bonds.append((other, prev, sym))
            else:
                ring_open[num] = (prev, pending)
            pending = None
        elif ch == "[":
            j = text.find("]", i)
            if j < 0:
                raise SmilesSyntaxError(f"unclosed bracket at position {i}")
            add_atom(_parse_bracket(text[i + 1:j], i))
            i = j + 1
        elif ch == "*":
            add_atom(_ParsedAtom("*", None, None, None, None, True))
            i += 1
        elif ch in vocab.AROMATIC_SYMBOLS:
            add_atom(_ParsedAtom(ch.upper(), True, 0, vocab.CHI_NONE, None, False))
            i += 1
        elif ch.isupper():
            symbol = ch
            if ch == "C" and i + 1 < n and text[i + 1] == "l":
                symbol, i = "Cl", i + 1
            elif ch == "B" and i + 1 < n and text[i + 1] == "r":
                symbol, i = "Br", i + 1
            if symbol not in vocab.ORGANIC_SUBSET:
                raise SmilesSyntaxError(
                    f"element '{symbol}' needs brackets at position {i}")
            add_atom(_ParsedAtom(symbol, False, 0, vocab.CHI_NONE, None, False))
            i += 1
        else:
            raise SmilesSyntaxError(f"unexpected character {ch!r} at position {i}")

    if pending is not None:
        raise SmilesSyntaxError("dangling bond symbol at end")
    if branch_stack:
        raise SmilesSyntaxError("unbalanced '('")
    if ring_open:
        raise SmilesSyntaxError(f"unclosed ring closures: {sorted(ring_open)}")
    if not parsed:
        raise SmilesSyntaxError("no atoms")

    return _build_graph(parsed, bonds)


def _build_graph(parsed: list[_ParsedAtom],
                 raw_bonds: list[tuple[int, int, str | None]]) -> MolGraph:
    seen_pairs = set()
    for u, v, _ in raw_bonds:
        pair = (u, v) if u < v else (v, u)
        if pair in seen_pairs:
            raise SmilesSyntaxError(f"duplicate bond between atoms {u} and {v}")
        seen_pairs.add(pair)
    bond_attrs: list[tuple[int, int, BondAttrs]] = []
    for u, v, sym in raw_bonds:
        stub_end = parsed[u].is_stub or parsed[v].is_stub
        if sym == "~":
            attrs = masked_bond()
        elif sym is None:
            if parsed[u].aromatic and parsed[v].aromatic:
                attrs = BondAttrs(vocab.BOND_AROMATIC, aromatic=True)
            elif stub_end:
                attrs = masked_bond()  # stubs attach through masked bonds
            else:
                attrs = BondAttrs(vocab.BOND_SINGLE)
        elif sym == "-":
            attrs = BondAttrs(vocab.BOND_SINGLE)
        elif sym == "=":
            attrs = BondAttrs(vocab.BOND_DOUBLE)
        elif sym == "#":
            attrs = BondAttrs(vocab.BOND_TRIPLE)
        elif sym == ":":
            attrs = BondAttrs(vocab.BOND_AROMATIC, aromatic=True)
        elif sym in ("/", "\\"):
            # direction is stored relative to the normalized u<v orientation
            direction = vocab.DIR_UP if sym == "/" else vocab.DIR_DOWN
            if u > v:
                direction = vocab.DIR_DOWN if direction == vocab.DIR_UP else vocab.DIR_UP
            attrs = BondAttrs(vocab.BOND_SINGLE, bond_direction=direction)
        else:  # pragma: no cover - tokenizer restricts symbols
            raise SmilesSyntaxError(f"unsupported bond symbol {sym!r}")
        bond_attrs.append((u, v, attrs))

    atoms = [stub_atom() if pa.is_stub else AtomAttrs(
        atomic_number=vocab.SYMBOL_TO_Z[pa.symbol],
        formal_charge=pa.charge,
        chirality_tag=pa.chirality,
        hybridization=vocab.HYB_NONE,  # derived below
        num_explicit_hs=pa.h_count if pa.h_count is not None else 0,
        aromatic=pa.aromatic,
    ) for pa in parsed]
    g = MolGraph(atoms, bond_attrs)

    # implicit hydrogen assignment + valence screening
    new_atoms = list(g.atoms)
    for i, pa in enumerate(parsed):
        if pa.is_stub:
            continue
        atom = new_atoms[i]
        bsum = g.bond_order_sum(i, masked_as_one=True)
        if pa.h_count is None:
            fill = implicit_h_fill(atom.atomic_number, atom.formal_charge or 0, bsum)
            if fill is None:
                fill = 0
            elif fill < 0:
                raise ValenceError(
                    f"atom {i} ({pa.symbol}) bond sum {bsum} exceeds allowed valence")
            new_atoms[i] = atom.replace(num_explicit_hs=fill)
        else:
            allowed = allowed_valences(atom.atomic_number, atom.formal_charge or 0)
            if allowed is not None and bsum + pa.h_count > allowed[-1]:
                raise ValenceError(
                    f"atom {i} ({pa.symbol}) valence {bsum + pa.h_count} exceeds "
                    f"allowed {allowed}")
    g = MolGraph(new_atoms, bond_attrs)
    return derive_attributes(g)


def derive_attributes(g: MolGraph) -> MolGraph:
    """Recompute the structure-derived attributes (hybridization, bond
    conjugation) from scratch. Pure function of the graph topology."""
    multiple_at = [False] * g.n_atoms
    for u, v, b in g.bonds:
        if b.bond_type in _MULTIPLE:
            multiple_at[u] = multiple_at[v] = True

    atoms = []
    for i, a in enumerate(g.atoms):
        if a.is_stub:
            atoms.append(a)
            continue
        n_triple = sum(1 for _, b in g.neighbors(i) if b.bond_type == vocab.BOND_TRIPLE)
        n_double = sum(1 for _, b in g.neighbors(i) if b.bond_type == vocab.BOND_DOUBLE)
        if a.aromatic:
            hyb = vocab.HYB_SP2
        elif n_triple or n_double >= 2:
            hyb = vocab.HYB_SP
        elif n_double:
            hyb = vocab.HYB_SP2
        elif a.atomic_number in _SP3_DEFAULT:
            hyb = vocab.HYB_SP3
        else:
            hyb = vocab.HYB_NONE
        atoms.append(a.replace(hybridization=hyb))

    bonds = []
    for u, v, b in g.bonds:
        if b.is_masked:
            bonds.append((u, v, b))
            continue
        if b.aromatic or b.bond_type == vocab.BOND_AROMATIC:
            conj = True
        else:
            def other_multiple(end: int) -> bool:
                return any(bb.bond_type in _MULTIPLE
                           for w, bb in g.neighbors(end) if w not in (u, v))
            if b.bond_type in (vocab.BOND_DOUBLE, vocab.BOND_TRIPLE):
                conj = other_multiple(u) or other_multiple(v)
            else:
                conj = other_multiple(u) and other_multiple(v)
        bonds.append((u, v, b.replace(conjugated=conj)))
    return MolGraph(atoms, bonds)


_SP3_DEFAULT = {vocab.SYMBOL_TO_Z[s] for s in
                ("B", "C", "N", "O", "F", "Si", "P", "S", "Cl", "Br", "I")}


# ---------------------------------------------------------------------------
# writer
# ---------------------------------------------------------------------------

def _atom_token(g: MolGraph, i: int, include_stereo: bool) -> str:
    a = g.atoms[i]
    if a.is_stub:
        return "*"
    symbol = vocab.Z_TO_SYMBOL[a.atomic_number]
    aromatic = bool(a.aromatic)
    if aromatic and symbol not in {"B", "C", "N", "O", "P", "S"}:
        raise ValueError(f"cannot write aromatic {symbol}")
    base = symbol.lower() if aromatic else symbol
    charge = a.formal_charge or 0
    chirality = a.chirality_tag if include_stereo else vocab.CHI_NONE
    h = a.num_explicit_hs or 0

    bsum = g.bond_order_sum(i, masked_as_one=True)
    fill = implicit_h_fill(a.atomic_number, charge, bsum) if charge == 0 else None
    default_h = fill if fill is not None and fill >= 0 else 0
    plain_ok = (charge == 0 and chirality in (None, vocab.CHI_NONE)
                and h == default_h and symbol in vocab.ORGANIC_SUBSET
                and fill is not None and fill >= 0)
    if plain_ok:
        return base
    parts = ["[", base]
    if chirality == vocab.CHI_CW:
        parts.append("@@")
    elif chirality == vocab.CHI_CCW:
        parts.append("@")
    if h == 1:
        parts.append("H")
    elif h > 1:
        parts.append(f"H{h}")
    if charge:
        sign = "+" if charge > 0 else "-"
        mag = abs(charge)
        parts.append(sign if mag == 1 else f"{sign}{mag}")
    parts.append("]")
    return "".join(parts)


def _bond_token(g: MolGraph, u: int, v: int, attrs: BondAttrs,
                include_stereo: bool) -> str:
    """Bond token for traversal orientation u -> v."""
    if attrs.is_masked:
        return "~"
    t = attrs.bond_type
    if t == vocab.BOND_AROMATIC:
        au, av = g.atoms[u], g.atoms[v]
        if au.aromatic and av.aromatic and not (au.is_stub or av.is_stub):
            return ""
        return ":"
    if t == vocab.BOND_DOUBLE:
        return "="
    if t == vocab.BOND_TRIPLE:
        return "#"
    if t != vocab.BOND_SINGLE:
        raise ValueError(f"cannot write bond type {t}")
    direction = attrs.bond_direction if include_stereo else vocab.DIR_NONE
    if direction in (vocab.DIR_UP, vocab.DIR_DOWN):
        if u > v:  # stored direction refers to the u<v orientation
            direction = (vocab.DIR_DOWN if direction == vocab.DIR_UP
                         else vocab.DIR_UP)
        return "/" if direction == vocab.DIR_UP else "\\"
    au, av = g.atoms[u], g.atoms[v]
    if au.aromatic and av.aromatic:
        return "-"  # otherwise it would re-parse as aromatic
    if au.is_stub or av.is_stub:
        return "-"  # otherwise it would re-parse as masked
    return ""


def _emit(g: MolGraph, priority: list[int], include_stereo: bool,
          sort_components: bool) -> tuple[str, list[int]]:
    """Emit SMILES visiting atoms by ascending ``priority``.

    Returns (text, order) where order[k] is the graph index of the k-th atom
    token emitted.
    """
    visited = [False] * g.n_atoms
    comp_of = g.components
    roots: dict[int, int] = {}
    for i in sorted(range(g.n_atoms), key=lambda i: priority[i]):
        roots.setdefault(comp_of[i], i)

    pieces_with_order: list[tuple[str, list[int]]] = []
    for comp in sorted(roots, key=lambda c: priority[roots[c]]):
        root = roots[comp]
        tree: dict[int, list[int]] = {i: [] for i in range(g.n_atoms)}
        back_edges: list[tuple[int, int]] = []  # (open, close)
        seen = {root}
        order_stack = [root]
        parent = {root: -1}
        # iterative DFS honoring priority
        stack = [(root, iter(sorted((j for j, _ in g.neighbors(root)),
                                    key=lambda j: priority[j])))]
        while stack:
            node, it = stack[-1]
            advanced = False
            for j in it:
                if j == parent.get(node):
                    continue
                if j in seen:
                    key = (j, node)
                    if (node, j) not in back_edges and key not in back_edges:
                        back_edges.append((j, node))
                    continue
                seen.add(j)
                parent[j] = node
                tree[node].append(j)
                stack.append((j, iter(sorted((k for k, _ in g.neighbors(j)),
                                             key=lambda k: priority[k]))))
                advanced = True
                break
            if not advanced:
                stack.pop()

        # wait-free ring number allocation
        ring_num_of: dict[tuple[int, int], int] = {}
        open_at: dict[int, list[tuple[int, int]]] = {}
        close_at: dict[int, list[tuple[int, int]]] = {}
        for oe in back_edges:
            open_at.setdefault(oe[0], []).append(oe)
            close_at.setdefault(oe[1], []).append(oe)
        free_nums = list(range(1, 100))
        order: list[int] = []
        out: list[str] = []

        def ring_digit(num: int) -> str:
            return str(num) if num < 10 else f"%{num:02d}"

        def emit_atom(i: int, bond_from: str) -> None:
            out.append(bond_from)
            out.append(_atom_token(g, i, include_stereo))
            order.append(i)
            for oe in open_at.get(i, ()):
                if not free_nums:
                    raise ValueError("ring closure numbers exhausted")
                num = free_nums.pop(0)
                ring_num_of[oe] = num
                out.append(ring_digit(num))
            for oe in close_at.get(i, ()):
                num = ring_num_of.pop(oe)
                free_nums.insert(0, num)
                free_nums.sort()
                u, v = oe  # written orientation: open -> close
                out.append(_bond_token(g, u, v, g.bond_between(u, v), include_stereo))
                out.append(ring_digit(num))

        def walk(i: int) -> None:
            children = tree[i]
            for k, j in enumerate(children):
                tok = _bond_token(g, i, j, g.bond_between(i, j), include_stereo)
                if k < len(children) - 1:
                    out.append("(")
                    emit_atom(j, tok)
                    walk(j)
                    out.append(")")
                else:
                    emit_atom(j, tok)
                    walk(j)

        emit_atom(root, "")
        walk(root)
        pieces_with_order.append(("".join(out), order))
        for i in order:
            visited[i] = True

    if sort_components:
        pieces_with_order.sort(key=lambda p: p[0])
    text = ".".join(p[0] for p in pieces_with_order)
    full_order: list[int] = []
    for _, order in pieces_with_order:
        full_order.extend(order)
    return text, full_order


def write_smiles(g: MolGraph) -> str:
    """Write SMILES in input-atom order (deterministic, stereo-preserving)."""
    return write_smiles_with_order(g)[0]


def write_smiles_with_order(g: MolGraph) -> tuple[str, list[int]]:
    """Write SMILES and return the emission order: ``order[k]`` is the input
    atom index that became atom ``k`` of the output text."""
    if g.n_atoms == 0:
        raise ValueError("cannot write an empty graph")
    return _emit(g, list(range(g.n_atoms)), include_stereo=True,
                 sort_components=False)
