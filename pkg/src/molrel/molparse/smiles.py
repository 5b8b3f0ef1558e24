"""SMILES reader producing :class:`MolecularGraph`.

Covers the organic subset (B C N O P S F Cl Br I and aromatic b c n o p s),
bracket atoms with isotope, chirality, hydrogen count, charge and atom class,
bonds ``- = # : / \\``, branches, ``.`` separated components and ring closures
(``1``-``9`` and ``%nn``). Chirality and ``/ \\`` are accepted and dropped.
Aromaticity is taken from lowercase symbols as written; no perception.
"""
from .types import Atom, MolecularGraph
from ..errors import ParseError

ORGANIC = {"B": (3,), "C": (4,), "N": (3, 5), "O": (2,), "P": (3, 5), "S": (2, 4, 6),
           "F": (1,), "Cl": (1,), "Br": (1,), "I": (1,)}
AROMATIC_ORGANIC = {"b": "B", "c": "C", "n": "N", "o": "O", "p": "P", "s": "S"}
AROMATIC_BRACKET = {"b": "B", "c": "C", "n": "N", "o": "O", "p": "P", "s": "S",
                    "se": "Se", "as": "As", "te": "Te"}

ELEMENTS = frozenset("""
H He Li Be B C N O F Ne Na Mg Al Si P S Cl Ar K Ca Sc Ti V Cr Mn Fe Co Ni Cu Zn
Ga Ge As Se Br Kr Rb Sr Y Zr Nb Mo Tc Ru Rh Pd Ag Cd In Sn Sb Te I Xe Cs Ba La
Ce Pr Nd Pm Sm Eu Gd Tb Dy Ho Er Tm Yb Lu Hf Ta W Re Os Ir Pt Au Hg Tl Pb Bi Po
At Rn Fr Ra Ac Th Pa U Np Pu Am Cm Bk Cf Es Fm Md No Lr Rf Db Sg Bh Hs Mt Ds Rg
Cn Nh Fl Mc Lv Ts Og
""".split())

BOND_SYMBOLS = {"-": 1, "=": 2, "#": 3, ":": "aromatic", "/": 1, "\\": 1}


class _Builder:
    def __init__(self):
        self.elements = []
        self.aromatic = []
        self.charges = []
        self.hcounts = []  # None -> implicit by valence
        self.isotopes = []
        self.bonds = {}

    def add_atom(self, element, aromatic, charge=0, hcount=None, isotope=None):
        self.isotopes.append(isotope)
        self.elements.append(element)
        self.aromatic.append(aromatic)
        self.charges.append(charge)
        self.hcounts.append(hcount)
        return len(self.elements) - 1

    def add_bond(self, i, j, order, pos):
        if i == j:
            raise ParseError("ring closure bonds an atom to itself", pos)
        key = (min(i, j), max(i, j))
        if key in self.bonds:
            raise ParseError(f"duplicate bond between atoms {i} and {j}", pos)
        if order is None:
            order = "aromatic" if self.aromatic[i] and self.aromatic[j] else 1
        self.bonds[key] = order


def parse_smiles(smiles):
    """Parse ``smiles`` into a :class:`MolecularGraph`.

    Raises :class:`ParseError` (with the offending character index) for
    unbalanced branches, dangling ring closures, misplaced bonds and unknown
    tokens.
    """
    if not isinstance(smiles, str):
        raise ParseError(f"expected str, got {type(smiles).__name__}")
    text = smiles.strip()
    if not text:
        raise ParseError("empty SMILES string", 0)

    b = _Builder()
    prev = None
    pending = None  # (order, position) of a bond symbol waiting for its second atom
    branches = []  # (atom, position of '(')
    rings = {}  # number -> (atom, order, position)
    i, n = 0, len(text)

    def attach(atom, pos):
        nonlocal prev, pending
        if prev is not None:
            b.add_bond(prev, atom, pending[0] if pending else None, pos)
        elif pending is not None:
            raise ParseError("bond symbol without a preceding atom", pending[1])
        prev, pending = atom, None

    while i < n:
        ch = text[i]
        if ch == "[":
            end = text.find("]", i + 1)
            if end < 0:
                raise ParseError("unterminated bracket atom", i)
            element, aromatic, charge, hcount, isotope = _parse_bracket(text[i + 1:end], i + 1)
            attach(b.add_atom(element, aromatic, charge, hcount, isotope), i)
            i = end + 1
        elif ch in "BCNOPSFI":
            if text.startswith("Cl", i) or text.startswith("Br", i):
                attach(b.add_atom(text[i:i + 2], False), i)
                i += 2
            else:
                attach(b.add_atom(ch, False), i)
                i += 1
        elif ch in AROMATIC_ORGANIC:
            attach(b.add_atom(AROMATIC_ORGANIC[ch], True), i)
            i += 1
        elif ch == "*":
            attach(b.add_atom("other", False), i)
            i += 1
        elif ch in BOND_SYMBOLS:
            if prev is None:
                raise ParseError(f"bond {ch!r} without a preceding atom", i)
            if pending is not None:
                raise ParseError("two consecutive bond symbols", i)
            pending = (BOND_SYMBOLS[ch], i)
            i += 1
        elif ch == "(":
            if prev is None:
                raise ParseError("branch opened before any atom", i)
            if pending is not None:
                raise ParseError("bond symbol before '('", pending[1])
            branches.append((prev, i))
            i += 1
        elif ch == ")":
            if not branches:
                raise ParseError("unbalanced ')'", i)
            if pending is not None:
                raise ParseError("dangling bond at end of branch", pending[1])
            prev, _ = branches.pop()
            i += 1
        elif ch.isdigit() or ch == "%":
            if prev is None:
                raise ParseError("ring closure before any atom", i)
            if ch == "%":
                digits = text[i + 1:i + 3]
                if len(digits) != 2 or not digits.isdigit():
                    raise ParseError("'%' must be followed by two digits", i)
                num, width = int(digits), 3
            else:
                num, width = int(ch), 1
            order = pending[0] if pending else None
            if num in rings:
                other, open_order, _ = rings.pop(num)
                if order is not None and open_order is not None and order != open_order:
                    raise ParseError(f"conflicting bond orders on ring closure {num}", i)
                b.add_bond(other, prev, order if order is not None else open_order, i)
            else:
                rings[num] = (prev, order, i)
            pending = None
            i += width
        elif ch == ".":
            if pending is not None:
                raise ParseError("bond symbol before '.'", pending[1])
            prev = None
            i += 1
        else:
            raise ParseError(f"unknown token {ch!r}", i)

    if pending is not None:
        raise ParseError("dangling bond at end of input", pending[1])
    if branches:
        raise ParseError("unbalanced '('", branches[-1][1])
    if rings:
        num, (_, _, pos) = min(rings.items(), key=lambda kv: kv[1][2])
        raise ParseError(f"ring closure {num} never closed", pos)
    if not b.elements:
        raise ParseError("no atoms", 0)
    return _finish(b, text)


def _parse_bracket(body, offset):
    j = 0
    while j < len(body) and body[j].isdigit():  # isotope
        j += 1
    isotope = int(body[:j]) if j else None
    rest = body[j:]
    if not rest:
        raise ParseError("bracket atom without element", offset + j)
    aromatic = False
    if rest[:2] in AROMATIC_BRACKET and rest[:2] in ("se", "as", "te"):
        element, aromatic, j = AROMATIC_BRACKET[rest[:2]], True, j + 2
    elif rest[0] in AROMATIC_BRACKET:
        element, aromatic, j = AROMATIC_BRACKET[rest[0]], True, j + 1
    elif rest[0] == "*":
        element, j = "other", j + 1
    elif rest[0].isupper():
        if len(rest) > 1 and rest[:2] in ELEMENTS:
            element, j = rest[:2], j + 2
        elif rest[0] in ELEMENTS:
            element, j = rest[0], j + 1
        else:
            raise ParseError(f"unknown element in [{body}]", offset + j)
    else:
        raise ParseError(f"unknown element in [{body}]", offset + j)

    # chirality: @, @@, @TH1, @AL2, @SP3, @TB12, @OH30
    if j < len(body) and body[j] == "@":
        j += 1
        if j < len(body) and body[j] == "@":
            j += 1
        elif body[j:j + 2] in ("TH", "AL", "SP", "TB", "OH"):
            j += 2
            while j < len(body) and body[j].isdigit():
                j += 1

    hcount = 0
    if j < len(body) and body[j] == "H":
        j += 1
        digits = ""
        while j < len(body) and body[j].isdigit():
            digits += body[j]
            j += 1
        hcount = int(digits) if digits else 1

    charge = 0
    if j < len(body) and body[j] in "+-":
        sign = 1 if body[j] == "+" else -1
        sym = body[j]
        j += 1
        if j < len(body) and body[j].isdigit():
            digits = ""
            while j < len(body) and body[j].isdigit():
                digits += body[j]
                j += 1
            charge = sign * int(digits)
        else:
            count = 1
            while j < len(body) and body[j] == sym:
                count += 1
                j += 1
            charge = sign * count

    if j < len(body) and body[j] == ":":
        j += 1
        if j >= len(body) or not body[j].isdigit():
            raise ParseError("atom class needs digits", offset + j)
        while j < len(body) and body[j].isdigit():
            j += 1

    if j != len(body):
        raise ParseError(f"unexpected {body[j]!r} in bracket atom", offset + j)
    return element, aromatic, charge, hcount, isotope


def _implicit_h(element, aromatic, bond_orders):
    valences = ORGANIC.get(element)
    if valences is None:
        return 0
    total = sum(1 if o == "aromatic" else o for o in bond_orders)
    if aromatic:
        # lowercase atoms donate one valence to the aromatic system
        return max(valences[0] - total - 1, 0)
    for v in valences:
        if v >= total:
            return v - total
    return 0


def _ring_bonds(num_atoms, bonds):
    """Bonds that are not bridges, i.e. lie on at least one cycle."""
    adj = [[] for _ in range(num_atoms)]
    for idx, (i, j) in enumerate(bonds):
        adj[i].append((j, idx))
        adj[j].append((i, idx))
    disc = [-1] * num_atoms
    low = [0] * num_atoms
    bridges = set()
    timer = 0
    for root in range(num_atoms):
        if disc[root] != -1:
            continue
        disc[root] = low[root] = timer
        timer += 1
        stack = [(root, -1, iter(adj[root]))]
        while stack:
            v, parent_edge, it = stack[-1]
            advanced = False
            for w, e in it:
                if e == parent_edge:
                    continue
                if disc[w] == -1:
                    disc[w] = low[w] = timer
                    timer += 1
                    stack.append((w, e, iter(adj[w])))
                    advanced = True
                    break
                low[v] = min(low[v], disc[w])
            if not advanced:
                stack.pop()
                if stack:
                    u = stack[-1][0]
                    low[u] = min(low[u], low[v])
                    if low[v] > disc[u]:
                        bridges.add(parent_edge)
    return {idx for idx in range(len(bonds)) if idx not in bridges}


def _fold_hydrogens(b):
    """Fold plain ``[H]`` atoms bonded to one heavy atom into its H count."""
    drop = set()
    extra = {}
    for a, el in enumerate(b.elements):
        if el != "H" or b.isotopes[a] is not None or b.charges[a] or b.hcounts[a]:
            continue
        nbrs = [j if i == a else i for i, j in b.bonds if a in (i, j)]
        if len(nbrs) != 1 or b.elements[nbrs[0]] == "H":
            continue
        drop.add(a)
        extra[nbrs[0]] = extra.get(nbrs[0], 0) + 1
    if not drop:
        return {}
    remap = {}
    for a in range(len(b.elements)):
        if a not in drop:
            remap[a] = len(remap)
    for name in ("elements", "aromatic", "charges", "hcounts", "isotopes"):
        setattr(b, name, [v for a, v in enumerate(getattr(b, name)) if a not in drop])
    kept = {}
    for (i, j), order in b.bonds.items():
        if i in drop or j in drop:
            continue
        kept[(remap[i], remap[j])] = order
    b.bonds = kept
    return {remap[a]: k for a, k in extra.items()}


def _finish(b, text):
    folded = _fold_hydrogens(b)
    n = len(b.elements)
    keys = sorted(b.bonds)
    orders = [b.bonds[k] for k in keys]
    incident = [[] for _ in range(n)]
    for (i, j), order in zip(keys, orders):
        incident[i].append(order)
        incident[j].append(order)
    ring = _ring_bonds(n, keys)
    in_ring = [False] * n
    for idx in ring:
        i, j = keys[idx]
        in_ring[i] = in_ring[j] = True
    atoms = []
    for a in range(n):
        h = b.hcounts[a]
        if h is None:
            # valence still counts the folded H bonds
            h = _implicit_h(b.elements[a], b.aromatic[a],
                            incident[a] + [1] * folded.get(a, 0))
        h += folded.get(a, 0)
        atoms.append(Atom(
            element=b.elements[a],
            degree=len(incident[a]),
            formal_charge=b.charges[a],
            aromatic=b.aromatic[a],
            in_ring=in_ring[a],
            implicit_h=h,
        ))
    bonds = tuple((i, j, o) for (i, j), o in zip(keys, orders))
    return MolecularGraph(atoms=tuple(atoms), bonds=bonds, smiles=text)
