"""Versioned data files shipped with the package, verified against MANIFEST.json."""
import csv
import hashlib
import io
import json
from functools import lru_cache
from importlib import resources

import numpy as np

from ..errors import DataError, VocabularyMissing

CANONICAL = "ACDEFGHIKLMNPQRSTVWY"


def _data_root():
    return resources.files("molrel") / "data"


@lru_cache(maxsize=None)
def manifest():
    return json.loads((_data_root() / "MANIFEST.json").read_text(encoding="utf-8"))


@lru_cache(maxsize=None)
def read_data_file(name):
    """Raw text of a shipped data file after its sha256 has been checked."""
    path = _data_root() / name
    try:
        raw = path.read_bytes()
    except FileNotFoundError:
        raise DataError(f"data file {name!r} is missing from the package") from None
    expected = manifest()["files"].get(name)
    if expected is None:
        raise DataError(f"data file {name!r} is not listed in MANIFEST.json")
    digest = hashlib.sha256(raw).hexdigest()
    if digest != expected:
        raise DataError(f"checksum mismatch for {name}: {digest} != {expected}")
    return raw.decode("utf-8")


@lru_cache(maxsize=None)
def property_table():
    """``{property name: {residue: value}}`` for the 20 canonical residues."""
    rows = list(csv.DictReader(io.StringIO(read_data_file("aa_properties.csv"))))
    props = [k for k in rows[0] if k != "aa"]
    table = {p: {r["aa"]: float(r[p]) for r in rows} for p in props}
    for p, vals in table.items():
        if set(vals) != set(CANONICAL):
            raise DataError(f"property {p!r} does not cover the 20 canonical residues")
    return table


def property_vector(name, standardize=True):
    """Values of one property in ``CANONICAL`` order, optionally z-scored (population std)."""
    vals = np.array([property_table()[name][a] for a in CANONICAL], dtype=float)
    if standardize:
        vals = (vals - vals.mean()) / vals.std()
    return vals


@lru_cache(maxsize=None)
def distance_matrix(name):
    """20x20 residue distance matrix in ``CANONICAL`` order; rows are the 'from' residue."""
    fname = {"schneider_wrede": "distance_schneider_wrede.csv",
             "grantham": "distance_grantham.csv"}[name]
    rows = list(csv.reader(io.StringIO(read_data_file(fname))))
    header = rows[0][1:]
    lookup = {r[0]: dict(zip(header, map(float, r[1:]))) for r in rows[1:]}
    mat = np.array([[lookup[a][b] for b in CANONICAL] for a in CANONICAL])
    if np.any(np.diag(mat) != 0):
        raise DataError(f"{fname} has a nonzero diagonal")
    mat.setflags(write=False)
    return mat


@lru_cache(maxsize=None)
def subword_vocab(kind):
    from .vocab import SubwordVocabulary
    fname = {"drug": "espf_drug.tsv", "protein": "espf_protein.tsv"}.get(kind)
    if fname is None:
        raise VocabularyMissing(f"no subword vocabulary for {kind!r}")
    try:
        text = read_data_file(fname)
    except DataError as exc:
        raise VocabularyMissing(str(exc)) from None
    return SubwordVocabulary.from_tsv(text)
