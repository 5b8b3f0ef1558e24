"""Registry for externally provided capabilities.

Conformer generation, pocket detection, keyed fingerprints (PubChem, ErG),
pretrained embeddings and the 3D encoders (SchNet, MGCN, GVP, GearNet) live
outside the portable core. Anything that satisfies the call contract of its
kind can be registered under a name::

    from molrel import adapters
    adapters.register("fingerprint", "pubchem", my_pubchem)   # smiles -> 881 values

Kinds and their contracts:

``conformer``          ``fn(graph: MolecularGraph, seed: int) -> list[(x, y, z)]``
``pocket``             ``fn(structure: ProteinStructure) -> list[int]`` residue indices
``fingerprint``        ``fn(smiles: str) -> sequence of float``
``residue_embedding``  ``fn(sequence: str) -> (n_residues, k) array``
``pretrained``         ``fn(raw: str) -> (dim,) or (n, dim) array``
``encoder``            ``factory(**params) -> torch.nn.Module``
"""
import threading

from .errors import AdapterUnavailable

KINDS = ("conformer", "pocket", "fingerprint", "residue_embedding", "pretrained", "encoder")

_lock = threading.Lock()
_registry = {kind: {} for kind in KINDS}


def register(kind, name, obj):
    if kind not in _registry:
        raise ValueError(f"unknown adapter kind {kind!r}; expected one of {KINDS}")
    with _lock:
        _registry[kind][name.lower()] = obj
    return obj


def unregister(kind, name):
    with _lock:
        _registry[kind].pop(name.lower(), None)


def get(kind, name):
    try:
        return _registry[kind][name.lower()]
    except KeyError:
        _maybe_load_builtin(kind, name)
        try:
            return _registry[kind][name.lower()]
        except KeyError:
            raise AdapterUnavailable(
                f"no {kind} adapter registered under {name!r}"
            ) from None


def available(kind):
    return sorted(_registry[kind])


def is_registered(kind, name):
    return name.lower() in _registry[kind]


def _maybe_load_builtin(kind, name):
    # rdkit-backed adapters are opt-in: requested by name, loaded on demand
    if name.lower() != "rdkit" and not (kind == "fingerprint" and name.lower() == "erg"):
        return
    try:
        from . import rdkit_adapter
    except ImportError:
        return
    rdkit_adapter.install()
