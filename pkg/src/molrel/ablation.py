"""Component removal on a :class:`~molrel.compose.ModelSpec`.

``drop`` names one of:

* an interaction layer: it is replaced by plain concatenation of everything
  it consumed (stacked vectors are unstacked, token-set encoders go back to
  their pooled vector output);
* an encoder id (e.g. ``PocketDC``): every node using it is removed; prefix
  it with an entity or role (``drug:CNN``, ``protein1:AAC``) to narrow it;
* ``esm``: ESM-augmented structure encoders fall back to their base encoder.
"""
import copy

from .compose import ENCODER_ALIASES, ROLE_ENTITY, ModelSpec, _norm
from .errors import ConfigError, ConfigurationError
from .interact import canonical_interaction

_ADAPTER_FEATURES = {"esm": ("_ESM", ("embedding", "embedding_width"))}
_COMPONENT_ALIASES = {"pocket": "pocketdc", "pocketencoder": "pocketdc"}


def _interaction_name(name):
    try:
        return canonical_interaction(name)
    except ConfigurationError:
        return None


def components(spec):
    """Names accepted by :func:`ablate_spec` for this spec."""
    out = []
    for n in spec.nodes:
        if n["op"] == "interaction" and n["interaction"] not in out:
            out.append(n["interaction"])
        if n["op"] == "encoder" and n["encoder"] not in out:
            out.append(n["encoder"])
    for feat, (suffix, _) in _ADAPTER_FEATURES.items():
        if any(n["op"] == "encoder" and n["encoder"].endswith(suffix) for n in spec.nodes):
            out.append(feat)
    return out


def ablate_spec(spec, drop):
    """New spec with component ``drop`` removed; ``spec`` is left untouched."""
    nodes = copy.deepcopy(spec.to_dict()["nodes"])
    scope, _, name = drop.rpartition(":")
    scope = scope.strip().lower()
    key = _norm(name)
    key = _COMPONENT_ALIASES.get(key, ENCODER_ALIASES.get(key, key))

    if key in _ADAPTER_FEATURES:
        suffix, params = _ADAPTER_FEATURES[key]
        hits = [n for n in nodes if n["op"] == "encoder" and n["encoder"].endswith(suffix)]
        if not hits:
            raise ConfigError(f"no encoder in the model uses {drop!r}", "drop")
        for n in hits:
            n["encoder"] = n["encoder"][: -len(suffix)]
            for p in params:
                n["params"].pop(p, None)
        return _rebuild(spec, nodes, set())

    inter = _interaction_name(drop)
    if inter is not None and any(n["op"] == "interaction" and n["interaction"] == inter for n in nodes):
        for n in nodes:
            if n["op"] == "interaction" and n["interaction"] == inter:
                _to_concat(nodes, n)
        return _rebuild(spec, nodes, set())

    removed = {n["id"] for n in nodes if n["op"] == "encoder" and _norm(n["encoder"]) == key
               and scope in ("", n["role"], ROLE_ENTITY[n["role"]])}
    if not removed:
        known = ", ".join(components(spec)) or "none"
        raise ConfigError(f"unknown component {drop!r}; this model has: {known}", "drop")
    return _rebuild(spec, nodes, removed)


def _to_concat(nodes, node):
    inputs = []
    for i in node["inputs"]:
        src = nodes[i]
        inputs.extend(src["inputs"] if src["op"] == "stack" else [i])
    for i in inputs:
        if nodes[i]["op"] == "encoder":
            nodes[i]["params"].pop("output", None)
    node.update(interaction="concatenation", inputs=inputs, params={})


def _rebuild(spec, nodes, removed):
    """Drop ``removed`` nodes, repair their consumers, prune orphans, renumber."""
    was_used = {i for n in spec.nodes for i in (n.get("inputs") or [])}
    removed = set(removed)
    changed = True
    while changed:
        changed = False
        for n in nodes:
            if n["id"] in removed or n.get("inputs") is None:
                continue
            kept = [i for i in n["inputs"] if i not in removed]
            if len(kept) == len(n["inputs"]):
                continue
            changed = True
            n["inputs"] = kept
            if n["op"] == "head":
                if not kept:
                    n["inputs"] = None
                continue
            if not kept:
                removed.add(n["id"])
            elif n["op"] == "interaction":
                _to_concat(nodes, n)
            elif n["op"] == "stack" and len(kept) < 2:
                # a one-row stack is not a stack: its consumers fall back to concatenation
                for m in nodes:
                    if m["op"] == "interaction" and n["id"] in m["inputs"] and m["id"] not in removed:
                        _to_concat(nodes, m)
        # nodes consumed before the edit but no longer consumed are orphans
        used = {i for n in nodes if n["id"] not in removed for i in (n.get("inputs") or [])}
        for n in nodes:
            if n["op"] != "head" and n["id"] in was_used and n["id"] not in used and n["id"] not in removed:
                removed.add(n["id"])
                changed = True

    remap, kept_nodes = {}, []
    for n in nodes:
        if n["id"] in removed:
            continue
        remap[n["id"]] = len(kept_nodes)
        kept_nodes.append(n)
    for n in kept_nodes:
        n["id"] = remap[n["id"]]
        if n.get("inputs") is not None:
            n["inputs"] = [remap[i] for i in n["inputs"]]
    data = {**spec.to_dict(), "nodes": kept_nodes}
    out = ModelSpec.from_dict(data)
    out.validate()
    return out
