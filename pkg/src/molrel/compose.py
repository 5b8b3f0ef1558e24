"""Dynamic model construction.

A :class:`ModelSpec` is a small DAG: encoder nodes bound to entity roles,
``stack`` / interaction / ``flatten`` nodes, and one MLP head. Node ids are
assigned in insertion order. Building a spec yields a :class:`BuiltModel`
whose featurization plan runs each distinct (role, featurizer, params)
combination once per entity.

Example::

    spec = ModelSpec("dti")
    d = spec.add_encoder("drug", "GCN")
    p1 = spec.add_encoder("protein", "PocketDC")
    p2 = spec.add_encoder("protein", "AAC")
    s = spec.stack([d, p1, p2])
    a = spec.set_interaction(s, "self_attention")
    spec.apply_mlp(spec.flatten(a), hidden=[512, 128])
    model = spec.build(seed=0)
"""
import copy
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import torch
from torch import nn

from . import encode as E
from .encode import TOKEN_SET, VECTOR, Embedding, Shape
from .errors import (ArityError, ConfigError, CycleError, KindError, ShapeError, UnknownEncoder)
from .featurize import get_featurizer
from .interact import build_interaction, canonical_interaction

TASK_ROLES = {
    "dti": ("drug", "protein"),
    "ddi": ("drug1", "drug2"),
    "ppi": ("protein1", "protein2"),
}
ROLE_ENTITY = {"drug": "drug", "drug1": "drug", "drug2": "drug",
               "protein": "protein", "protein1": "protein", "protein2": "protein"}
HEAD_KINDS = ("binary", "regression", "multiclass")
DEFAULT_OUT_DIM = 128
DEFAULT_HEAD_HIDDEN = (512, 128)

FEATURIZER_PARAMS = {"max_len", "model", "width", "embedding", "embedding_width", "cutoff",
                     "radius", "pocket_adapter", "conformer"}


@dataclass(frozen=True)
class EncoderDef:
    id: str
    entity: str
    category: str  # sequence | graph2d | graph3d | structure
    featurizer: str
    layer: str
    featurizer_params: dict = field(default_factory=dict)
    layer_params: dict = field(default_factory=dict)

    @property
    def input_kind(self):
        seq = self.category == "sequence"
        return ("d_" if self.entity == "drug" else "p_") + ("s" if seq else "g")


def _fp(id_, fid, entity="drug"):
    return EncoderDef(id_, entity, "sequence", fid, "mlp")


def _pre(id_, entity, model, width):
    return EncoderDef(id_, entity, "sequence", f"pretrained_{entity}", "mlp",
                      {"model": model, "width": width}, {"hidden": ()})


_ESM = {"embedding": "esm", "embedding_width": 1280}

DRUG_ENCODERS = [
    EncoderDef("CNN", "drug", "sequence", "smiles_onehot", "cnn", {"max_len": 100},
               {"filters": (32, 64, 96), "kernels": (4, 6, 8)}),
    EncoderDef("Transformer", "drug", "sequence", "espf_tokens_drug", "transformer", {"max_len": 50}),
    _fp("Morgan", "morgan"),
    _fp("Daylight", "daylight"),
    _fp("ErG", "erg"),
    _fp("PubChem", "pubchem"),
    _pre("ChemBERTa", "drug", "chemberta", 768),
    _fp("ESPF", "espf_drug"),
    EncoderDef("GCN", "drug", "graph2d", "atom_graph", "gcn"),
    EncoderDef("MPNN", "drug", "graph2d", "atom_graph", "mpnn"),
    EncoderDef("GAT", "drug", "graph2d", "atom_graph", "gat"),
    EncoderDef("NeuralFP", "drug", "graph2d", "atom_graph", "neuralfp"),
    EncoderDef("AttentiveFP", "drug", "graph2d", "atom_graph", "attentivefp", {}, {"edge_dim": 4}),
    EncoderDef("GIN", "drug", "graph2d", "atom_graph", "gin"),
    EncoderDef("SchNet", "drug", "graph3d", "atom_graph_3d", "adapter", {}, {"name": "schnet"}),
    EncoderDef("MGCN", "drug", "graph3d", "atom_graph_3d", "adapter", {}, {"name": "mgcn"}),
]

PROTEIN_SEQUENCE_ENCODERS = [
    EncoderDef("CNN", "protein", "sequence", "seq_onehot", "cnn", {"max_len": 1000},
               {"filters": (32, 64, 96), "kernels": (4, 8, 12)}),
    EncoderDef("Transformer", "protein", "sequence", "espf_tokens_protein", "transformer", {"max_len": 545}),
    _fp("AAC", "aac", "protein"),
    _fp("ESPF", "espf_protein", "protein"),
    _fp("PseudoAAC", "pseudo_aac", "protein"),
    _fp("Quasi-seq", "quasi_seq", "protein"),
    _fp("Conjoint triad", "conjoint_triad", "protein"),
    _pre("ESM", "protein", "esm", 1280),
    _pre("ProtTrans-t5", "protein", "prottrans-t5", 1024),
    _pre("ProtTrans-bert", "protein", "prottrans-bert", 1024),
    _pre("ProtTrans-albert", "protein", "prottrans-albert", 4096),
    _fp("Auto correlation", "autocorrelation", "protein"),
    _fp("CTD", "ctd", "protein"),
]

PROTEIN_STRUCTURE_ENCODERS = [
    EncoderDef("GCN", "protein", "structure", "residue_graph", "gcn"),
    EncoderDef("GAT", "protein", "structure", "residue_graph", "gat"),
    EncoderDef("GIN", "protein", "structure", "residue_graph", "gin"),
    EncoderDef("GCN_ESM", "protein", "structure", "residue_graph", "gcn", _ESM),
    EncoderDef("GAT_ESM", "protein", "structure", "residue_graph", "gat", _ESM),
    EncoderDef("GIN_ESM", "protein", "structure", "residue_graph", "gin", _ESM),
    EncoderDef("PocketDC", "protein", "structure", "pocket_graph", "gcn"),
    EncoderDef("GVP", "protein", "structure", "residue_graph", "adapter", {}, {"name": "gvp"}),
    EncoderDef("GearNet", "protein", "structure", "residue_graph", "adapter", {}, {"name": "gearnet"}),
]


def _norm(name):
    return "".join(ch for ch in name.lower() if ch.isalnum())


ENCODER_ALIASES = {"esmgcn": "gcnesm", "esmgat": "gatesm", "esmgin": "ginesm", "chembert": "chemberta",
                   "qso": "quasiseq", "quasisequenceorder": "quasiseq", "pseaac": "pseudoaac",
                   "ct": "conjointtriad", "autocorr": "autocorrelation"}

ENCODERS = {}
for _d in DRUG_ENCODERS + PROTEIN_SEQUENCE_ENCODERS + PROTEIN_STRUCTURE_ENCODERS:
    # protein CNN / Transformer are sequence encoders; GCN/GAT/GIN are structure encoders
    ENCODERS[(_d.entity, _norm(_d.id))] = _d


def get_encoder(entity, name):
    key = _norm(name)
    key = ENCODER_ALIASES.get(key, key)
    try:
        return ENCODERS[(entity, key)]
    except KeyError:
        known = sorted(d.id for (ent, _), d in ENCODERS.items() if ent == entity)
        raise UnknownEncoder(f"unknown {entity} encoder {name!r}; known: {', '.join(known)}") from None


def registry_inventory():
    return {
        "drug": [d.id for d in DRUG_ENCODERS],
        "protein_sequence": [d.id for d in PROTEIN_SEQUENCE_ENCODERS],
        "protein_structure": [d.id for d in PROTEIN_STRUCTURE_ENCODERS],
    }


# ---------------------------------------------------------------- runtime modules

class Stack(nn.Module):
    """Vectors -> token set; narrower inputs are linearly projected to the widest dim."""

    def __init__(self, shapes):
        super().__init__()
        if len(shapes) < 2:
            raise ArityError(f"stack needs at least 2 inputs, got {len(shapes)}")
        for s in shapes:
            if s.kind != VECTOR:
                raise KindError(f"stack needs vector inputs, got {s}")
        d = max(s.dim for s in shapes)
        self.proj = nn.ModuleList(
            nn.Identity() if s.dim == d else E.glorot_(nn.Linear(s.dim, d)) for s in shapes)
        self.shape = Shape(TOKEN_SET, d, len(shapes))

    def forward(self, *embs):
        return Embedding(torch.stack([p(e.values) for p, e in zip(self.proj, embs)], dim=1))


class Flatten(nn.Module):
    def __init__(self, shapes):
        super().__init__()
        if len(shapes) != 1:
            raise ArityError("flatten takes exactly one input")
        s = shapes[0]
        if s.kind == TOKEN_SET and s.count is None:
            raise KindError(f"cannot flatten a variable-size token set {s}; pool it instead")
        self.shape = s if s.kind == VECTOR else Shape(VECTOR, s.count * s.dim)

    def forward(self, e):
        if e.kind == VECTOR:
            return e
        return Embedding(e.values.reshape(e.values.shape[0], -1))


class Head(nn.Module):
    def __init__(self, shapes, hidden, out_dim, dropout=0.0):
        super().__init__()
        for s in shapes:
            if s.kind != VECTOR:
                raise KindError(f"the MLP head needs vector inputs, got {s}; flatten it first")
        in_dim = sum(s.dim for s in shapes)
        self.net = E.glorot_(E.mlp(in_dim, list(hidden), out_dim, dropout=dropout))
        self.shape = Shape(VECTOR, out_dim)

    def forward(self, *embs):
        return self.net(torch.cat([e.values for e in embs], dim=-1))


def _freeze(params):
    return json.dumps(params, sort_keys=True, default=list)


def make_encoder_module(enc, params):
    """Instantiate the encode layer for ``enc`` with user ``params`` merged over defaults."""
    fparams = {**enc.featurizer_params, **{k: v for k, v in params.items() if k in FEATURIZER_PARAMS}}
    lparams = {**enc.layer_params, **{k: v for k, v in params.items() if k not in FEATURIZER_PARAMS}}
    lparams.setdefault("out_dim", DEFAULT_OUT_DIM)
    feat = get_featurizer(enc.featurizer)
    layer = enc.layer
    if layer == "mlp":
        mod = E.MLPEncoder(feat.output_dim(fparams), **lparams)
    elif layer == "cnn":
        mod = E.CNN1DEncoder(feat.rows, int(fparams["max_len"]), **lparams)
    elif layer == "transformer":
        lparams.pop("out_dim")
        lparams.setdefault("d_model", params.get("out_dim", 64))
        mod = E.TransformerEncoder(feat.vocab_size, int(fparams["max_len"]), **lparams)
    elif layer == "adapter":
        name = lparams.pop("name")
        mod = E.AdapterEncoder(name, feat.output_dim(fparams), **lparams)
    else:
        cls = E.LAYERS[layer]
        mod = cls(feat.output_dim(fparams), **lparams)
    return mod, fparams


@dataclass(frozen=True)
class FeatureKey:
    role: str
    featurizer: str
    params: str  # frozen JSON

    def kwargs(self):
        return json.loads(self.params)


class FeatureCache:
    """Featurized entities keyed by (featurizer key, entity hash); counts computations."""

    def __init__(self):
        self.store = {}
        self.computed = {}

    @staticmethod
    def entity_hash(entity):
        text = getattr(entity, "key", entity)
        return hashlib.sha1(str(text).encode()).hexdigest()

    def get(self, fkey, entity):
        key = (fkey.featurizer, fkey.params, self.entity_hash(entity))
        if key not in self.store:
            feat = get_featurizer(fkey.featurizer)
            self.store[key] = feat(entity, **fkey.kwargs())
            self.computed[fkey] = self.computed.get(fkey, 0) + 1
        return self.store[key]


class BuiltModel(nn.Module):
    """Executable model: raw entity pairs -> predictions."""

    def __init__(self, spec, modules, shapes, order, plan, encoder_keys, head_inputs):
        super().__init__()
        self.spec = spec
        self.blocks = nn.ModuleDict({str(k): m for k, m in modules.items()})
        self.shapes = shapes
        self.order = order
        self.plan = plan
        self.encoder_keys = encoder_keys
        self.head_inputs = head_inputs
        self.cache = FeatureCache()

    @property
    def roles(self):
        return TASK_ROLES[self.spec.task]

    @property
    def out_dim(self):
        return self.spec.output_dim

    def num_parameters(self):
        return sum(p.numel() for p in self.parameters())

    def featurize(self, pairs, cache=None):
        """Run the featurization plan over ``pairs`` and collate per feature key."""
        cache = cache or self.cache
        roles = self.roles
        batch = {}
        for fkey in self.plan:
            slot = roles.index(fkey.role)
            items = [cache.get(fkey, pair[slot]) for pair in pairs]
            batch[fkey] = E.collate(get_featurizer(fkey.featurizer).kind, items)
        return batch

    def forward(self, inputs):
        outs = {}
        for nid in self.order:
            node = self.spec.nodes[nid]
            block = self.blocks[str(nid)]
            if node["op"] == "encoder":
                outs[nid] = block(inputs[self.encoder_keys[nid]])
            elif node["op"] == "head":
                return block(*[outs[i] for i in self.head_inputs])
            else:
                outs[nid] = block(*[outs[i] for i in node["inputs"]])
        raise ShapeError("model has no head")

    def node_outputs(self, inputs):
        """Every node's embedding, for shape checks and inspection."""
        outs = {}
        for nid in self.order:
            node = self.spec.nodes[nid]
            block = self.blocks[str(nid)]
            if node["op"] == "encoder":
                outs[nid] = block(inputs[self.encoder_keys[nid]])
            elif node["op"] == "head":
                outs[nid] = Embedding(block(*[outs[i] for i in self.head_inputs]))
            else:
                outs[nid] = block(*[outs[i] for i in node["inputs"]])
        return outs

    @torch.no_grad()
    def predict(self, pairs, batch_size=256):
        """Scores: sigmoid for binary, softmax rows for multiclass, raw for regression."""
        was_training = self.training
        self.eval()
        chunks = []
        for i in range(0, len(pairs), batch_size):
            logits = self(self.featurize(pairs[i:i + batch_size]))
            chunks.append(transform_output(logits, self.spec.kind))
        self.train(was_training)
        return torch.cat(chunks).numpy()


def transform_output(logits, kind):
    if kind == "binary":
        return torch.sigmoid(logits.squeeze(-1))
    if kind == "multiclass":
        return torch.softmax(logits, dim=-1)
    return logits.squeeze(-1)


# ---------------------------------------------------------------- spec

class ModelSpec:
    """Composition graph under construction."""

    def __init__(self, task="dti", kind="binary", num_classes=None):
        task = task.lower()
        if task not in TASK_ROLES:
            raise ConfigError(f"unknown task {task!r}", "task")
        if kind not in HEAD_KINDS:
            raise ConfigError(f"unknown head kind {kind!r}", "kind")
        if kind == "multiclass" and (num_classes is None or int(num_classes) < 2):
            raise ConfigError("multiclass heads need num_classes >= 2", "num_classes")
        self.task = task
        self.kind = kind
        self.num_classes = int(num_classes) if num_classes is not None else None
        self.nodes = []
        self._shape_cache = {}

    @property
    def roles(self):
        return TASK_ROLES[self.task]

    @property
    def output_dim(self):
        return self.num_classes if self.kind == "multiclass" else 1

    # -- construction
    def _append(self, node):
        node["id"] = len(self.nodes)
        self.nodes.append(node)
        try:
            self.shape(node["id"])
        except Exception:
            self.nodes.pop()
            raise
        return node["id"]

    def _check_inputs(self, ids):
        ids = [ids] if isinstance(ids, int) else list(ids)
        for i in ids:
            if not 0 <= i < len(self.nodes):
                raise ShapeError(f"node {i} does not exist")
            if self.nodes[i]["op"] == "head":
                raise ShapeError("the head cannot feed other nodes")
        return ids

    def add_encoder(self, role, encoder, **params):
        if role not in self.roles:
            raise ConfigError(f"role {role!r} is not valid for task {self.task} {self.roles}", "role")
        enc = get_encoder(ROLE_ENTITY[role], encoder)
        return self._append({"op": "encoder", "role": role, "encoder": enc.id, "params": dict(params)})

    def stack(self, ids):
        return self._append({"op": "stack", "inputs": self._check_inputs(ids)})

    def set_interaction(self, ids, interaction, **params):
        name = canonical_interaction(interaction)
        return self._append({"op": "interaction", "interaction": name,
                             "inputs": self._check_inputs(ids), "params": dict(params)})

    def flatten(self, node):
        return self._append({"op": "flatten", "inputs": self._check_inputs(node)})

    def apply_mlp(self, node=None, hidden=DEFAULT_HEAD_HIDDEN, **params):
        """Append the prediction head; without ``node`` it consumes every sink (concatenated)."""
        if any(n["op"] == "head" for n in self.nodes):
            raise ShapeError("this model spec already has a head")
        inputs = None if node is None else self._check_inputs(node)
        return self._append({"op": "head", "inputs": inputs, "hidden": list(hidden), "params": dict(params)})

    # -- analysis
    def sinks(self):
        used = {i for n in self.nodes if n["op"] != "head" for i in (n.get("inputs") or [])}
        return [n["id"] for n in self.nodes if n["op"] != "head" and n["id"] not in used]

    def head_inputs(self):
        head = self.head()
        if head is None or head["inputs"] is None:
            return self.sinks()
        return head["inputs"]

    def head(self):
        heads = [n for n in self.nodes if n["op"] == "head"]
        if len(heads) > 1:
            raise ShapeError("a spec has exactly one head")
        return heads[0] if heads else None

    def encoders(self):
        return [n for n in self.nodes if n["op"] == "encoder"]

    def topological_order(self):
        deps = {}
        for n in self.nodes:
            deps[n["id"]] = set(self.head_inputs() if n["op"] == "head" else (n.get("inputs") or []))
        order, done = [], set()
        state = {}

        def visit(v, path):
            if state.get(v) == 1:
                raise CycleError(f"cycle through nodes {path + [v]}")
            if state.get(v) == 2:
                return
            state[v] = 1
            for u in sorted(deps[v]):
                if u not in deps:
                    raise ShapeError(f"node {v} references missing node {u}")
                visit(u, path + [v])
            state[v] = 2
            order.append(v)
            done.add(v)

        for v in sorted(deps):
            visit(v, [])
        return order

    def _module(self, nid, input_shapes):
        node = self.nodes[nid]
        op = node["op"]
        if op == "encoder":
            enc = get_encoder(ROLE_ENTITY[node["role"]], node["encoder"])
            mod, _ = make_encoder_module(enc, node["params"])
            return mod
        if op == "stack":
            return Stack(input_shapes)
        if op == "flatten":
            return Flatten(input_shapes)
        if op == "interaction":
            return build_interaction(node["interaction"], input_shapes, **node["params"])
        if op == "head":
            return Head(input_shapes, node["hidden"], self.output_dim, **node["params"])
        raise ConfigError(f"unknown node op {op!r}", f"nodes[{nid}].op")

    def _inputs_of(self, nid):
        node = self.nodes[nid]
        return self.head_inputs() if node["op"] == "head" else (node.get("inputs") or [])

    def shape(self, nid):
        """Declared output shape of node ``nid`` (inferred by constructing its layer)."""
        node = self.nodes[nid]
        ins = [self.shape(i) for i in self._inputs_of(nid)]
        key = (_freeze(node), tuple(ins))
        if key not in self._shape_cache:
            with torch.random.fork_rng():
                try:
                    self._shape_cache[key] = self._module(nid, ins).shape
                except (ShapeError, KindError, ArityError) as exc:
                    raise type(exc)(f"node {nid} ({node['op']}): {exc}") from None
        return self._shape_cache[key]

    def validate(self):
        if not self.encoders():
            raise ShapeError("spec has no encoders")
        for role in self.roles:
            if not any(n["role"] == role for n in self.encoders()):
                raise ShapeError(f"no encoder bound to role {role!r}")
        order = self.topological_order()
        head = self.head()
        inputs = self.head_inputs()
        reach = set()
        stack = list(inputs)
        while stack:
            v = stack.pop()
            if v in reach:
                continue
            reach.add(v)
            stack.extend(self.nodes[v].get("inputs") or [])
        for n in self.nodes:
            if n["op"] != "head" and n["id"] not in reach:
                raise ShapeError(f"node {n['id']} ({n.get('encoder') or n['op']}) does not reach the head")
        for nid in order:
            self.shape(nid)
        if head is None:
            for i in inputs:
                if self.shape(i).kind != VECTOR:
                    raise KindError(f"node {i} outputs {self.shape(i)}; flatten it before the head")
        return order

    # -- build
    def build(self, seed=0):
        spec = copy.deepcopy(self)
        if spec.head() is None:
            spec.apply_mlp()
        order = spec.validate()
        torch.manual_seed(seed)
        modules, shapes, plan, encoder_keys = {}, {}, [], {}
        for nid in order:
            node = spec.nodes[nid]
            ins = [shapes[i] for i in spec._inputs_of(nid)]
            mod = spec._module(nid, ins)
            modules[nid] = mod
            shapes[nid] = mod.shape
            if node["op"] == "encoder":
                enc = get_encoder(ROLE_ENTITY[node["role"]], node["encoder"])
                fparams = {**enc.featurizer_params,
                           **{k: v for k, v in node["params"].items() if k in FEATURIZER_PARAMS}}
                fkey = FeatureKey(node["role"], enc.featurizer, _freeze(fparams))
                if fkey not in plan:
                    plan.append(fkey)
                encoder_keys[nid] = fkey
        return BuiltModel(spec, modules, shapes, order, plan, encoder_keys, spec.head_inputs())

    # -- serialization
    def to_dict(self):
        return {"task": self.task, "kind": self.kind, "num_classes": self.num_classes,
                "nodes": copy.deepcopy(self.nodes)}

    @classmethod
    def from_dict(cls, data):
        try:
            spec = cls(data.get("task", "dti"), data.get("kind", "binary"), data.get("num_classes"))
            for k, raw in enumerate(data["nodes"]):
                node = copy.deepcopy(raw)
                if node.get("id", k) != k:
                    raise ConfigError(f"node ids must be 0..n-1 in order, got {node.get('id')}", f"nodes[{k}].id")
                node["id"] = k
                op = node.get("op")
                if op == "encoder":
                    enc = get_encoder(ROLE_ENTITY.get(node.get("role"), "?"), node["encoder"])
                    if node["role"] not in spec.roles:
                        raise ConfigError(f"role {node['role']!r} invalid for {spec.task}", f"nodes[{k}].role")
                    node["encoder"] = enc.id
                    node.setdefault("params", {})
                elif op == "interaction":
                    node["interaction"] = canonical_interaction(node["interaction"])
                    node.setdefault("params", {})
                elif op == "head":
                    node.setdefault("inputs", None)
                    node.setdefault("hidden", list(DEFAULT_HEAD_HIDDEN))
                    node.setdefault("params", {})
                elif op not in ("stack", "flatten"):
                    raise ConfigError(f"unknown node op {op!r}", f"nodes[{k}].op")
                spec.nodes.append(node)
        except KeyError as exc:
            raise ConfigError(f"missing field {exc.args[0]!r} in model config", str(exc.args[0])) from None
        spec.topological_order()
        return spec

    def save(self, path):
        path = Path(path)
        data = self.to_dict()
        if path.suffix in (".yaml", ".yml"):
            import yaml
            path.write_text(yaml.safe_dump(data, sort_keys=False), encoding="utf-8")
        else:
            path.write_text(json.dumps(data, indent=2), encoding="utf-8")

    @classmethod
    def load(cls, path):
        path = Path(path)
        text = path.read_text(encoding="utf-8")
        if path.suffix in (".yaml", ".yml"):
            import yaml
            return cls.from_dict(yaml.safe_load(text))
        return cls.from_dict(json.loads(text))

    def __eq__(self, other):
        return isinstance(other, ModelSpec) and self.to_dict() == other.to_dict()

    def __repr__(self):
        return f"ModelSpec(task={self.task!r}, kind={self.kind!r}, nodes={len(self.nodes)})"
