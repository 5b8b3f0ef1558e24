"""Preset architectures mirroring the published experiment tables.

``exp-1.1`` .. ``exp-1.14`` are drug-target models, ``ddi-1`` .. ``ddi-6``
drug-drug models and ``ppi-1`` .. ``ppi-6`` protein-protein models. ``exp-2``
is the custom drug-target model (GCN drug graph, ESM-augmented protein graph,
pocket graph, stacked and passed through self attention) used for ablations.
"""
from .compose import ModelSpec
from .errors import ConfigError

# (drug encoders, protein encoders, interaction) per row; "-" means concatenation
DTI_ROWS = {
    "exp-1.1": (["CNN"], ["CNN"], None),
    "exp-1.2": (["Daylight"], ["CNN"], None),
    "exp-1.3": (["CNN", "Daylight"], ["CNN"], None),
    "exp-1.4": (["Morgan"], ["GCN"], None),
    "exp-1.5": (["GCN"], ["GCN"], None),
    "exp-1.6": (["Morgan", "GCN"], ["GCN"], None),
    "exp-1.7": (["CNN"], ["GCN_ESM"], None),
    "exp-1.8": (["ChemBERTa"], ["CNN"], None),
    "exp-1.9": (["GCN"], ["GCN_ESM"], None),
    "exp-1.10": (["ChemBERTa"], ["GCN"], None),
    "exp-1.11": (["GAT", "PubChem"], ["AAC"], None),
    "exp-1.12": (["GAT", "PubChem"], ["AAC"], "gated_fusion"),
    "exp-1.13": (["Transformer"], ["Transformer"], None),
    "exp-1.14": (["Transformer"], ["Transformer"], "cross_attention"),
}

# (entity 1 encoders, entity 2 encoders, interaction)
DDI_ROWS = {
    "ddi-1": (["CNN"], ["CNN"], None),
    "ddi-2": (["CNN"], ["GCN"], None),
    "ddi-3": (["CNN", "PubChem"], ["GCN", "PubChem"], None),
    "ddi-4": (["PubChem"], ["PubChem"], None),
    "ddi-5": (["Transformer"], ["Transformer"], None),
    "ddi-6": (["Transformer"], ["Transformer"], "cross_attention"),
}

PPI_ROWS = {
    "ppi-1": (["CNN"], ["CNN"], None),
    "ppi-2": (["CNN"], ["GCN"], None),
    "ppi-3": (["AAC"], ["AAC"], None),
    "ppi-4": (["AAC", "CNN"], ["AAC", "GCN"], None),
    "ppi-5": (["Transformer"], ["Transformer"], None),
    "ppi-6": (["Transformer"], ["Transformer"], "cross_attention"),
}

# training settings stated for each family; DTI values are desk-scale defaults
TRAIN_DEFAULTS = {
    "dti": {"batch_size": 32, "learning_rate": 1e-3, "metric": "roc_auc"},
    "ddi": {"batch_size": 512, "learning_rate": 1e-4, "metric": "roc_auc"},
    "ppi": {"batch_size": 128, "learning_rate": 1e-3, "metric": "roc_auc"},
}

_TOKEN_SET = {"output": "token_set"}


def _pair_model(task, left, right, interaction, kind="binary", num_classes=None):
    roles = {"dti": ("drug", "protein"), "ddi": ("drug1", "drug2"), "ppi": ("protein1", "protein2")}[task]
    spec = ModelSpec(task, kind, num_classes)
    tokens = interaction == "cross_attention"
    ids = []
    for role, names in zip(roles, (left, right)):
        ids.append([spec.add_encoder(role, n, **(_TOKEN_SET if tokens else {})) for n in names])
    if interaction == "gated_fusion":
        # fuses the two drug representations; the protein branch is concatenated at the head
        spec.set_interaction(ids[0], "gated_fusion")
    elif interaction == "cross_attention":
        spec.set_interaction([ids[0][0], ids[1][0]], "cross_attention")
    spec.apply_mlp()
    return spec


def exp2(kind="binary", num_classes=None):
    spec = ModelSpec("dti", kind, num_classes)
    d = spec.add_encoder("drug", "GCN")
    p1 = spec.add_encoder("protein", "GCN_ESM")
    p2 = spec.add_encoder("protein", "PocketDC")
    s = spec.stack([d, p1, p2])
    a = spec.set_interaction(s, "self_attention")
    spec.apply_mlp(spec.flatten(a))
    return spec


def _family(name):
    return "dti" if name.startswith("exp") else name.split("-")[0]


def preset_names():
    return [*DTI_ROWS, *DDI_ROWS, *PPI_ROWS, "exp-2"]


def get_preset(name, kind="binary", num_classes=None):
    """ModelSpec for preset ``name``."""
    key = name.strip().lower()
    if key == "exp-2":
        return exp2(kind, num_classes)
    for task, rows in (("dti", DTI_ROWS), ("ddi", DDI_ROWS), ("ppi", PPI_ROWS)):
        if key in rows:
            return _pair_model(task, *rows[key], kind=kind, num_classes=num_classes)
    raise ConfigError(f"unknown preset {name!r}; known: {', '.join(preset_names())}", "preset")


def train_defaults(name):
    return dict(TRAIN_DEFAULTS[_family(name.strip().lower())])
