"""Small builders and a directional finite-difference check shared by the encoder,
interaction and acceptance tests."""
import numpy as np
import torch

from molrel.encode import (
    AttentiveFPEncoder,
    CNN1DEncoder,
    Embedding,
    GATEncoder,
    GCNEncoder,
    GINEncoder,
    MLPEncoder,
    MPNNEncoder,
    NeuralFPEncoder,
    Shape,
    TokenBatch,
    TransformerEncoder,
    collate_graphs,
)
from molrel.interact import build_interaction
from molrel.molparse import EntityGraph
from molrel.molparse.types import undirected_to_directed


def random_graph(rng, n, width=6, edge_dim=4, p=0.4):
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < p]
    if n > 1 and not pairs:
        pairs = [(0, 1)]
    feats = rng.normal(size=(len(pairs), edge_dim))
    edges, efeat = undirected_to_directed(pairs, feats if pairs else np.zeros((0, edge_dim)))
    return EntityGraph(node_features=rng.normal(size=(n, width)), edge_list=edges, edge_features=efeat)


def graph_batch(seed, sizes=(5, 3, 6), dtype=torch.float64):
    rng = np.random.default_rng(seed)
    return collate_graphs([random_graph(rng, n) for n in sizes]).to(dtype)


def token_batch(seed, vocab=11, length=12, lengths=(12, 7, 3)):
    g = torch.Generator().manual_seed(seed)
    ids = torch.randint(0, vocab, (len(lengths), length), generator=g)
    mask = torch.arange(length)[None, :] < torch.tensor(lengths)[:, None]
    return TokenBatch(ids, mask)


ENCODERS = {
    "mlp": (lambda: MLPEncoder(16, hidden=(12,), out_dim=8),
            lambda s: torch.randn(4, 16, generator=torch.Generator().manual_seed(s), dtype=torch.float64)),
    "cnn": (lambda: CNN1DEncoder(5, 20, filters=(6, 7), kernels=(3, 3), out_dim=8),
            lambda s: torch.randn(3, 5, 20, generator=torch.Generator().manual_seed(s), dtype=torch.float64)),
    "transformer": (lambda: TransformerEncoder(11, 12, d_model=8, heads=2, layers=2), token_batch),
    "gcn": (lambda: GCNEncoder(6, dims=(8, 8), out_dim=8), graph_batch),
    "gat": (lambda: GATEncoder(6, dims=(8, 8), heads=2, out_dim=8), graph_batch),
    "gin": (lambda: GINEncoder(6, dims=(8, 8), out_dim=8), graph_batch),
    "mpnn": (lambda: MPNNEncoder(6, edge_dim=4, hidden=6, edge_hidden=8, steps=2, s2s_steps=2, out_dim=8),
             graph_batch),
    "neuralfp": (lambda: NeuralFPEncoder(6, dims=(8, 8), fp_len=8), graph_batch),
    "attentivefp": (lambda: AttentiveFPEncoder(6, edge_dim=4, hidden=8, out_dim=8), graph_batch),
}


def _vec(s, shape):
    return Embedding(torch.randn(*shape, generator=torch.Generator().manual_seed(s), dtype=torch.float64))


def _tokens(s, b=3, n=(5, 4), d=8):
    g = torch.Generator().manual_seed(s)
    out = []
    for k, count in enumerate(n):
        mask = torch.ones(b, count, dtype=torch.bool)
        mask[0, count - 2:] = False
        out.append(Embedding(torch.randn(b, count, d, generator=g, dtype=torch.float64), mask))
    return out


V6, V5, T8 = Shape("vector", 6), Shape("vector", 5), Shape("token_set", 8, None)

INTERACTIONS = {
    "concatenation": (lambda: build_interaction("concatenation", [V6, V5]),
                      lambda s: [_vec(s, (4, 6)), _vec(s + 100, (4, 5))]),
    "bilinear_fusion": (lambda: build_interaction("bilinear_fusion", [V6, V5], out_dim=7, rank=3),
                        lambda s: [_vec(s, (4, 6)), _vec(s + 100, (4, 5))]),
    "gated_fusion": (lambda: build_interaction("gated_fusion", [V6, V5]),
                     lambda s: [_vec(s, (4, 6)), _vec(s + 100, (4, 5))]),
    "highway": (lambda: build_interaction("highway", [V6]), lambda s: [_vec(s, (4, 6))]),
    "cross_attention": (lambda: build_interaction("cross_attention", [T8, T8]), _tokens),
    "bilinear_attention": (lambda: build_interaction("bilinear_attention", [T8, T8], out_dim=6, heads=2, k=2),
                           _tokens),
    "self_attention": (lambda: build_interaction("self_attention", [T8], heads=2), lambda s: _tokens(s, n=(5,))),
}


def _float_leaves(inputs):
    """Differentiable float tensors inside encoder / interaction inputs."""
    out = []
    for x in inputs:
        if isinstance(x, torch.Tensor):
            out.append(x)
        elif isinstance(x, Embedding):
            out.append(x.values)
        elif hasattr(x, "x") and hasattr(x, "edge_index"):
            out += [t for t in (x.x, x.edge_attr) if t is not None]
    return out


def directional_gradcheck(module, inputs, seed, eps=1e-6):
    """Relative error between autograd and a central difference along one random
    direction in (parameters, float inputs) space. Module and inputs are float64."""
    module = module.double()
    gen = torch.Generator().manual_seed(seed)
    with torch.no_grad():
        # zero-initialized biases put all-zero hidden states exactly on a ReLU kink;
        # jitter every parameter so the check runs at a generic point
        for p in module.parameters():
            p.add_(0.05 * torch.randn(p.shape, generator=gen, dtype=p.dtype))
    leaves = list(module.parameters()) + _float_leaves(inputs)
    for t in leaves:
        t.requires_grad_(True)

    def value():
        out = module(*inputs).values
        return (out * weights).sum()

    with torch.no_grad():
        probe = module(*inputs).values
    weights = torch.randn(probe.shape, generator=gen, dtype=torch.float64)
    dirs = [torch.randn(t.shape, generator=gen, dtype=torch.float64) for t in leaves]
    norm = torch.sqrt(sum((d ** 2).sum() for d in dirs))
    dirs = [d / norm for d in dirs]

    grads = torch.autograd.grad(value(), leaves, allow_unused=True)
    analytic = sum(((g if g is not None else torch.zeros_like(d)) * d).sum() for g, d in zip(grads, dirs)).item()
    with torch.no_grad():
        for t, d in zip(leaves, dirs):
            t.add_(eps * d)
        plus = value().item()
        for t, d in zip(leaves, dirs):
            t.sub_(2 * eps * d)
        minus = value().item()
        for t, d in zip(leaves, dirs):
            t.add_(eps * d)
    numeric = (plus - minus) / (2 * eps)
    scale = max(abs(analytic), abs(numeric), 1e-8)
    return abs(analytic - numeric) / scale


def encoder_gradcheck(name, seed):
    make, inputs = ENCODERS[name]
    torch.manual_seed(seed)
    return directional_gradcheck(make(), [inputs(seed)], seed)


def interaction_gradcheck(name, seed):
    make, inputs = INTERACTIONS[name]
    torch.manual_seed(seed)
    return directional_gradcheck(make(), inputs(seed), seed)


def write_experiment(tmp_path, n=40, model="exp-1.1", **extra):
    """A separable DTI csv plus a YAML experiment config pointing at it."""
    import yaml

    from conftest import separable_dti

    ds = separable_dti(n)
    lines = ["drug_smiles,protein_seq,label"]
    lines += [f"{d},{p.sequence},{y}" for d, p, y in zip(ds.entity1, ds.entity2, ds.labels)]
    (tmp_path / "pairs.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    cfg = {"name": "toy", "task": "dti", "kind": "binary", "data": {"path": "pairs.csv", "split": "random"},
           "model": model, "train": {"epochs": 2, "batch_size": 8}, "metrics": ["roc_auc", "accuracy"],
           "repeats": 1, "seed": 0, "output_dir": "out", "figures": False}
    cfg.update(extra)
    path = tmp_path / "exp.yaml"
    path.write_text(yaml.safe_dump(cfg), encoding="utf-8")
    return path
