"""Trainable encode layers mapping featurized inputs to embeddings.

Every layer returns an :class:`Embedding`: either a vector batch ``(B, d)`` or
a token set ``(B, n, d)`` with a boolean mask of real tokens. Graph inputs
arrive as a :class:`GraphBatch`, i.e. the disjoint union of the batch graphs
with a node-to-graph index.
"""
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import torch
from torch import nn
import torch.nn.functional as F

from . import adapters
from .errors import AdapterUnavailable, ShapeError

VECTOR = "vector"
TOKEN_SET = "token_set"


@dataclass(frozen=True)
class Shape:
    """Declared output shape of a node: ``count`` is None for variable-size token sets."""

    kind: str
    dim: int
    count: Optional[int] = 1

    def __post_init__(self):
        if self.dim <= 0:
            raise ShapeError(f"embedding dim must be positive, got {self.dim}")
        if self.kind == VECTOR and self.count != 1:
            raise ShapeError("vector embeddings have count 1")

    def __str__(self):
        if self.kind == VECTOR:
            return f"vector({self.dim})"
        return f"token_set({'n' if self.count is None else self.count}x{self.dim})"


class Embedding:
    """Runtime embedding batch."""

    __slots__ = ("values", "mask")

    def __init__(self, values, mask=None):
        if values.dim() not in (2, 3):
            raise ShapeError(f"embedding values must be rank 2 or 3, got {tuple(values.shape)}")
        if values.dim() == 3 and mask is None:
            mask = torch.ones(values.shape[:2], dtype=torch.bool, device=values.device)
        self.values = values
        self.mask = mask if values.dim() == 3 else None

    @property
    def kind(self):
        return VECTOR if self.values.dim() == 2 else TOKEN_SET

    @property
    def dim(self):
        return self.values.shape[-1]

    @property
    def count(self):
        return 1 if self.kind == VECTOR else self.values.shape[1]

    def __repr__(self):
        return f"Embedding({self.kind}, shape={tuple(self.values.shape)})"


# ---------------------------------------------------------------- batching

@dataclass
class GraphBatch:
    x: torch.Tensor  # (N, F)
    edge_index: torch.Tensor  # (2, E), both directions
    batch: torch.Tensor  # (N,)
    num_graphs: int
    edge_attr: Optional[torch.Tensor] = None
    coords: Optional[torch.Tensor] = None

    @property
    def num_nodes(self):
        return self.x.shape[0]

    def to(self, dtype):
        cast = lambda t: None if t is None else t.to(dtype)
        return GraphBatch(cast(self.x), self.edge_index, self.batch, self.num_graphs,
                          cast(self.edge_attr), cast(self.coords))


@dataclass
class TokenBatch:
    ids: torch.Tensor  # (B, L) long
    mask: torch.Tensor  # (B, L) bool


def collate_graphs(graphs):
    xs, edges, eattrs, batch, coords = [], [], [], [], []
    offset = 0
    has_edge_attr = all(g.edge_features is not None for g in graphs)
    has_coords = all(g.coords is not None for g in graphs)
    for k, g in enumerate(graphs):
        xs.append(g.node_features)
        edges.append(g.edge_list + offset)
        if has_edge_attr:
            eattrs.append(g.edge_features)
        if has_coords:
            coords.append(g.coords)
        batch.append(np.full(g.num_nodes, k, dtype=np.int64))
        offset += g.num_nodes
    return GraphBatch(
        x=torch.from_numpy(np.concatenate(xs).astype(np.float32)),
        edge_index=torch.from_numpy(np.concatenate(edges).astype(np.int64).reshape(-1, 2).T.copy()),
        batch=torch.from_numpy(np.concatenate(batch)),
        num_graphs=len(graphs),
        edge_attr=torch.from_numpy(np.concatenate(eattrs).astype(np.float32)) if has_edge_attr else None,
        coords=torch.from_numpy(np.concatenate(coords).astype(np.float32)) if has_coords else None,
    )


def collate_tokens(seqs):
    return TokenBatch(ids=torch.from_numpy(np.stack([s.token_ids for s in seqs])),
                      mask=torch.from_numpy(np.stack([s.mask for s in seqs])))


def collate(kind, items):
    if kind == "graph":
        return collate_graphs(items)
    if kind == "tokens":
        return collate_tokens(items)
    return torch.from_numpy(np.stack(items).astype(np.float32))


# ---------------------------------------------------------------- graph ops

def segment_sum(values, index, n):
    out = values.new_zeros((n,) + values.shape[1:])
    return out.index_add(0, index, values)


def segment_mean(values, index, n):
    total = segment_sum(values, index, n)
    count = torch.bincount(index, minlength=n).clamp(min=1).to(values.dtype)
    return total / count.view(-1, *([1] * (values.dim() - 1)))


def segment_softmax(scores, index, n):
    """Softmax of ``scores`` within each group of ``index`` (along dim 0)."""
    shape = (n,) + scores.shape[1:]
    idx = index.view(-1, *([1] * (scores.dim() - 1))).expand_as(scores)
    top = scores.new_full(shape, -math.inf).scatter_reduce(0, idx, scores.detach(), "amax")
    ex = torch.exp(scores - top[index])
    return ex / segment_sum(ex, index, n)[index]


def to_dense(h, batch, num_graphs):
    """Pad node states into ``(B, n_max, d)`` plus a mask."""
    counts = torch.bincount(batch, minlength=num_graphs)
    n_max = int(counts.max()) if num_graphs else 0
    start = torch.cumsum(counts, 0) - counts
    pos = torch.arange(h.shape[0]) - start[batch]
    out = h.new_zeros((num_graphs, n_max, h.shape[1]))
    out[batch, pos] = h
    mask = torch.zeros((num_graphs, n_max), dtype=torch.bool)
    mask[batch, pos] = True
    return out, mask


def glorot_(module):
    """Uniform Glorot for affine and conv weights, zeros for their biases."""
    for m in module.modules():
        if isinstance(m, (nn.Linear, nn.Conv1d)):
            nn.init.xavier_uniform_(m.weight)
            if m.bias is not None:
                nn.init.zeros_(m.bias)
    return module


# ---------------------------------------------------------------- vector / grid encoders

def mlp(in_dim, hidden, out_dim, activation=nn.ReLU, dropout=0.0):
    dims = [in_dim, *hidden, out_dim]
    layers = []
    for a, b in zip(dims[:-2], dims[1:-1]):
        layers += [nn.Linear(a, b), activation()]
        if dropout:
            layers.append(nn.Dropout(dropout))
    layers.append(nn.Linear(dims[-2], dims[-1]))
    return nn.Sequential(*layers)


class MLPEncoder(nn.Module):
    def __init__(self, in_dim, hidden=(512, 256), out_dim=128, dropout=0.0):
        super().__init__()
        self.in_dim = in_dim
        self.net = glorot_(mlp(in_dim, list(hidden), out_dim, dropout=dropout))
        self.shape = Shape(VECTOR, out_dim)

    def forward(self, x):
        if x.dim() != 2 or x.shape[1] != self.in_dim:
            raise ShapeError(f"MLP expects (B, {self.in_dim}), got {tuple(x.shape)}")
        return Embedding(self.net(x))


class CNN1DEncoder(nn.Module):
    """Stacked valid 1D convolutions with ReLU, then global max pool (or per-position tokens)."""

    def __init__(self, in_channels, length, filters=(32, 64, 96), kernels=(4, 6, 8), out_dim=128,
                 output=VECTOR):
        super().__init__()
        if len(filters) != len(kernels):
            raise ShapeError("filters and kernels must have the same length")
        self.in_channels = in_channels
        chans = [in_channels, *filters]
        self.convs = nn.ModuleList(nn.Conv1d(a, b, k) for a, b, k in zip(chans[:-1], chans[1:], kernels))
        self.proj = nn.Linear(filters[-1], out_dim)
        self.output = output
        out_len = length - sum(k - 1 for k in kernels)
        if out_len < 1:
            raise ShapeError(f"sequence length {length} too short for kernels {tuple(kernels)}")
        self.shape = Shape(output, out_dim, 1 if output == VECTOR else out_len)
        glorot_(self)

    def forward(self, x):
        if x.dim() != 3 or x.shape[1] != self.in_channels:
            raise ShapeError(f"CNN expects (B, {self.in_channels}, L), got {tuple(x.shape)}")
        h = x
        for conv in self.convs:
            h = F.relu(conv(h))
        if self.output == VECTOR:
            return Embedding(self.proj(h.max(dim=2).values))
        return Embedding(self.proj(h.transpose(1, 2)))


class MultiHeadAttention(nn.Module):
    """Scaled dot-product attention over ``heads`` heads; also returns the weights."""

    def __init__(self, dim, heads, kdim=None):
        super().__init__()
        if dim % heads:
            raise ShapeError(f"dim {dim} not divisible by {heads} heads")
        kdim = kdim or dim
        self.heads, self.dh = heads, dim // heads
        self.q = nn.Linear(dim, dim)
        self.k = nn.Linear(kdim, dim)
        self.v = nn.Linear(kdim, dim)
        self.o = nn.Linear(dim, dim)
        glorot_(self)

    def forward(self, query, key, value, key_mask=None):
        B, nq, _ = query.shape
        nk = key.shape[1]
        split = lambda t, n: t.view(B, n, self.heads, self.dh).transpose(1, 2)
        q, k, v = split(self.q(query), nq), split(self.k(key), nk), split(self.v(value), nk)
        scores = q @ k.transpose(-1, -2) / math.sqrt(self.dh)
        if key_mask is not None:
            scores = scores.masked_fill(~key_mask[:, None, None, :], -math.inf)
        attn = torch.softmax(scores, dim=-1)
        out = (attn @ v).transpose(1, 2).reshape(B, nq, -1)
        return self.o(out), attn


class TransformerEncoder(nn.Module):
    """Token + position embeddings, pre-norm self-attention blocks with a key mask."""

    def __init__(self, vocab_size, max_len, d_model=64, heads=4, layers=2, ffn=None, dropout=0.0,
                 output=VECTOR):
        super().__init__()
        self.vocab_size = vocab_size
        self.tok = nn.Embedding(vocab_size, d_model)
        self.pos = nn.Embedding(max_len, d_model)
        ffn = ffn or 2 * d_model
        self.blocks = nn.ModuleList()
        for _ in range(layers):
            self.blocks.append(nn.ModuleDict({
                "ln1": nn.LayerNorm(d_model),
                "attn": MultiHeadAttention(d_model, heads),
                "ln2": nn.LayerNorm(d_model),
                "ff": glorot_(nn.Sequential(nn.Linear(d_model, ffn), nn.ReLU(), nn.Linear(ffn, d_model))),
            }))
        self.ln = nn.LayerNorm(d_model)
        self.drop = nn.Dropout(dropout)
        self.output = output
        self.shape = Shape(output, d_model, 1 if output == VECTOR else max_len)
        self.last_attention = []

    def forward(self, tokens):
        ids, mask = tokens.ids, tokens.mask
        if ids.dim() != 2 or ids.shape[1] > self.pos.num_embeddings:
            raise ShapeError(f"Transformer expects (B, <= {self.pos.num_embeddings}) ids, got {tuple(ids.shape)}")
        if int(ids.max()) >= self.vocab_size:
            raise ShapeError(f"token id {int(ids.max())} outside vocabulary of {self.vocab_size}")
        pos = torch.arange(ids.shape[1])
        x = self.drop(self.tok(ids) + self.pos(pos)[None])
        self.last_attention = []
        for blk in self.blocks:
            h = blk["ln1"](x)
            a, w = blk["attn"](h, h, h, key_mask=mask)
            self.last_attention.append(w.detach())
            x = x + self.drop(a)
            x = x + self.drop(blk["ff"](blk["ln2"](x)))
        x = self.ln(x)
        if self.output == VECTOR:
            m = mask.to(x.dtype).unsqueeze(-1)
            return Embedding((x * m).sum(1) / m.sum(1).clamp(min=1.0))
        return Embedding(x, mask)


# ---------------------------------------------------------------- graph encoders

class GCNLayer(nn.Module):
    """``D^-1/2 (A + I) D^-1/2 H W + b``."""

    def __init__(self, in_dim, out_dim):
        super().__init__()
        self.lin = nn.Linear(in_dim, out_dim, bias=False)
        self.bias = nn.Parameter(torch.zeros(out_dim))
        glorot_(self)

    def forward(self, x, edge_index):
        n = x.shape[0]
        src, dst = edge_index
        deg = (torch.bincount(dst, minlength=n) + 1).to(x.dtype)
        h = self.lin(x)
        norm = (deg[src] * deg[dst]).rsqrt().unsqueeze(-1)
        return h / deg.unsqueeze(-1) + segment_sum(h[src] * norm, dst, n) + self.bias


class GATLayer(nn.Module):
    """Multi-head graph attention; self-loops included, heads concatenated."""

    def __init__(self, in_dim, head_dim, heads=4, negative_slope=0.2):
        super().__init__()
        self.heads, self.head_dim = heads, head_dim
        self.lin = nn.Linear(in_dim, heads * head_dim, bias=False)
        self.att_src = nn.Parameter(torch.empty(heads, head_dim))
        self.att_dst = nn.Parameter(torch.empty(heads, head_dim))
        self.bias = nn.Parameter(torch.zeros(heads * head_dim))
        self.slope = negative_slope
        glorot_(self)
        nn.init.xavier_uniform_(self.att_src)
        nn.init.xavier_uniform_(self.att_dst)
        self.last_attention = None

    def forward(self, x, edge_index):
        n = x.shape[0]
        loops = torch.arange(n).repeat(2, 1)
        src, dst = torch.cat([edge_index, loops], dim=1)
        h = self.lin(x).view(n, self.heads, self.head_dim)
        # message j -> i scored by a^T [W h_i || W h_j]
        e = (h * self.att_dst).sum(-1)[dst] + (h * self.att_src).sum(-1)[src]
        alpha = segment_softmax(F.leaky_relu(e, self.slope), dst, n)  # (E+n, H)
        self.last_attention = (torch.stack([src, dst]), alpha.detach())
        out = segment_sum(alpha.unsqueeze(-1) * h[src], dst, n)
        return out.reshape(n, -1) + self.bias


class GINLayer(nn.Module):
    def __init__(self, in_dim, out_dim):
        super().__init__()
        self.eps = nn.Parameter(torch.zeros(1))
        self.mlp = glorot_(nn.Sequential(nn.Linear(in_dim, out_dim), nn.ReLU(), nn.Linear(out_dim, out_dim)))

    def forward(self, x, edge_index):
        src, dst = edge_index
        agg = segment_sum(x[src], dst, x.shape[0])
        return self.mlp((1 + self.eps) * x + agg)


class Set2Set(nn.Module):
    def __init__(self, dim, steps=3):
        super().__init__()
        self.dim, self.steps = dim, steps
        self.lstm = nn.LSTMCell(2 * dim, dim)

    def forward(self, x, batch, num_graphs):
        h = x.new_zeros((num_graphs, self.dim))
        c = x.new_zeros((num_graphs, self.dim))
        q_star = x.new_zeros((num_graphs, 2 * self.dim))
        for _ in range(self.steps):
            h, c = self.lstm(q_star, (h, c))
            a = segment_softmax((x * h[batch]).sum(-1, keepdim=True), batch, num_graphs)
            r = segment_sum(a * x, batch, num_graphs)
            q_star = torch.cat([h, r], dim=-1)
        return q_star


class GraphEncoder(nn.Module):
    """Shared readout handling: pooled vector, or node states as a token set."""

    default_readout = "mean"

    def _init_readout(self, hidden, out_dim, readout):
        self.readout = readout or self.default_readout
        if self.readout == "nodes":
            self.proj = nn.Linear(hidden, out_dim)
            self.shape = Shape(TOKEN_SET, out_dim, None)
        else:
            self.proj = nn.Linear(self._pooled_dim(hidden), out_dim)
            self.shape = Shape(VECTOR, out_dim)
        glorot_(self.proj)

    def _pooled_dim(self, hidden):
        return hidden

    def _check(self, g):
        if not isinstance(g, GraphBatch):
            raise ShapeError(f"{type(self).__name__} expects a GraphBatch, got {type(g).__name__}")
        if g.x.shape[1] != self.in_dim:
            raise ShapeError(f"{type(self).__name__} expects node width {self.in_dim}, got {g.x.shape[1]}")

    def _pool(self, h, g):
        if self.readout == "nodes":
            dense, mask = to_dense(self.proj(h), g.batch, g.num_graphs)
            return Embedding(dense, mask)
        if self.readout == "sum":
            pooled = segment_sum(h, g.batch, g.num_graphs)
        elif self.readout == "mean":
            pooled = segment_mean(h, g.batch, g.num_graphs)
        elif self.readout == "max":
            dense, mask = to_dense(h, g.batch, g.num_graphs)
            pooled = dense.masked_fill(~mask.unsqueeze(-1), -math.inf).max(1).values
        else:
            raise ShapeError(f"unknown readout {self.readout!r}")
        return Embedding(self.proj(pooled))


class GCNEncoder(GraphEncoder):
    def __init__(self, in_dim, dims=(64, 64, 64), out_dim=128, readout=None):
        super().__init__()
        self.in_dim = in_dim
        chans = [in_dim, *dims]
        self.layers = nn.ModuleList(GCNLayer(a, b) for a, b in zip(chans[:-1], chans[1:]))
        self._init_readout(chans[-1], out_dim, readout)

    def forward(self, g):
        self._check(g)
        h = g.x
        for layer in self.layers:
            h = F.relu(layer(h, g.edge_index))
        return self._pool(h, g)


class GATEncoder(GraphEncoder):
    def __init__(self, in_dim, dims=(64, 64), heads=4, out_dim=128, readout=None):
        super().__init__()
        self.in_dim = in_dim
        layers = []
        prev = in_dim
        for d in dims:
            if d % heads:
                raise ShapeError(f"GAT dim {d} not divisible by {heads} heads")
            layers.append(GATLayer(prev, d // heads, heads))
            prev = d
        self.layers = nn.ModuleList(layers)
        self._init_readout(prev, out_dim, readout)

    def forward(self, g):
        self._check(g)
        h = g.x
        for layer in self.layers:
            h = F.elu(layer(h, g.edge_index))
        return self._pool(h, g)


class GINEncoder(GraphEncoder):
    default_readout = "sum"

    def __init__(self, in_dim, dims=(64, 64, 64), out_dim=128, readout=None):
        super().__init__()
        self.in_dim = in_dim
        chans = [in_dim, *dims]
        self.layers = nn.ModuleList(GINLayer(a, b) for a, b in zip(chans[:-1], chans[1:]))
        self._init_readout(chans[-1], out_dim, readout)

    def forward(self, g):
        self._check(g)
        h = g.x
        for layer in self.layers:
            h = F.relu(layer(h, g.edge_index))
        return self._pool(h, g)


class MPNNEncoder(GraphEncoder):
    """Edge-network messages, GRU state update, Set2Set readout."""

    default_readout = "set2set"

    def __init__(self, in_dim, edge_dim=4, hidden=64, edge_hidden=128, steps=3, s2s_steps=3,
                 out_dim=128, readout=None):
        super().__init__()
        self.in_dim, self.edge_dim, self.hidden, self.steps = in_dim, edge_dim, hidden, steps
        self.project = nn.Linear(in_dim, hidden)
        self.edge_net = nn.Sequential(nn.Linear(edge_dim, edge_hidden), nn.ReLU(),
                                      nn.Linear(edge_hidden, hidden * hidden))
        self.gru = nn.GRUCell(hidden, hidden)
        glorot_(self)
        self.readout = readout or self.default_readout
        if self.readout == "set2set":
            self.s2s = Set2Set(hidden, s2s_steps)
            self.proj = glorot_(nn.Linear(2 * hidden, out_dim))
            self.shape = Shape(VECTOR, out_dim)
        else:
            self._init_readout(hidden, out_dim, readout)

    def messages(self, h, g):
        src, dst = g.edge_index
        A = self.edge_net(g.edge_attr).view(-1, self.hidden, self.hidden)
        msg = torch.bmm(A, h[src].unsqueeze(-1)).squeeze(-1)
        return segment_sum(msg, dst, h.shape[0])

    def forward(self, g):
        self._check(g)
        if g.edge_attr is None or g.edge_attr.shape[1] != self.edge_dim:
            raise ShapeError(f"MPNN needs edge features of width {self.edge_dim}")
        h = F.relu(self.project(g.x))
        for _ in range(self.steps):
            h = self.gru(self.messages(h, g), h)
        if self.readout == "set2set":
            return Embedding(self.proj(self.s2s(h, g.batch, g.num_graphs)))
        return self._pool(h, g)


class NeuralFPEncoder(nn.Module):
    """Differentiable circular fingerprint: per-layer softmax projections summed over atoms."""

    def __init__(self, in_dim, dims=(64, 64), fp_len=128, out_dim=None):
        super().__init__()
        self.in_dim = in_dim
        fp_len = out_dim or fp_len
        chans = [in_dim, *dims]
        self.layers = nn.ModuleList(nn.Linear(a, b) for a, b in zip(chans[:-1], chans[1:]))
        self.outs = nn.ModuleList(nn.Linear(b, fp_len) for b in chans[1:])
        self.shape = Shape(VECTOR, fp_len)
        glorot_(self)

    def forward(self, g):
        GraphEncoder._check(self, g)
        src, dst = g.edge_index
        h = g.x
        fp = 0
        for layer, out in zip(self.layers, self.outs):
            h = torch.tanh(layer(h + segment_sum(h[src], dst, h.shape[0])))
            fp = fp + segment_sum(torch.softmax(out(h), dim=-1), g.batch, g.num_graphs)
        return Embedding(fp)


class AttentiveFPEncoder(nn.Module):
    """Graph attention with GRU updates and an attentive super-node readout."""

    def __init__(self, in_dim, edge_dim=None, hidden=64, layers=2, steps=2, out_dim=128, slope=0.01):
        super().__init__()
        self.in_dim, self.edge_dim, self.slope = in_dim, edge_dim, slope
        self.embed = nn.Linear(in_dim, hidden)
        self.neighbor = nn.Linear(in_dim + (edge_dim or 0), hidden)
        self.align = nn.ModuleList(nn.Linear(2 * hidden, 1) for _ in range(layers))
        self.attend = nn.ModuleList(nn.Linear(hidden, hidden) for _ in range(layers))
        self.grus = nn.ModuleList(nn.GRUCell(hidden, hidden) for _ in range(layers))
        self.mol_align = nn.Linear(2 * hidden, 1)
        self.mol_attend = nn.Linear(hidden, hidden)
        self.mol_gru = nn.GRUCell(hidden, hidden)
        self.steps = steps
        self.proj = nn.Linear(hidden, out_dim)
        self.shape = Shape(VECTOR, out_dim)
        glorot_(self)
        self.last_attention = None

    def forward(self, g):
        GraphEncoder._check(self, g)
        src, dst = g.edge_index
        n = g.x.shape[0]
        h = F.leaky_relu(self.embed(g.x), self.slope)
        if self.edge_dim:
            if g.edge_attr is None or g.edge_attr.shape[1] != self.edge_dim:
                raise ShapeError(f"AttentiveFP needs edge features of width {self.edge_dim}")
            nb = F.leaky_relu(self.neighbor(torch.cat([g.x[src], g.edge_attr], dim=-1)), self.slope)
        else:
            nb = F.leaky_relu(self.neighbor(g.x[src]), self.slope)
        for k, (align, attend, gru) in enumerate(zip(self.align, self.attend, self.grus)):
            if k > 0:
                nb = h[src]
            score = F.leaky_relu(align(torch.cat([h[dst], nb], dim=-1)), self.slope)
            alpha = segment_softmax(score, dst, n)
            ctx = F.elu(segment_sum(alpha * attend(nb), dst, n))
            h = F.relu(gru(ctx, h))
        s = segment_sum(h, g.batch, g.num_graphs)
        for _ in range(self.steps):
            score = F.leaky_relu(self.mol_align(torch.cat([s[g.batch], h], dim=-1)), self.slope)
            alpha = segment_softmax(score, g.batch, g.num_graphs)
            self.last_attention = alpha.detach()
            ctx = F.elu(segment_sum(alpha * self.mol_attend(h), g.batch, g.num_graphs))
            s = F.relu(self.mol_gru(ctx, s))
        return Embedding(self.proj(s))


# ---------------------------------------------------------------- adapter slots

class AdapterEncoder(nn.Module):
    """Encoder implemented outside the core (SchNet, MGCN, GVP, GearNet, ...).

    The adapter registered under kind ``encoder`` is a factory
    ``factory(in_dim=..., out_dim=..., **params)`` returning a callable (ideally
    an ``nn.Module``) that maps the featurized batch to ``(B, out_dim)``.
    """

    def __init__(self, name, in_dim, out_dim=128, **params):
        super().__init__()
        self.name, self.in_dim, self.params = name, in_dim, params
        self.shape = Shape(VECTOR, out_dim)
        self.impl = None
        self._resolve(required=False)

    def _resolve(self, required):
        if self.impl is not None:
            return
        if not adapters.is_registered("encoder", self.name):
            if required:
                raise AdapterUnavailable(f"no encoder adapter registered for {self.name!r}")
            return
        impl = adapters.get("encoder", self.name)(in_dim=self.in_dim, out_dim=self.shape.dim, **self.params)
        if isinstance(impl, nn.Module):
            self.impl = impl
        else:
            self.impl = _CallableModule(impl)

    def forward(self, inputs):
        self._resolve(required=True)
        out = self.impl(inputs)
        if isinstance(out, Embedding):
            out = out.values
        out = torch.as_tensor(out)
        batch = inputs.num_graphs if isinstance(inputs, GraphBatch) else len(inputs)
        if out.dim() == 1 and batch == 1:
            out = out.unsqueeze(0)
        if tuple(out.shape) != (batch, self.shape.dim):
            raise ShapeError(f"encoder adapter {self.name!r} returned {tuple(out.shape)}, "
                             f"expected ({batch}, {self.shape.dim})")
        return Embedding(out)


class _CallableModule(nn.Module):
    def __init__(self, fn):
        super().__init__()
        self.fn = fn

    def forward(self, x):
        return self.fn(x)


LAYERS = {
    "mlp": MLPEncoder,
    "cnn": CNN1DEncoder,
    "transformer": TransformerEncoder,
    "gcn": GCNEncoder,
    "gat": GATEncoder,
    "gin": GINEncoder,
    "mpnn": MPNNEncoder,
    "neuralfp": NeuralFPEncoder,
    "attentivefp": AttentiveFPEncoder,
    "adapter": AdapterEncoder,
}
