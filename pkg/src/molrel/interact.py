"""Interaction layers combining embeddings within or across entities.

Each layer is built from the declared input :class:`Shape` list and exposes
its own output ``shape``; ``forward`` takes one :class:`Embedding` per input.
"""
import math

import torch
from torch import nn
import torch.nn.functional as F

from .encode import TOKEN_SET, VECTOR, Embedding, MultiHeadAttention, Shape, glorot_
from .errors import ArityError, ConfigurationError, KindError, ShapeError


def _require(name, shapes, kind, arity):
    lo, hi = arity
    if not lo <= len(shapes) <= hi:
        want = f"exactly {lo}" if lo == hi else f"at least {lo}"
        raise ArityError(f"{name} takes {want} input(s), got {len(shapes)}")
    for s in shapes:
        if s.kind != kind:
            hint = " (flatten token sets first)" if kind == VECTOR else " (stack vectors or use a token-set encoder output)"
            raise KindError(f"{name} needs {kind} inputs, got {s}{hint}")


class Concatenation(nn.Module):
    """End-to-end concatenation of vectors, in declaration order."""

    def __init__(self, shapes):
        super().__init__()
        _require("concatenation", shapes, VECTOR, (1, math.inf))
        self.shape = Shape(VECTOR, sum(s.dim for s in shapes))

    def forward(self, *embs):
        return Embedding(torch.cat([e.values for e in embs], dim=-1))


class BilinearFusion(nn.Module):
    """``z_m = ReLU(v1^T W_m v2 + c_m)`` with each ``W_m = U_m^T V_m`` of rank ``rank``."""

    def __init__(self, shapes, out_dim=128, rank=16):
        super().__init__()
        _require("bilinear_fusion", shapes, VECTOR, (2, 2))
        self.out_dim, self.rank = out_dim, rank
        self.U = nn.Linear(shapes[0].dim, out_dim * rank, bias=False)
        self.V = nn.Linear(shapes[1].dim, out_dim * rank, bias=False)
        self.c = nn.Parameter(torch.zeros(out_dim))
        glorot_(self)
        self.shape = Shape(VECTOR, out_dim)

    def forward(self, e1, e2):
        u = self.U(e1.values).view(-1, self.out_dim, self.rank)
        v = self.V(e2.values).view(-1, self.out_dim, self.rank)
        return Embedding(F.relu((u * v).sum(-1) + self.c))


class GatedFusion(nn.Module):
    """``z = g * tanh(W1 v1) + (1 - g) * tanh(W2 v2)``, ``g = sigmoid(Wg [v1 || v2] + bg)``."""

    def __init__(self, shapes, out_dim=None):
        super().__init__()
        _require("gated_fusion", shapes, VECTOR, (2, 2))
        d1, d2 = shapes[0].dim, shapes[1].dim
        out_dim = out_dim or max(d1, d2)
        self.W1 = nn.Linear(d1, out_dim, bias=False)
        self.W2 = nn.Linear(d2, out_dim, bias=False)
        self.Wg = nn.Linear(d1 + d2, out_dim)
        glorot_(self)
        self.shape = Shape(VECTOR, out_dim)

    def forward(self, e1, e2):
        v1, v2 = e1.values, e2.values
        g = torch.sigmoid(self.Wg(torch.cat([v1, v2], dim=-1)))
        return Embedding(g * torch.tanh(self.W1(v1)) + (1 - g) * torch.tanh(self.W2(v2)))


class Highway(nn.Module):
    """Stacked highway layers: ``x' = t * ReLU(W_h x) + (1 - t) * x``."""

    def __init__(self, shapes, layers=2, gate_bias=-1.0):
        super().__init__()
        _require("highway", shapes, VECTOR, (1, 1))
        d = shapes[0].dim
        self.H = nn.ModuleList(nn.Linear(d, d) for _ in range(layers))
        self.T = nn.ModuleList(nn.Linear(d, d) for _ in range(layers))
        glorot_(self)
        for t in self.T:
            nn.init.constant_(t.bias, gate_bias)
        self.shape = Shape(VECTOR, d)

    def forward(self, e):
        x = e.values
        for h, t in zip(self.H, self.T):
            gate = torch.sigmoid(t(x))
            x = gate * F.relu(h(x)) + (1 - gate) * x
        return Embedding(x)


def _masked_max(x, mask):
    return x.masked_fill(~mask.unsqueeze(-1), -math.inf).max(dim=1).values


class _Direction(nn.Module):
    def __init__(self, d):
        super().__init__()
        self.q = nn.Linear(d, d)
        self.k = nn.Linear(d, d)
        self.v = nn.Linear(d, d)
        glorot_(self)

    def forward(self, a, a_mask, b, b_mask):
        scores = self.q(a) @ self.k(b).transpose(1, 2) / math.sqrt(a.shape[-1])
        scores = scores.masked_fill(~b_mask[:, None, :], -math.inf)
        attn = torch.softmax(scores, dim=-1)
        return _masked_max(attn @ self.v(b), a_mask), attn


class CrossAttention(nn.Module):
    """Bidirectional cross attention with element-wise max pooling; output ``p1 || p2``."""

    def __init__(self, shapes):
        super().__init__()
        _require("cross_attention", shapes, TOKEN_SET, (2, 2))
        if shapes[0].dim != shapes[1].dim:
            raise ShapeError(f"cross_attention needs equal token dims, got {shapes[0].dim} and {shapes[1].dim}")
        d = shapes[0].dim
        self.forward_dir = _Direction(d)
        self.backward_dir = _Direction(d)
        self.shape = Shape(VECTOR, 2 * d)
        self.last_attention = None

    def forward(self, e1, e2):
        p1, a12 = self.forward_dir(e1.values, e1.mask, e2.values, e2.mask)
        p2, a21 = self.backward_dir(e2.values, e2.mask, e1.values, e1.mask)
        self.last_attention = (a12.detach(), a21.detach())
        return Embedding(torch.cat([p1, p2], dim=-1))


_ACTIVATIONS = {"relu": nn.ReLU, "tanh": nn.Tanh, "identity": nn.Identity, "leaky_relu": nn.LeakyReLU}


class BilinearAttention(nn.Module):
    """Bilinear attention network layer.

    Both token sets are projected to ``k * out_dim``; each head scores every
    token pair with a low-rank bilinear form, the joint map (softmax over all
    ``n1 x n2`` pairs) weights a bilinear pooling whose ``k``-groups are summed,
    heads are summed and the result is batch-normalized.
    """

    def __init__(self, shapes, out_dim=128, heads=2, k=3, activation="relu", dropout=0.0):
        super().__init__()
        _require("bilinear_attention", shapes, TOKEN_SET, (2, 2))
        d1, d2 = shapes[0].dim, shapes[1].dim
        if activation not in _ACTIVATIONS:
            raise ConfigurationError(f"unknown activation {activation!r}")
        self.heads, self.k, self.out_dim = heads, k, out_dim
        act = _ACTIVATIONS[activation]
        self.proj1 = nn.Sequential(nn.Linear(d1, out_dim * k), act(), nn.Dropout(dropout))
        self.proj2 = nn.Sequential(nn.Linear(d2, out_dim * k), act(), nn.Dropout(dropout))
        glorot_(self)
        self.h_mat = nn.Parameter(torch.randn(heads, out_dim * k) / math.sqrt(out_dim * k))
        self.h_bias = nn.Parameter(torch.zeros(heads))
        self.bn = nn.BatchNorm1d(out_dim, momentum=0.1)
        self.shape = Shape(VECTOR, out_dim)
        self.last_attention = None

    def attention(self, v, q, m1, m2):
        scores = torch.einsum("hk,bik,bjk->bhij", self.h_mat, v, q) + self.h_bias[None, :, None, None]
        pair_mask = (m1[:, :, None] & m2[:, None, :])[:, None]
        scores = scores.masked_fill(~pair_mask, -math.inf)
        B, H, n1, n2 = scores.shape
        return torch.softmax(scores.reshape(B, H, -1), dim=-1).view(B, H, n1, n2)

    def forward(self, e1, e2):
        v, q = self.proj1(e1.values), self.proj2(e2.values)
        att = self.attention(v, q, e1.mask, e2.mask)
        self.last_attention = att.detach()
        joint = torch.einsum("bik,bhij,bjk->bk", v, att, q)  # heads summed
        pooled = joint.view(-1, self.out_dim, self.k).sum(-1)
        return Embedding(self.bn(pooled))


class SelfAttention(nn.Module):
    """Multi-head self attention over a token set, optional residual and layer norm."""

    def __init__(self, shapes, heads=4, residual=True, layernorm=True):
        super().__init__()
        _require("self_attention", shapes, TOKEN_SET, (1, 1))
        d = shapes[0].dim
        if d % heads:
            raise ShapeError(f"self_attention dim {d} not divisible by {heads} heads")
        self.attn = MultiHeadAttention(d, heads)
        self.residual = residual
        self.norm = nn.LayerNorm(d) if layernorm else None
        self.shape = shapes[0]
        self.last_attention = None

    def forward(self, e):
        x = e.values
        out, w = self.attn(x, x, x, key_mask=e.mask)
        self.last_attention = w.detach()
        if self.residual:
            out = x + out
        if self.norm is not None:
            out = self.norm(out)
        return Embedding(out, e.mask)


INTERACTIONS = {
    "concatenation": Concatenation,
    "bilinear_attention": BilinearAttention,
    "bilinear_fusion": BilinearFusion,
    "cross_attention": CrossAttention,
    "highway": Highway,
    "gated_fusion": GatedFusion,
    "self_attention": SelfAttention,
}

ALIASES = {
    "concat": "concatenation",
    "ban": "bilinear_attention",
    "bidirectional_cross_attention": "cross_attention",
    "multi_head_attention": "self_attention",
    "multihead_attention": "self_attention",
}


def canonical_interaction(name):
    key = name.strip().lower().replace("-", "_").replace(" ", "_")
    key = ALIASES.get(key, key)
    if key not in INTERACTIONS:
        raise ConfigurationError(f"unknown interaction {name!r}; known: {', '.join(INTERACTIONS)}")
    return key


def build_interaction(name, shapes, **params):
    return INTERACTIONS[canonical_interaction(name)](list(shapes), **params)
