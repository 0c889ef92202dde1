"""Inference-only forward pass producing portal scores from a weight bundle.

Architecture: linear encoder with folded-norm affine and ReLU, three message
passing layers (GCN with symmetric normalisation in 2D, 4-head GATv2 in 3D)
where layers 2 and 3 add the embedding from two layers back after the
activation, then a per-portal MLP (2h+d_e -> h -> 32 -> 1) with sigmoid.

Weight file: JSON with a `header` object and a `tensors` map of
name -> {"shape": [...], "data": row-major float list}. Normalisation layers
are stored as affine parameters plus running statistics and applied as
y = gamma * (x - mean) / sqrt(var + eps) + beta.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .cellgraph import CellGraph
from .errors import (FeatureVersionMismatch, NonFiniteActivation,
                     SchemaMismatch, ShapeMismatch)

SCHEMA_VERSION = 1
DEFAULT_HIDDEN = 128
DEFAULT_LAYERS = 3
DEFAULT_HEADS = 4
DEFAULT_LEAKY_SLOPE = 0.2
DEFAULT_NORM_EPS = 1e-5
RESIDUAL_RULE = "post-activation-two-back"

_NORM_PARTS = ("gamma", "beta", "mean", "var")


@dataclass
class GnnWeights:
    header: dict
    tensors: dict  # name -> np.ndarray (float64)

    @property
    def arch(self):
        return self.header["arch"]

    @property
    def hidden(self):
        return int(self.header["hidden"])

    @property
    def num_layers(self):
        return int(self.header["num_layers"])

    @property
    def norm_eps(self):
        return float(self.header.get("norm_eps", DEFAULT_NORM_EPS))

    def __getitem__(self, name):
        return self.tensors[name]


def expected_shapes(header):
    """Tensor name -> shape implied by the header."""
    arch = header["arch"]
    d_n, d_e = int(header["d_n"]), int(header["d_e"])
    h = int(header["hidden"])
    layers = int(header["num_layers"])
    shapes = {
        "encoder.weight": (h, d_n),
        "encoder.bias": (h,),
    }
    for part in _NORM_PARTS:
        shapes[f"encoder_norm.{part}"] = (h,)
        shapes[f"edge_norm.{part}"] = (d_e,)
    for i in range(layers):
        if arch == "gcn2d":
            shapes[f"layers.{i}.weight"] = (h, h)
        elif arch == "gatv2_3d":
            heads = int(header["heads"])
            out = h if i == layers - 1 else h // heads
            shapes[f"layers.{i}.wl"] = (heads, out, h)
            shapes[f"layers.{i}.wr"] = (heads, out, h)
            shapes[f"layers.{i}.attn"] = (heads, out)
            shapes[f"layers.{i}.bias"] = (h,)
        else:
            raise SchemaMismatch(f"unknown arch {arch!r}")
        for part in _NORM_PARTS:
            shapes[f"layers.{i}.norm.{part}"] = (h,)
    shapes["edge_mlp.0.weight"] = (h, 2 * h + d_e)
    shapes["edge_mlp.0.bias"] = (h,)
    shapes["edge_mlp.1.weight"] = (32, h)
    shapes["edge_mlp.1.bias"] = (32,)
    shapes["edge_mlp.2.weight"] = (1, 32)
    shapes["edge_mlp.2.bias"] = (1,)
    return shapes


def load_weights(path) -> GnnWeights:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaMismatch(f"cannot read weight file {path}: {exc}") from exc
    return weights_from_dict(doc)


def weights_from_dict(doc) -> GnnWeights:
    if not isinstance(doc, dict) or "header" not in doc or "tensors" not in doc:
        raise SchemaMismatch("weight file missing header/tensors")
    header = doc["header"]
    for key in ("arch", "d_n", "d_e", "hidden", "num_layers", "feature_packing"):
        if key not in header:
            raise SchemaMismatch(f"weight header missing {key!r}")
    if header.get("schema_version", SCHEMA_VERSION) != SCHEMA_VERSION:
        raise SchemaMismatch(
            f"unsupported weight schema version {header.get('schema_version')}")
    if header["arch"] == "gatv2_3d" and "heads" not in header:
        raise SchemaMismatch("gatv2 header missing 'heads'")

    shapes = expected_shapes(header)
    tensors = {}
    raw = doc["tensors"]
    for name, shape in shapes.items():
        if name not in raw:
            raise ShapeMismatch(f"missing tensor {name!r}")
        entry = raw[name]
        try:
            arr = np.asarray(entry["data"], dtype=np.float64).reshape(entry["shape"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ShapeMismatch(f"malformed tensor {name!r}: {exc}") from exc
        if tuple(arr.shape) != shape:
            raise ShapeMismatch(
                f"tensor {name!r} has shape {tuple(arr.shape)}, expected {shape}")
        if not np.isfinite(arr).all():
            raise ShapeMismatch(f"tensor {name!r} contains non-finite values")
        tensors[name] = arr
    extra = set(raw) - set(shapes)
    if extra:
        raise ShapeMismatch(f"unexpected tensors {sorted(extra)}")
    var_names = [n for n in tensors if n.endswith(".var")]
    for n in var_names:
        if (tensors[n] < 0).any():
            raise ShapeMismatch(f"negative variance in {n!r}")
    return GnnWeights(header=dict(header), tensors=tensors)


def save_weights(w: GnnWeights, path):
    doc = {
        "header": w.header,
        "tensors": {
            name: {"shape": list(arr.shape), "data": arr.ravel().tolist()}
            for name, arr in w.tensors.items()
        },
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def check_compatible(g: CellGraph, w: GnnWeights):
    if w.header["feature_packing"] != g.feature_version:
        raise FeatureVersionMismatch(
            f"weights built for packing {w.header['feature_packing']!r}, "
            f"graph uses {g.feature_version!r}")
    if int(w.header["d_n"]) != g.node_features.shape[1] or \
            int(w.header["d_e"]) != g.edge_features.shape[1]:
        raise FeatureVersionMismatch(
            f"feature dims ({g.node_features.shape[1]}, {g.edge_features.shape[1]}) "
            f"do not match weight header ({w.header['d_n']}, {w.header['d_e']})")


# ---------------------------------------------------------------------------
# forward pass
# ---------------------------------------------------------------------------

def _norm_affine(x, w: GnnWeights, prefix):
    gamma = w[f"{prefix}.gamma"]
    beta = w[f"{prefix}.beta"]
    mean = w[f"{prefix}.mean"]
    var = w[f"{prefix}.var"]
    return gamma * (x - mean) / np.sqrt(var + w.norm_eps) + beta


def _relu(x):
    return np.maximum(x, 0.0)


def _gcn_adjacency(g: CellGraph):
    n = g.n_cells
    A = np.eye(n)
    for u, v, _pid in g.directed_edges():
        A[v, u] = 1.0
    deg = A.sum(axis=1)
    inv_sqrt = 1.0 / np.sqrt(deg)
    return A * inv_sqrt[:, None] * inv_sqrt[None, :]


def node_embeddings(g: CellGraph, w: GnnWeights) -> np.ndarray:
    """Final node embeddings h^(L); dropout is identity at inference."""
    x = g.node_features @ w["encoder.weight"].T + w["encoder.bias"]
    h = _relu(_norm_affine(x, w, "encoder_norm"))

    layers = w.num_layers
    history = [h]  # history[0] = encoder output
    if w.arch == "gcn2d":
        a_hat = _gcn_adjacency(g)
        for i in range(layers):
            z = a_hat @ history[-1] @ w[f"layers.{i}.weight"].T
            out = _relu(_norm_affine(z, w, f"layers.{i}.norm"))
            if i >= 1:
                out = out + history[i - 1]
            history.append(out)
    elif w.arch == "gatv2_3d":
        slope = float(w.header.get("leaky_relu_slope", DEFAULT_LEAKY_SLOPE))
        in_nbrs = [[v] for v in range(g.n_cells)]  # self always attends
        for u, v, _pid in g.directed_edges():
            in_nbrs[v].append(u)
        for i in range(layers):
            z = _gatv2_layer(history[-1], w, i, in_nbrs, slope,
                             concat=i < layers - 1)
            out = _relu(_norm_affine(z, w, f"layers.{i}.norm"))
            if i >= 1:
                out = out + history[i - 1]
            history.append(out)
    else:  # pragma: no cover - rejected at load time
        raise SchemaMismatch(f"unknown arch {w.arch!r}")
    return history[-1]


def _gatv2_layer(h, w, i, in_nbrs, slope, concat):
    wl = w[f"layers.{i}.wl"]                   # (heads, out, in)
    wr = w[f"layers.{i}.wr"]
    attn = w[f"layers.{i}.attn"]               # (heads, out)
    bias = w[f"layers.{i}.bias"]
    heads, out_dim, _ = wl.shape
    src = np.einsum("hoi,ni->nho", wl, h)      # source messages W_l h_u
    dst = np.einsum("hoi,ni->nho", wr, h)
    n = h.shape[0]
    out = np.zeros((n, heads, out_dim))
    for v in range(n):
        us = in_nbrs[v]
        pre = src[us] + dst[v][None, :, :]                      # (k, heads, out)
        pre = np.where(pre >= 0.0, pre, slope * pre)
        logits = np.einsum("kho,ho->kh", pre, attn)             # (k, heads)
        logits = logits - logits.max(axis=0, keepdims=True)
        alpha = np.exp(logits)
        alpha = alpha / alpha.sum(axis=0, keepdims=True)
        out[v] = np.einsum("kh,kho->ho", alpha, src[us])
    if concat:
        res = out.reshape(n, heads * out_dim)
    else:
        res = out.mean(axis=1)
    return res + bias


def score_portals(g: CellGraph, w: GnnWeights) -> np.ndarray:
    """Score per portal in (0, 1).

    One score per undirected portal, computed on the canonical direction:
    the endpoint whose centroid is lexicographically smaller goes first, so
    the result is invariant under relabelling of cell ids.
    """
    check_compatible(g, w)
    m = len(g.portals)
    if m == 0:
        return np.zeros(0)
    h = node_embeddings(g, w)
    e = _norm_affine(g.edge_features, w, "edge_norm")
    lo, hi = [], []
    for p in g.portals:
        i, j = p.cells
        if g.cells[j].centroid < g.cells[i].centroid:
            i, j = j, i
        lo.append(i)
        hi.append(j)
    z = np.concatenate([h[lo], h[hi], e], axis=1)
    z = _relu(z @ w["edge_mlp.0.weight"].T + w["edge_mlp.0.bias"])
    z = _relu(z @ w["edge_mlp.1.weight"].T + w["edge_mlp.1.bias"])
    logits = (z @ w["edge_mlp.2.weight"].T + w["edge_mlp.2.bias"])[:, 0]
    if not np.isfinite(logits).all():
        raise NonFiniteActivation("edge scorer produced non-finite values")
    pos = logits >= 0
    scores = np.empty_like(logits)
    scores[pos] = 1.0 / (1.0 + np.exp(-logits[pos]))
    ex = np.exp(logits[~pos])
    scores[~pos] = ex / (1.0 + ex)
    # float sigmoid saturates for |logit| > ~37; keep the interval open
    return np.clip(scores, np.nextafter(0.0, 1.0), np.nextafter(1.0, 0.0))


def apply_scores(g: CellGraph, scores):
    for p, s in zip(g.portals, scores):
        p.score = float(s)
