"""Graph network on Hodge Laplacian graphs: forward, gradients, training, evaluation.

Each layer computes ``H <- act(S @ H @ W)`` with ``S`` the masked
shift-inverted Laplacian; hidden layers use LeakyReLU and the last layer
tanh with a single output channel.
"""
from __future__ import annotations

import json
import logging
import math
import os
import struct
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import NonFiniteError

log = logging.getLogger(__name__)

CHECKPOINT_MAGIC = b"HGNCKPT\0"
CHECKPOINT_VERSION = 1


@dataclass
class ModelConfig:
    in_features: int = 8
    num_layers: int = 12
    hidden: int = 128
    leaky_slope: float = 0.02
    output_activation: str = "tanh"

    def shapes(self):
        if self.num_layers < 1:
            raise ValueError("need at least one layer")
        dims = [self.in_features] + [self.hidden] * (self.num_layers - 1) + [1]
        return [(dims[i], dims[i + 1]) for i in range(self.num_layers)]


def kaiming_init(shape, rng, leaky_slope=0.02):
    """Kaiming-uniform weights for a LeakyReLU network.

    Uniform on [-b, b] with b = gain * sqrt(6 / fan_in) and
    gain = sqrt(2 / (1 + slope**2)); fan_in is the number of rows.
    The extra factor sqrt(2) over the textbook bound offsets the
    contraction of the shift-inverted operator, whose entries are below
    one, so activations survive twelve layers.
    """
    fan_in = shape[0]
    gain = math.sqrt(2.0 / (1.0 + leaky_slope ** 2))
    bound = gain * math.sqrt(6.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape)


class Dist2CycleModel:
    def __init__(self, config, weights=None, seed=0):
        self.config = config
        self.seed = seed
        if weights is None:
            rng = np.random.default_rng(seed)
            weights = [kaiming_init(s, rng, config.leaky_slope) for s in config.shapes()]
        self.weights = [np.asarray(w, dtype=float) for w in weights]
        self._check()

    def _check(self):
        shapes = [w.shape for w in self.weights]
        if shapes != self.config.shapes():
            raise ValueError(f"weight shapes {shapes} do not match config {self.config.shapes()}")
        for a, b in zip(shapes, shapes[1:]):
            if a[1] != b[0]:
                raise ValueError("inconsistent shape chain")
        if not all(np.all(np.isfinite(w)) for w in self.weights):
            raise NonFiniteError("non-finite model parameters")

    @property
    def num_parameters(self):
        return sum(w.size for w in self.weights)

    def copy(self):
        return Dist2CycleModel(self.config, [w.copy() for w in self.weights], self.seed)


def _operator(G):
    return G.weight_matrix if hasattr(G, "weight_matrix") else G


def forward(model, G, H0, return_cache=False):
    """Per-node predictions in (-1, 1).

    ``G`` is a HodgeLaplacianGraph or directly the (sparse) weight matrix.
    """
    S = _operator(G)
    H = np.asarray(getattr(H0, "values", H0), dtype=float)
    if H.shape[0] != S.shape[0]:
        raise ValueError(f"feature rows {H.shape[0]} != graph nodes {S.shape[0]}")
    if H.shape[1] != model.weights[0].shape[0]:
        raise ValueError(f"feature width {H.shape[1]} != model input {model.weights[0].shape[0]}")
    r = model.config.leaky_slope
    last = len(model.weights) - 1
    cache = []
    for ell, W in enumerate(model.weights):
        P = S @ H
        Z = P @ W
        if not np.all(np.isfinite(Z)):
            raise NonFiniteError(f"non-finite activations at layer {ell}", layer=ell)
        cache.append((P, Z))
        if ell < last:
            H = np.where(Z > 0, Z, r * Z)
        else:
            H = np.tanh(Z)
    y = H[:, 0]
    if return_cache:
        return y, cache
    return y


def loss_mse(pred, target):
    t = np.asarray(getattr(target, "values", target), dtype=float)
    p = np.asarray(pred, dtype=float)
    if p.shape != t.shape:
        raise ValueError(f"prediction shape {p.shape} != target shape {t.shape}")
    if p.size == 0:
        raise ValueError("empty prediction vector")
    return float(np.mean((p - t) ** 2))


def backward(model, G, H0, target):
    """Loss and the gradient of the MSE loss for every weight matrix."""
    S = _operator(G)
    t = np.asarray(getattr(target, "values", target), dtype=float)
    y, cache = forward(model, G, H0, return_cache=True)
    n = y.shape[0]
    loss = float(np.mean((y - t) ** 2))
    r = model.config.leaky_slope
    St = S.T
    grads = [None] * len(model.weights)
    # d loss / d Z for the tanh output layer
    dZ = (2.0 / n) * (y - t) * (1.0 - y * y)
    dZ = dZ[:, None]
    for ell in range(len(model.weights) - 1, -1, -1):
        P, Z = cache[ell]
        W = model.weights[ell]
        grads[ell] = P.T @ dZ
        if ell == 0:
            break
        dH = St @ (dZ @ W.T)
        Zprev = cache[ell - 1][1]
        dZ = dH * np.where(Zprev > 0, 1.0, r)
    return loss, grads


# -- optimizers ------------------------------------------------------------

@dataclass
class Adam:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.0
    t: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)

    name = "adam"

    def step(self, params, grads):
        if not self.m:
            self.m = [np.zeros_like(p) for p in params]
            self.v = [np.zeros_like(p) for p in params]
        self.t += 1
        b1t = 1.0 - self.beta1 ** self.t
        b2t = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            if self.weight_decay:
                g = g + self.weight_decay * p
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / b1t) / (np.sqrt(v / b2t) + self.eps)

    def state_arrays(self):
        return self.m + self.v


@dataclass
class SGD:
    lr: float = 1e-2
    weight_decay: float = 0.0
    t: int = 0

    name = "sgd"

    def step(self, params, grads):
        self.t += 1
        for p, g in zip(params, grads):
            if self.weight_decay:
                g = g + self.weight_decay * p
            p -= self.lr * g

    def state_arrays(self):
        return []


def make_optimizer(name, lr=None, weight_decay=0.0):
    if name == "adam":
        return Adam(lr=1e-3 if lr is None else lr, weight_decay=weight_decay)
    if name == "sgd":
        return SGD(lr=1e-2 if lr is None else lr, weight_decay=weight_decay)
    raise ValueError(f"unknown optimizer {name!r}")


# -- smoothing ---------------------------------------------------------------

def edge_adjacency_matrix(K):
    """Edges adjacent when they share a vertex; no self loops."""
    edges = np.array(K.simplices(1), dtype=np.int64).reshape(-1, 2)
    n = len(edges)
    if n == 0:
        return sp.csr_matrix((0, 0))
    nv = int(edges.max()) + 1
    inc = sp.csr_matrix((np.ones(2 * n), (np.repeat(np.arange(n), 2), edges.ravel())), shape=(n, nv))
    A = (inc @ inc.T).tocsr()
    A.setdiag(0)
    A.eliminate_zeros()
    A.data[:] = 1.0
    return A


def laplacian_smooth(K, x, A=None):
    """x - Lhat x with Lhat = D^{-1/2} (D - A) D^{-1/2} on the edge adjacency graph.

    Zero-degree nodes get D^{-1/2} = 0, so their values pass through unchanged.
    """
    x = np.asarray(x, dtype=float)
    if A is None:
        A = edge_adjacency_matrix(K)
    if A.shape[0] != x.shape[0]:
        raise ValueError("signal length does not match the number of edges")
    deg = np.asarray(A.sum(axis=1)).ravel()
    dm = np.zeros_like(deg)
    dm[deg > 0] = deg[deg > 0] ** -0.5
    Lx = dm * (deg * (dm * x) - A @ (dm * x))
    return x - Lx


def normalized_edge_laplacian(K, A=None):
    if A is None:
        A = edge_adjacency_matrix(K)
    deg = np.asarray(A.sum(axis=1)).ravel()
    dm = np.zeros_like(deg)
    dm[deg > 0] = deg[deg > 0] ** -0.5
    D = sp.diags(dm)
    return (D @ (sp.diags(deg) - A) @ D).tocsr()


# -- checkpoints -------------------------------------------------------------

def save_checkpoint(path, model, optimizer=None, epoch=0, loss_history=(), extra=None):
    """Versioned binary container: magic, version, JSON header, float64 payload."""
    arrays = list(model.weights)
    opt_state = None
    if optimizer is not None:
        opt_state = {"name": optimizer.name, "t": optimizer.t, "params": {
            k: v for k, v in asdict(optimizer).items() if k not in ("m", "v", "t")}}
        arrays += optimizer.state_arrays()
    header = {
        "version": CHECKPOINT_VERSION,
        "config": asdict(model.config),
        "seed": model.seed,
        "epoch": int(epoch),
        "loss_history": [float(x) for x in loss_history],
        "shapes": [list(a.shape) for a in arrays],
        "n_weights": len(model.weights),
        "optimizer": opt_state,
        "extra": extra or {},
    }
    blob = json.dumps(header, sort_keys=True).encode()
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    tmp = path + ".tmp"
    with open(tmp, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<IQ", CHECKPOINT_VERSION, len(blob)))
        fh.write(blob)
        for a in arrays:
            fh.write(np.ascontiguousarray(a, dtype="<f8").tobytes())
    os.replace(tmp, path)


def load_checkpoint(path):
    """Returns ``(model, optimizer_or_None, header)``."""
    with open(path, "rb") as fh:
        if fh.read(len(CHECKPOINT_MAGIC)) != CHECKPOINT_MAGIC:
            raise ValueError(f"{path} is not a checkpoint file")
        version, hlen = struct.unpack("<IQ", fh.read(12))
        if version != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {version}")
        header = json.loads(fh.read(hlen).decode())
        arrays = []
        for shape in header["shapes"]:
            count = int(np.prod(shape))
            buf = fh.read(8 * count)
            if len(buf) != 8 * count:
                raise ValueError("truncated checkpoint payload")
            arrays.append(np.frombuffer(buf, dtype="<f8").reshape(shape).copy())
    config = ModelConfig(**header["config"])
    nw = header["n_weights"]
    model = Dist2CycleModel(config, arrays[:nw], seed=header["seed"])
    opt = None
    if header.get("optimizer"):
        o = header["optimizer"]
        opt = make_optimizer(o["name"])
        for k, v in o["params"].items():
            setattr(opt, k, v)
        opt.t = o["t"]
        state = arrays[nw:]
        if o["name"] == "adam" and state:
            opt.m, opt.v = state[: nw], state[nw:]
    return model, opt, header


# -- training ----------------------------------------------------------------

@dataclass
class TrainConfig:
    epochs: int = 1000
    batch: int = 5
    optimizer: str = "adam"
    lr: float | None = None
    weight_decay: float = 0.0
    seed: int = 0
    checkpoint_every: int = 50
    mask_mode: str = "full"
    normalize_graph: bool = False
    feature_scaling: str = "raw"


@dataclass
class TrainState:
    model: Dist2CycleModel
    optimizer: object
    epoch: int = 0
    loss_history: list = field(default_factory=list)
    last_batches: list = field(default_factory=list)


@dataclass
class Sample:
    """One prepared complex: graph operator, input features, targets."""
    name: str
    complex: object
    S: sp.csr_matrix
    X: np.ndarray
    y: np.ndarray


FEATURE_SCALINGS = ("raw", "unit_embed", "zscore")


def scale_features(F, mode="raw"):
    """Model-input transform of a feature matrix.

    ``unit_embed`` multiplies the spectral block by sqrt(n) so unit-norm
    eigenvectors get unit RMS entries, putting them on the scale of the
    Betti block; ``zscore`` standardizes every column within the complex.
    """
    X = np.array(getattr(F, "values", F), dtype=float)
    if mode == "raw":
        return X
    if mode == "unit_embed":
        nb = F.d + 2 if hasattr(F, "d") else 3
        X[:, nb:] *= math.sqrt(X.shape[0])
        return X
    if mode == "zscore":
        sd = X.std(axis=0)
        sd[sd == 0] = 1.0
        return (X - X.mean(axis=0)) / sd
    raise ValueError(f"unknown feature scaling {mode!r}")


def prepare_sample(K, F, T, name="", mask_mode="full", normalize=False, scaling="raw"):
    from .hlgraph import build_hlgraph

    G = build_hlgraph(K, 1, mode=mask_mode, normalize=normalize)
    X = scale_features(F, scaling)
    y = None if T is None else np.asarray(getattr(T, "values", T), dtype=float)
    if X.shape[0] != G.n or (y is not None and y.shape[0] != G.n):
        raise ValueError(f"{name}: features/labels do not match the {G.n} edges of the complex")
    return Sample(name, K, G.weight_matrix, X, y)


def load_samples(manifest, indices, mask_mode="full", normalize=False, scaling="raw"):
    from .dataset.generate import load_item

    out = []
    for i in indices:
        K, F, T = load_item(manifest, i)
        out.append(prepare_sample(K, F, T, manifest["files"]["complex"][i], mask_mode, normalize, scaling))
    return out


def batch_step(model, optimizer, batch):
    """Average per-complex losses and gradients over ``batch``, then update."""
    total = 0.0
    acc = [np.zeros_like(w) for w in model.weights]
    for s in batch:
        loss, grads = backward(model, s.S, s.X, s.y)
        total += loss
        for a, g in zip(acc, grads):
            a += g
    k = len(batch)
    optimizer.step(model.weights, [a / k for a in acc])
    return total / k


def dataset_loss(model, samples):
    return float(np.mean([loss_mse(forward(model, s.S, s.X), s.y) for s in samples]))


def train(samples, model, config, state=None, checkpoint_path=None, on_epoch=None):
    """Mini-batch training over whole complexes.

    Each epoch draws a fresh permutation from a generator seeded by
    ``(config.seed, epoch)``, so resuming from a checkpoint reproduces the
    uninterrupted run. The loss history holds the mean batch loss per epoch.
    """
    if not samples:
        raise ValueError("no training samples")
    if config.batch < 1:
        raise ValueError("batch size must be positive")
    if state is None:
        opt = make_optimizer(config.optimizer, config.lr, config.weight_decay)
        state = TrainState(model, opt)
    good = state.model.copy()
    while state.epoch < config.epochs:
        rng = np.random.default_rng([config.seed, state.epoch])
        perm = rng.permutation(len(samples))
        batches = [perm[i:i + config.batch] for i in range(0, len(perm), config.batch)]
        losses = []
        try:
            for b in batches:
                loss = batch_step(state.model, state.optimizer, [samples[i] for i in b])
                if not math.isfinite(loss):
                    raise NonFiniteError(f"non-finite loss at epoch {state.epoch}")
                losses.append(loss)
            for w in state.model.weights:
                if not np.all(np.isfinite(w)):
                    raise NonFiniteError(f"non-finite parameters after epoch {state.epoch}")
        except NonFiniteError:
            if checkpoint_path:
                save_checkpoint(checkpoint_path, good, None, state.epoch, state.loss_history)
            raise
        state.epoch += 1
        state.loss_history.append(float(np.mean(losses)))
        state.last_batches = [[int(i) for i in b] for b in batches]
        good = state.model.copy()
        if on_epoch is not None:
            on_epoch(state)
        if checkpoint_path and (state.epoch % config.checkpoint_every == 0 or state.epoch == config.epochs):
            save_checkpoint(checkpoint_path, state.model, state.optimizer, state.epoch,
                            state.loss_history, {"train": asdict(config)})
    return state


# -- evaluation --------------------------------------------------------------

DISTANCE_BINS = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)
STRATA = ("distance", "simplex_count", "betti1", "max_cycle_len")


def predict(model, sample, smooth=True, clamp=True):
    """Edge predictions: forward pass, optional smoothing, clamp to [0, 1]."""
    y = forward(model, sample.S, sample.X)
    if smooth:
        y = laplacian_smooth(sample.complex, y)
    if clamp:
        y = np.clip(y, 0.0, 1.0)
    return y


def _bin_label(edges, v):
    k = int(np.searchsorted(edges, v, side="right")) - 1
    k = min(max(k, 0), len(edges) - 2)
    return f"[{edges[k]:g},{edges[k + 1]:g}" + ("]" if k == len(edges) - 2 else ")")


def _int_bins(values, nbins=4):
    lo, hi = min(values), max(values)
    if lo == hi:
        return [lo, hi + 1]
    step = max(1, math.ceil((hi - lo + 1) / nbins))
    return list(range(lo, hi + step + 1, step))


def _int_label(edges, v):
    k = int(np.searchsorted(edges, v, side="right")) - 1
    k = min(max(k, 0), len(edges) - 2)
    return f"{edges[k]}-{edges[k + 1] - 1}"


def evaluate(model, samples, entries, smooth=True, predictions=None):
    """Overall and stratified MSE on held-out complexes.

    ``entries`` are manifest entries aligned with ``samples`` (simplex counts,
    betti numbers, max cycle length). Distance strata pool edges by their
    target value; the other strata pool edges of complexes in the same bin.
    Returns a dict with ``overall`` figures, ``rows`` for the CSV and
    ``per_complex`` squared-error records for box plots.
    """
    if len(samples) != len(entries):
        raise ValueError("samples and entries differ in length")
    if not samples:
        raise ValueError("nothing to evaluate")
    preds = predictions or [predict(model, s, smooth=smooth) for s in samples]
    sq = []
    for s, p in zip(samples, preds):
        if s.y is None:
            raise ValueError(f"{s.name}: missing labels")
        sq.append((p - s.y) ** 2)
    counts = [sum(e["simplex_counts"]) for e in entries]
    b1 = [int(e["betti"][1]) for e in entries]
    cyc = [int(e["max_cycle_len"]) for e in entries]
    count_edges = _int_bins(counts)
    cyc_edges = _int_bins(cyc)
    keys = {
        "simplex_count": [_int_label(count_edges, c) for c in counts],
        "betti1": [str(b) for b in b1],
        "max_cycle_len": [_int_label(cyc_edges, c) for c in cyc],
    }
    per_complex = []
    for j, (s, e) in enumerate(zip(samples, sq)):
        per_complex.append({
            "name": s.name, "mse": float(e.mean()), "n": int(e.size),
            "simplex_count": keys["simplex_count"][j], "betti1": keys["betti1"][j],
            "max_cycle_len": keys["max_cycle_len"][j],
        })
    rows = []
    all_sq = np.concatenate(sq)
    all_y = np.concatenate([s.y for s in samples])
    dist_keys = [_bin_label(DISTANCE_BINS, v) for v in all_y]
    rows += _stratum_rows("distance", dist_keys, all_sq, _bin_order(DISTANCE_BINS))
    for kind in ("simplex_count", "betti1", "max_cycle_len"):
        labels = np.concatenate([[keys[kind][j]] * sq[j].size for j in range(len(sq))])
        rows += _stratum_rows(kind, labels, all_sq, None)
    overall = {
        "mse": float(np.mean([e.mean() for e in sq])),
        "mse_pooled": float(all_sq.mean()),
        "n_complexes": len(samples),
        "n_edges": int(all_sq.size),
    }
    return {"overall": overall, "rows": rows, "per_complex": per_complex, "predictions": preds}


def _bin_order(edges):
    return [_bin_label(edges, 0.5 * (edges[k] + edges[k + 1])) for k in range(len(edges) - 1)]


def _sort_key(label):
    head = label.strip("[").split("-")[0].split(",")[0]
    try:
        return (0, float(head), label)
    except ValueError:
        return (1, 0.0, label)


def _stratum_rows(kind, labels, sq, order):
    labels = np.asarray(labels)
    names = order if order is not None else sorted(set(labels.tolist()), key=_sort_key)
    rows = []
    for name in names:
        m = labels == name
        if m.any():
            rows.append((kind, name, float(sq[m].mean()), int(m.sum())))
    return rows


def constant_baseline(samples, value=None):
    """Per-complex mean MSE of predicting a constant (default: pooled label mean)."""
    if value is None:
        value = float(np.concatenate([s.y for s in samples]).mean())
    return float(np.mean([np.mean((value - s.y) ** 2) for s in samples])), value
