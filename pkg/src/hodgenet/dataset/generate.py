"""Dataset generation: clouds -> alpha filtrations -> snapshots -> labels + features."""
from __future__ import annotations

import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from ..complex import betti_numbers, read_complex, write_complex
from ..features import assemble_features, read_features, write_features
from ..oracle import hop_distance_target, optimal_h1_basis, read_labels, write_generators, write_labels
from ..spectral import hodge_laplacian, shift_invert
from .filtration import alpha_filtration, persistence_barcode, snapshot_complexes
from .tori import MAX_HOLES, sample_tori_2d

log = logging.getLogger(__name__)

MANIFEST = "manifest.json"


@dataclass
class DatasetConfig:
    count: int = 100
    seed: int = 0
    holes_min: int = 1
    holes_max: int = 5
    points_per_hole: int = 200
    noise: float = 0.02  # fraction of the mean outer radius
    pinched_fraction: float = 0.0
    top_k: int = 5
    train_fraction: float = 0.8
    k_embed: int = 5
    workers: int = 1

    def validate(self):
        if self.count < 1:
            raise ValueError("count must be positive")
        if not 1 <= self.holes_min <= self.holes_max <= MAX_HOLES:
            raise ValueError(f"holes range must satisfy 1 <= min <= max <= {MAX_HOLES}")
        if self.points_per_hole < 20:
            raise ValueError("points_per_hole must be at least 20")
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must lie in (0, 1)")
        if self.noise < 0:
            raise ValueError("noise must be nonnegative")


def _cloud_snapshots(cfg, cloud_seed):
    rng = np.random.default_rng(cloud_seed)
    holes = int(rng.integers(cfg.holes_min, cfg.holes_max + 1))
    pinched = bool(rng.uniform() < cfg.pinched_fraction)
    # mean outer radius is 1.25
    pts = sample_tori_2d(holes, cfg.points_per_hole * holes, cfg.noise * 1.25, int(rng.integers(2**31)), pinched=pinched)
    f = alpha_filtration(pts)
    bars = persistence_barcode(f, max_dim=1)
    snaps = [K for K in snapshot_complexes(f, bars, top_k=cfg.top_k) if K.count(1) > 0]
    return holes, snaps


def label_and_featurize(K, k_embed=5):
    """Oracle basis, hop labels and features for one complex."""
    basis = optimal_h1_basis(K)
    target = hop_distance_target(K, basis)
    S = shift_invert(hodge_laplacian(K, 1))
    F = assemble_features(K, 1, k_embed, shift_inverted=S)
    return basis, target, F


def _process(args):
    idx, K, k_embed, root = args
    basis, target, F = label_and_featurize(K, k_embed)
    name = f"c{idx:05d}"
    paths = {
        "complex": f"complexes/{name}.cplx",
        "labels": f"labels/{name}.csv",
        "features": f"features/{name}.csv",
        "generators": f"generators/{name}.txt",
    }
    write_complex(K, os.path.join(root, paths["complex"]))
    write_labels(target, os.path.join(root, paths["labels"]))
    write_features(F, os.path.join(root, paths["features"]))
    write_generators(basis, os.path.join(root, paths["generators"]))
    entry = {
        "id": name,
        "simplex_counts": K.counts(),
        "n_edges": K.count(1),
        "betti": betti_numbers(K, 1),
        "max_cycle_len": int(max((len(g) for g in basis.generators), default=0)),
        "max_hops": int(target.normalizer),
    }
    return entry, paths, target.values


def generate_dataset(cfg, out_dir):
    """Write a dataset under ``out_dir`` and return the manifest dict."""
    cfg.validate()
    os.makedirs(out_dir, exist_ok=True)
    ss = np.random.SeedSequence(cfg.seed)
    complexes, origin = [], []
    cloud = 0
    while len(complexes) < cfg.count:
        cloud_seed = ss.spawn(1)[0]
        holes, snaps = _cloud_snapshots(cfg, cloud_seed)
        for K in snaps:
            if len(complexes) < cfg.count:
                complexes.append(K)
                origin.append((cloud, holes))
        cloud += 1
        if cloud > 50 * cfg.count:
            raise RuntimeError("too many point clouds without usable snapshots")
    jobs = [(i, K, cfg.k_embed, out_dir) for i, K in enumerate(complexes)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as ex:
            results = list(ex.map(_process, jobs))
    else:
        results = [_process(j) for j in jobs]
    entries, files, all_labels = [], {"complex": [], "labels": [], "features": [], "generators": []}, []
    for (entry, paths, labels), (cl, holes) in zip(results, origin):
        entry["cloud"] = cl
        entry["holes"] = holes
        entries.append(entry)
        for k in files:
            files[k].append(paths[k])
        all_labels.append(labels)
    perm = np.random.default_rng(cfg.seed).permutation(cfg.count)
    n_train = int(round(cfg.train_fraction * cfg.count))
    split = {
        "train": sorted(int(i) for i in perm[:n_train]),
        "test": sorted(int(i) for i in perm[n_train:]),
    }
    betti1 = [e["betti"][1] for e in entries]
    counts = [sum(e["simplex_counts"]) for e in entries]
    labels = np.concatenate(all_labels) if all_labels else np.zeros(0)
    hist, edges = np.histogram(labels, bins=10, range=(0.0, 1.0))
    manifest = {
        "seed": cfg.seed,
        "count": cfg.count,
        "config": asdict(cfg),
        "split": split,
        "files": files,
        "entries": entries,
        "stats": {
            "betti_hist": {str(b): betti1.count(b) for b in sorted(set(betti1))},
            "simplex_counts": {"min": min(counts), "max": max(counts), "mean": float(np.mean(counts))},
            "edge_counts": {"min": min(e["n_edges"] for e in entries), "max": max(e["n_edges"] for e in entries)},
            "max_cycle_len": max(e["max_cycle_len"] for e in entries),
            "label_hist": {"edges": [float(x) for x in edges], "counts": [int(c) for c in hist]},
            "clouds": cloud,
        },
    }
    with open(os.path.join(out_dir, MANIFEST), "w") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return manifest


def load_manifest(path):
    """Read a manifest; ``path`` may be the JSON file or its directory."""
    if os.path.isdir(path):
        path = os.path.join(path, MANIFEST)
    with open(path) as fh:
        manifest = json.load(fh)
    manifest["_root"] = os.path.dirname(os.path.abspath(path))
    for key in ("split", "files", "count"):
        if key not in manifest:
            raise ValueError(f"manifest {path} lacks {key!r}")
    return manifest


def load_item(manifest, i):
    """(complex, features, target) for entry ``i`` of a manifest."""
    root = manifest["_root"]
    files = manifest["files"]
    K = read_complex(os.path.join(root, files["complex"][i]))
    F = read_features(os.path.join(root, files["features"][i]))
    T = read_labels(os.path.join(root, files["labels"][i]))
    return K, F, T
