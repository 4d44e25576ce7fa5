"""Command-line interface: gen, train, eval, infer, diffuse, oracle, featurize.

Every run writes into ``<out>/<command>-<hash>`` where the hash covers the
fully resolved configuration, and saves that configuration as
``config.json`` next to its outputs. Values come from built-in defaults,
then a ``--config`` JSON file, then explicit flags.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import sys

import numpy as np

log = logging.getLogger("hodgenet")

EXIT_OK, EXIT_NUMERIC, EXIT_USAGE = 0, 1, 2

# options whose values never influence outputs
_UNHASHED = {"config", "out", "force", "verbose", "threads"}

DEFAULTS = {
    "gen": dict(count=100, holes_min=1, holes_max=5, points_per_hole=200, noise=0.02,
                pinched_fraction=0.0, top_k=5, train_fraction=0.8, k_embed=5, workers=1),
    "train": dict(manifest=None, layers=12, hidden=128, epochs=1000, batch=5, optimizer="adam",
                  lr=None, weight_decay=0.0, leaky_slope=0.02, mask_mode="full",
                  normalize_graph=False, feature_scaling="raw", checkpoint_every=50, resume=None),
    "eval": dict(checkpoint=None, manifest=None, split="test", smooth=True),
    "infer": dict(checkpoint=None, complex=None, labels=None, smooth=True),
    "diffuse": dict(complex=None, operator="shiftinv", rank=None, steps=12, dim=1),
    "oracle": dict(complex=None, metric="auto", adjacency="lower", normalize="global"),
    "featurize": dict(complex=None, dim=1, k_embed=5, zscore=False, mask_mode="full", normalize_graph=False),
}
GLOBAL_DEFAULTS = dict(seed=None, threads=1, out=None, force=False, verbose=False)


class UsageError(Exception):
    pass


def _add_globals(p):
    S = argparse.SUPPRESS
    p.add_argument("--config", default=S, help="JSON file with option values")
    p.add_argument("--seed", type=int, default=S)
    p.add_argument("--threads", type=int, default=S, help="BLAS threads (1 = reproducible)")
    p.add_argument("--out", default=S, help="output root (default $HODGENET_OUT or ./runs)")
    p.add_argument("--force", action="store_true", default=S, help="overwrite an existing run")
    p.add_argument("-v", "--verbose", action="store_true", default=S)


def build_parser():
    S = argparse.SUPPRESS
    parser = argparse.ArgumentParser(prog="hodgenet", description=__doc__.splitlines()[0])
    _add_globals(parser)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a dataset of 2D complexes")
    _add_globals(p)
    p.add_argument("--count", type=int, default=S)
    p.add_argument("--holes-min", type=int, default=S)
    p.add_argument("--holes-max", type=int, default=S)
    p.add_argument("--points-per-hole", type=int, default=S)
    p.add_argument("--noise", type=float, default=S, help="noise std as a fraction of the mean outer radius")
    p.add_argument("--pinched-fraction", type=float, default=S)
    p.add_argument("--top-k", type=int, default=S)
    p.add_argument("--train-fraction", type=float, default=S)
    p.add_argument("--k-embed", type=int, default=S)
    p.add_argument("--workers", type=int, default=S)

    p = sub.add_parser("train", help="train a model on a dataset")
    _add_globals(p)
    p.add_argument("--manifest", default=S)
    p.add_argument("--layers", type=int, default=S)
    p.add_argument("--hidden", type=int, default=S)
    p.add_argument("--epochs", type=int, default=S)
    p.add_argument("--batch", type=int, default=S)
    p.add_argument("--optimizer", choices=["adam", "sgd"], default=S)
    p.add_argument("--lr", type=float, default=S)
    p.add_argument("--weight-decay", type=float, default=S)
    p.add_argument("--leaky-slope", type=float, default=S)
    p.add_argument("--mask-mode", choices=["full", "down"], default=S)
    p.add_argument("--normalize-graph", action="store_true", default=S)
    p.add_argument("--feature-scaling", choices=["raw", "unit_embed", "zscore"], default=S)
    p.add_argument("--checkpoint-every", type=int, default=S)
    p.add_argument("--resume", default=S, help="checkpoint to continue from")

    p = sub.add_parser("eval", help="stratified held-out evaluation")
    _add_globals(p)
    p.add_argument("--checkpoint", default=S)
    p.add_argument("--manifest", default=S)
    p.add_argument("--split", choices=["train", "test"], default=S)
    p.add_argument("--no-smooth", dest="smooth", action="store_false", default=S)

    p = sub.add_parser("infer", help="predict distances on one complex file")
    _add_globals(p)
    p.add_argument("--checkpoint", default=S)
    p.add_argument("--complex", default=S)
    p.add_argument("--labels", default=S, help="optional ground-truth labels CSV")
    p.add_argument("--no-smooth", dest="smooth", action="store_false", default=S)

    p = sub.add_parser("diffuse", help="iterate x <- x + M x from the all-ones signal")
    _add_globals(p)
    p.add_argument("--complex", default=S)
    p.add_argument("--operator", choices=["hodge", "shiftinv"], default=S)
    p.add_argument("--rank", type=int, default=S)
    p.add_argument("--steps", type=int, default=S)
    p.add_argument("--dim", type=int, default=S)

    p = sub.add_parser("oracle", help="optimal H1 generators and hop labels")
    _add_globals(p)
    p.add_argument("--complex", default=S)
    p.add_argument("--metric", choices=["auto", "unit", "euclidean"], default=S)
    p.add_argument("--adjacency", choices=["lower", "full"], default=S)
    p.add_argument("--normalize", choices=["global", "component"], default=S)

    p = sub.add_parser("featurize", help="features and the Hodge Laplacian graph of one complex")
    _add_globals(p)
    p.add_argument("--complex", default=S)
    p.add_argument("--dim", type=int, default=S)
    p.add_argument("--k-embed", type=int, default=S)
    p.add_argument("--zscore", action="store_true", default=S)
    p.add_argument("--mask-mode", choices=["full", "down", "up"], default=S)
    p.add_argument("--normalize-graph", action="store_true", default=S)
    return parser


def resolve_config(ns):
    """Merge defaults, the optional JSON config file and explicit flags."""
    flags = vars(ns).copy()
    cmd = flags.pop("command")
    cfg = dict(GLOBAL_DEFAULTS)
    cfg.update(DEFAULTS[cmd])
    path = flags.pop("config", None)
    if path:
        try:
            with open(path) as fh:
                filed = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(filed, dict):
            raise UsageError("config file must hold a JSON object")
        filed = {k.replace("-", "_"): v for k, v in filed.items() if k != "command"}
        unknown = set(filed) - set(cfg)
        if unknown:
            raise UsageError(f"unknown config keys for {cmd}: {', '.join(sorted(unknown))}")
        cfg.update(filed)
    cfg.update(flags)
    cfg["command"] = cmd
    return cfg


def config_hash(cfg):
    key = {k: v for k, v in cfg.items() if k not in _UNHASHED}
    blob = json.dumps(key, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


def run_dir(cfg):
    root = cfg.get("out") or os.environ.get("HODGENET_OUT") or "runs"
    path = os.path.join(root, f"{cfg['command']}-{config_hash(cfg)}")
    if os.path.exists(os.path.join(path, "config.json")) and not cfg.get("force"):
        raise UsageError(f"run directory {path} already exists; pass --force to overwrite")
    os.makedirs(path, exist_ok=True)
    with open(os.path.join(path, "config.json"), "w") as fh:
        json.dump({k: v for k, v in cfg.items() if k not in ("force", "verbose")}, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return path


def _require(cfg, *keys):
    for k in keys:
        if cfg.get(k) in (None, ""):
            raise UsageError(f"{cfg['command']}: --{k.replace('_', '-')} is required")


def _need_file(path, what):
    if not os.path.exists(path):
        raise UsageError(f"{what} not found: {path}")


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(x) if isinstance(x, float) else x for x in r])


# -- subcommands -------------------------------------------------------------

def cmd_gen(cfg):
    from .dataset.generate import DatasetConfig, generate_dataset

    if cfg.get("seed") is None:
        raise UsageError("gen: an explicit --seed is required for reproducibility")
    dc = DatasetConfig(**{k: cfg[k] for k in DEFAULTS["gen"]}, seed=cfg["seed"])
    try:
        dc.validate()
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    out = run_dir(cfg)
    manifest = generate_dataset(dc, out)
    log.info("wrote %d complexes (%d train / %d test)", manifest["count"],
             len(manifest["split"]["train"]), len(manifest["split"]["test"]))
    return out


def _train_config(cfg):
    from .model import TrainConfig

    return TrainConfig(epochs=cfg["epochs"], batch=cfg["batch"], optimizer=cfg["optimizer"], lr=cfg["lr"],
                       weight_decay=cfg["weight_decay"], seed=cfg["seed"] or 0,
                       checkpoint_every=cfg["checkpoint_every"], mask_mode=cfg["mask_mode"],
                       normalize_graph=cfg["normalize_graph"], feature_scaling=cfg["feature_scaling"])


def cmd_train(cfg):
    from .dataset.generate import load_manifest
    from .model import Dist2CycleModel, ModelConfig, TrainState, load_checkpoint, load_samples, train

    _require(cfg, "manifest")
    _need_file(cfg["manifest"], "manifest")
    tc = _train_config(cfg)
    manifest = load_manifest(cfg["manifest"])
    samples = load_samples(manifest, manifest["split"]["train"], tc.mask_mode, tc.normalize_graph,
                           tc.feature_scaling)
    state = None
    if cfg.get("resume"):
        _need_file(cfg["resume"], "checkpoint")
        model, opt, header = load_checkpoint(cfg["resume"])
        if opt is None:
            raise UsageError("checkpoint carries no optimizer state; cannot resume")
        state = TrainState(model, opt, header["epoch"], list(header["loss_history"]))
        log.info("resuming at epoch %d", state.epoch)
    else:
        mc = ModelConfig(in_features=samples[0].X.shape[1], num_layers=cfg["layers"], hidden=cfg["hidden"],
                         leaky_slope=cfg["leaky_slope"])
        model = Dist2CycleModel(mc, seed=tc.seed)
    out = run_dir(cfg)
    ckpt = os.path.join(out, "checkpoint.bin")

    def report(s):
        if s.epoch % 10 == 0 or s.epoch == tc.epochs:
            log.info("epoch %d loss %.6f", s.epoch, s.loss_history[-1])

    state = train(samples, model if state is None else state.model, tc, state=state,
                  checkpoint_path=ckpt, on_epoch=report)
    _write_csv(os.path.join(out, "loss.csv"), ["epoch", "loss"],
               [(i + 1, float(v)) for i, v in enumerate(state.loss_history)])
    return out


def _checkpoint_settings(header):
    t = header.get("extra", {}).get("train", {})
    return t.get("mask_mode", "full"), t.get("normalize_graph", False), t.get("feature_scaling", "raw")


def cmd_eval(cfg):
    from . import svg
    from .dataset.generate import load_manifest
    from .model import STRATA, constant_baseline, evaluate, load_checkpoint, load_samples

    _require(cfg, "checkpoint", "manifest")
    _need_file(cfg["checkpoint"], "checkpoint")
    _need_file(cfg["manifest"], "manifest")
    model, _, header = load_checkpoint(cfg["checkpoint"])
    mask_mode, norm, scaling = _checkpoint_settings(header)
    manifest = load_manifest(cfg["manifest"])
    idx = manifest["split"][cfg["split"]]
    samples = load_samples(manifest, idx, mask_mode, norm, scaling)
    entries = [manifest["entries"][i] for i in idx]
    res = evaluate(model, samples, entries, smooth=cfg["smooth"])
    base, value = constant_baseline(samples)
    out = run_dir(cfg)
    head = ["stratum_kind", "stratum", "mse", "count"]
    ov = res["overall"]
    overall_rows = [("overall", "per_complex", ov["mse"], ov["n_complexes"]),
                    ("overall", "pooled", ov["mse_pooled"], ov["n_edges"]),
                    ("baseline", f"constant_{value!r}", base, ov["n_complexes"])]
    _write_csv(os.path.join(out, "metrics.csv"), head, overall_rows + res["rows"])
    for kind in STRATA:
        _write_csv(os.path.join(out, f"metrics_{kind}.csv"), head, [r for r in res["rows"] if r[0] == kind])
    pc = res["per_complex"]
    _write_csv(os.path.join(out, "per_complex.csv"), ["name", "mse", "edges", "simplex_count", "betti1", "max_cycle_len"],
               [(r["name"], r["mse"], r["n"], r["simplex_count"], r["betti1"], r["max_cycle_len"]) for r in pc])
    # box plots: per-edge squared error for distance bins, per-complex MSE otherwise
    from .model import DISTANCE_BINS, _bin_label, _bin_order, _sort_key

    sq = np.concatenate([(p - s.y) ** 2 for p, s in zip(res["predictions"], samples)])
    ys = np.concatenate([s.y for s in samples])
    lab = np.array([_bin_label(DISTANCE_BINS, v) for v in ys])
    groups = {k: sq[lab == k] for k in _bin_order(DISTANCE_BINS) if np.any(lab == k)}
    svg.box_plot(groups, os.path.join(out, "box_distance.svg"), "squared error by target distance")
    for kind in STRATA[1:]:
        keys = sorted({r[kind] for r in pc}, key=_sort_key)
        groups = {k: [r["mse"] for r in pc if r[kind] == k] for k in keys}
        svg.box_plot(groups, os.path.join(out, f"box_{kind}.svg"), f"MSE by {kind}")
    log.info("MSE %.4f (constant baseline %.4f)", ov["mse"], base)
    return out


def cmd_infer(cfg):
    from . import svg
    from .complex import read_complex
    from .features import assemble_features
    from .model import load_checkpoint, predict, prepare_sample
    from .oracle import read_labels

    _require(cfg, "checkpoint", "complex")
    _need_file(cfg["checkpoint"], "checkpoint")
    _need_file(cfg["complex"], "complex file")
    model, _, header = load_checkpoint(cfg["checkpoint"])
    mask_mode, norm, scaling = _checkpoint_settings(header)
    K = read_complex(cfg["complex"])
    k_embed = model.config.in_features - 3
    F = assemble_features(K, 1, k_embed)
    T = None
    if cfg.get("labels"):
        _need_file(cfg["labels"], "labels")
        T = read_labels(cfg["labels"])
    s = prepare_sample(K, F, T, cfg["complex"], mask_mode, norm, scaling)
    from .model import forward

    raw = forward(model, s.S, s.X)
    pred = predict(model, s, smooth=cfg["smooth"])
    out = run_dir(cfg)
    edges = K.simplices(1)
    _write_csv(os.path.join(out, "predictions.csv"), ["edge_index", "u", "v", "raw", "prediction"],
               [(i, e[0], e[1], float(r), float(p)) for i, (e, r, p) in enumerate(zip(edges, raw, pred))])
    if K.coords is not None:
        svg.render_complex(K, pred, os.path.join(out, "predictions.svg"), "predicted distance")
    else:
        log.warning("complex has no coordinates; SVG skipped")
    if s.y is not None:
        order = np.argsort(s.y, kind="stable")
        _write_csv(os.path.join(out, "sorted.csv"), ["rank", "edge_index", "truth", "prediction"],
                   [(r, int(i), float(s.y[i]), float(pred[i])) for r, i in enumerate(order)])
        svg.sorted_curve(s.y, pred, os.path.join(out, "sorted.svg"), "sorted by ground truth")
    return out


def cmd_diffuse(cfg):
    from . import svg
    from .complex import read_complex
    from .spectral import diffuse, hodge_laplacian, low_rank, shift_invert

    _require(cfg, "complex")
    _need_file(cfg["complex"], "complex file")
    if cfg["steps"] < 0:
        raise UsageError("--steps must be nonnegative")
    K = read_complex(cfg["complex"])
    d = cfg["dim"]
    L = hodge_laplacian(K, d)
    op = shift_invert(L) if cfg["operator"] == "shiftinv" else L
    if cfg.get("rank"):
        M = low_rank(op, cfg["rank"])
    else:
        M = op.matrix if cfg["operator"] == "shiftinv" else L.dense()
    x = diffuse(M, np.ones(K.count(d)), cfg["steps"])
    out = run_dir(cfg)
    _write_csv(os.path.join(out, "diffusion.csv"), ["dim", "index", "value"],
               [(d, i, float(v)) for i, v in enumerate(x)])
    if d == 1 and K.coords is not None:
        mag = np.abs(x)
        top = mag.max() if mag.max() > 0 else 1.0
        svg.render_complex(K, mag / top, os.path.join(out, "diffusion.svg"),
                           f"|x| after {cfg['steps']} steps ({cfg['operator']})")
    return out


def cmd_oracle(cfg):
    from .complex import read_complex
    from .oracle import hop_distance_target, optimal_h1_basis, write_generators, write_labels

    _require(cfg, "complex")
    _need_file(cfg["complex"], "complex file")
    K = read_complex(cfg["complex"])
    basis = optimal_h1_basis(K, cfg["metric"])
    target = hop_distance_target(K, basis, cfg["adjacency"], cfg["normalize"])
    out = run_dir(cfg)
    write_generators(basis, os.path.join(out, "generators.txt"))
    write_labels(target, os.path.join(out, "labels.csv"))
    log.info("%d generators, max hops %d", basis.rank, target.normalizer)
    return out


def cmd_featurize(cfg):
    from .complex import read_complex
    from .features import assemble_features, write_features
    from .hlgraph import build_hlgraph, export_graph

    _require(cfg, "complex")
    _need_file(cfg["complex"], "complex file")
    K = read_complex(cfg["complex"])
    G = build_hlgraph(K, cfg["dim"], cfg["mask_mode"], cfg["normalize_graph"])
    F = assemble_features(K, cfg["dim"], cfg["k_embed"], shift_inverted=G.shift_inverted, zscore=cfg["zscore"])
    out = run_dir(cfg)
    write_features(F, os.path.join(out, "features.csv"))
    export_graph(G, os.path.join(out, "graph.csv"), os.path.join(out, "graph.json"))
    return out


COMMANDS = {"gen": cmd_gen, "train": cmd_train, "eval": cmd_eval, "infer": cmd_infer,
            "diffuse": cmd_diffuse, "oracle": cmd_oracle, "featurize": cmd_featurize}


def main(argv=None):
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = resolve_config(ns)
    except UsageError as exc:
        print(f"hodgenet: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if cfg.get("verbose") else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    from threadpoolctl import threadpool_limits

    try:
        with threadpool_limits(limits=max(1, int(cfg["threads"]))):
            out = COMMANDS[cfg["command"]](cfg)
    except UsageError as exc:
        print(f"hodgenet: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ArithmeticError, RuntimeError) as exc:
        print(f"hodgenet: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, KeyError, OSError) as exc:
        print(f"hodgenet: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
