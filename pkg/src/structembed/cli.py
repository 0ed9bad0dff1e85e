"""Command-line entry point.

One binary, subcommand style: encode, train-unsup, embed, link-predict,
classify, cluster, bench. JSON config via --config with flag overrides
(flags win). Data goes to files under --out; logs go to stderr; stdout
stays silent so pipelines can rely on the files alone.

Heavy imports happen inside the handlers: in deterministic mode the BLAS
thread pools are pinned through environment variables, which only works
before numpy is first imported.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time

__all__ = ["main"]

log = logging.getLogger("structembed")

_OUT_ENV = "STRUCTEMBED_OUT"


def _build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="structembed",
        description="Inductive structural node embeddings: encode local "
                    "degree structure, train embeddings, run evaluation "
                    "protocols.",
    )
    sub = top.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", default=None, help="JSON config file")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
        p.add_argument("--threads", type=int, default=None,
                       help="worker threads for parallel sections")
        p.add_argument("--out", default=None,
                       help=f"output directory (default: ${_OUT_ENV} or cwd)")
        p.add_argument("--deterministic", action="store_true", default=None,
                       help="force bit-reproducible single-writer mode")
        p.add_argument("--racy", action="store_true",
                       help="allow lock-free concurrent updates")

    p = sub.add_parser("encode", help="write sparse structural features")
    common(p)
    p.add_argument("graph", help="edge-list file")

    p = sub.add_parser("train-unsup", help="train embeddings on random walks")
    common(p)
    p.add_argument("graph")

    p = sub.add_parser("embed", help="embed any graph with a trained matrix")
    common(p)
    p.add_argument("graph")
    p.add_argument("matrix", help="embedding-matrix file")

    p = sub.add_parser("link-predict", help="edge-removal link prediction")
    common(p)
    p.add_argument("graph")

    p = sub.add_parser("classify", help="multi-label node classification")
    common(p)
    p.add_argument("--train", action="append", required=True, metavar="PREFIX",
                   help="training graph prefix (expects PREFIX.edges, "
                        "PREFIX.labels, optional PREFIX.feats); repeatable")
    p.add_argument("--val", action="append", required=True, metavar="PREFIX")
    p.add_argument("--test", action="append", required=True, metavar="PREFIX")
    grp = p.add_mutually_exclusive_group()
    grp.add_argument("--with-features", action="store_true", dest="with_features",
                     default=True, help="concatenate node attributes (default)")
    grp.add_argument("--graph-only", action="store_false", dest="with_features",
                     help="ignore attribute files")

    p = sub.add_parser("cluster", help="cluster embeddings, select k by "
                                       "modularity, correlate centralities")
    common(p)
    p.add_argument("graph")
    p.add_argument("matrix")

    p = sub.add_parser("bench", help="runtime scaling study on random graphs")
    common(p)
    return top


def _fail(code: str, message: str) -> int:
    sys.stderr.write(json.dumps({"error": code, "message": message}) + "\n")
    sys.stderr.write(f"structembed: {message}\n")
    return 1


def _prepare(args) -> dict:
    cfg_mod = _import("config")
    cfg = cfg_mod.load_config(args.config)
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.threads is not None:
        cfg["threads"] = args.threads
    if args.deterministic:
        cfg["deterministic"] = True
    if args.racy:
        cfg["deterministic"] = False
    return cfg


def _import(name: str):
    import importlib
    return importlib.import_module(f"structembed.{name}")


def _out_dir(args) -> str:
    out = args.out or os.environ.get(_OUT_ENV) or "."
    os.makedirs(out, exist_ok=True)
    return out


def _snapshot(out: str, command: str, cfg: dict, extra: dict | None = None):
    from structembed import __version__
    payload = {
        "command": command,
        "version": __version__,
        "config": cfg,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S"),
    }
    if extra:
        payload.update(extra)
    path = os.path.join(out, "resolved_config.json")
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
    return path


def _enc_cfg_from(cfg: dict, graph, encoder_mod):
    e = cfg["encoder"]
    if e["delta_max"] is None:
        return encoder_mod.fit_config(
            graph, e["alpha"], apply_log=e["apply_log"],
            apply_unit_norm=e["apply_unit_norm"],
            log_degree_bins=e["log_degree_bins"])
    return encoder_mod.EncoderConfig(
        alpha=e["alpha"], delta_max=e["delta_max"], apply_log=e["apply_log"],
        apply_unit_norm=e["apply_unit_norm"],
        log_degree_bins=e["log_degree_bins"])


def _unsup_cfg(cfg: dict):
    unsup_mod = _import("unsupervised")
    u = cfg["unsupervised"]
    mode = "deterministic" if cfg["deterministic"] else "racy"
    return unsup_mod.UnsupConfig(
        negatives=u["negatives"], window=u["window"],
        learning_rate=u["learning_rate"], epochs=u["epochs"],
        batch_size=u["batch_size"], optimizer=u["optimizer"],
        seed=cfg["seed"], parallel_mode=mode, threads=cfg["threads"],
        noise=u["noise"], dtype=u["dtype"])


def _walk_cfg(cfg: dict):
    walks_mod = _import("walks")
    w = cfg["walks"]
    return walks_mod.WalkConfig(walks_per_node=w["walks_per_node"],
                                walk_length=w["walk_length"],
                                seed=cfg["seed"])


def _load_graph(path):
    graph_mod = _import("graph")
    return graph_mod.load_edge_list(path)


def cmd_encode(args) -> int:
    cfg = _prepare(args)
    out = _out_dir(args)
    graph_mod, encoder_mod = _import("graph"), _import("encoder")
    loaded = _load_graph(args.graph)
    enc_cfg = _enc_cfg_from(cfg, loaded.graph, encoder_mod)
    t0 = time.perf_counter()
    fm = encoder_mod.encode_all(loaded.graph, enc_cfg,
                                threads=max(1, cfg["threads"]))
    feats_path = os.path.join(out, "features.txt")
    encoder_mod.write_features(fm, feats_path)
    graph_mod.save_node_labels(loaded.node_labels,
                               os.path.join(out, "node_labels.tsv"))
    _snapshot(out, "encode", cfg,
              {"graph": args.graph, "seconds": time.perf_counter() - t0,
               "num_nodes": loaded.graph.num_nodes,
               "num_edges": loaded.graph.num_edges})
    log.info("encoded %d nodes -> %s", loaded.graph.num_nodes, feats_path)
    return 0


def cmd_train_unsup(args) -> int:
    cfg = _prepare(args)
    out = _out_dir(args)
    graph_mod = _import("graph")
    encoder_mod = _import("encoder")
    embedding_mod = _import("embedding")
    unsup_mod = _import("unsupervised")
    loaded = _load_graph(args.graph)
    enc_cfg = _enc_cfg_from(cfg, loaded.graph, encoder_mod)
    W, report = unsup_mod.train_unsupervised(
        loaded.graph, enc_cfg, _walk_cfg(cfg), _unsup_cfg(cfg),
        dim=cfg["unsupervised"]["dim"])
    matrix_path = os.path.join(out, "embedding_matrix.bin")
    embedding_mod.save_matrix(W, matrix_path)
    report_path = os.path.join(out, "train_report.json")
    with open(report_path, "w", encoding="utf-8") as f:
        json.dump(report.to_dict(), f, indent=2, sort_keys=True)
    graph_mod.save_node_labels(loaded.node_labels,
                               os.path.join(out, "node_labels.tsv"))
    _snapshot(out, "train-unsup", cfg,
              {"graph": args.graph, "phase_seconds": report.phase_seconds})
    log.info("objective %.6f -> %s", report.final_objective, matrix_path)
    return 0


def cmd_embed(args) -> int:
    cfg = _prepare(args)
    out = _out_dir(args)
    encoder_mod = _import("encoder")
    embedding_mod = _import("embedding")
    unsup_mod = _import("unsupervised")
    loaded = _load_graph(args.graph)
    W = embedding_mod.load_matrix(args.matrix)
    e = cfg["encoder"]
    enc_cfg = encoder_mod.EncoderConfig(
        alpha=W.alpha, delta_max=W.delta_max, apply_log=e["apply_log"],
        apply_unit_norm=e["apply_unit_norm"],
        log_degree_bins=e["log_degree_bins"])
    t0 = time.perf_counter()
    E = unsup_mod.embed_nodes(loaded.graph, enc_cfg, W,
                              threads=max(1, cfg["threads"]))
    emb_path = os.path.join(out, "node_embeddings.txt")
    embedding_mod.write_node_embeddings(E, emb_path, loaded.node_labels)
    _snapshot(out, "embed", cfg,
              {"graph": args.graph, "matrix": args.matrix,
               "seconds": time.perf_counter() - t0})
    log.info("embedded %d nodes -> %s", loaded.graph.num_nodes, emb_path)
    return 0


def cmd_link_predict(args) -> int:
    cfg = _prepare(args)
    out = _out_dir(args)
    pipelines = _import("pipelines")
    supervised = _import("supervised")
    loaded = _load_graph(args.graph)
    lp = cfg["link_prediction"]
    hyper = supervised.EdgeHyper(
        learning_rate=lp["classifier_learning_rate"],
        iterations=lp["classifier_iterations"], l2=lp["classifier_l2"],
        seed=cfg["seed"])
    report = pipelines.link_prediction_protocol(
        loaded.graph, alpha=cfg["encoder"]["alpha"],
        dim=cfg["unsupervised"]["dim"], walk_cfg=_walk_cfg(cfg),
        unsup_cfg=_unsup_cfg(cfg), fraction=lp["fraction"],
        classifier_test_fraction=lp["classifier_test_fraction"],
        edge_hyper=hyper, seed=cfg["seed"])
    path = os.path.join(out, "link_prediction_report.json")
    with open(path, "w", encoding="utf-8") as f:
        json.dump(report, f, indent=2, sort_keys=True)
    _snapshot(out, "link-predict", cfg, {"graph": args.graph})
    log.info("test AUC %.4f -> %s", report["auc_test"], path)
    return 0


def _load_bundle(prefix: str, role: str, with_features: bool):
    import numpy as np
    supervised = _import("supervised")
    loaded = _load_graph(prefix + ".edges")
    ids = loaded.label_to_id()
    n = loaded.graph.num_nodes

    def read_table(path):
        rows = {}
        width = None
        with open(path, "r", encoding="utf-8") as f:
            for line in f:
                parts = line.split()
                if not parts:
                    continue
                if parts[0] not in ids:
                    raise ValueError(f"{path}: unknown node {parts[0]}")
                vals = [float(x) for x in parts[1:]]
                width = len(vals) if width is None else width
                if len(vals) != width:
                    raise ValueError(f"{path}: inconsistent row width")
                rows[ids[parts[0]]] = vals
        if len(rows) != n:
            raise ValueError(f"{path}: covers {len(rows)} of {n} nodes")
        out = np.zeros((n, width))
        for i, vals in rows.items():
            out[i] = vals
        return out

    labels = read_table(prefix + ".labels")
    attrs = None
    if with_features and os.path.exists(prefix + ".feats"):
        attrs = read_table(prefix + ".feats")
    return supervised.GraphBundle(loaded.graph, labels, attrs, role)


def cmd_classify(args) -> int:
    cfg = _prepare(args)
    out = _out_dir(args)
    pipelines = _import("pipelines")
    supervised = _import("supervised")
    bundles = []
    for role, prefixes in (("train", args.train), ("val", args.val),
                           ("test", args.test)):
        for prefix in prefixes:
            bundles.append(_load_bundle(prefix, role, args.with_features))
    dataset = supervised.LabeledNodeDataset(bundles)
    s = cfg["supervised"]
    head_cfg = supervised.HeadConfig(
        hidden=tuple(s["hidden"]), activation=s["activation"],
        learning_rate=s["learning_rate"], epochs=s["epochs"],
        patience=s["patience"], threshold=s["threshold"], seed=cfg["seed"])
    report = pipelines.classification_protocol(
        dataset, alpha=cfg["encoder"]["alpha"], dim=cfg["unsupervised"]["dim"],
        head_cfg=head_cfg, seed=cfg["seed"])
    path = os.path.join(out, "classification_report.json")
    with open(path, "w", encoding="utf-8") as f:
        json.dump(report, f, indent=2, sort_keys=True)
    _snapshot(out, "classify", cfg,
              {"train": args.train, "val": args.val, "test": args.test,
               "with_features": args.with_features})
    log.info("test micro-F1 %.4f -> %s", report["test_micro_f1"], path)
    return 0


def cmd_cluster(args) -> int:
    cfg = _prepare(args)
    out = _out_dir(args)
    encoder_mod = _import("encoder")
    embedding_mod = _import("embedding")
    unsup_mod = _import("unsupervised")
    pipelines = _import("pipelines")
    loaded = _load_graph(args.graph)
    W = embedding_mod.load_matrix(args.matrix)
    e = cfg["encoder"]
    enc_cfg = encoder_mod.EncoderConfig(
        alpha=W.alpha, delta_max=W.delta_max, apply_log=e["apply_log"],
        apply_unit_norm=e["apply_unit_norm"],
        log_degree_bins=e["log_degree_bins"])
    E = unsup_mod.embed_nodes(loaded.graph, enc_cfg, W,
                              threads=max(1, cfg["threads"]))
    k_range = range(cfg["cluster"]["k_min"], cfg["cluster"]["k_max"] + 1)
    report = pipelines.cluster_analysis(loaded.graph, E, k_range, cfg["seed"])
    path = os.path.join(out, "cluster_report.json")
    with open(path, "w", encoding="utf-8") as f:
        json.dump(report, f, indent=2, sort_keys=True)
    _snapshot(out, "cluster", cfg, {"graph": args.graph, "matrix": args.matrix})
    log.info("best k = %d -> %s", report["best_k"], path)
    return 0


def cmd_bench(args) -> int:
    cfg = _prepare(args)
    out = _out_dir(args)
    bench_mod = _import("benchmark")
    unsup_mod = _import("unsupervised")
    walks_mod = _import("walks")
    b = cfg["bench"]
    u = cfg["unsupervised"]
    mode = "deterministic" if cfg["deterministic"] else "racy"
    base = unsup_mod.UnsupConfig(
        negatives=u["negatives"], window=u["window"],
        learning_rate=u["learning_rate"], epochs=u["epochs"],
        batch_size=u["batch_size"], optimizer=u["optimizer"],
        seed=cfg["seed"], parallel_mode=mode, threads=cfg["threads"],
        dtype=u["dtype"])
    walk_cfg = walks_mod.WalkConfig(
        walks_per_node=cfg["walks"]["walks_per_node"],
        walk_length=cfg["walks"]["walk_length"], seed=cfg["seed"])

    def progress(run):
        log.info("bench |V|=%d deg=%.0f alpha=%d rep %d: %.2fs",
                 run.num_nodes, run.avg_degree, run.alpha, run.replicate,
                 run.total_seconds)

    study = bench_mod.scaling_benchmark(
        b["sizes"], b["degrees"], b["alphas"], b["replicates"],
        base_cfg=base, walk_cfg=walk_cfg, dim=u["dim"], seed=cfg["seed"],
        fixed_degree=b["fixed_degree"], fixed_size=b["fixed_size"],
        progress=progress)
    bench_mod.write_tsv(study, os.path.join(out, "scaling.tsv"))
    with open(os.path.join(out, "scaling.json"), "w", encoding="utf-8") as f:
        json.dump(study.to_dict(), f, indent=2, sort_keys=True)
    _snapshot(out, "bench", cfg)
    log.info("size slopes: %s", study.size_slopes)
    return 0


_HANDLERS = {
    "encode": cmd_encode,
    "train-unsup": cmd_train_unsup,
    "embed": cmd_embed,
    "link-predict": cmd_link_predict,
    "classify": cmd_classify,
    "cluster": cmd_cluster,
    "bench": cmd_bench,
}


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    args = _build_parser().parse_args(argv)
    deterministic = bool(args.deterministic) or not args.racy
    if deterministic and "numpy" not in sys.modules:
        # Pin BLAS pools before numpy loads so reductions are reproducible
        # regardless of machine thread count.
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                    "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS"):
            os.environ.setdefault(var, "1")
    try:
        return _HANDLERS[args.command](args)
    except FileNotFoundError as e:
        return _fail("file-not-found", str(e))
    except Exception as e:  # library errors carry user-facing messages
        mod = type(e).__module__
        if mod.startswith("structembed") or isinstance(e, ValueError):
            return _fail(type(e).__name__, str(e))
        raise


if __name__ == "__main__":
    sys.exit(main())
