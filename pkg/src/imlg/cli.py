"""Command-line pipeline: gen, build-graph, train, infer, eval.

Every subcommand prints its effective configuration (defaults, then
config file, then flags, flags winning) so a run can be reproduced from
its log. All randomness is controlled by the single `seed` key.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .design import parse_design, parse_labels, write_design, write_labels
from .features import EncoderConfig
from .graphs import BuildConfig, build_graph, read_graph, write_graph
from .metrics import render_report, report, roc_lines
from .model import HyperParams
from .synth import GenConfig, generate_labeled
from .train import (
    TrainConfig,
    infer,
    load_checkpoint,
    read_predictions,
    save_checkpoint,
    train,
    write_predictions,
)

DEFAULTS: dict[str, object] = {
    "lr": 0.001,
    "weight_decay": 0.0005,
    "epochs": 1000,
    "hidden_dim": 64,
    "lambda": 1.0,
    "eta": 10.0,
    "smote_k": 5,
    "threshold": 0.5,
    "region_depth": 4,
    "L": 5.0,
    "edge_cap": 16,
    "cluster_size": 10000,
    "clusters_per_batch": 1,
    "seed": 0,
    "baseline_mode": False,
}

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _coerce(key: str, raw: str):
    default = DEFAULTS[key]
    if isinstance(default, bool):
        low = raw.lower()
        if low in _TRUE:
            return True
        if low in _FALSE:
            return False
        raise ValueError(f"config key '{key}' expects a boolean, got '{raw}'")
    try:
        return type(default)(raw)
    except ValueError:
        raise ValueError(
            f"config key '{key}' expects {type(default).__name__}, got '{raw}'"
        ) from None


def load_config(path: str | None) -> dict:
    cfg = dict(DEFAULTS)
    if path is None:
        return cfg
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in DEFAULTS:
            raise ValueError(f"{path}:{lineno}: unknown config key '{key}'")
        cfg[key] = _coerce(key, value)
    return cfg


def _effective_config(ns: argparse.Namespace) -> dict:
    cfg = load_config(ns.config)
    overrides = {
        "lr": ns.lr if hasattr(ns, "lr") else None,
        "weight_decay": getattr(ns, "weight_decay", None),
        "epochs": getattr(ns, "epochs", None),
        "hidden_dim": getattr(ns, "hidden_dim", None),
        "lambda": getattr(ns, "lam", None),
        "eta": getattr(ns, "eta", None),
        "smote_k": getattr(ns, "smote_k", None),
        "threshold": getattr(ns, "threshold", None),
        "region_depth": getattr(ns, "region_depth", None),
        "L": getattr(ns, "L", None),
        "edge_cap": getattr(ns, "edge_cap", None),
        "cluster_size": getattr(ns, "cluster_size", None),
        "clusters_per_batch": getattr(ns, "clusters_per_batch", None),
        "seed": getattr(ns, "seed", None),
        "baseline_mode": getattr(ns, "baseline_mode", None),
    }
    for key, value in overrides.items():
        if value is not None:
            cfg[key] = value
    return cfg


def _print_config(cfg: dict):
    for key in sorted(cfg):
        print(f"config {key} = {cfg[key]}")


def _hyper(cfg: dict) -> HyperParams:
    return HyperParams(
        hidden_dim=cfg["hidden_dim"],
        lam=cfg["lambda"],
        eta=cfg["eta"],
        smote_k=cfg["smote_k"],
        edge_threshold=cfg["threshold"],
    )


def cmd_gen(ns) -> int:
    cfg = _effective_config(ns)
    _print_config(cfg)
    gen_cfg = GenConfig(
        n_instances=ns.instances,
        lut_ff_mix=ns.lut_mix,
        layout_w=ns.layout[0] if ns.layout else None,
        layout_h=ns.layout[1] if ns.layout else None,
        hotspot_count=ns.hotspots,
        target_minority=ns.target_minority,
        seed=cfg["seed"],
    )
    design, labels = generate_labeled(gen_cfg)
    design_path = Path(f"{ns.out}.design")
    labels_path = Path(f"{ns.out}.labels")
    design_path.write_text(write_design(design), encoding="utf-8")
    labels_path.write_text(write_labels(labels), encoding="utf-8")
    print(f"wrote {design_path} ({len(design.instances)} instances, {len(design.nets)} nets)")
    print(f"wrote {labels_path} (minority fraction {labels.minority_fraction:.4f})")
    return 0


def cmd_build_graph(ns) -> int:
    cfg = _effective_config(ns)
    _print_config(cfg)
    design = parse_design(Path(ns.design).read_text(encoding="utf-8"))
    labels = None
    if ns.labels:
        labels = parse_labels(Path(ns.labels).read_text(encoding="utf-8"), design)
    graph = build_graph(
        design,
        labels,
        cfg=BuildConfig(L=cfg["L"], edge_cap=cfg["edge_cap"]),
        encoder_cfg=EncoderConfig(region_depth=cfg["region_depth"]),
    )
    Path(ns.out).write_text(write_graph(graph), encoding="utf-8")
    print(
        f"wrote {ns.out} ({graph.n} nodes, {graph.n_edges} edges, "
        f"{len(graph.isolated)} isolated)"
    )
    return 0


def cmd_train(ns) -> int:
    cfg = _effective_config(ns)
    _print_config(cfg)
    graph = read_graph(Path(ns.graph).read_text(encoding="utf-8"))
    if graph.labels is None:
        raise ValueError(f"{ns.graph}: graph file has no LABEL lines; train needs labels")
    hp = _hyper(cfg)
    train_cfg = TrainConfig(
        epochs=cfg["epochs"],
        lr=cfg["lr"],
        weight_decay=cfg["weight_decay"],
        cluster_size=cfg["cluster_size"],
        clusters_per_batch=cfg["clusters_per_batch"],
        seed=cfg["seed"],
        baseline_mode=cfg["baseline_mode"],
    )
    params, log = train(graph, hp=hp, cfg=train_cfg)
    Path(ns.out).write_text(save_checkpoint(params, hp), encoding="utf-8")
    log_path = ns.log if ns.log else f"{ns.out}.log"
    Path(log_path).write_text(log.to_csv(), encoding="utf-8")
    last = log.rows[-1]
    print(f"wrote {ns.out} and {log_path}")
    print(f"final objective {last[4]:.6f} (l_clf {last[2]:.6f}, l_rec {last[3]:.6f})")
    return 0


def cmd_infer(ns) -> int:
    cfg = _effective_config(ns)
    _print_config(cfg)
    graph = read_graph(Path(ns.graph).read_text(encoding="utf-8"))
    params, _hp = load_checkpoint(Path(ns.ckpt).read_text(encoding="utf-8"))
    names = graph.names
    if ns.design:
        design = parse_design(Path(ns.design).read_text(encoding="utf-8"))
        names = sorted(inst.name for inst in design.instances)
        if len(names) != graph.n:
            raise ValueError(
                f"{ns.design} has {len(names)} instances but the graph has {graph.n} nodes"
            )
    probs, labels = infer(graph, params)
    Path(ns.out).write_text(write_predictions(names, probs, labels), encoding="utf-8")
    print(f"wrote {ns.out} ({graph.n} predictions, {int(labels.sum())} flagged unpacked)")
    return 0


def cmd_eval(ns) -> int:
    cfg = _effective_config(ns)
    _print_config(cfg)
    names, probs, _pred_labels = read_predictions(Path(ns.pred).read_text(encoding="utf-8"))
    truth_text = Path(ns.labels).read_text(encoding="utf-8")
    truth: dict[str, int] = {}
    for lineno, raw in enumerate(truth_text.splitlines(), start=1):
        tokens = raw.split("#", 1)[0].split()
        if not tokens:
            continue
        if len(tokens) != 2 or tokens[1] not in ("0", "1"):
            raise ValueError(f"{ns.labels}:{lineno}: expected '<instance> <0|1>'")
        truth[tokens[0]] = int(tokens[1])
    missing = [nm for nm in names if nm not in truth]
    if missing:
        raise ValueError(f"{ns.labels}: no label for predicted instance {missing[0]}")
    y = [truth[nm] for nm in names]
    rep = report(probs, y, tau=cfg["threshold"])
    text = render_report(rep, tau=cfg["threshold"])
    print(text, end="")
    if ns.out:
        Path(ns.out).write_text(text, encoding="utf-8")
        print(f"wrote {ns.out}")
    if ns.roc_out:
        Path(ns.roc_out).write_text(roc_lines(rep.roc), encoding="utf-8")
        print(f"wrote {ns.roc_out}")
    return 0


def _add_common(sub: argparse.ArgumentParser):
    sub.add_argument("--config", help="key=value config file")
    sub.add_argument("--seed", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="imlg", description="FPGA packing prediction pipeline"
    )
    subs = parser.add_subparsers(dest="command", required=True)

    gen = subs.add_parser("gen", help="generate a synthetic design + oracle labels")
    _add_common(gen)
    gen.add_argument("--instances", type=int, required=True)
    gen.add_argument("--lut-mix", type=float, default=0.5)
    gen.add_argument("--layout", type=int, nargs=2, metavar=("W", "H"))
    gen.add_argument("--hotspots", type=int, default=4)
    gen.add_argument("--target-minority", type=float, default=0.10)
    gen.add_argument("--out", required=True, help="prefix for .design/.labels files")
    gen.set_defaults(func=cmd_gen)

    build = subs.add_parser("build-graph", help="design (+labels) -> graph file")
    _add_common(build)
    build.add_argument("--design", required=True)
    build.add_argument("--labels")
    build.add_argument("--L", type=float, default=None)
    build.add_argument("--edge-cap", type=int, default=None)
    build.add_argument("--region-depth", type=int, default=None)
    build.add_argument("--out", required=True)
    build.set_defaults(func=cmd_build_graph)

    tr = subs.add_parser("train", help="graph file -> checkpoint + train log")
    _add_common(tr)
    tr.add_argument("--graph", required=True)
    tr.add_argument("--out", required=True, help="checkpoint path")
    tr.add_argument("--log", help="train log path (default: <out>.log)")
    tr.add_argument("--epochs", type=int, default=None)
    tr.add_argument("--lr", type=float, default=None)
    tr.add_argument("--weight-decay", type=float, default=None)
    tr.add_argument("--cluster-size", type=int, default=None)
    tr.add_argument("--clusters-per-batch", type=int, default=None)
    tr.add_argument("--hidden-dim", type=int, default=None)
    tr.add_argument("--lambda", dest="lam", type=float, default=None)
    tr.add_argument("--eta", type=float, default=None)
    tr.add_argument("--smote-k", type=int, default=None)
    tr.add_argument("--threshold", type=float, default=None)
    tr.add_argument("--baseline-mode", action="store_true", default=None)
    tr.set_defaults(func=cmd_train)

    inf = subs.add_parser("infer", help="checkpoint + graph -> prediction file")
    _add_common(inf)
    inf.add_argument("--ckpt", required=True)
    inf.add_argument("--graph", required=True)
    inf.add_argument("--design", help="design file supplying instance names")
    inf.add_argument("--out", required=True)
    inf.set_defaults(func=cmd_infer)

    ev = subs.add_parser("eval", help="prediction + label files -> report")
    _add_common(ev)
    ev.add_argument("--pred", required=True)
    ev.add_argument("--labels", required=True)
    ev.add_argument("--out")
    ev.add_argument("--roc-out")
    ev.add_argument("--threshold", type=float, default=None)
    ev.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        return ns.func(ns)
    except (ValueError, OSError, RuntimeError, ArithmeticError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
