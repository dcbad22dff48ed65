"""Mini-batch training over a cluster partition, plus whole-graph inference.

Training partitions the graph, then per epoch visits the clusters in a
seeded random order, taking one optimizer step per batch on the induced
subgraph (cross-cluster edges are dropped). Inference runs the encoder
and classifier over the raw graph with no oversampling or decoding, so
it scales by edges rather than by dense adjacency.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .autodiff import NonFiniteError
from .graphs import CircuitGraph
from .model import (
    HyperParams,
    forward,
    init_params,
    mean_aggregation_matrix,
    predicted_labels,
)
from .optim import Adam, ParamStore
from .partition import partition_graph


class CheckpointError(ValueError):
    pass


@dataclass
class TrainConfig:
    epochs: int = 1000
    lr: float = 1e-3
    weight_decay: float = 5e-4
    cluster_size: int = 10000
    clusters_per_batch: int = 1
    seed: int = 0
    baseline_mode: bool = False

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.lr <= 0:
            raise ValueError(f"lr must be > 0, got {self.lr}")
        if self.clusters_per_batch < 1:
            raise ValueError("clusters_per_batch must be >= 1")


@dataclass
class TrainLog:
    rows: list[tuple[int, int, float, float, float]] = field(default_factory=list)
    seed: int = 0
    wall_clock: float = 0.0
    smote_skipped: int = 0

    def to_csv(self) -> str:
        lines = ["epoch,cluster,l_clf,l_rec,objective"]
        for epoch, cluster, l_clf, l_rec, obj in self.rows:
            lines.append(
                f"{epoch},{cluster},{format(l_clf, '.17g')},"
                f"{format(l_rec, '.17g')},{format(obj, '.17g')}"
            )
        return "\n".join(lines) + "\n"


def _labels_vector(graph: CircuitGraph, labels) -> np.ndarray:
    if labels is None:
        if graph.labels is None:
            raise ValueError("graph carries no labels and none were given")
        return np.asarray(graph.labels, dtype=np.int64)
    if hasattr(labels, "labels"):
        return np.array([labels.labels[nm] for nm in graph.names], dtype=np.int64)
    return np.asarray(labels, dtype=np.int64)


def _batch_adjacency(graph: CircuitGraph, nodes: np.ndarray) -> np.ndarray:
    local = {int(g): i for i, g in enumerate(nodes)}
    a = np.zeros((len(nodes), len(nodes)))
    for li, g in enumerate(nodes):
        for j in graph.adj[int(g)]:
            lj = local.get(int(j))
            if lj is not None and lj > li:
                a[li, lj] = a[lj, li] = 1.0
    return a


def train(
    graph: CircuitGraph,
    labels=None,
    hp: HyperParams = HyperParams(),
    cfg: TrainConfig = TrainConfig(),
) -> tuple[ParamStore, TrainLog]:
    """Returns the trained parameters and the full per-iteration log."""
    y = _labels_vector(graph, labels)
    if len(np.unique(y)) < 2:
        raise ValueError("training needs both classes present in the labels")
    if graph.features is None:
        raise ValueError("graph carries no features")
    start = time.monotonic()
    part = partition_graph(graph, cfg.cluster_size, seed=cfg.seed)
    cluster_nodes = [np.flatnonzero(part.assignment == c) for c in range(part.k)]
    params = init_params(graph.features.shape[1], hp, seed=cfg.seed)
    adam = Adam(params, lr=cfg.lr, weight_decay=cfg.weight_decay)
    rng = np.random.default_rng([cfg.seed, 2])
    log = TrainLog(seed=cfg.seed)
    batch_cache: dict[tuple, tuple[np.ndarray, np.ndarray, np.ndarray]] = {}
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(part.k)
        for at in range(0, part.k, cfg.clusters_per_batch):
            group = order[at : at + cfg.clusters_per_batch]
            key = tuple(sorted(int(c) for c in group))
            if key not in batch_cache:
                nodes = np.sort(np.concatenate([cluster_nodes[c] for c in group]))
                a = _batch_adjacency(graph, nodes)
                batch_cache[key] = (nodes, a, mean_aggregation_matrix(a))
            nodes, a, enc_agg = batch_cache[key]
            try:
                res = forward(
                    a,
                    graph.features[nodes],
                    y[nodes],
                    params,
                    hp,
                    rng=rng,
                    baseline=cfg.baseline_mode,
                    enc_agg=enc_agg,
                )
                params.zero_grads()
                res.objective.backward()
                grads = params.grads()
            except NonFiniteError as err:
                raise RuntimeError(
                    f"non-finite loss at epoch {epoch} cluster {int(group[0])}: {err}"
                ) from err
            adam.step(grads)
            if res.plan.skipped:
                log.smote_skipped += 1
            log.rows.append(
                (epoch, int(group[0]), res.l_clf, res.l_rec, float(res.objective.data))
            )
    log.wall_clock = time.monotonic() - start
    return params, log


def _neighbor_mean(adj: list[np.ndarray], x: np.ndarray) -> np.ndarray:
    out = np.zeros_like(x)
    for i, nb in enumerate(adj):
        if len(nb):
            out[i] = x[nb].mean(axis=0)
    return out


def _relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def infer(graph: CircuitGraph, params: ParamStore) -> tuple[np.ndarray, np.ndarray]:
    """Minority-class probability and argmax label per node, running the
    encoder and classifier over the raw graph only."""
    if graph.features is None:
        raise ValueError("graph carries no features")
    w1 = params.get("Enc", "W1").data
    if graph.features.shape[1] * 3 != w1.shape[0]:
        raise ValueError(
            f"feature dimension mismatch: graph has {graph.features.shape[1]}, "
            f"checkpoint expects {w1.shape[0] // 3}"
        )
    x = graph.features
    xn = _neighbor_mean(graph.adj, x)
    z = _relu(np.concatenate([x, xn, xn - x], axis=1) @ w1)
    zn = _neighbor_mean(graph.adj, z)
    hidden = _relu(np.concatenate([z, zn, zn - z], axis=1) @ params.get("Clf", "W_agg").data)
    logits = hidden @ params.get("Clf", "W_head").data
    logits -= logits.max(axis=1, keepdims=True)
    probs = np.exp(logits)
    probs /= probs.sum(axis=1, keepdims=True)
    return probs[:, 1], predicted_labels(probs)


# ---------------------------------------------------------------------------
# checkpoints and prediction files

_HP_FIELDS = (
    ("hidden_dim", int),
    ("lam", float),
    ("eta", float),
    ("smote_k", int),
    ("edge_threshold", float),
    ("oversample_to_balance", bool),
    ("soft_synthetic_edges", bool),
)


def _fmt(value: float) -> str:
    return format(value, ".17g")


def save_checkpoint(params: ParamStore, hp: HyperParams) -> str:
    lines = ["IMLG-CKPT v1"]
    for name, kind in _HP_FIELDS:
        value = getattr(hp, name)
        if kind is bool:
            lines.append(f"HP {name} {int(value)}")
        elif kind is int:
            lines.append(f"HP {name} {value}")
        else:
            lines.append(f"HP {name} {_fmt(value)}")
    for (owner, name), tensor in params.items():
        rows, cols = tensor.data.shape
        lines.append(f"PARAM {owner} {name} {rows} {cols}")
        for r in range(rows):
            lines.append(" ".join(_fmt(v) for v in tensor.data[r]))
    return "\n".join(lines) + "\n"


def load_checkpoint(text: str) -> tuple[ParamStore, HyperParams]:
    lines = text.splitlines()
    if not lines or lines[0].strip() != "IMLG-CKPT v1":
        raise CheckpointError("expected header 'IMLG-CKPT v1'")
    hp_values: dict[str, object] = {}
    params = ParamStore()
    at = 1
    while at < len(lines):
        tokens = lines[at].split()
        at += 1
        if not tokens:
            continue
        if tokens[0] == "HP":
            if len(tokens) != 3:
                raise CheckpointError(f"bad HP line: {lines[at - 1]!r}")
            key = tokens[1]
            kinds = dict(_HP_FIELDS)
            if key not in kinds:
                raise CheckpointError(f"unknown hyperparameter '{key}'")
            kind = kinds[key]
            hp_values[key] = bool(int(tokens[2])) if kind is bool else kind(tokens[2])
        elif tokens[0] == "PARAM":
            if len(tokens) != 5:
                raise CheckpointError(f"bad PARAM line: {lines[at - 1]!r}")
            owner, name = tokens[1], tokens[2]
            rows, cols = int(tokens[3]), int(tokens[4])
            if at + rows > len(lines):
                raise CheckpointError(f"truncated checkpoint in {owner}.{name}")
            block = np.zeros((rows, cols))
            for r in range(rows):
                vals = lines[at + r].split()
                if len(vals) != cols:
                    raise CheckpointError(
                        f"shape mismatch in {owner}.{name} row {r}: "
                        f"expected {cols} values, got {len(vals)}"
                    )
                block[r] = [float(v) for v in vals]
            at += rows
            params.add(owner, name, block)
        else:
            raise CheckpointError(f"unknown directive '{tokens[0]}'")
    try:
        hp = HyperParams(**hp_values)
    except TypeError as err:
        raise CheckpointError(f"incomplete hyperparameters: {err}") from err
    for required in (("Enc", "W1"), ("Dec", "S"), ("Clf", "W_agg"), ("Clf", "W_head")):
        if required not in dict(params.items()):
            raise CheckpointError(f"missing parameter {required[0]}.{required[1]}")
    return params, hp


def write_predictions(names: list[str], probs: np.ndarray, labels: np.ndarray) -> str:
    lines = [
        f"{nm},{_fmt(float(p))},{int(lab)}" for nm, p, lab in zip(names, probs, labels)
    ]
    return "\n".join(lines) + "\n"


def read_predictions(text: str) -> tuple[list[str], np.ndarray, np.ndarray]:
    names, probs, labels = [], [], []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip():
            continue
        parts = raw.split(",")
        if len(parts) != 3:
            raise ValueError(f"line {lineno}: expected 'name,probability,label'")
        names.append(parts[0])
        probs.append(float(parts[1]))
        labels.append(int(parts[2]))
    return names, np.array(probs), np.array(labels, dtype=np.int64)
