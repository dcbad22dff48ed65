"""Imbalance-aware graph model over dense batch adjacencies.

Pipeline per batch: a one-layer encoder over CONCAT(self, neighbor mean,
neighbor mean - self), minority oversampling in embedding space, a
bilinear structure decoder that scores candidate edges, a one-layer
SAGE-style classifier on the augmented graph, and two losses:

* reconstruction: squared error of the soft edge scores against the real
  adjacency, with entries that are edges weighted by eta > 1;
* classification: mean negative log-likelihood on the augmented nodes.

Gradient routing is structural: the classifier consumes the thresholded
adjacency as a constant, so the decoder weight only ever sees the
reconstruction loss and the classifier weights only the NLL, while the
encoder receives both.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .optim import ParamStore


@dataclass(frozen=True)
class HyperParams:
    hidden_dim: int = 64
    lam: float = 1.0  # reconstruction weight in the joint objective
    eta: float = 10.0  # extra cost on mispredicting actual edges; must be > 1
    smote_k: int = 5
    edge_threshold: float = 0.5
    oversample_to_balance: bool = True
    soft_synthetic_edges: bool = False  # classifier sees scores, not 0/1 edges

    def __post_init__(self):
        if self.hidden_dim < 1:
            raise ValueError(f"hidden_dim must be >= 1, got {self.hidden_dim}")
        if self.lam < 0:
            raise ValueError(f"lam must be >= 0, got {self.lam}")
        if not self.eta > 1:
            raise ValueError(f"eta must be > 1, got {self.eta}")
        if not (0.0 < self.edge_threshold < 1.0):
            raise ValueError(f"edge_threshold must be in (0, 1), got {self.edge_threshold}")
        if self.smote_k < 1:
            raise ValueError(f"smote_k must be >= 1, got {self.smote_k}")


def _xavier(rng, fan_in: int, fan_out: int) -> np.ndarray:
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=(fan_in, fan_out))


def init_params(feature_dim: int, hp: HyperParams, seed: int = 0) -> ParamStore:
    """Encoder/decoder/classifier weights. The decoder starts as the
    identity, i.e. a pure inner-product scorer."""
    rng = np.random.default_rng([seed, 3])
    h = hp.hidden_dim
    store = ParamStore()
    store.add("Enc", "W1", _xavier(rng, 3 * feature_dim, h))
    store.add("Dec", "S", np.eye(h))
    store.add("Clf", "W_agg", _xavier(rng, 3 * h, h))
    store.add("Clf", "W_head", _xavier(rng, h, 2))
    return store


def mean_aggregation_matrix(a: np.ndarray) -> np.ndarray:
    """Row-normalized adjacency; rows of isolated nodes stay zero."""
    deg = a.sum(axis=1)
    scale = np.where(deg > 0, 1.0 / np.maximum(deg, 1.0), 0.0)
    return a * scale[:, None]


def encode(a: np.ndarray, x, w1, activation=ad.relu, agg: np.ndarray | None = None) -> Tensor:
    """Embeddings: relu(CONCAT(X, X_N, X_N - X) @ W1) with X_N the
    neighbor feature mean (zero vector for isolated nodes). `agg` may
    carry a precomputed row-normalized adjacency."""
    xt = x if isinstance(x, Tensor) else ad.const(x)
    if agg is None:
        agg = mean_aggregation_matrix(np.asarray(a, dtype=np.float64))
    xn = ad.matmul(ad.const(agg), xt)
    stacked = ad.concat_cols([xt, xn, ad.sub(xn, xt)])
    return activation(ad.matmul(stacked, w1))


@dataclass
class SmotePlan:
    parents: list[tuple[int, int, float]] = field(default_factory=list)
    skipped: bool = False

    @property
    def m(self) -> int:
        return len(self.parents)


def smote_oversample(
    z: np.ndarray, labels: np.ndarray, k: int, rng, balance: bool = True
) -> SmotePlan:
    """Plan synthetic minority rows to balance the batch: parent a cycles
    round-robin over minority nodes, parent b is drawn from a's k nearest
    minority neighbors in embedding space, delta ~ U[0,1]."""
    labels = np.asarray(labels)
    minority = np.flatnonzero(labels == 1)
    majority_count = int((labels == 0).sum())
    m = majority_count - len(minority) if balance else 0
    if m <= 0:
        return SmotePlan()
    if len(minority) < 2:
        return SmotePlan(skipped=True)
    zm = z[minority]
    with np.errstate(over="ignore"):
        d2 = np.sum((zm[:, None, :] - zm[None, :, :]) ** 2, axis=2)
    np.fill_diagonal(d2, np.inf)
    k_eff = min(k, len(minority) - 1)
    # stable sort ties by minority order, which is ascending node id
    order = np.argsort(d2, axis=1, kind="stable")
    neighbor_ids = minority[order[:, :k_eff]]
    parents = []
    for t in range(m):
        ai = t % len(minority)
        a = int(minority[ai])
        b = int(neighbor_ids[ai][rng.integers(k_eff)])
        delta = float(rng.random())
        parents.append((a, b, delta))
    return SmotePlan(parents)


def apply_smote(z: Tensor, plan: SmotePlan) -> Tensor:
    """Augmented embeddings: synthetic row t = (1-delta) z_a + delta z_b."""
    if plan.m == 0:
        return z
    n = z.data.shape[0]
    combine = np.zeros((n + plan.m, n))
    combine[:n, :n] = np.eye(n)
    for t, (a, b, delta) in enumerate(plan.parents):
        combine[n + t, a] += 1.0 - delta
        combine[n + t, b] += delta
    return ad.matmul(ad.const(combine), z)


def decode_scores(z_tilde, s) -> Tensor:
    """Soft pairwise edge scores sigmoid(Z S Z^T) as a tensor."""
    zt = z_tilde if isinstance(z_tilde, Tensor) else ad.const(z_tilde)
    st = s if isinstance(s, Tensor) else ad.const(s)
    return ad.sigmoid(ad.matmul(ad.matmul(zt, st), ad.transpose(zt)))


def decode_adjacency(
    z_tilde: np.ndarray, s: np.ndarray, a_real: np.ndarray, tau: float, return_scores: bool = True
) -> tuple[np.ndarray, np.ndarray | None]:
    """Binary augmented adjacency: entries touching synthetic nodes are
    1 iff score > tau, the real-real block is the input adjacency
    verbatim, symmetrized by max, zero diagonal. Returns (adjacency,
    full soft scores, or None when not requested). Plain arrays; the
    classifier treats this as a constant.

    Thresholding happens in logit space (sigmoid is monotone), so the
    scores themselves are only computed on demand; without them only the
    synthetic rows/columns of the logit matrix are materialized."""
    n = a_real.shape[0]
    total = z_tilde.shape[0]
    logit_tau = np.log(tau / (1.0 - tau))
    scores = None
    if return_scores:
        logits = z_tilde @ s @ z_tilde.T
        binary = logits > logit_tau
        scores = ad.stable_sigmoid(logits)
    else:
        binary = np.zeros((total, total), dtype=bool)
        if total > n:
            zs = z_tilde @ s
            binary[n:, :] = zs[n:] @ z_tilde.T > logit_tau
            binary[:, n:] = zs @ z_tilde[n:].T > logit_tau
    a_aug = np.maximum(binary, binary.T).astype(np.float64)
    a_aug[:n, :n] = a_real
    np.fill_diagonal(a_aug, 0.0)
    return a_aug, scores


def classify(a_aug: np.ndarray, z_tilde, w_agg, w_head) -> tuple[Tensor, np.ndarray]:
    """SAGE-style layer over the augmented graph plus a linear head and
    row log-softmax. Returns (log-probabilities tensor, probabilities)."""
    zt = z_tilde if isinstance(z_tilde, Tensor) else ad.const(z_tilde)
    m = ad.const(mean_aggregation_matrix(np.asarray(a_aug, dtype=np.float64)))
    zn = ad.matmul(m, zt)
    hidden = ad.relu(ad.matmul(ad.concat_cols([zt, zn, ad.sub(zn, zt)]), w_agg))
    logits = ad.matmul(hidden, w_head)
    logp = ad.log_softmax_rows(logits)
    return logp, np.exp(logp.data)


def predicted_labels(probs: np.ndarray) -> np.ndarray:
    """Argmax with ties resolved toward class 0."""
    return (probs[:, 1] > probs[:, 0]).astype(np.int64)


def reconstruction_weights(a: np.ndarray, eta: float) -> np.ndarray:
    """eta where an edge exists, 1 elsewhere, 0 on the diagonal."""
    w = np.where(a != 0, eta, 1.0)
    np.fill_diagonal(w, 0.0)
    return w


def loss_rec(a: np.ndarray, scores: Tensor, eta: float) -> Tensor:
    """Penalty-weighted squared reconstruction error on the real block,
    diagonal excluded: sum of (w_ij (a_ij - score_ij))^2."""
    w = ad.const(reconstruction_weights(a, eta))
    diff = ad.mul(ad.sub(ad.const(a), scores), w)
    return ad.sum_all(ad.mul(diff, diff))


def loss_clf(logp: Tensor, y: np.ndarray) -> Tensor:
    """Mean negative log-likelihood over all (augmented) nodes."""
    y = np.asarray(y)
    onehot = np.zeros(logp.data.shape)
    onehot[np.arange(len(y)), y] = 1.0
    return ad.scale(ad.sum_all(ad.mul(logp, ad.const(onehot))), -1.0 / len(y))


def total_objective(l_clf: Tensor, l_rec: Tensor, lam: float) -> Tensor:
    return ad.add(l_clf, ad.scale(l_rec, lam))


@dataclass
class FrozenChoices:
    """Pinned structural decisions (for finite-difference checking):
    reuse these SMOTE parents and this classifier adjacency instead of
    recomputing them from the current embeddings."""

    plan: SmotePlan
    a_aug: np.ndarray | None


@dataclass
class ForwardResult:
    objective: Tensor
    clf_loss: Tensor
    rec_loss: Tensor | None  # None in baseline mode
    probs: np.ndarray  # class probabilities for all augmented nodes
    y_aug: np.ndarray
    plan: SmotePlan
    a_aug: np.ndarray | None
    z: np.ndarray
    z_aug: np.ndarray

    @property
    def l_clf(self) -> float:
        return float(self.clf_loss.data)

    @property
    def l_rec(self) -> float:
        return 0.0 if self.rec_loss is None else float(self.rec_loss.data)


def forward(
    a: np.ndarray,
    x: np.ndarray,
    y: np.ndarray,
    params: ParamStore,
    hp: HyperParams,
    rng=None,
    baseline: bool = False,
    frozen: FrozenChoices | None = None,
    enc_agg: np.ndarray | None = None,
) -> ForwardResult:
    """One full training-mode pass over a batch. In baseline mode the
    oversampling and decoder stages are skipped entirely and the
    reconstruction loss is reported as zero."""
    w1 = params.get("Enc", "W1")
    z = encode(a, x, w1, agg=enc_agg)
    if baseline:
        logp, probs = classify(a, z, params.get("Clf", "W_agg"), params.get("Clf", "W_head"))
        l_clf = loss_clf(logp, y)
        return ForwardResult(
            objective=l_clf,
            clf_loss=l_clf,
            rec_loss=None,
            probs=probs,
            y_aug=np.asarray(y),
            plan=SmotePlan(),
            a_aug=None,
            z=z.data,
            z_aug=z.data,
        )
    if frozen is not None:
        plan = frozen.plan
    else:
        if rng is None:
            raise ValueError("training forward needs an rng for oversampling")
        plan = smote_oversample(z.data, y, hp.smote_k, rng, hp.oversample_to_balance)
    z_aug = apply_smote(z, plan)
    y_aug = np.concatenate([np.asarray(y), np.ones(plan.m, dtype=np.int64)])
    s = params.get("Dec", "S")
    scores_real = decode_scores(z, s)
    l_rec = loss_rec(a, scores_real, hp.eta)
    if frozen is not None and frozen.a_aug is not None:
        a_aug = frozen.a_aug
    elif hp.soft_synthetic_edges:
        a_aug, scores = decode_adjacency(
            z_aug.data, s.data, np.asarray(a, dtype=np.float64), hp.edge_threshold
        )
        # keep soft weights where the binary decode placed synthetic edges;
        # still a constant for the classifier, so routing is unchanged
        a_aug = a_aug * np.maximum(scores, scores.T)
        n_real = len(y)
        a_aug[:n_real, :n_real] = np.asarray(a, dtype=np.float64)
    else:
        a_aug, _ = decode_adjacency(
            z_aug.data, s.data, np.asarray(a, dtype=np.float64), hp.edge_threshold,
            return_scores=False,
        )
    logp, probs = classify(a_aug, z_aug, params.get("Clf", "W_agg"), params.get("Clf", "W_head"))
    l_clf = loss_clf(logp, y_aug)
    objective = total_objective(l_clf, l_rec, hp.lam)
    return ForwardResult(
        objective=objective,
        clf_loss=l_clf,
        rec_loss=l_rec,
        probs=probs,
        y_aug=y_aug,
        plan=plan,
        a_aug=a_aug,
        z=z.data,
        z_aug=z_aug.data,
    )
