"""Clustering-guided recurrent training of the embedding map.

Each iteration alternates a prediction stage (embed a fresh labeled
subset, cluster it) with a correction stage (match clusters to speakers,
recalibrate the l_intra / l_new thresholds, and take one gradient step on
two hinge losses: one pulling same-speaker pairs within l_intra of each
other, one pushing mis-assigned embeddings away from the center they were
wrongly pulled into). Gradients are derived by hand through the cosine
distance and the unit normalization; cluster centers are treated as
constants.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import beam, offline
from .calibration import Thresholds, compute_l_intra, compute_l_new, update_thresholds
from .matching import PosNegLabeling, match_labeling
from .model import EmbeddingModel
from .vecmath import RAW_CLAMP_EPS

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    iterations: int = 200
    speaker_range: tuple[int, int] = (4, 8)
    samples_per_speaker: int = 20
    learning_rate: float = 0.05
    momentum: float = 0.9
    smoothing: float = 0.0                 # 0 keeps the latest threshold estimates
    warmup_clusterer: str = "ahc"          # "ahc" | "spectral"
    warmup_iterations: int = 10            # offline clustering before switching to beam(B=1)
    ahc_threshold: float = 0.5
    continuity_bonus: float = 0.2
    seed: int = 0
    distance: str = "scaled"
    # Loss margin floor. Used verbatim while the thresholds are still
    # invalid, and as a lower bound afterwards: letting the pull-together
    # margin track a collapsing l_intra all the way down contracts the
    # whole embedding sphere to a point. Inference still receives the
    # unfloored calibrated thresholds.
    default_margin: float = 0.1
    posi_weight: float = 1.0
    nega_weight: float = 1.0
    use_previous_thresholds: bool = False  # score losses with last iteration's thresholds

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        lo, hi = self.speaker_range
        if not (1 <= lo <= hi):
            raise ValueError(f"bad speaker range {self.speaker_range}")
        if not (0.0 <= self.smoothing <= 1.0):
            raise ValueError("smoothing must lie in [0, 1]")
        if self.warmup_clusterer not in ("ahc", "spectral"):
            raise ValueError(f"unknown warmup clusterer {self.warmup_clusterer!r}")


@dataclass
class IterationRecord:
    iteration: int
    loss_posi: float
    loss_nega: float
    l_intra: float
    l_new: float
    err: float


@dataclass
class TrainReport:
    records: list[IterationRecord] = field(default_factory=list)

    CSV_HEADER = "iter,loss_posi,loss_nega,l_intra,l_new,err"

    def to_csv(self) -> str:
        lines = [self.CSV_HEADER]
        for r in self.records:
            vals = (r.loss_posi, r.loss_nega, r.l_intra, r.l_new, r.err)
            lines.append(f"{r.iteration}," + ",".join(format(v, ".17g") for v in vals))
        return "\n".join(lines) + "\n"


def _forward_full(model: EmbeddingModel, x: np.ndarray):
    u = x @ model.weight.T + model.bias
    norms = np.linalg.norm(u, axis=1)
    if np.any(norms == 0.0):
        raise ValueError("degenerate embedding (zero pre-activation)")
    return u, norms, u / norms[:, None]


def _pair_distance_matrix(e: np.ndarray, kind: str):
    """Distances between unit rows plus the clamp-activity mask for 'raw'."""
    cos = np.clip(e @ e.T, -1.0, 1.0)
    if kind == "scaled":
        return (1.0 - cos) / 2.0, None
    d = 1.0 - cos
    inside = (d > RAW_CLAMP_EPS) & (d < 1.0 - RAW_CLAMP_EPS)
    return np.clip(d, RAW_CLAMP_EPS, 1.0 - RAW_CLAMP_EPS), inside


def _backprop_embeddings(grad_e: np.ndarray, e: np.ndarray, norms: np.ndarray,
                         x: np.ndarray):
    """Chain a gradient on the unit embeddings back to (W, b)."""
    grad_u = (grad_e - (np.einsum("ij,ij->i", grad_e, e))[:, None] * e) / norms[:, None]
    return grad_u.T @ x, grad_u.sum(axis=0)


def loss_posi(model: EmbeddingModel, x: np.ndarray, labels, margin: float,
              kind: str = "scaled"):
    """Mean hinge over same-speaker pairs farther apart than the margin.

    Returns (loss, grad_w, grad_b). No same-speaker pair means a zero
    loss and a zero gradient.
    """
    x = np.asarray(x, dtype=float)
    _, norms, e = _forward_full(model, x)
    labels = np.asarray(labels)
    same = labels[:, None] == labels[None, :]
    upper = np.triu(same, k=1)
    n_pairs = int(upper.sum())
    if n_pairs == 0:
        return 0.0, np.zeros_like(model.weight), np.zeros_like(model.bias)
    d, inside = _pair_distance_matrix(e, kind)
    hinge = np.where(upper, d - margin, 0.0)
    loss = float(hinge[hinge > 0].sum()) / n_pairs
    active = upper & (hinge > 0)
    if kind == "raw":
        active &= inside
    adj = (active | active.T).astype(float)
    scale = -0.5 if kind == "scaled" else -1.0
    grad_e = scale / n_pairs * (adj @ e)
    grad_w, grad_b = _backprop_embeddings(grad_e, e, norms, x)
    return loss, grad_w, grad_b


def loss_nega(model: EmbeddingModel, x: np.ndarray, labeling: PosNegLabeling,
              margin: float, kind: str = "scaled"):
    """Mean hinge pushing each negative from its false center toward its true one.

    Centers are constants (no gradient flows through them). Returns
    (loss, grad_w, grad_b); both are zero when there are no negatives.
    """
    x = np.asarray(x, dtype=float)
    _, norms, e = _forward_full(model, x)
    n_neg = len(labeling.neg_indices)
    if n_neg == 0:
        return 0.0, np.zeros_like(model.weight), np.zeros_like(model.bias)

    idx = labeling.neg_indices
    mt = labeling.neg_true_centers
    mf = labeling.neg_false_centers
    mt_hat = mt / np.linalg.norm(mt, axis=1)[:, None]
    mf_hat = mf / np.linalg.norm(mf, axis=1)[:, None]
    cos_t = np.clip(np.einsum("ij,ij->i", mt_hat, e[idx]), -1.0, 1.0)
    cos_f = np.clip(np.einsum("ij,ij->i", mf_hat, e[idx]), -1.0, 1.0)
    if kind == "scaled":
        d_t, d_f = (1.0 - cos_t) / 2.0, (1.0 - cos_f) / 2.0
        in_t = in_f = np.ones(n_neg, dtype=bool)
        scale = 0.5
    else:
        raw_t, raw_f = 1.0 - cos_t, 1.0 - cos_f
        in_t = (raw_t > RAW_CLAMP_EPS) & (raw_t < 1.0 - RAW_CLAMP_EPS)
        in_f = (raw_f > RAW_CLAMP_EPS) & (raw_f < 1.0 - RAW_CLAMP_EPS)
        d_t = np.clip(raw_t, RAW_CLAMP_EPS, 1.0 - RAW_CLAMP_EPS)
        d_f = np.clip(raw_f, RAW_CLAMP_EPS, 1.0 - RAW_CLAMP_EPS)
        scale = 1.0
    terms = d_t - d_f + margin
    active = terms > 0
    loss = float(terms[active].sum()) / n_neg

    grad_e = np.zeros_like(e)
    coeff_t = np.where(active & in_t, -scale / n_neg, 0.0)
    coeff_f = np.where(active & in_f, scale / n_neg, 0.0)
    np.add.at(grad_e, idx, coeff_t[:, None] * mt_hat + coeff_f[:, None] * mf_hat)
    grad_w, grad_b = _backprop_embeddings(grad_e, e, norms, x)
    return loss, grad_w, grad_b


def _cluster_subset(embeddings: np.ndarray, truths, iteration: int,
                    thresholds: Thresholds, cfg: TrainConfig,
                    warmup: Callable | None) -> np.ndarray:
    if iteration < cfg.warmup_iterations:
        if warmup is not None:
            return np.asarray(warmup(embeddings))
        if cfg.warmup_clusterer == "spectral":
            k = len(set(truths))
            return offline.spectral(embeddings, k, seed=cfg.seed, distance=cfg.distance)
        return offline.ahc(embeddings, threshold=cfg.ahc_threshold, distance=cfg.distance)
    tbsc_cfg = beam.TbscConfig(
        beam_size=1, latency=0, thresholds=thresholds,
        continuity_bonus=cfg.continuity_bonus, distance=cfg.distance,
    )
    return beam.cluster_stream(embeddings, tbsc_cfg)


def cgrt_train(model: EmbeddingModel, generator: Callable, cfg: TrainConfig,
               warmup: Callable | None = None):
    """Run the full prediction/correction loop.

    ``generator(n_speakers, samples_per_speaker, rng)`` must return a
    labeled subset as (raw features, labels). Returns the trained model,
    the final thresholds and the per-iteration report.
    """
    model = model.copy()
    rng = np.random.default_rng(cfg.seed)
    thresholds = Thresholds()
    report = TrainReport()
    vel_w = np.zeros_like(model.weight)
    vel_b = np.zeros_like(model.bias)
    lo, hi = cfg.speaker_range

    for t in range(cfg.iterations):
        n_speakers = int(rng.integers(lo, hi + 1))
        x, y = generator(n_speakers, cfg.samples_per_speaker, rng)
        x = np.asarray(x, dtype=float)
        if len(set(y)) < 2:
            log.warning("iteration %d: degenerate subset (single speaker), skipped", t + 1)
            report.records.append(IterationRecord(
                iteration=t + 1, loss_posi=float("nan"), loss_nega=float("nan"),
                l_intra=_nan_if_none(thresholds.l_intra),
                l_new=_nan_if_none(thresholds.l_new), err=float("nan"),
            ))
            continue

        # prediction stage
        _, _, e = _forward_full(model, x)
        assignments = _cluster_subset(e, y, t, thresholds, cfg, warmup)

        # correction stage: match, recalibrate, one descent step
        labeling = match_labeling(assignments, y, e)
        previous = thresholds
        thresholds = update_thresholds(
            thresholds,
            compute_l_intra(labeling, cfg.distance),
            compute_l_new(labeling, cfg.distance),
            cfg.smoothing,
        )
        source = previous if cfg.use_previous_thresholds else thresholds
        margin_intra = max(source.l_intra or 0.0, cfg.default_margin)
        margin_new = max(source.l_new or 0.0, cfg.default_margin)

        lp, gw_p, gb_p = loss_posi(model, x, y, margin_intra, cfg.distance)
        ln, gw_n, gb_n = loss_nega(model, x, labeling, margin_new, cfg.distance)
        grad_w = cfg.posi_weight * gw_p + cfg.nega_weight * gw_n
        grad_b = cfg.posi_weight * gb_p + cfg.nega_weight * gb_n
        vel_w = cfg.momentum * vel_w + grad_w
        vel_b = cfg.momentum * vel_b + grad_b
        model.weight = model.weight - cfg.learning_rate * vel_w
        model.bias = model.bias - cfg.learning_rate * vel_b

        err = (len(labeling.neg_indices) + labeling.skipped) / len(e)
        report.records.append(IterationRecord(
            iteration=t + 1, loss_posi=lp, loss_nega=ln,
            l_intra=_nan_if_none(thresholds.l_intra),
            l_new=_nan_if_none(thresholds.l_new), err=err,
        ))

    return model, thresholds, report


def _nan_if_none(v: float | None) -> float:
    return float("nan") if v is None else v
