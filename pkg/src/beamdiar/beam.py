"""Truncated beam-search clustering of an embedding stream.

Each hypothesis is one candidate assignment history: the labels of the
not-yet-emitted frames, per-cluster running centroids, and a cumulative
score. A step extends every hypothesis with every candidate cluster (plus
one new cluster), emits the label the best path gives to the frame that
just cleared the latency window, deletes paths that disagree with the
emission, and keeps the best ``beam_size`` paths.

Scores: assigning to an existing cluster costs log(1 - d) (or a flat bonus
when the distance is under the calibrated l_intra), opening a new cluster
costs log(min distance) (or a flat bonus when every centroid is farther
than l_new). A continuity bonus rewards keeping the previous frame's
label. All labels are dense integers ordered by first appearance.
"""

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .calibration import Thresholds
from .vecmath import centroid_add, distance_fn, distances_to

LOG_CLAMP_EPS = 1e-9


@dataclass
class TbscConfig:
    beam_size: int = 1
    latency: int = 0                        # frames between input and emission
    continuity_bonus: float = 0.2           # weight of the same-label-as-previous bonus
    thresholds: Thresholds = field(default_factory=Thresholds)
    use_thresholds: bool = True
    new_cluster_score: float = 0.0          # score when every centroid is beyond l_new
    intra_score: float = 0.0                # score when a centroid is within l_intra
    max_clusters: int | None = None
    distance: str = "scaled"
    f: Callable[[float], float] | None = None   # new-cluster score shape, default log(x)
    g: Callable[[float], float] | None = None   # existing-cluster shape, default log(1-x)

    def __post_init__(self):
        if self.beam_size < 1:
            raise ValueError("beam_size must be >= 1")
        if self.latency < 0:
            raise ValueError("latency must be >= 0")
        if self.continuity_bonus < 0:
            raise ValueError("continuity_bonus must be >= 0")
        distance_fn(self.distance)  # validates the kind

    @property
    def effective_l_intra(self) -> float | None:
        return self.thresholds.l_intra if self.use_thresholds else None

    @property
    def effective_l_new(self) -> float | None:
        return self.thresholds.l_new if self.use_thresholds else None


def _default_f(m: float) -> float:
    return math.log(min(1.0, max(LOG_CLAMP_EPS, m)))


def _score_new_from(d: np.ndarray | None, cfg: TbscConfig) -> float:
    if d is None or len(d) == 0:
        return cfg.new_cluster_score
    m = float(d.min())
    l_new = cfg.effective_l_new
    if l_new is not None and m >= l_new:
        return cfg.new_cluster_score
    return (cfg.f or _default_f)(m)


def _scores_existing_from(d: np.ndarray, prev_label: int, cfg: TbscConfig) -> np.ndarray:
    if cfg.g is None:
        scores = np.log(np.clip(1.0 - d, LOG_CLAMP_EPS, 1.0))
    else:
        scores = np.array([cfg.g(float(x)) for x in d])
    l_intra = cfg.effective_l_intra
    if l_intra is not None:
        scores = np.where(d <= l_intra, cfg.intra_score, scores)
    if 0 <= prev_label < len(scores):
        scores[prev_label] += cfg.continuity_bonus
    return scores


def score_new(e: np.ndarray, centroids: np.ndarray | None, cfg: TbscConfig) -> float:
    """Score for opening a new cluster at this frame."""
    if centroids is None or len(centroids) == 0:
        return cfg.new_cluster_score
    return _score_new_from(distances_to(e, centroids, cfg.distance), cfg)


def score_existing(e: np.ndarray, centroids: np.ndarray, prev_label: int,
                   cfg: TbscConfig) -> np.ndarray:
    """Scores for assigning this frame to each existing cluster, including
    the continuity bonus on ``prev_label``."""
    return _scores_existing_from(distances_to(e, centroids, cfg.distance), prev_label, cfg)


@dataclass(slots=True)
class Hypothesis:
    window: tuple[int, ...]       # labels of the frames still inside the latency window
    centroids: np.ndarray | None  # (K, D) running means, None before the first frame
    counts: np.ndarray | None     # (K,) member counts
    score: float
    last_label: int

    @property
    def num_clusters(self) -> int:
        return 0 if self.counts is None else len(self.counts)


class TruncatedBeamClusterer:
    """Online clusterer; feed frames with ``step``, finish with ``flush``."""

    def __init__(self, cfg: TbscConfig):
        self.cfg = cfg
        self._hyps: list[Hypothesis] = [
            Hypothesis(window=(), centroids=None, counts=None, score=0.0, last_label=-1)
        ]
        self._t = 0
        self._finished = False
        self.emitted: list[tuple[int, int]] = []
        self.peak_hypotheses = 1

    @property
    def frames_seen(self) -> int:
        return self._t

    def best(self) -> Hypothesis:
        return self._hyps[0]

    def _extend(self, h: Hypothesis, e: np.ndarray) -> list[Hypothesis]:
        children = []
        k = h.num_clusters
        d = distances_to(e, h.centroids, self.cfg.distance) if k else None
        if k:
            for label, s in enumerate(_scores_existing_from(d, h.last_label, self.cfg)):
                c, n = centroid_add(h.centroids[label], int(h.counts[label]), e)
                if not c.any():
                    continue  # exactly cancelling members: the cluster loses its direction
                centroids = h.centroids.copy()
                centroids[label] = c
                counts = h.counts.copy()
                counts[label] = n
                children.append(Hypothesis(
                    window=h.window + (label,), centroids=centroids, counts=counts,
                    score=h.score + float(s), last_label=label,
                ))
        if (self.cfg.max_clusters is None or k < self.cfg.max_clusters or k == 0
                or not children):  # keep the path alive if every update cancelled
            s = _score_new_from(d, self.cfg)
            c, n = centroid_add(e, 0, e)
            centroids = np.vstack([h.centroids, c[None]]) if k else c[None]
            counts = np.append(h.counts, n) if k else np.array([n])
            children.append(Hypothesis(
                window=h.window + (k,), centroids=centroids, counts=counts,
                score=h.score + s, last_label=k,
            ))
        return children

    def step(self, e: np.ndarray) -> tuple[int, int] | None:
        """Consume one frame; return the (frame, label) emitted, if any."""
        if self._finished:
            raise RuntimeError("clusterer already flushed")
        e = np.asarray(e, dtype=float)
        if not e.any():
            raise ValueError("degenerate vector (zero norm)")

        # extend every live path with every candidate label, merging any
        # children that represent the same assignment history
        children: dict[tuple[int, ...], Hypothesis] = {}
        for h in self._hyps:
            for child in self._extend(h, e):
                old = children.get(child.window)
                if old is None or child.score > old.score:
                    children[child.window] = child
        hyps = sorted(children.values(), key=lambda h: (-h.score, h.window))

        emitted = None
        if self._t >= self.cfg.latency:
            frame = self._t - self.cfg.latency
            label = hyps[0].window[0]
            emitted = (frame, label)
            self.emitted.append(emitted)
            hyps = [h for h in hyps if h.window[0] == label]
            for h in hyps:
                h.window = h.window[1:]

        self._hyps = hyps[: self.cfg.beam_size]
        self.peak_hypotheses = max(self.peak_hypotheses, len(self._hyps))
        self._t += 1
        return emitted

    def flush(self) -> list[tuple[int, int]]:
        """Emit the frames still buffered in the best path; ends the stream."""
        if self._finished:
            raise RuntimeError("clusterer already flushed")
        self._finished = True
        best = self._hyps[0]
        start = self._t - len(best.window)
        tail = [(start + i, label) for i, label in enumerate(best.window)]
        self.emitted.extend(tail)
        return tail


def cluster_stream(embeddings: np.ndarray, cfg: TbscConfig) -> np.ndarray:
    """Run the clusterer over a whole stream; one label per frame."""
    clusterer = TruncatedBeamClusterer(cfg)
    for e in np.asarray(embeddings, dtype=float):
        clusterer.step(e)
    clusterer.flush()
    labels = np.empty(len(clusterer.emitted), dtype=int)
    for frame, label in clusterer.emitted:
        labels[frame] = label
    return labels


def leader_follower(embeddings: np.ndarray, tau: float,
                    distance: str = "scaled") -> np.ndarray:
    """Greedy online baseline: nearest centroid under ``tau``, else new cluster."""
    centroids: np.ndarray | None = None
    counts: np.ndarray | None = None
    labels = np.empty(len(embeddings), dtype=int)
    for t, e in enumerate(np.asarray(embeddings, dtype=float)):
        if not e.any():
            raise ValueError("degenerate vector (zero norm)")
        if centroids is None:
            centroids = e[None].copy()
            counts = np.array([1])
            labels[t] = 0
            continue
        d = distances_to(e, centroids, distance)
        j = int(d.argmin())
        if d[j] < tau:
            c, n = centroid_add(centroids[j], int(counts[j]), e)
            centroids[j] = c
            counts[j] = n
            labels[t] = j
        else:
            centroids = np.vstack([centroids, e[None]])
            counts = np.append(counts, 1)
            labels[t] = len(counts) - 1
    return labels


def matched_lfc_tau() -> float:
    """Distance where log(m) crosses log(1 - m): the leader-follower
    threshold reproducing degenerate beam search (B=1, latency 0,
    thresholds off, no continuity bonus)."""
    return 0.5
