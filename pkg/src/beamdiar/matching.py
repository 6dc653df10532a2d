"""Matching predicted clusters against ground-truth speakers.

The bipartite weight between speaker set G_i and cluster set Y_j is the
Jaccard overlap scaled by the cluster size, ``|G∩Y| / |G∪Y| * |Y|``. A
maximum-weight one-to-one matching over that matrix decides which cluster
"is" which speaker, which in turn splits embeddings into positives
(assigned to the matched cluster of their speaker) and negatives
(assigned elsewhere).
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment


@dataclass
class WeightMatrix:
    """Speaker-by-cluster overlap weights plus the index maps."""

    weights: np.ndarray          # (n_speakers, n_clusters)
    speakers: list               # row index -> speaker label
    clusters: list               # col index -> cluster id


@dataclass
class PosNegLabeling:
    """Embeddings split by whether their cluster matches their speaker.

    Negatives carry the center of the cluster they were wrongly assigned
    to (``neg_false_centers``) and the center of the cluster matched to
    their true speaker (``neg_true_centers``). Positives carry their own
    cluster's center. Embeddings whose true speaker got no matched
    cluster are counted in ``skipped``; they have no usable true center.
    """

    embeddings: np.ndarray
    pos_indices: np.ndarray
    pos_centers: np.ndarray
    neg_indices: np.ndarray
    neg_true_centers: np.ndarray
    neg_false_centers: np.ndarray
    skipped: int = 0

    def __post_init__(self):
        overlap = set(self.pos_indices.tolist()) & set(self.neg_indices.tolist())
        if overlap:
            raise ValueError(f"indices in both positive and negative sets: {sorted(overlap)}")


def _index_sets(labels) -> tuple[list, dict]:
    order = []
    sets: dict = {}
    for i, lab in enumerate(labels):
        if lab not in sets:
            sets[lab] = set()
            order.append(lab)
        sets[lab].add(i)
    return order, sets


def build_weights(assignments, truths) -> WeightMatrix:
    """Jaccard-times-cluster-size weights between speakers and clusters.

    Rows follow speaker order of first appearance in ``truths``, columns
    cluster order of first appearance in ``assignments``.
    """
    if len(assignments) != len(truths):
        raise ValueError(f"length mismatch: {len(assignments)} assignments vs {len(truths)} truths")
    if len(assignments) == 0:
        raise ValueError("empty input")
    speakers, speaker_sets = _index_sets(truths)
    clusters, cluster_sets = _index_sets(assignments)
    w = np.zeros((len(speakers), len(clusters)))
    for i, s in enumerate(speakers):
        g = speaker_sets[s]
        for j, c in enumerate(clusters):
            y = cluster_sets[c]
            inter = len(g & y)
            if inter:
                w[i, j] = inter / len(g | y) * len(y)
    return WeightMatrix(weights=w, speakers=speakers, clusters=clusters)


def max_weight_matching(weights: np.ndarray) -> dict[int, int]:
    """Maximum-weight one-to-one matching, as row index -> column index.

    Rectangular matrices behave as if zero-padded square; pairs with zero
    weight are dropped, so rows/columns absent from the mapping are
    unmatched.
    """
    w = np.asarray(weights, dtype=float)
    if w.ndim != 2 or w.size == 0:
        raise ValueError("weight matrix must be 2-D and non-empty")
    if not np.all(np.isfinite(w)) or np.any(w < 0):
        raise ValueError("weights must be finite and nonnegative")
    rows, cols = linear_sum_assignment(w, maximize=True)
    return {int(i): int(j) for i, j in zip(rows, cols) if w[i, j] > 0}


def label_pos_neg(assignments, truths, wm: WeightMatrix, matching: dict[int, int],
                  centers: np.ndarray, embeddings: np.ndarray) -> PosNegLabeling:
    """Split embeddings into positives and negatives under a matching.

    ``centers`` holds one row per cluster, indexed like ``wm.clusters``.
    """
    centers = np.asarray(centers, dtype=float)
    embeddings = np.asarray(embeddings, dtype=float)
    speaker_row = {s: i for i, s in enumerate(wm.speakers)}
    cluster_col = {c: j for j, c in enumerate(wm.clusters)}
    pos, neg = [], []
    neg_true, neg_false = [], []
    pos_centers = []
    skipped = 0
    for i, (c, s) in enumerate(zip(assignments, truths)):
        matched_col = matching.get(speaker_row[s])
        if matched_col is None:
            skipped += 1
            continue
        col = cluster_col[c]
        if col == matched_col:
            pos.append(i)
            pos_centers.append(centers[col])
        else:
            neg.append(i)
            neg_true.append(centers[matched_col])
            neg_false.append(centers[col])
    dim = embeddings.shape[1] if embeddings.ndim == 2 else 0
    return PosNegLabeling(
        embeddings=embeddings,
        pos_indices=np.asarray(pos, dtype=int),
        pos_centers=np.asarray(pos_centers, dtype=float).reshape(len(pos), dim),
        neg_indices=np.asarray(neg, dtype=int),
        neg_true_centers=np.asarray(neg_true, dtype=float).reshape(len(neg), dim),
        neg_false_centers=np.asarray(neg_false, dtype=float).reshape(len(neg), dim),
        skipped=skipped,
    )


def cluster_centers(assignments, embeddings: np.ndarray, clusters: list) -> np.ndarray:
    """Arithmetic-mean center per cluster, rows ordered like ``clusters``."""
    embeddings = np.asarray(embeddings, dtype=float)
    out = np.zeros((len(clusters), embeddings.shape[1]))
    assignments = list(assignments)
    for j, c in enumerate(clusters):
        members = [i for i, a in enumerate(assignments) if a == c]
        out[j] = embeddings[members].mean(axis=0)
    return out


def match_labeling(assignments, truths, embeddings: np.ndarray) -> PosNegLabeling:
    """Convenience: weights, matching, centers and labeling in one call."""
    wm = build_weights(assignments, truths)
    matching = max_weight_matching(wm.weights)
    centers = cluster_centers(assignments, embeddings, wm.clusters)
    return label_pos_neg(assignments, truths, wm, matching, centers, embeddings)


def clustering_error(assignments, truths) -> float:
    """Fraction of samples not explained by the best speaker-cluster matching.

    Counts both mismatched samples and samples of speakers left unmatched.
    """
    assignments = list(assignments)
    truths = list(truths)
    wm = build_weights(assignments, truths)
    matching = max_weight_matching(wm.weights)
    speaker_row = {s: i for i, s in enumerate(wm.speakers)}
    cluster_col = {c: j for j, c in enumerate(wm.clusters)}
    wrong = 0
    for c, s in zip(assignments, truths):
        matched_col = matching.get(speaker_row[s])
        if matched_col is None or cluster_col[c] != matched_col:
            wrong += 1
    return wrong / len(assignments)
