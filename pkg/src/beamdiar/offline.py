"""Offline clusterers: average-linkage agglomeration and spectral clustering.

Agglomerative clustering is the default warm-up for the training loop;
spectral clustering (normalized affinity, small dense Jacobi eigensolver,
seeded k-means on the eigenvector rows) is available behind a flag and as
an offline baseline.
"""

from dataclasses import dataclass

import numpy as np

from .vecmath import pairwise_distances


def canonical_labels(labels) -> np.ndarray:
    """Relabel to dense integers ordered by first appearance."""
    remap: dict = {}
    out = np.empty(len(labels), dtype=int)
    for i, lab in enumerate(labels):
        if lab not in remap:
            remap[lab] = len(remap)
        out[i] = remap[lab]
    return out


@dataclass(frozen=True)
class Merge:
    """One agglomeration step: cluster ``right`` folded into ``left``.

    Clusters are named by their smallest member index at the time of the
    merge; ``dist`` is the average cross-pair distance between them.
    """

    left: int
    right: int
    dist: float


def _merge_sequence(dmat: np.ndarray):
    """Greedy average-linkage merges down to one cluster.

    Cluster distances are maintained as cross-pair distance sums divided
    by pair counts; ties break on the lexicographically smallest pair of
    representative indices.
    """
    n = dmat.shape[0]
    sums = dmat.astype(float).copy()
    sizes = np.ones(n)
    active = np.ones(n, dtype=bool)
    merges: list[Merge] = []
    members: list[list[int]] = [[i] for i in range(n)]
    for _ in range(n - 1):
        avg = sums / np.outer(sizes, sizes)
        avg[~active] = np.inf
        avg[:, ~active] = np.inf
        avg[np.tril_indices(n)] = np.inf
        flat = int(avg.argmin())
        i, j = divmod(flat, n)
        merges.append(Merge(left=i, right=j, dist=float(avg[i, j])))
        sums[i, :] += sums[j, :]
        sums[:, i] += sums[:, j]
        sizes[i] += sizes[j]
        members[i].extend(members[j])
        active[j] = False
    return merges, members


def ahc(embeddings: np.ndarray, threshold: float | None = None,
        num_clusters: int | None = None, distance: str = "scaled") -> np.ndarray:
    """Average-linkage agglomerative clustering under cosine distance.

    Exactly one stop rule applies: merge while the closest pair is under
    ``threshold``, or merge until ``num_clusters`` remain.
    """
    if (threshold is None) == (num_clusters is None):
        raise ValueError("exactly one of threshold / num_clusters must be set")
    embeddings = np.asarray(embeddings, dtype=float)
    n = len(embeddings)
    if n == 0:
        raise ValueError("need at least one embedding")
    if num_clusters is not None and not (1 <= num_clusters <= n):
        raise ValueError(f"num_clusters must lie in [1, {n}]")
    if n == 1:
        return np.zeros(1, dtype=int)
    merges, _ = _merge_sequence(pairwise_distances(embeddings, distance))

    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    remaining = n
    for m in merges:
        if num_clusters is not None:
            if remaining <= num_clusters:
                break
        elif m.dist >= threshold:
            break
        parent[find(m.right)] = find(m.left)
        remaining -= 1
    return canonical_labels([find(i) for i in range(n)])


def ahc_merge_trace(embeddings: np.ndarray, distance: str = "scaled") -> list[Merge]:
    """Full agglomeration order, for auditing against a reference run."""
    embeddings = np.asarray(embeddings, dtype=float)
    if len(embeddings) < 2:
        return []
    merges, _ = _merge_sequence(pairwise_distances(embeddings, distance))
    return merges


def jacobi_eigh(a: np.ndarray, max_sweeps: int = 100,
                tol: float = 1e-12) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns (eigenvalues, eigenvectors) sorted by descending eigenvalue,
    eigenvectors in columns. Raises if the off-diagonal mass has not
    vanished after ``max_sweeps`` sweeps.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    if not np.allclose(a, a.T, atol=1e-10):
        raise ValueError("matrix must be symmetric")
    n = a.shape[0]
    a = (a + a.T) / 2.0
    v = np.eye(n)
    if n == 1:
        return a.diagonal().copy(), v
    scale = max(np.abs(a).max(), 1.0)
    offdiag = ~np.eye(n, dtype=bool)
    for sweep in range(max_sweeps + 1):
        off = np.linalg.norm(a[offdiag])  # direct, avoids cancellation
        if off <= tol * scale:
            break
        if sweep == max_sweeps:
            raise RuntimeError(f"Jacobi eigensolver did not converge in {max_sweeps} sweeps")
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-30:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rot_p = c * a[:, p] - s * a[:, q]
                rot_q = s * a[:, p] + c * a[:, q]
                a[:, p], a[:, q] = rot_p, rot_q
                rot_p = c * a[p, :] - s * a[q, :]
                rot_q = s * a[p, :] + c * a[q, :]
                a[p, :], a[q, :] = rot_p, rot_q
                rot_p = c * v[:, p] - s * v[:, q]
                rot_q = s * v[:, p] + c * v[:, q]
                v[:, p], v[:, q] = rot_p, rot_q
    order = np.argsort(-a.diagonal(), kind="stable")
    return a.diagonal()[order].copy(), v[:, order]


def _kmeans(x: np.ndarray, k: int, rng: np.random.Generator,
            max_iter: int = 300) -> np.ndarray:
    n = len(x)
    # k-means++ seeding
    centers = np.empty((k, x.shape[1]))
    first = int(rng.integers(n))
    centers[0] = x[first]
    chosen = {first}
    d2 = ((x - centers[0]) ** 2).sum(axis=1)
    for i in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            candidates = [j for j in range(n) if j not in chosen]
            pick = int(candidates[int(rng.integers(len(candidates)))])
        else:
            pick = int(rng.choice(n, p=d2 / total))
        centers[i] = x[pick]
        chosen.add(pick)
        d2 = np.minimum(d2, ((x - centers[i]) ** 2).sum(axis=1))
    labels = np.full(n, -1, dtype=int)
    for _step in range(max_iter):
        dists = ((x[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_labels = dists.argmin(axis=1)
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for i in range(k):
            mask = labels == i
            if mask.any():
                centers[i] = x[mask].mean(axis=0)
    return labels


def spectral(embeddings: np.ndarray, k: int, seed: int = 0,
             distance: str = "scaled", max_sweeps: int = 100) -> np.ndarray:
    """Spectral clustering into exactly ``k`` clusters.

    Cosine-affinity graph, symmetric normalization, top-k eigenvectors via
    the Jacobi solver, rows normalized and clustered by seeded k-means.
    """
    embeddings = np.asarray(embeddings, dtype=float)
    n = len(embeddings)
    if not (1 <= k <= n):
        raise ValueError(f"k must lie in [1, {n}]")
    if k == n:
        return np.arange(n, dtype=int)
    affinity = 1.0 - pairwise_distances(embeddings, distance)
    np.fill_diagonal(affinity, 0.0)
    deg = np.maximum(affinity.sum(axis=1), 1e-12)
    inv_sqrt = 1.0 / np.sqrt(deg)
    normalized = affinity * np.outer(inv_sqrt, inv_sqrt)
    _, vecs = jacobi_eigh(normalized, max_sweeps=max_sweeps)
    basis = vecs[:, :k]
    norms = np.maximum(np.linalg.norm(basis, axis=1), 1e-12)
    rows = basis / norms[:, None]
    labels = _kmeans(rows, k, np.random.default_rng(seed))
    return canonical_labels(labels)
