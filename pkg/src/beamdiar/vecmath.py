"""Vector metric primitives: cosine distances and incremental centroids.

Every distance in this package is the rescaled cosine distance
``(1 - cos(a, b)) / 2``, which lives in [0, 1] so that log(1 - d) style
penalties stay defined. The unrescaled ``1 - cos`` variant is kept behind
the "raw" kind for comparison runs; it is clamped into [eps, 1 - eps].
"""

import numpy as np

RAW_CLAMP_EPS = 1e-6

_DISTANCE_KINDS = ("scaled", "raw")


def _checked_cosine(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ValueError("degenerate vector (zero norm)")
    cos = float(np.dot(a, b) / (na * nb))
    # rounding can push |cos| a few ulp past 1
    return min(1.0, max(-1.0, cos))


def cosine_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Rescaled cosine distance (1 - cos)/2 in [0, 1]."""
    return (1.0 - _checked_cosine(a, b)) / 2.0


def raw_cosine_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Plain 1 - cos, clamped into [eps, 1 - eps] to keep log(1 - d) finite."""
    d = 1.0 - _checked_cosine(a, b)
    return min(1.0 - RAW_CLAMP_EPS, max(RAW_CLAMP_EPS, d))


def distance_fn(kind: str):
    """Return the pairwise distance callable for a configured kind."""
    if kind == "scaled":
        return cosine_distance
    if kind == "raw":
        return raw_cosine_distance
    raise ValueError(f"unknown distance kind {kind!r}; expected one of {_DISTANCE_KINDS}")


def distances_to(e: np.ndarray, centers: np.ndarray, kind: str = "scaled") -> np.ndarray:
    """Distances from one vector to each row of ``centers``.

    Vectorized equivalent of ``[cosine_distance(e, c) for c in centers]``.
    """
    e = np.asarray(e, dtype=float)
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    if centers.shape[1] != e.shape[0]:
        raise ValueError(f"dimension mismatch: {centers.shape[1]} vs {e.shape[0]}")
    ne = np.linalg.norm(e)
    nc = np.linalg.norm(centers, axis=1)
    if ne == 0.0 or np.any(nc == 0.0):
        raise ValueError("degenerate vector (zero norm)")
    cos = np.clip((centers @ e) / (nc * ne), -1.0, 1.0)
    if kind == "scaled":
        return (1.0 - cos) / 2.0
    if kind == "raw":
        return np.clip(1.0 - cos, RAW_CLAMP_EPS, 1.0 - RAW_CLAMP_EPS)
    raise ValueError(f"unknown distance kind {kind!r}; expected one of {_DISTANCE_KINDS}")


def paired_distances(x: np.ndarray, y: np.ndarray, kind: str = "scaled") -> np.ndarray:
    """Distance between corresponding rows of two equally shaped matrices."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    if x.shape != y.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {y.shape}")
    nx = np.linalg.norm(x, axis=1)
    ny = np.linalg.norm(y, axis=1)
    if np.any(nx == 0.0) or np.any(ny == 0.0):
        raise ValueError("degenerate vector (zero norm)")
    cos = np.clip(np.einsum("ij,ij->i", x, y) / (nx * ny), -1.0, 1.0)
    if kind == "scaled":
        return (1.0 - cos) / 2.0
    if kind == "raw":
        return np.clip(1.0 - cos, RAW_CLAMP_EPS, 1.0 - RAW_CLAMP_EPS)
    raise ValueError(f"unknown distance kind {kind!r}; expected one of {_DISTANCE_KINDS}")


def pairwise_distances(x: np.ndarray, kind: str = "scaled") -> np.ndarray:
    """Full symmetric distance matrix over the rows of ``x``."""
    x = np.asarray(x, dtype=float)
    norms = np.linalg.norm(x, axis=1)
    if np.any(norms == 0.0):
        raise ValueError("degenerate vector (zero norm)")
    cos = np.clip((x @ x.T) / np.outer(norms, norms), -1.0, 1.0)
    if kind == "scaled":
        d = (1.0 - cos) / 2.0
    elif kind == "raw":
        d = np.clip(1.0 - cos, RAW_CLAMP_EPS, 1.0 - RAW_CLAMP_EPS)
    else:
        raise ValueError(f"unknown distance kind {kind!r}; expected one of {_DISTANCE_KINDS}")
    np.fill_diagonal(d, 0.0 if kind == "scaled" else RAW_CLAMP_EPS)
    return d


def centroid_add(center: np.ndarray, count: int, e: np.ndarray) -> tuple[np.ndarray, int]:
    """Fold one more member into a running arithmetic mean.

    Returns the new (center, count). The mean is deliberately not
    renormalized: cosine distance is scale invariant, so renormalization
    would change nothing downstream.
    """
    e = np.asarray(e, dtype=float)
    if count < 0:
        raise ValueError("count must be nonnegative")
    if count == 0:
        return e.copy(), 1
    center = np.asarray(center, dtype=float)
    if center.shape != e.shape:
        raise ValueError(f"dimension mismatch: {center.shape} vs {e.shape}")
    return (center * count + e) / (count + 1), count + 1
