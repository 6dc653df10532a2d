"""Threshold calibration: the two distances handed from training to inference.

``l_intra`` is the smallest distance of any mis-assigned embedding from the
center it was wrongly pulled into: below it, a sample can be presumed to
belong to an existing cluster. ``l_new`` is the largest distance of any
correctly assigned embedding from its own center: when every center is
farther than that, the sample likely opens a new cluster.
"""

from dataclasses import dataclass, replace

from .matching import PosNegLabeling
from .vecmath import distance_fn


@dataclass(frozen=True)
class Thresholds:
    """Calibrated (l_intra, l_new) pair; ``None`` marks a not-yet-valid field."""

    l_intra: float | None = None
    l_new: float | None = None
    iteration: int = 0

    def __post_init__(self):
        for name in ("l_intra", "l_new"):
            v = getattr(self, name)
            if v is not None and not (0.0 <= v <= 1.0):
                raise ValueError(f"{name} must lie in [0, 1], got {v}")

    @property
    def valid(self) -> bool:
        return self.l_intra is not None and self.l_new is not None


def compute_l_intra(labeling: PosNegLabeling, kind: str = "scaled") -> float | None:
    """Minimum distance of negatives from their false centers; None if no negatives."""
    if len(labeling.neg_indices) == 0:
        return None
    dist = distance_fn(kind)
    return min(dist(labeling.neg_false_centers[k], labeling.embeddings[i])
               for k, i in enumerate(labeling.neg_indices))


def compute_l_new(labeling: PosNegLabeling, kind: str = "scaled") -> float | None:
    """Maximum distance of positives from their own centers; None if no positives."""
    if len(labeling.pos_indices) == 0:
        return None
    dist = distance_fn(kind)
    return max(dist(labeling.pos_centers[k], labeling.embeddings[i])
               for k, i in enumerate(labeling.pos_indices))


def update_thresholds(current: Thresholds, new_l_intra: float | None,
                      new_l_new: float | None, smoothing: float = 0.0) -> Thresholds:
    """Blend fresh threshold estimates into the carried pair.

    A present value replaces an invalid field directly and is otherwise
    blended as ``smoothing * old + (1 - smoothing) * new``; an absent value
    leaves the old field untouched (carry-forward).
    """
    if not (0.0 <= smoothing <= 1.0):
        raise ValueError(f"smoothing must lie in [0, 1], got {smoothing}")

    def blend(old: float | None, new: float | None) -> float | None:
        if new is None:
            return old
        if old is None:
            return new
        return smoothing * old + (1.0 - smoothing) * new

    return replace(
        current,
        l_intra=blend(current.l_intra, new_l_intra),
        l_new=blend(current.l_new, new_l_new),
        iteration=current.iteration + 1,
    )
