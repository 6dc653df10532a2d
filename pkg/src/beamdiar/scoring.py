"""Diarization error rate with collars, plus frame/segment conversions.

Scoring is frame based at 10 ms resolution: each frame's active reference
and hypothesis speaker sets are compared after an optimal one-to-one
speaker mapping (maximum overlap duration). Frames whose midpoint falls
within +/- collar of any reference segment boundary are excluded from
scoring. DER = (miss + false alarm + confusion) / total reference speech.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .matching import max_weight_matching

RESOLUTION = 0.01  # scoring frame, seconds
MAX_SPEAKERS = 60  # bitmask packing limit per track


@dataclass(frozen=True)
class Segment:
    start: float
    end: float
    speaker: str

    def __post_init__(self):
        if not self.start < self.end:
            raise ValueError(f"segment start must precede end: ({self.start}, {self.end})")


SegmentTrack = list  # list[Segment], one recording


@dataclass
class DerBreakdown:
    miss: float
    false_alarm: float
    confusion: float
    scored: float       # total reference speech inside the scored region, seconds

    @property
    def der(self) -> float:
        return (self.miss + self.false_alarm + self.confusion) / self.scored

    def __add__(self, other: "DerBreakdown") -> "DerBreakdown":
        return DerBreakdown(
            miss=self.miss + other.miss,
            false_alarm=self.false_alarm + other.false_alarm,
            confusion=self.confusion + other.confusion,
            scored=self.scored + other.scored,
        )


def _speaker_bits(track: SegmentTrack) -> dict[str, int]:
    order: dict[str, int] = {}
    for seg in track:
        if seg.speaker not in order:
            order[seg.speaker] = len(order)
    if len(order) > MAX_SPEAKERS:
        raise DataError(f"too many speakers in one track ({len(order)} > {MAX_SPEAKERS})")
    return order


def _activity_masks(track: SegmentTrack, bits: dict[str, int],
                    mids: np.ndarray) -> np.ndarray:
    """Per-frame bitmask of speakers active at the frame midpoint."""
    mask = np.zeros(len(mids), dtype=np.int64)
    for seg in track:
        lo = int(np.searchsorted(mids, seg.start))
        hi = int(np.searchsorted(mids, seg.end))
        mask[lo:hi] |= 1 << bits[seg.speaker]
    return mask


def _popcounts(mask: np.ndarray, n_bits: int) -> np.ndarray:
    out = np.zeros(len(mask), dtype=np.int64)
    for b in range(n_bits):
        out += (mask >> b) & 1
    return out


def der(reference: SegmentTrack, hypothesis: SegmentTrack, collar: float = 0.0,
        skip_overlap: bool = False) -> DerBreakdown:
    """Score one recording's hypothesis against its reference.

    ``collar`` excludes frames within that many seconds of any reference
    boundary; ``skip_overlap`` additionally excludes frames where the
    reference has more than one active speaker.
    """
    if collar < 0:
        raise ValueError("collar must be >= 0")
    if not reference:
        raise DataError("no scored speech (empty reference)")
    ref_bits = _speaker_bits(reference)
    hyp_bits = _speaker_bits(hypothesis)
    end = max([seg.end for seg in reference] + [seg.end for seg in hypothesis])
    n_frames = int(np.ceil(end / RESOLUTION)) + 1
    mids = (np.arange(n_frames) + 0.5) * RESOLUTION

    ref_mask = _activity_masks(reference, ref_bits, mids)
    hyp_mask = _activity_masks(hypothesis, hyp_bits, mids)

    scored = np.ones(n_frames, dtype=bool)
    if collar > 0:
        for seg in reference:
            for b in (seg.start, seg.end):
                lo = int(np.searchsorted(mids, b - collar))
                hi = int(np.searchsorted(mids, b + collar, side="right"))
                scored[lo:hi] = False
    n_ref = _popcounts(ref_mask, len(ref_bits))
    if skip_overlap:
        scored &= n_ref <= 1

    ref_s = ref_mask[scored]
    hyp_s = hyp_mask[scored]
    n_ref_s = n_ref[scored]
    n_hyp_s = _popcounts(hyp_s, len(hyp_bits))

    total_ref = float(n_ref_s.sum()) * RESOLUTION
    if total_ref <= 0:
        raise DataError("no scored speech (reference empty after collar exclusion)")

    # optimal speaker mapping on scored overlap durations
    correct = np.zeros(len(ref_s), dtype=np.int64)
    if hyp_bits:
        weights = np.zeros((len(ref_bits), len(hyp_bits)))
        for i in range(len(ref_bits)):
            ref_on = (ref_s >> i) & 1
            for j in range(len(hyp_bits)):
                weights[i, j] = float((ref_on & ((hyp_s >> j) & 1)).sum())
        mapping = max_weight_matching(weights)
        for i, j in mapping.items():
            correct += ((ref_s >> i) & 1) & ((hyp_s >> j) & 1)

    miss = np.maximum(n_ref_s - n_hyp_s, 0).sum() * RESOLUTION
    false_alarm = np.maximum(n_hyp_s - n_ref_s, 0).sum() * RESOLUTION
    confusion = (np.minimum(n_ref_s, n_hyp_s) - correct).sum() * RESOLUTION
    return DerBreakdown(miss=float(miss), false_alarm=float(false_alarm),
                        confusion=float(confusion), scored=total_ref)


def labels_to_segments(labels, frame_seconds: float = 0.1,
                       speaker_format: str = "spk{}") -> SegmentTrack:
    """Collapse maximal runs of equal frame labels into segments."""
    if frame_seconds <= 0:
        raise ValueError("frame duration must be positive")
    labels = list(labels)
    track: SegmentTrack = []
    start = 0
    for i in range(1, len(labels) + 1):
        if i == len(labels) or labels[i] != labels[start]:
            track.append(Segment(start=start * frame_seconds, end=i * frame_seconds,
                                 speaker=speaker_format.format(labels[start])))
            start = i
    return track


def segments_to_labels(track: SegmentTrack, frame_seconds: float,
                       n_frames: int) -> list:
    """Per-frame speaker by midpoint sampling; None where nobody speaks."""
    out: list = [None] * n_frames
    for seg in track:
        for i in range(n_frames):
            mid = (i + 0.5) * frame_seconds
            if seg.start <= mid < seg.end:
                out[i] = seg.speaker
    return out
