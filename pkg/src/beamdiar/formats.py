"""File formats: RTTM segment tracks and embedding-stream CSV.

All floats are printed with 17 significant digits so that written files
parse back to bit-identical values. RTTM stores (onset, duration); the
duration is nudged by at most a couple of ulps where necessary so that
``onset + duration`` reproduces the original segment end exactly.
"""

import csv
import io
import math
import sys
from contextlib import contextmanager

import numpy as np

from .errors import DataError
from .scoring import Segment, SegmentTrack
from .synth import EmbeddingStream


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


@contextmanager
def open_path(path, mode: str = "r"):
    """Open a file path, treating '-' as the standard stream."""
    if path == "-":
        yield sys.stdin if "r" in mode else sys.stdout
    else:
        try:
            fh = open(path, mode)
        except OSError as exc:
            raise DataError(f"cannot open {path}: {exc}") from exc
        try:
            yield fh
        finally:
            fh.close()


def _exact_duration(start: float, end: float) -> float:
    """Duration d with start + d == end exactly, when such a double exists."""
    d = end - start
    if start + d == end:
        return d
    for _ in range(4):
        d = math.nextafter(d, math.inf if start + d < end else -math.inf)
        if start + d == end:
            return d
    return end - start


def write_rttm(path, tracks: dict[str, SegmentTrack]) -> None:
    """Write `SPEAKER <file> 1 <tbeg> <tdur> <NA> <NA> <name> <NA> <NA>` lines."""
    with open_path(path, "w") as fh:
        for file_id, track in tracks.items():
            for seg in track:
                dur = _exact_duration(seg.start, seg.end)
                fh.write(f"SPEAKER {file_id} 1 {_fmt(seg.start)} {_fmt(dur)} "
                         f"<NA> <NA> {seg.speaker} <NA> <NA>\n")


def read_rttm(path) -> dict[str, SegmentTrack]:
    """Parse an RTTM file into per-recording segment tracks."""
    tracks: dict[str, SegmentTrack] = {}
    with open_path(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 10 or parts[0] != "SPEAKER":
                raise DataError(f"malformed RTTM line {lineno}: {line!r}")
            try:
                tbeg = float(parts[3])
                tdur = float(parts[4])
            except ValueError:
                raise DataError(f"malformed RTTM line {lineno}: bad numbers in {line!r}")
            if tdur <= 0:
                raise DataError(f"malformed RTTM line {lineno}: nonpositive duration")
            tracks.setdefault(parts[1], []).append(
                Segment(start=tbeg, end=tbeg + tdur, speaker=parts[7]))
    return tracks


def write_stream(path, stream: EmbeddingStream) -> None:
    """Write the `t_start,t_end[,speaker],f_0..f_{D-1}` CSV."""
    dim = stream.features.shape[1]
    cols = ["t_start", "t_end"]
    if stream.labeled:
        cols.append("speaker")
    cols += [f"f_{i}" for i in range(dim)]
    with open_path(path, "w") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(cols)
        for i in range(len(stream)):
            row = [_fmt(stream.intervals[i, 0]), _fmt(stream.intervals[i, 1])]
            if stream.labeled:
                row.append(stream.labels[i])
            row += [_fmt(v) for v in stream.features[i]]
            writer.writerow(row)


def read_stream(path) -> EmbeddingStream:
    """Parse a stream CSV; the speaker column may be absent or empty."""
    with open_path(path) as fh:
        text = fh.read()
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise DataError("empty stream file (missing header)")
    if header[:2] != ["t_start", "t_end"]:
        raise DataError(f"bad stream header: {header!r}")
    rest = header[2:]
    has_speaker = bool(rest) and rest[0] == "speaker"
    feat_cols = rest[1:] if has_speaker else rest
    if feat_cols != [f"f_{i}" for i in range(len(feat_cols))]:
        raise DataError(f"bad stream header feature columns: {header!r}")
    dim = len(feat_cols)
    if dim == 0:
        raise DataError("stream has no feature columns")

    intervals, feats, labels = [], [], []
    expected = 2 + int(has_speaker) + dim
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != expected:
            raise DataError(f"stream line {lineno}: expected {expected} fields, got {len(row)}")
        try:
            t0, t1 = float(row[0]), float(row[1])
            vals = [float(v) for v in row[2 + int(has_speaker):]]
        except ValueError:
            raise DataError(f"stream line {lineno}: bad number")
        if not t0 < t1:
            raise DataError(f"stream line {lineno}: interval start must precede end")
        if intervals and t0 < intervals[-1][1]:
            raise DataError(f"stream line {lineno}: intervals must be time-ordered "
                            "and non-overlapping")
        intervals.append((t0, t1))
        feats.append(vals)
        labels.append(row[2] if has_speaker else "")

    features = np.array(feats, dtype=float).reshape(len(feats), dim)
    out_labels = None
    if has_speaker and any(labels):
        if not all(labels):
            raise DataError("stream mixes labeled and unlabeled rows")
        out_labels = labels
    return EmbeddingStream(
        intervals=np.array(intervals, dtype=float).reshape(len(intervals), 2),
        features=features,
        labels=out_labels,
    )
