"""Trainable embedding map: unit-normalized affine projection.

The map ``e = normalize(W x + b)`` is the desk-scale stand-in for a deep
speaker-embedding extractor. It keeps every gradient hand-derivable while
still being able to learn which directions of the raw feature space carry
speaker identity and which carry noise.
"""

import math
from dataclasses import dataclass

import numpy as np

from .calibration import Thresholds
from .errors import DataError

CHECKPOINT_HEADER = "cgrt-checkpoint v1"


@dataclass
class EmbeddingModel:
    weight: np.ndarray   # (d_out, d_in)
    bias: np.ndarray     # (d_out,)

    def __post_init__(self):
        self.weight = np.asarray(self.weight, dtype=float)
        self.bias = np.asarray(self.bias, dtype=float)
        if self.weight.ndim != 2 or self.bias.shape != (self.weight.shape[0],):
            raise ValueError(f"inconsistent shapes: W {self.weight.shape}, b {self.bias.shape}")
        if not (np.all(np.isfinite(self.weight)) and np.all(np.isfinite(self.bias))):
            raise ValueError("model parameters must be finite")

    @property
    def d_in(self) -> int:
        return self.weight.shape[1]

    @property
    def d_out(self) -> int:
        return self.weight.shape[0]

    def copy(self) -> "EmbeddingModel":
        return EmbeddingModel(self.weight.copy(), self.bias.copy())


def init_model(d_in: int, d_out: int, rng: np.random.Generator) -> EmbeddingModel:
    """Random orthonormal projection (rows of W orthonormal), zero bias.

    On reasonably separated data this behaves like a weak pre-trained
    extractor: it preserves cosine geometry up to the projection.
    """
    if d_out > d_in:
        raise ValueError(f"d_out {d_out} larger than d_in {d_in}")
    g = rng.normal(size=(d_in, d_out))
    q, _ = np.linalg.qr(g)
    return EmbeddingModel(weight=q.T.copy(), bias=np.zeros(d_out))


def forward(model: EmbeddingModel, x: np.ndarray) -> np.ndarray:
    """Unit-norm embedding of a single raw feature vector."""
    x = np.asarray(x, dtype=float)
    if x.shape != (model.d_in,):
        raise ValueError(f"input dimension {x.shape} does not match model d_in {model.d_in}")
    u = model.weight @ x + model.bias
    n = np.linalg.norm(u)
    if n == 0.0:
        raise ValueError("degenerate embedding (zero pre-activation)")
    return u / n


def forward_batch(model: EmbeddingModel, x: np.ndarray) -> np.ndarray:
    """Unit-norm embeddings for each row of ``x``."""
    x = np.asarray(x, dtype=float)
    u = x @ model.weight.T + model.bias
    n = np.linalg.norm(u, axis=1)
    if np.any(n == 0.0):
        raise ValueError("degenerate embedding (zero pre-activation)")
    return u / n[:, None]


def _fmt(v: float) -> str:
    return format(v, ".17g")


def save_checkpoint(path, model: EmbeddingModel, thresholds: Thresholds) -> None:
    """Write the textual checkpoint: header, dims, W rows, bias, thresholds."""
    lines = [CHECKPOINT_HEADER, f"dims {model.d_out} {model.d_in}"]
    for row in model.weight:
        lines.append(" ".join(_fmt(v) for v in row))
    lines.append(" ".join(_fmt(v) for v in model.bias))
    lines.append(f"l_intra {_fmt(thresholds.l_intra) if thresholds.l_intra is not None else 'nan'}")
    lines.append(f"l_new {_fmt(thresholds.l_new) if thresholds.l_new is not None else 'nan'}")
    lines.append(f"iteration {thresholds.iteration}")
    text = "\n".join(lines) + "\n"
    if hasattr(path, "write"):
        path.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def load_checkpoint(path) -> tuple[EmbeddingModel, Thresholds]:
    if hasattr(path, "read"):
        text = path.read()
    else:
        try:
            with open(path) as fh:
                text = fh.read()
        except OSError as exc:
            raise DataError(f"cannot open checkpoint {path}: {exc}") from exc
    lines = text.splitlines()
    if not lines or lines[0] != CHECKPOINT_HEADER:
        raise DataError(f"not a checkpoint file (expected header {CHECKPOINT_HEADER!r})")
    try:
        tag, d_out_s, d_in_s = lines[1].split()
        if tag != "dims":
            raise ValueError
        d_out, d_in = int(d_out_s), int(d_in_s)
        rows = [[float(t) for t in lines[2 + i].split()] for i in range(d_out)]
        weight = np.array(rows, dtype=float)
        bias = np.array([float(t) for t in lines[2 + d_out].split()], dtype=float)
        fields = {}
        for line in lines[3 + d_out:3 + d_out + 3]:
            key, val = line.split()
            fields[key] = val
        l_intra = float(fields["l_intra"])
        l_new = float(fields["l_new"])
        iteration = int(fields["iteration"])
    except (ValueError, IndexError, KeyError) as exc:
        raise DataError(f"malformed checkpoint: {exc}") from exc
    if weight.shape != (d_out, d_in) or bias.shape != (d_out,):
        raise DataError("checkpoint dims do not match parameter payload")
    thresholds = Thresholds(
        l_intra=None if math.isnan(l_intra) else l_intra,
        l_new=None if math.isnan(l_new) else l_new,
        iteration=iteration,
    )
    try:
        return EmbeddingModel(weight=weight, bias=bias), thresholds
    except ValueError as exc:
        raise DataError(f"malformed checkpoint: {exc}") from exc
