"""Synthetic conversation streams with known speaker labels.

Speaker prototypes are unit vectors living in a fixed low-dimensional
"signal" subspace of the raw feature space; the remaining coordinates
carry only noise. That structure is what a trained linear embedding map
can exploit: suppressing the noise complement tightens every speaker
cluster at once, including for speakers never seen in training.
"""

import math
from dataclasses import dataclass, field

import numpy as np

FRAME_SECONDS = 0.1


@dataclass
class GenConfig:
    num_speakers: int = 6
    dim: int = 16                 # raw feature dimension
    signal_dim: int = 10          # prototypes live in the first signal_dim coords
    separation: float = 1.7       # inter-speaker angle, radians
    noise_std: float = 0.16       # per-coordinate noise
    mean_turn_frames: float = 10.0
    total_frames: int = 300
    seed: int = 0
    frame_seconds: float = FRAME_SECONDS

    def __post_init__(self):
        if self.num_speakers < 1:
            raise ValueError("num_speakers must be >= 1")
        if not (0.0 < self.separation < math.pi):
            raise ValueError("separation must lie in (0, pi) radians")
        if self.signal_dim > self.dim:
            raise ValueError("signal_dim cannot exceed dim")
        if self.num_speakers > self.signal_dim:
            raise ValueError("signal_dim must be at least num_speakers")
        if 1.0 + (self.num_speakers - 1) * math.cos(self.separation) < -1e-12:
            raise ValueError(
                f"separation {self.separation} is too obtuse for "
                f"{self.num_speakers} mutually equiangular speakers")
        if self.noise_std < 0:
            raise ValueError("noise_std must be nonnegative")
        for name in ("mean_turn_frames", "total_frames", "frame_seconds"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass
class EmbeddingStream:
    """Time-ordered frames: intervals (n, 2), features (n, dim), optional labels."""

    intervals: np.ndarray
    features: np.ndarray
    labels: list | None = None

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def labeled(self) -> bool:
        return self.labels is not None


def sample_prototypes(num_speakers: int, dim: int, signal_dim: int,
                      separation: float, rng: np.random.Generator) -> np.ndarray:
    """Unit prototypes with pairwise angle exactly ``separation``.

    An equiangular frame p_i = a q_i + gamma sum_j q_j over a random
    orthonormal set {q_i} inside the signal subspace; the Gram matrix
    (1-c) I + c J is positive semidefinite iff cos(separation) is at
    least -1/(num_speakers - 1), which the config validates.
    """
    k = num_speakers
    if k > signal_dim:
        raise ValueError("signal_dim must be at least num_speakers")
    c = math.cos(separation)
    disc = 1.0 + (k - 1) * c
    if disc < -1e-12:
        raise ValueError(f"angle {separation} infeasible for {k} equiangular vectors")
    g = rng.normal(size=(signal_dim, k))
    q, _ = np.linalg.qr(g)  # k orthonormal columns
    a = math.sqrt(1.0 - c)
    gamma = (-a + math.sqrt(max(disc, 0.0))) / k
    frame = a * q + gamma * q.sum(axis=1, keepdims=True)
    protos = np.zeros((k, dim))
    protos[:, :signal_dim] = frame.T
    return protos


def _population_prototypes(num_speakers: int, dim: int, signal_dim: int,
                           separation: float, rng: np.random.Generator) -> np.ndarray:
    """Large speaker pools: pairwise cosines concentrate near cos(separation).

    Shared-plus-individual construction sqrt(c) s + sqrt(1-c) v_i; v_i are
    random unit vectors in the signal subspace orthogonal to s. Requires
    cos(separation) >= 0 but supports arbitrarily many speakers.
    """
    c = math.cos(separation)
    if c < 0:
        raise ValueError("population separation must be at most pi/2")
    shared = np.zeros(dim)
    g = rng.normal(size=signal_dim)
    shared[:signal_dim] = g / np.linalg.norm(g)
    protos = np.zeros((num_speakers, dim))
    for i in range(num_speakers):
        v = np.zeros(dim)
        v[:signal_dim] = rng.normal(size=signal_dim)
        v -= (v @ shared) * shared
        n = np.linalg.norm(v)
        while n < 1e-12:  # essentially impossible, but keep it total
            v = np.zeros(dim)
            v[:signal_dim] = rng.normal(size=signal_dim)
            v -= (v @ shared) * shared
            n = np.linalg.norm(v)
        protos[i] = math.sqrt(c) * shared + math.sqrt(1.0 - c) * (v / n)
    return protos


def _turn_labels(num_speakers: int, total_frames: int, mean_turn_frames: float,
                 rng: np.random.Generator) -> np.ndarray:
    labels = np.empty(total_frames, dtype=int)
    pos = 0
    speaker = int(rng.integers(num_speakers))
    while pos < total_frames:
        turn = int(rng.geometric(1.0 / mean_turn_frames))
        end = min(pos + turn, total_frames)
        labels[pos:end] = speaker
        pos = end
        if num_speakers > 1:
            step = int(rng.integers(1, num_speakers))
            speaker = (speaker + step) % num_speakers
    return labels


def gen_stream(config: GenConfig) -> EmbeddingStream:
    """Generate one labeled raw-feature stream from a fixed seed."""
    rng = np.random.default_rng(config.seed)
    protos = sample_prototypes(config.num_speakers, config.dim, config.signal_dim,
                               config.separation, rng)
    speaker_idx = _turn_labels(config.num_speakers, config.total_frames,
                               config.mean_turn_frames, rng)
    noise = rng.normal(0.0, config.noise_std,
                       size=(config.total_frames, config.dim))
    features = protos[speaker_idx] + noise
    # one shared grid keeps end[i] == start[i+1] bitwise
    grid = np.arange(config.total_frames + 1) * config.frame_seconds
    intervals = np.column_stack([grid[:-1], grid[1:]])
    labels = [f"spk{i}" for i in speaker_idx]
    return EmbeddingStream(intervals=intervals, features=features, labels=labels)


@dataclass
class SubsetSampler:
    """Draws fresh training subsets from a fixed speaker population.

    The population's prototypes are created once per sampler; each subset
    picks a few of them and generates a short noisy turn-taking stream, so
    consecutive subsets share speakers the way draws from one corpus do.
    """

    population_size: int = 40
    dim: int = 16
    signal_dim: int = 10
    separation: float = math.pi / 2
    noise_std: float = 0.16
    mean_turn_frames: float = 10.0
    seed: int = 0
    prototypes: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        rng = np.random.default_rng(self.seed)
        self.prototypes = _population_prototypes(self.population_size, self.dim,
                                                 self.signal_dim, self.separation, rng)

    def __call__(self, n_speakers: int, samples_per_speaker: int,
                 rng: np.random.Generator) -> tuple[np.ndarray, list]:
        """One labeled subset: (raw features, speaker labels), stream ordered."""
        chosen = rng.choice(self.population_size, size=n_speakers, replace=False)
        total = n_speakers * samples_per_speaker
        speaker_idx = _turn_labels(n_speakers, total, self.mean_turn_frames, rng)
        noise = rng.normal(0.0, self.noise_std, size=(total, self.dim))
        features = self.prototypes[chosen[speaker_idx]] + noise
        labels = [f"spk{chosen[i]}" for i in speaker_idx]
        return features, labels
