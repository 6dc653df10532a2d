"""Online speaker-stream clustering: truncated beam search over cluster
assignments plus clustering-guided training of the embedding map."""

from .beam import (
    TbscConfig,
    TruncatedBeamClusterer,
    cluster_stream,
    leader_follower,
    matched_lfc_tau,
    score_existing,
    score_new,
)
from .calibration import Thresholds, compute_l_intra, compute_l_new, update_thresholds
from .errors import DataError
from .matching import (
    PosNegLabeling,
    WeightMatrix,
    build_weights,
    cluster_centers,
    clustering_error,
    label_pos_neg,
    match_labeling,
    max_weight_matching,
)
from .model import EmbeddingModel, forward, forward_batch, init_model, load_checkpoint, save_checkpoint
from .offline import ahc, canonical_labels, jacobi_eigh, spectral
from .scoring import DerBreakdown, Segment, der, labels_to_segments
from .synth import EmbeddingStream, GenConfig, SubsetSampler, gen_stream
from .training import TrainConfig, TrainReport, cgrt_train, loss_nega, loss_posi
from .vecmath import centroid_add, cosine_distance, raw_cosine_distance

__version__ = "0.1.0"

__all__ = [
    "DataError",
    "DerBreakdown",
    "EmbeddingModel",
    "EmbeddingStream",
    "GenConfig",
    "PosNegLabeling",
    "Segment",
    "SubsetSampler",
    "TbscConfig",
    "Thresholds",
    "TrainConfig",
    "TrainReport",
    "TruncatedBeamClusterer",
    "WeightMatrix",
    "ahc",
    "build_weights",
    "canonical_labels",
    "centroid_add",
    "cgrt_train",
    "cluster_centers",
    "cluster_stream",
    "clustering_error",
    "compute_l_intra",
    "compute_l_new",
    "cosine_distance",
    "der",
    "forward",
    "forward_batch",
    "gen_stream",
    "init_model",
    "jacobi_eigh",
    "label_pos_neg",
    "labels_to_segments",
    "leader_follower",
    "load_checkpoint",
    "loss_nega",
    "loss_posi",
    "match_labeling",
    "matched_lfc_tau",
    "max_weight_matching",
    "raw_cosine_distance",
    "save_checkpoint",
    "score_existing",
    "score_new",
    "spectral",
    "update_thresholds",
]
