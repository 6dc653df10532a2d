import math

import numpy as np
import pytest

from beamdiar.beam import (
    TbscConfig,
    TruncatedBeamClusterer,
    cluster_stream,
    leader_follower,
    matched_lfc_tau,
    score_existing,
    score_new,
)
from beamdiar.calibration import Thresholds
from beamdiar.offline import canonical_labels
from beamdiar.vecmath import centroid_add


def replay_score(embeddings, labels, cfg):
    """Cumulative score of a fixed labeling, recomputed from scratch."""
    centroids = None
    counts = None
    score = 0.0
    last = -1
    for e, label in zip(np.asarray(embeddings, float), labels):
        k = 0 if centroids is None else len(centroids)
        if label == k:
            score += score_new(e, centroids, cfg)
            centroids = e[None].copy() if k == 0 else np.vstack([centroids, e[None]])
            counts = np.array([1]) if k == 0 else np.append(counts, 1)
        elif 0 <= label < k:
            score += float(score_existing(e, centroids, last, cfg)[label])
            c, n = centroid_add(centroids[label], int(counts[label]), e)
            centroids[label] = c
            counts[label] = n
        else:
            raise AssertionError(f"non-canonical label {label} after {k} clusters")
        last = label
    return score


def exhaustive_best(embeddings, cfg):
    """Max cumulative score over every canonical labeling, by enumeration."""
    embeddings = np.asarray(embeddings, dtype=float)
    n = len(embeddings)
    best_score = -math.inf
    best_labels = None
    stack = [((), None, None, 0.0, -1)]
    while stack:
        labels, centroids, counts, score, last = stack.pop()
        t = len(labels)
        if t == n:
            if score > best_score + 1e-15 or (
                abs(score - best_score) <= 1e-15 and (best_labels is None or labels < best_labels)
            ):
                best_score, best_labels = score, labels
            continue
        e = embeddings[t]
        k = 0 if centroids is None else len(centroids)
        if k:
            ex = score_existing(e, centroids, last, cfg)
            for i in range(k):
                c, cnt = centroid_add(centroids[i], int(counts[i]), e)
                c2 = centroids.copy()
                c2[i] = c
                n2 = counts.copy()
                n2[i] = cnt
                stack.append((labels + (i,), c2, n2, score + float(ex[i]), i))
        if cfg.max_clusters is None or k < cfg.max_clusters or k == 0:
            s = score_new(e, centroids, cfg)
            c2 = e[None].copy() if k == 0 else np.vstack([centroids, e[None]])
            n2 = np.array([1]) if k == 0 else np.append(counts, 1)
            stack.append((labels + (k,), c2, n2, score + s, k))
    return best_score, best_labels


def two_cluster_stream(rng, n, sep_noise=0.05):
    protos = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    which = rng.integers(0, 2, size=n)
    return protos[which] + rng.normal(0, sep_noise, size=(n, 3)), which


def random_stream(rng, n, n_protos=3, noise=0.3, dim=4):
    protos = rng.normal(size=(n_protos, dim))
    protos /= np.linalg.norm(protos, axis=1)[:, None]
    which = rng.integers(0, n_protos, size=n)
    return protos[which] + rng.normal(0, noise, size=(n, dim))


def test_score_new_empty_clusters():
    cfg = TbscConfig()
    assert score_new(np.array([1.0, 0.0]), None, cfg) == 0.0


def test_score_new_threshold_branches():
    cfg = TbscConfig(thresholds=Thresholds(l_intra=0.2, l_new=0.5))
    e = np.array([1.0, 0.0])
    # centroid at scaled distance 0.8 -> min >= l_new -> flat new-cluster score
    far = np.array([[1.0 - 2 * 0.8, -math.sqrt(1 - (1 - 1.6) ** 2)]])
    assert score_new(e, far, cfg) == 0.0
    # centroid at scaled distance 0.3 -> log branch
    near = np.array([[1.0 - 2 * 0.3, math.sqrt(1 - 0.16)]])
    assert score_new(e, near, cfg) == pytest.approx(math.log(0.3), abs=1e-12)


def test_score_existing_branches():
    e = np.array([1.0, 0.0])

    def centroid_at(d):
        return np.array([[1.0 - 2 * d, math.sqrt(1 - (1 - 2 * d) ** 2)]])

    cfg = TbscConfig(thresholds=Thresholds(l_intra=0.2, l_new=0.5), continuity_bonus=0.2)
    s = score_existing(e, centroid_at(0.1), prev_label=0, cfg=cfg)
    assert s[0] == pytest.approx(0.2, abs=1e-12)  # flat + continuity bonus
    s = score_existing(e, centroid_at(0.4), prev_label=-1, cfg=cfg)
    assert s[0] == pytest.approx(math.log(0.6), abs=1e-12)
    cfg_off = TbscConfig(use_thresholds=False, continuity_bonus=0.0)
    s = score_existing(e, e[None].copy(), prev_label=-1, cfg=cfg_off)
    assert s[0] == pytest.approx(0.0, abs=1e-12)  # log(1 - 0)


def test_first_frame_forced_new_cluster():
    clusterer = TruncatedBeamClusterer(TbscConfig(beam_size=4, latency=0))
    out = clusterer.step(np.array([0.3, 0.7]))
    assert out == (0, 0)
    assert clusterer.best().num_clusters == 1


def test_emission_latency_exact():
    rng = np.random.default_rng(50)
    for latency in (0, 1, 3, 7):
        cfg = TbscConfig(beam_size=4, latency=latency)
        clusterer = TruncatedBeamClusterer(cfg)
        stream = random_stream(rng, 12)
        for t, e in enumerate(stream):
            out = clusterer.step(e)
            if t >= latency:
                assert out is not None and out[0] == t - latency
            else:
                assert out is None
        tail = clusterer.flush()
        assert len(tail) == min(latency, len(stream))
        frames = [f for f, _ in clusterer.emitted]
        assert frames == list(range(len(stream)))


def test_flush_tail_frames():
    rng = np.random.default_rng(51)
    cfg = TbscConfig(beam_size=2, latency=3)
    clusterer = TruncatedBeamClusterer(cfg)
    for e in random_stream(rng, 10):
        clusterer.step(e)
    tail = clusterer.flush()
    assert [f for f, _ in tail] == [7, 8, 9]


def test_flush_twice_rejected():
    clusterer = TruncatedBeamClusterer(TbscConfig())
    clusterer.step(np.array([1.0, 0.0]))
    clusterer.flush()
    with pytest.raises(RuntimeError):
        clusterer.flush()
    with pytest.raises(RuntimeError):
        clusterer.step(np.array([1.0, 0.0]))


def test_labels_dense_first_appearance():
    rng = np.random.default_rng(52)
    for _ in range(20):
        stream = random_stream(rng, int(rng.integers(5, 25)))
        cfg = TbscConfig(beam_size=int(rng.integers(1, 6)), latency=int(rng.integers(0, 5)))
        labels = cluster_stream(stream, cfg)
        assert np.array_equal(labels, canonical_labels(labels))


def test_peak_hypotheses_bounded():
    rng = np.random.default_rng(53)
    for beam in (1, 2, 5):
        cfg = TbscConfig(beam_size=beam, latency=2)
        clusterer = TruncatedBeamClusterer(cfg)
        for e in random_stream(rng, 30):
            clusterer.step(e)
            assert len(clusterer._hyps) <= beam
        assert clusterer.peak_hypotheses <= beam


def test_live_hypotheses_stay_prefix_consistent():
    # emitted frames never live in windows, so agreement shows up as: all
    # windows share a length, stay pairwise distinct, and emissions are
    # append-only in frame order
    rng = np.random.default_rng(60)
    cfg = TbscConfig(beam_size=6, latency=4)
    clusterer = TruncatedBeamClusterer(cfg)
    for t, e in enumerate(random_stream(rng, 25)):
        clusterer.step(e)
        windows = [h.window for h in clusterer._hyps]
        assert len({len(w) for w in windows}) == 1
        assert len(set(windows)) == len(windows)
        assert [f for f, _ in clusterer.emitted] == list(range(max(0, t - 3)))


def test_bookkeeping_score_matches_replay():
    rng = np.random.default_rng(54)
    for _ in range(15):
        stream = random_stream(rng, 12)
        cfg = TbscConfig(
            beam_size=int(rng.integers(1, 8)),
            latency=int(rng.integers(0, 6)),
            thresholds=Thresholds(l_intra=0.2, l_new=0.6) if rng.uniform() < 0.5 else Thresholds(),
            continuity_bonus=float(rng.choice([0.0, 0.2])),
        )
        clusterer = TruncatedBeamClusterer(cfg)
        for e in stream:
            clusterer.step(e)
        final_score = clusterer.best().score
        clusterer.flush()
        labels = np.empty(len(stream), dtype=int)
        for f, lab in clusterer.emitted:
            labels[f] = lab
        assert replay_score(stream, labels, cfg) == pytest.approx(final_score, abs=1e-9)


def test_beam_monotone_and_exhaustive_at_full_width():
    rng = np.random.default_rng(55)
    bell6 = 203
    for _ in range(10):
        stream = random_stream(rng, 6, noise=0.4)
        cfg_base = dict(latency=6, thresholds=Thresholds(l_intra=0.15, l_new=0.55),
                        continuity_bonus=0.2)
        best_by_beam = []
        for beam in (1, 2, 8, 32, bell6):
            cfg = TbscConfig(beam_size=beam, **cfg_base)
            labels = cluster_stream(stream, cfg)
            best_by_beam.append(replay_score(stream, labels, cfg))
        for a, b in zip(best_by_beam, best_by_beam[1:]):
            assert b >= a - 1e-9
        opt_score, _ = exhaustive_best(stream, TbscConfig(beam_size=bell6, **cfg_base))
        assert best_by_beam[-1] == pytest.approx(opt_score, abs=1e-9)


def test_well_separated_six_frames_match_enumeration():
    rng = np.random.default_rng(56)
    stream, _ = two_cluster_stream(rng, 6)
    cfg = TbscConfig(beam_size=64, latency=6)
    labels = cluster_stream(stream, cfg)
    opt_score, opt_labels = exhaustive_best(stream, cfg)
    assert replay_score(stream, labels, cfg) == pytest.approx(opt_score, abs=1e-9)
    assert tuple(labels) == opt_labels


def test_degenerate_config_equals_leader_follower():
    rng = np.random.default_rng(57)
    cfg = TbscConfig(beam_size=1, latency=0, use_thresholds=False, continuity_bonus=0.0)
    tau = matched_lfc_tau()
    for _ in range(30):
        stream = random_stream(rng, int(rng.integers(5, 40)))
        assert np.array_equal(cluster_stream(stream, cfg), leader_follower(stream, tau))


def test_max_clusters_cap():
    rng = np.random.default_rng(58)
    stream = random_stream(rng, 30, n_protos=6, noise=0.1)
    labels = cluster_stream(stream, TbscConfig(beam_size=4, latency=2, max_clusters=3))
    assert labels.max() <= 2


def test_partition_invariant_under_prototype_swap():
    rng = np.random.default_rng(59)
    protos = np.array([[1.0, 0.0], [0.0, 1.0]])
    idx = rng.integers(0, 2, size=12)
    noise = rng.normal(0, 0.05, size=(12, 2))
    stream_a = protos[idx] + noise
    stream_b = protos[1 - idx] + noise[:, ::-1]  # mirrored geometry, same distances
    cfg = TbscConfig(beam_size=4, latency=3)
    la = cluster_stream(stream_a, cfg)
    lb = cluster_stream(stream_b, cfg)
    assert np.array_equal(la, lb)  # canonical labels hide the identity swap


def test_antipodal_merge_candidate_does_not_crash_the_beam():
    # a hypothesis assigning exact antipodes to one cluster would zero its
    # centroid; that child is dropped and the beam keeps running
    stream = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [1.0, 0.0]])
    for beam_size in (1, 2, 8):
        labels = cluster_stream(stream, TbscConfig(beam_size=beam_size, latency=2))
        assert len(labels) == 4


def test_zero_embedding_rejected():
    clusterer = TruncatedBeamClusterer(TbscConfig())
    with pytest.raises(ValueError, match="degenerate vector"):
        clusterer.step(np.zeros(3))
    with pytest.raises(ValueError, match="degenerate vector"):
        leader_follower(np.zeros((2, 3)), tau=0.5)


def test_raw_distance_kind_end_to_end():
    rng = np.random.default_rng(61)
    stream = random_stream(rng, 20)
    cfg = TbscConfig(beam_size=4, latency=3, distance="raw",
                     thresholds=Thresholds(l_intra=0.2, l_new=0.9))
    labels = cluster_stream(stream, cfg)
    assert np.array_equal(labels, canonical_labels(labels))
    lfc = leader_follower(stream, tau=0.5, distance="raw")
    assert len(lfc) == 20


def test_leader_follower_trivial_cases():
    same = np.tile(np.array([0.5, 0.5]), (8, 1))
    assert np.array_equal(leader_follower(same, tau=0.5), np.zeros(8, dtype=int))
    groups = np.array([[1.0, 0.0], [-1.0, 0.0], [1.0, 0.0], [-1.0, 0.0]])
    labels = leader_follower(groups, tau=0.5)
    assert np.array_equal(labels, [0, 1, 0, 1])
