"""Command-line surface: gen, train, cluster, eval, sweep, rerun.

Every file-producing command writes a ``manifest.json`` capturing the
fully resolved configuration; ``rerun`` replays a manifest into a fresh
output directory and reproduces the data outputs byte for byte (the
wall-clock column of the sweep table is the one inherently unstable
field). Exit codes: 0 success, 1 usage errors, 2 data errors.
"""

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import click
import numpy as np

from . import beam, offline, plots
from .calibration import Thresholds, compute_l_intra, compute_l_new
from .errors import DataError
from .formats import read_rttm, read_stream, write_rttm, write_stream
from .manifest import RunManifest, load_manifest, save_manifest
from .matching import match_labeling
from .model import forward_batch, init_model, load_checkpoint, save_checkpoint
from .scoring import DerBreakdown, der, labels_to_segments
from .synth import GenConfig, SubsetSampler, gen_stream
from .training import TrainConfig, cgrt_train

FRAME_SECONDS = 0.1


def _parse_range(text: str) -> tuple[int, int]:
    if ".." in text:
        lo, hi = text.split("..", 1)
    else:
        lo = hi = text
    try:
        lo_i, hi_i = int(lo), int(hi)
    except ValueError:
        raise click.UsageError(f"bad range {text!r}; expected e.g. '4..8' or '6'")
    if lo_i > hi_i:
        raise click.UsageError(f"bad range {text!r}: lower bound exceeds upper")
    return lo_i, hi_i


def _parse_list(text: str, kind):
    try:
        return [kind(t) for t in text.split(",") if t != ""]
    except ValueError:
        raise click.UsageError(f"bad list {text!r}; expected comma-separated values")


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def _ensure_out_dir(out_dir) -> Path:
    path = Path(out_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _finish(command: str, cfg: dict, out_dir: Path, outputs: list, t0: float) -> None:
    manifest = RunManifest(
        command=command,
        config=cfg,
        seed=cfg.get("seed"),
        outputs=[str(p) for p in outputs],
        wall_clock_s=time.perf_counter() - t0,
    )
    save_manifest(out_dir / "manifest.json", manifest)


def _abs(path: str | None) -> str | None:
    if path is None or path == "-":
        return path
    return str(Path(path).resolve())


# ---------------------------------------------------------------- gen ----


def run_gen(cfg: dict, out_dir: Path | None, to_stdout: bool = False) -> list:
    gen_cfg = GenConfig(
        num_speakers=cfg["speakers"],
        dim=cfg["dim"],
        signal_dim=cfg["signal_dim"],
        separation=cfg["separation"],
        noise_std=cfg["noise"],
        mean_turn_frames=cfg["turn_frames"],
        total_frames=cfg["frames"],
        seed=cfg["seed"],
        frame_seconds=cfg["frame_seconds"],
    )
    stream = gen_stream(gen_cfg)
    labels = stream.labels
    if not cfg["labeled"]:
        stream.labels = None
    outputs = []
    if out_dir is not None:
        stream_path = out_dir / "stream.csv"
        write_stream(stream_path, stream)
        outputs.append(stream_path)
        if cfg["labeled"]:
            ref = labels_to_segments([int(s[3:]) for s in labels], cfg["frame_seconds"])
            ref_path = out_dir / "ref.rttm"
            write_rttm(ref_path, {cfg["file_id"]: ref})
            outputs.append(ref_path)
    if to_stdout:
        write_stream("-", stream)
    return outputs


@click.group()
@click.version_option(package_name="beamdiar")
def cli():
    """Online speaker-stream clustering: beam-search inference plus
    clustering-guided training."""


@cli.command()
@click.option("--out-dir", default=None, help="Directory for stream.csv / ref.rttm / manifest.json.")
@click.option("--stdout", "to_stdout", is_flag=True, help="Also write the stream CSV to stdout.")
@click.option("--speakers", default=6, show_default=True)
@click.option("--dim", default=16, show_default=True)
@click.option("--signal-dim", default=10, show_default=True)
@click.option("--separation", default=1.7, show_default=True, help="Inter-speaker angle, radians.")
@click.option("--noise", default=0.16, show_default=True)
@click.option("--turn-frames", default=10.0, show_default=True, help="Mean turn length, frames.")
@click.option("--frames", default=300, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--unlabeled", is_flag=True, help="Omit the speaker column (inference input).")
@click.option("--file-id", default="synthetic", show_default=True)
def gen(out_dir, to_stdout, speakers, dim, signal_dim, separation, noise, turn_frames,
        frames, seed, unlabeled, file_id):
    """Generate a synthetic labeled stream and its reference RTTM."""
    if out_dir is None and not to_stdout:
        raise click.UsageError("nothing to do: pass --out-dir and/or --stdout")
    t0 = time.perf_counter()
    cfg = {
        "speakers": speakers, "dim": dim, "signal_dim": signal_dim,
        "separation": separation, "noise": noise, "turn_frames": turn_frames,
        "frames": frames, "seed": seed, "labeled": not unlabeled,
        "file_id": file_id, "frame_seconds": FRAME_SECONDS,
    }
    try:
        out = _ensure_out_dir(out_dir) if out_dir is not None else None
        outputs = run_gen(cfg, out, to_stdout)
    except ValueError as exc:
        raise click.UsageError(str(exc))
    if out is not None:
        _finish("gen", cfg, out, outputs, t0)


# -------------------------------------------------------------- train ----


def run_train(cfg: dict, out_dir: Path) -> list:
    seed = cfg["seed"]
    if cfg["streams"]:
        loaded = [read_stream(p) for p in cfg["streams"]]
        for path, s in zip(cfg["streams"], loaded):
            if not s.labeled:
                raise click.UsageError(f"training requires labeled streams; {path} has no speakers")
        dims = {s.features.shape[1] for s in loaded}
        if len(dims) != 1:
            raise DataError(f"streams disagree on feature dimension: {sorted(dims)}")
        d_in = dims.pop()

        def generator(n_speakers, samples_per_speaker, rng):
            s = loaded[int(rng.integers(len(loaded)))]
            return s.features, list(s.labels)
    else:
        sampler = SubsetSampler(
            population_size=cfg["population"],
            dim=cfg["dim"],
            signal_dim=cfg["signal_dim"],
            separation=cfg["separation"],
            noise_std=cfg["noise"],
            mean_turn_frames=cfg["turn_frames"],
            seed=seed,
        )
        generator = sampler
        d_in = cfg["dim"]

    model0 = init_model(d_in, min(cfg["proj_dim"], d_in), np.random.default_rng(seed))
    train_cfg = TrainConfig(
        iterations=cfg["iters"],
        speaker_range=tuple(cfg["speakers"]),
        samples_per_speaker=cfg["samples_per_speaker"],
        learning_rate=cfg["lr"],
        momentum=cfg["momentum"],
        smoothing=cfg["alpha"],
        warmup_clusterer=cfg["warmup"],
        warmup_iterations=cfg["warmup_iters"],
        ahc_threshold=cfg["ahc_threshold"],
        continuity_bonus=cfg["continuity_bonus"],
        seed=seed,
        distance=cfg["distance"],
        default_margin=cfg["margin"],
        use_previous_thresholds=cfg["previous_thresholds"],
    )
    model, thresholds, report = cgrt_train(model0, generator, train_cfg)

    ckpt_path = out_dir / "checkpoint.txt"
    save_checkpoint(ckpt_path, model, thresholds)
    report_path = out_dir / "report.csv"
    report_path.write_text(report.to_csv())
    outputs = [ckpt_path, report_path]
    if cfg["plot"] and report.records:
        fig_path = out_dir / "train_curves.png"
        plots.save_train_curves(report.records, fig_path)
        outputs.append(fig_path)
    return outputs


@cli.command()
@click.option("--out-dir", required=True)
@click.option("--stream", "streams", multiple=True,
              help="Labeled stream CSV (repeatable); default is synthetic sampling.")
@click.option("--iters", default=200, show_default=True)
@click.option("--speakers", default="4..8", show_default=True,
              help="Per-iteration speaker count range, e.g. 4..8.")
@click.option("--samples-per-speaker", default=20, show_default=True)
@click.option("--population", default=40, show_default=True)
@click.option("--dim", default=16, show_default=True)
@click.option("--proj-dim", default=12, show_default=True)
@click.option("--signal-dim", default=10, show_default=True)
@click.option("--separation", default=np.pi / 2, show_default=True)
@click.option("--noise", default=0.16, show_default=True)
@click.option("--turn-frames", default=10.0, show_default=True)
@click.option("--lr", default=0.05, show_default=True)
@click.option("--momentum", default=0.9, show_default=True)
@click.option("--alpha", default=0.0, show_default=True, help="Threshold smoothing.")
@click.option("--warmup", type=click.Choice(["ahc", "spectral"]), default="ahc", show_default=True)
@click.option("--warmup-iters", default=10, show_default=True)
@click.option("--ahc-threshold", default=0.5, show_default=True)
@click.option("--lambda", "continuity_bonus", default=0.2, show_default=True)
@click.option("--margin", default=0.1, show_default=True, help="Loss margin floor.")
@click.option("--distance", type=click.Choice(["scaled", "raw"]), default="scaled",
              show_default=True)
@click.option("--previous-thresholds", is_flag=True,
              help="Score losses with the previous iteration's thresholds.")
@click.option("--seed", default=0, show_default=True)
@click.option("--plot/--no-plot", default=True, show_default=True)
def train(out_dir, streams, iters, speakers, samples_per_speaker, population, dim,
          proj_dim, signal_dim, separation, noise, turn_frames, lr, momentum, alpha,
          warmup, warmup_iters, ahc_threshold, continuity_bonus, margin, distance,
          previous_thresholds, seed, plot):
    """Run clustering-guided recurrent training; write checkpoint and report."""
    t0 = time.perf_counter()
    cfg = {
        "streams": [_abs(p) for p in streams],
        "iters": iters, "speakers": list(_parse_range(speakers)),
        "samples_per_speaker": samples_per_speaker, "population": population,
        "dim": dim, "proj_dim": proj_dim, "signal_dim": signal_dim,
        "separation": separation, "noise": noise, "turn_frames": turn_frames,
        "lr": lr, "momentum": momentum, "alpha": alpha, "warmup": warmup,
        "warmup_iters": warmup_iters, "ahc_threshold": ahc_threshold,
        "continuity_bonus": continuity_bonus, "margin": margin,
        "distance": distance, "previous_thresholds": previous_thresholds,
        "seed": seed, "plot": plot,
    }
    out = _ensure_out_dir(out_dir)
    try:
        outputs = run_train(cfg, out)
    except ValueError as exc:
        raise click.UsageError(str(exc))
    _finish("train", cfg, out, outputs, t0)
    click.echo(f"wrote {', '.join(Path(p).name for p in outputs)} to {out}")


# ------------------------------------------------------------ cluster ----


def _resolve_thresholds(cfg: dict, checkpoint_thresholds: Thresholds) -> Thresholds:
    thresholds = checkpoint_thresholds
    if cfg["l_intra"] is not None:
        thresholds = replace(thresholds, l_intra=cfg["l_intra"])
    if cfg["l_new"] is not None:
        thresholds = replace(thresholds, l_new=cfg["l_new"])
    return thresholds


def _calibrate_from(path: str, model, cfg: dict, base: Thresholds) -> Thresholds:
    stream = read_stream(path)
    if not stream.labeled:
        raise click.UsageError(f"--calibrate-from needs a labeled stream; {path} has no speakers")
    e = _embed(model, stream, path)
    tbsc_cfg = beam.TbscConfig(
        beam_size=1, latency=0, thresholds=base,
        continuity_bonus=cfg["continuity_bonus"], distance=cfg["distance"],
    )
    labels = beam.cluster_stream(e, tbsc_cfg)
    labeling = match_labeling(labels.tolist(), list(stream.labels), e)
    return Thresholds(
        l_intra=compute_l_intra(labeling, cfg["distance"]),
        l_new=compute_l_new(labeling, cfg["distance"]),
        iteration=base.iteration + 1,
    )


def _embed(model, stream, source: str) -> np.ndarray:
    if model is None or len(stream) == 0:
        return stream.features
    if stream.features.shape[1] != model.d_in:
        raise DataError(
            f"{source} has {stream.features.shape[1]}-dimensional features but the "
            f"model expects {model.d_in}")
    return forward_batch(model, stream.features)


def run_cluster(cfg: dict, out_dir: Path | None, emit=None) -> list:
    stream = read_stream(cfg["stream"])
    model = None
    thresholds = Thresholds()
    if cfg["model"] is not None:
        model, thresholds = load_checkpoint(cfg["model"])
    embeddings = _embed(model, stream, cfg["stream"])
    if cfg["calibrate_from"] is not None:
        thresholds = _calibrate_from(cfg["calibrate_from"], model, cfg, thresholds)
    thresholds = _resolve_thresholds(cfg, thresholds)

    emissions: list[tuple[int, int]] = []

    def record(frame: int, label: int):
        emissions.append((frame, label))
        if emit is not None:
            emit(frame, label)

    algo = cfg["algo"]
    if len(stream) == 0:
        pass
    elif algo == "tbsc":
        tbsc_cfg = beam.TbscConfig(
            beam_size=cfg["beam"],
            latency=cfg["latency"],
            continuity_bonus=cfg["continuity_bonus"],
            thresholds=thresholds,
            use_thresholds=not cfg["no_thresholds"],
            new_cluster_score=cfg["s0"],
            intra_score=cfg["s1"],
            max_clusters=cfg["max_clusters"],
            distance=cfg["distance"],
        )
        clusterer = beam.TruncatedBeamClusterer(tbsc_cfg)
        for e in embeddings:
            out = clusterer.step(e)
            if out is not None:
                record(*out)
        for frame, label in clusterer.flush():
            record(frame, label)
        if clusterer.peak_hypotheses > cfg["beam"]:
            raise AssertionError("hypothesis queue exceeded the beam size")
    elif algo == "lfc":
        labels = beam.leader_follower(embeddings, tau=cfg["tau"], distance=cfg["distance"])
        for frame, label in enumerate(labels):
            record(frame, int(label))
    elif algo == "ahc":
        labels = offline.ahc(
            embeddings,
            threshold=None if cfg["num_clusters"] else cfg["ahc_threshold"],
            num_clusters=cfg["num_clusters"],
            distance=cfg["distance"],
        )
        for frame, label in enumerate(labels):
            record(frame, int(label))
    elif algo == "spectral":
        if not cfg["num_clusters"]:
            raise click.UsageError("--algo spectral requires --num-clusters")
        labels = offline.spectral(embeddings, cfg["num_clusters"],
                                  seed=cfg["seed"], distance=cfg["distance"])
        for frame, label in enumerate(labels):
            record(frame, int(label))
    else:
        raise click.UsageError(f"unknown algorithm {algo!r}")

    outputs = []
    if out_dir is not None:
        labels_path = out_dir / "labels.tsv"
        labels_path.write_text("".join(f"{f}\t{lab}\n" for f, lab in emissions))
        outputs.append(labels_path)
    if cfg["rttm"] is not None:
        labels_by_frame = [lab for _, lab in sorted(emissions)]
        track = labels_to_segments(labels_by_frame, cfg["frame_seconds"])
        write_rttm(cfg["rttm"], {cfg["file_id"]: track} if track else {})
        if cfg["rttm"] != "-":
            outputs.append(Path(cfg["rttm"]))
    return outputs


@cli.command()
@click.option("--stream", required=True, help="Stream CSV; '-' reads stdin.")
@click.option("--out-dir", default=None, help="Write labels.tsv and manifest.json here.")
@click.option("--model", default=None, help="Checkpoint: applies the embedding map and thresholds.")
@click.option("--algo", type=click.Choice(["tbsc", "lfc", "ahc", "spectral"]),
              default="tbsc", show_default=True)
@click.option("--beam", default=1, show_default=True)
@click.option("--latency", default=0, show_default=True, help="Emission delay in frames.")
@click.option("--lambda", "continuity_bonus", default=0.2, show_default=True)
@click.option("--l-intra", type=float, default=None, help="Override the checkpoint l_intra.")
@click.option("--l-new", type=float, default=None, help="Override the checkpoint l_new.")
@click.option("--no-thresholds", is_flag=True, help="Disable both threshold branches.")
@click.option("--calibrate-from", default=None,
              help="Labeled stream used to calibrate thresholds before clustering.")
@click.option("--s0", default=0.0, show_default=True, help="Flat new-cluster score.")
@click.option("--s1", default=0.0, show_default=True, help="Flat within-threshold score.")
@click.option("--max-clusters", type=int, default=None)
@click.option("--distance", type=click.Choice(["scaled", "raw"]), default="scaled",
              show_default=True)
@click.option("--tau", default=0.5, show_default=True, help="Leader-follower new-cluster threshold.")
@click.option("--ahc-threshold", default=0.5, show_default=True)
@click.option("--num-clusters", type=int, default=None, help="Target K for ahc/spectral.")
@click.option("--rttm", default=None, help="Also write the hypothesis as RTTM.")
@click.option("--file-id", default="stream", show_default=True)
@click.option("--seed", default=0, show_default=True, help="Seed for spectral k-means.")
@click.option("--quiet", is_flag=True, help="Suppress streaming frame/label lines on stdout.")
def cluster(stream, out_dir, model, algo, beam, latency, continuity_bonus, l_intra,
            l_new, no_thresholds, calibrate_from, s0, s1, max_clusters, distance,
            tau, ahc_threshold, num_clusters, rttm, file_id, seed, quiet):
    """Cluster a stream online; emit one `frame<TAB>label` line per frame."""
    t0 = time.perf_counter()
    cfg = {
        "stream": _abs(stream), "model": _abs(model), "algo": algo, "beam": beam,
        "latency": latency, "continuity_bonus": continuity_bonus,
        "l_intra": l_intra, "l_new": l_new, "no_thresholds": no_thresholds,
        "calibrate_from": _abs(calibrate_from), "s0": s0, "s1": s1,
        "max_clusters": max_clusters, "distance": distance, "tau": tau,
        "ahc_threshold": ahc_threshold, "num_clusters": num_clusters,
        "rttm": rttm if rttm in (None, "-") else str(Path(rttm).resolve()),
        "file_id": file_id, "seed": seed, "frame_seconds": FRAME_SECONDS,
    }

    def emit(frame: int, label: int):
        print(f"{frame}\t{label}", flush=True)

    out = _ensure_out_dir(out_dir) if out_dir is not None else None
    try:
        outputs = run_cluster(cfg, out, emit=None if quiet else emit)
    except ValueError as exc:
        raise click.UsageError(str(exc))
    if out is not None:
        _finish("cluster", cfg, out, outputs, t0)


# --------------------------------------------------------------- eval ----


def _read_label_lines(path, frame_seconds: float):
    """Parse `frame<TAB>label` lines (the cluster command's streaming output)."""
    from .formats import open_path

    pairs = []
    with open_path(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                frame, label = line.split("\t")
                pairs.append((int(frame), int(label)))
            except ValueError:
                raise DataError(f"bad frame/label line {lineno}: {line!r}")
    labels = [lab for _, lab in sorted(pairs)]
    return labels_to_segments(labels, frame_seconds)


def run_eval(cfg: dict, out_dir: Path) -> list:
    refs = read_rttm(cfg["ref"])
    if cfg.get("hyp_labels") is not None:
        track = _read_label_lines(cfg["hyp_labels"], cfg["frame_seconds"])
        hyps = {cfg["hyp_file_id"]: track}
    else:
        hyps = read_rttm(cfg["hyp"])
    if not refs:
        raise DataError("reference RTTM contains no segments")
    missing = sorted(set(refs) - set(hyps))
    extra = sorted(set(hyps) - set(refs))
    if missing or extra:
        raise DataError(
            "file-id mismatch between reference and hypothesis: "
            f"missing hypothesis for {missing or 'none'}, "
            f"hypothesis-only ids {extra or 'none'}")
    outputs = []
    per_collar_bars = {}
    for collar in cfg["collars"]:
        rows = []
        total = DerBreakdown(0.0, 0.0, 0.0, 0.0)
        for fid in refs:
            breakdown = der(refs[fid], hyps[fid], collar=collar,
                            skip_overlap=cfg["skip_overlap"])
            rows.append((fid, breakdown))
            total = total + breakdown
        lines = ["file,der,miss,fa,conf,scored_seconds"]
        for fid, b in rows + [("ALL", total)]:
            lines.append(f"{fid},{_fmt(b.der)},{_fmt(b.miss)},{_fmt(b.false_alarm)},"
                         f"{_fmt(b.confusion)},{_fmt(b.scored)}")
        path = out_dir / f"der_collar{collar:g}.csv"
        path.write_text("\n".join(lines) + "\n")
        outputs.append(path)
        per_collar_bars[collar] = [(fid, b.der) for fid, b in rows]
        click.echo(f"collar {collar:g}: DER {total.der:.4f} "
                   f"(miss {total.miss:.2f}s, fa {total.false_alarm:.2f}s, "
                   f"conf {total.confusion:.2f}s over {total.scored:.2f}s)")
    if cfg["plot"]:
        fig_path = out_dir / "der.png"
        plots.save_der_bars(per_collar_bars, fig_path)
        outputs.append(fig_path)
    return outputs


@cli.command(name="eval")
@click.option("--ref", required=True, help="Reference RTTM; '-' reads stdin.")
@click.option("--hyp", default=None, help="Hypothesis RTTM.")
@click.option("--hyp-labels", default=None,
              help="Hypothesis as frame<TAB>label lines (the cluster output); '-' reads stdin.")
@click.option("--hyp-file-id", default="stream", show_default=True,
              help="Recording id for --hyp-labels input.")
@click.option("--out-dir", required=True)
@click.option("--collars", default="0.25,0", show_default=True)
@click.option("--skip-overlap", is_flag=True,
              help="Exclude frames where the reference has overlapped speech.")
@click.option("--plot/--no-plot", default=True, show_default=True)
def eval_cmd(ref, hyp, hyp_labels, hyp_file_id, out_dir, collars, skip_overlap, plot):
    """Score a hypothesis (RTTM or streamed labels) against reference RTTM."""
    if (hyp is None) == (hyp_labels is None):
        raise click.UsageError("pass exactly one of --hyp / --hyp-labels")
    collar_values = _parse_list(collars, float)
    if not collar_values:
        raise click.UsageError("--collars needs at least one value")
    t0 = time.perf_counter()
    cfg = {
        "ref": _abs(ref), "hyp": _abs(hyp), "hyp_labels": _abs(hyp_labels),
        "hyp_file_id": hyp_file_id, "collars": collar_values,
        "skip_overlap": skip_overlap, "plot": plot, "seed": None,
        "frame_seconds": FRAME_SECONDS,
    }
    out = _ensure_out_dir(out_dir)
    outputs = run_eval(cfg, out)
    _finish("eval", cfg, out, outputs, t0)


# -------------------------------------------------------------- sweep ----


def _sweep_cell(args):
    beam_size, latency, payload = args
    t0 = time.perf_counter()
    total = DerBreakdown(0.0, 0.0, 0.0, 0.0)
    peak = 0
    for embeddings, ref_track in payload["streams"]:
        cfg = beam.TbscConfig(
            beam_size=beam_size,
            latency=latency,
            continuity_bonus=payload["continuity_bonus"],
            thresholds=payload["thresholds"],
            use_thresholds=payload["use_thresholds"],
            max_clusters=payload["max_clusters"],
            distance=payload["distance"],
        )
        clusterer = beam.TruncatedBeamClusterer(cfg)
        for e in embeddings:
            clusterer.step(e)
        clusterer.flush()
        labels = [lab for _, lab in sorted(clusterer.emitted)]
        peak = max(peak, clusterer.peak_hypotheses)
        hyp = labels_to_segments(labels, payload["frame_seconds"])
        total = total + der(ref_track, hyp, collar=payload["collar"],
                            skip_overlap=payload["skip_overlap"])
    return {
        "beam": beam_size,
        "latency": latency,
        "der": total.der,
        "peak_hypotheses": peak,
        "wall_clock_s": time.perf_counter() - t0,
    }


def run_sweep(cfg: dict, out_dir: Path) -> list:
    model = None
    thresholds = Thresholds()
    if cfg["model"] is not None:
        model, thresholds = load_checkpoint(cfg["model"])
    if cfg["l_intra"] is not None:
        thresholds = replace(thresholds, l_intra=cfg["l_intra"])
    if cfg["l_new"] is not None:
        thresholds = replace(thresholds, l_new=cfg["l_new"])

    streams = []
    if cfg["streams"]:
        refs = read_rttm(cfg["ref"])
        for path in cfg["streams"]:
            fid = Path(path).stem
            if fid not in refs:
                raise DataError(f"no reference track for stream id {fid!r}")
            s = read_stream(path)
            streams.append((_embed(model, s, path), refs[fid]))
    else:
        for k in range(cfg["num_streams"]):
            s = gen_stream(GenConfig(
                num_speakers=cfg["speakers"], dim=cfg["dim"], signal_dim=cfg["signal_dim"],
                separation=cfg["separation"], noise_std=cfg["noise"],
                mean_turn_frames=cfg["turn_frames"], total_frames=cfg["frames"],
                seed=cfg["seed"] + k, frame_seconds=cfg["frame_seconds"],
            ))
            ref = labels_to_segments([int(v[3:]) for v in s.labels], cfg["frame_seconds"])
            streams.append((_embed(model, s, f"stream seed {cfg['seed'] + k}"), ref))

    payload = {
        "streams": streams,
        "continuity_bonus": cfg["continuity_bonus"],
        "thresholds": thresholds,
        "use_thresholds": not cfg["no_thresholds"],
        "max_clusters": cfg["max_clusters"],
        "distance": cfg["distance"],
        "collar": cfg["collar"],
        "skip_overlap": cfg["skip_overlap"],
        "frame_seconds": cfg["frame_seconds"],
    }
    cells = [(b, t, payload) for b in cfg["beams"] for t in cfg["latencies"]]
    if cfg["jobs"] > 1:
        with ProcessPoolExecutor(max_workers=cfg["jobs"]) as pool:
            rows = list(pool.map(_sweep_cell, cells))
    else:
        rows = [_sweep_cell(c) for c in cells]
    rows.sort(key=lambda r: (r["beam"], r["latency"]))

    lines = ["beam,latency,der,peak_hypotheses,wall_clock_s"]
    for r in rows:
        lines.append(f"{r['beam']},{r['latency']},{_fmt(r['der'])},"
                     f"{r['peak_hypotheses']},{r['wall_clock_s']:.3f}")
    csv_path = out_dir / "sweep.csv"
    csv_path.write_text("\n".join(lines) + "\n")
    outputs = [csv_path]
    if cfg["plot"]:
        fig_path = out_dir / "sweep.png"
        plots.save_sweep_tradeoff(rows, fig_path)
        outputs.append(fig_path)
    for r in rows:
        click.echo(f"beam {r['beam']:>4} latency {r['latency']:>4}: "
                   f"DER {r['der']:.4f} (peak {r['peak_hypotheses']} hypotheses, "
                   f"{r['wall_clock_s']:.2f}s)")
    return outputs


@cli.command()
@click.option("--out-dir", required=True)
@click.option("--beams", default="1,2,4,8", show_default=True)
@click.option("--latencies", default="0,5,25", show_default=True)
@click.option("--stream", "streams", multiple=True,
              help="External stream CSVs; file ids must match --ref tracks.")
@click.option("--ref", default=None, help="Reference RTTM for external streams.")
@click.option("--num-streams", default=20, show_default=True, help="Synthetic streams to draw.")
@click.option("--speakers", default=6, show_default=True)
@click.option("--dim", default=16, show_default=True)
@click.option("--signal-dim", default=10, show_default=True)
@click.option("--separation", default=1.7, show_default=True)
@click.option("--noise", default=0.16, show_default=True)
@click.option("--turn-frames", default=10.0, show_default=True)
@click.option("--frames", default=300, show_default=True)
@click.option("--model", default=None)
@click.option("--lambda", "continuity_bonus", default=0.2, show_default=True)
@click.option("--l-intra", type=float, default=None)
@click.option("--l-new", type=float, default=None)
@click.option("--no-thresholds", is_flag=True)
@click.option("--max-clusters", type=int, default=10, show_default=True)
@click.option("--distance", type=click.Choice(["scaled", "raw"]), default="scaled",
              show_default=True)
@click.option("--collar", default=0.25, show_default=True)
@click.option("--skip-overlap", is_flag=True)
@click.option("--jobs", default=1, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--plot/--no-plot", default=True, show_default=True)
def sweep(out_dir, beams, latencies, streams, ref, num_streams, speakers, dim,
          signal_dim, separation, noise, turn_frames, frames, model, continuity_bonus,
          l_intra, l_new, no_thresholds, max_clusters, distance, collar, skip_overlap,
          jobs, seed, plot):
    """Cross-product beam sizes and latencies; one cluster+eval run per cell."""
    if streams and ref is None:
        raise click.UsageError("--stream requires --ref")
    t0 = time.perf_counter()
    cfg = {
        "beams": _parse_list(beams, int), "latencies": _parse_list(latencies, int),
        "streams": [_abs(p) for p in streams], "ref": _abs(ref),
        "num_streams": num_streams, "speakers": speakers, "dim": dim,
        "signal_dim": signal_dim, "separation": separation, "noise": noise,
        "turn_frames": turn_frames, "frames": frames, "model": _abs(model),
        "continuity_bonus": continuity_bonus, "l_intra": l_intra, "l_new": l_new,
        "no_thresholds": no_thresholds, "max_clusters": max_clusters,
        "distance": distance, "collar": collar, "skip_overlap": skip_overlap,
        "jobs": jobs, "seed": seed, "plot": plot, "frame_seconds": FRAME_SECONDS,
    }
    out = _ensure_out_dir(out_dir)
    outputs = run_sweep(cfg, out)
    _finish("sweep", cfg, out, outputs, t0)


# -------------------------------------------------------------- rerun ----

_RERUNNERS = {
    "gen": lambda cfg, out: run_gen(cfg, out),
    "train": run_train,
    "cluster": lambda cfg, out: run_cluster(cfg, out, emit=None),
    "eval": run_eval,
    "sweep": run_sweep,
}


@cli.command()
@click.argument("manifest_path")
@click.option("--out-dir", required=True, help="Fresh directory for the reproduced outputs.")
def rerun(manifest_path, out_dir):
    """Replay a manifest; outputs are reproduced bitwise in --out-dir."""
    t0 = time.perf_counter()
    manifest = load_manifest(manifest_path)
    runner = _RERUNNERS.get(manifest.command)
    if runner is None:
        raise DataError(f"manifest names unknown command {manifest.command!r}")
    out = _ensure_out_dir(out_dir)
    cfg = dict(manifest.config)
    if manifest.command == "cluster" and cfg.get("rttm") not in (None, "-"):
        cfg["rttm"] = str(out / Path(cfg["rttm"]).name)
    outputs = runner(cfg, out)
    _finish(manifest.command, cfg, out, outputs, t0)
    click.echo(f"reproduced {manifest.command} into {out}")


def main(argv=None) -> int:
    """Entry point with the documented exit-code contract."""
    try:
        cli.main(args=argv, prog_name="beamdiar", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return int(exc.exit_code)
    except click.UsageError as exc:
        click.echo(f"usage error: {exc.format_message()}", err=True)
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except click.Abort:
        return 1
    except DataError as exc:
        click.echo(f"data error: {exc}", err=True)
        return 2
    except BrokenPipeError:
        return 0
    return 0


def entry() -> None:
    import sys

    sys.exit(main())


if __name__ == "__main__":
    entry()
