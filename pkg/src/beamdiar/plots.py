"""Figure rendering for the report paths.

Each report CSV gets a companion PNG: training curves next to the
training report, the beam/latency tradeoff next to the sweep table, and
per-file DER bars next to the evaluation table. matplotlib is imported
lazily with the Agg backend so the CLI works headless.
"""


def _plt():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def save_train_curves(records, path) -> None:
    """Losses on one panel, thresholds and subset error on the other."""
    plt = _plt()
    iters = [r.iteration for r in records]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    ax1.plot(iters, [r.loss_posi for r in records], label="pull-together loss")
    ax1.plot(iters, [r.loss_nega for r in records], label="push-apart loss")
    ax1.set_xlabel("iteration")
    ax1.set_ylabel("loss")
    ax1.legend()
    ax1.set_title("training losses")
    ax2.plot(iters, [r.l_intra for r in records], label="l_intra")
    ax2.plot(iters, [r.l_new for r in records], label="l_new")
    ax2.plot(iters, [r.err for r in records], label="subset error", linestyle="--")
    ax2.set_xlabel("iteration")
    ax2.legend()
    ax2.set_title("thresholds and clustering error")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_sweep_tradeoff(rows, path) -> None:
    """DER against latency, one line per beam size."""
    plt = _plt()
    fig, ax = plt.subplots(figsize=(6, 4))
    beams = sorted({r["beam"] for r in rows})
    for beam in beams:
        pts = sorted((r["latency"], r["der"]) for r in rows if r["beam"] == beam)
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=f"beam {beam}")
    ax.set_xlabel("latency (frames)")
    ax.set_ylabel("DER")
    ax.set_title("latency / beam-size tradeoff")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_der_bars(per_collar, path) -> None:
    """Grouped per-file DER bars, one group of bars per collar value."""
    plt = _plt()
    collars = sorted(per_collar)
    files = [f for f, _ in per_collar[collars[0]]]
    fig, ax = plt.subplots(figsize=(max(6, 1.2 * len(files)), 4))
    width = 0.8 / max(len(collars), 1)
    for k, collar in enumerate(collars):
        values = [v for _, v in per_collar[collar]]
        xs = [i + k * width for i in range(len(files))]
        ax.bar(xs, values, width=width, label=f"collar {collar:g}")
    ax.set_xticks([i + 0.4 - width / 2 for i in range(len(files))])
    ax.set_xticklabels(files, rotation=30, ha="right")
    ax.set_ylabel("DER")
    ax.set_title("diarization error rate per recording")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
