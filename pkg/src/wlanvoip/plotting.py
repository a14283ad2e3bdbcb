"""Matplotlib figures written next to the CSV output.

The Agg backend is used so plots render without a display. PNG metadata is
fixed so reruns do not differ in an embedded software version.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .kernel import TICKS_PER_SECOND  # noqa: E402

_META = {"Software": None}
_COLORS = {"sip": "#1f77b4", "h323": "#d62728", "all": "#7f7f7f"}


def _save(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=100, metadata=_META)
    plt.close(fig)
    return path


def plot_run(rep, out_dir) -> Path:
    n = rep.duration // TICKS_PER_SECOND
    xs = list(range(n))
    voip = [rep.voip_bins.get(b, 0) / 1000 for b in xs]
    every = [rep.all_bins.get(b, 0) / 1000 for b in xs]
    fig, ax = plt.subplots(figsize=(8, 4))
    ax.step(xs, every, where="post", color=_COLORS["all"], label="all flows")
    ax.step(xs, voip, where="post", color=_COLORS.get(rep.signaling_mode, "k"), label="VoIP")
    ax.set_xlabel("time (s)")
    ax.set_ylabel("delivered payload (kbit per 1 s bin)")
    ax.set_title(f"{rep.scenario_name}, {rep.signaling_mode.upper()}, seed {rep.seed}")
    ax.legend(loc="upper right")
    fig.tight_layout()
    return _save(fig, Path(out_dir) / "throughput_series.png")


def _bars(name: str, header: list, rows: list, ylabel: str, out: Path) -> Path:
    # first sip_/h323_ column pair is the plotted quantity
    i = header.index(next(h for h in header if h.startswith("sip_")))
    flows = [r[0] for r in rows]
    sip = [r[i] if r[i] is not None else 0 for r in rows]
    h323 = [r[i + 1] if r[i + 1] is not None else 0 for r in rows]
    fig, ax = plt.subplots(figsize=(8, 4))
    xs = range(len(flows))
    w = 0.38
    ax.bar([x - w / 2 for x in xs], sip, w, label="SIP", color=_COLORS["sip"])
    ax.bar([x + w / 2 for x in xs], h323, w, label="H.323", color=_COLORS["h323"])
    ax.set_xticks(list(xs))
    ax.set_xticklabels(flows, rotation=20)
    ax.set_ylabel(ylabel)
    ax.set_title(name.replace("_", " "))
    ax.legend()
    fig.tight_layout()
    return _save(fig, out / f"{name}.png")


_YLABELS = {
    "fig3_establishment": "initiator establishment instant (s)",
    "fig4_establishment_receiver": "receiver establishment instant (s)",
    "fig5_init_bytes_sent": "initiator bytes sent",
    "fig6_init_bytes_received": "initiator bytes received",
    "fig7_recv_bytes_sent": "receiver bytes sent",
    "fig8_recv_bytes_received": "receiver bytes received",
    "fig9_rtp_delay": "RTP average end-to-end delay (s)",
}


def plot_comparison(cmp, out_dir) -> list[Path]:
    out = Path(out_dir)
    written = []
    for name, (header, rows) in cmp.figures.items():
        if name in _YLABELS:
            written.append(_bars(name, header, rows, _YLABELS[name], out))
    header, rows = cmp.figures["fig10_throughput"]
    fig, (top, bottom) = plt.subplots(2, 1, figsize=(8, 7))
    for ax, curve, xlabel in ((top, "window_s", "measurement window (s)"),
                              (bottom, "talkspurt_ms", "talkspurt length (ms)")):
        pts = [r for r in rows if r[0] == curve]
        xs = [r[1] for r in pts]
        ax.plot(xs, [r[2] / 1000 for r in pts], color=_COLORS["sip"], label="SIP")
        ax.plot(xs, [r[3] / 1000 for r in pts], color=_COLORS["h323"], label="H.323",
                linestyle="--")
        ax.set_xlabel(xlabel)
        ax.set_ylabel("VoIP throughput (kbit/s)")
        ax.legend()
    fig.tight_layout()
    written.append(_save(fig, out / "fig10_throughput.png"))
    return written
