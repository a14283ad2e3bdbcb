"""CSV and text output for single runs and for SIP/H.323 comparisons.

All numbers go through :func:`fmt` so that identical runs produce identical
bytes: integers print as-is, floats with 9 significant digits, missing
values as an empty field.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

from .errors import CompareError, WlanVoipError
from .kernel import TICKS_PER_SECOND
from .runner import MetricsReport

FLOW_COLUMNS = [
    "flow_id", "kind", "src", "dst", "mode",
    "call_started_s", "init_established_s", "recv_established_s",
    "init_setup_latency_s", "recv_setup_latency_s",
    "init_bytes_sent", "recv_bytes_received", "init_to_recv_bytes_lost", "init_to_recv_in_flight",
    "recv_bytes_sent", "init_bytes_received", "recv_to_init_bytes_lost", "recv_to_init_in_flight",
    "to_server_bytes", "from_server_bytes", "server_bytes_lost",
    "init_total_bytes_sent", "init_total_bytes_received",
    "recv_total_bytes_sent", "recv_total_bytes_received",
    "init_signaling_sent", "init_signaling_received",
    "recv_signaling_sent", "recv_signaling_received", "signaling_retransmissions",
    "rtp_delivered", "rtp_avg_delay_s", "jitter_drops", "setup_failed",
    "payload_bits_delivered", "throughput_bps",
]

GLOBAL_KEYS = [
    "overall_throughput_bps", "network_throughput_bps", "transmissions", "collisions",
    "mac_drops", "queue_drops", "mac_retries", "cross_network_receptions", "polls",
    "events_fired", "proxy_forwarded", "proxy_unroutable",
]

MODE_LABEL = {"sip": "SIP", "h323": "H.323"}


class EmitError(WlanVoipError):
    """Writing an output file failed; the message names the path."""


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format(v, ".9g")
    return str(v)


def csv_text(header: list, rows: list) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def _write(path: Path, text: str) -> Path:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise EmitError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


# -- single run ------------------------------------------------------------

def flows_csv(rep: MetricsReport) -> str:
    return csv_text(FLOW_COLUMNS, [[row.get(c) for c in FLOW_COLUMNS] for row in rep.flows])


def throughput_series_csv(rep: MetricsReport) -> str:
    """Per-second delivered bits, plus the cumulative-window throughput."""
    n = rep.duration // TICKS_PER_SECOND
    rows = []
    voip_total = all_total = 0
    for b in range(n):
        v = rep.voip_bins.get(b, 0)
        a = rep.all_bins.get(b, 0)
        voip_total += v
        all_total += a
        rows.append([b, b + 1, v, a, voip_total / (b + 1), all_total / (b + 1)])
    return csv_text(["bin_start_s", "bin_end_s", "voip_payload_bits", "all_payload_bits",
                     "voip_window_throughput_bps", "all_window_throughput_bps"], rows)


def events_sample_csv(rep: MetricsReport) -> str:
    return csv_text(["t_us", "event", "node", "detail"], [list(e) for e in rep.events])


def summary_text(rep: MetricsReport) -> str:
    """Human-readable table of the five per-flow metrics plus run metadata."""
    label = MODE_LABEL.get(rep.signaling_mode, rep.signaling_mode)
    lines = [
        f"scenario: {rep.scenario_name} (hash {rep.scenario_hash})",
        f"signaling: {label}  seed: {rep.seed}  duration: {fmt(rep.duration / TICKS_PER_SECOND)} s",
        "",
        "per-flow metrics",
    ]
    header = ("flow", "establishment s (init/recv)", "bytes sent (init/recv)",
              "bytes received (init/recv)", "rtp avg delay s", "throughput bit/s")
    table = [header]
    for row in rep.flows:
        if row["kind"] == "voip":
            est = f"{fmt(row['init_established_s']) or '-'} / {fmt(row['recv_established_s']) or '-'}"
            sent = f"{row['init_total_bytes_sent']} / {row['recv_total_bytes_sent']}"
            recv = f"{row['init_total_bytes_received']} / {row['recv_total_bytes_received']}"
            delay = fmt(row["rtp_avg_delay_s"]) or "-"
        else:
            est = "-"
            sent = f"{row['init_bytes_sent']} / -"
            recv = f"- / {row['recv_bytes_received']}"
            delay = "-"
        table.append((row["flow_id"], est, sent, recv, delay, fmt(row["throughput_bps"])))
    widths = [max(len(r[i]) for r in table) for i in range(len(header))]
    for r in table:
        lines.append("  " + "  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())
    lines += ["", "globals"]
    for k in GLOBAL_KEYS:
        if k in rep.globals:
            lines.append(f"  {k}: {fmt(rep.globals[k])}")
    lines += ["", "resolved scenario", ""]
    lines += ["  " + ln if ln else "" for ln in rep.scenario_text.splitlines()]
    return "\n".join(lines) + "\n"


def emit(rep: MetricsReport, out_dir, *, plots: bool = True) -> list[Path]:
    """Write the run's summary, CSVs and (optionally) its throughput plot."""
    out = Path(out_dir)
    written = [
        _write(out / "summary.txt", summary_text(rep)),
        _write(out / "flows.csv", flows_csv(rep)),
        _write(out / "throughput_series.csv", throughput_series_csv(rep)),
        _write(out / "events_sample.csv", events_sample_csv(rep)),
    ]
    if plots:
        from . import plotting

        written.append(plotting.plot_run(rep, out))
    return written


# -- comparisons -------------------------------------------------------------

# (metric, column, sense): sense says which value counts as "better" and how
# the direction column is worded.
COMPARE_METRICS = [
    ("init_establishment_s", "init_established_s", "earlier"),
    ("recv_establishment_s", "recv_established_s", "earlier"),
    ("init_setup_latency_s", "init_setup_latency_s", "earlier"),
    ("recv_setup_latency_s", "recv_setup_latency_s", "earlier"),
    ("init_bytes_sent", "init_total_bytes_sent", "more"),
    ("init_bytes_received", "init_total_bytes_received", "more"),
    ("recv_bytes_sent", "recv_total_bytes_sent", "more"),
    ("recv_bytes_received", "recv_total_bytes_received", "more"),
    ("rtp_avg_delay_s", "rtp_avg_delay_s", "lower"),
    ("throughput_bps", "throughput_bps", "higher"),
]

_LOWER_WINS = {"earlier", "lower"}


def direction(sip, h323, sense: str) -> str:
    """Word the comparison of a SIP and an H.323 value, e.g. ``"SIP earlier"``."""
    if sip is None or h323 is None:
        return "incomplete"
    if sip == h323:
        return "equal"
    sip_wins = sip < h323 if sense in _LOWER_WINS else sip > h323
    return f"{'SIP' if sip_wins else 'H.323'} {sense}"


@dataclass
class Comparison:
    sip: MetricsReport
    h323: MetricsReport
    rows: list = field(default_factory=list)  # [flow, metric, sip, h323, difference, direction, status]
    figures: dict = field(default_factory=dict)  # name -> (header, rows)

    @property
    def incomplete_flows(self) -> list[str]:
        return sorted({r[0] for r in self.rows if r[6] != "complete"})


def _diff(a, b):
    if a is None or b is None:
        return None
    return a - b


def compare(a: MetricsReport, b: MetricsReport) -> Comparison:
    if a.scenario_hash != b.scenario_hash:
        raise CompareError(
            f"reports come from different scenarios ({a.scenario_name} {a.scenario_hash} vs "
            f"{b.scenario_name} {b.scenario_hash}); only runs of one scenario can be compared")
    if a.signaling_mode == b.signaling_mode:
        raise CompareError(
            f"both reports use {MODE_LABEL.get(a.signaling_mode, a.signaling_mode)}; "
            "a comparison needs one SIP run and one H.323 run")
    sip, h323 = (a, b) if a.signaling_mode == "sip" else (b, a)
    cmp = Comparison(sip, h323)

    s_rows = {r["flow_id"]: r for r in sip.flows if r["kind"] == "voip"}
    h_rows = {r["flow_id"]: r for r in h323.flows if r["kind"] == "voip"}
    flow_ids = list(s_rows) + [f for f in h_rows if f not in s_rows]
    for fid in flow_ids:
        s, h = s_rows.get(fid), h_rows.get(fid)
        for metric, col, sense in COMPARE_METRICS:
            sv = s.get(col) if s else None
            hv = h.get(col) if h else None
            if s is None or h is None:
                status = "incomplete: missing in " + ("SIP" if s is None else "H.323") + " run"
            elif sv is None or hv is None:
                status = "incomplete: no value"
            else:
                status = "complete"
            cmp.rows.append([fid, metric, sv, hv, _diff(sv, hv), direction(sv, hv, sense), status])
    for key, sense in (("overall_throughput_bps", "higher"), ("collisions", "lower"),
                       ("mac_drops", "lower")):
        sv, hv = sip.globals.get(key), h323.globals.get(key)
        cmp.rows.append(["ALL", key, sv, hv, _diff(sv, hv), direction(sv, hv, sense),
                         "complete" if sv is not None and hv is not None else "incomplete"])

    def per_flow(cols: list, sense_col: str, sense: str):
        header = ["flow_id"]
        for c in cols:
            header += [f"sip_{c}", f"h323_{c}"]
        header.append("direction")
        rows = []
        for fid in flow_ids:
            s, h = s_rows.get(fid) or {}, h_rows.get(fid) or {}
            row = [fid]
            for c in cols:
                row += [s.get(c), h.get(c)]
            row.append(direction(s.get(sense_col), h.get(sense_col), sense))
            rows.append(row)
        return header, rows

    figs = cmp.figures
    figs["fig3_establishment"] = per_flow(
        ["init_established_s", "init_setup_latency_s"], "init_setup_latency_s", "earlier")
    figs["fig4_establishment_receiver"] = per_flow(
        ["recv_established_s", "recv_setup_latency_s"], "recv_setup_latency_s", "earlier")
    figs["fig5_init_bytes_sent"] = per_flow(
        ["init_total_bytes_sent"], "init_total_bytes_sent", "more")
    figs["fig6_init_bytes_received"] = per_flow(
        ["init_total_bytes_received"], "init_total_bytes_received", "more")
    figs["fig7_recv_bytes_sent"] = per_flow(
        ["recv_total_bytes_sent"], "recv_total_bytes_sent", "more")
    figs["fig8_recv_bytes_received"] = per_flow(
        ["recv_total_bytes_received"], "recv_total_bytes_received", "more")
    figs["fig9_rtp_delay"] = per_flow(["rtp_avg_delay_s"], "rtp_avg_delay_s", "lower")

    rows = []
    for (w, sv), (_, hv) in zip(sip.window_curve(), h323.window_curve()):
        rows.append(["window_s", w, sv, hv, direction(sv, hv, "higher")])
    for (ms, sv), (_, hv) in zip(sip.talkspurt_curve, h323.talkspurt_curve):
        rows.append(["talkspurt_ms", ms, sv, hv, direction(sv, hv, "higher")])
    figs["fig10_throughput"] = (["curve", "x", "sip_bps", "h323_bps", "direction"], rows)
    return cmp


def comparison_csv(cmp: Comparison) -> str:
    return csv_text(["flow_id", "metric", "sip", "h323", "difference", "direction", "status"],
                    cmp.rows)


def emit_comparison(cmp: Comparison, out_dir, *, plots: bool = True) -> list[Path]:
    """Write both runs, the comparison table and one CSV (and PNG) per figure."""
    out = Path(out_dir)
    written = []
    written += emit(cmp.sip, out / "sip", plots=plots)
    written += emit(cmp.h323, out / "h323", plots=plots)
    written.append(_write(out / "comparison.csv", comparison_csv(cmp)))
    for name, (header, rows) in cmp.figures.items():
        written.append(_write(out / f"{name}.csv", csv_text(header, rows)))
    if plots:
        from . import plotting

        written += plotting.plot_comparison(cmp, out)
    return written
