"""Command line: ``run``, ``compare``, ``airtime`` and ``validate``.

Exit status is 0 on success, 2 when the scenario or arguments fail
validation, and 1 when a run fails.
"""

from __future__ import annotations

import argparse
import re
import sys

from .errors import ConfigError, WlanVoipError
from .phy import mode_table, phy_mode, ppdu_duration
from .report import compare, emit, emit_comparison
from .runner import run_mode
from .scenario import dump_scenario, resolve_scenario
from .signaling import Protocol

EXIT_OK, EXIT_FAULT, EXIT_INVALID = 0, 1, 2

_FRAME_RE = re.compile(r"^\s*(\d+(?:\.\d+)?)\s*(ms)?\s*$")


def parse_frame(text: str) -> float:
    """``"15ms"`` or ``"15"`` -> 15.0 (milliseconds)."""
    m = _FRAME_RE.match(text)
    if not m:
        raise ConfigError(f"cannot read frame period {text!r}; expected e.g. 15ms")
    return float(m.group(1))


def _load(args):
    scen = resolve_scenario(args.scenario)
    if getattr(args, "g711_frame", None):
        scen = scen.with_frame("G711", parse_frame(args.g711_frame))
    return scen


def cmd_run(args) -> int:
    scen = _load(args)
    rep = run_mode(scen, args.signaling, args.seed)
    files = emit(rep, args.out, plots=not args.no_plots)
    _report_files(files)
    return EXIT_OK


def cmd_compare(args) -> int:
    scen = _load(args)
    # Both modes use the same seed so they see the same random stream.
    sip = run_mode(scen, Protocol.SIP, args.seed)
    h323 = run_mode(scen, Protocol.H323, args.seed)
    cmp = compare(sip, h323)
    files = emit_comparison(cmp, args.out, plots=not args.no_plots)
    for fid in cmp.incomplete_flows:
        print(f"warning: flow {fid} is incomplete in the comparison", file=sys.stderr)
    _report_files(files)
    return EXIT_OK


def cmd_airtime(args) -> int:
    if args.rate not in mode_table():
        raise ConfigError(f"unsupported rate {args.rate} Mbit/s; choose from "
                          f"{', '.join(str(r) for r in mode_table())}")
    if args.bytes < 0:
        raise ConfigError("byte count must be non-negative")
    print(ppdu_duration(args.bytes, phy_mode(args.rate)))
    return EXIT_OK


def cmd_validate(args) -> int:
    scen = _load(args)
    if args.echo:
        sys.stdout.write(dump_scenario(scen))
    else:
        print(f"{scen.name}: ok ({len(scen.nodes)} nodes, {len(scen.applications)} applications)")
    return EXIT_OK


def _report_files(files):
    for f in files:
        print(f)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wlanvoip",
                                description="SIP versus H.323 VoIP over 802.11a simulator")
    sub = p.add_subparsers(dest="command", required=True)

    def scenario_args(sp):
        sp.add_argument("--scenario", default="paper_80211a",
                        help="scenario file, or the name of a shipped scenario")
        sp.add_argument("--g711-frame", dest="g711_frame", default=None,
                        help="override the G.711 frame period, e.g. 15ms")

    r = sub.add_parser("run", help="run one scenario in one signaling mode")
    scenario_args(r)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--signaling", choices=["sip", "h323"], default="sip")
    r.add_argument("--out", required=True, help="output directory")
    r.add_argument("--no-plots", action="store_true", help="skip the PNG figures")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("compare", help="run both signaling modes and compare them")
    scenario_args(c)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--out", required=True, help="output directory")
    c.add_argument("--no-plots", action="store_true", help="skip the PNG figures")
    c.set_defaults(func=cmd_compare)

    a = sub.add_parser("airtime", help="PPDU duration in microseconds")
    a.add_argument("--rate", type=int, required=True, help="PHY rate in Mbit/s")
    a.add_argument("--bytes", type=int, required=True, help="MPDU size in bytes")
    a.set_defaults(func=cmd_airtime)

    v = sub.add_parser("validate", help="check a scenario file")
    scenario_args(v)
    v.add_argument("--echo", action="store_true", help="print the resolved scenario")
    v.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except WlanVoipError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAULT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAULT


if __name__ == "__main__":
    sys.exit(main())
