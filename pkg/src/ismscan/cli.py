"""Operator command line: every capability without the web console.

Exit codes: 0 success, 1 usage error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from . import analysis, profiles, simulator
from .errors import IsmScanError, ParseError
from .protocol import frame_from_raw, iter_lpt_frames
from .session import (
    SIM_STARTED_AT,
    JsonlLogWriter,
    SessionConfig,
    SessionLog,
    run_session,
)


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage problems; this tool reserves 2 for runtime errors.
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _fmt_mhz(value: float) -> str:
    return f"{value:g}"


def _frame_summary(profile, frame) -> str:
    peak_raw = max(frame.raw)
    idx = frame.raw.index(peak_raw)
    freq = profiles.channel_to_freq(profile, idx)
    dbm = profiles.raw_to_dbm(profile, peak_raw)
    return (
        f"seq={frame.seq} t_ms={frame.t_ms} "
        f"max={dbm:.1f} dBm @ {freq:.1f} MHz"
    )


def _state_from_log(log: SessionLog, args) -> analysis.AnalysisState:
    profile = profiles.profile_by_id(log.profile_id)
    state = analysis.AnalysisState(
        profile,
        alpha=getattr(args, "alpha", analysis.DEFAULT_ALPHA),
        threshold_dbm=getattr(args, "threshold", None),
    )
    for frame in log.frames:
        analysis.update(state, frame)
    return state


def cmd_profiles(args) -> int:
    print(f"{'id':<12}{'band':<18}{'step':>9}  {'power range':<19}{'codes':<9}{'channels':>8}")
    for p in profiles.builtin_profiles():
        band = f"{_fmt_mhz(p.f_min_mhz)}–{_fmt_mhz(p.f_max_mhz)} MHz"
        power = f"{p.p_min_dbm:g}..{p.p_max_dbm:g} dBm"
        print(
            f"{p.id:<12}{band:<18}{p.step_khz:>5g} kHz  {power:<19}"
            f"0..{p.raw_max:<6d}{p.channel_count:>8d}"
        )
    return 0


def cmd_scan(args) -> int:
    cfg = SessionConfig(
        source=args.source,
        profile_id=args.profile if args.source == "sim" else None,
        env_path=args.env if args.source == "sim" else None,
        port=args.port if args.source == "serial" else None,
        rate_hz=args.rate,
        duration_s=args.duration,
    )
    env = None
    if args.source == "sim":
        if args.env is None:
            raise IsmScanError("scan --source sim requires --env")
        env = simulator.load_env_file(args.env)
        if args.seed is not None:
            env = replace(env, rng_seed=args.seed)

    profile = profiles.profile_by_id(args.profile) if args.profile else None
    writer = None
    sinks = []
    if args.out:
        started_at = SIM_STARTED_AT if args.source == "sim" else None
        writer = JsonlLogWriter(args.out, started_at=started_at)
        sinks.append(writer)

    def live_summary(frame):
        p = profile or profiles.profile_by_id(frame.profile_id)
        print(_frame_summary(p, frame))

    sinks.append(live_summary)
    try:
        log = run_session(cfg, sinks, on_status=lambda s: print(s, file=sys.stderr), env=env)
    finally:
        if writer is not None:
            writer.close()
    print(f"captured {len(log.frames)} frames", file=sys.stderr)
    return 0


def cmd_replay(args) -> int:
    cfg = SessionConfig(source="replay", log_path=args.infile, duration_s=args.duration)
    profile_cache = {}

    def live_summary(frame):
        p = profile_cache.setdefault(
            frame.profile_id, profiles.profile_by_id(frame.profile_id)
        )
        print(_frame_summary(p, frame))

    log = run_session(cfg, [live_summary], replay_max_speed=(args.speed == "max"))
    print(f"replayed {len(log.frames)} frames", file=sys.stderr)
    return 0


def cmd_export(args) -> int:
    log = SessionLog.load(args.infile)
    state = _state_from_log(log, args)
    text = analysis.export_csv(state)
    if args.out:
        Path(args.out).write_text(text, encoding="ascii")
        print(f"wrote {state.profile.channel_count} rows to {args.out}", file=sys.stderr)
    else:
        sys.stdout.write(text)
    if args.plot:
        from .plotting import render_spectrum  # matplotlib import is slow; defer

        render_spectrum(
            analysis.snapshot(state), args.plot,
            title=f"{log.profile_id} ({state.n_frames} frames)", theme=args.theme,
        )
        print(f"wrote figure to {args.plot}", file=sys.stderr)
    return 0


def cmd_recommend(args) -> int:
    log = SessionLog.load(args.infile)
    state = _state_from_log(log, args)
    print(f"channel {analysis.recommend_wifi_channel(state)}")
    return 0


def cmd_classify(args) -> int:
    log = SessionLog.load(args.infile)
    labels = analysis.classify(log.frames, threshold_dbm=args.threshold)
    if not labels:
        print("no emitters detected")
        return 0
    for label in labels:
        lo, hi = label.band_mhz
        print(f"{label.kind}  {lo:.1f}–{hi:.1f} MHz  confidence {label.confidence:.2f}")
    return 0


def cmd_parse_lpt(args) -> int:
    profile = profiles.profile_by_id(args.profile)
    text = Path(args.infile).read_text(encoding="utf-8")
    frames = []
    for i, values in enumerate(iter_lpt_frames(text)):
        frame = frame_from_raw(profile, values, seq=i, t_ms=0)
        frames.append(frame)
        peak_raw = max(values)
        freq = profiles.channel_to_freq(profile, values.index(peak_raw))
        print(f"{len(values)} channels, max raw {peak_raw} @ {freq:.1f} MHz")
    if not frames:
        raise ParseError("no 'frame:' marker found", offset=0)
    if args.out:
        SessionLog(profile_id=profile.id, started_at=SIM_STARTED_AT, frames=frames).save(args.out)
        print(f"wrote {len(frames)} frames to {args.out}", file=sys.stderr)
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    host, _, port = args.listen.rpartition(":")
    app = create_app(ui_dir=args.ui)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port), log_level="warning")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="ismscan", description="2.4 GHz ISM band spectrum analyzer suite")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    sub.add_parser("profiles", help="list supported transceivers").set_defaults(func=cmd_profiles)

    scan = sub.add_parser("scan", help="acquire sweeps from a source")
    scan.add_argument("--source", choices=("sim", "serial"), default="sim")
    scan.add_argument("--profile", default="cywusb6935")
    scan.add_argument("--env", help="environment JSON (sim source)")
    scan.add_argument("--port", help="serial port (serial source)")
    scan.add_argument("--rate", type=float, default=10.0, help="sweeps per second")
    scan.add_argument("--duration", type=float, default=None, help="seconds to run")
    scan.add_argument("--seed", type=int, default=None, help="override env rng_seed")
    scan.add_argument("--out", help="JSONL session log to write")
    scan.set_defaults(func=cmd_scan)

    rep = sub.add_parser("replay", help="re-emit a recorded session")
    rep.add_argument("--in", dest="infile", required=True)
    rep.add_argument("--speed", choices=("logged", "max"), default="max")
    rep.add_argument("--duration", type=float, default=None)
    rep.set_defaults(func=cmd_replay)

    exp = sub.add_parser("export", help="session log to CSV (and optional figure)")
    exp.add_argument("--in", dest="infile", required=True)
    exp.add_argument("--out", help="CSV path (stdout when omitted)")
    exp.add_argument("--plot", help="also render a spectrum figure (PNG) here")
    exp.add_argument("--theme", choices=("white", "black"), default="white")
    exp.add_argument("--threshold", type=float, default=None, help="occupancy threshold dBm")
    exp.add_argument("--alpha", type=float, default=analysis.DEFAULT_ALPHA)
    exp.set_defaults(func=cmd_export)

    rec = sub.add_parser("recommend", help="least-loaded Wi-Fi channel 1..13")
    rec.add_argument("--in", dest="infile", required=True)
    rec.add_argument("--threshold", type=float, default=None)
    rec.add_argument("--alpha", type=float, default=analysis.DEFAULT_ALPHA)
    rec.set_defaults(func=cmd_recommend)

    cls = sub.add_parser("classify", help="label emitter signatures in a log")
    cls.add_argument("--in", dest="infile", required=True)
    cls.add_argument("--threshold", type=float, default=None)
    cls.set_defaults(func=cmd_classify)

    lpt = sub.add_parser("parse-lpt", help="convert an LPT text dump to frames")
    lpt.add_argument("--in", dest="infile", required=True)
    lpt.add_argument("--profile", default="cywusb6935")
    lpt.add_argument("--out", help="JSONL session log to write")
    lpt.set_defaults(func=cmd_parse_lpt)

    srv = sub.add_parser("serve", help="run the acquisition service")
    srv.add_argument("--listen", default="127.0.0.1:8787", help="host:port")
    srv.add_argument("--ui", default=None, help="directory of built web console assets")
    srv.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except IsmScanError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def run() -> None:
    raise SystemExit(main())
