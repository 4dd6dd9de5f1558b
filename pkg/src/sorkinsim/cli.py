"""Command-line front end.

Exit codes: 0 success, 2 unreadable or malformed input, 3 value outside the
valid domain, 4 numerical failure (ill-conditioned fit, undefined result).
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, fixtures
from . import io as sio
from .campaign import run_campaign, sweep_corrected_kappa, sweep_rate_dependent
from .config import Mode, load_config
from .errors import DomainError, IllConditionedError, SorkinSimError, UndefinedKappaError
from .optics import qber_from_visibility, two_path_visibility
from .sorkin import born_octet, delta, epsilon, kappa
from .sources import SourceModel, pulse_train_timestamps
from .spad import DeadtimeKind, DeadtimeModel, apply_deadtime_events, characterize_deadtime, \
    detected_rate, simulate_superposition
from .stats import FitMethod, fit_normal, summary

log = logging.getLogger("sorkinsim")


def _out_dir(args, default=None) -> Path | None:
    d = args.out or default
    if d is None:
        return None
    path = Path(d)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _emit(obj, args, name):
    """Print a JSON report and also store it under --out if given."""
    text = json.dumps(obj, indent=2, sort_keys=True, default=sio._jsonable)
    print(text)
    out = _out_dir(args)
    if out is not None:
        (out / name).write_text(text + "\n")


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    campaign = cfg.campaign_config(seed=args.seed)
    out = _out_dir(args, cfg.output.dir)
    stem = cfg.output.stem
    fmt = args.format or cfg.output.formats[0]
    meta = {"software": "sorkinsim", "version": __version__, "seed": campaign.rng_seed,
            "mode": cfg.campaign.mode.value, "config": cfg.model_dump(mode="json"),
            "created_utc": datetime.now(timezone.utc).isoformat(timespec="seconds")}
    failed = []

    if cfg.campaign.mode is Mode.MONTE_CARLO:
        result = run_campaign(campaign, workers=cfg.campaign.workers)
        meta.update(result.metadata())
        failed = [p for p in result.points if p.error]
        if fmt == "csv":
            sio.write_campaign_csv(result, out / f"{stem}.csv")
        else:
            sio.write_json(sio.campaign_json(result), out / f"{stem}.json")
    else:
        grid = campaign.rate_grid
        if cfg.campaign.mode is Mode.CORRECTED_SWEEP:
            true = campaign.true_detector
            if true.kind is not DeadtimeKind.CONSTANT or not cfg.campaign.assumed_taus_s:
                raise DomainError("corrected_sweep needs a constant true detector and campaign.assumed_taus_s")
            table = sweep_corrected_kappa(true.tau0, cfg.campaign.assumed_taus_s, grid,
                                          campaign.path_amplitudes, true.dark_rate, campaign.transmission)
        else:
            if campaign.assumed_detector is None:
                raise DomainError("rate_dependent_sweep needs detector_assumed (its tau0_s is the constant deadtime)")
            table = sweep_rate_dependent(campaign.true_detector, campaign.assumed_detector.tau0, grid,
                                         campaign.path_amplitudes, campaign.transmission)
        meta["warnings"] = table.warnings
        meta["crossings_hz"] = table.crossings
        if table.warnings:
            failed = table.warnings
        if fmt == "csv":
            sio.write_sweep_csv(table, out / f"{stem}.csv")
        else:
            sio.write_json(sio.sweep_json(table), out / f"{stem}.json")

    sio.write_json(meta, out / f"{stem}.meta.json")
    if failed:
        for f in failed:
            print(f"warning: {getattr(f, 'error', f)}", file=sys.stderr)
        if args.strict:
            return DomainError.exit_code
    return 0


def _kappa_report(octets, n_bins=None) -> dict:
    rows, good = [], []
    for i, (octet, t_acq) in enumerate(octets):
        e, d = epsilon(octet), delta(octet)
        try:
            k = kappa(octet)
            good.append(k)
        except UndefinedKappaError:
            k = None
        rows.append({"index": i, "epsilon": e, "delta": d, "kappa": k, "undefined": k is None,
                     "acquisition_time_s": t_acq})
    report = {"n_octets": len(rows), "n_undefined": len(rows) - len(good), "octets": rows, "aggregate": None}
    if len(good) >= 2 and np.ptp(good) > 0:
        s = summary(good)
        fits = {}
        for method in FitMethod:
            try:
                fits[method.value] = fit_normal(good, method, n_bins=n_bins).as_dict()
            except IllConditionedError as exc:
                fits[method.value] = {"error": str(exc)}
        report["aggregate"] = {"mean": s.mean, "std": s.std, "stderr": s.stderr, "n": s.n, "fits": fits}
    return report


def cmd_kappa(args) -> int:
    octets = sio.read_rate_octets(args.rates_file)
    _emit(_kappa_report(octets, args.bins), args, "kappa.json")
    return 0


def cmd_visibility(args) -> int:
    if args.efficiencies:
        eff = dict(zip("ABC", args.efficiencies))
        if any(not 0 < v <= 1 for v in eff.values()):
            raise DomainError("efficiencies must lie in (0, 1]")
    else:
        eff = fixtures.path_efficiencies("experiment")
    rows = [(a + b, two_path_visibility(eff[a], eff[b])) for a, b in ("AB", "AC", "BC")]
    measured = args.measured_visibility
    if measured is None:
        measured = fixtures.load_reference()["qber"]["visibility_pct"] / 100.0
    qber = qber_from_visibility(measured)
    if args.format == "json":
        _emit({"efficiencies": eff, "visibility_pct": {p: 100 * v for p, v in rows},
               "measured_visibility_pct": 100 * measured, "qber_pct": 100 * qber}, args, "visibility.json")
        return 0
    lines = [["paths", "visibility_pct"]] + [[p, f"{100 * v:.6f}"] for p, v in rows]
    lines.append([f"qber_at_{100 * measured:.4g}pct", f"{100 * qber:.6f}"])
    text = "\n".join(",".join(r) for r in lines) + "\n"
    sys.stdout.write(text)
    out = _out_dir(args)
    if out is not None:
        (out / "visibility.csv").write_text(text)
    return 0


def cmd_deadtime(args) -> int:
    ms = sio.read_superposition(args.measurements_file)
    est = characterize_deadtime(ms)
    report = {"tau_s": est.tau, "uncertainty_s": est.uncertainty, "n": len(ms)}
    if args.per_row:
        report["per_row_tau_s"] = list(est.per_measurement)
    _emit(report, args, "deadtime.json")
    return 0


def cmd_fit(args) -> int:
    values = sio.read_values(args.kappa_file)
    fits = [fit_normal(values, m, n_bins=args.bins).as_dict() for m in FitMethod]
    _emit({"fits": fits}, args, "fit.json")
    return 0


def _detector(args) -> DeadtimeModel:
    return DeadtimeModel.constant(args.tau, args.dark_rate, args.efficiency)


def cmd_gate(args) -> int:
    arrivals = sio.read_values(args.timestamps_file, strictly_increasing=True)
    detected = apply_deadtime_events(arrivals, _detector(args), args.seed, duration=args.duration)
    out = _out_dir(args)
    if out is None:
        for t in detected:
            print(sio.fmt(float(t)))
    else:
        sio.write_values(detected, out / "detected.txt")
    return 0


def cmd_generate(args) -> int:
    out = _out_dir(args, ".")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(args.seed)))
    if args.what == "superposition":
        ms = simulate_superposition(_detector(args), args.rate1, args.rate2, args.repetitions,
                                    args.window if args.window > 0 else None, rng)
        sio.write_superposition(ms, out / "superposition.csv")
    elif args.what == "octets":
        exact = born_octet((1.0, 1.0, 1.0), args.rate).values
        det = _detector(args)
        counts = rng.poisson(exact * args.window, size=(args.repetitions, 8))
        rates = np.rint(detected_rate(counts / args.window, det) * args.window) / args.window
        sio.write_rate_octets([(r, args.window) for r in rates], out / "octets.csv")
    else:
        src = SourceModel.coherent(args.rate) if args.pulse_period is None else \
            SourceModel.ideal_sps(args.rate, args.pulse_period)
        sio.write_values(pulse_train_timestamps(src, args.window, rng), out / "timestamps.txt")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sorkinsim", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, fmt=("csv", "json"), default_fmt=None):
        sp.add_argument("--out", metavar="DIR", help="directory for result files")
        sp.add_argument("--format", choices=fmt, default=default_fmt)
        sp.add_argument("--strict", action="store_true", help="fail on any per-rate error")

    s = sub.add_parser("simulate", help="run a campaign or sweep described by a config file")
    s.add_argument("config_pos", nargs="?", metavar="CONFIG")
    s.add_argument("--config", help="YAML experiment config")
    s.add_argument("--seed", type=int, help="override the config seed (unsigned 64-bit)")
    common(s)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("kappa", help="epsilon, delta and kappa of measured rate octets")
    s.add_argument("rates_file")
    s.add_argument("--bins", type=int)
    common(s, default_fmt="json")
    s.set_defaults(func=cmd_kappa)

    s = sub.add_parser("visibility", help="theoretical two-arm visibilities and QBER")
    s.add_argument("--efficiencies", type=float, nargs=3, metavar=("A", "B", "C"),
                   help="splitter efficiencies (fractions) feeding arms A, B, C")
    s.add_argument("--measured-visibility", type=float, metavar="V", help="fraction in [0, 1]")
    common(s, default_fmt="csv")
    s.set_defaults(func=cmd_visibility)

    s = sub.add_parser("deadtime", help="deadtime from superposition measurements")
    s.add_argument("measurements_file")
    s.add_argument("--per-row", action="store_true")
    common(s, default_fmt="json")
    s.set_defaults(func=cmd_deadtime)

    s = sub.add_parser("fit", help="normal fits to kappa samples (one per line)")
    s.add_argument("kappa_file")
    s.add_argument("--bins", type=int)
    common(s, default_fmt="json")
    s.set_defaults(func=cmd_fit)

    def detector_args(sp):
        sp.add_argument("--tau", type=float, default=45e-9, help="deadtime in seconds")
        sp.add_argument("--dark-rate", type=float, default=0.0)
        sp.add_argument("--efficiency", type=float, default=1.0)
        sp.add_argument("--seed", type=int, default=0)

    s = sub.add_parser("gate", help="apply non-paralyzable deadtime to arrival timestamps")
    s.add_argument("timestamps_file")
    s.add_argument("--duration", type=float)
    detector_args(s)
    common(s)
    s.set_defaults(func=cmd_gate)

    s = sub.add_parser("generate", help="write synthetic input files")
    s.add_argument("what", choices=("superposition", "octets", "timestamps"))
    s.add_argument("--rate", type=float, default=1e6, help="incident rate (octets, timestamps)")
    s.add_argument("--rate1", type=float, default=2e6)
    s.add_argument("--rate2", type=float, default=2e6)
    s.add_argument("--repetitions", type=int, default=100)
    s.add_argument("--window", type=float, default=1.0, help="acquisition time in s; 0 = noiseless")
    s.add_argument("--pulse-period", type=float)
    detector_args(s)
    common(s)
    s.set_defaults(func=cmd_generate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "simulate":
        args.config = args.config or args.config_pos
        if not args.config:
            parser.error("simulate needs --config PATH")
        if args.seed is not None and not 0 <= args.seed < 2**64:
            parser.error("--seed must be an unsigned 64-bit integer")
    try:
        return args.func(args)
    except SorkinSimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
