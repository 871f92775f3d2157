"""Command-line entry point.

Precedence for every setting: command-line flag, then ``--config`` file,
then built-in default. Failures exit with status 1 and print a single JSON
line ``{"error": <type>, "message": <text>}`` on stderr.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .experiment import (MODES, ExperimentSpec, calibrate, experiment_fid, experiment_spectrum,
                         run_experiment, run_sweep, summarize, to_csv)
from .pulses import Timings, full_sequence
from .readout import apodize
from .spins import parse_config, system_from_config

_TIMING_KEYS = {"rf_s": "rf", "transition_s": "transition", "gradient_s": "gradient",
                "total_s": "total"}


def _bool(v) -> bool:
    if isinstance(v, bool):
        return v
    s = str(v).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--noise", dest="noise", action="store_true", default=None,
                   help="interleave T1/T2 relaxation with every event")
    p.add_argument("--no-noise", dest="noise", action="store_false")
    p.add_argument("--flip-err", type=float, default=None,
                   help="fractional flip-angle error applied to every pulse")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--noise-sigma", type=float, default=None,
                   help="additive FID noise per quadrature (default 0)")
    p.add_argument("--keep-zq", dest="keep_zq", action="store_true", default=None,
                   help="gradient keeps zero-quantum coherences")


def _angles(p: argparse.ArgumentParser) -> None:
    for name in ("theta1", "phi1", "theta2", "phi2"):
        p.add_argument(f"--{name}", type=float, default=None, help="degrees")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nmr-swaptest",
                                 description="Pulse-level NMR simulation of the swap-test fidelity measurement.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="single experiment")
    _common(p)
    _angles(p)

    p = sub.add_parser("sweep", help="20-point (theta, phi) sweep as CSV")
    _common(p)
    p.add_argument("--mode", choices=MODES, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out", help="CSV path (default stdout)")
    p.add_argument("--report", help="write the text summary here (default stderr)")

    p = sub.add_parser("calibrate", help="reference area and normalisation")
    _common(p)

    p = sub.add_parser("export-spectrum", help="processed spectrum of one experiment as CSV")
    _common(p)
    _angles(p)
    p.add_argument("--fid", action="store_true", help="export the raw co-added FID instead")
    p.add_argument("--out", help="CSV path (default stdout)")

    p = sub.add_parser("sequence", help="print the full pulse sequence in text form")
    _common(p)
    _angles(p)
    return ap


def _settings(args) -> dict:
    cfg = parse_config(Path(args.config).read_text()) if args.config else {}
    sysm = system_from_config(cfg)
    tm = Timings(**{attr: float(cfg[k]) for k, attr in _TIMING_KEYS.items() if k in cfg})

    def pick(flag, key, conv, default):
        if flag is not None:
            return flag
        if key in cfg:
            return conv(cfg[key])
        return default

    out = dict(
        sys=sysm, timings=tm,
        noise_on=pick(args.noise, "noise", _bool, False),
        flip_angle_error=pick(args.flip_err, "flip_err", float, 0.0),
        seed=pick(args.seed, "seed", int, 0),
        noise_sigma=pick(args.noise_sigma, "noise_sigma", float, 0.0),
        keep_zero_quantum=pick(args.keep_zq, "keep_zq", _bool, False),
    )
    for name in ("theta1", "phi1", "theta2", "phi2"):
        if hasattr(args, name):
            out[name] = pick(getattr(args, name), name, float, 0.0)
    if hasattr(args, "mode"):
        out["mode"] = pick(args.mode, "mode", str, "fig3a")
        out["workers"] = pick(args.workers, "workers", int, 1)
    return out


def _emit(text: str, path: str | None, stream) -> None:
    if path:
        Path(path).write_text(text)
    else:
        stream.write(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        st = _settings(args)
        if args.command == "run":
            res = run_experiment(ExperimentSpec(**st))
            print(to_csv([res]), end="")
        elif args.command == "sweep":
            mode, workers = st.pop("mode"), st.pop("workers")
            results = run_sweep(mode, workers=workers, **st)
            _emit(to_csv(results), args.out, sys.stdout)
            _emit(summarize(results).text() + "\n", args.report, sys.stderr)
        elif args.command == "calibrate":
            cal = calibrate(ExperimentSpec(**st))
            print(f"area_ref {cal.area_ref!r}")
            for k, a in enumerate(cal.sub_areas):
                print(f"sub_experiment_{k}_area {a!r}")
            print(f"pseudo_pure_scale {cal.pseudo_pure_scale!r}")
            print(f"pseudo_pure_offset {cal.pseudo_pure_offset!r}")
            print("normalisation f_exp = summed_area / area_ref")
            print(f"settle_delay_s {cal.settle!r}")
            print(f"sequence_duration_s {cal.total_duration!r}")
        elif args.command == "export-spectrum":
            spec = ExperimentSpec(**st)
            if args.fid:
                text = experiment_fid(spec).to_csv()
            else:
                text = experiment_spectrum(spec).to_csv()
            _emit(text, args.out, sys.stdout)
        elif args.command == "sequence":
            spec = ExperimentSpec(**st)
            print(full_sequence(*spec.states(), spec.sys, spec.timings).to_text(), end="")
    except (ValueError, RuntimeError, OSError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
