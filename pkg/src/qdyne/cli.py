"""Command-line front end.

Exit codes: 0 success, 2 input error, 3 physics or numerical failure,
4 empty result.
"""

import argparse
import csv
import io
import json
import math
import re
import sys

import numpy as np

from . import __version__
from .analysis import (PhotonBlockLayout, crlb_c_factor, crlb_variance, crlb_variance_limit,
                       fft_amplitude_spectrum, fit_decaying_sinusoid, phase_correct_and_group,
                       synthetic_raw_records)
from .exceptions import ConvergenceError, EmptyResultError, InputError, PhysicsError
from .sensitivity import REFERENCE_SCENARIOS, evaluate_scenario, load_scenario
from .sequence import FreeEvolution, RepeatBlock, load_sequence
from .simulator import SimConfig, run_sequence, sweep_detuning
from .traceio import read_trace, trace_to_csv, trace_to_json

EXIT_OK, EXIT_INPUT, EXIT_PHYSICS, EXIT_EMPTY = 0, 2, 3, 4
DEFAULT_SEED = 20240611

_PREFIX = {"": 1.0, "k": 1e3, "M": 1e6, "m": 1e-3, "u": 1e-6, "µ": 1e-6, "n": 1e-9}
_BASE_UNITS = ("Hz", "s", "deg", "rad", "T")


def parse_quantity(text):
    """``'0.333k'``, ``'6kHz'``, ``'10us'`` or ``'90deg'`` to a float in base units (deg to rad)."""
    m = re.fullmatch(r"\s*([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)\s*([A-Za-zµ]*)\s*", text)
    if not m:
        raise InputError(f"malformed quantity {text!r}")
    value, suffix = float(m.group(1)), m.group(2)
    if suffix == "deg":
        return math.radians(value)
    for base in _BASE_UNITS:
        if suffix.endswith(base) and suffix[:-len(base)] in _PREFIX:
            return value * _PREFIX[suffix[:-len(base)]]
    if suffix in _PREFIX:
        return value * _PREFIX[suffix]
    raise InputError(f"unknown unit suffix {suffix!r} in {text!r}")


def parse_range(text):
    """``start:stop:step`` (stop inclusive) or a single value, with unit suffixes."""
    parts = text.split(":")
    if len(parts) == 1:
        return np.array([parse_quantity(parts[0])])
    if len(parts) != 3:
        raise InputError(f"range must be start:stop:step, got {text!r}")
    start, stop, step = (parse_quantity(p) for p in parts)
    if not step > 0 or stop < start:
        raise InputError(f"empty range {text!r}")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return start + step * np.arange(count)


def _emit(text, out):
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _json(obj):
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


def _csv(header, rows, meta=None):
    buf = io.StringIO()
    for key, value in (meta or {}).items():
        buf.write(f"# {key}: {json.dumps(value, sort_keys=True)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def _sim_config(args):
    return SimConfig(shot_noise=args.noise == "on", rng_seed=args.seed,
                     shots_per_readout=args.shots, sensor_T1=args.sensor_t1,
                     sensor_T2star=args.sensor_t2star, nuclear_T2=args.nuclear_t2)


# ---------------------------------------------------------------- subcommands

def cmd_simulate(args):
    seq = load_sequence(args.sequence)
    trace = run_sequence(seq, _sim_config(args))
    trace.metadata["sequence"] = args.sequence
    _emit(trace_to_json(trace) if args.format == "json" else trace_to_csv(trace), args.out)


def _gamma_eff(seq, dt):
    """Longest free-evolution window inside the repeated body over the sampling interval."""
    waits = [el.duration for it in seq.elements if isinstance(it, RepeatBlock)
             for el in it.body if isinstance(el, FreeEvolution)]
    return max(waits) / dt if waits and dt > 0 else float("nan")


def cmd_sweep(args):
    seq = load_sequence(args.sequence)
    detunings_hz = parse_range(args.range)
    rabi = None if args.rabi is None else 2 * math.pi * parse_quantity(args.rabi)
    cfg = _sim_config(args)
    results = sweep_detuning(seq, 2 * math.pi * detunings_hz, amp_error=args.eps, rabi=rabi, cfg=cfg,
                             n_jobs=args.jobs)
    dt = results[0][1].dt
    gamma = args.gamma_eff if args.gamma_eff is not None else _gamma_eff(seq, dt)
    rows, freqs = [], None
    for d_hz, (_, trace) in zip(detunings_hz, results):
        spec = fft_amplitude_spectrum(trace, None, args.zero_pad, remove_mean=True)
        freqs = spec.freqs
        peak = spec.peak_frequency(fmin=spec.resolution / 2) if np.ptp(trace.values) > 1e-12 else 0.0
        try:
            fit_hz = fit_decaying_sinusoid(trace).frequency if np.ptp(trace.values) > 1e-12 else 0.0
        except (ConvergenceError, InputError):
            fit_hz = float("nan")
        rows.append([float(d_hz), peak, fit_hz, gamma * float(d_hz)] + list(spec.amps))
    meta = {"sampling_interval_s": dt, "eps": args.eps, "gamma_eff": gamma, "seed": args.seed,
            "sequence": args.sequence}
    if args.format == "json":
        _emit(_json({"metadata": meta, "frequencies_hz": [float(f) for f in freqs],
                     "rows": [{"detuning_hz": r[0], "peak_hz": r[1], "fit_hz": r[2],
                               "linear_hz": r[3], "amplitudes": r[4:]} for r in rows]}), args.out)
    else:
        header = ["detuning_hz", "peak_hz", "fit_hz", "linear_hz"] + [f"{f:.6g}" for f in freqs]
        _emit(_csv(header, rows, meta), args.out)


def cmd_spectrum(args):
    trace = read_trace(args.trace)
    spec = fft_amplitude_spectrum(trace, None, args.zero_pad, remove_mean=args.remove_mean)
    meta = {"sampling_interval_s": spec.dt, "peak_hz": spec.peak_frequency(), "zero_pad": args.zero_pad}
    if args.format == "json":
        _emit(_json({"metadata": meta, "freqs_hz": spec.freqs.tolist(), "amps": spec.amps.tolist()}),
              args.out)
    else:
        _emit(_csv(["freq_hz", "amplitude"], zip(spec.freqs, spec.amps), meta), args.out)


def cmd_fit(args):
    fit = fit_decaying_sinusoid(read_trace(args.trace))
    _emit(_json(fit.to_dict()), args.out)


def cmd_crlb(args):
    Ts = parse_range(args.T)
    bound = crlb_variance_limit(args.a_over_rho, args.t2star)
    rows = []
    for T in Ts:
        n = int(round(T / args.dt))
        if n < 2:
            continue
        var = crlb_variance(args.a_over_rho, T, args.dt, args.t2star)
        rows.append([float(T), var, bound, crlb_c_factor(n, args.dt / args.t2star)])
    if not rows:
        raise EmptyResultError("no T in the range spans at least two samples")
    meta = {"a_over_rho": args.a_over_rho, "t2star": args.t2star, "dt": args.dt}
    if args.format == "json":
        _emit(_json({"metadata": meta, "rows": [dict(zip(("T", "var", "bound", "C"), r)) for r in rows]}),
              args.out)
    else:
        _emit(_csv(["T", "var_nu", "bound", "C"], rows, meta), args.out)


def cmd_sensitivity(args):
    if args.reference:
        scenarios = list(REFERENCE_SCENARIOS.values())
    elif args.scenario:
        scenarios = [load_scenario(p) for p in args.scenario]
    else:
        raise InputError("give scenario files or --reference")
    amp = None if args.amplitude is None else parse_quantity(args.amplitude)
    out = {s.label: dict(evaluate_scenario(s, amp).to_dict(), T_meas=s.T_meas) for s in scenarios}
    _emit(_json(out), args.out)


def _load_raw(path, layout):
    try:
        data = np.loadtxt(path, delimiter=None if not path.endswith(".csv") else ",", ndmin=1)
    except ValueError as exc:
        raise InputError(f"cannot read raw counts: {exc}") from None
    flat = np.ravel(data)
    if flat.size == 0 or flat.size % layout.total:
        raise InputError(f"raw record length {flat.size} is not a multiple of {layout.total}")
    return flat.reshape(-1, layout.total)


def cmd_pipeline(args):
    try:
        n_angles, per_angle, n_mag = (int(v) for v in args.layout.split(","))
    except ValueError:
        raise InputError("layout must be n_angles,samples_per_angle,magnetometer_samples") from None
    layout = PhotonBlockLayout(n_angles, per_angle, n_mag)
    if args.synthetic is not None:
        if args.synthetic < 1:
            raise InputError("--synthetic needs N >= 1")
        phases = None
        if args.synthetic_phase is not None:
            phases = np.full(args.synthetic, parse_quantity(args.synthetic_phase))
        raw, _ = synthetic_raw_records(args.synthetic, layout, phases=phases,
                                       rng=np.random.default_rng(args.seed))
        if args.save_raw:
            np.savetxt(args.save_raw, raw, fmt="%d")
    elif args.raw:
        raw = _load_raw(args.raw, layout)
    else:
        raise InputError("give a raw counts file or --synthetic N")
    halfwidth = parse_quantity(args.halfwidth)
    report = {}
    if args.centers:
        curve = []
        for c in parse_range(args.centers):
            try:
                amp = phase_correct_and_group(raw, layout, c, halfwidth).amplitude
            except EmptyResultError:
                amp = 0.0
            curve.append({"center_deg": math.degrees(c), "amplitude": amp})
        report["amplitude_vs_center"] = curve
    res = phase_correct_and_group(raw, layout, parse_quantity(args.center), halfwidth)
    report.update(accepted=res.accepted, total=res.total, acceptance_fraction=res.acceptance_fraction,
                  amplitude=res.amplitude)
    if args.format == "json":
        report["blocks"] = [t.values.tolist() for t in res.traces]
        _emit(_json(report), args.out)
    else:
        meta = {k: v for k, v in report.items()}
        rows = [[i] + [float(t.values[i]) for t in res.traces] for i in range(layout.samples_per_angle)]
        header = ["index"] + [f"block{j}" for j in range(layout.n_angles)]
        _emit(_csv(header, rows, meta), args.out)


# ---------------------------------------------------------------- parser

def build_parser():
    p = argparse.ArgumentParser(prog="qdyne", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, fmt=True):
        sp.add_argument("--out", "-o", help="output file (default: stdout)")
        sp.add_argument("--seed", type=int, default=DEFAULT_SEED, help="RNG seed")
        if fmt:
            sp.add_argument("--format", choices=("csv", "json"), default="csv")

    def sim_opts(sp):
        sp.add_argument("--noise", choices=("on", "off"), default="off",
                        help="Poisson photon counts instead of exact expectation values")
        sp.add_argument("--shots", type=int, default=1, help="shots summed per readout")
        sp.add_argument("--sensor-t1", type=float, help="sensor T1 envelope [s]")
        sp.add_argument("--sensor-t2star", type=float, help="sensor T2* envelope [s]")
        sp.add_argument("--nuclear-t2", type=float, help="target dephasing time [s]")

    sp = sub.add_parser("simulate", help="run a .seq file and write the trace")
    sp.add_argument("sequence")
    common(sp)
    sim_opts(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("sweep", help="spectra of a template sequence over rf detuning")
    sp.add_argument("sequence")
    sp.add_argument("--range", required=True, help="detuning range start:stop:step, e.g. 0:6k:0.333k")
    sp.add_argument("--eps", type=float, default=0.0, help="relative Rabi calibration error")
    sp.add_argument("--rabi", help="override the rf Rabi frequency, e.g. 25kHz")
    sp.add_argument("--zero-pad", type=int, default=8)
    sp.add_argument("--gamma-eff", type=float, help="slope of the exported linear line")
    sp.add_argument("--jobs", type=int, default=1, help="worker processes across grid points")
    common(sp)
    sim_opts(sp)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("spectrum", help="FFT amplitude spectrum of a trace file")
    sp.add_argument("trace")
    sp.add_argument("--zero-pad", type=int, default=8)
    sp.add_argument("--remove-mean", action="store_true")
    common(sp)
    sp.set_defaults(func=cmd_spectrum)

    sp = sub.add_parser("fit", help="fit a decaying sinusoid to a trace file (JSON output)")
    sp.add_argument("trace")
    common(sp, fmt=False)
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("crlb", help="frequency variance bound versus record length")
    sp.add_argument("--a-over-rho", type=float, default=1.0)
    sp.add_argument("--t2star", type=float, default=40.0)
    sp.add_argument("--dt", type=float, default=1.0)
    sp.add_argument("--T", default="2:1000:1", help="record lengths start:stop:step")
    common(sp)
    sp.set_defaults(func=cmd_crlb)

    sp = sub.add_parser("sensitivity", help="duty-cycle sensitivity budget (JSON output)")
    sp.add_argument("scenario", nargs="*")
    sp.add_argument("--reference", action="store_true", help="use the built-in reference scenarios")
    sp.add_argument("--amplitude", help="target field amplitude at the sensor, e.g. 1nT")
    common(sp, fmt=False)
    sp.set_defaults(func=cmd_sensitivity)

    sp = sub.add_parser("pipeline", help="phase-corrected averaging of raw photon records")
    sp.add_argument("raw", nargs="?", help="whitespace or comma separated counts")
    sp.add_argument("--synthetic", type=int, metavar="N", help="generate N synthetic records instead")
    sp.add_argument("--save-raw", help="write the generated records here")
    sp.add_argument("--synthetic-phase", help="fixed environmental phase of every synthetic record")
    sp.add_argument("--layout", default="5,60,150")
    sp.add_argument("--center", default="90deg")
    sp.add_argument("--halfwidth", default="30deg")
    sp.add_argument("--centers", help="also sweep the window center, e.g. -180deg:180deg:15deg")
    common(sp)
    sp.set_defaults(func=cmd_pipeline)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except (InputError, OSError) as exc:
        print(f"qdyne: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (PhysicsError, ConvergenceError) as exc:
        print(f"qdyne: physics error: {exc}", file=sys.stderr)
        return EXIT_PHYSICS
    except EmptyResultError as exc:
        print(f"qdyne: empty result: {exc}", file=sys.stderr)
        return EXIT_EMPTY
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
