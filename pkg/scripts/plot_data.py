"""Quick-look plots of files written by the ``qdyne`` CLI.

Usage::

    python scripts/plot_data.py trace.csv           # simulate output
    python scripts/plot_data.py sweep.json          # sweep --format json
    python scripts/plot_data.py crlb.csv --save crlb.png

Needs matplotlib, which the package itself does not depend on.
"""

import argparse
import json
import sys

import numpy as np

from qdyne.traceio import read_trace


def _plot_sweep(ax, data):
    freqs = np.asarray(data["frequencies_hz"]) / 1e3
    det = np.array([r["detuning_hz"] for r in data["rows"]]) / 1e3
    amps = np.array([r["amplitudes"] for r in data["rows"]])
    ax.pcolormesh(det, freqs, amps.T, shading="nearest")
    ax.plot(det, [r["linear_hz"] / 1e3 for r in data["rows"]], "w--", lw=1)
    ax.set(xlabel="detuning [kHz]", ylabel="frequency [kHz]")


def _plot_table(ax, path):
    with open(path, encoding="utf-8") as fh:
        lines = [line for line in fh if not line.startswith("#")]
    rows = np.genfromtxt(lines, delimiter=",", names=True)
    x, *ys = rows.dtype.names
    for y in ys[:4]:
        ax.plot(rows[x], rows[y], label=y)
    ax.set(xlabel=x)
    ax.legend()


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("path")
    p.add_argument("--save", help="write the figure here instead of showing it")
    args = p.parse_args(argv)
    try:
        import matplotlib
        if args.save:
            matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        sys.exit("plot_data.py needs matplotlib (pip install matplotlib)")

    fig, ax = plt.subplots()
    with open(args.path, encoding="utf-8") as fh:
        head = fh.read(4096)
    if head.lstrip().startswith("{") and '"frequencies_hz"' in head:
        with open(args.path, encoding="utf-8") as fh:
            _plot_sweep(ax, json.load(fh))
    elif "index,time_s,value" in head or head.lstrip().startswith("{"):
        trace = read_trace(args.path)
        ax.plot(trace.times * 1e3, trace.values, ".-")
        ax.set(xlabel="time [ms]", ylabel=trace.kind)
    else:
        _plot_table(ax, args.path)
    ax.set_title(args.path)
    if args.save:
        fig.savefig(args.save, dpi=120)
    else:
        plt.show()


if __name__ == "__main__":
    main()
