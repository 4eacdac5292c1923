"""Reading and writing traces as CSV or JSON.

CSV files start with ``# key: value`` metadata lines (values JSON-encoded)
followed by the header ``index,time_s,value``.
"""

import csv
import io
import json

import numpy as np

from .exceptions import InputError
from .simulator import TimeTrace

CSV_HEADER = ("index", "time_s", "value")


def _meta(trace):
    rest = {k: v for k, v in trace.metadata.items() if k not in ("sampling_interval_s", "kind")}
    return {"sampling_interval_s": trace.dt, "kind": trace.kind, **rest}


def trace_to_csv(trace):
    buf = io.StringIO()
    for key, value in _meta(trace).items():
        buf.write(f"# {key}: {json.dumps(value, sort_keys=True)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for i, (t, v) in enumerate(zip(trace.times, trace.values)):
        writer.writerow((i, repr(float(t)), repr(float(v))))
    return buf.getvalue()


def trace_to_json(trace):
    records = [{"index": i, "time_s": float(t), "value": float(v)}
               for i, (t, v) in enumerate(zip(trace.times, trace.values))]
    return json.dumps({"metadata": _meta(trace), "records": records}, indent=1, sort_keys=True) + "\n"


def _from_parts(meta, values):
    meta = dict(meta)
    try:
        dt = float(meta.pop("sampling_interval_s"))
    except (KeyError, TypeError, ValueError):
        raise InputError("trace metadata lacks a valid sampling_interval_s") from None
    kind = meta.pop("kind", "expectation_Sz")
    return TimeTrace(np.asarray(values, dtype=float), dt, kind, meta)


def trace_from_csv(text):
    meta, rows = {}, []
    lines = text.splitlines()
    body = []
    for line in lines:
        if line.startswith("#"):
            key, sep, raw = line[1:].partition(":")
            if not sep:
                raise InputError(f"bad metadata line {line!r}")
            try:
                meta[key.strip()] = json.loads(raw)
            except json.JSONDecodeError:
                meta[key.strip()] = raw.strip()
        elif line.strip():
            body.append(line)
    reader = csv.reader(body)
    header = next(reader, None)
    if header is None or tuple(h.strip() for h in header) != CSV_HEADER:
        raise InputError(f"CSV header must be {','.join(CSV_HEADER)}")
    for row in reader:
        if len(row) != 3:
            raise InputError(f"malformed CSV row {row!r}")
        try:
            rows.append(float(row[2]))
        except ValueError:
            raise InputError(f"non-numeric value {row[2]!r}") from None
    return _from_parts(meta, rows)


def trace_from_json(text):
    try:
        doc = json.loads(text)
        values = [r["value"] for r in doc["records"]]
        meta = doc["metadata"]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise InputError(f"malformed JSON trace: {exc}") from None
    return _from_parts(meta, values)


def write_trace(trace, path, fmt="csv"):
    text = {"csv": trace_to_csv, "json": trace_to_json}[fmt](trace)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def read_trace(path):
    """Load a CSV or JSON trace, picking the format from the content."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if text.lstrip().startswith("{"):
        return trace_from_json(text)
    return trace_from_csv(text)
