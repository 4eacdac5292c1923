import numpy as np
import pytest

from qdyne.exceptions import InputError
from qdyne.simulator import SimConfig, TimeTrace, run_sequence
from qdyne.sequence import build_endor_qdyne
from qdyne.traceio import (read_trace, trace_from_csv, trace_from_json, trace_to_csv,
                           trace_to_json, write_trace)


@pytest.fixture
def trace():
    return run_sequence(build_endor_qdyne(m=12), SimConfig(sensor_T1=2e-3))


@pytest.mark.parametrize("dump, load", [(trace_to_csv, trace_from_csv),
                                        (trace_to_json, trace_from_json)])
def test_round_trip_is_lossless(trace, dump, load):
    back = load(dump(trace))
    assert np.array_equal(back.values, trace.values)
    assert back.dt == trace.dt and back.kind == trace.kind
    assert back.metadata["config"]["sensor_T1"] == 2e-3
    assert dump(back) == dump(trace)


def test_csv_layout(trace):
    lines = trace_to_csv(trace).splitlines()
    header = lines.index("index,time_s,value")
    assert all(line.startswith("# ") for line in lines[:header])
    assert len(lines) - header - 1 == 12


@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_file_round_trip(tmp_path, trace, fmt):
    path = tmp_path / f"t.{fmt}"
    write_trace(trace, path, fmt)
    assert np.array_equal(read_trace(path).values, trace.values)


def test_malformed_inputs():
    with pytest.raises(InputError):
        trace_from_csv("index,time_s,value\n0,0,1\n")
    with pytest.raises(InputError):
        trace_from_json("{not json")
    with pytest.raises(InputError):
        TimeTrace([1.0, np.nan], 1.0)
    with pytest.raises(InputError):
        TimeTrace([1.0], 0.0)
