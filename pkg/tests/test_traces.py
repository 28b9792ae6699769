import numpy as np
import pytest

import traceverify as tv
from traceverify.errors import TraceFormatError


def test_parse_basic_two_traces():
    ts = tv.parse_traces("x,y\n0,1\n1,1\n\n0,0\n")
    assert len(ts) == 2
    assert ts.lengths() == [2, 1]
    assert ts.schema.names == ("x", "y")
    np.testing.assert_array_equal(ts.traces[0].states, [[0, 1], [1, 1]])


def test_ragged_row_reports_line_number():
    with pytest.raises(TraceFormatError, match="ragged row at line 3"):
        tv.parse_traces("x,y\n0,1\n0,1,2\n")


def test_non_numeric_cell_reports_line_number():
    with pytest.raises(TraceFormatError, match="non-numeric cell at line 2"):
        tv.parse_traces("x,y\n0,oops\n")


def test_empty_file_rejected():
    with pytest.raises(TraceFormatError, match="empty file"):
        tv.parse_traces("")
    with pytest.raises(TraceFormatError, match="no traces"):
        tv.parse_traces("x,y\n")


def test_malformed_header():
    with pytest.raises(TraceFormatError, match="malformed header at line 1"):
        tv.parse_traces("x,,y\n0,1,2\n")
    with pytest.raises(TraceFormatError, match="duplicate"):
        tv.parse_traces("x,x\n0,1\n")


def test_running_example_file_loads_100_traces(running_file):
    ts = tv.load_traces(running_file)
    assert len(ts) == 100
    assert ts.schema.names == ("observe0",)
    assert sorted(set(ts.lengths())) == [3, 4]


def test_kind_inference():
    ts = tv.parse_traces("a:bool,b,c\n0,1,1.5\n1,2,2\n")
    assert ts.schema.kinds == ("bool", "int", "real")


def test_declared_bool_with_bad_value():
    with pytest.raises(TraceFormatError, match="non-0/1"):
        tv.parse_traces("a:bool\n2\n")


def test_round_trip_modulo_whitespace():
    text = "x,y:bool\n0,1\n1.5,0\n\n\n2,1\n"
    ts = tv.parse_traces(text)
    dumped = tv.dump_traces(ts)
    again = tv.parse_traces(dumped)
    assert again.schema == ts.schema
    assert len(again) == len(ts)
    for a, b in zip(again, ts):
        np.testing.assert_array_equal(a.states, b.states)
    # Serializing a second time is a fixed point.
    assert tv.dump_traces(again) == dumped


def test_trace_set_schema_conformance():
    schema = tv.VariableSchema(("x", "y"), ("int", "int"))
    with pytest.raises(TraceFormatError, match="variables"):
        tv.TraceSet(schema, (tv.ConcreteTrace(np.zeros((2, 3))),))


def test_empty_trace_rejected():
    with pytest.raises(TraceFormatError, match="at least one state"):
        tv.ConcreteTrace(np.zeros((0, 2)))


def test_statistics():
    ts = tv.parse_traces("x\n0\n1\n\n0\n")
    st = tv.trace_statistics(ts)
    assert st.num_traces == 2
    assert st.total_states == 3
    assert st.distinct_states == 2
    assert st.length_histogram == {1: 1, 2: 1}
