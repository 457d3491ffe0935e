import json

import numpy as np

from pushsumlab.analysis import compute_metrics
from pushsumlab.graphs import generate_sequence
from pushsumlab.pushsum import run_pushsum
from pushsumlab.report import (
    SCHEMA_LINE,
    format_float,
    metrics_csv_text,
    read_csv_columns,
    sha256_text,
    trace_csv_text,
    write_summary_json,
    write_trace_csv,
)


def small_trace():
    seq = generate_sequence("static-complete", n=2, horizon=2)
    return run_pushsum(seq, "default", [0.0, 2.0], 2)


class TestFloatFormat:
    def test_shortest_round_trip(self):
        assert format_float(0.1) == "0.1"
        assert format_float(1.0 / 3.0) == "0.3333333333333333"
        assert float(format_float(np.float64(2.5))) == 2.5


class TestTraceCsv:
    def test_exact_small_output(self):
        text = trace_csv_text(small_trace())
        lines = text.splitlines()
        assert lines[0] == SCHEMA_LINE
        assert lines[1] == "t,agent,y,z_0"
        assert lines[2] == "0,0,1.0,0.0"
        assert lines[3] == "0,1,1.0,2.0"
        # complete two-agent graph averages in one step
        assert lines[4] == "1,0,1.0,1.0"
        assert len(lines) == 2 + 3 * 2

    def test_sha_matches_written_file(self, tmp_path):
        tr = small_trace()
        path = tmp_path / "trace.csv"
        sha = write_trace_csv(str(path), tr)
        assert sha == sha256_text(path.read_text())

    def test_round_trip_through_reader(self, tmp_path):
        tr = small_trace()
        path = tmp_path / "trace.csv"
        write_trace_csv(str(path), tr)
        cols = read_csv_columns(str(path))
        assert np.array_equal(cols["z_0"][:2], [0.0, 2.0])
        assert np.array_equal(cols["agent"][:2], [0.0, 1.0])


class TestMetricsCsv:
    def test_empty_cells_for_missing_series(self, tmp_path):
        tr = small_trace()
        text = metrics_csv_text(compute_metrics(tr))
        rows = text.splitlines()[2:]
        # pure mixing: consensus filled, optimizer columns empty
        assert rows[0].startswith("0,1.0,")
        assert rows[0].endswith(",,,,")
        path = tmp_path / "m.csv"
        path.write_text(text)
        cols = read_csv_columns(str(path))
        assert np.all(np.isnan(cols["f_gap_avg"]))
        assert not np.any(np.isnan(cols["consensus_error"]))


class TestSummaryJson:
    def test_sorted_keys_and_array_conversion(self, tmp_path):
        path = tmp_path / "s.json"
        write_summary_json(
            str(path),
            {"b": np.array([1.0, 2.0]), "a": np.float64(0.5), "n": np.int64(3)},
        )
        text = path.read_text()
        assert text.index('"a"') < text.index('"b"')
        data = json.loads(text)
        assert data == {"a": 0.5, "b": [1.0, 2.0], "n": 3}

    def test_deterministic_bytes(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        payload = {"x": [1, 2, 3], "y": {"k": 0.25}}
        write_summary_json(str(a), payload)
        write_summary_json(str(b), payload)
        assert a.read_bytes() == b.read_bytes()
