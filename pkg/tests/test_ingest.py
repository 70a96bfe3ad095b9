import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from toepseg import (
    IntervalSeries,
    build_windows,
    read_interval_csv,
    write_interval_csv,
)
from toepseg.errors import (
    IntervalOrderViolation,
    MissingCell,
    ParseError,
    WindowTooLarge,
)

from conftest import series_from_arrays


def write_csv(path, rows, header="t,series,lower,upper"):
    path.write_text(header + "\n" + "\n".join(rows) + ("\n" if rows else ""))
    return path


class TestReadIntervalCsv:
    def test_transcribes_single_series(self, tmp_path):
        p = write_csv(tmp_path / "a.csv", ["1,1,0,1", "2,1,2,3"])
        s = read_interval_csv(p)
        assert s.T == 2 and s.n == 1
        assert np.array_equal(s.lower, [[0.0], [2.0]])
        assert np.array_equal(s.upper, [[1.0], [3.0]])

    def test_rows_may_arrive_in_any_order(self, tmp_path):
        p = write_csv(tmp_path / "a.csv",
                      ["2,1,2,3", "1,2,0,0", "1,1,0,1", "2,2,1,2"])
        s = read_interval_csv(p)
        assert s.T == 2 and s.n == 2
        assert s.lower[0, 1] == 0.0 and s.upper[1, 0] == 3.0

    def test_lower_above_upper_rejected(self, tmp_path):
        p = write_csv(tmp_path / "a.csv", ["1,1,5,2"])
        with pytest.raises(IntervalOrderViolation) as err:
            read_interval_csv(p)
        assert err.value.t == 1 and err.value.series == 1

    def test_missing_cell_rejected(self, tmp_path):
        p = write_csv(tmp_path / "a.csv", ["1,1,0,1", "2,2,0,1", "2,1,0,1"])
        with pytest.raises(MissingCell):
            read_interval_csv(p)

    def test_duplicate_cell_rejected(self, tmp_path):
        p = write_csv(tmp_path / "a.csv", ["1,1,0,1", "1,1,0,2"])
        with pytest.raises(ParseError):
            read_interval_csv(p)

    def test_bad_header_rejected(self, tmp_path):
        p = write_csv(tmp_path / "a.csv", ["1,1,0,1"], header="time,s,l,u")
        with pytest.raises(ParseError):
            read_interval_csv(p)

    def test_non_numeric_rejected(self, tmp_path):
        p = write_csv(tmp_path / "a.csv", ["1,1,x,1"])
        with pytest.raises(ParseError):
            read_interval_csv(p)

    def test_empty_file_rejected(self, tmp_path):
        p = tmp_path / "a.csv"
        p.write_text("")
        with pytest.raises(ParseError):
            read_interval_csv(p)

    def test_zero_based_index_rejected(self, tmp_path):
        p = write_csv(tmp_path / "a.csv", ["0,1,0,1"])
        with pytest.raises(ParseError):
            read_interval_csv(p)


class TestRoundTrip:
    def test_write_read_exact(self, tmp_path, rng):
        lower = rng.standard_normal((7, 3))
        upper = lower + np.abs(rng.standard_normal((7, 3)))
        s = series_from_arrays(lower, upper)
        p = tmp_path / "a.csv"
        write_interval_csv(s, p)
        back = read_interval_csv(p)
        assert np.array_equal(back.lower, s.lower)
        assert np.array_equal(back.upper, s.upper)

    @settings(max_examples=25, deadline=None)
    @given(lows=st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=8),
           gaps=st.lists(st.floats(0, 1e6), min_size=2, max_size=8))
    def test_round_trip_property(self, tmp_path_factory, lows, gaps):
        m = min(len(lows), len(gaps))
        lower = np.asarray(lows[:m]).reshape(-1, 1)
        upper = lower + np.asarray(gaps[:m]).reshape(-1, 1)
        s = series_from_arrays(lower, upper)
        p = tmp_path_factory.mktemp("rt") / "a.csv"
        write_interval_csv(s, p)
        back = read_interval_csv(p)
        assert np.array_equal(back.lower, s.lower)
        assert np.array_equal(back.upper, s.upper)


class TestIntervalSeries:
    def test_shape_mismatch_rejected(self):
        with pytest.raises(ParseError):
            IntervalSeries(lower=np.zeros((3, 2)), upper=np.zeros((3, 3)))

    def test_non_finite_rejected(self):
        with pytest.raises(ParseError):
            IntervalSeries(lower=np.array([[np.nan]]), upper=np.array([[1.0]]))


class TestBuildWindows:
    def test_consecutive_values_stacked(self):
        s = series_from_arrays([[0.0], [1.0], [2.0]], [[1.0], [2.0], [3.0]])
        b = build_windows(s, 2)
        assert b.count == 2
        assert np.array_equal(b.lower_vecs, [[0.0, 1.0], [1.0, 2.0]])

    def test_window_equal_to_series_length(self):
        s = series_from_arrays([[0.0], [1.0]], [[1.0], [2.0]])
        b = build_windows(s, 2)
        assert b.count == 1
        assert np.array_equal(b.lower_vecs[0], [0.0, 1.0])

    def test_count_formula_matches_enumeration(self, rng):
        T, n = 23, 3
        lower = rng.standard_normal((T, n))
        s = series_from_arrays(lower, lower + 1.0)
        for w in (1, 2, 5, 23):
            b = build_windows(s, w)
            # oracle: enumerate every start offset with a full window
            starts = [r for r in range(T) if r + w <= T]
            assert b.count == len(starts) == T - w + 1
            for r in starts:
                assert np.array_equal(b.lower_vecs[r],
                                      lower[r : r + w].reshape(-1))

    def test_layout_is_time_major(self, rng):
        n, w = 3, 4
        lower = rng.standard_normal((6, n))
        s = series_from_arrays(lower, lower + 1.0)
        b = build_windows(s, w)
        for j in range(n * w):
            assert b.lower_vecs[0, j] == lower[j // n, j % n]

    def test_source_index_marks_window_end(self, rng):
        lower = rng.standard_normal((5, 1))
        b = build_windows(series_from_arrays(lower, lower + 1.0), 3)
        assert list(b.source_index) == [3, 4, 5]

    def test_window_larger_than_series_rejected(self):
        s = series_from_arrays([[0.0]], [[1.0]])
        with pytest.raises(WindowTooLarge):
            build_windows(s, 2)

    def test_zero_width_rejected(self):
        s = series_from_arrays([[0.0]], [[1.0]])
        with pytest.raises(WindowTooLarge):
            build_windows(s, 0)
