import io
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hybrid_mbc.errors import TraceError
from hybrid_mbc.geo import EnuTrajectory, GeodeticFix, fixes_to_enu, geodetic_to_enu, \
    load_trace, parse_trace, resample, write_enu_csv

from oracles import haversine


# parse_trace ----------------------------------------------------------------

def test_parse_single_fix():
    fixes = parse_trace(b"t,lat,lon,alt\n0.0,42.0,-83.0,200.0")
    assert fixes == [GeodeticFix(0.0, 42.0, -83.0, 200.0)]


def test_parse_empty_trace():
    with pytest.raises(TraceError, match="empty trace"):
        parse_trace(b"t,lat,lon,alt\n")


def test_parse_missing_header():
    with pytest.raises(TraceError, match="missing header"):
        parse_trace(b"0.0,42.0,-83.0,200.0\n")


def test_parse_shuffled_times_names_line():
    text = "t,lat,lon,alt\n0.2,42,-83,0\n0.0,42,-83,0\n0.1,42,-83,0\n"
    with pytest.raises(TraceError, match="line 3.*non-monotone"):
        parse_trace(text)


def test_parse_malformed_row_names_line():
    with pytest.raises(TraceError, match="line 3"):
        parse_trace("t,x,y\n0,1,2\n0.1,abc,2\n", "enu")


def test_parse_crlf_bom_and_file_object():
    data = "﻿t,x,y\r\n0,1,2\r\n0.1,1.5,2.5\r\n".encode("utf-8")
    traj = parse_trace(io.BytesIO(data), "enu")
    np.testing.assert_array_equal(traj.x, [1, 1.5])


def test_parse_row_count_and_order():
    rows = "\n".join(f"{i * 0.1},{42 + i * 1e-5},-83,0" for i in range(7))
    fixes = parse_trace("t,lat,lon,alt\n" + rows)
    assert [f.t for f in fixes] == [i * 0.1 for i in range(7)]


def test_parse_rejects_out_of_range_latitude():
    with pytest.raises(TraceError, match="line 2"):
        parse_trace("t,lat,lon,alt\n0,91,0,0\n")


# geodetic_to_enu ------------------------------------------------------------

def test_enu_of_reference_is_exact_zero():
    ref = GeodeticFix(0, 42.0, -83.0, 200.0)
    assert geodetic_to_enu(ref, ref) == (0.0, 0.0, 0.0)


def test_small_northward_step():
    ref = GeodeticFix(0, 42.0, -83.0, 0.0)
    fix = GeodeticFix(0, 42.0 + 1e-5, -83.0, 0.0)
    x, y, _ = geodetic_to_enu(fix, ref)
    assert abs(x) < 1e-3
    assert y == pytest.approx(1.11, rel=0.01)
    assert y == pytest.approx(haversine(ref, fix), rel=0.01)


def test_swap_negates_at_ten_metres():
    a = GeodeticFix(0, 42.0, -83.0, 0.0)
    b = GeodeticFix(0, 42.0 + 6e-5, -83.0 + 8e-5, 0.0)
    xa, ya, _ = geodetic_to_enu(b, a)
    xb, yb, _ = geodetic_to_enu(a, b)
    assert 5 < math.hypot(xa, ya) < 15
    assert xa == pytest.approx(-xb, abs=1e-4)
    assert ya == pytest.approx(-yb, abs=1e-4)


@settings(max_examples=100)
@given(st.floats(-70, 70), st.floats(-179, 179), st.floats(0, 2 * math.pi),
       st.floats(1.0, 999.0))
def test_enu_distance_matches_haversine(lat, lon, bearing, dist):
    ref = GeodeticFix(0, lat, lon, 0.0)
    dlat = dist * math.cos(bearing) / 111_000.0
    dlon = dist * math.sin(bearing) / (111_000.0 * math.cos(math.radians(lat)))
    fix = GeodeticFix(0, lat + dlat, lon + dlon, 0.0)
    x, y, _ = geodetic_to_enu(fix, ref)
    assert math.hypot(x, y) == pytest.approx(haversine(ref, fix), rel=0.01)


def test_fixes_to_enu_uses_first_fix_as_origin():
    fixes = [GeodeticFix(0.1 * i, 42 + i * 1e-5, -83, 0) for i in range(3)]
    traj = fixes_to_enu(fixes)
    assert traj.reference == fixes[0]
    assert traj.x[0] == 0.0 and traj.y[0] == 0.0
    assert np.all(np.diff(traj.y) > 0)


# resample -------------------------------------------------------------------

def test_resample_uniform_is_identity():
    t = np.arange(20) / 10.0
    traj = EnuTrajectory(t, np.sin(t), np.cos(t))
    out = resample(traj, 10.0)
    np.testing.assert_array_equal(out.t, traj.t)
    np.testing.assert_array_equal(out.x, traj.x)


def test_resample_linear_midpoint():
    out = resample(EnuTrajectory([0.0, 1.0], [0.0, 10.0], [0.0, 0.0], rate_hz=1.0), 10.0)
    assert len(out) == 11
    assert out.x[5] == pytest.approx(5.0, abs=1e-12)


def test_resample_jittered_trace_lands_on_grid():
    rng = np.random.default_rng(1)
    t = np.cumsum(rng.uniform(0.07, 0.13, 200))
    traj = EnuTrajectory(t, 3 * t, t ** 2, rate_hz=10.0)
    out = resample(traj, 10.0)
    assert out.is_uniform()
    np.testing.assert_allclose(np.diff(out.t), 0.1, atol=1e-9)
    np.testing.assert_allclose(out.x, 3 * out.t, atol=1e-9)


def test_resample_needs_two_samples():
    with pytest.raises(TraceError):
        resample(EnuTrajectory([0.0], [0.0], [0.0]), 10.0)


def test_trajectory_rejects_repeated_time():
    with pytest.raises(TraceError):
        EnuTrajectory([0.0, 0.0], [0, 1], [0, 1])


def test_trajectory_arrays_read_only():
    traj = EnuTrajectory([0.0, 0.1], [0, 1], [0, 1])
    with pytest.raises(ValueError):
        traj.x[0] = 5


# file round trips -----------------------------------------------------------

def test_enu_csv_round_trip(tmp_path):
    t = np.arange(30) / 10.0
    traj = EnuTrajectory(t, np.sin(t) * 1e3 / 7, np.exp(t) / 3)
    path = tmp_path / "trace.csv"
    with open(path, "w", newline="") as fh:
        write_enu_csv(traj, fh)
    back = load_trace(path)
    np.testing.assert_array_equal(back.x, traj.x)
    np.testing.assert_array_equal(back.y, traj.y)


def test_load_geodetic_file(tmp_path):
    rows = "\n".join(f"{i * 0.1:.1f},{42 + i * 1e-5},-83.0,200.0" for i in range(11))
    path = tmp_path / "gps.csv"
    path.write_text("t,lat,lon,alt\n" + rows + "\n")
    traj = load_trace(path)
    assert len(traj) == 11
    assert traj.y[-1] == pytest.approx(11.1, rel=0.01)
