"""
GPS trace ingestion: CSV parsing, WGS-84 geodetic -> local ENU conversion and
uniform resampling.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import List, Optional, Union

import numpy as np

from .errors import ConfigError, TraceError

__all__ = [
    "GeodeticFix",
    "EnuTrajectory",
    "parse_trace",
    "geodetic_to_ecef",
    "geodetic_to_enu",
    "fixes_to_enu",
    "resample",
    "load_trace",
    "write_enu_csv",
    "WGS84_A",
    "WGS84_F",
]

WGS84_A = 6378137.0
WGS84_F = 1 / 298.257223563
WGS84_E2 = WGS84_F * (2 - WGS84_F)

GEODETIC_HEADER = ("t", "lat", "lon", "alt")
ENU_HEADER = ("t", "x", "y")


@dataclass(frozen=True)
class GeodeticFix:
    t: float
    lat: float
    lon: float
    alt: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.t):
            raise TraceError(f"non-finite timestamp {self.t}")
        if not -90.0 <= self.lat <= 90.0:
            raise TraceError(f"latitude {self.lat} out of range")
        if not -180.0 <= self.lon <= 180.0:
            raise TraceError(f"longitude {self.lon} out of range")


@dataclass(frozen=True, eq=False)
class EnuTrajectory:
    """Time-stamped East/North positions (meters) in a local tangent frame.

    ``t``, ``x`` and ``y`` are read-only float arrays of equal length.
    """

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    rate_hz: float = 10.0
    reference: Optional[GeodeticFix] = None

    def __post_init__(self):
        t, x, y = (np.array(a, dtype=float) for a in (self.t, self.x, self.y))
        if t.ndim != 1 or t.shape != x.shape or t.shape != y.shape:
            raise TraceError("t, x and y must be 1-d arrays of equal length")
        if len(t) == 0:
            raise TraceError("empty trace")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise TraceError("trajectory contains non-finite values")
        if np.any(np.diff(t) <= 0):
            raise TraceError("timestamps must be strictly increasing")
        if not self.rate_hz > 0:
            raise ConfigError("rate_hz must be positive")
        for name, arr in (("t", t), ("x", x), ("y", y)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __len__(self):
        return len(self.t)

    @property
    def dt(self) -> float:
        return 1.0 / self.rate_hz

    @property
    def duration(self) -> float:
        return float(self.t[-1] - self.t[0])

    def pos(self, i):
        return np.array([self.x[i], self.y[i]])

    def is_uniform(self, tol=1e-9) -> bool:
        if len(self.t) < 2:
            return True
        return bool(np.all(np.abs(np.diff(self.t) - self.dt) <= tol))

    def index_of(self, t: float) -> int:
        """Grid index of time ``t`` (the trajectory must be uniform)."""
        return int(round((t - self.t[0]) * self.rate_hz))


def _fields(row, lineno, n):
    if len(row) != n:
        raise TraceError(f"line {lineno}: expected {n} fields, got {len(row)}")
    try:
        vals = [float(v) for v in row]
    except ValueError as exc:
        raise TraceError(f"line {lineno}: {exc}") from None
    if not all(math.isfinite(v) for v in vals):
        raise TraceError(f"line {lineno}: non-finite value")
    return vals


def parse_trace(source, format: str = "geodetic", rate_hz: float = 10.0
                ) -> Union[List[GeodeticFix], EnuTrajectory]:
    """Parse a headed CSV trace.

    ``source`` may be bytes, text, or a binary/text file object. Returns a list
    of :class:`GeodeticFix` for ``format="geodetic"`` (header ``t,lat,lon,alt``)
    or an :class:`EnuTrajectory` for ``format="enu"`` (header ``t,x,y``).
    """
    if format not in ("geodetic", "enu"):
        raise ConfigError(f"unknown trace format {format!r}")
    if hasattr(source, "read"):
        source = source.read()
    if isinstance(source, (bytes, bytearray)):
        try:
            source = bytes(source).decode("utf-8-sig")
        except UnicodeDecodeError as exc:
            raise TraceError(f"trace is not UTF-8: {exc}") from None

    expected = GEODETIC_HEADER if format == "geodetic" else ENU_HEADER
    reader = csv.reader(io.StringIO(source, newline=""))
    header = None
    rows = []
    for row in reader:
        if not row or all(not c.strip() for c in row):
            continue
        cells = [c.strip() for c in row]
        if header is None:
            header = tuple(c.lower() for c in cells)
            if header != expected:
                raise TraceError(
                    f"line {reader.line_num}: missing header {','.join(expected)}"
                    f" (got {','.join(cells)})")
            continue
        rows.append((reader.line_num, _fields(cells, reader.line_num, len(expected))))
    if header is None:
        raise TraceError(f"missing header {','.join(expected)}")
    if not rows:
        raise TraceError("empty trace")
    for (_, prev), (lineno, cur) in zip(rows, rows[1:]):
        if cur[0] <= prev[0]:
            raise TraceError(f"line {lineno}: non-monotone timestamp {cur[0]} after {prev[0]}")

    if format == "geodetic":
        fixes = []
        for lineno, vals in rows:
            try:
                fixes.append(GeodeticFix(*vals))
            except TraceError as exc:
                raise TraceError(f"line {lineno}: {exc}") from None
        return fixes
    arr = np.array([vals for _, vals in rows])
    return EnuTrajectory(arr[:, 0], arr[:, 1], arr[:, 2], rate_hz=rate_hz)


def geodetic_to_ecef(lat, lon, alt):
    lat, lon = np.radians(lat), np.radians(lon)
    slat, clat = np.sin(lat), np.cos(lat)
    n = WGS84_A / np.sqrt(1.0 - WGS84_E2 * slat * slat)
    return ((n + alt) * clat * np.cos(lon),
            (n + alt) * clat * np.sin(lon),
            (n * (1.0 - WGS84_E2) + alt) * slat)


def geodetic_to_enu(fix: GeodeticFix, reference: GeodeticFix):
    """East/North/Up offset (meters) of ``fix`` relative to ``reference``."""
    if fix.lat == reference.lat and fix.lon == reference.lon and fix.alt == reference.alt:
        return 0.0, 0.0, 0.0
    x, y, z = geodetic_to_ecef(fix.lat, fix.lon, fix.alt)
    x0, y0, z0 = geodetic_to_ecef(reference.lat, reference.lon, reference.alt)
    return tuple(float(v) for v in _ecef_delta_to_enu(x - x0, y - y0, z - z0, reference))


def _ecef_delta_to_enu(dx, dy, dz, reference):
    lat, lon = math.radians(reference.lat), math.radians(reference.lon)
    slat, clat = math.sin(lat), math.cos(lat)
    slon, clon = math.sin(lon), math.cos(lon)
    e = -slon * dx + clon * dy
    n = -slat * clon * dx - slat * slon * dy + clat * dz
    u = clat * clon * dx + clat * slon * dy + slat * dz
    return e, n, u


def fixes_to_enu(fixes, reference: Optional[GeodeticFix] = None,
                 rate_hz: float = 10.0) -> EnuTrajectory:
    """Convert fixes to a 2-d trajectory; elevation is dropped after conversion.

    The reference defaults to the first fix.
    """
    if not fixes:
        raise TraceError("empty trace")
    ref = reference or fixes[0]
    lat = np.array([f.lat for f in fixes])
    lon = np.array([f.lon for f in fixes])
    alt = np.array([f.alt for f in fixes])
    x, y, z = geodetic_to_ecef(lat, lon, alt)
    x0, y0, z0 = geodetic_to_ecef(ref.lat, ref.lon, ref.alt)
    e, n, _ = _ecef_delta_to_enu(x - x0, y - y0, z - z0, ref)
    return EnuTrajectory(np.array([f.t for f in fixes]), e, n, rate_hz=rate_hz, reference=ref)


def resample(traj: EnuTrajectory, rate_hz: float = 10.0) -> EnuTrajectory:
    """Linearly interpolate onto a uniform grid starting at the first sample."""
    if not rate_hz > 0:
        raise ConfigError("rate_hz must be positive")
    if len(traj) < 2:
        raise TraceError("resampling needs at least 2 samples")
    if traj.rate_hz == rate_hz and traj.is_uniform():
        return traj
    t0 = traj.t[0]
    n = int(math.floor((traj.t[-1] - t0) * rate_hz + 1e-9)) + 1
    grid = t0 + np.arange(n) / rate_hz
    return EnuTrajectory(grid, np.interp(grid, traj.t, traj.x), np.interp(grid, traj.t, traj.y),
                         rate_hz=rate_hz, reference=traj.reference)


def load_trace(path, rate_hz: float = 10.0) -> EnuTrajectory:
    """Read either CSV format from ``path`` (sniffed from the header) and resample."""
    with open(path, "rb") as fh:
        data = fh.read()
    first = data.decode("utf-8-sig", errors="replace").lstrip().split("\n", 1)[0]
    cols = tuple(c.strip().lower() for c in first.split(","))
    if cols == ENU_HEADER:
        traj = parse_trace(data, "enu", rate_hz=rate_hz)
    else:
        traj = fixes_to_enu(parse_trace(data, "geodetic"), rate_hz=rate_hz)
    return resample(traj, rate_hz)


def write_enu_csv(traj: EnuTrajectory, fh) -> None:
    """Write ``t,x,y`` rows with round-trip float formatting."""
    fh.write("t,x,y\n")
    for t, x, y in zip(traj.t, traj.x, traj.y):
        fh.write(f"{float(t)!r},{float(x)!r},{float(y)!r}\n")
