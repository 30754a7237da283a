"""
Turning a raw GPS log into a uniform local trajectory
"""

import io

import numpy as np

from hybrid_mbc.geo import GeodeticFix, fixes_to_enu, geodetic_to_enu, parse_trace, resample

## A short geodetic log, slightly irregular in time
# roughly 10 m/s heading north-east near Ann Arbor
rows = ["t,lat,lon,alt"]
t = 0.0
rng = np.random.default_rng(3)
for k in range(25):
    rows.append(f"{t:.3f},{42.28 + 6.4e-5 * t:.8f},{-83.74 + 8.6e-5 * t:.8f},260.0")
    t += 0.1 + rng.uniform(-0.03, 0.03)
text = "\n".join(rows) + "\n"

fixes = parse_trace(io.StringIO(text), "geodetic")
print(f"parsed {len(fixes)} fixes, first {fixes[0]}")

## One fix relative to another
ref = fixes[0]
e, n, u = geodetic_to_enu(fixes[10], ref)
print(f"fix 10 is {e:.2f} m east, {n:.2f} m north, {u:.3f} m up of the first fix")
print("reference against itself:", geodetic_to_enu(ref, ref))

## Whole trace in the local frame, then onto a 10 Hz grid
traj = fixes_to_enu(fixes)
uniform = resample(traj, 10.0)
print(f"{len(traj)} irregular samples -> {len(uniform)} samples every {uniform.dt} s")
print("grid steps:", np.unique(np.round(np.diff(uniform.t), 12)))
speed = np.hypot(np.diff(uniform.x), np.diff(uniform.y)) / uniform.dt
print(f"speed along the trace: {speed.min():.2f} to {speed.max():.2f} m/s")

## Elevation is dropped once positions are in the plane
print(f"trajectory keeps x/y only, origin {uniform.reference.lat}, {uniform.reference.lon}")
GeodeticFix(0.0, 42.0, -83.0)  # altitude defaults to 0 when unknown
