"""
Synthetic drives standing in for recorded trips
"""

import io

import numpy as np

from hybrid_mbc.geo import parse_trace, write_enu_csv
from hybrid_mbc.synth import SCENARIOS, Cruise, HardBrake, LaneChange, Mixed, ScenarioSpec, \
    generate, scenario_to_dict

## Built-in scenarios
for name, (factory, duration) in SCENARIOS.items():
    traj = generate(factory(), duration, seed=0)
    print(f"{name:12s} {duration:5.1f} s  ends at x={traj.x[-1]:7.2f} m, y={traj.y[-1]:5.2f} m")

## Custom drive: merge left, cruise, then stop
spec = ScenarioSpec(Mixed((Cruise(15.0, 2.0), LaneChange(15.0, 3.5, 2.5),
                           Cruise(15.0, 1.0), HardBrake(15.0, 6.0))), noise_std_m=0.03)
traj = generate(spec, 9.0, seed=11)
print("custom spec:", scenario_to_dict(spec))
print("stopping distance check:", round(15.0 ** 2 / (2 * 6.0), 3), "m of braking")

## Same CSV format as real traces
buf = io.StringIO()
write_enu_csv(traj, buf)
back = parse_trace(buf.getvalue(), "enu")
print("CSV round trip exact:", np.array_equal(back.x, traj.x) and np.array_equal(back.y, traj.y))
print(buf.getvalue().splitlines()[:3])
