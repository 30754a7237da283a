"""
Tracking a neighbour over a channel that loses 40% of packets
"""

import numpy as np

from hybrid_mbc.channel import ChannelConfig, apply_channel
from hybrid_mbc.scheduler import FULL, ScheduleConfig, run_mbc_transmitter
from hybrid_mbc.synth import SCENARIOS, generate
from hybrid_mbc.tracker import common_support, ecdf, match_baseline_rate, percentile, \
    run_receiver

factory, duration = SCENARIOS["mixed-demo"]
truth = generate(factory(), duration, seed=0)
cfg = ScheduleConfig(0.3)

## Transmit, then give the baseline the same message budget
mbc = run_mbc_transmitter(truth, cfg)
th_base, base = match_baseline_rate(truth, mbc.count(FULL), cfg)
print(f"MBC sends {mbc.count(FULL)} full updates; baseline matched at "
      f"threshold {th_base:.3f} m sends {len(base.messages)} messages")

## Lossless first
for name, log in (("mbc", mbc), ("baseline", base)):
    s = run_receiver(log, truth)
    print(f"PER 0    {name:9s} P50 {percentile(s, 0.5):.3f}  P90 {percentile(s, 0.9):.3f} m")

## Then several seeds of a 40% erasure channel
for seed in range(5):
    got = {}
    for name, log in (("mbc", mbc), ("baseline", base)):
        got[name] = run_receiver(apply_channel(log, ChannelConfig(0.4, seed * 2 + len(name))), truth)
    m, b = common_support(got["mbc"], got["baseline"])
    print(f"PER 0.4 seed {seed}: P90 mbc {percentile(m, 0.9):.3f} m, "
          f"baseline {percentile(b, 0.9):.3f} m")

## ECDF points for plotting
pts = np.array(ecdf(run_receiver(mbc, truth)))
print("ECDF (first rows):")
print(pts[:5])
