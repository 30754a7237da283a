"""
How often each transmitter talks on the mixed demo drive
"""

from hybrid_mbc.scheduler import FULL, SWITCH, ScheduleConfig, effective_rates, \
    run_baseline_transmitter, run_mbc_transmitter
from hybrid_mbc.synth import SCENARIOS, generate

factory, duration = SCENARIOS["mixed-demo"]
truth = generate(factory(), duration, seed=0)
print(f"mixed-demo: {len(truth)} samples over {truth.duration:.1f} s")

## Sweep the error threshold
fits = {}   # window fits do not depend on the threshold
print(f"{'th':>5} {'mbc full':>9} {'switch':>7} {'mbc total':>10} {'baseline':>9}")
for th in (0.2, 0.3, 0.4, 0.5):
    cfg = ScheduleConfig(th)
    mbc = run_mbc_transmitter(truth, cfg, fits)
    base = run_baseline_transmitter(truth, cfg)
    r, b = effective_rates(mbc, truth.duration), effective_rates(base, truth.duration)
    print(f"{th:5.1f} {r.full_update_hz:9.2f} {r.switch_hz:7.2f} {r.total_hz:10.2f} {b.total_hz:9.2f}")

## Where the messages fall at 0.3 m
mbc = run_mbc_transmitter(truth, ScheduleConfig(0.3), fits)
for m in mbc.messages[:12]:
    what = f"active={m.payload.active}" if m.kind == FULL else f"-> {m.payload}"
    print(f"t={m.tx_t:5.1f}s  {m.kind:6s} {what}")
print("...", mbc.count(FULL), "full updates,", mbc.count(SWITCH), "switches")
