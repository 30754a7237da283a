"""
Constant velocity vs GP sub-models, and picking between them
"""

import numpy as np

from hybrid_mbc.models import fit_hybrid, predict, pte, select_sub_model
from hybrid_mbc.synth import HardBrake, Mixed, Cruise, ScenarioSpec, generate

## A cruise that turns into a 5 m/s^2 stop
traj = generate(ScenarioSpec(Mixed((Cruise(20.0, 2.0), HardBrake(20.0, 5.0)))), 7.0)

## Fit both sub-models on windows before and during braking
for end in (15, 29, 45):
    sl = slice(end - 9, end + 1)
    hybrid = fit_hybrid(traj.t[sl], traj.x[sl], traj.y[sl], noise_var=1e-4)
    print(f"window ending at t={traj.t[end]:.1f}s")
    for h in (2, 5, 10):
        k = end + h
        sel = select_sub_model(hybrid, traj.t[k], traj.pos(k))
        print(f"   +{h / 10:.1f}s  CV {sel.pte_cv:6.3f} m   GP {sel.pte_gp:6.3f} m   -> {sel.active}")

## The hybrid predicts with whichever sub-model is active
hybrid = hybrid.with_active("GP")
print("GP-active prediction at t=5.0:", np.round(predict(hybrid, 5.0), 3),
      "truth", traj.pos(50))
print("error", round(pte(predict(hybrid, 5.0), traj.pos(50)), 4), "m")
