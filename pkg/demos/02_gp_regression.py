"""
Exact GP regression on a 10-sample window
"""

import numpy as np

from hybrid_mbc import gp

ts = np.arange(10) * 0.1
ys = 12.0 * ts - 2.5 * ts ** 2          # a braking vehicle, position along the road

## Fixed kernel: linear trend plus a smooth RBF residual
spec = gp.DEFAULT_KERNEL
model = gp.fit(ts, ys, spec, noise_var=0.01)
print("prior mean (window average):", round(model.mean_fn, 4))
print("log marginal likelihood:", round(gp.log_marginal_likelihood(model), 4))

## Hyperparameters chosen by evidence maximisation
tuned = gp.optimize_hyperparams(ts, ys, spec, noise_var=1e-4)
print("tuned kernel:", tuned)
fitted = gp.fit(ts, ys, tuned, noise_var=1e-4)
print("log marginal likelihood after tuning:", round(gp.log_marginal_likelihood(fitted), 4))

## Extrapolating past the window
for t_star in (1.0, 1.2, 1.5):
    truth = 12.0 * t_star - 2.5 * t_star ** 2
    mu = gp.predict_mean(fitted, t_star)
    sd = gp.predict_var(fitted, t_star) ** 0.5
    print(f"t={t_star:.1f}s  mean {mu:8.4f}  truth {truth:8.4f}  sd {sd:.4f}")

## Kernels serialise to plain JSON-ready dicts
print(gp.kernel_to_dict(tuned))
