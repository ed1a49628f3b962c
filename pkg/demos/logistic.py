"""Success probability at a new operating point.

Eight trials at different loads ``x`` ended in success or failure.  With a
flat prior on the logistic coefficients, the posterior of
``theta = P(success | x = z)`` follows by a change of variables.  At loads
inside the tested range the distribution is tight; extrapolating widens it.

Run:  python3 demos/logistic.py
"""

from betalike import BinaryOutcomeData, build_logistic, logistic_theta_density

data = BinaryOutcomeData(success_predictors=(0.2, 0.5, 0.9, 1.1, 1.6),
                         failure_predictors=(0.7, 1.8, 2.3))
posterior = build_logistic(data)
for w in posterior.warnings:
    print("note:", w)

print(" z     mean    sd      mass beyond the 1e-12 clip")
for z in (0.0, 1.0, 2.0, 3.5):
    d = logistic_theta_density(posterior, z)
    c = d.cumulants()
    print(f"{z:4.1f}  {c.mu:.4f}  {c.sigma:.4f}  {d.metadata['mass_outside_table']:.1e}")

# With every predictor equal the slope drops out and theta is Beta(r, n - r).
flat = logistic_theta_density(build_logistic(BinaryOutcomeData((1.0,) * 3, (1.0,) * 2)), 1.0)
print(f"\n3 of 5 at one load: mean {flat.mean():.6f} (Beta(3, 2) mean 0.6)")
