"""How likely is a unit to survive the next mission?

Four units failed at 1.2, 2.5, 3.1 and 4.0 hours, two more were pulled
from test still running at 5 hours, and before testing an engineer guessed
a typical life of about 3 hours.  We ask for the probability ``theta`` of
surviving a 1-hour mission, under an Exponential and a Weibull life model,
and then ask the data which model it prefers.

Run:  python3 demos/reliability.py
"""

import numpy as np
from scipy.integrate import cumulative_trapezoid

from betalike import (PriorRange, ReliabilityData, build_exponential, build_weibull,
                      exponential_theta_density, model_posterior, weibull_theta_density)

data = ReliabilityData(failures=(1.2, 2.5, 3.1, 4.0), survivals=(5.0, 5.0),
                       prior_guess_t=3.0)
tau = 1.0

exp_theta = exponential_theta_density(build_exponential(data), tau)
wei_theta = weibull_theta_density(build_weibull(data), tau)


def summary(name, d):
    c = d.cumulants()
    cdf = cumulative_trapezoid(d.density, d.theta, initial=0.0)
    lo, hi = np.interp([0.05, 0.95], cdf / cdf[-1], d.theta)
    print(f"{name:12s} mean {c.mu:.4f}  sd {c.sigma:.4f}  skew {c.gamma:+.3f}  "
          f"90% interval [{lo:.3f}, {hi:.3f}]")


print(f"P(survive {tau} h), six units, prior guess 3 h")
summary("exponential", exp_theta)
summary("weibull", wei_theta)

# A constant hazard is a strong assumption; let the evidence decide.
report = model_posterior(data, PriorRange(0.3, 6.0))
for name, p in report.model_posteriors.items():
    print(f"p({name} | data) = {p:.3f}")

# Density tables for plotting: theta<TAB>density with a metadata header.
print()
print("\n".join(wei_theta.to_tsv().splitlines()[:8]))
print("...")
