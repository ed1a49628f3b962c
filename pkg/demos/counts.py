"""Event counts: Poisson, and Weibull renewal processes.

A pump logged 3, 1, 4 and 2 trips over four 1-week windows.  Under a
Poisson model the moments of ``theta = P(exactly m trips next week)`` have
closed forms; a fourth-order maximum-entropy density turns them into a
full distribution.  When times between trips are Weibull instead, the count
probabilities come from MaxEnt approximations to sums of waiting times.

Run:  python3 demos/counts.py
"""

import warnings

from betalike import (CountData, ReliabilityData, build_poisson, build_weibull,
                      maxent_theta_density, moments_to_cumulants, poisson_like_pmf,
                      poisson_like_theta_distribution, poisson_theta_moments)

counts = CountData(counts=(3, 1, 4, 2), window_tau=1.0, total_time_T=4.0, prior_guess_t=1.0)
posterior = build_poisson(counts)
print(f"rate posterior Gamma({posterior.shape:g}, {posterior.rate:g})")

for m in range(5):
    moments = poisson_theta_moments(posterior, 1.0, m)
    d = maxent_theta_density(moments_to_cumulants(moments))
    print(f"P({m} trips): mean {moments.m1:.4f}  sd {d.cumulants().sigma:.4f}")

# Weibull waiting times with shape 1 are exponential, so these should be Poisson.
print("\nshape 1, rate 2, one week:",
      " ".join(f"{poisson_like_pmf(1.0, 2.0, 1.0, m):.3f}" for m in range(5)))
print("shape 2, rate 2, one week:",
      " ".join(f"{poisson_like_pmf(2.0, 2.0, 1.0, m):.3f}" for m in range(5)))

# Uncertainty in (k, lambda) from inter-trip times turns into a distribution of theta.
gaps = ReliabilityData(failures=(0.3, 0.2, 0.5, 0.1, 0.4, 0.25, 0.35, 0.6), prior_guess_t=0.4)
with warnings.catch_warnings():
    warnings.simplefilter("ignore", RuntimeWarning)
    density, pushforward = poisson_like_theta_distribution(build_weibull(gaps), 1.0, 2,
                                                           grid_n=16)
print(f"\nP(2 events in 1 week) from {len(pushforward.components)} posterior cells: "
      f"mean {pushforward.mean():.4f}, MaxEnt fit mean {density.mean():.4f}")
