# How the patience law is rescaled with the system size, and what survives
# in the limit.
#
# The queue is studied at diffusion scale, where waits are O(1/sqrt(n)).
# Whether anyone abandons at that scale depends on how much probability the
# patience law puts near the origin, so each mode of PatienceSpec answers one
# question: what is sqrt(n) * F_n(x / sqrt(n)) as n grows?  That limit, f(x),
# is the only trace of the patience law left in the limit equations.

import numpy as np

from httq import DistributionSpec, PatienceSpec, constant_hazard, make_rng

x = np.array([0.5, 1.0, 2.0])

# Mode 1: no scaling. Every system uses the same law F; only its density at
# the origin survives, f(x) = F'(0) * x.
plain = PatienceSpec(mode="no_scaling",
                     distribution=DistributionSpec.exponential(2.0))
f = plain.limit_function()
print("no_scaling exp(2):  f(x) =", f(x), " (slope = rate at 0)")

for n in (100, 10_000, 1_000_000):
    cdf_n = plain.cdf_n(n)
    scaled = np.sqrt(n) * cdf_n(x / np.sqrt(n))
    print(f"  n={n:>9}: sqrt(n) F_n(x/sqrt(n)) = {np.round(scaled, 4)}")

# Mode 2: hazard-rate scaling. The per-n law keeps a fixed hazard shape h
# but compresses it; the limit is the integral f(x) = int_0^x h.
hz = PatienceSpec(mode="hazard_rate", hazard=constant_hazard(0.7))
print("\nhazard_rate 0.7:    f(x) =", hz.limit_function()(x), " (0.7 * x)")

# Mode 3: the limit function handed over directly; the per-n law is
# manufactured as F_n(x) = min(1, f(sqrt(n) x)/sqrt(n)).
quad = PatienceSpec(mode="direct_f", f=lambda t: 0.25 * t * t)
print(f"direct_f t^2/4:     F_400(0.1) = {float(quad.cdf_n(400)(0.1)):.4f}  "
      f"(= f(sqrt(400)*0.1)/sqrt(400) = {0.25 * 4.0 / 20.0:.4f})")

# Sampling uses the same per-n law (inverse transform under the hood).
draws = quad.sampler_n(400)(make_rng(0, 0, "patience"), 100_000)
print(f"  empirical F_400(0.1) from 1e5 draws: {np.mean(draws <= 0.1):.4f}")

# No patience law may put an atom at the origin: everyone tolerates some
# wait, however small, so F_n(0) = 0 in every mode.
print(f"\nF_n(0) in every mode: {float(plain.cdf_n(50)(0.0)):.0f}, "
      f"{float(hz.cdf_n(50)(0.0)):.0f}, {float(quad.cdf_n(50)(0.0)):.0f}")
