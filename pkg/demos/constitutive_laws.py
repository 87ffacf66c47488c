"""Conductivity of Darcy, two-term and three-term Forchheimer laws.

K(xi) = 1/g(s(xi)) where s g(s) = xi.  Darcy keeps K constant; every extra
velocity power makes K decay like xi^(-a) with a = alpha_N/(alpha_N + 1).
The energy density H sits between K xi^2 and 2 K xi^2.
"""
import numpy as np

from forchflow import ForchheimerLaw, eval_H, eval_K, fit_K_bounds, inverse_s

laws = {
    "darcy": ForchheimerLaw.darcy(),
    "two-term": ForchheimerLaw.two_term(),
    "three-term": ForchheimerLaw.three_term(),
}
xi = np.logspace(-2, 6, 9)

for name, law in laws.items():
    s = inverse_s(law, xi)
    K = eval_K(law, xi)
    H = eval_H(law, xi)
    print(f"\n{name}: a = {law.degeneracy:.4f}")
    print(f"{'xi':>10} {'s':>12} {'K':>12} {'H/(K xi^2)':>12}")
    for row in zip(xi, s, K, H / (K * xi ** 2)):
        print("{:10.3g} {:12.5g} {:12.5g} {:12.5f}".format(*row))
    # observed tail slope of log K against log xi
    slope = np.log(K[-1] / K[-2]) / np.log(xi[-1] / xi[-2])
    print(f"tail slope of K: {slope:.4f} (expected {-law.degeneracy:.4f})")

fit = fit_K_bounds(laws["three-term"])
print(f"\nthree-term fitted bracket constants: d1 = {fit.d1:.4g}, d2 = {fit.d2:.4g}, "
      f"d3 = {fit.d3:.4g}")
