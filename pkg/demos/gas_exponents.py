"""Exponent bookkeeping for an isentropic gas (gamma = 1.4) with a three-term
law in three dimensions, and the Moser ladder built on it.

Changing the Holder exponents p decides whether the ladder can be built at
all: the iteration needs kappa_*^2 < kappa_f.
"""
from forchflow import ForchheimerLaw, derive_parameters
from forchflow.exponents import exponent_report, render_table
from forchflow.exponents import AdmissibilityError, profile_for
from forchflow.fluid import gravity_drift, zero_data
from forchflow.moser import build_schedule, limit_products, moser_alpha0_min

model = derive_parameters("isentropic", gamma=1.4, gravity=(0.0, 0.0, 1.0))
data = zero_data(gravity_drift(model))
law = ForchheimerLaw.three_term()

prof = profile_for(law, model, data, 3, p=(1.04, 1.04, 1.1, 1.1), require_moser=True)
print(render_table(exponent_report(prof, [12.0])))

strict, incl = moser_alpha0_min(prof)
print(f"\nsmallest admissible alpha0: {incl:.4g}")
sched = build_schedule(prof, 70.0, 1.0, 0.5)
prods = limit_products(sched)
print("beta ladder:", ", ".join(f"{b:.2f}" for b in sched.beta[:6]))
print(f"mu_tilde = {prods.mu_tilde:.5f}, nu_tilde = {prods.nu_tilde:.5f}, "
      f"omega = {prods.omega:.5f}")

try:
    profile_for(law, model, data, 3, p=(1.1, 1.1, 1.3, 1.3), require_moser=True)
except AdmissibilityError as exc:
    print(f"\np = (1.1, 1.1, 1.3, 1.3) rejected: {exc}")

try:
    profile_for(ForchheimerLaw.two_term(), derive_parameters("ideal"),
                zero_data(gravity_drift(derive_parameters("ideal"))), 1)
except AdmissibilityError as exc:
    print(f"ideal gas with a two-term law rejected: {exc}")
