"""
Nonlinear and uncertain linear simulation
=========================================

An elevator doublet on the nonlinear model, the same input through the
local linear model, and a bundle of responses of the norm-bounded LDI with
random admissible uncertainty.
"""

import numpy as np

from hapd import (ControlSchedule, DeltaPolicy, NldiModel, SimScenario, TrimSpec, build_grid,
                  build_pldi, check_truncated_l2, compare_responses, discretize, fit_nldi,
                  integrate_nonlinear, linearize_trim, reference_model, simulate_discrete_ldi, trim)

model = reference_model()
res = trim(TrimSpec(20.0, 500.0), model)

###############################################################################
# Elevator doublet: +2 deg for 0.5 s, then -2 deg for 0.5 s.

d = np.zeros(13)
d[:6] = np.radians(2.0)
schedule = ControlSchedule((0.0, 0.5, 1.0, 1.5), (res.u_trim + d, res.u_trim - d, res.u_trim, res.u_trim))
nl = integrate_nonlinear(SimScenario(np.array(res.x_trim), schedule, 500.0, 4.0), model)

local = NldiModel.nominal(discretize(linearize_trim(res, model)))
steps = 200
inputs = np.array([schedule(0.02 * k) - res.u_trim for k in range(steps)])
lin = simulate_discrete_ldi(local, DeltaPolicy.zero(), inputs, steps)

print(compare_responses(nl, lin, res.x_trim).format())
for t in (0.25, 0.75, 1.25, 2.0, 3.0):
    k = int(t / 0.02)
    print(f"t={t:4.2f}s  q nonlinear {nl.x[int(t / 0.005), 4]: .5f}   q linear {lin.x[k, 4]: .5f}")

###############################################################################
# Twenty random-contraction runs of the NLDI fitted over the whole envelope
# from the same initial speed perturbation. The spread in the pitch angle
# response is the uncertainty the single model carries.

pldi = build_pldi(build_grid(), model)
nldi = fit_nldi(pldi, strict=False)
x0 = np.zeros(12)
x0[0] = 1.0
final = []
for seed in range(20):
    tr = simulate_discrete_ldi(nldi, DeltaPolicy.random_contraction(seed), np.zeros(13), 250, x0)
    assert check_truncated_l2(tr.w, tr.z)
    final.append(tr.x[[50, 150, 250], 7])
final = np.degrees(np.array(final))
print("\ntheta deviation [deg] at t = 1, 3, 5 s over 20 runs")
print("  min ", final.min(axis=0))
print("  max ", final.max(axis=0))
