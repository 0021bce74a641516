"""
Trimming the flexible UAV across its flight envelope
====================================================

Straight-and-level trim at every point of the 6 x 5 speed/altitude grid.
The aerodynamic table is the synthetic reference table shipped with the
package, so the numbers show trends rather than real aircraft data.
"""

import numpy as np

from hapd import TrimSpec, build_grid, reference_model, trim

model = reference_model()
grid = build_grid()

###############################################################################
# Each trim solves for angle of attack (pitch equals alpha in level flight),
# one common elevator deflection, thrust and the static bending of the
# symmetric elastic mode.

print(f"{'V [m/s]':>8} {'h [m]':>6} {'alpha':>8} {'elev':>8} {'T [N]':>8} {'eta_s':>10} {'resid':>9}")
for V, h in grid.points:
    r = trim(TrimSpec(V, h), model)
    print(f"{V:8.1f} {h:6.0f} {np.degrees(r.state.alpha):8.3f} {np.degrees(r.elevator):8.3f} "
          f"{r.thrust:8.2f} {r.state.eta_s:10.6f} {r.residual_norm:9.1e}")

###############################################################################
# Faster flight needs less incidence; thinner air at altitude needs more.

a = {(V, h): trim(TrimSpec(V, h), model).state.alpha for V, h in [(17, 500), (23, 500), (20, 300), (20, 700)]}
print()
print("alpha(17 m/s) - alpha(23 m/s) =", np.degrees(a[17, 500] - a[23, 500]), "deg")
print("alpha(700 m)  - alpha(300 m)  =", np.degrees(a[20, 700] - a[20, 300]), "deg")
