"""
Linear models about a trim point
================================

Finite-difference Jacobians, their modes, and the zero-order-hold
discretisation at 50 Hz.
"""

import numpy as np

from hapd import TrimSpec, discretize, linearize_trim, reference_model, trim
from hapd.model import STATE_NAMES

model = reference_model()
res = trim(TrimSpec(20.0, 500.0), model)
lin = linearize_trim(res, model)

###############################################################################
# In symmetric flight the longitudinal states (V, alpha, q, theta, eta_s)
# do not couple with the lateral ones (beta, p, r, phi, eta_a).

lon = [0, 1, 4, 7, 8, 9]
lat = [2, 3, 5, 6, 10, 11]
print("coupling block max |A_lon,lat| =", np.abs(lin.A[np.ix_(lon, lat)]).max())

for name, idx in (("longitudinal", lon), ("lateral", lat)):
    ev = np.linalg.eigvals(lin.A[np.ix_(idx, idx)])
    print(f"\n{name} eigenvalues")
    for z in sorted(ev, key=lambda z: abs(z)):
        wn = abs(z)
        zeta = -z.real / wn if wn else 0.0
        print(f"  {z.real:10.4f} {z.imag:+10.4f}j   wn={wn:8.3f} rad/s  zeta={zeta:6.3f}")

###############################################################################
# Discretised with Ts = 0.02 s every continuous eigenvalue s maps to exp(s Ts).

disc = discretize(lin, 0.02)
print("\nmax |eig(Phi)| =", np.abs(np.linalg.eigvals(disc.Phi)).max())
print("G column for the first elevator (per rad):")
for n, g in zip(STATE_NAMES, disc.G[:, 0]):
    print(f"  {n:>9} {g: .4e}")
