"""
From 30 vertex models to one norm-bounded LDI
=============================================

The vertex family is centred on its mean, factored by SVD and certified
vertex by vertex. The singular value spectra show how many uncertainty
channels the family really needs.
"""

from hapd import build_grid, build_pldi, fit_nldi, reference_model, verify_coverage
from hapd.ldi import residual_spectra

model = reference_model()
pldi = build_pldi(build_grid(), model)
print(len(pldi), "vertex models")

###############################################################################
# Relative singular values of the horizontal stack [R_1 ... R_N] (column
# space, gives Bw) and the vertical stack [R_1; ...; R_N] (row space, gives
# [Cz | Dz]). The left stack has only 12 rows. At most 12 channels are allowed.

left, right = residual_spectra(pldi)
print("\n k   left/left[0]   right/right[0]")
for k in range(20):
    lv = f"{left[k] / left[0]:11.3e}" if k < len(left) else f"{'-':>11}"
    print(f"{k + 1:2d}   {lv}   {right[k] / right[0]:11.3e}")

###############################################################################
# The column space has rank 12, but the row space keeps more than 12
# directions above 1e-8: sampling mixes the continuous-time variations with
# the mean dynamics. The rank-12 fit therefore reproduces the vertices only
# to about 1e-6 relative.

nldi = fit_nldi(pldi, strict=False)
report = verify_coverage(nldi, pldi)
print(f"\nr = {nldi.rank}, ranks left/right = {nldi.meta['rank_left']}/{nldi.meta['rank_right']}")
print(report.format().splitlines()[-3])
print(report.format().splitlines()[-2])

###############################################################################
# A smaller grid is easier: four corners need fewer row-space directions.

small = build_pldi(build_grid(n_speeds=2, n_altitudes=2), model)
rep = verify_coverage(fit_nldi(small, strict=False), small)
print("\n2 x 2 grid:", "PASS" if rep.passed else "FAIL", f"{rep.max_relative_residual:.3e}")
