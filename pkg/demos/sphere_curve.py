# A finite-energy curve in the round 3-sphere, built from the plane-curve
# germ (z^2, z^3).  The curve is psi = Phi/|Phi|, a = -log|Phi|.
import numpy as np

from reeb_branch.curves import (
    AlgebroidGerm,
    build_sphere_curve,
    charge,
    cr_residual,
    dlambda_energy,
    polar_grid,
    quasi_sector_decompose,
)

germ = AlgebroidGerm.monomial(2, 3)
curve = build_sphere_curve(germ)

# The Cauchy-Riemann system holds to rounding error with closed-form partials.
grid = polar_grid(0.05, 0.5, 64, 64)
res = cr_residual(curve, grid, method="analytic")
print("sup CR residual:", res.sup)

# The charge counts how many times the curve wraps the asymptotic orbit.
ch = charge(curve)
print("circle integrals / 2pi:", np.round(ch.samples, 6))
print("extrapolated charge:", ch.value)

# d(lambda)-energy over an annulus is positive and resolution independent.
for n in (24, 48):
    print(f"energy on (0.05, 0.5) with {n} radial nodes:",
          dlambda_energy(curve, (0.05, 0.5), n, 2 * n).dlambda)

# theta = 2 arg z, so the arcs theta = 0 are two rays half a turn apart.
dec = quasi_sector_decompose(curve, 0.0)
print("arc angles at r = 0.1:", dec.arcs[:, 0])
