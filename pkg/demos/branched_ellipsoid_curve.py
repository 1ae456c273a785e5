# A branched curve in E(2, 3): charge n = 2, covering the orbit {w2 = 0}
# whose return map is a half turn.  The two branches differ by alpha_hat = -1.
import numpy as np

from reeb_branch import TruncatedSeries
from reeb_branch.curves import (
    EllipsoidCurveParams,
    branch_audit,
    build_ellipsoid_curve,
    charge,
    cr_residual,
    estimate_constants,
    gamma_hat,
    polar_grid,
    quasi_sector_decompose,
)

params = EllipsoidCurveParams(p=2.0, q=3.0, k=2, l=3, n=2,
                              Phi=TruncatedSeries.monomial(3, 16, 0.05), b=1)
curve, family = build_ellipsoid_curve(params)
print("alpha_hat:", params.alpha_hat)

# Residual of the CR system in the quotient tube (finite-difference partials).
print("sup CR residual:", cr_residual(curve, polar_grid(0.05, 0.5, 24, 48), method="fd").sup)
print("charge:", charge(curve).value)

# Quasi-sectors: the arcs theta = 0 split the punctured disc into two sectors.
dec = quasi_sector_decompose(curve, 0.0)
family = family.with_constants(estimate_constants(family, dec))
report = branch_audit(family, dec)
for c in report.checks:
    print(f"  {c.name:22s} {c.value:.2e}  (tol {c.tolerance:g})")
print("branch constants:", report.constants)
print("monodromy across the slit arc:", report.wrap_monodromy)

# In the degenerate case p = q = k = l = 1 the potential is log(1 + s).
for s in (0.1, 1.0, 3.0):
    print(f"gamma_hat({s}) = {gamma_hat(1, 1, 1, 1, s):.12f}   log1p = {np.log1p(s):.12f}")
