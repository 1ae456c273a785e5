# First-return maps of the Reeb flow on ellipsoids E(p, q).
# Near the orbit {w2 = 0} the return map rotates by 2 pi q/p.
import numpy as np

from reeb_branch import Ellipsoid, StandardSphere
from reeb_branch.reeb import (
    classify_return_map,
    ellipsoid_orbit,
    holonomy,
    orbit_section,
    recurrence_probe,
)

for chart in (StandardSphere(), Ellipsoid(1, 2), Ellipsoid(2, 3), Ellipsoid(3, 5)):
    orbit = ellipsoid_orbit(chart)
    rep = classify_return_map(chart, orbit_section(orbit))
    # angles in [0, 2 pi), with a full turn shown as 0
    angle = 0.0 if 2 * np.pi - rep.angle < 1e-9 else rep.angle
    expected = (2 * np.pi * chart.q / chart.p) % (2 * np.pi)
    print(f"{chart!r:>22}: {rep.classification:8s} angle = {angle:.10f}  (expected {expected:.10f})")

# The linearised period map is area preserving: det = 1, multipliers on the unit circle.
E = Ellipsoid(3, 5)
h = holonomy(E, ellipsoid_orbit(E))
print("transverse block of E(3,5):\n", np.round(h.transverse, 10))
print("det - 1:", h.det - 1, " |multipliers|:", np.abs(h.multipliers))

# With an irrational ratio the rotation number is irrational and no iterate closes up.
E = Ellipsoid(1, np.sqrt(2))
sec = orbit_section(ellipsoid_orbit(E))
rep = classify_return_map(E, sec, 8)
print("E(1, sqrt 2):", rep.classification, rep.angle / (2 * np.pi), "turns; sqrt 2 - 1 =", np.sqrt(2) - 1)
rec = recurrence_probe(E, sec, 6, [[0.03, 0.0]])
print("radii of six iterates:", np.round(rec.radii[0], 12), "closures:", rec.closure_histogram)
