# Contact structures on S^3 from a map f between the spheres of self-dual and
# anti-self-dual 2-forms.  A constant f gives the standard structure.
import numpy as np
from scipy.stats import ortho_group

from reeb_branch.congruence import CongruenceMap, congruence_audit, fiber_solve, o4_transport
from reeb_branch.geometry import j0_matrix

std = CongruenceMap.standard()
v = np.array([0.5, 0.5, 0.5, 0.5])
print("J at v equals -J0:", np.allclose(std.J(v), -j0_matrix()))

audit = congruence_audit(std, 200)
print("standard map defects:", {k: f"{x:.1e}" for k, x in audit.defects.items()})

# A distance-decreasing perturbation with Lipschitz constant 0.3.
rng = np.random.default_rng(0)
f = CongruenceMap(np.array([-1.0, 0, 0]), rng.normal(size=27), L=0.3)
sol = fiber_solve(f, v)
print(f"fiber solve: {sol.iterations} iterations, residual {sol.residual:.1e}")
audit = congruence_audit(f, 200)
print("perturbed defects:", {k: f"{x:.1e}" for k, x in audit.defects.items()})

# Orthogonal maps carry the construction to itself; a stretch does not.
print("O(4) transport residual:", o4_transport(std, ortho_group.rvs(4, random_state=1))[1])
print("diag(2,1,1,1) residual:", o4_transport(std, np.diag([2.0, 1, 1, 1]))[1])
