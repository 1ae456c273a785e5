# The boundary of a germ (z^n, rho) on a small circle is a torus knot in S^3.
# Its linking numbers with the two Hopf circles are n and ord(rho).
from reeb_branch.curves import AlgebroidGerm, build_sphere_curve, charge
from reeb_branch.linking import boundary_knot, gauss_linking, great_circle, winding_profile

a, b = great_circle("w2=0"), great_circle("w1=0")
print("Hopf circles:", gauss_linking(a, b))

for n, m in [(2, 3), (3, 4), (3, 5)]:
    germ = AlgebroidGerm.monomial(n, m)
    K = boundary_knot(germ, 0.1, max(512, 64 * n))
    det = gauss_linking(K, b, return_details=True)
    print(f"(z^{n}, z^{m}): lk with w1=0 -> {det.value} (raw {det.raw:.6f}, m={det.samples}),"
          f" with w2=0 -> {gauss_linking(K, a)}, windings {winding_profile(K)},"
          f" charge {charge(build_sphere_curve(germ)).value:.8f}")
