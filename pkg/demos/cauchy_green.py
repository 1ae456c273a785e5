# Solving dbar u = G on the unit disc with the Cauchy-Green transform.
import numpy as np

from reeb_branch.dbar import (
    DiscGridFunction,
    QuadratureConfig,
    bound_certificate,
    cauchy_green,
    cauchy_green_solution,
    dbar_residual,
)

# For G = 1 the transform is 2 pi i conj(z).
G = DiscGridFunction.constant(1.0)
z = np.array([0.1, 0.3 + 0.4j, -0.8j])
print("G = 1:", cauchy_green(G, z), "vs", 2j * np.pi * np.conj(z))

# u = G_hat / 2 pi i satisfies dbar u = G; check on a ring.
f = lambda m: 1 / (m - 1.2) + np.conj(m) ** 2
G = DiscGridFunction.from_callable(f)
for n in (16, 32, 64):
    u = cauchy_green_solution(G, QuadratureConfig(n, n))
    print(f"n = {n:3d}: dbar residual {dbar_residual(u, G):.3e}")

# The ratio |G_hat| / (2 pi |z|) against K = sup |G|.  For G = 1 it is exactly 1;
# for G = mu the transform is -2 pi i (1 - |z|^2), so the ratio (1 - r^2)/r
# exceeds K near the origin.
for label, fn in [("1", lambda m: np.ones_like(m)), ("mu", lambda m: m)]:
    c = bound_certificate(DiscGridFunction.from_callable(fn))
    print(f"G = {label:2s}: K = {c.K:.3f}, sup ratio on |z| >= 0.1 = {c.sup_ratio:.3f}, holds = {c.holds}")
