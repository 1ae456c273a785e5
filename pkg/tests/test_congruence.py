import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import ortho_group

from reeb_branch import DomainError
from reeb_branch.congruence import (
    ASD_BASIS,
    RADIUS,
    SD_BASIS,
    CongruenceMap,
    TwoForm4,
    congruence_audit,
    contact_from_congruence,
    fiber_solve,
    o4_transport,
    osculating_J,
    plane_form,
    plane_projector,
    random_sphere_points,
    sd_decompose,
)
from reeb_branch.geometry import j0_matrix

vec4 = st.lists(st.floats(-1, 1, allow_nan=False), min_size=4, max_size=4).map(np.array)


def levi_civita_star(B):
    """Hodge star from the permutation-symbol definition, as an oracle."""
    from itertools import permutations

    M = B.matrix()
    out = np.zeros((4, 4))
    for perm in permutations(range(4)):
        sign = np.linalg.det(np.eye(4)[list(perm)])
        i, j, k, l = perm
        out[i, j] += 0.5 * sign * M[k, l]
    return TwoForm4.from_matrix(out)


@pytest.fixture(scope="module")
def perturbed():
    rng = np.random.default_rng(0)
    return CongruenceMap(np.array([-1.0, 0, 0]), rng.normal(size=27), L=0.3, seed=0)


def test_star_on_basis():
    assert np.allclose(TwoForm4.basis(0, 1).star().coeffs, TwoForm4.basis(2, 3).coeffs)
    assert np.allclose(TwoForm4.basis(0, 2).star().coeffs, -TwoForm4.basis(1, 3).coeffs)
    assert np.allclose(TwoForm4.basis(0, 3).star().coeffs, TwoForm4.basis(1, 2).coeffs)


@given(st.lists(st.floats(-2, 2, allow_nan=False), min_size=6, max_size=6))
def test_star_matches_permutation_oracle_and_squares_to_one(c):
    B = TwoForm4(c)
    assert np.allclose(B.star().coeffs, levi_civita_star(B).coeffs)
    assert np.allclose(B.star().star().coeffs, B.coeffs)


def test_bases_are_orthonormal_eigenspaces():
    star = np.array([TwoForm4(e).star().coeffs for e in np.eye(6)]).T
    assert np.allclose(SD_BASIS @ SD_BASIS.T, np.eye(3))
    assert np.allclose(ASD_BASIS @ ASD_BASIS.T, np.eye(3))
    assert np.allclose(star @ SD_BASIS.T, SD_BASIS.T)
    assert np.allclose(star @ ASD_BASIS.T, -ASD_BASIS.T)


@given(vec4, vec4)
def test_decomposable_plane_has_equal_parts(a, b):
    if abs(np.linalg.norm(a) * np.linalg.norm(b)) < 1e-3:
        return
    try:
        B = plane_form(a, b)
    except DomainError:
        return
    sp, sm = sd_decompose(B)
    assert sp.norm() == pytest.approx(RADIUS, abs=1e-12)
    assert sm.norm() == pytest.approx(RADIUS, abs=1e-12)
    P = plane_projector(B.sd3(), B.asd3())
    an = a / np.linalg.norm(a)
    assert np.allclose(P @ an, an, atol=1e-10)
    assert np.allclose(P @ P, P, atol=1e-10)


@given(st.lists(st.floats(-1, 1, allow_nan=False), min_size=3, max_size=3))
def test_osculating_J_is_orthogonal_complex_structure(x):
    x = np.array(x)
    if np.linalg.norm(x) < 1e-3:
        return
    J = osculating_J(RADIUS * x / np.linalg.norm(x))
    assert np.allclose(J @ J, -np.eye(4), atol=1e-12)
    assert np.allclose(J.T @ J, np.eye(4), atol=1e-12)


def test_osculating_J_rejects_wrong_norm():
    with pytest.raises(DomainError):
        osculating_J(np.array([1.0, 0, 0]))


def test_standard_map_reproduces_standard_structure():
    f = CongruenceMap.standard()
    J0 = j0_matrix()
    for v in random_sphere_points(1000, seed=3):
        assert np.max(np.abs(f.J(v) + J0)) < 1e-12
    cd = contact_from_congruence(f, np.array([1.0, 0, 0, 0]))
    # lambda0 at e0 is dy1, X = J0 v
    assert np.allclose(cd.lam, [0, 1, 0, 0])
    assert np.allclose(cd.X, J0 @ [1.0, 0, 0, 0])


def test_standard_map_audit_clean():
    audit = congruence_audit(CongruenceMap.standard(), n_samples=100)
    assert max(audit.defects.values()) < 1e-9
    assert audit.primitive_samples == 100
    assert audit.primitive_residual < 1e-5


def test_perturbed_map_lipschitz(perturbed):
    assert perturbed.L == pytest.approx(0.3, abs=1e-6)
    # fresh pairs from an unrelated seed stay under the bound
    rng = np.random.default_rng(99)
    x = rng.normal(size=(2000, 3))
    x = RADIUS * x / np.linalg.norm(x, axis=1, keepdims=True)
    y = x + 1e-5 * rng.normal(size=x.shape)
    y = RADIUS * y / np.linalg.norm(y, axis=1, keepdims=True)
    ratio = np.linalg.norm(perturbed(x) - perturbed(y), axis=1) / np.linalg.norm(x - y, axis=1)
    assert ratio.max() <= 0.3 * 1.05


def test_fiber_solution_defining_property(perturbed):
    for v in random_sphere_points(50, seed=5):
        sol = fiber_solve(perturbed, v)
        P = plane_projector(sol.sigma_plus, sol.sigma_minus)
        assert np.linalg.norm(v - P @ v) < 1e-12
        assert np.allclose(sol.sigma_plus, perturbed(sol.sigma_minus))


def test_perturbed_audit(perturbed):
    audit = congruence_audit(perturbed, n_samples=100, seed=1)
    assert audit.defects["b"] < 1e-9
    assert audit.defects["f"] < 1e-9
    assert audit.defects["a"] > 1e-3  # a generic perturbation is not closed


def test_rejects_expanding_map():
    with pytest.raises(DomainError):
        CongruenceMap(np.array([1.0, 0, 0]), np.ones(9), L=1.5)
    with pytest.raises(DomainError):
        CongruenceMap(np.zeros(3))


def test_json_roundtrip(tmp_path):
    path = tmp_path / "f.json"
    path.write_text(json.dumps({"center": [0, 0, 1], "perturbation": {"coeffs": [0.1] * 9, "L": 0.2}}))
    f = CongruenceMap.from_json(path)
    assert f.L == pytest.approx(0.2, abs=1e-6)


def test_o4_transport():
    f = CongruenceMap.standard()
    for s in range(5):
        _, r = o4_transport(f, ortho_group.rvs(4, random_state=s), n_samples=50)
        assert r < 1e-8
    _, r = o4_transport(f, np.diag([2.0, 1, 1, 1]), n_samples=50)
    assert r > 0.1
    with pytest.raises(DomainError):
        o4_transport(f, np.zeros((4, 4)))


@given(vec4)
@settings(max_examples=20)
def test_contact_normalisation_perturbed(v):
    if np.linalg.norm(v) < 1e-2:
        return
    f = CongruenceMap(np.array([0.0, 1.0, 0.0]), np.linspace(-1, 1, 9), L=0.3)
    v = v / np.linalg.norm(v)
    cd = contact_from_congruence(f, v)
    assert cd.lam @ cd.X == pytest.approx(1.0, abs=1e-12)
    assert abs(cd.X @ v) < 1e-12
