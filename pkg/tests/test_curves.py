import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from reeb_branch import DomainError, Ellipsoid, TruncatedSeries as TS
from reeb_branch.curves import (
    AlgebroidGerm,
    EllipsoidCurveParams,
    asymptotic_check,
    beta_project,
    branch_audit,
    build_ellipsoid_curve,
    build_sphere_curve,
    charge,
    cr_residual,
    dlambda_energy,
    ellipsoid_point,
    estimate_constants,
    gamma,
    gamma_hat,
    normal_form,
    phi_radius,
    polar_grid,
    quasi_sector_decompose,
    sphere_family,
    trivial_cylinder,
)
from reeb_branch.geometry import real_to_complex


def circle_action(n, m, c, r):
    """Closed form of the circle integral of psi^* lambda0 for (z^n, c z^m)."""
    a, b = r ** (2 * n), abs(c) ** 2 * r ** (2 * m)
    return 2 * np.pi * (n * a + m * b) / (a + b)


@pytest.fixture(scope="module")
def e23():
    params = EllipsoidCurveParams(2.0, 3.0, 2, 3, 2, TS.monomial(3, 12, 0.05), b=1)
    return build_ellipsoid_curve(params)


# -- germs ---------------------------------------------------------------
def test_germ_validation():
    with pytest.raises(DomainError):
        AlgebroidGerm.monomial(3, 2)
    with pytest.raises(DomainError):
        AlgebroidGerm(0, TS([0, 0, 1]))
    with pytest.raises(DomainError):
        AlgebroidGerm.from_dict({"rho": []})


def test_germ_json_roundtrip(tmp_path):
    g = AlgebroidGerm.monomial(2, 5, 0.5 - 0.25j)
    path = tmp_path / "germ.json"
    path.write_text(json.dumps(g.to_dict()))
    h = AlgebroidGerm.from_json(path)
    assert h.n == 2 and h.rho.allclose(g.rho)


def test_convergence_radius():
    assert AlgebroidGerm.monomial(2, 3).convergence_radius() == np.inf
    geo = AlgebroidGerm(1, TS([0, 0] + [2.0 ** k for k in range(2, 20)], 19))
    assert geo.convergence_radius() == pytest.approx(0.5, rel=1e-9)


# -- sphere curves -------------------------------------------------------
def test_sphere_curve_unit_norm_and_cr():
    c = build_sphere_curve(AlgebroidGerm.monomial(2, 3))
    z = polar_grid(0.05, 0.5, 64, 64)
    assert np.max(np.abs(np.linalg.norm(c.psi(z), axis=1) - 1)) < 1e-12
    assert cr_residual(c, z, method="analytic").sup < 1e-9


def test_analytic_partials_match_finite_differences():
    c = build_sphere_curve(AlgebroidGerm(2, TS([0, 0, 0, 1, 0.5j, -0.2], 8)))
    z = polar_grid(0.1, 0.4, 4, 8)
    A = c.partials(z, "analytic")
    F = c.partials(z, "fd")
    for a, f in zip(A, F):
        assert np.allclose(a, f, atol=1e-7)


@pytest.mark.parametrize("n,m,coef", [(2, 3, 1.0), (3, 5, 0.7j), (1, 2, 2.0)])
def test_charge_equals_multiplicity(n, m, coef):
    ch = charge(build_sphere_curve(AlgebroidGerm.monomial(n, m, coef)))
    assert ch.value == pytest.approx(n, abs=1e-5)
    assert ch.samples[0] == pytest.approx(circle_action(n, m, coef, 0.2) / (2 * np.pi), abs=1e-10)


def test_energy_matches_stokes_oracle():
    c = build_sphere_curve(AlgebroidGerm.monomial(2, 3))
    expect = circle_action(2, 3, 1, 0.5) - circle_action(2, 3, 1, 0.05)
    assert dlambda_energy(c, (0.05, 0.5)).dlambda == pytest.approx(expect, abs=1e-9)
    assert expect == pytest.approx(1.2409683, abs=1e-6)


def test_energy_lower_bound_reported():
    c = build_sphere_curve(AlgebroidGerm.monomial(2, 3))
    rep = dlambda_energy(c, (0.05, 0.5), 24, 48, shifts=[0.0, 1.0, 2.0])
    assert rep.lower_bound is not None and rep.lower_bound > 0


@pytest.mark.parametrize("n", [1, 2, 3])
def test_trivial_cylinder_identities(n):
    c = trivial_cylinder(n)
    assert abs(dlambda_energy(c).dlambda) < 1e-12
    assert charge(c).value == n
    dec = quasi_sector_decompose(c, 0.3)
    assert np.max(dec.ray_deviation()) < 1e-12


def test_quasi_sectors_of_sphere_curve():
    c = build_sphere_curve(AlgebroidGerm.monomial(2, 3))
    dec = quasi_sector_decompose(c, 0.0)
    assert dec.n == 2
    assert dec.continuity() < 0.02
    rep = branch_audit(sphere_family(c), dec)
    assert rep.passed, rep.as_dict()


def test_asymptotic_deviation_decays():
    c = build_sphere_curve(AlgebroidGerm.monomial(2, 3))
    rep = asymptotic_check(c, [1.0, 2.0, 3.0, 4.0, 5.0])
    assert rep.monotone()
    # a = n r + log-correction: eps at depth r differs from the deepest by ~ r^2 terms
    assert rep.eps_sup[0] == pytest.approx(0.5 * (np.log1p(np.exp(-2)) - np.log1p(np.exp(-10))),
                                           rel=1e-6)


def test_out_of_disc_rejected():
    c = build_sphere_curve(AlgebroidGerm.monomial(2, 3))
    with pytest.raises(DomainError):
        c.psi(np.array([2.0 + 0j]))


# -- ellipsoid ingredients -----------------------------------------------
@given(st.floats(0, 5))
def test_phi_radius_quadratic_case(s):
    # k=1, l=2: p r^2 + q s^2 r^4 = 1 is quadratic in r^2
    p, q = 1.0, 2.0
    # rationalised root of the quadratic, free of cancellation
    expect = np.sqrt(2 / (p + np.sqrt(p * p + 4 * q * s * s)))
    assert phi_radius(p, q, 1, 2, s) == pytest.approx(expect, rel=1e-12)


def test_phi_radius_frozen_value():
    assert phi_radius(1, 1, 1, 2, 1.0) == pytest.approx(0.7861513778, abs=1e-10)


@given(st.floats(0, 3))
@settings(max_examples=20)
def test_gamma_hat_degenerate_is_log(s):
    assert gamma_hat(1, 1, 1, 1, s) == pytest.approx(np.log1p(s), abs=1e-8)


@pytest.mark.parametrize("s", [0.01, 0.3, 2.0])
def test_gamma_hat_against_weighted_quadrature(s):
    # integrate gamma directly with the algebraic endpoint weight S^(1/k - 1)
    p, q, k, l = 2.0, 3.0, 2, 3
    smooth = lambda S: (q / l) * phi_radius(p, q, k, l, np.sqrt(S)) ** (2 * l / k)
    ref = quad(smooth, 0, s, weight="alg", wvar=(1 / k - 1, 0), epsabs=1e-14, epsrel=1e-13)[0]
    assert gamma_hat(p, q, k, l, s) == pytest.approx(ref, rel=1e-9)
    assert gamma(p, q, k, l, 0.2) == pytest.approx(smooth(0.2) * 0.2 ** (1 / k - 1))


def test_params_validation():
    with pytest.raises(DomainError):
        EllipsoidCurveParams(2.0, 3.0, 2, 5, 2, TS.monomial(5, 12))
    with pytest.raises(DomainError):
        EllipsoidCurveParams(2.0, 3.0, 2, 3, 3, TS.monomial(3, 12))
    with pytest.raises(DomainError):
        EllipsoidCurveParams(2.0, 3.0, 2, 3, 2, TS.monomial(2, 12), b=1)
    with pytest.raises(DomainError):
        EllipsoidCurveParams(2.0, 3.0, 2, 3, 2, TS.monomial(3, 12), b=-1)


def test_ellipsoid_point_and_projection_are_inverse():
    params = EllipsoidCurveParams(2.0, 3.0, 2, 3, 2, TS.monomial(3, 12), b=1)
    E = Ellipsoid(2, 3)
    nu, th = 0.3 - 0.2j, 1.1
    for root in (0, 1):
        v = ellipsoid_point(params, nu, th, root)
        assert abs(E.defining(v)) < 1e-12
        w1, w2 = real_to_complex(v)
        back, th2 = beta_project(params, w2, np.angle(w1))
        assert back == pytest.approx(nu, abs=1e-12)


# -- the E(2,3) curve ----------------------------------------------------
def test_branch_ratio_exact(e23):
    curve, fam = e23
    assert fam.alpha_hat == pytest.approx(-1.0, abs=1e-15)
    z = np.array([0.3 + 0.2j, -0.1j])
    arg = curve.arg_c(z)
    assert np.array_equal(fam.F(1, z, arg), fam.alpha_hat * fam.F(0, z, arg))


def test_wrap_arc_monodromy(e23):
    _, fam = e23
    assert fam.wrap_monodromy == pytest.approx(-1.0, abs=1e-12)


def test_lift_lies_on_ellipsoid_over_curve(e23):
    curve, _ = e23
    E = Ellipsoid(2, 3)
    z = np.array([0.4 + 0.1j, -0.2 + 0.3j, 0.05j])
    L = curve.lift(z)
    assert np.max(np.abs([E.defining(v) for v in L])) < 1e-12
    P = curve.psi(z)
    for v, row in zip(L, P):
        w1, w2 = real_to_complex(v)
        nu, _ = beta_project(curve.params, w2, np.angle(w1))
        assert nu == pytest.approx(row[0] + 1j * row[1], abs=1e-12)


def test_ellipsoid_curve_cr_and_charge(e23):
    curve, _ = e23
    res = cr_residual(curve, polar_grid(0.05, 0.5, 12, 24), method="fd")
    assert res.sup < 1e-4
    assert charge(curve).value == pytest.approx(2.0, abs=1e-4)


def test_ellipsoid_branch_audit(e23):
    curve, fam = e23
    dec = quasi_sector_decompose(curve, 0.0)
    c = estimate_constants(fam, dec)
    assert np.allclose(np.diff(c), 1.0, atol=1e-6)
    rep = branch_audit(fam, dec)
    assert rep.passed, rep.as_dict()


def test_cr_residual_csv(tmp_path, e23):
    curve, _ = e23
    res = cr_residual(curve, polar_grid(0.1, 0.3, 3, 8), method="fd")
    res.to_csv(tmp_path / "cr.csv")
    data = np.loadtxt(tmp_path / "cr.csv", delimiter=",", skiprows=1)
    assert data.shape == (len(res.points), 5)


# -- normal form ---------------------------------------------------------
def test_normal_form_roundtrip_simple():
    rho = TS([0, 0, 1, 1], 10)
    F = TS([0, 1, 0.5], 10)
    nf = normal_form(rho, 2, F)
    assert nf.w_prime.compose(nf.f).allclose(F, 1e-12)
    # xi^n reproduces rho
    assert (nf.f ** 2).allclose(rho, 1e-12)


def test_normal_form_errors():
    with pytest.raises(DomainError):
        normal_form(TS([0, 0, 0, 1], 10), 2)
    with pytest.raises(DomainError):
        normal_form(TS([0, 0, 1], 3), 2)


coef = st.complex_numbers(max_magnitude=1, allow_nan=False, allow_infinity=False)


@given(st.integers(1, 3), st.lists(coef, min_size=4, max_size=4), st.lists(coef, min_size=3, max_size=3))
@settings(max_examples=25)
def test_normal_form_roundtrip_property(n, rc, fc):
    order = 8
    rho = TS([0] * n + [1.0] + rc, order)
    F = TS([0, 1.0] + fc, order)
    H = TS([0.1, 0.2j], order)
    nf = normal_form(rho, n, F, H)
    assert nf.w_prime.compose(nf.f).allclose(F, 1e-10)
