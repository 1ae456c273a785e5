import numpy as np
import pytest

from reeb_branch import DomainError, ProximityError, ResolutionError
from reeb_branch.curves import AlgebroidGerm
from reeb_branch.linking import (
    SpaceLoop,
    auto_pole,
    boundary_knot,
    gauss_linking,
    great_circle,
    stereographic,
    winding_profile,
)


def solid_angle_linking(A, B):
    """Linking number of two closed polylines in R^3 by summed solid angles.

    Each segment pair contributes the signed solid angle of the skew
    quadrilateral it spans (Banchoff / Klenin-Langowski formula), which is
    exact for polygons.
    """
    def gauss_pair(a0, a1, b0, b1):
        r = [b0 - a0, b1 - a0, b1 - a1, b0 - a1]
        n = [np.cross(r[i], r[(i + 1) % 4]) for i in range(4)]
        nn = [np.linalg.norm(x) for x in n]
        if min(nn) < 1e-15:
            return 0.0
        n = [x / m for x, m in zip(n, nn)]
        s = sum(np.arcsin(np.clip(n[i] @ n[(i + 1) % 4], -1, 1)) for i in range(4))
        sign = np.sign(np.cross(b1 - b0, a1 - a0) @ (b0 - a0))
        return s * sign

    tot = 0.0
    for i in range(len(A) - 1):
        for j in range(len(B) - 1):
            tot += gauss_pair(A[i], A[i + 1], B[j], B[j + 1])
    return tot / (4 * np.pi)


def test_loop_validation():
    with pytest.raises(DomainError):
        SpaceLoop(np.zeros((3, 4)))
    t = np.linspace(0, 2 * np.pi, 20)
    P = np.stack([np.cos(t), np.sin(t), 0 * t, 0 * t], axis=1)
    with pytest.raises(DomainError):
        SpaceLoop(P)  # gaps too large
    with pytest.raises(DomainError):
        SpaceLoop(P[:-1][:10])


def test_boundary_knot_sampling_and_radius():
    g = AlgebroidGerm.monomial(2, 3)
    with pytest.raises(DomainError):
        boundary_knot(g, m=100)
    K = boundary_knot(g, 0.1, 256)
    assert np.allclose(np.linalg.norm(K.points, axis=1), 1.0)


def test_hopf_link_and_pole_independence():
    A, B = great_circle("w2=0", 128), great_circle("w1=0", 128)
    assert gauss_linking(A, B) == 1
    for pole in ([0.5, 0.5, 0.5, 0.5], [0.5, -0.5, 0.5, -0.5]):
        assert gauss_linking(A, B, pole=pole) == 1


def test_projection_oracle_agrees_with_midpoint_sum():
    A, B = great_circle("w2=0", 64), great_circle("w1=0", 64)
    pole = auto_pole(A, B)
    a, b = stereographic(A.points, pole), stereographic(B.points, pole)
    res = gauss_linking(A, B, pole=pole, return_details=True)
    assert solid_angle_linking(a, b) == pytest.approx(res.value, abs=1e-8)


def test_torus_knot_linking_numbers():
    K = boundary_knot(AlgebroidGerm.monomial(2, 3), 0.1, 512)
    assert gauss_linking(K, great_circle("w1=0")) == 2
    assert gauss_linking(K, great_circle("w2=0")) == 3
    assert gauss_linking(K.reversed(), great_circle("w2=0")) == -3
    assert winding_profile(K) == (2, 3)


def test_linking_is_symmetric():
    K = boundary_knot(AlgebroidGerm.monomial(3, 4), 0.1, 384)
    C = great_circle("w1=0")
    assert gauss_linking(K, C) == gauss_linking(C, K) == 3


def test_proximity_errors():
    A = great_circle("w2=0", 128)
    with pytest.raises(ProximityError):
        gauss_linking(A, A)
    with pytest.raises(ProximityError):
        gauss_linking(A, great_circle("w1=0", 128), pole=[1, 0, 0, 0])


def test_resolution_error_without_sampler():
    # coarse fixed polylines that cannot be refined
    t = 2 * np.pi * np.arange(65) / 64
    A = SpaceLoop(np.stack([np.cos(t), np.sin(t), 0 * t, 0 * t], 1))
    B = SpaceLoop(np.stack([0 * t, 0 * t, np.cos(t), np.sin(t)], 1))
    assert gauss_linking(A, B) == 1
    with pytest.raises(ResolutionError):
        A.refined(128)


def test_csv_export(tmp_path):
    K = great_circle("w2=0", 64)
    K.to_csv(tmp_path / "k.csv")
    data = np.loadtxt(tmp_path / "k.csv", delimiter=",", skiprows=1)
    assert data.shape == (65, 4)
