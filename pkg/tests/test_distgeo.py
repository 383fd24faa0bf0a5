import math

import numpy as np
import pytest

from simplexfam.distgeo import (
    Circumsphere,
    DistanceSet,
    circumcenter,
    circumradius,
    cm_det,
    distances_of,
    heron_area,
    is_constructible,
    simplex_volume,
)
from simplexfam.errors import DegenerateSimplexError, InconsistentDistancesError


def laplace_det(M):
    """Cofactor-expansion determinant, independent of the LU-based path."""
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    if n == 1:
        return M[0, 0]
    total = 0.0
    for j in range(n):
        minor = np.delete(np.delete(M, 0, axis=0), j, axis=1)
        total += (-1) ** j * M[0, j] * laplace_det(minor)
    return total


def bordered(d):
    d = np.asarray(d, dtype=float)
    m = d.shape[0]
    B = np.ones((m + 1, m + 1))
    B[0, 0] = 0.0
    B[1:, 1:] = d**2
    return B


def random_simplex(rng, k, min_volume=1e-2):
    while True:
        p = rng.standard_normal((k + 1, k))
        if simplex_volume(distances_of(p)) > min_volume:
            return p


def test_distance_set_validation():
    with pytest.raises(ValueError):
        DistanceSet(np.array([[0.0, 1.0], [2.0, 0.0]]))  # asymmetric
    with pytest.raises(ValueError):
        DistanceSet(np.array([[0.1, 1.0], [1.0, 0.0]]))  # nonzero diagonal
    with pytest.raises(ValueError):
        DistanceSet(np.array([[0.0, -1.0], [-1.0, 0.0]]))  # negative distance
    with pytest.raises(ValueError):
        DistanceSet(np.array([[0.0]]))  # too small


def test_cm_det_equilateral_triangle():
    d = DistanceSet.from_triangle(1, 1, 1)
    assert cm_det(d) == pytest.approx(-3.0, abs=1e-12)


def test_cm_det_degenerate_triangle():
    d = DistanceSet.from_triangle(1, 2, 3)
    assert cm_det(d) == pytest.approx(0.0, abs=1e-10)


def test_cm_det_regular_tetrahedron_vs_expansion_oracle():
    d = DistanceSet(np.ones((4, 4)) - np.eye(4))
    expect = laplace_det(bordered(d.d))
    assert expect == pytest.approx(4.0, abs=1e-12)
    assert cm_det(d) == pytest.approx(expect, abs=1e-12)


def test_cm_det_subset_restriction():
    d = DistanceSet(np.ones((4, 4)) - np.eye(4))
    assert cm_det(d, subset=[0, 2]) == pytest.approx(2.0, abs=1e-12)
    assert cm_det(d, subset=[1, 2, 3]) == pytest.approx(-3.0, abs=1e-12)
    with pytest.raises(ValueError):
        cm_det(d, subset=[0])


def test_constructible_examples():
    assert is_constructible(DistanceSet.from_triangle(1, 1, 1)).constructible
    rep = is_constructible(DistanceSet.from_triangle(1, 2, 3))
    assert not rep.constructible
    assert any(len(r.subset) == 3 for r in rep.failures())
    assert is_constructible(DistanceSet(np.ones((4, 4)) - np.eye(4))).constructible


def test_constructible_sign_pattern_random():
    rng = np.random.default_rng(7)
    for _ in range(50):
        n = int(rng.integers(3, 6))
        p = random_simplex(rng, n - 1)
        rep = is_constructible(distances_of(p))
        assert rep.constructible
        for rec in rep.records:
            h = len(rec.subset)
            assert np.sign(rec.det) == (-1) ** h


def test_volume_examples():
    assert simplex_volume(DistanceSet.from_triangle(1, 1, 1)) == pytest.approx(
        np.sqrt(3) / 4, abs=1e-12
    )
    tet = DistanceSet(np.ones((4, 4)) - np.eye(4))
    assert simplex_volume(tet) == pytest.approx(np.sqrt(2) / 12, abs=1e-12)
    assert simplex_volume(DistanceSet.from_triangle(1, 2, 3)) == pytest.approx(0.0, abs=1e-7)


def test_volume_inconsistent_distances():
    bad = DistanceSet(np.array([[0, 1, 1, 1], [1, 0, 1, 1], [1, 1, 0, 1], [1, 1, 1, 0]]) * 1.0)
    # Shrink one distance far below what any tetrahedron allows, keeping triples fine.
    d = bad.d.copy()
    d[2, 3] = d[3, 2] = 1.99
    with pytest.raises(InconsistentDistancesError):
        simplex_volume(DistanceSet(d))


def test_volume_cm_identity_random():
    rng = np.random.default_rng(11)
    for _ in range(50):
        k = int(rng.integers(2, 5))
        p = random_simplex(rng, k)
        dset = distances_of(p)
        vol = simplex_volume(dset)
        cm = cm_det(dset)
        lhs = vol**2 * 2**k * math.factorial(k) ** 2
        assert lhs == pytest.approx(abs(cm), rel=1e-10)


def test_heron_examples():
    assert heron_area(1, 1, 1) == pytest.approx(0.43301270, abs=1e-8)
    assert heron_area(3, 4, 5) == pytest.approx(6.0, abs=1e-12)
    assert heron_area(1, 2, 3) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValueError):
        heron_area(1, -2, 3)


def test_heron_matches_simplex_volume():
    rng = np.random.default_rng(3)
    for _ in range(1000):
        p = random_simplex(rng, 2)
        dset = distances_of(p)
        a, b, c = dset.d[0, 1], dset.d[0, 2], dset.d[1, 2]
        assert heron_area(a, b, c) == pytest.approx(simplex_volume(dset), rel=1e-12)


def test_circumradius_examples():
    assert circumradius(DistanceSet.from_triangle(1, 1, 1)) == pytest.approx(
        1 / np.sqrt(3), abs=1e-10
    )
    tet = DistanceSet(np.ones((4, 4)) - np.eye(4))
    assert circumradius(tet) == pytest.approx(np.sqrt(3 / 8), abs=1e-10)
    assert circumradius(DistanceSet.from_triangle(3, 4, 5)) == pytest.approx(2.5, abs=1e-10)
    with pytest.raises(DegenerateSimplexError):
        circumradius(DistanceSet.from_triangle(1, 2, 3))


def test_circumcenter_examples():
    ang = np.deg2rad([90.0, 210.0, 330.0])
    tri = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    sph = circumcenter(tri)
    assert np.allclose(sph.center, 0.0, atol=1e-12)
    assert sph.radius == pytest.approx(1.0, abs=1e-12)

    std = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    sph = circumcenter(std)
    assert np.allclose(sph.center, [0.5, 0.5], atol=1e-12)
    assert sph.radius == pytest.approx(np.sqrt(2) / 2, abs=1e-12)

    tet = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]]) / np.sqrt(8)
    assert circumcenter(tet).radius == pytest.approx(np.sqrt(3 / 8), abs=1e-10)

    degenerate = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
    with pytest.raises(DegenerateSimplexError):
        circumcenter(degenerate)


def test_circumradius_formula_vs_center_solve():
    rng = np.random.default_rng(5)
    for _ in range(200):
        k = int(rng.integers(2, 5))
        p = random_simplex(rng, k)
        r_formula = circumradius(distances_of(p))
        sph = circumcenter(p)
        assert r_formula == pytest.approx(sph.radius, rel=1e-9)
        assert np.allclose(
            np.linalg.norm(p - sph.center, axis=1), sph.radius, rtol=1e-8
        )


def test_distances_of_examples():
    p = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    d = distances_of(p)
    assert d.d[0, 1] == pytest.approx(1.0)
    assert d.d[0, 2] == pytest.approx(1.0)
    assert d.d[1, 2] == pytest.approx(np.sqrt(2))
    with pytest.raises(ValueError):
        distances_of(np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 1.0]]))


def test_distances_of_permutation_and_scale():
    rng = np.random.default_rng(13)
    p = random_simplex(rng, 3)
    d = distances_of(p).d
    perm = rng.permutation(4)
    assert np.allclose(distances_of(p[perm]).d, d[np.ix_(perm, perm)], atol=1e-12)
    assert np.allclose(distances_of(2.5 * p).d, 2.5 * d, rtol=1e-12)


def test_similarity_invariance_of_distances():
    rng = np.random.default_rng(17)
    for k in (2, 3):
        p = random_simplex(rng, k)
        q, _ = np.linalg.qr(rng.standard_normal((k, k)))
        s = float(rng.uniform(0.5, 2.0))
        t = rng.standard_normal(k)
        moved = s * p @ q.T + t
        assert np.allclose(distances_of(moved).d, s * distances_of(p).d, rtol=1e-10)
