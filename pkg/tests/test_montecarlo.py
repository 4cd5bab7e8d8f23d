import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from viewselect.exceptions import NearParallelRays, SingularSystem
from viewselect.montecarlo import (
    BLOCK,
    CameraModel,
    NoiseSpec,
    SimGeometry,
    pixel_to_alpha,
    pixels_for_alpha,
    ratio_two_vs_all,
    run_simulation,
    triangulate_all,
    triangulate_pair,
)
from viewselect.uncertainty import eps2_upper_bound


def test_pixel_to_alpha():
    assert pixel_to_alpha(0) == 0.0
    assert pixel_to_alpha(10) == pytest.approx(10 * math.radians(120) / 1920)
    assert pixel_to_alpha(10) == pytest.approx(0.0109, abs=1e-4)
    vals = [pixel_to_alpha(n) for n in range(0, 50, 5)]
    assert vals == sorted(vals)
    with pytest.raises(ValueError):
        pixel_to_alpha(-1)


def test_pixels_for_alpha_corner():
    cam = CameraModel()
    n = pixels_for_alpha(0.1, cam)
    kx, ky = cam.radians_per_pixel
    assert math.hypot(n * kx, n * ky) == pytest.approx(0.1)


def test_noise_validation():
    with pytest.raises(ValueError):
        NoiseSpec(-1, 0, 0)
    with pytest.raises(ValueError):
        CameraModel((0, 1080))


def test_pair_exact_rays():
    g = np.array([0.3, -0.2, 0.1])
    s1, s2 = np.array([-2.0, 0, 5]), np.array([2.0, 1, 5])
    p = triangulate_pair((s1, g - s1), (s2, g - s2))
    assert np.allclose(p, g, atol=1e-12)


def test_pair_skew_symmetric():
    d = 0.4
    p = triangulate_pair(((-3, 0, -d / 2), (1, 0, 0)), ((0, 5, d / 2), (0, -1, 0)))
    assert np.allclose(p, [0, 0, 0], atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=12, max_size=12))
def test_pair_against_lstsq_oracle(v):
    o1, d1, o2, d2 = (np.array(v[k:k + 3]) for k in range(0, 12, 3))
    if min(np.linalg.norm(d1), np.linalg.norm(d2)) < 0.1:
        return
    c = abs(d1 @ d2) / (np.linalg.norm(d1) * np.linalg.norm(d2))
    if c > 0.99:
        return
    # minimise |o1 + s d1 - o2 - u d2| by least squares on (s, u)
    (s, u), *_ = np.linalg.lstsq(np.column_stack([d1, -d2]), o2 - o1, rcond=None)
    ref = 0.5 * (o1 + s * d1 + o2 + u * d2)
    assert np.allclose(triangulate_pair((o1, d1), (o2, d2)), ref, atol=1e-9)


def test_pair_parallel():
    with pytest.raises(NearParallelRays):
        triangulate_pair(((0, 0, 0), (1, 0, 0)), ((0, 1, 0), (1, 1e-8, 0)))


def test_all_exact_rays():
    g = np.array([1.0, 2.0, 0.0])
    rays = [(s, g - s) for s in np.array([[0, 0, 5], [3, 1, 4], [-2, 5, 6], [1, -3, 5]], float)]
    assert np.allclose(triangulate_all(rays), g, atol=1e-9)


def test_all_two_rays_equals_pair(rng):
    for _ in range(20):
        o = rng.normal(size=(2, 3))
        d = rng.normal(size=(2, 3))
        assert np.allclose(triangulate_all(zip(o, d)), triangulate_pair((o[0], d[0]), (o[1], d[1])), atol=1e-9)


def _residual(p, O, D):
    D = D / np.linalg.norm(D, axis=1, keepdims=True)
    w = p - O
    return float(np.sum(np.sum(w * w, axis=1) - np.sum(w * D, axis=1) ** 2))


def test_all_matches_grid_search(rng):
    h = 10.0
    g = np.zeros(3)
    S = np.column_stack([rng.uniform(-15, 15, 10), rng.uniform(-3, 3, 10), np.full(10, h)])
    D = (g - S) + rng.normal(scale=0.3, size=(10, 3))
    p = triangulate_all(zip(S, D))
    # nested grid refinement around the origin
    center, half = np.zeros(3), 5.0
    for _ in range(30):
        ax = np.linspace(-half, half, 11)
        pts = center + np.stack(np.meshgrid(ax, ax, ax, indexing="ij"), -1).reshape(-1, 3)
        center = pts[np.argmin([_residual(q, S, D) for q in pts])]
        half *= 0.4
    assert np.linalg.norm(p - center) <= 1e-6 * h


def test_all_local_optimality(rng):
    S = rng.uniform(-5, 5, size=(8, 3)) + [0, 0, 10]
    D = -S + rng.normal(scale=0.5, size=(8, 3))
    p = triangulate_all(zip(S, D))
    r0 = _residual(p, S, D)
    for q in p + rng.normal(scale=0.05, size=(1000, 3)):
        assert _residual(q, S, D) >= r0 - 1e-12


def test_all_singular():
    with pytest.raises(SingularSystem):
        triangulate_all([((0, 0, 0), (1, 0, 0)), ((0, 1, 0), (2, 0, 0)), ((0, 0, 1), (1, 0, 0))])
    with pytest.raises(ValueError):
        triangulate_all([((0, 0, 0), (1, 0, 0))])


def test_zero_noise():
    s = run_simulation(SimGeometry(10, 0.1), NoiseSpec(), 500, 1)
    assert np.max(s.errors) < 1e-12 * 10
    assert s.exceed_fraction == 0.0 and len(s.errors) == 500


def test_predicted_worst_uses_given_alpha():
    s = run_simulation(SimGeometry(10, 0.1), NoiseSpec(10, 0.1, 1), 10, 1)
    assert s.predicted_worst == pytest.approx(eps2_upper_bound(10, 0.1))
    assert s.sweep_worst == pytest.approx(5.276139239170036, rel=1e-9)


def test_reproducible():
    g, n = SimGeometry(10, 0.1), NoiseSpec(10, 0.1, 1)
    a = run_simulation(g, n, 5000, 42)
    b = run_simulation(g, n, 5000, 42)
    c = run_simulation(g, n, 5000, 43)
    assert np.array_equal(a.errors, b.errors)
    assert not np.array_equal(a.errors, c.errors)


def test_blocks_prefix_stable():
    g, n = SimGeometry(10, 0.1), NoiseSpec(10, 0.1, 1)
    short = run_simulation(g, n, BLOCK, 9)
    long = run_simulation(g, n, BLOCK + 100, 9)
    assert np.array_equal(long.errors[:BLOCK], short.errors)


def test_pixel_only_within_alpha():
    g = SimGeometry(10, 0.1)
    s = run_simulation(g, NoiseSpec(pixels_for_alpha(0.1), 0, 0), 20000, 3)
    assert np.all(s.errors <= s.sweep_worst)


def test_scale_linear():
    n = NoiseSpec(10, 0.1, 1)
    a = run_simulation(SimGeometry(10, 0.1), n, 20000, 5)
    b = run_simulation(SimGeometry(20, 0.1), n, 20000, 5)
    qa = np.quantile(a.errors, [0.1, 0.5, 0.9, 0.99])
    qb = np.quantile(b.errors, [0.1, 0.5, 0.9, 0.99])
    assert np.allclose(qb, 2 * qa, rtol=0.02)


def test_ratio_zero_noise_excluded():
    r = ratio_two_vs_all(SimGeometry(10, 0.1), NoiseSpec(), 50, 6, 0)
    assert r.excluded == 50
    assert math.isnan(r.max_ratio)


def test_ratio_distribution():
    r = ratio_two_vs_all(SimGeometry(10, 0.1), NoiseSpec(10, 0.1, 1), 2000, 10, 4)
    assert r.excluded == 0
    assert r.min_ratio < 1 < r.max_ratio
    assert r.n_cameras == 10 and len(r.ratios) == 2000


def test_ratio_camera_validation():
    with pytest.raises(ValueError):
        ratio_two_vs_all(SimGeometry(10, 0.1), NoiseSpec(), 10, 2, 0)


def test_all_positions_in_view():
    g = SimGeometry(10, 0.1)
    P = g.all_positions(12)
    half_fov = g.camera.fov[0] / 2
    assert np.all(np.abs(np.arctan2(P[:, 0], P[:, 2])) <= half_fov)
    assert np.array_equal(P[:2], g.pair_positions())
