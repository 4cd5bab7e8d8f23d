import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from viewselect.exceptions import CollinearConfiguration, DegenerateConfiguration, UnboundedIntersection
from viewselect.geometry import diag_lengths, edge_lengths
from viewselect.uncertainty import (
    PairConfig,
    admissible_orientations,
    eps2_upper_bound,
    eps_inf_bracket,
    optimal_baseline,
    optimal_diag1,
    optimal_pair_config,
    ratio_bound,
    sweep_worst,
    third_camera_segment,
    worst_case_pair,
    worst_case_pair_3d,
)

ALPHAS = [round(0.01 * k, 2) for k in range(1, 11)]
# eps / diag1 at the optimal pair, sweep_n = 256 (frozen reference run)
REF_RATIOS = [1.0006, 1.0024, 1.0054, 1.0097, 1.0152, 1.0221, 1.0303, 1.0400, 1.0512, 1.0641]


def test_alpha_validation():
    with pytest.raises(ValueError):
        PairConfig((-1, 1), (1, 1), (0, 0), 0.25)
    with pytest.raises(ValueError):
        eps2_upper_bound(1.0, 0.0)


def test_pairconfig_rejects_collinear():
    with pytest.raises(CollinearConfiguration):
        PairConfig((-1, 1), (1, 1), (3, 1), 0.1)
    with pytest.raises(CollinearConfiguration):
        PairConfig((1, 1), (1, 1), (0, 0), 0.1)


def test_admissible_vertical():
    lo, hi = admissible_orientations((0, 1), (0, 0), 0.1)
    assert (lo, hi) == pytest.approx((math.pi / 2 - 0.1, math.pi / 2 + 0.1))


def test_admissible_optimal_left_camera():
    a = 0.1
    t = optimal_baseline(1.0, a)
    lo, hi = admissible_orientations((-t / 2, 1.0), (0, 0), a)
    assert lo == pytest.approx(math.pi / 4 - 2 * a)
    assert hi == pytest.approx(math.pi / 4)


@given(st.floats(-5, 5), st.floats(0.1, 5), st.floats(0.001, 0.24))
def test_admissible_width(x, y, a):
    lo, hi = admissible_orientations((x, y), (0, 0), a)
    assert hi - lo == pytest.approx(2 * a)


def test_optimal_pair_bracket_h1():
    res = worst_case_pair(optimal_pair_config(1.0, 0.1))
    assert 0.49585 - 1e-5 <= res.eps <= 0.70126
    assert res.eps == pytest.approx(0.5276139239170036, rel=1e-9)
    # the maximiser is the diag2-dominated corner, both elevations at pi/4 - 2 alpha
    assert res.argmax_thetas == pytest.approx((math.pi / 4 - 0.2, math.pi / 4 - 0.2), abs=1e-6)
    assert res.eps == pytest.approx(max(np.linalg.norm(res.polygon.vertices[:, None] - res.polygon.vertices[None], axis=-1).ravel()))


def test_worst_case_alpha_001():
    res = worst_case_pair(optimal_pair_config(1.0, 0.01))
    assert res.eps / optimal_diag1(1.0, 0.01) <= math.sqrt(1.02 / 0.96)


@pytest.mark.parametrize("alpha,ref", list(zip(ALPHAS, REF_RATIOS)))
def test_optimal_pair_ratio_ladder(alpha, ref):
    lo, hi = eps_inf_bracket(1.0, alpha)
    assert hi / lo == pytest.approx(ref, abs=1e-4)
    assert hi / lo <= ratio_bound(alpha) + 1e-6


def test_eps_equals_closed_form_max_diag():
    """Sweep value agrees with the closed-form diagonals at the argmax."""
    a = 0.07
    cfg = optimal_pair_config(1.0, a)
    res = worst_case_pair(cfg)
    tp, tq = res.argmax_thetas
    d1, d2 = diag_lengths(edge_lengths(optimal_baseline(1.0, a), tp, tq, a), tp, tq, a)
    assert res.eps == pytest.approx(max(d1, d2), rel=1e-9)


def test_sweep_against_brute_force():
    """Independent brute-force maximisation with closed-form diagonals."""
    a, t, gx, depth = 0.08, 2.3, 1.0, 1.1
    bp, bq = math.atan2(depth, gx), math.atan2(depth, gx - t)
    best = 0.0
    for up in np.linspace(-a, a, 301):
        for uq in np.linspace(-a, a, 301):
            tp, tq = bp + up, math.pi - (bq + uq)
            r = edge_lengths(t, tp, tq, a)
            best = max(best, *diag_lengths(r, tp, tq, a))
    eps, _, _ = sweep_worst(t, gx, depth, a)
    assert eps[0] >= best - 1e-12
    assert eps[0] == pytest.approx(best, rel=1e-5)


def test_mirror_symmetry():
    cfg = PairConfig((-1.3, 1.0), (1.1, 1.2), (0.2, -0.1), 0.08)
    mirrored = PairConfig((-1.1, 1.2), (1.3, 1.0), (-0.2, -0.1), 0.08)
    assert worst_case_pair(cfg).eps == pytest.approx(worst_case_pair(mirrored).eps, abs=1e-9)


def test_sweep_n_minimum():
    with pytest.raises(ValueError):
        worst_case_pair(optimal_pair_config(1.0, 0.1), sweep_n=16)


def test_unbounded_pair_raises():
    # two cameras nearly above the target: a wedge pair that never closes exists
    cfg = PairConfig((-0.05, 1.0), (0.05, 1.0), (0.0, 0.0), 0.1)
    with pytest.raises(UnboundedIntersection):
        worst_case_pair(cfg)


def test_monotone_in_alpha():
    cfg_pts = ((-1.2, 1.0), (1.3, 1.0), (0.1, 0.0))
    vals = [worst_case_pair(PairConfig(*cfg_pts, a)).eps for a in ALPHAS]
    assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))


@settings(max_examples=25, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(0, 2 * math.pi))
def test_isometry_invariance(dx, dy, phi):
    pts = np.array([[-1.2, 1.0], [1.3, 1.1], [0.1, 0.0]])
    base = worst_case_pair(PairConfig(*pts, 0.1)).eps
    R = np.array([[math.cos(phi), -math.sin(phi)], [math.sin(phi), math.cos(phi)]])
    moved = pts @ R.T + [dx, dy]
    assert worst_case_pair(PairConfig(*moved, 0.1)).eps == pytest.approx(base, rel=1e-9)


def test_eps2_upper_bound_values():
    assert eps2_upper_bound(1.0, 0.1) == pytest.approx(math.sqrt(2) * 0.49584856396966903, rel=1e-12)
    assert eps2_upper_bound(1.0, 0.1) == pytest.approx(0.70125, abs=1e-4)
    assert eps2_upper_bound(1.0, 1e-9) < 1e-8


def test_upper_bound_dominates_sweep():
    for a in ALPHAS:
        assert eps2_upper_bound(1.0, a) >= worst_case_pair(optimal_pair_config(1.0, a)).eps


def test_bracket_lo_value_and_monotone():
    assert eps_inf_bracket(1.0, 0.1)[0] == pytest.approx(0.49585, abs=1e-5)
    los = [optimal_diag1(1.0, a) for a in np.linspace(0.001, 0.249, 200)]
    assert np.all(np.diff(los) > 0)


def test_third_camera_at_optimal_position():
    a = 0.1
    x = optimal_baseline(1.0, a) / 2
    assert third_camera_segment(x, 1.0, a) == pytest.approx(optimal_diag1(1.0, a), rel=1e-12)
    assert third_camera_segment(-x, 1.0, a) == pytest.approx(optimal_diag1(1.0, a), rel=1e-12)


def test_third_camera_overhead_degenerate():
    with pytest.raises(DegenerateConfiguration):
        third_camera_segment(0.0, 1.0, 0.1)


def test_third_camera_minimum_location():
    a = 0.1
    xs = np.linspace(0.25, 10, 4001)
    vals = [third_camera_segment(x, 1.0, a) for x in xs]
    assert xs[int(np.argmin(vals))] == pytest.approx(optimal_baseline(1.0, a) / 2, abs=5e-3)


def test_third_camera_never_below_diag1():
    a, h = 0.1, 2.0
    lo = optimal_diag1(h, a)
    for x in np.linspace(h * math.tan(2 * a) * 1.001, 30 * h, 200):
        assert third_camera_segment(x, h, a) >= lo - 1e-9


def test_3d_matches_2d_embedding():
    cfg = PairConfig((-1.2, 1.0), (1.3, 1.1), (0.1, 0.0), 0.1)
    e2 = worst_case_pair(cfg).eps
    lift = lambda p: np.array([p[0], 0.0, p[1]])
    phi = 0.7
    Rz = np.array([[math.cos(phi), -math.sin(phi), 0], [math.sin(phi), math.cos(phi), 0], [0, 0, 1]])
    pts = [Rz @ lift(p) for p in (cfg.s_p, cfg.s_q, cfg.g)]
    assert worst_case_pair_3d(*pts, 0.1) == pytest.approx(e2, rel=1e-9)


def test_3d_optimal_pair_bracket():
    t = optimal_baseline(1.0, 0.1)
    e = worst_case_pair_3d((-t / 2, 0, 1), (t / 2, 0, 1), (0, 0, 0), 0.1)
    assert 0.49585 - 1e-5 <= e <= 0.70126


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**31))
def test_3d_random_rotation(seed):
    from scipy.spatial.transform import Rotation

    pts = np.array([[-1.2, 0.3, 1.0], [1.3, -0.2, 1.1], [0.1, 0.2, 0.0]])
    base = worst_case_pair_3d(*pts, 0.1)
    R = Rotation.random(random_state=seed).as_matrix()
    moved = pts @ R.T + [1.0, -2.0, 0.5]
    assert worst_case_pair_3d(*moved, 0.1) == pytest.approx(base, rel=1e-9)


def test_3d_collinear():
    with pytest.raises(CollinearConfiguration):
        worst_case_pair_3d((0, 0, 1), (1, 0, 1), (2, 0, 1), 0.1)
