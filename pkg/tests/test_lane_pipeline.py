import time

import cv2
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from hybrid_tracker.lane_pipeline import (
    GuidanceSource,
    Homography,
    LaneError,
    LanePipeline,
    PolyFit,
    SegMask,
    apply_ipm,
    erode,
    extract_lane_pixels,
    guidance_line,
    polyfit_least_squares,
    read_pgm,
    select_best_fit,
    write_pgm,
)


def erode_oracle(labels, k):
    """Pixel-by-pixel erosion; out-of-grid neighbours are background."""
    h, w = labels.shape
    r = k // 2
    out = np.zeros_like(labels)
    for y in range(h):
        for x in range(w):
            lab = labels[y, x]
            if lab == 0:
                continue
            keep = True
            for dy in range(-r, r + 1):
                for dx in range(-r, r + 1):
                    yy, xx = y + dy, x + dx
                    if not (0 <= yy < h and 0 <= xx < w) or labels[yy, xx] != lab:
                        keep = False
            out[y, x] = lab if keep else 0
    return out


# ---------------------------------------------------------------- IPM

def test_identity_ipm_is_noop():
    rng = np.random.default_rng(1)
    m = SegMask(rng.integers(0, 5, (300, 300), dtype=np.uint8))
    assert np.array_equal(apply_ipm(m, Homography.identity()).labels, m.labels)


def test_translation_ipm_shifts_labels():
    lab = np.zeros((50, 60), np.uint8)
    lab[10:20, 5:9] = 2
    lab[30, 40] = 4
    h = Homography(np.array([[1, 0, 7], [0, 1, 3], [0, 0, 1]], float))
    out = apply_ipm(SegMask(lab), h, (60, 50)).labels
    expected = np.zeros_like(lab)
    expected[13:23, 12:16] = 2
    expected[33, 47] = 4
    assert np.array_equal(out, expected)


def test_perspective_ipm_makes_lanes_parallel():
    # converging lane lines in a "camera" mask, mapped back to verticals
    src = [(120, 40), (180, 40), (280, 299), (20, 299)]
    dst = [(100, 0), (200, 0), (200, 299), (100, 299)]
    h = Homography.from_points(src, dst)
    cam = np.zeros((300, 300), np.uint8)
    cv2.line(cam, (120, 40), (20, 299), 2, 3)
    cv2.line(cam, (180, 40), (280, 299), 3, 3)
    top = apply_ipm(SegMask(cam), h).labels
    spacing = []
    for row in range(20, 280, 10):
        left = np.nonzero(top[row] == 2)[0]
        right = np.nonzero(top[row] == 3)[0]
        if len(left) and len(right):
            spacing.append(right.mean() - left.mean())
    assert len(spacing) > 15
    assert np.ptp(spacing) <= 2.0  # nearest-neighbour quantization, one px per side
    assert np.mean(spacing) == pytest.approx(100, abs=1.0)


def test_homography_from_points_is_exact():
    src = [(0, 0), (10, 0), (10, 10), (0, 10)]
    dst = [(3, 1), (12, 2), (14, 15), (1, 9)]
    h = Homography.from_points(src, dst)
    assert np.allclose(h.apply(src), dst, atol=1e-9)
    assert np.allclose(h.inverse().apply(dst), src, atol=1e-9)


def test_singular_homography_rejected():
    with pytest.raises(LaneError):
        Homography(np.zeros((3, 3)))


# ---------------------------------------------------------------- erosion

def test_erode_zero_mask():
    assert not erode(SegMask(np.zeros((10, 10), np.uint8))).labels.any()


def test_erode_removes_isolated_pixel():
    lab = np.zeros((9, 9), np.uint8)
    lab[4, 4] = 3
    assert not erode(SegMask(lab), 3).labels.any()


def test_erode_thins_blob_by_one_pixel_per_side():
    lab = np.zeros((100, 100), np.uint8)
    lab[10:90, 17:83] = 2  # 66 px thick
    cols = np.nonzero(erode(SegMask(lab), 3).labels[50])[0]
    assert len(cols) == 64


def test_even_kernel_rejected():
    with pytest.raises(LaneError):
        erode(SegMask(np.zeros((5, 5), np.uint8)), 4)


@settings(max_examples=40, deadline=None)
@given(arrays(np.uint8, st.tuples(st.integers(1, 12), st.integers(1, 12)),
              elements=st.integers(0, 4)),
       st.sampled_from([3, 5]))
def test_erode_matches_bruteforce(labels, k):
    assert np.array_equal(erode(SegMask(labels), k).labels, erode_oracle(labels, k))


@settings(max_examples=40, deadline=None)
@given(arrays(np.uint8, (16, 16), elements=st.integers(0, 4)))
def test_erosion_is_anti_extensive_and_monotone(labels):
    once = erode(SegMask(labels)).labels
    twice = erode(SegMask(once)).labels
    assert np.count_nonzero(once) <= np.count_nonzero(labels)
    for lab in range(1, 5):
        assert not np.any((twice == lab) & (once != lab))


# ---------------------------------------------------------------- extraction

def test_extract_empty():
    assert extract_lane_pixels(SegMask(np.zeros((4, 4), np.uint8))) == [[], [], [], []]


def test_extract_matches_scan():
    lab = np.zeros((5, 5), np.uint8)
    lab[0, 1] = 2   # (x=1, y=0)
    lab[4, 1] = 2   # (x=1, y=4)
    out = extract_lane_pixels(SegMask(lab))
    scan = [[(x, y) for y in range(5) for x in range(5) if lab[y, x] == i] for i in range(1, 5)]
    assert out == scan
    assert out[1] == [(1, 0), (1, 4)]


def test_extract_full_label():
    out = extract_lane_pixels(SegMask(np.ones((7, 3), np.uint8)))
    assert len(out[0]) == 21 and out[1:] == [[], [], []]


# ---------------------------------------------------------------- fitting

def test_exact_line_fit():
    x = np.arange(6.0)
    f = polyfit_least_squares(x, 1 + 2 * x, 1)
    assert f.coefficients == pytest.approx((1, 2), abs=1e-12)
    assert f.metric == pytest.approx(0, abs=1e-20)


def test_quadratic_fit_matches_normal_equations():
    x = np.array([-2.0, -1.0, 0.5, 1.5, 3.0])
    y = 3 - x + 0.5 * x ** 2
    a = np.vander(x, 3, increasing=True)
    oracle = np.linalg.solve(a.T @ a, a.T @ y)  # normal equations
    f = polyfit_least_squares(x, y, 2)
    assert np.allclose(oracle, (3, -1, 0.5), atol=1e-9)
    assert np.allclose(f.coefficients, oracle, atol=1e-9)


def test_underdetermined_fit_rejected():
    with pytest.raises(LaneError):
        polyfit_least_squares([0.0, 1.0], [0.0, 1.0], 3)
    with pytest.raises(LaneError):
        polyfit_least_squares([2.0, 2.0, 2.0], [0.0, 1.0, 2.0], 1)


def test_polyfit_type_invariants():
    with pytest.raises(LaneError):
        PolyFit(2, (1.0, 2.0), 0.0)


def test_select_straight_prefers_degree_one():
    x = np.arange(20.0)
    assert select_best_fit(x, 4 + 0.5 * x).degree == 1


def test_select_quadratic_pixels():
    x = np.arange(-100.0, 101.0, 10.0)   # 0.01 x^2 is integral on this grid
    y = np.rint(0.01 * x ** 2)
    metrics = {d: polyfit_least_squares(x, y, d).metric for d in (1, 2, 3)}
    assert metrics[1] > 1.0 and metrics[2] < 1e-12 and metrics[3] < 1e-12
    best = select_best_fit(x, y)
    assert best.degree == 2 and best.metric < 1e-12


def test_select_cubic_s_curve():
    x = np.arange(0.0, 300.0, 3.0)
    y = np.rint(150 + 40 * ((x - 150) / 150) ** 3 - 20 * (x - 150) / 150)
    metrics = {d: polyfit_least_squares(x, y, d).metric for d in (1, 2, 3)}
    assert metrics[3] < metrics[2] and metrics[3] < metrics[1]
    assert select_best_fit(x, y).degree == 3


def test_select_parallel_equals_serial():
    rng = np.random.default_rng(4)
    x = rng.uniform(0, 300, 80)
    y = 0.001 * x ** 2 + rng.normal(0, 1, 80)
    assert select_best_fit(x, y, parallel=True) == select_best_fit(x, y)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 3), st.lists(st.floats(-5, 5), min_size=4, max_size=4),
       st.integers(10, 40))
def test_fit_recovers_polynomials(degree, coeffs, n):
    true = np.array(coeffs[: degree + 1])
    x = np.linspace(-3, 7, n)
    y = np.polynomial.polynomial.polyval(x, true)
    f = polyfit_least_squares(x, y, degree)
    assert np.allclose(f.coefficients, true, rtol=1e-9, atol=1e-9 * max(1, np.abs(true).max()))


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 300), st.floats(0, 300)), min_size=4, max_size=40,
                unique_by=lambda p: p[0]))
def test_selection_dominates_each_degree(pts):
    x = np.array([p[0] for p in pts])
    y = np.array([p[1] for p in pts])
    if np.ptp(x) < 1e-3:
        return
    best = select_best_fit(x, y)
    for d in (1, 2, 3):
        try:
            m = polyfit_least_squares(x, y, d).metric
        except LaneError:
            continue
        assert best.metric <= m + 1e-12


# ---------------------------------------------------------------- guidance

def _vertical(col):
    return PolyFit(1, (float(col), 0.0), 0.0)


def test_guidance_midpoint():
    line = guidance_line([None, _vertical(100), _vertical(200), None], 100)
    assert line.source is GuidanceSource.BOTH
    assert len(line.points) == 31
    assert np.allclose(line.xs, 150)


def test_guidance_left_offset():
    line = guidance_line([None, _vertical(100), None, None], 100)
    assert line.source is GuidanceSource.LEFT_OFFSET
    assert np.allclose(line.xs, 150)


def test_guidance_right_offset():
    line = guidance_line([None, None, _vertical(230), None], 100)
    assert line.source is GuidanceSource.RIGHT_OFFSET
    assert np.allclose(line.xs, 180)


def test_guidance_none():
    line = guidance_line([None] * 4, 100)
    assert line.source is GuidanceSource.NONE and line.points == ()
    assert not line


def test_guidance_rows_monotone_and_in_frame():
    line = guidance_line([None, _vertical(-80), _vertical(20), None], 100)
    ys = [p[1] for p in line.points]
    assert ys == sorted(ys, reverse=True)
    assert ys[0] == 300 and ys[-1] == 0
    assert all(0 <= x < 300 for x in line.xs)


def _two_lane_mask(left=100, right=200, width=5):
    lab = np.zeros((300, 300), np.uint8)
    lab[:, left - width // 2: left + width // 2 + 1] = 2
    lab[:, right - width // 2: right + width // 2 + 1] = 3
    return lab


@settings(max_examples=20, deadline=None)
@given(st.integers(60, 140), st.integers(160, 240))
def test_mirror_symmetry(left, right):
    pipe = LanePipeline()
    lab = _two_lane_mask(left, right)
    mirrored = np.zeros_like(lab)
    # x -> 299 - x swaps the lane roles; pixel centres mirror about 149.5
    flipped = lab[:, ::-1]
    mirrored[flipped == 2] = 3
    mirrored[flipped == 3] = 2
    _, a = pipe.run(SegMask(lab))
    _, b = pipe.run(SegMask(mirrored))
    assert np.allclose(a.xs + b.xs, 299.0, atol=1e-6)


def test_pipeline_end_to_end():
    _, line = LanePipeline().run(SegMask(_two_lane_mask()))
    assert line.source is GuidanceSource.BOTH
    assert np.allclose(line.xs, 150, atol=1e-6)


def test_pipeline_latency():
    mask = SegMask(_two_lane_mask())
    pipe = LanePipeline()
    times = []
    for _ in range(30):
        t0 = time.perf_counter()
        pipe.run(mask)
        times.append(time.perf_counter() - t0)
    assert np.median(times) < 0.010


# ---------------------------------------------------------------- PGM

def test_pgm_roundtrip(tmp_path):
    lab = _two_lane_mask()
    write_pgm(tmp_path / "m.pgm", SegMask(lab))
    assert np.array_equal(read_pgm(tmp_path / "m.pgm").labels, lab)


def test_pgm_with_comment(tmp_path):
    p = tmp_path / "c.pgm"
    p.write_bytes(b"P5\n# lanes\n3 2\n255\n" + bytes([0, 1, 2, 3, 4, 0]))
    assert read_pgm(p).labels.tolist() == [[0, 1, 2], [3, 4, 0]]


@pytest.mark.parametrize("payload", [
    b"P2\n2 2\n255\n0 0 0 0",
    b"P5\n2 2\n255\n\x00",
    b"P5\n2 x\n255\n\x00\x00\x00\x00",
    b"P5\n2 1\n255\n\x00\x09",
])
def test_malformed_pgm(tmp_path, payload):
    p = tmp_path / "bad.pgm"
    p.write_bytes(payload)
    with pytest.raises(LaneError):
        read_pgm(p)
