import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fourierdet.codec import encode_polygon, idft_decode
from fourierdet.errors import BothDegenerate, LengthMismatch, ZeroArea
from fourierdet.geometry import NormalizedBox, fd_to_bbox, giou, giou_loss, nms, points_to_bbox, polygon_iou

from oracles import raster_iou, star_polygon


def square(x0, y0, side):
    return np.array([(x0, y0), (x0 + side, y0), (x0 + side, y0 + side), (x0, y0 + side)], dtype=float)


def monte_carlo_giou(a, b, samples=400_000, seed=7):
    """GIoU estimated from uniform samples in the enclosing box."""
    ca, cb = np.array(a.corners()), np.array(b.corners())
    lo, hi = np.minimum(ca[:2], cb[:2]), np.maximum(ca[2:], cb[2:])
    pts = np.random.default_rng(seed).uniform(lo, hi, size=(samples, 2))
    in_a = np.all((pts >= ca[:2]) & (pts <= ca[2:]), axis=1)
    in_b = np.all((pts >= cb[:2]) & (pts <= cb[2:]), axis=1)
    union = np.mean(in_a | in_b)
    return np.mean(in_a & in_b) / union - (1 - union)


# boxes from descriptors

def test_dc_only_descriptor_gives_point_box():
    fd = np.zeros(22)
    fd[10:12] = 0.5
    assert fd_to_bbox(fd) == NormalizedBox(0.5, 0.5, 0.0, 0.0)


def test_circle_descriptor_box():
    fd = np.zeros(22)
    fd[10:12] = 0.5
    fd[12] = 0.25
    np.testing.assert_allclose(fd_to_bbox(fd), (0.5, 0.5, 0.5, 0.5), atol=1e-6)


def test_box_center_is_point_mean_not_midpoint():
    box = points_to_bbox([(0, 0), (1, 0), (1, 1), (0, 1), (0.9, 0.9)])
    assert box.x == pytest.approx(0.58) and box.w == 1.0


def test_box_stable_across_sample_counts(rng):
    for _ in range(50):
        fd = encode_polygon(star_polygon(rng), 1, 1)
        np.testing.assert_allclose(fd_to_bbox(fd, 400), fd_to_bbox(fd, 4000), atol=2e-3)


def test_box_fields_in_unit_range(rng):
    for _ in range(100):
        box = fd_to_bbox(encode_polygon(star_polygon(rng), 1, 1))
        assert all(0 <= v <= 1 for v in box)


def test_box_matches_decoded_points(rng):
    fd = encode_polygon(star_polygon(rng), 1, 1)
    pts = idft_decode(fd, 400)
    box = fd_to_bbox(fd)
    assert box.w == pts[:, 0].max() - pts[:, 0].min()
    assert box.y == pytest.approx(math.fsum(pts[:, 1]) / 400, abs=1e-15)


# GIoU

def test_identical_boxes():
    b = NormalizedBox(0.3, 0.4, 0.2, 0.1)
    assert giou(b, b) == pytest.approx(1.0, abs=1e-12)
    assert giou_loss(b, b) == pytest.approx(0.0, abs=1e-12)


def test_disjoint_unit_boxes_give_minus_one_third():
    a, b = NormalizedBox(0.5, 0.5, 1, 1), NormalizedBox(2.5, 0.5, 1, 1)
    assert abs(giou(a, b) - (-1 / 3)) <= 1e-12
    assert monte_carlo_giou(a, b) == pytest.approx(-1 / 3, abs=5e-3)


def test_overlapping_boxes_against_monte_carlo():
    a, b = NormalizedBox(0.4, 0.5, 0.4, 0.3), NormalizedBox(0.55, 0.6, 0.3, 0.5)
    assert giou(a, b) == pytest.approx(monte_carlo_giou(a, b), abs=5e-3)


def test_far_apart_boxes_approach_minus_one():
    a, b = NormalizedBox(0, 0, 1, 1), NormalizedBox(1e6, 1e6, 1, 1)
    assert giou(a, b) == pytest.approx(-1, abs=1e-5)


def test_one_degenerate_box_is_allowed():
    value = giou(NormalizedBox(0.5, 0.5, 0, 0), NormalizedBox(0.5, 0.5, 0.2, 0.2))
    assert value == pytest.approx(0.0)


def test_both_degenerate_raises():
    with pytest.raises(BothDegenerate):
        giou(NormalizedBox(0.5, 0.5, 0, 0.3), NormalizedBox(0.2, 0.2, 0.1, 0))


boxes = st.builds(NormalizedBox, st.floats(0, 1), st.floats(0, 1), st.floats(0.01, 1), st.floats(0.01, 1))


@given(boxes, boxes)
def test_giou_range_and_symmetry(a, b):
    g = giou(a, b)
    assert -1 < g <= 1 + 1e-12
    assert g == pytest.approx(giou(b, a), abs=1e-12)


# polygon IoU

def test_polygon_with_itself(rng):
    poly = star_polygon(rng)
    assert polygon_iou(poly, poly) == pytest.approx(1.0, abs=1e-12)


def test_disjoint_squares():
    assert polygon_iou(square(0, 0, 0.2), square(0.5, 0.5, 0.2)) == 0.0


def test_shifted_square_gives_one_third():
    a, b = square(0, 0, 1), square(0.5, 0, 1)
    assert polygon_iou(a, b) == pytest.approx(1 / 3, abs=1e-12)
    # same geometry scaled into the unit square for the raster oracle
    assert raster_iou(a / 2, b / 2) == pytest.approx(1 / 3, abs=1e-3)


def test_orientation_does_not_matter(rng):
    a, b = star_polygon(rng), star_polygon(rng)
    assert polygon_iou(a, b) == pytest.approx(polygon_iou(a[::-1], b), abs=1e-12)


def test_matches_raster_oracle(rng):
    for _ in range(20):
        a, b = star_polygon(rng), star_polygon(rng)
        assert polygon_iou(a, b) == pytest.approx(raster_iou(a, b), abs=1e-3)


def test_self_intersecting_uses_even_odd_rule():
    # pentagram: the inner pentagon is covered twice and counts as outside
    t = np.pi / 2 + 4 * np.pi * np.arange(5) / 5
    star = 0.5 + 0.4 * np.column_stack([np.cos(t), np.sin(t)])
    box = square(0.05, 0.05, 0.9)
    assert polygon_iou(star, box) == pytest.approx(raster_iou(star, box), abs=1e-3)
    bowtie = np.array([(0.1, 0.1), (0.9, 0.9), (0.9, 0.1), (0.1, 0.9)])
    assert polygon_iou(bowtie, box) == pytest.approx(raster_iou(bowtie, box), abs=1e-3)


def test_zero_area_cases():
    line = np.array([(0, 0), (1, 1), (0.5, 0.5)])
    with pytest.raises(ZeroArea):
        polygon_iou(line, line)
    assert polygon_iou(line, square(0, 0, 1)) == 0.0


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_polygon_iou_symmetric_and_bounded(seed):
    rng = np.random.default_rng(seed)
    a, b = star_polygon(rng), star_polygon(rng)
    value = polygon_iou(a, b)
    assert 0 <= value <= 1
    assert value == pytest.approx(polygon_iou(b, a), abs=1e-12)


# NMS

def greedy_fixed_point(iou, scores, threshold):
    """Brute force: the unique subset S where i is in S iff no higher-priority member of S overlaps it."""
    n = len(scores)
    rank = sorted(range(n), key=lambda i: (-scores[i], i))
    before = {i: set(rank[:rank.index(i)]) for i in range(n)}
    hits = []
    for size in range(n + 1):
        for subset in itertools.combinations(range(n), size):
            s = set(subset)
            if all((i in s) == (not any(iou[i][j] > threshold for j in s & before[i])) for i in range(n)):
                hits.append(subset)
    assert len(hits) == 1
    return sorted(hits[0], key=rank.index)


def test_identical_contours_keep_best():
    sq = square(0.1, 0.1, 0.3)
    assert nms([sq, sq], [0.8, 0.9]) == [1]


def test_low_overlap_keeps_all():
    contours = [square(0.1 * i, 0, 0.1) for i in range(5)]
    assert nms(contours, [0.5, 0.9, 0.7, 0.6, 0.8]) == [1, 4, 2, 3, 0]


def test_score_ties_prefer_lower_index():
    sq = square(0.2, 0.2, 0.3)
    assert nms([sq, sq, sq], [0.5, 0.5, 0.5]) == [0]


def test_nms_matches_brute_force(rng):
    checked = 0
    for _ in range(10):
        base = star_polygon(rng, center=(0.3, 0.3), max_radius=0.2)
        contours = [base, base + rng.uniform(-0.02, 0.02, 2), base + rng.uniform(-0.15, 0.15, 2),
                    star_polygon(rng, center=(0.75, 0.75), max_radius=0.2), star_polygon(rng, center=(0.75, 0.3),
                                                                                         max_radius=0.2)]
        scores = list(rng.uniform(0.1, 1, 5))
        iou = [[raster_iou(a, b, 512) for b in contours] for a in contours]
        # skip draws whose overlap sits too close to the threshold for a coarse raster
        if any(abs(v - 0.5) < 0.02 for row in iou for v in row):
            continue
        assert nms(contours, scores, 0.5) == greedy_fixed_point(iou, scores, 0.5)
        checked += 1
    assert checked >= 5


def test_nms_output_pairwise_below_threshold(rng):
    contours = [star_polygon(rng, center=rng.uniform(0.3, 0.7, 2), max_radius=0.25) for _ in range(12)]
    scores = list(rng.uniform(0, 1, 12))
    kept = nms(contours, scores, 0.3)
    assert len(set(kept)) == len(kept)
    for i, j in itertools.combinations(kept, 2):
        assert polygon_iou(contours[i], contours[j]) <= 0.3


def test_nms_length_mismatch():
    with pytest.raises(LengthMismatch):
        nms([square(0, 0, 1)], [0.5, 0.4])
