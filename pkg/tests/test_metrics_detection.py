"""PR 곡선, AP, mAP"""
import pytest
from hypothesis import given, strategies as st

from src.common.errors import InvalidInputError
from src.metrics.detection import (
    Detection, average_precision, class_aps, greedy_match, mean_ap, pr_curve, sort_detections,
)
from src.world.geometry import BBox, iou
from src.world.scene import GroundTruth

from conftest import FIXTURE_KNOWN, random_detection_fixture

A = BBox(0.0, 0.0, 0.2, 0.2)
B = BBox(0.5, 0.5, 0.7, 0.7)
FAR = BBox(0.8, 0.0, 0.95, 0.15)


@pytest.fixture
def gts():
    return {0: [GroundTruth(1, A), GroundTruth(1, B)]}


def test_perfect_detections_give_ap_one(gts):
    dets = [Detection(0, 1, A, 0.9), Detection(0, 1, B, 0.8)]
    assert average_precision(pr_curve(dets, gts, 1)) == pytest.approx(1.0)
    assert average_precision(pr_curve(dets, gts, 1), 'eleven_point') == pytest.approx(1.0)


def test_interleaved_false_positive(gts):
    dets = [Detection(0, 1, A, 0.9), Detection(0, 1, FAR, 0.8), Detection(0, 1, B, 0.7)]
    curve = pr_curve(dets, gts, 1)
    assert curve[:2] == [(1.0, 0.5), (0.5, 0.5)]
    assert curve[2] == pytest.approx((2 / 3, 1.0))
    # 포락선: 재현율 0.5까지 1.0, 1.0까지 2/3
    assert average_precision(curve) == pytest.approx(0.5 + 0.5 * 2 / 3)


def test_duplicate_detection_is_false_positive(gts):
    dets = [Detection(0, 1, A, 0.9), Detection(0, 1, A, 0.8)]
    order = sort_detections(dets)
    assert greedy_match(dets, order, gts) == [True, False]


def test_wrong_class_never_matches(gts):
    dets = [Detection(0, 2, A, 0.9)]
    assert pr_curve(dets, gts, 2) == []
    assert greedy_match(dets, [0], gts) == [False]


def test_class_without_gt_is_flagged_and_excluded(gts):
    dets = [Detection(0, 1, A, 0.9), Detection(0, 3, B, 0.5)]
    aps = class_aps(dets, gts, [1, 3])
    assert aps[3].flagged
    assert aps[3].ap == 0.0
    assert mean_ap(aps) == pytest.approx(aps[1].ap)


def test_mean_ap_of_nothing_is_none():
    assert mean_ap({}) is None


def test_no_detections_ap_zero(gts):
    assert average_precision(pr_curve([], gts, 1)) == 0.0


@pytest.mark.parametrize('confidence', [-0.1, 1.5, float('nan')])
def test_detection_confidence_validated(confidence):
    with pytest.raises(InvalidInputError):
        Detection(0, 1, A, confidence)


def test_unknown_ap_method(gts):
    with pytest.raises(InvalidInputError):
        average_precision([(1.0, 1.0)], 'coco')


def test_ties_broken_by_scene_then_input_order():
    dets = [Detection(2, 1, A, 0.5), Detection(1, 1, A, 0.5), Detection(1, 1, B, 0.5)]
    assert sort_detections(dets) == [1, 2, 0]


@given(
    st.lists(st.tuples(st.sampled_from([A, B, FAR]), st.integers(1, 100)), min_size=1, max_size=8, unique_by=lambda t: t[1]),
    st.floats(0.1, 1.0),
)
def test_ap_invariant_to_confidence_scaling(raw, factor):
    gts = {0: [GroundTruth(1, A), GroundTruth(1, B)]}
    dets = [Detection(0, 1, box, conf / 100) for box, conf in raw]
    scaled = [Detection(0, 1, box, conf / 100 * factor) for box, conf in raw]
    assert average_precision(pr_curve(scaled, gts, 1)) == pytest.approx(average_precision(pr_curve(dets, gts, 1)))


def brute_force_prefix(dets, gts, class_id, n):
    """신뢰도 상위 n개 검출만으로 처음부터 다시 센 (precision, recall)"""
    ranked = sorted(dets, key=lambda d: -d.confidence)[:n]
    n_gt = sum(1 for items in gts.values() for g in items if g.class_id == class_id)
    claimed = set()
    tp = 0
    for det in ranked:
        best_j, best = -1, 0.0
        for j, g in enumerate(g for g in gts.get(det.scene_id, []) if g.class_id == class_id):
            overlap = iou(det.box, g.box)
            if overlap > best:
                best_j, best = j, overlap
        if best >= 0.5 and (det.scene_id, best_j) not in claimed:
            claimed.add((det.scene_id, best_j))
            tp += 1
    return tp / n, tp / n_gt


@pytest.mark.parametrize('seed', range(100))
def test_pr_curve_matches_confidence_prefix_oracle(seed):
    detections, objects = random_detection_fixture(seed)
    for class_id in FIXTURE_KNOWN:
        curve = pr_curve(detections, objects, class_id)
        if not any(g.class_id == class_id for items in objects.values() for g in items):
            assert curve == []
            continue
        dets = [d for d in detections if d.label == class_id]
        assert len(curve) == len(dets)
        for n, (precision, recall) in enumerate(curve, start=1):
            expected = brute_force_prefix(dets, objects, class_id, n)
            assert precision == pytest.approx(expected[0], abs=1e-12)
            assert recall == pytest.approx(expected[1], abs=1e-12)
