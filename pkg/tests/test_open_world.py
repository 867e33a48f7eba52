"""WI, A-OSE, U-Recall"""
from dataclasses import replace

import pytest

from src.common.errors import InvalidInputError
from src.metrics.detection import UNKNOWN_LABEL, Detection
from src.metrics.open_world import (
    a_ose, operating_point, split_objects, u_recall, wilderness_impact, wilderness_impact_from_precisions,
)
from src.world.geometry import BBox, iou
from src.world.scene import GroundTruth

from conftest import FIXTURE_KNOWN, random_detection_fixture

A1 = BBox(0.0, 0.0, 0.2, 0.2)
A2 = BBox(0.5, 0.5, 0.7, 0.7)
U = BBox(0.8, 0.0, 0.95, 0.15)
BG = BBox(0.3, 0.8, 0.45, 0.95)

OBJECTS = {0: [GroundTruth(1, A1), GroundTruth(1, A2), GroundTruth(9, U)]}
KNOWN = [1]


@pytest.fixture
def detections():
    """기지 TP, 미지 객체 위 기지 라벨, 기지 TP 순"""
    return [Detection(0, 1, A1, 0.9), Detection(0, 1, U, 0.8), Detection(0, 1, A2, 0.7)]


def test_wi_at_full_recall(detections):
    point = operating_point(detections, OBJECTS, KNOWN, recall_point=1.0)
    assert point.n_detections == 3
    assert point.true_positives == 2
    assert point.wilderness_hits == 1
    assert point.wilderness_impact == pytest.approx(0.5)
    assert point.a_ose == 1
    assert point.confidence_threshold == 0.7
    assert not point.recall_flagged


def test_wi_matches_precision_form(detections):
    point = operating_point(detections, OBJECTS, KNOWN, recall_point=1.0)
    assert point.wilderness_impact == pytest.approx(
        wilderness_impact_from_precisions(point.precision_known, point.precision_known_unknown))


def test_lower_recall_point_cuts_before_wilderness_hit(detections):
    assert wilderness_impact(detections, OBJECTS, KNOWN, recall_point=0.5) == 0.0
    assert a_ose(detections, OBJECTS, KNOWN, recall_point=0.5) == 0


def test_unknown_labelled_detections_are_ignored(detections):
    extra = detections + [Detection(0, UNKNOWN_LABEL, U, 0.95)]
    assert wilderness_impact(extra, OBJECTS, KNOWN, recall_point=1.0) == pytest.approx(0.5)


def test_unreachable_recall_is_flagged():
    dets = [Detection(0, 1, A1, 0.9), Detection(0, 1, U, 0.8)]
    point = operating_point(dets, OBJECTS, KNOWN, recall_point=1.0)
    assert point.recall_flagged
    assert point.recall_reached == 0.5
    assert point.wilderness_impact == pytest.approx(1.0)


def test_no_true_positive_gives_zero_wi():
    point = operating_point([Detection(0, 1, U, 0.8)], OBJECTS, KNOWN)
    assert point.precision_flagged
    assert point.wilderness_impact == 0.0


def test_background_false_positive_is_not_a_wilderness_hit():
    dets = [Detection(0, 1, A1, 0.9), Detection(0, 1, BG, 0.8), Detection(0, 1, A2, 0.7)]
    point = operating_point(dets, OBJECTS, KNOWN, recall_point=1.0)
    assert point.wilderness_hits == 0
    assert point.a_ose == 0


@pytest.mark.parametrize('recall_point', [0.0, 1.2])
def test_recall_point_range(detections, recall_point):
    with pytest.raises(InvalidInputError):
        operating_point(detections, OBJECTS, KNOWN, recall_point=recall_point)


def test_precision_form_rejects_zero():
    with pytest.raises(InvalidInputError):
        wilderness_impact_from_precisions(1.0, 0.0)
    assert wilderness_impact_from_precisions(1.0, 0.8) == pytest.approx(0.25)


def test_u_recall():
    _, unknown = split_objects(OBJECTS, KNOWN)
    assert u_recall([Detection(0, UNKNOWN_LABEL, U, 0.3)], unknown) == 1.0
    assert u_recall([Detection(0, UNKNOWN_LABEL, BG, 0.3)], unknown) == 0.0
    # 기지 라벨 검출은 미지 객체를 덮지 않는다
    assert u_recall([Detection(0, 1, U, 0.3)], unknown) == 0.0


def test_u_recall_without_unknowns():
    known_only = {0: [GroundTruth(1, A1)]}
    _, unknown = split_objects(known_only, KNOWN)
    assert u_recall([Detection(0, UNKNOWN_LABEL, A1, 0.5)], unknown) is None


def best_iou(box, boxes):
    return max((iou(box, b) for b in boxes), default=0.0)


def brute_force_operating_point(detections, objects, known_ids, recall_point=0.8):
    """모든 (검출, 객체) 쌍을 직접 훑는 운영점: (N, TP, H, A-OSE)"""
    known = set(known_ids)
    dets = sorted((d for d in detections if not d.is_unknown), key=lambda d: -d.confidence)
    n_known_gt = sum(1 for items in objects.values() for o in items if o.class_id in known)

    claimed = set()
    flags = []
    for det in dets:
        same = [(j, o) for j, o in enumerate(objects.get(det.scene_id, [])) if o.class_id == det.label]
        best_j, best = -1, 0.0
        for j, o in same:
            overlap = iou(det.box, o.box)
            if overlap > best:
                best_j, best = j, overlap
        hit = best >= 0.5 and best_j not in {j for s, j in claimed if s == det.scene_id}
        if hit:
            claimed.add((det.scene_id, best_j))
        flags.append(hit)

    cut, tp = len(dets), 0
    for pos, hit in enumerate(flags):
        tp += hit
        if n_known_gt and tp / n_known_gt >= recall_point:
            cut = pos + 1
            break

    n = tp = hits = ose = 0
    for det, hit in zip(dets[:cut], flags[:cut]):
        scene = objects.get(det.scene_id, [])
        unknown_best = best_iou(det.box, [o.box for o in scene if o.class_id not in known])
        known_best = best_iou(det.box, [o.box for o in scene if o.class_id in known])
        n += 1
        tp += hit
        hits += (not hit) and unknown_best >= 0.5
        ose += unknown_best >= 0.5 and unknown_best > known_best
    return n, tp, hits, ose


def brute_force_u_recall(detections, objects, known_ids):
    unknown = [(sid, o) for sid, items in objects.items() for o in items if o.class_id not in set(known_ids)]
    if not unknown:
        return None
    covered = sum(
        any(d.is_unknown and d.scene_id == sid and iou(d.box, o.box) >= 0.5 for d in detections)
        for sid, o in unknown
    )
    return covered / len(unknown)


@pytest.mark.parametrize('seed', range(100))
def test_open_world_metrics_match_all_pairs_scan(seed):
    detections, objects = random_detection_fixture(seed)
    point = operating_point(detections, objects, FIXTURE_KNOWN)
    n, tp, hits, ose = brute_force_operating_point(detections, objects, FIXTURE_KNOWN)
    assert (point.n_detections, point.true_positives, point.wilderness_hits, point.a_ose) == (n, tp, hits, ose)
    assert a_ose(detections, objects, FIXTURE_KNOWN) == ose
    expected_wi = hits / (n - hits) if tp else 0.0
    assert wilderness_impact(detections, objects, FIXTURE_KNOWN) == pytest.approx(expected_wi, abs=1e-12)

    _, unknown = split_objects(objects, FIXTURE_KNOWN)
    expected = brute_force_u_recall(detections, objects, FIXTURE_KNOWN)
    result = u_recall(detections, unknown)
    if expected is None:
        assert result is None
    else:
        assert result == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize('seed', range(100))
@pytest.mark.parametrize('factor', [1e-3, 0.37, 0.9])
def test_open_world_metrics_ignore_confidence_scale(seed, factor):
    detections, objects = random_detection_fixture(seed)
    scaled = [replace(d, confidence=d.confidence * factor) for d in detections]
    _, unknown = split_objects(objects, FIXTURE_KNOWN)
    assert wilderness_impact(scaled, objects, FIXTURE_KNOWN) == wilderness_impact(detections, objects, FIXTURE_KNOWN)
    assert a_ose(scaled, objects, FIXTURE_KNOWN) == a_ose(detections, objects, FIXTURE_KNOWN)
    assert u_recall(scaled, unknown) == u_recall(detections, unknown)
