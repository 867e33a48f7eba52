"""미지 의사 라벨 선택기"""
import numpy as np
import pytest

from src.common.errors import InvalidInputError
from src.plu.selection import (
    SELECTION_COLUMNS, OracleScorer, UnknownSelection, plu_select, resolve_k, selections_to_frame, topk_select,
)
from src.world import ClassRole
from src.world.geometry import match_proposals

from conftest import make_proposal, make_scene


class FixedScorer:
    """특징 첫 좌표를 FG 확률로 쓰는 점수기"""

    def score_proposals(self, proposals):
        return np.array([p.feature[0] for p in proposals])


@pytest.fixture
def open_scene():
    """GT 1개 (클래스 0), 미지 객체 1개 (클래스 7), 배경 3개"""
    gt_box = (0.05, 0.05, 0.3, 0.3)
    unk_box = (0.6, 0.6, 0.9, 0.9)
    proposals = [
        make_proposal(gt_box, 0.95, [0.9, 0, 0, 0], class_id=0, object_index=0),
        make_proposal(unk_box, 0.30, [0.8, 0, 0, 0], class_id=7, object_index=1),
        make_proposal((0.4, 0.05, 0.55, 0.2), 0.70, [0.2, 0, 0, 0]),
        make_proposal((0.05, 0.5, 0.2, 0.7), 0.60, [0.6, 0, 0, 0]),
        make_proposal((0.35, 0.35, 0.5, 0.5), 0.10, [0.1, 0, 0, 0]),
    ]
    return make_scene([(0, gt_box)], proposals, objects=[(0, gt_box), (7, unk_box)])


def partition_of(scene):
    return match_proposals(scene.proposal_boxes, scene.gt_boxes)


def test_topk_takes_highest_objectness_unmatched(open_scene):
    sel = topk_select(open_scene, partition_of(open_scene), k=2)
    assert sel.chosen == [2, 3]
    assert sel.scores == [0.70, 0.60]


def test_topk_biased_against_low_objectness_unknown(open_scene):
    # 미지 객체 제안(1)은 objectness가 낮아 k=2에서 빠진다
    assert 1 not in topk_select(open_scene, partition_of(open_scene), k=2).chosen


def test_topk_k_larger_than_pool(open_scene):
    sel = topk_select(open_scene, partition_of(open_scene), k=10)
    assert sorted(sel.chosen) == [1, 2, 3, 4]


def test_topk_negative_k(open_scene):
    with pytest.raises(InvalidInputError):
        topk_select(open_scene, partition_of(open_scene), k=-1)


def test_plu_selects_above_threshold_only(open_scene):
    sel = plu_select(open_scene, partition_of(open_scene), FixedScorer(), fg_threshold=0.5)
    # 비매칭 1..4의 점수 0.8, 0.2, 0.6, 0.1
    assert sel.chosen == [1, 3]
    assert sel.scores == pytest.approx([0.8, 0.6])


def test_plu_threshold_is_strict(open_scene):
    sel = plu_select(open_scene, partition_of(open_scene), FixedScorer(), fg_threshold=0.6)
    assert sel.chosen == [1]


def test_plu_never_selects_matched(open_scene):
    sel = plu_select(open_scene, partition_of(open_scene), FixedScorer(), fg_threshold=0.05)
    assert 0 not in sel.chosen


def test_oracle_scorer_marks_unknown_foreground(open_scene):
    sel = plu_select(open_scene, partition_of(open_scene), OracleScorer([0]))
    assert sel.chosen == [1]


def test_resolve_k():
    assert resolve_k('auto', 2.4) == 2
    assert resolve_k('auto', 2.5) == 3
    assert resolve_k(5, 0.0) == 5


def test_selections_frame():
    frame = selections_to_frame([UnknownSelection(3, [1, 4], [0.9, 0.7]), UnknownSelection(4)], 'plu')
    assert list(frame.columns) == SELECTION_COLUMNS
    assert frame['proposal_index'].tolist() == [1, 4]
    assert set(frame['selector']) == {'plu'}


def test_plu_selection_count_varies_across_scenes(audit_world, audit_scenes):
    known = [c.class_id for c in audit_world if c.role is ClassRole.KNOWN]
    scorer = OracleScorer(known)
    counts = [len(plu_select(s, match_proposals(s.proposal_boxes, s.gt_boxes), scorer)) for s in audit_scenes]
    assert np.std(counts) > 0
    assert len(set(counts)) > 1
