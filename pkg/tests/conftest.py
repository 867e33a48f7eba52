"""공용 픽스처: 작은 세계, 손으로 만든 씬, 소형 실행 설정"""
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pytest

from src.common.config import RunConfig, SceneConfig
from src.metrics.detection import UNKNOWN_LABEL, Detection
from src.world import (
    BBox, ClassRole, GroundTruth, Proposal, ProposalTruth, Scene, TruthKind, generate_scenes, generate_world,
)

TINY_OVERRIDES = {
    'world.n_known': 4,
    'world.n_unknown': 2,
    'world.d': 8,
    'scene.objects_min': 2,
    'scene.objects_max': 3,
    'scene.n_bg_proposals': 10,
    'protocol.n_tasks': 2,
    'protocol.classes_per_task': 2,
    'protocol.train_scenes': 12,
    'protocol.test_scenes': 6,
    'protocol.finetune_samples': 64,
    'plu.train_samples': 128,
    'plu.batch_size': 4,
    'plu.h1': 8,
    'plu.h2': 4,
    'detector.h1': 8,
    'detector.h2': 4,
    'detector.train_samples': 256,
    'detector.batch_size': 16,
    'run.seeds': [0, 1],
    'run.workers': 1,
}


def tiny_run_config(**extra) -> RunConfig:
    """수 초 안에 끝나는 실행 설정"""
    return RunConfig().replace(**{**TINY_OVERRIDES, **extra})


def make_proposal(
    box: Tuple[float, float, float, float],
    objectness: float,
    feature: Optional[Sequence[float]] = None,
    class_id: Optional[int] = None,
    object_index: Optional[int] = None,
    d: int = 4,
) -> Proposal:
    """손으로 만든 제안 (class_id가 있으면 FG)"""
    vec = np.zeros(d) if feature is None else np.asarray(feature, dtype=np.float64)
    if class_id is None:
        truth = ProposalTruth.background()
    else:
        truth = ProposalTruth(TruthKind.FOREGROUND, class_id, object_index)
    return Proposal(box=BBox(*box), feature=vec, objectness=objectness, truth=truth)


def make_scene(
    gt: List[Tuple[int, Tuple[float, float, float, float]]],
    proposals: List[Proposal],
    objects: Optional[List[Tuple[int, Tuple[float, float, float, float]]]] = None,
    scene_id: int = 0,
) -> Scene:
    gts = [GroundTruth(c, BBox(*b)) for c, b in gt]
    objs = gts if objects is None else [GroundTruth(c, BBox(*b)) for c, b in objects]
    return Scene(scene_id=scene_id, gt=gts, proposals=proposals, objects=objs)


@pytest.fixture
def tiny_cfg() -> RunConfig:
    return tiny_run_config()


@pytest.fixture
def small_world():
    """기지 4개 + 미지 2개, d=8"""
    return generate_world(n_known=4, n_unknown=2, d=8, shift_range=(1.0, 2.0), seed=11)


@pytest.fixture
def small_scenes(small_world):
    """기지 {0, 1} 기준 씬 16장"""
    params = SceneConfig(objects_min=2, objects_max=4, n_bg_proposals=12)
    return generate_scenes(small_world, [0, 1], params, n_scenes=16, seed=5)


@pytest.fixture
def audit_world():
    """감사용 세계: 모든 KNOWN 역할 클래스가 기지, d=32"""
    return generate_world(n_known=4, n_unknown=3, d=32, shift_range=(1.0, 2.0), seed=3)


@pytest.fixture
def audit_scenes(audit_world):
    known = [c.class_id for c in audit_world if c.role is ClassRole.KNOWN]
    return generate_scenes(audit_world, known, SceneConfig(), n_scenes=40, seed=9)


@pytest.fixture
def simple_scene() -> Scene:
    """GT 1개 (클래스 0), 제안 6개

    0: GT와 동일 박스 (FG)
    1: GT와 부분 겹침 (IoU 0.5 이상)
    2~5: 배경, objectness 0.4 / 0.1 / 0.3 / 0.2
    """
    gt_box = (0.1, 0.1, 0.4, 0.4)
    proposals = [
        make_proposal(gt_box, 0.9, [1.0, 0.0, 0.0, 0.0], class_id=0, object_index=0),
        make_proposal((0.1, 0.1, 0.4, 0.38), 0.8, [0.9, 0.1, 0.0, 0.0], class_id=0, object_index=0),
        make_proposal((0.6, 0.6, 0.9, 0.9), 0.4, [0.0, 1.0, 0.0, 0.0]),
        make_proposal((0.6, 0.1, 0.9, 0.3), 0.1, [0.0, 0.0, 1.0, 0.0]),
        make_proposal((0.1, 0.6, 0.3, 0.9), 0.3, [0.0, 0.0, 0.0, 1.0]),
        make_proposal((0.45, 0.45, 0.55, 0.55), 0.2, [0.5, 0.5, 0.0, 0.0]),
    ]
    return make_scene([(0, gt_box)], proposals)


# 평가 지표 대조용 무작위 검출 픽스처
FIXTURE_KNOWN = (1, 2)
FIXTURE_UNKNOWN = 9


def random_box(rng: np.random.Generator) -> BBox:
    w, h = rng.uniform(0.05, 0.3, size=2)
    x1, y1 = rng.uniform(0.0, 1.0 - w), rng.uniform(0.0, 1.0 - h)
    return BBox(float(x1), float(y1), float(x1 + w), float(y1 + h))


def jittered(box: BBox, rng: np.random.Generator, scale: float = 0.04) -> BBox:
    dx, dy = rng.uniform(-scale, scale, size=2)
    dx = float(np.clip(dx, -box.x1, 1.0 - box.x2))
    dy = float(np.clip(dy, -box.y1, 1.0 - box.y2))
    return BBox(box.x1 + dx, box.y1 + dy, box.x2 + dx, box.y2 + dy)


def random_detection_fixture(seed: int):
    """(검출 목록, scene_id → 전체 객체) 무작위 생성, 신뢰도는 모두 다름"""
    rng = np.random.default_rng(seed)
    objects = {}
    raw: List[Tuple[int, int, BBox]] = []
    for sid in range(int(rng.integers(1, 4))):
        items = [GroundTruth(int(rng.choice(FIXTURE_KNOWN + (FIXTURE_UNKNOWN,))), random_box(rng))
                 for _ in range(int(rng.integers(1, 5)))]
        objects[sid] = items
        for obj in items:
            for _ in range(int(rng.integers(0, 3))):
                if obj.class_id in FIXTURE_KNOWN and rng.random() < 0.7:
                    label = obj.class_id
                else:
                    label = int(rng.choice(FIXTURE_KNOWN))
                raw.append((sid, label, jittered(obj.box, rng)))
            if obj.class_id == FIXTURE_UNKNOWN and rng.random() < 0.6:
                raw.append((sid, UNKNOWN_LABEL, jittered(obj.box, rng)))
        for _ in range(int(rng.integers(0, 3))):
            label = int(rng.choice(FIXTURE_KNOWN + (UNKNOWN_LABEL,)))
            raw.append((sid, label, random_box(rng)))
    ranks = rng.permutation(len(raw))
    detections = [Detection(sid, label, box, float((r + 1) / (len(raw) + 1)))
                  for (sid, label, box), r in zip(raw, ranks)]
    return detections, objects
