"""
합성 세계 데이터 타입

- ClassSpec: 클래스 외형 분포 (프로토타입, 분산, 기지 클래스와의 거리)
- Proposal: 후보 영역 (박스, 특징, objectness, 숨은 출처 태그)
- Scene: GT 주석 (기지 클래스만) + 제안 + 숨은 객체 목록

숨은 태그(truth)와 objects는 생성기/평가기/감사 전용이며
학습 경로에서는 읽지 않는다.
"""
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Dict, List, Optional, Sequence

import numpy as np

from .geometry import BBox, boxes_to_array


class ClassRole(Enum):
    """클래스 역할"""
    KNOWN = 'known'         # 언젠가 주석되는 클래스
    UNKNOWN = 'unknown'     # 주석되지 않는 클래스


class TruthKind(Enum):
    """제안 출처"""
    FOREGROUND = 'fg'
    BACKGROUND = 'bg'


@dataclass(frozen=True, eq=False)
class ClassSpec:
    """클래스 외형 분포"""
    class_id: int
    role: ClassRole
    prototype: np.ndarray
    spread: float
    shift: float

    def to_dict(self) -> Dict:
        return {
            'class_id': self.class_id,
            'role': self.role.value,
            'prototype': self.prototype.tolist(),
            'spread': self.spread,
            'shift': self.shift,
        }


@dataclass(frozen=True)
class ProposalTruth:
    """제안의 숨은 출처 태그"""
    kind: TruthKind
    class_id: Optional[int] = None
    object_index: Optional[int] = None

    @property
    def is_foreground(self) -> bool:
        return self.kind is TruthKind.FOREGROUND

    @classmethod
    def background(cls) -> 'ProposalTruth':
        return cls(TruthKind.BACKGROUND)


@dataclass(frozen=True, eq=False)
class Proposal:
    """후보 영역"""
    box: BBox
    feature: np.ndarray
    objectness: float
    truth: ProposalTruth


@dataclass(frozen=True)
class GroundTruth:
    """주석 (클래스, 박스)"""
    class_id: int
    box: BBox


@dataclass(frozen=True, eq=False)
class Scene:
    """한 장의 합성 이미지

    gt: 기지 클래스 주석만 포함
    objects: 배치된 모든 객체 (숨은 정보)
    """
    scene_id: int
    gt: List[GroundTruth]
    proposals: List[Proposal]
    objects: List[GroundTruth] = field(default_factory=list)

    @cached_property
    def features(self) -> np.ndarray:
        """(n, d) 특징 행렬"""
        if not self.proposals:
            return np.zeros((0, 0), dtype=np.float64)
        return np.stack([p.feature for p in self.proposals])

    @cached_property
    def objectness(self) -> np.ndarray:
        return np.array([p.objectness for p in self.proposals], dtype=np.float64)

    @cached_property
    def proposal_boxes(self) -> List[BBox]:
        return [p.box for p in self.proposals]

    @cached_property
    def proposal_box_array(self) -> np.ndarray:
        return boxes_to_array(self.proposal_boxes)

    @property
    def gt_boxes(self) -> List[BBox]:
        return [g.box for g in self.gt]

    def unknown_objects(self, known_ids: Sequence[int]) -> List[GroundTruth]:
        """기지 집합 밖 클래스의 객체 (평가 전용)"""
        known = set(known_ids)
        return [o for o in self.objects if o.class_id not in known]
