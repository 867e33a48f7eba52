"""
프로토콜 실행 상태

- TaskData: 태스크 학습/평가 씬 + top-k 기본 k 산출용 평균 미지 객체 수
- RunState: 태스크 간에 이어지는 φ, 검출 헤드, 리포트, 감사, 학습 로그
"""
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import pandas as pd

from ..common.config import RunConfig
from ..metrics.report import EvalReport
from ..plu.detector import KnownHead
from ..plu.label_audit import LabelAudit
from ..plu.predictor import Predictor
from ..plu.trainer import TrainingLog
from ..world.scene import Scene


@dataclass
class TaskData:
    """태스크 1개의 데이터"""
    train: List[Scene]
    test: List[Scene]
    mean_unknown_objects: float = 0.0

    @property
    def d(self) -> int:
        for scene in self.train + self.test:
            if scene.proposals:
                return int(scene.features.shape[1])
        return 0


@dataclass
class RunState:
    """프로토콜 실행 상태 (태스크 순서대로 갱신)"""
    config: RunConfig
    seed: int
    predictor: Optional[Predictor] = None
    head: Optional[KnownHead] = None
    completed: List[int] = field(default_factory=list)
    reports: Dict[int, Dict[str, EvalReport]] = field(default_factory=dict)
    audits: Dict[int, LabelAudit] = field(default_factory=dict)
    logs: Dict[int, TrainingLog] = field(default_factory=dict)
    finetune_logs: Dict[int, TrainingLog] = field(default_factory=dict)
    selections: Dict[Tuple[int, str], pd.DataFrame] = field(default_factory=dict)
    seen_train: List[Scene] = field(default_factory=list)
    stage_results: Dict[int, Dict[str, dict]] = field(default_factory=dict)

    @property
    def next_task(self) -> int:
        return len(self.completed) + 1

    def audit_for(self, task_id: int, known: List[int]) -> LabelAudit:
        if task_id not in self.audits:
            self.audits[task_id] = LabelAudit(allowed=known)
        return self.audits[task_id]

    @property
    def label_violations(self) -> int:
        return sum(a.violation_count for a in self.audits.values())
