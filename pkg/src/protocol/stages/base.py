"""
기본 스테이지 클래스
모든 학습 절차 스테이지의 기반 클래스

공통 기능:
- 실행 상태(RunState), 태스크 분할, 태스크 데이터 수신
- 태스크별 파생 시드
- 스테이지 이름 기반 로거
"""
import logging
from abc import ABC, abstractmethod
from typing import Any, Dict

from ...common.rng import derive_seed
from ..state import RunState, TaskData
from ..tasks import TaskSplit

logger = logging.getLogger(__name__)


class BaseStage(ABC):
    """학습 절차 스테이지 기본 클래스"""

    # 서브클래스에서 정의할 스테이지 이름
    STAGE_NAME: str = 'BaseStage'

    def __init__(self, state: RunState, task: TaskSplit, data: TaskData):
        """
        Args:
            state: 프로토콜 실행 상태 (스테이지가 갱신)
            task: 현재 태스크 분할
            data: 현재 태스크 학습/평가 씬
        """
        self.state = state
        self.task = task
        self.data = data
        self.config = state.config
        self.logger = logging.getLogger(f"{__name__}.{self.STAGE_NAME}")

    @abstractmethod
    def process(self) -> Dict[str, Any]:
        """스테이지 실행

        Returns:
            처리 결과 딕셔너리 (status 포함)
        """

    def task_seed(self, *keys: int) -> int:
        """(실행 시드, 태스크, 키...) 파생 시드"""
        return derive_seed(self.state.seed, self.task.task_id, *keys)

    @property
    def audit(self):
        """이번 태스크 라벨 위생 감사 (허용 = K^t)"""
        return self.state.audit_for(self.task.task_id, self.task.known)
