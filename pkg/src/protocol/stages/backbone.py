"""
1단계: 백본 사전학습

특징은 생성기가 직접 주므로 학습할 백본이 없다.
학습 절차의 단계 구조를 로그에 남기기 위한 no-op 스테이지.
"""
from typing import Any, Dict

from .base import BaseStage


class BackboneStage(BaseStage):
    """백본 사전학습 (no-op)"""

    STAGE_NAME = 'BackboneStage'

    def process(self) -> Dict[str, Any]:
        self.logger.info(f"Task {self.task.task_id} 1단계 백본 사전학습: 생성기 특징 사용, 건너뜀")
        return {
            'status': 'skipped',
            'reason': 'features are generator-given',
        }
