"""
주석 읽기 감사 (라벨 위생)

학습 경로가 GT를 읽을 때마다 클래스별로 기록한다.
허용 집합(K^t) 밖의 클래스를 읽으면 위반으로 집계된다.
"""
import logging
import threading
from collections import Counter
from typing import Any, Dict, Iterable, List, Optional

logger = logging.getLogger(__name__)


class LabelAudit:
    """클래스별 주석 읽기 카운터

    Args:
        allowed: 읽기가 허용된 클래스 ID (None이면 검사 없이 집계만)
    """

    def __init__(self, allowed: Optional[Iterable[int]] = None):
        self.allowed = None if allowed is None else frozenset(int(c) for c in allowed)
        self.reads: Counter = Counter()
        self.violations: Counter = Counter()
        self._lock = threading.Lock()

    def record(self, class_id: int) -> None:
        with self._lock:
            self.reads[int(class_id)] += 1
            if self.allowed is not None and int(class_id) not in self.allowed:
                self.violations[int(class_id)] += 1
                logger.warning(f"허용되지 않은 클래스 주석 읽기: {class_id}")

    def read_gt(self, scene) -> List:
        """씬의 GT 목록을 기록하며 반환"""
        for g in scene.gt:
            self.record(g.class_id)
        return list(scene.gt)

    @property
    def violation_count(self) -> int:
        return int(sum(self.violations.values()))

    def to_dict(self) -> Dict[str, Any]:
        return {
            'allowed': sorted(self.allowed) if self.allowed is not None else None,
            'reads': {str(k): v for k, v in sorted(self.reads.items())},
            'violations': {str(k): v for k, v in sorted(self.violations.items())},
            'violation_count': self.violation_count,
        }
