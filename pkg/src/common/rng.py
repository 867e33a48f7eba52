"""
시드 파생 유틸리티

모든 난수는 설정 시드에서 파생된다 (벽시계/OS 엔트로피 사용 안 함).
씬/제안/에폭 단위 시드는 SeedSequence로 (전역 시드, 키...) 조합에서 만든다.
"""
from typing import Union

import numpy as np

SeedLike = Union[int, np.random.Generator]

# 파생 스트림 구분용 태그
STREAM_ORDER = 1
STREAM_DOMAIN = 2
STREAM_WEAK = 3
STREAM_STRONG = 4
STREAM_DETECTOR = 5
STREAM_FINETUNE = 6
STREAM_SCENE = 7
STREAM_OBJECTNESS = 8
STREAM_PREDICTOR = 9


def derive_seed(*keys: int) -> int:
    """정수 키 조합에서 결정적 64비트 시드 생성"""
    entropy = [int(k) & 0xFFFFFFFFFFFFFFFF for k in keys]
    return int(np.random.SeedSequence(entropy).generate_state(1, dtype=np.uint64)[0])


def as_generator(seed: SeedLike) -> np.random.Generator:
    """정수 시드 또는 Generator를 Generator로 통일"""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(int(seed))
