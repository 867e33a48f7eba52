# 학습 절차 스테이지
from .base import BaseStage
from .backbone import BackboneStage
from .train import TrainStage
from .finetune import FinetuneStage, finetune, select_exemplars
from .evaluate import EvaluateStage, SELECTORS, evaluate_selector, select_unknowns

__all__ = [
    'BaseStage',
    'BackboneStage',
    'TrainStage',
    'FinetuneStage', 'finetune', 'select_exemplars',
    'EvaluateStage', 'SELECTORS', 'evaluate_selector', 'select_unknowns',
]
