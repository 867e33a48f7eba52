# PLU 모듈: 예측기, 도메인 구성, 자기학습, 선택기, 기지 검출 헤드
from .predictor import (
    Predictor, Gradients, OptimState, init_predictor, sgd_step,
    weak_augment, strong_augment, save_checkpoint, load_checkpoint, FG_INDEX, BG_INDEX,
)
from .label_audit import LabelAudit
from .domains import DomainBatch, form_domains, pseudo_label, pseudo_labels
from .trainer import PluLosses, LossStats, TrainingLog, plu_losses, plu_gradients, train_plu
from .selection import UnknownSelection, OracleScorer, topk_select, plu_select, resolve_k, selections_to_frame
from .detector import KnownHead

__all__ = [
    'Predictor', 'Gradients', 'OptimState', 'init_predictor', 'sgd_step',
    'weak_augment', 'strong_augment', 'save_checkpoint', 'load_checkpoint', 'FG_INDEX', 'BG_INDEX',
    'LabelAudit',
    'DomainBatch', 'form_domains', 'pseudo_label', 'pseudo_labels',
    'PluLosses', 'LossStats', 'TrainingLog', 'plu_losses', 'plu_gradients', 'train_plu',
    'UnknownSelection', 'OracleScorer', 'topk_select', 'plu_select', 'resolve_k', 'selections_to_frame',
    'KnownHead',
]
