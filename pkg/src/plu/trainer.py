"""
PLU 자기학습 (FixMatch) 손실 및 학습 루프

역할:
- plu_losses: L_T (약한 뷰 의사 라벨 → 강한 뷰 CE), L_S (소스 CE), L_uda = L_T + λ·L_S
- train_plu: 시드 셔플 씬 순회 → 도메인 구성 → 미니배치 SGD
- TrainingLog: 스텝별 손실/마스크 비율 기록 (CSV)

증강 시드는 (시드, 씬 ID, 제안 인덱스, 에폭)에서 파생되어
마스킹된 샘플을 빼도 나머지 샘플의 증강이 바뀌지 않는다.
"""
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from ..common.config import PluConfig
from ..common.errors import DataError, InvalidInputError, NumericalError
from ..common.rng import (
    STREAM_DOMAIN, STREAM_ORDER, STREAM_STRONG, STREAM_WEAK, as_generator, derive_seed,
)
from ..world.geometry import match_proposals
from ..world.scene import Scene
from .domains import DomainBatch, form_domains, pseudo_labels
from .label_audit import LabelAudit
from .predictor import Gradients, OptimState, Predictor, sgd_step, strong_augment, weak_augment

logger = logging.getLogger(__name__)

LOG_COLUMNS = ['step', 'L_T', 'L_S', 'L_uda', 'mask_rate', 'fg_pseudo_fraction']


@dataclass
class LossStats:
    """손실 계산 부가 통계"""
    n_source: int = 0
    n_target: int = 0
    n_unmasked: int = 0
    n_fg_pseudo: int = 0

    @property
    def mask_rate(self) -> float:
        """의사 라벨이 붙은 타깃 비율"""
        return self.n_unmasked / self.n_target if self.n_target else 0.0

    @property
    def fg_pseudo_fraction(self) -> float:
        """의사 라벨 중 FG 비율"""
        return self.n_fg_pseudo / self.n_unmasked if self.n_unmasked else 0.0


class PluLosses(NamedTuple):
    L_T: float
    L_S: float
    L_uda: float
    stats: LossStats


def _as_batches(batch: Union[DomainBatch, Sequence[DomainBatch]]) -> List[DomainBatch]:
    return [batch] if isinstance(batch, DomainBatch) else list(batch)


def augmented_views(
    batches: Sequence[DomainBatch],
    cfg: PluConfig,
    seed: int,
    epoch: int = 0,
) -> Tuple[np.ndarray, np.ndarray]:
    """타깃 샘플별 (약한 뷰, 강한 뷰) 행렬"""
    weak, strong = [], []
    for b in batches:
        for x, idx in zip(b.target_features, b.target_indices):
            weak.append(weak_augment(x, derive_seed(seed, STREAM_WEAK, b.scene_id, int(idx), epoch), cfg.weak_sigma))
            strong.append(strong_augment(x, derive_seed(seed, STREAM_STRONG, b.scene_id, int(idx), epoch),
                                         cfg.strong_sigma, cfg.p_drop))
    if not weak:
        return np.zeros((0, 0)), np.zeros((0, 0))
    return np.vstack(weak), np.vstack(strong)


def plu_gradients(
    predictor: Predictor,
    batch: Union[DomainBatch, Sequence[DomainBatch]],
    cfg: PluConfig,
    seed: int,
    epoch: int = 0,
    source_only: bool = False,
) -> Tuple[PluLosses, Gradients]:
    """UDA 손실과 그래디언트

    Args:
        predictor: φ
        batch: DomainBatch 또는 그 목록 (미니배치)
        cfg: PLU 설정 (epsilon, lambda, target_norm, 증강 강도)
        seed: 증강 시드
        epoch: 에폭 (증강 시드 파생용)
        source_only: True면 L_T를 끄고 λ·L_S만 사용 (미세조정)

    Returns:
        (PluLosses, Gradients of L_uda)

    다른 UDA 손실 (예: CST류 자기학습) 교체 지점:
        타깃 블록(약한 뷰 → pseudo_labels → 강한 뷰 backward)이 (loss_t, grad_t)를
        만드는 유일한 곳이다. 대체 손실은 같은 DomainBatch 목록과 predictor를 받아
        (스칼라 손실, Gradients)를 돌려주면 되고, 결합식 L_uda = loss_t + λ·L_S와
        stats 갱신(n_unmasked, n_fg_pseudo)은 그대로 유지한다. train_plu와
        TrainingLog는 PluLosses만 읽으므로 바꿀 필요가 없다.
    """
    batches = _as_batches(batch)
    src_x = [b.source_features for b in batches if b.n_source]
    n_source = int(sum(b.n_source for b in batches))
    n_target = 0 if source_only else int(sum(b.n_target for b in batches))
    if n_source == 0 and n_target == 0:
        raise InvalidInputError("소스와 타깃이 모두 비어 있습니다")

    stats = LossStats(n_source=n_source, n_target=n_target)

    # 소스: L_S
    if n_source:
        src_y = np.concatenate([b.source_labels for b in batches if b.n_source])
        loss_s, grad_s = predictor.backward(np.vstack(src_x), src_y)
    else:
        loss_s, grad_s = 0.0, Gradients.zeros_like(predictor)

    if source_only:
        return PluLosses(0.0, loss_s, cfg.lambda_ * loss_s, stats), grad_s.scaled(cfg.lambda_)

    # 타깃: 약한 뷰 → 의사 라벨, 강한 뷰 → CE (대체 UDA 손실은 이 블록을 바꾼다)
    loss_t, grad_t = 0.0, Gradients.zeros_like(predictor)
    if n_target:
        weak, strong = augmented_views(batches, cfg, seed, epoch)
        labels, mask = pseudo_labels(predictor.forward(weak), cfg.epsilon)
        stats.n_unmasked = int(mask.sum())
        stats.n_fg_pseudo = int(np.sum(labels[mask] == 1))
        if stats.n_unmasked:
            loss_t, grad_t = predictor.backward(strong, labels, mask.astype(np.float64))
            if cfg.target_norm == 'all':
                scale = stats.n_unmasked / n_target
                loss_t, grad_t = loss_t * scale, grad_t.scaled(scale)

    loss_uda = loss_t + cfg.lambda_ * loss_s
    return PluLosses(loss_t, loss_s, loss_uda, stats), grad_t + grad_s.scaled(cfg.lambda_)


def plu_losses(
    predictor: Predictor,
    batch: Union[DomainBatch, Sequence[DomainBatch]],
    cfg: PluConfig,
    seed: int,
    epoch: int = 0,
) -> PluLosses:
    """(L_T, L_S, L_uda, stats)"""
    return plu_gradients(predictor, batch, cfg, seed, epoch)[0]


@dataclass
class TrainingLog:
    """스텝별 학습 기록"""
    rows: List[Dict[str, Any]] = field(default_factory=list)
    samples_consumed: int = 0
    skipped_scenes: int = 0

    def append(self, step: int, losses: PluLosses) -> None:
        self.rows.append({
            'step': step,
            'L_T': losses.L_T,
            'L_S': losses.L_S,
            'L_uda': losses.L_uda,
            'mask_rate': losses.stats.mask_rate,
            'fg_pseudo_fraction': losses.stats.fg_pseudo_fraction,
        })

    def __len__(self) -> int:
        return len(self.rows)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows, columns=LOG_COLUMNS)

    def save_csv(self, path: Union[str, Path]) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path, index=False)


def _consumed(losses: PluLosses, mode: str) -> int:
    if mode == 'source':
        return losses.stats.n_source
    if mode == 'target':
        return losses.stats.n_target
    return losses.stats.n_source + losses.stats.n_target


def train_plu(
    predictor: Predictor,
    scenes: Sequence[Scene],
    cfg: PluConfig,
    seed: int,
    audit: Optional[LabelAudit] = None,
    train_samples: Optional[int] = None,
    source_only: bool = False,
    opt: Optional[OptimState] = None,
) -> Tuple[Predictor, TrainingLog]:
    """PLU 학습 루프

    씬 셔플 순서로 DomainBatch를 만들고 batch_size개씩 모아 SGD 1스텝.
    소비한 샘플 수(sample_count 기준)가 train_samples에 도달하면 종료.

    Args:
        predictor: φ (제자리 갱신)
        scenes: 학습 씬
        cfg: PLU 설정
        seed: 시드 (씬 순서, 타깃 추출, 증강)
        audit: 주석 읽기 감사
        train_samples: 샘플 예산 (기본 cfg.train_samples)
        source_only: L_S만 학습 (미세조정 단계)
        opt: 이어서 쓸 옵티마이저 상태

    Returns:
        (φ, TrainingLog)
    """
    budget = cfg.train_samples if train_samples is None else train_samples
    log = TrainingLog()
    if budget <= 0:
        return predictor, log
    if not scenes:
        raise DataError("학습 씬이 비어 있습니다")

    opt = opt or OptimState.for_predictor(predictor, cfg.lr, cfg.momentum)
    count_mode = 'source' if source_only else cfg.sample_count

    partitions = []
    for scene in scenes:
        gt = audit.read_gt(scene) if audit is not None else scene.gt
        partitions.append(match_proposals(scene.proposal_boxes, [g.box for g in gt], cfg.iou_threshold))

    step = 0
    epoch = 0
    while log.samples_consumed < budget:
        order = as_generator(derive_seed(seed, STREAM_ORDER, epoch)).permutation(len(scenes))
        pending: List[DomainBatch] = []
        consumed_before = log.samples_consumed

        def _step(batches: List[DomainBatch]) -> None:
            nonlocal step
            losses, grads = plu_gradients(predictor, batches, cfg, seed, epoch, source_only)
            if not np.isfinite(losses.L_uda):
                raise NumericalError(f"손실 발산 (step={step}, L_uda={losses.L_uda})", step=step)
            sgd_step(predictor, grads, opt, step=step)
            log.append(step, losses)
            log.samples_consumed += _consumed(losses, count_mode)
            logger.debug(
                f"step={step} L_T={losses.L_T:.4f} L_S={losses.L_S:.4f} "
                f"L_uda={losses.L_uda:.4f} mask={losses.stats.mask_rate:.3f}"
            )
            step += 1

        for idx in order:
            scene = scenes[idx]
            batch = form_domains(
                scene, partitions[idx], cfg,
                seed=derive_seed(seed, STREAM_DOMAIN, scene.scene_id, epoch),
                audit=audit,
            )
            if batch.is_empty:
                if epoch == 0:
                    log.skipped_scenes += 1
                continue
            pending.append(batch)
            if len(pending) == cfg.batch_size:
                _step(pending)
                pending = []
                if log.samples_consumed >= budget:
                    break

        if pending and log.samples_consumed < budget:
            _step(pending)

        if log.samples_consumed == consumed_before:
            raise DataError("학습 가능한 샘플이 없습니다 (모든 씬에 GT 또는 타깃이 없음)")
        epoch += 1

    logger.info(
        f"PLU 학습 완료: {step}스텝, {epoch}에폭, 샘플 {log.samples_consumed}개"
        f"{' (소스 전용)' if source_only else ''}, GT 없는 씬 {log.skipped_scenes}개 건너뜀"
    )
    return predictor, log
