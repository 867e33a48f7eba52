"""
합성 제안 세계 생성기

실제 검출기의 제안 스트림을 대신하는 데스크 규모 생성기:
- 클래스 프로토타입 (기지: 단위 구면, 미지: 가장 가까운 기지 프로토타입에서 shift 거리)
- 씬: 기지/미지 객체 배치, 기지 클래스만 주석
- 제안: 객체당 2~4개 지터 복사본 + 배경 박스
- objectness: 기지 프로토타입과의 코사인 유사도 기반 (편향된 점수)

모든 출력은 (파라미터, 시드)의 순수 함수다.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from ..common.config import SceneConfig
from ..common.errors import ConfigError, InvalidInputError
from ..common.rng import STREAM_SCENE, SeedLike, as_generator, derive_seed
from .geometry import BBox, boxes_to_array, pairwise_iou
from .scene import ClassRole, ClassSpec, GroundTruth, Proposal, ProposalTruth, Scene, TruthKind

logger = logging.getLogger(__name__)

# 미지 프로토타입 배치 재시도 횟수 (모든 기지 프로토타입과 shift_range 최소 거리 이상)
MAX_PLACEMENT_TRIES = 32
# 배경 박스 거절 샘플링 횟수
MAX_BG_TRIES = 50
# 객체/배경 박스 크기 범위 (정규화 좌표)
OBJECT_SIZE_RANGE = (0.08, 0.35)
BG_SIZE_RANGE = (0.05, 0.5)
MIN_BOX_SIZE = 1e-3


def generate_world(
    n_known: int,
    n_unknown: int,
    d: int,
    shift_range: Tuple[float, float],
    seed: int,
    spread: float = 0.2,
) -> List[ClassSpec]:
    """클래스 프로토타입 생성

    Args:
        n_known: 기지(주석 대상) 클래스 수 (≥1)
        n_unknown: 미지(비주석) 클래스 수 (≥0)
        d: 특징 차원 (≥2)
        shift_range: 미지 프로토타입의 기지 프로토타입 대비 거리 범위
        seed: 시드
        spread: 클래스 내 특징 표준편차

    Returns:
        ClassSpec 리스트 (기지 0..n_known-1, 미지 n_known..)
    """
    lo, hi = float(shift_range[0]), float(shift_range[1])
    if lo > hi:
        raise ConfigError(f"shift_range 최소값이 최대값보다 큽니다: {shift_range}")
    if lo < 0:
        raise ConfigError(f"shift_range는 0 이상이어야 합니다: {shift_range}")
    if n_known < 1 or n_unknown < 0 or d < 2:
        raise ConfigError(f"잘못된 세계 크기: n_known={n_known}, n_unknown={n_unknown}, d={d}")
    if not spread > 0:
        raise ConfigError(f"spread는 양수여야 합니다: {spread}")

    rng = np.random.default_rng(seed)
    known = rng.standard_normal((n_known, d))
    known /= np.linalg.norm(known, axis=1, keepdims=True)

    specs = [
        ClassSpec(class_id=i, role=ClassRole.KNOWN, prototype=known[i].copy(), spread=spread, shift=0.0)
        for i in range(n_known)
    ]

    for j in range(n_unknown):
        s = rng.uniform(lo, hi)
        anchor = int(rng.integers(n_known))
        p = known[anchor]
        best_u, best_shift, placed = None, -1.0, False
        for attempt in range(MAX_PLACEMENT_TRIES):
            if attempt:
                s = rng.uniform(lo, hi)
            v = rng.standard_normal(d)
            v -= v.dot(p) * p
            v /= np.linalg.norm(v)
            u = p + s * v
            shift = float(np.linalg.norm(known - u, axis=1).min())
            if shift > best_shift:
                best_u, best_shift = u, shift
            if shift >= lo:
                best_u, best_shift, placed = u, shift, True
                break
        if not placed:
            logger.warning(
                f"미지 클래스 {n_known + j} 배치 실패 ({MAX_PLACEMENT_TRIES}회): "
                f"가장 가까운 기지 거리 {best_shift:.3f} < shift_range 최소 {lo:.3f}"
            )
        specs.append(ClassSpec(
            class_id=n_known + j,
            role=ClassRole.UNKNOWN,
            prototype=best_u,
            spread=spread,
            shift=best_shift,
        ))

    logger.debug(f"세계 생성: 기지={n_known}, 미지={n_unknown}, d={d}, shift={shift_range}")
    return specs


def prototypes_of(world: Sequence[ClassSpec], class_ids: Iterable[int]) -> np.ndarray:
    """지정 클래스의 프로토타입 행렬 (class_id 오름차순)"""
    by_id = {c.class_id: c for c in world}
    ids = sorted(set(class_ids))
    missing = [i for i in ids if i not in by_id]
    if missing:
        raise InvalidInputError(f"세계에 없는 클래스: {missing}")
    if not ids:
        return np.zeros((0, len(world[0].prototype) if world else 0))
    return np.stack([by_id[i].prototype for i in ids])


def squash(value: float, noise: float) -> float:
    """[-1-3σ, 1+3σ] → [0,1] 아핀 변환 (클램프)"""
    lo = -1.0 - 3.0 * noise
    hi = 1.0 + 3.0 * noise
    return float(min(1.0, max(0.0, (value - lo) / (hi - lo))))


def max_cosine(features: np.ndarray, prototypes: np.ndarray) -> np.ndarray:
    """각 특징의 프로토타입 최대 코사인 유사도 (영벡터는 0)"""
    features = np.atleast_2d(features)
    f_norm = np.linalg.norm(features, axis=1)
    p_norm = np.linalg.norm(prototypes, axis=1)
    dots = features @ prototypes.T
    with np.errstate(divide='ignore', invalid='ignore'):
        cos = dots / (f_norm[:, None] * p_norm[None, :])
    cos = np.where(f_norm[:, None] > 0, cos, 0.0)
    return cos.max(axis=1)


def biased_objectness(
    feature: np.ndarray,
    known_prototypes: np.ndarray,
    noise: float,
    seed: SeedLike,
) -> float:
    """기지 클래스 외형에 편향된 objectness 점수

    squash(max_k cos(feature, prototype_k) + N(0, noise²))
    """
    known_prototypes = np.atleast_2d(known_prototypes)
    if known_prototypes.shape[0] == 0:
        raise InvalidInputError("기지 프로토타입이 비어 있습니다")
    similarity = float(max_cosine(feature, known_prototypes)[0])
    rng = as_generator(seed)
    return squash(similarity + rng.normal(0.0, noise), noise)


def _sample_box(rng: np.random.Generator, size_range: Tuple[float, float]) -> BBox:
    w = rng.uniform(*size_range)
    h = rng.uniform(*size_range)
    x1 = rng.uniform(0.0, 1.0 - w)
    y1 = rng.uniform(0.0, 1.0 - h)
    return BBox(x1, y1, min(1.0, x1 + w), min(1.0, y1 + h))


def _jitter_box(box: BBox, jitter: float, rng: np.random.Generator) -> BBox:
    """코너 균등 지터 (박스 크기 대비 비율)"""
    if jitter == 0:
        return box
    w, h = box.width, box.height
    dx1, dx2 = rng.uniform(-jitter, jitter, 2) * w
    dy1, dy2 = rng.uniform(-jitter, jitter, 2) * h
    x1 = min(1.0, max(0.0, box.x1 + dx1))
    x2 = min(1.0, max(0.0, box.x2 + dx2))
    y1 = min(1.0, max(0.0, box.y1 + dy1))
    y2 = min(1.0, max(0.0, box.y2 + dy2))
    if x2 - x1 < MIN_BOX_SIZE or y2 - y1 < MIN_BOX_SIZE:
        return box
    return BBox(x1, y1, x2, y2)


def _sample_background_box(rng: np.random.Generator, object_boxes: np.ndarray, threshold: float = 0.5) -> BBox:
    """모든 객체와 IoU < threshold 인 배경 박스 (거절 샘플링)"""
    box = _sample_box(rng, BG_SIZE_RANGE)
    for _ in range(MAX_BG_TRIES - 1):
        if object_boxes.shape[0] == 0:
            break
        overlaps = pairwise_iou(boxes_to_array([box]), object_boxes)
        if overlaps.max() < threshold:
            break
        box = _sample_box(rng, BG_SIZE_RANGE)
    return box


def generate_scene(
    world: Sequence[ClassSpec],
    known_ids: Iterable[int],
    params: Optional[SceneConfig] = None,
    seed: SeedLike = 0,
    scene_id: int = 0,
    known_pool: Optional[Sequence[int]] = None,
    unknown_pool: Optional[Sequence[int]] = None,
    previous_pool: Optional[Sequence[int]] = None,
    previous_rate: float = 0.0,
) -> Scene:
    """씬 1장 생성

    Args:
        world: 클래스 명세
        known_ids: 현재 기지 클래스 (주석 대상, objectness 기준)
        params: 씬 생성 파라미터 (객체 수, 배경 제안 수, 지터 등)
        seed: 시드
        scene_id: 씬 ID
        known_pool: 기지 객체로 뽑을 클래스 (기본: known_ids)
        unknown_pool: 미지 객체로 뽑을 클래스 (기본: 세계 - known_ids)
        previous_pool: 이전 태스크 클래스 (기지 객체 중 previous_rate 확률로 사용)
        previous_rate: 이전 태스크 클래스 출현 확률

    Returns:
        Scene (gt에는 known_ids 클래스만 포함)
    """
    params = params or SceneConfig()
    rng = as_generator(seed)
    by_id = {c.class_id: c for c in world}
    known = sorted(set(known_ids))
    unknown_set = [c.class_id for c in world if c.class_id not in set(known)]
    if any(k not in by_id for k in known):
        raise InvalidInputError(f"known_ids가 세계에 없는 클래스를 포함합니다: {known}")

    k_pool = sorted(known_pool) if known_pool is not None else known
    u_pool = sorted(unknown_pool) if unknown_pool is not None else unknown_set
    p_pool = sorted(previous_pool) if previous_pool else []
    known_prototypes = prototypes_of(world, known)

    # 1. 객체 배치
    n_objects = int(rng.integers(params.objects_min, params.objects_max + 1))
    objects: List[GroundTruth] = []
    for _ in range(n_objects):
        if k_pool and u_pool:
            pool = u_pool if rng.random() < params.unknown_object_rate else k_pool
            if pool is k_pool and p_pool and rng.random() < previous_rate:
                pool = p_pool
        else:
            pool = k_pool or u_pool
        if not pool:
            break
        class_id = int(pool[int(rng.integers(len(pool)))])
        objects.append(GroundTruth(class_id=class_id, box=_sample_box(rng, OBJECT_SIZE_RANGE)))

    # 2. 객체 제안 (지터 복사본)
    raw: List[Tuple[BBox, np.ndarray, ProposalTruth]] = []
    for obj_idx, obj in enumerate(objects):
        spec = by_id[obj.class_id]
        copies = int(rng.integers(params.copies_min, params.copies_max + 1))
        for _ in range(copies):
            box = _jitter_box(obj.box, params.jitter, rng)
            feature = rng.normal(spec.prototype, spec.spread)
            raw.append((box, feature, ProposalTruth(TruthKind.FOREGROUND, obj.class_id, obj_idx)))

    # 3. 배경 제안
    object_boxes = boxes_to_array([o.box for o in objects])
    d = known_prototypes.shape[1] if known_prototypes.size else len(world[0].prototype)
    for _ in range(params.n_bg_proposals):
        box = _sample_background_box(rng, object_boxes)
        feature = rng.normal(0.0, params.sigma_bg, d)
        raw.append((box, feature, ProposalTruth.background()))

    # 4. 순서 섞기 + objectness
    order = rng.permutation(len(raw))
    proposals: List[Proposal] = []
    for idx in order:
        box, feature, truth = raw[idx]
        if known_prototypes.shape[0]:
            score = biased_objectness(feature, known_prototypes, params.objectness_noise,
                                      int(rng.integers(2**32)))
        else:
            score = squash(float(rng.normal(0.0, params.objectness_noise)), params.objectness_noise)
        proposals.append(Proposal(box=box, feature=feature, objectness=score, truth=truth))

    known_set = set(known)
    gt = [o for o in objects if o.class_id in known_set]
    return Scene(scene_id=scene_id, gt=gt, proposals=proposals, objects=objects)


def generate_scenes(
    world: Sequence[ClassSpec],
    known_ids: Iterable[int],
    params: SceneConfig,
    n_scenes: int,
    seed: int,
    first_scene_id: int = 0,
    known_pool: Optional[Sequence[int]] = None,
    unknown_pool: Optional[Sequence[int]] = None,
    previous_pool: Optional[Sequence[int]] = None,
    previous_rate: float = 0.0,
    workers: int = 1,
) -> List[Scene]:
    """씬 여러 장 생성 (씬별 파생 시드, 병렬 가능)

    씬마다 독립 시드 (seed, scene_id)를 사용하므로 workers 수와 무관하게 결과가 같다.
    """
    known = sorted(set(known_ids))
    scene_ids = list(range(first_scene_id, first_scene_id + n_scenes))

    def _one(scene_id: int) -> Scene:
        return generate_scene(
            world, known, params,
            seed=derive_seed(seed, STREAM_SCENE, scene_id),
            scene_id=scene_id,
            known_pool=known_pool,
            unknown_pool=unknown_pool,
            previous_pool=previous_pool,
            previous_rate=previous_rate,
        )

    if workers <= 1 or n_scenes < 2:
        return [_one(sid) for sid in scene_ids]

    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(_one, scene_ids))
