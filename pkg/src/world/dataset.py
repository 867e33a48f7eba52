"""
데이터셋 파일 입출력 (JSONL)

형식:
- 1행: 헤더 객체 (schema_version, d, classes, seed, params, known_ids, mean_unknown_objects)
- 2행~: 씬 객체 1개씩

float는 repr 기반 JSON 직렬화로 왕복 시 비트 동일하다.
"""
import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence, Union

import numpy as np

from ..common.errors import DataError, DatasetParseError, InvalidInputError, SchemaError
from .geometry import BBox
from .scene import ClassRole, ClassSpec, GroundTruth, Proposal, ProposalTruth, Scene, TruthKind

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1


@dataclass
class DatasetHeader:
    """데이터셋 헤더"""
    d: int
    classes: List[ClassSpec] = field(default_factory=list)
    seed: int = 0
    params: Dict[str, Any] = field(default_factory=dict)
    known_ids: List[int] = field(default_factory=list)
    mean_unknown_objects: float = 0.0
    schema_version: int = SCHEMA_VERSION

    def to_dict(self) -> Dict[str, Any]:
        return {
            'type': 'header',
            'schema_version': self.schema_version,
            'd': self.d,
            'seed': self.seed,
            'params': self.params,
            'known_ids': list(self.known_ids),
            'mean_unknown_objects': self.mean_unknown_objects,
            'classes': [c.to_dict() for c in self.classes],
        }


@dataclass
class DatasetFile:
    """헤더 + 씬 목록"""
    header: DatasetHeader
    scenes: List[Scene] = field(default_factory=list)


def mean_unknown_count(scenes: Sequence[Scene], known_ids: Iterable[int]) -> float:
    """씬당 평균 미지 객체 수 (top-k의 기본 k)"""
    if not scenes:
        return 0.0
    known = list(known_ids)
    return float(np.mean([len(s.unknown_objects(known)) for s in scenes]))


# ========================================
# 직렬화
# ========================================

def _gt_to_list(items: Sequence[GroundTruth]) -> List[List[Any]]:
    return [[g.class_id, list(g.box.as_tuple())] for g in items]


def scene_to_dict(scene: Scene) -> Dict[str, Any]:
    """Scene → JSON 직렬화 가능한 딕셔너리"""
    return {
        'scene_id': scene.scene_id,
        'gt': _gt_to_list(scene.gt),
        'objects': _gt_to_list(scene.objects),
        'proposals': [
            {
                'box': list(p.box.as_tuple()),
                'feature': [float(v) for v in p.feature],
                'objectness': float(p.objectness),
                'truth': {
                    'kind': p.truth.kind.value,
                    'class_id': p.truth.class_id,
                    'object_index': p.truth.object_index,
                },
            }
            for p in scene.proposals
        ],
    }


def _gt_from_list(items: Sequence[Any]) -> List[GroundTruth]:
    return [GroundTruth(class_id=int(cid), box=BBox.from_sequence(box)) for cid, box in items]


def scene_from_dict(data: Dict[str, Any]) -> Scene:
    """딕셔너리 → Scene (박스/objectness 범위 검증 포함)"""
    proposals = []
    for p in data['proposals']:
        feature = np.asarray(p['feature'], dtype=np.float64)
        if not np.all(np.isfinite(feature)):
            raise InvalidInputError("특징에 유한하지 않은 값이 있습니다")
        objectness = float(p['objectness'])
        if not 0.0 <= objectness <= 1.0:
            raise InvalidInputError(f"objectness 범위 오류: {objectness}")
        truth = p['truth']
        proposals.append(Proposal(
            box=BBox.from_sequence(p['box']),
            feature=feature,
            objectness=objectness,
            truth=ProposalTruth(TruthKind(truth['kind']), truth.get('class_id'), truth.get('object_index')),
        ))
    return Scene(
        scene_id=int(data['scene_id']),
        gt=_gt_from_list(data['gt']),
        proposals=proposals,
        objects=_gt_from_list(data.get('objects', [])),
    )


def _header_from_dict(data: Dict[str, Any]) -> DatasetHeader:
    classes = [
        ClassSpec(
            class_id=int(c['class_id']),
            role=ClassRole(c['role']),
            prototype=np.asarray(c['prototype'], dtype=np.float64),
            spread=float(c['spread']),
            shift=float(c['shift']),
        )
        for c in data.get('classes', [])
    ]
    return DatasetHeader(
        d=int(data['d']),
        classes=classes,
        seed=int(data.get('seed', 0)),
        params=dict(data.get('params', {})),
        known_ids=[int(k) for k in data.get('known_ids', [])],
        mean_unknown_objects=float(data.get('mean_unknown_objects', 0.0)),
        schema_version=int(data['schema_version']),
    )


# ========================================
# 파일 입출력
# ========================================

def save_dataset(scenes: Sequence[Scene], path: Union[str, Path], header: DatasetHeader) -> str:
    """데이터셋 저장

    Args:
        scenes: 씬 목록
        path: 출력 경로 (.jsonl)
        header: 헤더 (d는 모든 씬의 특징 차원과 같아야 함)

    Returns:
        파일 SHA-256 (매니페스트 기록용)
    """
    path = Path(path)
    for scene in scenes:
        if scene.proposals and scene.features.shape[1] != header.d:
            raise SchemaError(
                f"씬 {scene.scene_id} 특징 차원 {scene.features.shape[1]} != 헤더 d={header.d}"
            )

    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        f.write(json.dumps(header.to_dict(), sort_keys=True) + '\n')
        for scene in scenes:
            f.write(json.dumps(scene_to_dict(scene), sort_keys=True) + '\n')

    logger.info(f"데이터셋 저장: {path} ({len(scenes)}개 씬)")
    return file_sha256(path)


def load_dataset(path: Union[str, Path]) -> DatasetFile:
    """데이터셋 로드

    Raises:
        DataError: 파일 없음
        DatasetParseError: 잘못된 라인 (1부터 시작하는 라인 번호 포함)
        SchemaError: schema_version 또는 특징 차원 불일치
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"데이터셋 파일이 없습니다: {path}")

    with open(path, 'r', encoding='utf-8') as f:
        lines = f.read().splitlines()

    if not lines or not lines[0].strip():
        raise DatasetParseError(str(path), 1, "헤더가 없습니다")

    try:
        raw_header = json.loads(lines[0])
    except json.JSONDecodeError as e:
        raise DatasetParseError(str(path), 1, f"JSON 파싱 실패: {e}") from e
    if not isinstance(raw_header, dict) or raw_header.get('type') != 'header':
        raise DatasetParseError(str(path), 1, "첫 행이 헤더 객체가 아닙니다")
    if raw_header.get('schema_version') != SCHEMA_VERSION:
        raise SchemaError(
            f"지원하지 않는 schema_version: {raw_header.get('schema_version')} (기대값 {SCHEMA_VERSION})"
        )
    try:
        header = _header_from_dict(raw_header)
    except (KeyError, TypeError, ValueError) as e:
        raise DatasetParseError(str(path), 1, f"헤더 필드 오류: {e}") from e

    scenes: List[Scene] = []
    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            scene = scene_from_dict(json.loads(line))
        except json.JSONDecodeError as e:
            raise DatasetParseError(str(path), line_no, f"JSON 파싱 실패: {e}") from e
        except (KeyError, TypeError, ValueError) as e:
            raise DatasetParseError(str(path), line_no, f"레코드 필드 오류: {e}") from e
        if scene.proposals and scene.features.shape[1] != header.d:
            raise SchemaError(
                f"{path}:{line_no}: 특징 차원 {scene.features.shape[1]} != 헤더 d={header.d}"
            )
        scenes.append(scene)

    logger.debug(f"데이터셋 로드: {path} ({len(scenes)}개 씬)")
    return DatasetFile(header=header, scenes=scenes)


def file_sha256(path: Union[str, Path]) -> str:
    """파일 SHA-256 해시"""
    digest = hashlib.sha256()
    with open(path, 'rb') as f:
        for chunk in iter(lambda: f.read(1 << 16), b''):
            digest.update(chunk)
    return digest.hexdigest()


def scenes_match(a: Sequence[Scene], b: Sequence[Scene], atol: float = 1e-12) -> bool:
    """두 씬 목록의 필드 단위 비교 (정수 정확 일치, 실수 atol 허용)"""
    if len(a) != len(b):
        return False
    for sa, sb in zip(a, b):
        if sa.scene_id != sb.scene_id or sa.gt != sb.gt or sa.objects != sb.objects:
            return False
        if len(sa.proposals) != len(sb.proposals):
            return False
        for pa, pb in zip(sa.proposals, sb.proposals):
            if pa.truth != pb.truth:
                return False
            if not np.allclose(pa.box.as_tuple(), pb.box.as_tuple(), rtol=0, atol=atol):
                return False
            if abs(pa.objectness - pb.objectness) > atol:
                return False
            if pa.feature.shape != pb.feature.shape:
                return False
            if not np.allclose(pa.feature, pb.feature, rtol=0, atol=atol):
                return False
    return True
