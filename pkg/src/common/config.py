"""
실험 설정 관리

INI 파일의 섹션 = 네임스페이스 (world.d → [world] d).
섹션별 pydantic 모델로 검증하며 알 수 없는 섹션/키는 오류로 처리한다.
"""
import configparser
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .errors import ConfigError


def _split_csv(value: Any) -> Any:
    """'1.0, 2.0' 형식 문자열을 리스트로 변환"""
    if isinstance(value, str):
        return [v.strip() for v in value.split(',') if v.strip()]
    return value


def parse_ratio(value: Union[str, float, int]) -> float:
    """FG:BG 비율 문자열을 BG/FG 배수로 변환 ('1:5' → 5.0)"""
    if isinstance(value, (int, float)):
        ratio = float(value)
    else:
        text = str(value).strip()
        if ':' in text:
            fg, bg = (part.strip() for part in text.split(':', 1))
            try:
                ratio = float(Fraction(bg) / Fraction(fg))
            except (ValueError, ZeroDivisionError) as e:
                raise ValueError(f"잘못된 비율: {value}") from e
        else:
            ratio = float(text)
    if not ratio > 0:
        raise ValueError(f"비율은 양수여야 합니다: {value}")
    return ratio


class _Section(BaseModel):
    model_config = ConfigDict(extra='forbid', populate_by_name=True)


class WorldConfig(_Section):
    """합성 세계 (클래스 프로토타입) 설정"""
    n_known: int = Field(20, ge=1)
    n_unknown: int = Field(5, ge=0)
    d: int = Field(32, ge=2)
    shift_range: Tuple[float, float] = (1.0, 2.0)
    spread: float = Field(0.2, gt=0)

    split_shift_range = field_validator('shift_range', mode='before')(_split_csv)

    @model_validator(mode='after')
    def check_shift(self) -> 'WorldConfig':
        lo, hi = self.shift_range
        if lo < 0 or lo > hi:
            raise ValueError(f"shift_range 최소값이 최대값보다 큽니다: {self.shift_range}")
        return self


class SceneConfig(_Section):
    """씬/제안 생성 설정"""
    objects_min: int = Field(2, ge=1)
    objects_max: int = Field(6, ge=1)
    copies_min: int = Field(2, ge=1)
    copies_max: int = Field(4, ge=1)
    n_bg_proposals: int = Field(30, ge=0)
    jitter: float = Field(0.15, ge=0, lt=0.5)
    sigma_bg: float = Field(0.8, gt=0)
    objectness_noise: float = Field(0.05, ge=0)
    unknown_object_rate: float = Field(0.5, ge=0, le=1)

    @model_validator(mode='after')
    def check_ranges(self) -> 'SceneConfig':
        if self.objects_min > self.objects_max:
            raise ValueError("objects_min > objects_max")
        if self.copies_min > self.copies_max:
            raise ValueError("copies_min > copies_max")
        return self


class ProtocolConfig(_Section):
    """증분 OWOD 프로토콜 설정"""
    n_tasks: int = Field(4, ge=1)
    classes_per_task: int = Field(5, ge=1)
    # 태스크별 도입 클래스 수 (예: '10, 10'). 지정하면 n_tasks와 classes_per_task 대신 사용
    task_classes: Optional[List[int]] = None
    mode: Literal['owod', 'iod'] = 'owod'
    train_scenes: int = Field(200, ge=1)
    test_scenes: int = Field(50, ge=1)
    finetune_fraction: float = Field(0.10, ge=0, le=1)
    finetune_samples: int = Field(2048, ge=0)
    previous_class_rate: float = Field(0.05, ge=0, le=1)
    final_task_closed: bool = True
    open_set_scenes: int = Field(50, ge=1)

    @field_validator('task_classes', mode='before')
    @classmethod
    def parse_task_classes(cls, value: Any) -> Any:
        value = _split_csv(value)
        return value or None

    @model_validator(mode='after')
    def check_task_classes(self) -> 'ProtocolConfig':
        if self.task_classes is not None:
            if any(c < 1 for c in self.task_classes):
                raise ValueError(f"task_classes 항목은 1 이상이어야 합니다: {self.task_classes}")
            self.n_tasks = len(self.task_classes)
        return self

    @property
    def class_counts(self) -> List[int]:
        """태스크별 도입 클래스 수"""
        if self.task_classes is not None:
            return list(self.task_classes)
        return [self.classes_per_task] * self.n_tasks


class PluConfig(_Section):
    """PLU 모듈 (FixMatch 자기학습) 설정"""
    epsilon: float = Field(0.9, gt=0.5, lt=1.0)
    lambda_: float = Field(1.0, ge=0, alias='lambda')
    fg_bg_ratio: float = 1.0
    batch_size: int = Field(8, ge=1)
    train_samples: int = Field(4096, ge=0)
    sample_count: Literal['both', 'source', 'target'] = 'both'
    target_norm: Literal['unmasked', 'all'] = 'unmasked'
    lr: float = Field(0.01, ge=0)
    momentum: float = Field(0.9, ge=0, lt=1.0)
    h1: int = Field(64, ge=1)
    h2: int = Field(32, ge=1)
    weak_sigma: float = Field(0.05, ge=0)
    strong_sigma: float = Field(0.2, ge=0)
    p_drop: float = Field(0.3, ge=0, lt=1.0)
    iou_threshold: float = Field(0.5, gt=0, lt=1)
    fg_prior: Optional[float] = Field(0.2, gt=0, lt=1)
    reinit_per_task: bool = True

    parse_fg_bg_ratio = field_validator('fg_bg_ratio', mode='before')(parse_ratio)

    @field_validator('fg_prior', mode='before')
    @classmethod
    def parse_fg_prior(cls, value: Any) -> Any:
        if isinstance(value, str) and value.strip().lower() in ('', 'none'):
            return None
        return value


class DetectorConfig(_Section):
    """알려진 클래스 검출 헤드 설정"""
    h1: int = Field(64, ge=1)
    h2: int = Field(32, ge=1)
    lr: float = Field(0.05, ge=0)
    momentum: float = Field(0.9, ge=0, lt=1.0)
    batch_size: int = Field(64, ge=1)
    train_samples: int = Field(8192, ge=0)
    bg_ratio: float = Field(3.0, gt=0)
    score_threshold: float = Field(0.05, ge=0, lt=1)


class SelectionConfig(_Section):
    """미지 의사 라벨 선택기 설정"""
    k: Union[Literal['auto'], int] = 'auto'
    fg_threshold: float = Field(0.5, gt=0, lt=1)

    @field_validator('k', mode='before')
    @classmethod
    def parse_k(cls, value: Any) -> Any:
        if isinstance(value, str) and value.strip().lower() != 'auto':
            return int(value)
        return value.strip().lower() if isinstance(value, str) else value

    @field_validator('k')
    @classmethod
    def check_k(cls, value: Any) -> Any:
        if isinstance(value, int) and value < 0:
            raise ValueError("k는 0 이상이어야 합니다")
        return value


class MetricsConfig(_Section):
    """평가 지표 설정"""
    iou_threshold: float = Field(0.5, gt=0, lt=1)
    recall_point: float = Field(0.8, gt=0, le=1)
    ap_method: Literal['all_point', 'eleven_point'] = 'all_point'


class RunSection(_Section):
    """실행 설정 (시드, 경로, 병렬도)"""
    seed: int = Field(7, ge=0)
    seeds: List[int] = [0, 1, 2, 3, 4]
    out_dir: str = './runs/default'
    deterministic: bool = False
    workers: int = Field(4, ge=1)

    split_seeds = field_validator('seeds', mode='before')(_split_csv)


class LoggingSection(_Section):
    """로깅 설정"""
    log_path: str = './logs'
    level: Literal['DEBUG', 'INFO', 'WARNING', 'ERROR'] = 'INFO'


class RunConfig(_Section):
    """모든 모듈의 조정 가능한 값 (RunConfig)"""
    world: WorldConfig = WorldConfig()
    scene: SceneConfig = SceneConfig()
    protocol: ProtocolConfig = ProtocolConfig()
    plu: PluConfig = PluConfig()
    detector: DetectorConfig = DetectorConfig()
    selection: SelectionConfig = SelectionConfig()
    metrics: MetricsConfig = MetricsConfig()
    run: RunSection = RunSection()
    logging: LoggingSection = LoggingSection()

    def flat(self) -> Dict[str, Any]:
        """점 표기 평면 딕셔너리 (매니페스트 기록용)"""
        result: Dict[str, Any] = {}
        for section, model in self.model_dump(by_alias=True).items():
            for key, value in model.items():
                result[f"{section}.{key}"] = list(value) if isinstance(value, tuple) else value
        return result

    def replace(self, **overrides: Any) -> 'RunConfig':
        """점 표기 키로 일부 값을 바꾼 사본 반환 (검증 포함)

        예: cfg.replace(**{'plu.lambda': 0.5})
        """
        data = self.model_dump(by_alias=True)
        for dotted, value in overrides.items():
            section, _, key = dotted.partition('.')
            if section not in data or not key:
                raise ConfigError(f"알 수 없는 설정 키: {dotted}")
            data[section][key] = value
        return _validate(data)


def _validate(data: Dict[str, Any]) -> RunConfig:
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"설정 검증 실패:\n{e}") from e


class Config:
    """설정 파일 관리 클래스

    Args:
        path: INI 파일 경로 (None이면 기본값만 사용)
    """

    def __init__(self, path: Optional[Union[str, Path]] = None):
        self.path = Path(path) if path else None
        self._parser = configparser.ConfigParser(inline_comment_prefixes=('#', ';'))
        self._load()

    def _load(self):
        """설정 파일 로드"""
        if self.path is not None:
            if not self.path.exists():
                raise ConfigError(
                    f"설정 파일을 찾을 수 없습니다: {self.path}\n"
                    "config.ini.example을 복사하여 설정 파일을 생성하세요."
                )
            try:
                self._parser.read(self.path, encoding='utf-8')
            except configparser.Error as e:
                raise ConfigError(f"설정 파일 파싱 실패: {e}") from e

        data: Dict[str, Dict[str, str]] = {
            section: dict(self._parser.items(section)) for section in self._parser.sections()
        }
        self.run_config = _validate(data)

    def override(self, **overrides: Any) -> 'Config':
        """CLI 인자 등으로 값 덮어쓰기 (None은 무시)"""
        applied = {k: v for k, v in overrides.items() if v is not None}
        if applied:
            self.run_config = self.run_config.replace(**applied)
        return self

    @property
    def world(self) -> WorldConfig:
        return self.run_config.world

    @property
    def scene(self) -> SceneConfig:
        return self.run_config.scene

    @property
    def protocol(self) -> ProtocolConfig:
        return self.run_config.protocol

    @property
    def plu(self) -> PluConfig:
        return self.run_config.plu

    @property
    def detector(self) -> DetectorConfig:
        return self.run_config.detector

    @property
    def selection(self) -> SelectionConfig:
        return self.run_config.selection

    @property
    def metrics(self) -> MetricsConfig:
        return self.run_config.metrics

    @property
    def run(self) -> RunSection:
        return self.run_config.run

    @property
    def logging(self) -> dict:
        """로깅 설정"""
        return self.run_config.logging.model_dump()

    def get(self, section: str, key: str, fallback=None):
        """범용 설정 조회"""
        model = getattr(self.run_config, section, None)
        if model is None:
            return fallback
        return getattr(model, key, fallback)
