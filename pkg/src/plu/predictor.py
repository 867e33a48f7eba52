"""
FG/BG 예측기 φ (MLP) 및 SGD

역할:
- MLP d → h1 → h2 → n_out (ReLU), 기본 n_out=2 (BG=0, FG=1)
- 순전파 / 가중 교차엔트로피 역전파 (해석적 그래디언트)
- 모멘텀 SGD 갱신
- FixMatch용 약/강 특징 증강
- 체크포인트 저장/로드 (.npz)

모든 파라미터는 항상 유한해야 하며 위반 시 NumericalError.
"""
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterator, Optional, Sequence, Tuple, Union

import numpy as np

from ..common.errors import InvalidInputError, NumericalError, SchemaError, ShapeError
from ..common.rng import SeedLike, as_generator

logger = logging.getLogger(__name__)

PARAM_NAMES = ('W1', 'b1', 'W2', 'b2', 'W3', 'b3')
BG_INDEX = 0
FG_INDEX = 1
CHECKPOINT_VERSION = 1


def glorot_uniform(fan_in: int, fan_out: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform(-√(6/(fan_in+fan_out)), +√(6/(fan_in+fan_out)))"""
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def softmax(logits: np.ndarray) -> np.ndarray:
    """행 단위 softmax (수치 안정)"""
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def cross_entropy(logits: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """샘플별 CE = logsumexp(logits) - logits[label]"""
    m = logits.max(axis=1, keepdims=True)
    lse = m[:, 0] + np.log(np.exp(logits - m).sum(axis=1))
    return lse - logits[np.arange(len(labels)), labels]


@dataclass
class Gradients:
    """파라미터별 그래디언트 버퍼"""
    buffers: Dict[str, np.ndarray]

    def __getitem__(self, name: str) -> np.ndarray:
        return self.buffers[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self.buffers)

    def __add__(self, other: 'Gradients') -> 'Gradients':
        return Gradients({k: self.buffers[k] + other.buffers[k] for k in self.buffers})

    def scaled(self, factor: float) -> 'Gradients':
        return Gradients({k: v * factor for k, v in self.buffers.items()})

    @classmethod
    def zeros_like(cls, predictor: 'Predictor') -> 'Gradients':
        return cls({k: np.zeros_like(v) for k, v in predictor.params.items()})


@dataclass
class Predictor:
    """MLP 분류기 (BG=0, FG=1; 검출 헤드로 쓸 때 0=배경, 1..=클래스)"""
    params: Dict[str, np.ndarray]

    @property
    def d(self) -> int:
        return self.params['W1'].shape[0]

    @property
    def n_out(self) -> int:
        return self.params['W3'].shape[1]

    @property
    def shapes(self) -> Dict[str, Tuple[int, ...]]:
        return {k: v.shape for k, v in self.params.items()}

    def copy(self) -> 'Predictor':
        return Predictor({k: v.copy() for k, v in self.params.items()})

    def check_finite(self, context: str = '') -> None:
        for name, value in self.params.items():
            if not np.all(np.isfinite(value)):
                raise NumericalError(f"파라미터 {name}에 NaN/Inf 발생 {context}".strip())

    def _inputs(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 1:
            x = x[None, :]
        if x.ndim != 2 or x.shape[1] != self.d:
            raise ShapeError(f"입력 차원 불일치: {x.shape}, 기대 (*, {self.d})")
        if not np.all(np.isfinite(x)):
            raise InvalidInputError("입력에 유한하지 않은 값이 있습니다")
        return x

    def _forward_cache(self, x: np.ndarray):
        p = self.params
        z1 = x @ p['W1'] + p['b1']
        a1 = np.maximum(z1, 0.0)
        z2 = a1 @ p['W2'] + p['b2']
        a2 = np.maximum(z2, 0.0)
        logits = a2 @ p['W3'] + p['b3']
        return z1, a1, z2, a2, logits

    def forward(self, x: np.ndarray) -> np.ndarray:
        """로짓 계산 (x가 1차원이면 (n_out,), 2차원이면 (n, n_out))"""
        single = np.ndim(x) == 1
        logits = self._forward_cache(self._inputs(x))[-1]
        return logits[0] if single else logits

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        return softmax(self.forward(x))

    def fg_probability(self, x: np.ndarray) -> np.ndarray:
        """FG(인덱스 1) softmax 확률"""
        return np.atleast_2d(self.predict_proba(x))[:, FG_INDEX]

    def score_proposals(self, proposals) -> np.ndarray:
        """제안 목록의 FG 확률 (선택기 점수 인터페이스)"""
        if not proposals:
            return np.zeros(0, dtype=np.float64)
        return self.fg_probability(np.stack([p.feature for p in proposals]))

    def backward(
        self,
        features: np.ndarray,
        labels: Sequence[int],
        weights: Optional[Sequence[float]] = None,
    ) -> Tuple[float, Gradients]:
        """가중 CE 손실과 해석적 그래디언트

        loss = Σ w_i · CE_i / max(Σ w_i, 1)

        Args:
            features: (n, d) 입력
            labels: (n,) 정답 인덱스
            weights: (n,) 샘플 가중치 ≥ 0 (0 = 마스킹, 기본 1)

        Returns:
            (손실, Gradients)
        """
        labels = np.asarray(labels, dtype=np.int64)
        if labels.size == 0:
            raise InvalidInputError("빈 배치로 역전파할 수 없습니다")
        x = self._inputs(features)
        if x.shape[0] != labels.shape[0]:
            raise ShapeError(f"입력 {x.shape[0]}개, 라벨 {labels.shape[0]}개")
        if labels.min() < 0 or labels.max() >= self.n_out:
            raise InvalidInputError(f"라벨 범위 오류: [0, {self.n_out})")
        w = np.ones(len(labels)) if weights is None else np.asarray(weights, dtype=np.float64)
        if w.shape != labels.shape or np.any(w < 0):
            raise InvalidInputError("가중치는 라벨과 같은 길이의 비음수여야 합니다")

        if not w.sum() > 0:
            return 0.0, Gradients.zeros_like(self)

        z1, a1, z2, a2, logits = self._forward_cache(x)
        denom = max(float(w.sum()), 1.0)
        loss = float(np.dot(w, cross_entropy(logits, labels)) / denom)

        p = self.params
        dlogits = softmax(logits)
        dlogits[np.arange(len(labels)), labels] -= 1.0
        dlogits *= (w / denom)[:, None]

        grads = {
            'W3': a2.T @ dlogits,
            'b3': dlogits.sum(axis=0),
        }
        dz2 = (dlogits @ p['W3'].T) * (z2 > 0)
        grads['W2'] = a1.T @ dz2
        grads['b2'] = dz2.sum(axis=0)
        dz1 = (dz2 @ p['W2'].T) * (z1 > 0)
        grads['W1'] = x.T @ dz1
        grads['b1'] = dz1.sum(axis=0)
        return loss, Gradients(grads)

    def expand_outputs(self, n_new: int, seed: SeedLike) -> None:
        """출력 로짓 n_new개 추가 (기존 열 유지, 증분 태스크용)"""
        if n_new <= 0:
            return
        rng = as_generator(seed)
        h2 = self.params['W3'].shape[0]
        limit = np.sqrt(6.0 / (h2 + self.n_out + n_new))
        new_cols = rng.uniform(-limit, limit, size=(h2, n_new))
        self.params['W3'] = np.hstack([self.params['W3'], new_cols])
        self.params['b3'] = np.concatenate([self.params['b3'], np.zeros(n_new)])


def init_predictor(d: int, h1: int = 64, h2: int = 32, seed: SeedLike = 0, n_out: int = 2,
                   fg_prior: Optional[float] = None) -> Predictor:
    """
    Glorot 균등 초기화 예측기 생성

    편향은 0. fg_prior가 주어지면 이진 출력의 FG 로짓 편향을 log(π/(1-π))로 두어
    초기 FG 확률이 π 근처에서 시작한다.
    """
    if min(d, h1, h2, n_out) < 1:
        raise InvalidInputError(f"층 크기는 1 이상이어야 합니다: d={d}, h1={h1}, h2={h2}, n_out={n_out}")
    rng = as_generator(seed)
    net = Predictor({
        'W1': glorot_uniform(d, h1, rng),
        'b1': np.zeros(h1),
        'W2': glorot_uniform(h1, h2, rng),
        'b2': np.zeros(h2),
        'W3': glorot_uniform(h2, n_out, rng),
        'b3': np.zeros(n_out),
    })
    if fg_prior is not None:
        if n_out != 2 or not 0.0 < fg_prior < 1.0:
            raise InvalidInputError(f"fg_prior는 이진 출력에서 (0, 1) 범위여야 합니다: {fg_prior}")
        net.params['b3'][FG_INDEX] = np.log(fg_prior / (1.0 - fg_prior))
    return net


# ========================================
# 최적화
# ========================================

@dataclass
class OptimState:
    """모멘텀 SGD 상태"""
    lr: float
    momentum: float
    velocity: Dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def for_predictor(cls, predictor: Predictor, lr: float, momentum: float) -> 'OptimState':
        return cls(lr=lr, momentum=momentum,
                   velocity={k: np.zeros_like(v) for k, v in predictor.params.items()})


def sgd_step(predictor: Predictor, grads: Gradients, opt: OptimState, step: Optional[int] = None) -> Predictor:
    """v ← μ·v + g; p ← p − lr·v (제자리 갱신)"""
    for name in predictor.params:
        g = grads[name]
        if g.shape != predictor.params[name].shape:
            raise ShapeError(f"그래디언트 {name} 형상 {g.shape} != 파라미터 {predictor.params[name].shape}")
        if not np.all(np.isfinite(g)):
            raise NumericalError(f"그래디언트 {name}에 NaN/Inf 발생 (step={step})", step=step)

    for name, param in predictor.params.items():
        v = opt.velocity.get(name)
        if v is None or v.shape != param.shape:
            v = np.zeros_like(param)
        v = opt.momentum * v + grads[name]
        opt.velocity[name] = v
        predictor.params[name] = param - opt.lr * v

    predictor.check_finite(f"(step={step})")
    return predictor


# ========================================
# 증강
# ========================================

def weak_augment(x: np.ndarray, seed: SeedLike, sigma: float = 0.05) -> np.ndarray:
    """약한 증강: x + N(0, σ²)"""
    rng = as_generator(seed)
    x = np.asarray(x, dtype=np.float64)
    return x + rng.normal(0.0, sigma, x.shape)


def strong_augment(x: np.ndarray, seed: SeedLike, sigma: float = 0.2, p_drop: float = 0.3) -> np.ndarray:
    """강한 증강: (x + N(0, σ²)) 좌표별 드롭아웃 후 1/(1-p) 재스케일"""
    if not 0.0 <= p_drop < 1.0:
        raise InvalidInputError(f"p_drop은 [0,1) 범위여야 합니다: {p_drop}")
    rng = as_generator(seed)
    x = np.asarray(x, dtype=np.float64)
    noisy = x + rng.normal(0.0, sigma, x.shape)
    keep = rng.random(x.shape) >= p_drop
    return np.where(keep, noisy / (1.0 - p_drop), 0.0)


# ========================================
# 체크포인트
# ========================================

def save_checkpoint(path: Union[str, Path], predictor: Predictor, opt: Optional[OptimState] = None) -> None:
    """파라미터 + 옵티마이저 상태를 .npz로 저장"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    arrays = {f'param_{k}': v for k, v in predictor.params.items()}
    if opt is not None:
        arrays.update({f'velocity_{k}': v for k, v in opt.velocity.items()})
        arrays['lr'] = np.float64(opt.lr)
        arrays['momentum'] = np.float64(opt.momentum)
    arrays['schema_version'] = np.int64(CHECKPOINT_VERSION)
    with open(path, 'wb') as f:
        np.savez(f, **arrays)


def load_checkpoint(path: Union[str, Path]) -> Tuple[Predictor, Optional[OptimState]]:
    """체크포인트 로드 (비트 동일 복원)"""
    with np.load(path) as data:
        version = int(data['schema_version']) if 'schema_version' in data.files else None
        if version != CHECKPOINT_VERSION:
            raise SchemaError(f"지원하지 않는 체크포인트 버전: {version}")
        params = {k: data[f'param_{k}'].copy() for k in PARAM_NAMES}
        opt = None
        if 'lr' in data.files:
            opt = OptimState(
                lr=float(data['lr']),
                momentum=float(data['momentum']),
                velocity={k: data[f'velocity_{k}'].copy() for k in PARAM_NAMES if f'velocity_{k}' in data.files},
            )
    predictor = Predictor(params)
    predictor.check_finite()
    return predictor, opt
