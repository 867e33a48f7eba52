"""중간 규모 벤치마크 (pytest -m slow)"""
import numpy as np
import pytest

from src.common import Config
from src.common.config import PluConfig, SceneConfig
from src.plu.predictor import init_predictor
from src.plu.selection import plu_select
from src.plu.trainer import train_plu
from src.protocol import build_benchmark, run_protocol
from src.protocol.ablation import AXES, AblationRunner, directional_check
from src.world import ClassRole, generate_scenes, generate_world
from src.world.geometry import match_proposals

from conftest import tiny_run_config

pytestmark = pytest.mark.slow

SEEDS = [0, 1, 2, 3, 4]


@pytest.fixture(scope='module')
def medium_run():
    cfg = tiny_run_config(**{
        'world.n_known': 6,
        'world.n_unknown': 3,
        'world.d': 16,
        'protocol.n_tasks': 3,
        'protocol.train_scenes': 60,
        'protocol.test_scenes': 30,
        'scene.n_bg_proposals': 20,
        'plu.train_samples': 1024,
        'detector.train_samples': 2048,
    })
    bench = build_benchmark(cfg, seed=0)
    return run_protocol(cfg, 0, bench, selectors=('topk', 'plu', 'oracle'), n_tasks=2)


def test_oracle_bounds_unknown_recall(medium_run):
    for t in (1, 2):
        reports = medium_run.reports[t]
        assert reports['oracle'].u_recall >= reports['topk'].u_recall
        assert reports['oracle'].u_recall >= reports['plu'].u_recall


def test_medium_run_has_known_map_and_no_violations(medium_run):
    reports = medium_run.reports[2]
    assert reports['topk'].map_both is not None
    assert medium_run.label_violations == 0


# ========================================
# 헤드라인: 기지 20 + 미지 20, 열린 태스크 1개
# ========================================

def headline_reports(seed):
    cfg = Config().run_config.replace(**{
        'world.n_known': 20,
        'world.n_unknown': 20,
        'world.shift_range': (1.0, 2.0),
        'protocol.n_tasks': 1,
        'protocol.classes_per_task': 20,
        'protocol.final_task_closed': False,
    })
    state = run_protocol(cfg, seed, build_benchmark(cfg, seed), selectors=('topk', 'plu'))
    return state.reports[1]


def test_plu_beats_topk_on_open_task():
    recall_wins = wi_wins = 0
    for seed in SEEDS:
        reports = headline_reports(seed)
        recall_wins += reports['plu'].u_recall > reports['topk'].u_recall
        wi_wins += reports['plu'].wi < reports['topk'].wi
    assert recall_wins >= 4
    assert wi_wins >= 4


# ========================================
# ablation 축 (기본 설정, 시드 5개)
# ========================================

def axis_check(tmp_path, axis):
    config = Config().override(**{
        'run.out_dir': str(tmp_path / 'run'),
        'logging.log_path': str(tmp_path / 'logs'),
    })
    frame = AblationRunner(config).collect(axis, seeds=SEEDS)
    return directional_check(frame, AXES[axis])


@pytest.mark.parametrize('axis', ['lambda', 'ratio', 'finetune'])
def test_ablation_axis_direction(tmp_path, axis):
    check = axis_check(tmp_path, axis)
    assert check['n_seeds'] == len(SEEDS)
    assert check['passed'], check


# ========================================
# φ 학습: 쉬운 세계 (shift 0~0.2)
# ========================================

def fg_accuracy(net, scenes):
    correct = total = 0
    for scene in scenes:
        partition = match_proposals(scene.proposal_boxes, scene.gt_boxes)
        idx = list(partition.unmatched)
        if not idx:
            continue
        truth = np.array([scene.proposals[i].truth.is_foreground for i in idx])
        predicted = net.fg_probability(scene.features[idx]) > 0.5
        correct += int(np.sum(predicted == truth))
        total += len(idx)
    return correct / total


@pytest.mark.parametrize('seed', [0, 1, 2])
def test_train_plu_learns_easy_world(seed):
    world = generate_world(20, 5, 32, (0.0, 0.2), seed=seed, spread=0.15)
    known = [c.class_id for c in world if c.role is ClassRole.KNOWN]
    train = generate_scenes(world, known, SceneConfig(), n_scenes=200, seed=seed + 10)
    test = generate_scenes(world, known, SceneConfig(), n_scenes=50, seed=seed + 20, first_scene_id=200)

    net, log = train_plu(init_predictor(32, seed=seed), train, PluConfig(), seed=seed)
    assert fg_accuracy(net, test) >= 0.95

    mask = log.to_frame()['mask_rate'].to_numpy()
    tenth = max(1, len(mask) // 10)
    assert mask[-tenth:].mean() > mask[:tenth].mean()

    counts = [len(plu_select(s, match_proposals(s.proposal_boxes, s.gt_boxes), net)) for s in test]
    assert np.std(counts) > 0
