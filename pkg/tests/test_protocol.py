"""증분 프로토콜 (메모리 내 실행 + 오케스트레이터 산출물)"""
import json

import pandas as pd
import pytest

from src.common import Config
from src.common.errors import DataError, ProtocolError
from src.metrics.report import ROW_COLUMNS
from src.plu.predictor import init_predictor
from src.plu.trainer import LOG_COLUMNS
from src.protocol import ProtocolOrchestrator, build_benchmark, run_protocol
from src.protocol.stages import EvaluateStage, finetune, select_exemplars
from src.protocol.stages import train as train_stage
from src.protocol.state import RunState
from src.protocol.task_processor import run_task

from conftest import TINY_OVERRIDES, make_scene, tiny_run_config


@pytest.fixture(scope='module')
def cfg():
    return tiny_run_config()


@pytest.fixture(scope='module')
def bench(cfg):
    return build_benchmark(cfg, seed=0)


@pytest.fixture(scope='module')
def state(cfg, bench):
    return run_protocol(cfg, 0, bench)


def test_benchmark_layout(bench):
    assert [t.task_id for t in bench.tasks] == [1, 2]
    assert set(bench.data) == {1, 2}
    for task in bench.tasks:
        data = bench.data[task.task_id]
        assert len(data.train) == 12
        assert len(data.test) == 6
        assert data.d == 8


def test_every_task_reports_both_selectors(state):
    assert state.completed == [1, 2]
    for t in (1, 2):
        assert set(state.reports[t]) == {'topk', 'plu'}
        assert set(state.logs[t].to_frame().columns) == set(LOG_COLUMNS)


def test_first_task_has_no_previous_map(state):
    for report in state.reports[1].values():
        assert report.map_previous is None
        assert report.map_both is not None


def test_open_world_metrics_follow_unknown_presence(state):
    for report in state.reports[1].values():
        if report.n_unknown_objects:
            assert report.wi is not None
            assert report.u_recall is not None
    # 마지막 태스크 평가 씬은 미지 객체가 없다
    for report in state.reports[2].values():
        assert report.n_unknown_objects == 0
        assert report.wi is None
        assert report.map_previous is not None


def test_no_label_violations(state):
    assert state.label_violations == 0
    assert set(state.audits) == {1, 2}


def test_selection_frames_are_recorded(state):
    frame = state.selections[(2, 'plu')]
    assert set(frame['selector']) <= {'plu'}
    assert frame['proposal_index'].ge(0).all()


def test_tasks_must_run_in_order(cfg, bench):
    fresh = RunState(config=cfg, seed=0)
    with pytest.raises(ProtocolError):
        run_task(fresh, bench.tasks[1], bench.data[2])


def test_seen_train_grows_only_after_completed_tasks(cfg, bench, state):
    assert len(state.seen_train) == sum(len(bench.data[t].train) for t in (1, 2))


def test_failed_stage_leaves_seen_train_untouched(cfg, bench, monkeypatch):
    def boom(self):
        raise RuntimeError('평가 실패')

    monkeypatch.setattr(EvaluateStage, 'process', boom)
    fresh = RunState(config=cfg, seed=0)
    with pytest.raises(RuntimeError):
        run_task(fresh, bench.tasks[0], bench.data[1])
    assert fresh.seen_train == []
    assert fresh.completed == []


def test_predictor_is_reinitialized_per_task(cfg, bench, monkeypatch):
    calls = []
    real = train_stage.init_predictor

    def counting(*args, **kwargs):
        calls.append(kwargs.get('fg_prior'))
        return real(*args, **kwargs)

    monkeypatch.setattr(train_stage, 'init_predictor', counting)
    run_protocol(cfg, 0, bench)
    assert calls == [cfg.plu.fg_prior, cfg.plu.fg_prior]
    calls.clear()
    run_protocol(cfg.replace(**{"plu.reinit_per_task": False}), 0, bench)
    assert len(calls) == 1


def test_protocol_is_deterministic(cfg, bench, state):
    again = run_protocol(cfg, 0, bench)
    for t in (1, 2):
        for selector in ('topk', 'plu'):
            assert again.reports[t][selector].to_dict() == state.reports[t][selector].to_dict()


def test_finetune_can_be_disabled(cfg, bench):
    run = run_protocol(cfg, 0, bench, finetune_enabled=False, n_tasks=1)
    assert run.completed == [1]
    assert 'finetune' not in run.stage_results[1]


def test_zero_fraction_finetune_is_skipped(cfg, bench):
    net = init_predictor(8, 8, 4, seed=0)
    zero = cfg.replace(**{'protocol.finetune_fraction': 0.0})
    _, log, info = finetune(net, None, bench.data[1].train, bench.tasks[0].known, zero, seed=0)
    assert info['status'] == 'skipped'
    assert len(log) == 0


def test_exemplars_are_balanced_round_robin():
    box = (0.1, 0.1, 0.3, 0.3)
    scenes = [
        make_scene([(0, box)], [], scene_id=0),
        make_scene([(0, box)], [], scene_id=1),
        make_scene([(1, box)], [], scene_id=2),
        make_scene([(0, box), (1, box)], [], scene_id=3),
    ]
    chosen = select_exemplars(scenes, [0, 1], n=2, seed=3)
    assert len({s.scene_id for s in chosen}) == 2
    assert {g.class_id for s in chosen for g in s.gt} == {0, 1}
    assert len(select_exemplars(scenes, [0, 1], n=10, seed=3)) == 4
    assert select_exemplars(scenes, [0, 1], n=0, seed=3) == []


# ========================================
# 오케스트레이터
# ========================================
def make_config(root):
    return Config().override(**{
        **TINY_OVERRIDES,
        'run.out_dir': str(root / 'run'),
        'run.seed': 3,
        'logging.log_path': str(root / 'logs'),
    })


@pytest.fixture(scope='module')
def finished_run(tmp_path_factory):
    root = tmp_path_factory.mktemp('orchestrator')
    orchestrator = ProtocolOrchestrator(make_config(root))
    generated = orchestrator.generate()
    result = orchestrator.run()
    return orchestrator, generated, result


def test_generate_writes_dataset_and_manifest(finished_run):
    orchestrator, generated, _ = finished_run
    assert generated['status'] == 'success'
    assert set(generated['files']) == {'task1_train.jsonl', 'task1_test.jsonl', 'task2_train.jsonl', 'task2_test.jsonl'}
    manifest = json.loads((orchestrator.data_dir / 'manifest.json').read_text(encoding='utf-8'))
    assert manifest['seed'] == 3
    assert manifest['config']['plu.lambda'] == 1.0
    assert manifest['audit']['censorship_violations'] == 0
    assert set(manifest['class_counts']) == {'task1', 'task2'}


def test_run_writes_artifacts(finished_run):
    orchestrator, _, result = finished_run
    out = orchestrator.out_dir
    assert result['label_violations'] == 0
    for t in (1, 2):
        for selector in ('topk', 'plu'):
            assert (out / f"reports/task{t}_{selector}.json").exists()
            assert (out / f"selections/task{t}_{selector}.csv").exists()
        assert (out / f"logs/train_task{t}.csv").exists()
        assert (out / f"checkpoints/task{t}_predictor.npz").exists()

    metrics = pd.read_csv(out / 'reports' / 'metrics.csv')
    assert list(metrics.columns) == ROW_COLUMNS
    assert len(metrics) == 4

    manifest = json.loads((out / 'run_manifest.json').read_text(encoding='utf-8'))
    assert manifest['label_violations'] == 0
    assert set(manifest['dataset_hashes']) == set(json.loads(
        (orchestrator.data_dir / 'manifest.json').read_text(encoding='utf-8'))['files'])


def test_rerun_reproduces_report_bytes(finished_run):
    orchestrator, _, _ = finished_run
    out = orchestrator.out_dir
    names = ['reports/task1_plu.json', 'reports/task2_topk.json', 'reports/metrics.csv', 'run_manifest.json']
    before = {n: (out / n).read_bytes() for n in names}
    orchestrator.run()
    assert {n: (out / n).read_bytes() for n in names} == before


def test_run_without_dataset(tmp_path):
    with pytest.raises(DataError):
        ProtocolOrchestrator(make_config(tmp_path)).run()
