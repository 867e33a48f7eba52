"""데이터셋 JSONL 입출력"""
import json

import pytest

from src.common.errors import DataError, DatasetParseError, SchemaError
from src.world.dataset import (
    DatasetHeader, file_sha256, load_dataset, mean_unknown_count, save_dataset, scenes_match,
)


@pytest.fixture
def header(small_world):
    return DatasetHeader(d=8, classes=small_world, seed=5, params={'n_bg_proposals': 12},
                         known_ids=[0, 1], mean_unknown_objects=1.5)


def test_save_then_load_restores_scenes(tmp_path, small_scenes, header):
    path = tmp_path / 'train.jsonl'
    digest = save_dataset(small_scenes, path, header)
    loaded = load_dataset(path)

    assert digest == file_sha256(path)
    assert loaded.header.known_ids == [0, 1]
    assert loaded.header.mean_unknown_objects == 1.5
    assert [c.class_id for c in loaded.header.classes] == [c.class_id for c in header.classes]
    assert scenes_match(small_scenes, loaded.scenes, atol=0.0)


def test_saving_twice_is_byte_identical(tmp_path, small_scenes, header):
    a = save_dataset(small_scenes, tmp_path / 'a.jsonl', header)
    b = save_dataset(small_scenes, tmp_path / 'b.jsonl', header)
    assert a == b
    assert (tmp_path / 'a.jsonl').read_bytes() == (tmp_path / 'b.jsonl').read_bytes()


def test_missing_file_is_data_error(tmp_path):
    with pytest.raises(DataError):
        load_dataset(tmp_path / 'nope.jsonl')


def test_corrupt_line_reports_line_number(tmp_path, small_scenes, header):
    path = tmp_path / 'bad.jsonl'
    save_dataset(small_scenes[:3], path, header)
    lines = path.read_text(encoding='utf-8').splitlines()
    lines[2] = lines[2][:20]
    path.write_text('\n'.join(lines) + '\n', encoding='utf-8')

    with pytest.raises(DatasetParseError) as info:
        load_dataset(path)
    assert info.value.line_no == 3


def test_invalid_box_in_record_is_parse_error(tmp_path, small_scenes, header):
    path = tmp_path / 'box.jsonl'
    save_dataset(small_scenes[:1], path, header)
    lines = path.read_text(encoding='utf-8').splitlines()
    record = json.loads(lines[1])
    record['proposals'][0]['box'] = [0.5, 0.5, 0.4, 0.6]
    lines[1] = json.dumps(record)
    path.write_text('\n'.join(lines) + '\n', encoding='utf-8')

    with pytest.raises(DatasetParseError) as info:
        load_dataset(path)
    assert info.value.line_no == 2


def test_unknown_schema_version(tmp_path, small_scenes, header):
    path = tmp_path / 'v.jsonl'
    save_dataset(small_scenes[:1], path, header)
    lines = path.read_text(encoding='utf-8').splitlines()
    head = json.loads(lines[0])
    head['schema_version'] = 99
    lines[0] = json.dumps(head)
    path.write_text('\n'.join(lines) + '\n', encoding='utf-8')

    with pytest.raises(SchemaError):
        load_dataset(path)


def test_header_dimension_mismatch_rejected_on_save(tmp_path, small_scenes, small_world):
    bad = DatasetHeader(d=3, classes=small_world)
    with pytest.raises(SchemaError):
        save_dataset(small_scenes, tmp_path / 'x.jsonl', bad)


def test_mean_unknown_count(simple_scene):
    assert mean_unknown_count([simple_scene], [0]) == 0.0
    assert mean_unknown_count([simple_scene], [5]) == 1.0
    assert mean_unknown_count([], [0]) == 0.0
