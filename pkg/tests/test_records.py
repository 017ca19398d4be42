"""Tests for engine.records: the JSON-lines trial-log and heap codec."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from engine.config_loader import parse_plan, plan_to_dict
from engine.records import (
    decode_heap,
    decode_log,
    encode_heap,
    encode_manifest,
    encode_trial,
    read_heaps,
    read_log,
    write_log,
)
from engine.trial_runner import ExperimentConfig, run_experiment
from picking_core.environment import EnvConfig, EnvironmentKind, generate_heap
from picking_core.errors import LogFormatError
from picking_core.policies import PolicyConfig, PolicyKind


def _config(kind=EnvironmentKind.PLACEMENT_FAILURES, policy=PolicyKind.CIRCLE) -> ExperimentConfig:
    return ExperimentConfig(env=EnvConfig(kind=kind), policy=PolicyConfig(kind=policy), n_trials=3)


# ---------------------------------------------------------------------------
# Trial records
# ---------------------------------------------------------------------------

class TestTrialRecords:
    def test_decoded_log_equals_original(self):
        config = _config()
        logs = run_experiment(config)
        lines = [encode_trial(log, config) for log in logs]
        contents = decode_log(lines)
        assert [trial.log for trial in contents.trials] == logs
        assert contents.trials[0].time == config.time

    def test_field_order_is_stable(self):
        config = _config()
        payload = json.loads(encode_trial(run_experiment(config)[0], config))
        assert list(payload)[:9] == [
            "record",
            "trial_index",
            "seed",
            "policy",
            "environment",
            "variant",
            "n_objects",
            "termination",
            "records",
        ]
        assert payload["config"]["environment"]["kind"] == "placement_failures"

    def test_group_key_separates_configs(self):
        first, second = _config(policy=PolicyKind.CIRCLE), _config(policy=PolicyKind.SWAP)
        lines = [encode_trial(run_experiment(first)[0], first), encode_trial(run_experiment(second)[0], second)]
        trials = decode_log(lines).trials
        assert trials[0].group_key != trials[1].group_key

    def test_write_and_read(self, tmp_path: Path):
        config = _config()
        logs = run_experiment(config)
        path = tmp_path / "trials.jsonl"
        manifest = encode_manifest("1.0.0", 0, plan_to_dict(parse_plan({})))
        assert write_log(path, manifest, [(config, logs)]) == 3
        contents = read_log(path)
        assert len(contents.manifests) == 1
        assert contents.manifests[0]["version"] == "1.0.0"
        assert [trial.log for trial in contents.trials] == logs


class TestCorruptLogs:
    def test_empty_log_is_an_error(self):
        with pytest.raises(LogFormatError, match="no trial records"):
            decode_log([])

    def test_bad_json_names_line(self):
        config = _config()
        good = encode_trial(run_experiment(config)[0], config)
        with pytest.raises(LogFormatError) as info:
            decode_log([good, "{not json"])
        assert info.value.line_number == 2

    def test_missing_field_names_line(self):
        config = _config()
        payload = json.loads(encode_trial(run_experiment(config)[0], config))
        del payload["termination"]
        with pytest.raises(LogFormatError, match="termination") as info:
            decode_log(["", json.dumps(payload)])
        assert info.value.line_number == 2

    @pytest.mark.parametrize("line", ['{"record": "checkpoint"}', "[1, 2, 3]"])
    def test_unknown_records_rejected(self, line: str):
        with pytest.raises(LogFormatError):
            decode_log([line])

    def test_invalid_utf8_names_line(self):
        config = _config()
        good = encode_trial(run_experiment(config)[0], config).encode("utf-8")
        with pytest.raises(LogFormatError, match="UTF-8") as info:
            decode_log([good + b"\n", b"\xff\xfe garbage\n"])
        assert info.value.line_number == 2

    def test_bad_reward_rejected(self):
        config = _config()
        payload = json.loads(encode_trial(run_experiment(config)[0], config))
        payload["records"][0][5] = 3
        with pytest.raises(LogFormatError, match="0 or 1"):
            decode_log([json.dumps(payload)])


# ---------------------------------------------------------------------------
# Heap records
# ---------------------------------------------------------------------------

class TestHeapRecords:
    @pytest.mark.parametrize("kind", list(EnvironmentKind))
    def test_heap_survives_encoding(self, kind: EnvironmentKind):
        heap = generate_heap(EnvConfig(kind=kind), 21)
        assert decode_heap(encode_heap(heap)) == heap

    def test_read_heaps_by_trial_index(self, tmp_path: Path):
        path = tmp_path / "heaps.jsonl"
        heaps = [generate_heap(EnvConfig(), seed) for seed in (4, 5)]
        path.write_text("".join(encode_heap(heap, index) + "\n" for index, heap in enumerate(heaps)), encoding="utf-8")
        assert read_heaps(path) == {0: heaps[0], 1: heaps[1]}

    def test_trial_record_is_not_a_heap(self):
        config = _config()
        with pytest.raises(LogFormatError, match="not a heap record"):
            decode_heap(encode_trial(run_experiment(config)[0], config))
