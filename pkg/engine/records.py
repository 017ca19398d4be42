"""Line-delimited JSON records for trial logs and heaps.

A log file holds one ``manifest`` record per run followed by one ``trial``
record per trial. Field order is fixed and no wall-clock data is written, so a
rerun of the same config and seed produces a byte-identical file.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, List, Mapping, Sequence, TextIO, Tuple, Union

from picking_core.errors import ConfigError, LogFormatError
from picking_core.model import (
    Action,
    FailureProfile,
    GraspSite,
    HeapState,
    ObjectInstance,
    Termination,
    TimeModel,
    TrialLog,
    TrialRecord,
)

from .config_loader import experiment_echo, time_from_echo
from .trial_runner import ExperimentConfig

MANIFEST = "manifest"
TRIAL = "trial"
HEAP = "heap"


def _dumps(payload: Mapping[str, Any]) -> str:
    return json.dumps(payload, separators=(",", ":"), allow_nan=False)


def encode_manifest(version: str, master_seed: int, config: Mapping[str, Any]) -> str:
    return _dumps({"record": MANIFEST, "version": version, "master_seed": master_seed, "config": dict(config)})


def encode_trial(log: TrialLog, config: ExperimentConfig) -> str:
    steps = [
        [
            record.action.gripper,
            record.action.object_id,
            record.action.site_id,
            record.action.position[0],
            record.action.position[1],
            record.reward,
            record.cumulative_time_s,
        ]
        for record in log.records
    ]
    return _dumps(
        {
            "record": TRIAL,
            "trial_index": log.trial_index,
            "seed": log.seed,
            "policy": log.policy_name,
            "environment": log.environment,
            "variant": log.variant,
            "n_objects": log.n_objects,
            "termination": log.termination.value,
            "records": steps,
            "config": experiment_echo(config),
        }
    )


def encode_heap(heap: HeapState, trial_index: int = 0) -> str:
    objects = []
    for object_id in sorted(heap.objects):
        obj = heap.objects[object_id]
        hidden = obj.hidden
        probs = hidden.per_gripper_success_prob
        objects.append(
            {
                "object_id": obj.object_id,
                "center": list(obj.center),
                "radius": obj.footprint_radius,
                "sites": [
                    [site.site_id, site.position[0], site.position[1], site.quality, site.on_boundary]
                    for site in obj.sites
                ],
                "hidden": {
                    "type_failing_grippers": sorted(hidden.type_failing_grippers),
                    "blocked_sites": sorted(hidden.blocked_sites),
                    "per_gripper_success_prob": None
                    if probs is None
                    else {str(gripper): probs[gripper] for gripper in sorted(probs)},
                },
            }
        )
    return _dumps(
        {
            "record": HEAP,
            "trial_index": trial_index,
            "seed": heap.seed,
            "bin_dims": list(heap.bin_dims),
            "objects": objects,
            "remaining": sorted(heap.remaining),
        }
    )


@dataclass(frozen=True)
class LoggedTrial:
    """A decoded trial record together with its configuration echo."""

    log: TrialLog
    config: Dict[str, Any]
    time: TimeModel

    @property
    def group_key(self) -> Tuple[str, str, str, str]:
        """Trials that share this key came from the same experiment configuration."""
        return (self.log.environment, self.log.policy_name, self.log.variant, json.dumps(self.config, sort_keys=True))


@dataclass(frozen=True)
class LogContents:
    manifests: Tuple[Dict[str, Any], ...]
    trials: Tuple[LoggedTrial, ...]


def _field(payload: Mapping[str, Any], name: str, line_number: int) -> Any:
    try:
        return payload[name]
    except KeyError:
        raise LogFormatError(line_number, f"missing field '{name}'") from None


def _decode_trial(payload: Mapping[str, Any], line_number: int) -> LoggedTrial:
    try:
        records = tuple(
            TrialRecord(
                Action(int(gripper), int(object_id), int(site_id), (float(x), float(y))),
                int(reward),
                float(elapsed),
            )
            for gripper, object_id, site_id, x, y, reward, elapsed in _field(payload, "records", line_number)
        )
        log = TrialLog(
            records=records,
            termination=Termination(_field(payload, "termination", line_number)),
            n_objects=int(_field(payload, "n_objects", line_number)),
            policy_name=str(_field(payload, "policy", line_number)),
            seed=int(_field(payload, "seed", line_number)),
            trial_index=int(_field(payload, "trial_index", line_number)),
            environment=str(payload.get("environment", "")),
            variant=str(payload.get("variant", "")),
        )
        config = dict(_field(payload, "config", line_number))
        time_model = time_from_echo(config)
    except LogFormatError:
        raise
    except (ConfigError, TypeError, ValueError) as exc:
        raise LogFormatError(line_number, f"malformed trial record: {exc}") from exc
    if any(record.reward not in (0, 1) for record in log.records):
        raise LogFormatError(line_number, "rewards must be 0 or 1")
    return LoggedTrial(log, config, time_model)


def decode_heap(line: str, line_number: int = 1) -> HeapState:
    try:
        payload = json.loads(line)
        if payload.get("record") != HEAP:
            raise LogFormatError(line_number, "not a heap record")
        objects = {}
        for item in payload["objects"]:
            hidden = item["hidden"]
            probs = hidden["per_gripper_success_prob"]
            profile = FailureProfile(
                type_failing_grippers=frozenset(int(g) for g in hidden["type_failing_grippers"]),
                blocked_sites=frozenset(int(s) for s in hidden["blocked_sites"]),
                per_gripper_success_prob=None if probs is None else {int(g): float(p) for g, p in probs.items()},
            )
            sites = tuple(
                GraspSite(int(site_id), (float(x), float(y)), float(quality), bool(on_boundary))
                for site_id, x, y, quality, on_boundary in item["sites"]
            )
            center = (float(item["center"][0]), float(item["center"][1]))
            objects[int(item["object_id"])] = ObjectInstance(
                int(item["object_id"]), center, float(item["radius"]), sites, profile
            )
        width, height = payload["bin_dims"]
        return HeapState(
            (float(width), float(height)),
            objects,
            frozenset(int(object_id) for object_id in payload["remaining"]),
            int(payload["seed"]),
        )
    except LogFormatError:
        raise
    except (AttributeError, KeyError, TypeError, ValueError) as exc:
        raise LogFormatError(line_number, f"malformed heap record: {exc}") from exc


def _text(raw: Union[str, bytes], line_number: int) -> str:
    if isinstance(raw, str):
        return raw
    try:
        return raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise LogFormatError(line_number, f"not valid UTF-8 (byte {exc.start})") from exc


def iter_records(lines: Iterable[Union[str, bytes]]) -> Iterator[Tuple[int, Dict[str, Any]]]:
    """Yield ``(line_number, payload)`` for every non-blank line; accepts text or raw bytes."""
    for line_number, raw in enumerate(lines, start=1):
        line = _text(raw, line_number)
        if not line.strip():
            continue
        try:
            payload = json.loads(line)
        except json.JSONDecodeError as exc:
            raise LogFormatError(line_number, f"not valid JSON ({exc.msg})") from exc
        if not isinstance(payload, dict) or "record" not in payload:
            raise LogFormatError(line_number, "expected an object with a 'record' field")
        yield line_number, payload


def decode_log(lines: Iterable[Union[str, bytes]]) -> LogContents:
    manifests: List[Dict[str, Any]] = []
    trials: List[LoggedTrial] = []
    for line_number, payload in iter_records(lines):
        kind = payload["record"]
        if kind == MANIFEST:
            manifests.append(payload)
        elif kind == TRIAL:
            trials.append(_decode_trial(payload, line_number))
        else:
            raise LogFormatError(line_number, f"unknown record type {kind!r}")
    if not trials:
        raise LogFormatError(1, "the log holds no trial records")
    return LogContents(tuple(manifests), tuple(trials))


def read_log(path: Path) -> LogContents:
    # bytes, so a bad encoding is reported against its line
    with Path(path).open("rb") as handle:
        return decode_log(handle)


def write_lines(handle: TextIO, lines: Sequence[str]) -> None:
    for line in lines:
        handle.write(line)
        handle.write("\n")


def write_log(
    path: Path,
    manifest_line: str,
    batches: Sequence[Tuple[ExperimentConfig, Sequence[TrialLog]]],
    mode: str = "w",
) -> int:
    """Write (or append) one run to ``path``; returns the number of trial records written."""
    count = 0
    with Path(path).open(mode, encoding="utf-8", newline="\n") as handle:
        write_lines(handle, [manifest_line])
        for config, logs in batches:
            write_lines(handle, [encode_trial(log, config) for log in logs])
            count += len(logs)
    return count


def read_heaps(path: Path) -> Dict[int, HeapState]:
    heaps: Dict[int, HeapState] = {}
    with Path(path).open("r", encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, start=1):
            if line.strip():
                heap = decode_heap(line, line_number)
                index = int(json.loads(line)["trial_index"])
                heaps[index] = heap
    return heaps
