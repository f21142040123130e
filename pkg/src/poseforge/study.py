"""Study aggregation pipeline: trial planning, best-of-trials selection,
top-90% trimming, inter/intra-personal statistics, annotation timing, and
questionnaire score arithmetic.

All spreads are population standard deviations; that convention reproduces
the published per-dataset timing aggregates from their per-user means,
while the sample convention does not come close.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    MissingTrialsError,
    NoRecordsError,
    OutOfRangeError,
    ParseError,
)
from .geometry import RigidTransform
from .metrics import METRIC_KEYS, add_metric, pose_errors

TRIALS_PER_SAMPLE = 3

SUS_QUESTIONS = 10
# Standard SUS polarity: odd-numbered statements are positive, even ones
# negative (inverted before aggregation).
SUS_STANDARD_POLARITY = tuple(
    "positive" if i % 2 == 0 else "negative" for i in range(SUS_QUESTIONS)
)

TLX_DIMENSIONS = (
    "mental_demand",
    "physical_demand",
    "temporal_demand",
    "performance",
    "effort",
    "frustration",
)
TLX_MIN, TLX_MAX = 0.0, 20.0


@dataclass(frozen=True)
class AnnotationRecord:
    """One confirmed trial for one object."""

    user: str
    sample: str
    trial: int
    object_id: str
    pose: RigidTransform
    duration_s: float
    timestamp: str

    def __post_init__(self):
        if self.trial not in (0, 1, 2):
            raise ValueError(f"trial index must be 0, 1 or 2, got {self.trial}")
        if not (math.isfinite(self.duration_s) and self.duration_s > 0):
            raise ValueError(f"duration must be finite positive, got {self.duration_s}")


@dataclass(frozen=True)
class TrialPlan:
    """Three shuffled passes over the sample set."""

    entries: tuple[tuple[str, int], ...]
    seed: int


@dataclass(frozen=True)
class MetricStats:
    mean: float
    std: float
    count: int


@dataclass(frozen=True)
class SummaryStats:
    grouping: str  # "sample" or "user"
    groups: dict[str, dict[str, MetricStats]]


@dataclass(frozen=True)
class TimeTable:
    per_user: dict[str, MetricStats]  # seconds over each user's trials
    aggregate_mean: float
    aggregate_std: float


def population_std(values) -> float:
    v = np.asarray(list(values), dtype=np.float64)
    return float(np.sqrt(np.mean((v - v.mean()) ** 2)))


def make_trial_plan(samples, seed: int) -> TrialPlan:
    """Each sample appears once per repetition block, each block
    independently shuffled; reproducible from the seed."""
    sample_ids = [str(s) for s in samples]
    if not sample_ids:
        raise ValueError("sample list must be non-empty")
    rng = random.Random(seed)
    entries = []
    for repetition in range(TRIALS_PER_SAMPLE):
        block = list(sample_ids)
        rng.shuffle(block)
        entries.extend((sample_id, repetition) for sample_id in block)
    return TrialPlan(entries=tuple(entries), seed=seed)


def best_of_trials(records, mesh, gt: RigidTransform) -> AnnotationRecord:
    """The trial with the lowest ADD against the reference pose; exact ties
    go to the lowest trial index."""
    records = list(records)
    if not records:
        raise NoRecordsError("no trials to select from")
    return min(records, key=lambda r: (add_metric(mesh, r.pose, gt), r.trial))


def trim_top_90(values) -> list:
    """Keep the ceil(0.9 n) smallest values, preserving input order among
    the kept ones; ties at the cut keep the earlier index."""
    vals = list(values)
    if not vals:
        raise ValueError("cannot trim an empty list")
    keep = (9 * len(vals) + 9) // 10
    order = sorted(range(len(vals)), key=lambda i: (vals[i], i))
    kept_indices = sorted(order[:keep])
    return [vals[i] for i in kept_indices]


def _stats_of(values) -> MetricStats:
    trimmed = trim_top_90(values)
    v = np.asarray(trimmed, dtype=np.float64)
    return MetricStats(mean=float(v.mean()), std=population_std(v), count=len(v))


def inter_personal_stats(records, meshes: dict, gts: dict) -> SummaryStats:
    """Per-sample error spread across users, each user represented by their
    best-of-three trial against the ground truth.

    meshes: object id -> mesh; gts: (sample, object id) -> reference pose.
    """
    records = list(records)
    if not records:
        raise NoRecordsError("no annotation records")
    by_combo: dict[tuple[str, str, str], list[AnnotationRecord]] = {}
    for rec in records:
        by_combo.setdefault((rec.sample, rec.object_id, rec.user), []).append(rec)
    per_sample: dict[str, dict[str, list[float]]] = {}
    for (sample, object_id, _user), trials in sorted(by_combo.items()):
        mesh = meshes[object_id]
        gt = gts[(sample, object_id)]
        best = best_of_trials(trials, mesh, gt)
        errors = pose_errors(mesh, best.pose, gt)
        bucket = per_sample.setdefault(sample, {key: [] for key in METRIC_KEYS})
        for key, value in errors.as_dict().items():
            bucket[key].append(value)
    groups = {
        sample: {key: _stats_of(values) for key, values in buckets.items()}
        for sample, buckets in per_sample.items()
    }
    return SummaryStats(grouping="sample", groups=groups)


def intra_personal_stats(records, meshes: dict) -> SummaryStats:
    """Per-user consistency from all pairwise comparisons among each
    (user, sample) group's three trials; the ground truth is not used."""
    records = list(records)
    if not records:
        raise NoRecordsError("no annotation records")
    by_combo: dict[tuple[str, str, str], list[AnnotationRecord]] = {}
    for rec in records:
        by_combo.setdefault((rec.user, rec.sample, rec.object_id), []).append(rec)
    per_user: dict[str, dict[str, list[float]]] = {}
    for (user, sample, object_id), trials in sorted(by_combo.items()):
        if len(trials) != TRIALS_PER_SAMPLE:
            raise MissingTrialsError(
                f"user {user!r} sample {sample!r} object {object_id!r} has "
                f"{len(trials)} trials, expected {TRIALS_PER_SAMPLE}"
            )
        trials = sorted(trials, key=lambda r: r.trial)
        mesh = meshes[object_id]
        bucket = per_user.setdefault(user, {key: [] for key in METRIC_KEYS})
        for i in range(len(trials)):
            for j in range(i + 1, len(trials)):
                errors = pose_errors(mesh, trials[i].pose, trials[j].pose)
                for key, value in errors.as_dict().items():
                    bucket[key].append(value)
    groups = {
        user: {key: _stats_of(values) for key, values in buckets.items()}
        for user, buckets in per_user.items()
    }
    return SummaryStats(grouping="user", groups=groups)


def aggregate_user_means(means) -> tuple[float, float]:
    """Dataset-level timing aggregate: mean and population std over the
    per-user mean annotation times."""
    values = np.asarray(list(means), dtype=np.float64)
    if values.size == 0:
        raise ValueError("no per-user means to aggregate")
    return float(values.mean()), population_std(values)


def time_table(records) -> TimeTable:
    """Per-user mean annotation time plus the dataset aggregate over the
    per-user means."""
    durations: dict[str, list[float]] = {}
    for rec in records:
        durations.setdefault(rec.user, []).append(rec.duration_s)
    per_user = {
        user: MetricStats(
            mean=float(np.mean(vals)), std=population_std(vals), count=len(vals)
        )
        for user, vals in sorted(durations.items())
    }
    if per_user:
        mean, std = aggregate_user_means([s.mean for s in per_user.values()])
    else:
        mean, std = float("nan"), float("nan")
    return TimeTable(per_user=per_user, aggregate_mean=mean, aggregate_std=std)


def sus_adjust(responses, polarity=SUS_STANDARD_POLARITY) -> list[float]:
    """Usability-scale adjustment: positive statements kept, negative ones
    inverted as s -> 6 - s so every adjusted score reads positively."""
    scores = [float(v) for v in responses]
    if len(scores) != SUS_QUESTIONS:
        raise OutOfRangeError(f"expected {SUS_QUESTIONS} responses, got {len(scores)}")
    if len(polarity) != SUS_QUESTIONS:
        raise OutOfRangeError("polarity must cover all ten statements")
    adjusted = []
    for score, kind in zip(scores, polarity):
        if not 1.0 <= score <= 5.0:
            raise OutOfRangeError(f"responses must be in [1, 5], got {score}")
        if kind == "positive":
            adjusted.append(score)
        elif kind == "negative":
            adjusted.append(6.0 - score)
        else:
            raise OutOfRangeError(f"polarity must be positive/negative, got {kind!r}")
    return adjusted


def tlx_summary(responses_per_user) -> dict[str, MetricStats]:
    """Per-dimension mean/std of raw workload scores (0..20, unweighted)."""
    rows = [list(map(float, row)) for row in responses_per_user]
    if not rows:
        raise OutOfRangeError("need at least one response set")
    for row in rows:
        if len(row) != len(TLX_DIMENSIONS):
            raise OutOfRangeError(
                f"each response set must hold {len(TLX_DIMENSIONS)} scores"
            )
        for value in row:
            if not TLX_MIN <= value <= TLX_MAX:
                raise OutOfRangeError(f"scores must be in [0, 20], got {value}")
    data = np.asarray(rows, dtype=np.float64)
    return {
        dim: MetricStats(
            mean=float(data[:, i].mean()),
            std=population_std(data[:, i]),
            count=data.shape[0],
        )
        for i, dim in enumerate(TLX_DIMENSIONS)
    }


# -- annotation log -----------------------------------------------------------


def record_to_dict(record: AnnotationRecord) -> dict:
    return {
        "user": record.user,
        "sample": record.sample,
        "trial": record.trial,
        "object": record.object_id,
        "pose": [float(v) for v in record.pose.as_matrix().ravel()],
        "duration_s": record.duration_s,
        "timestamp": record.timestamp,
    }


def record_from_dict(data: dict) -> AnnotationRecord:
    try:
        pose = np.asarray([float(v) for v in data["pose"]], dtype=np.float64)
        if pose.size != 16:
            raise ValueError(f"pose must hold 16 values, got {pose.size}")
        return AnnotationRecord(
            user=str(data["user"]),
            sample=str(data["sample"]),
            trial=int(data["trial"]),
            object_id=str(data["object"]),
            pose=RigidTransform.from_matrix(pose.reshape(4, 4)),
            duration_s=float(data["duration_s"]),
            timestamp=str(data["timestamp"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed annotation record: {exc}") from exc


def append_annotation_record(path, record: AnnotationRecord) -> None:
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(json.dumps(record_to_dict(record), sort_keys=True) + "\n")


def write_annotation_log(path, records) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record_to_dict(record), sort_keys=True) + "\n")


def read_annotation_log(path) -> list[AnnotationRecord]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError, ValueError) as exc:
        raise ParseError(f"cannot read log {path}: {exc}") from exc
    records = []
    seen = set()
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            data = json.loads(line)
        except ValueError as exc:
            raise ParseError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
        record = record_from_dict(data)
        key = (record.user, record.sample, record.trial, record.object_id)
        if key in seen:
            raise ParseError(f"{path}:{lineno}: duplicate record for {key}")
        seen.add(key)
        records.append(record)
    return records
