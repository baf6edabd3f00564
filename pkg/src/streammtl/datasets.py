"""Data feeds: a synthetic rotated-boundary generator, CSV ingestion and
export, and the per-round stream scheduler.

The synthetic problem is binary classification in the plane with the
nonlinear boundary ``b = sin(3a)``. Task k sees the same point cloud family
but its boundary is evaluated on the point rotated by ``k * rotation_step``,
so tasks are related yet distinct. Features are the nine monomials of the
unrotated point up to degree three (1, a, b, a^2, ab, b^2, a^3, a^2 b,
a b^2); note b^3 is absent, so rotated boundaries are only approximately
representable, which keeps per-task components meaningful.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    ConfigError,
    DataFormatError,
    DimensionError,
    EmptyStreamError,
)
from .model import Sample

FEATURE_DIM = 9

CSV_SCHEMAS = ("task_column", "file_per_task")


def derive_seed(*parts: int) -> int:
    """Stable 64-bit sub-seed from integer key parts."""
    return int(np.random.SeedSequence(list(parts)).generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class SyntheticConfig:
    K: int
    n_per_task: int = 2000
    rotation_step: float = 0.45
    noise: float = 0.1
    seed: int = 0

    def __post_init__(self) -> None:
        if self.K < 1:
            raise ConfigError(f"K must be at least 1, got {self.K}")
        if self.n_per_task < 1:
            raise ConfigError(
                f"n_per_task must be at least 1, got {self.n_per_task}"
            )
        if not 0.0 <= self.noise < 0.5:
            raise ConfigError(f"noise must be in [0, 0.5), got {self.noise}")


@dataclass
class TaskStream:
    """Cycling feed of one task's samples.

    ``draw`` hands out samples in the current epoch order and advances the
    cursor; when an epoch is exhausted the stream wraps, reshuffling with a
    seed derived from (stream seed, epoch number) when ``epoch_reshuffle``
    is set. The cursor therefore always points at a valid sample.
    """

    task_index: int
    features: np.ndarray
    labels: np.ndarray
    seed: int = 0
    epoch_reshuffle: bool = True
    cursor: int = field(default=0, init=False)
    epoch: int = field(default=0, init=False)
    _order: np.ndarray | None = field(default=None, init=False, repr=False)

    def __post_init__(self) -> None:
        if self.features.ndim != 2:
            raise DimensionError("stream features must be a (n, d) matrix")
        if len(self.features) == 0:
            raise EmptyStreamError(f"task {self.task_index} has no samples")
        if self.labels.shape != (len(self.features),):
            raise DimensionError("labels must align with feature rows")
        bad = set(np.unique(self.labels)) - {-1, 1}
        if bad:
            raise DataFormatError(f"labels must be -1/+1, found {sorted(bad)}")

    def __len__(self) -> int:
        return len(self.features)

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def draw(self) -> Sample:
        idx = self.cursor if self._order is None else int(self._order[self.cursor])
        sample = Sample(self.features[idx], int(self.labels[idx]))
        self.cursor += 1
        if self.cursor >= len(self):
            self.cursor = 0
            self.epoch += 1
            if self.epoch_reshuffle:
                rng = np.random.default_rng([self.seed, self.epoch])
                self._order = rng.permutation(len(self))
        return sample

    def reset(self) -> None:
        self.cursor = 0
        self.epoch = 0
        self._order = None

    def positive_ratio(self) -> float:
        return float(np.mean(self.labels == 1))


@dataclass(frozen=True)
class DatasetManifest:
    name: str
    K: int
    d: int
    counts: tuple[int, ...]
    positive_ratios: tuple[float, ...]

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "K": self.K,
            "d": self.d,
            "counts": list(self.counts),
            "positive_ratios": list(self.positive_ratios),
        }


def _manifest(name: str, streams: Sequence[TaskStream]) -> DatasetManifest:
    return DatasetManifest(
        name=name,
        K=len(streams),
        d=streams[0].d,
        counts=tuple(len(s) for s in streams),
        positive_ratios=tuple(s.positive_ratio() for s in streams),
    )


def monomial_features(points: np.ndarray) -> np.ndarray:
    """Degree-3 monomial lift of (n, 2) points to the 9 feature columns."""
    a = points[:, 0]
    b = points[:, 1]
    return np.column_stack(
        [np.ones_like(a), a, b, a * a, a * b, b * b, a**3, a * a * b, a * b * b]
    )


def generate_synthetic(
    cfg: SyntheticConfig,
) -> tuple[list[TaskStream], DatasetManifest]:
    """Draw the K related tasks.

    Points are uniform on [-1, 1]^2; the label is the sign (ties positive)
    of ``b' - sin(3 a')`` where (a', b') is the point rotated by the task
    angle, flipped with probability ``noise``. Everything is a deterministic
    function of ``cfg.seed``; task k uses the sub-seed derived from
    (seed, k), so a prefix of tasks is unaffected by increasing K.
    """
    streams = []
    for k in range(cfg.K):
        rng = np.random.default_rng([cfg.seed, k])
        pts = rng.uniform(-1.0, 1.0, size=(cfg.n_per_task, 2))
        theta = k * cfg.rotation_step
        a_rot = pts[:, 0] * np.cos(theta) - pts[:, 1] * np.sin(theta)
        b_rot = pts[:, 0] * np.sin(theta) + pts[:, 1] * np.cos(theta)
        labels = np.where(b_rot - np.sin(3.0 * a_rot) >= 0.0, 1, -1).astype(np.int64)
        if cfg.noise > 0.0:
            flips = rng.random(cfg.n_per_task) < cfg.noise
            labels[flips] = -labels[flips]
        streams.append(
            TaskStream(
                task_index=k,
                features=monomial_features(pts),
                labels=labels,
                seed=derive_seed(cfg.seed, k),
            )
        )
    return streams, _manifest("synthetic", streams)


def next_round(streams: Sequence[TaskStream]) -> list[Sample]:
    """One fresh sample per task, ascending task order."""
    return [stream.draw() for stream in streams]


def reseed_streams(streams: Sequence[TaskStream], seed: int) -> None:
    """Re-derive every stream's shuffle seed from an experiment seed, so
    cycling order is a function of the experiment, not the data file."""
    for stream in streams:
        stream.seed = derive_seed(seed, stream.task_index)


# ---------------------------------------------------------------------------
# CSV ingestion and export
# ---------------------------------------------------------------------------


def _normalize_schema(schema: str) -> str:
    canon = schema.replace("-", "_")
    if canon not in CSV_SCHEMAS:
        raise ConfigError(
            f"schema must be one of {CSV_SCHEMAS} (hyphens accepted), got {schema!r}"
        )
    return canon


def _parse_label(token: str, line_no: int) -> int:
    try:
        value = float(token)
    except ValueError:
        raise DataFormatError(
            f"line {line_no}: label {token!r} is not numeric"
        ) from None
    if value not in (0.0, 1.0, -1.0):
        raise DataFormatError(
            f"line {line_no}: label must be one of 0, 1, -1, +1, got {token!r}"
        )
    return 1 if value == 1.0 else -1


def _parse_feature_header(header: list[str], path: Path) -> list[int]:
    """Positions of f0..f{d-1} in the header, validated contiguous."""
    feature_cols = [(name, i) for i, name in enumerate(header) if name.startswith("f")]
    indexed = []
    for name, pos in feature_cols:
        try:
            indexed.append((int(name[1:]), pos))
        except ValueError:
            raise DataFormatError(
                f"{path.name}: feature column {name!r} is not of the form f<index>"
            ) from None
    indexed.sort()
    expected = list(range(len(indexed)))
    if [i for i, _ in indexed] != expected or not indexed:
        raise DataFormatError(
            f"{path.name}: feature columns must be exactly f0..f{{d-1}}, "
            f"got {[name for name, _ in feature_cols]}"
        )
    return [pos for _, pos in indexed]


def _read_rows(path: Path, expect_task_id: bool):
    """Yield (line_no, task_id or None, label, feature floats) per data row."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError(f"{path.name}: missing header row") from None
        header = [h.strip() for h in header]
        if "label" not in header:
            raise DataFormatError(f"{path.name}: header has no 'label' column")
        has_task = "task_id" in header
        if expect_task_id and not has_task:
            raise DataFormatError(f"{path.name}: header has no 'task_id' column")
        if not expect_task_id and has_task:
            raise DataFormatError(
                f"{path.name}: unexpected 'task_id' column in file-per-task mode"
            )
        label_pos = header.index("label")
        task_pos = header.index("task_id") if has_task else None
        feat_pos = _parse_feature_header(header, path)
        width = len(header)
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != width:
                raise DataFormatError(
                    f"{path.name} line {line_no}: expected {width} fields, got {len(row)}"
                )
            label = _parse_label(row[label_pos].strip(), line_no)
            feats = np.empty(len(feat_pos))
            for j, pos in enumerate(feat_pos):
                token = row[pos].strip()
                try:
                    feats[j] = float(token)
                except ValueError:
                    raise DataFormatError(
                        f"{path.name} line {line_no}, column {header[pos]}: "
                        f"{token!r} is not numeric"
                    ) from None
            task = None
            if task_pos is not None:
                token = row[task_pos].strip()
                try:
                    task = int(token)
                except ValueError:
                    raise DataFormatError(
                        f"{path.name} line {line_no}: task_id {token!r} is not an integer"
                    ) from None
            yield line_no, task, label, feats


def load_csv(
    path: str | Path,
    schema: str = "task_column",
    *,
    seed: int = 0,
    epoch_reshuffle: bool = True,
) -> tuple[list[TaskStream], DatasetManifest]:
    """Load precomputed-feature tasks from CSV.

    ``task_column`` mode reads one file whose ``task_id`` column assigns
    rows to tasks (task indices are the sorted distinct ids, densely
    renumbered). ``file_per_task`` mode reads every ``*.csv`` in a
    directory, sorted by name, one task each, no ``task_id`` column.
    Labels 0 are normalized to -1. ``seed`` feeds the streams' cycling
    reshuffle only.
    """
    schema = _normalize_schema(schema)
    path = Path(path)
    if not path.exists():
        raise DataFormatError(f"dataset path {path} does not exist")

    groups: dict[int, tuple[list[np.ndarray], list[int]]] = {}
    if schema == "task_column":
        if path.is_dir():
            raise DataFormatError(
                f"{path} is a directory; task_column mode expects one file"
            )
        for _line, task, label, feats in _read_rows(path, expect_task_id=True):
            feats_list, labels_list = groups.setdefault(task, ([], []))
            feats_list.append(feats)
            labels_list.append(label)
        name = path.stem
    else:
        if not path.is_dir():
            raise DataFormatError(
                f"{path} is not a directory; file_per_task mode expects one"
            )
        files = sorted(path.glob("*.csv"))
        if not files:
            raise EmptyStreamError(f"no *.csv files under {path}")
        for idx, fp in enumerate(files):
            feats_list: list[np.ndarray] = []
            labels_list: list[int] = []
            for _line, _task, label, feats in _read_rows(fp, expect_task_id=False):
                feats_list.append(feats)
                labels_list.append(label)
            groups[idx] = (feats_list, labels_list)
        name = path.name

    if not groups:
        raise EmptyStreamError(f"{path} contains no data rows")

    streams = []
    widths = set()
    for rank, task in enumerate(sorted(groups)):
        feats_list, labels_list = groups[task]
        if not feats_list:
            raise EmptyStreamError(f"task {task} has no samples")
        features = np.stack(feats_list)
        widths.add(features.shape[1])
        streams.append(
            TaskStream(
                task_index=rank,
                features=features,
                labels=np.array(labels_list, dtype=np.int64),
                seed=derive_seed(seed, rank),
                epoch_reshuffle=epoch_reshuffle,
            )
        )
    if len(widths) != 1:
        raise DataFormatError(
            f"tasks disagree on feature dimension: {sorted(widths)}"
        )
    return streams, _manifest(name, streams)


def save_csv(
    streams: Sequence[TaskStream],
    path: str | Path,
    *,
    per_task_dir: bool = False,
) -> None:
    """Write streams back out in the ingestible format (storage order,
    full-precision floats, labels as -1/+1)."""
    path = Path(path)

    def write_file(fp: Path, items: Sequence[TaskStream], with_task: bool) -> None:
        d = items[0].d
        header = (["task_id"] if with_task else []) + ["label"] + [
            f"f{i}" for i in range(d)
        ]
        with open(fp, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for stream in items:
                for row in range(len(stream)):
                    rec = [str(stream.task_index)] if with_task else []
                    rec.append(str(int(stream.labels[row])))
                    rec.extend(repr(float(x)) for x in stream.features[row])
                    writer.writerow(rec)

    if per_task_dir:
        path.mkdir(parents=True, exist_ok=True)
        for stream in streams:
            write_file(path / f"task_{stream.task_index}.csv", [stream], False)
    else:
        path.parent.mkdir(parents=True, exist_ok=True)
        write_file(path, list(streams), True)
