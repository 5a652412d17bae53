"""Dataset ingestion and synthetic stand-ins.

The EEG recognition dataset is a CSV of fixed-length segments, one row per
segment, with an original five-way label that collapses to a seizure /
non-seizure binary.  Subject identity drives the validation split; when no
identifier column is available, contiguous row blocks stand in for subjects
and the report says so.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError, SchemaError

SEGMENT_LENGTH = 178
EEG_SAMPLING_RATE = 173.61
N_PSEUDO_SUBJECTS = 100
SEIZURE_RAW_LABEL = 1


@dataclass(eq=False)
class EegDataset:
    """Fixed-length labeled segments with per-row subject identity."""

    segments: np.ndarray
    labels_raw: np.ndarray
    subject_ids: np.ndarray
    sampling_rate: float = EEG_SAMPLING_RATE
    pseudo_subjects: bool = False

    def __post_init__(self):
        self.segments = np.asarray(self.segments, dtype=float)
        self.labels_raw = np.asarray(self.labels_raw, dtype=np.int64)
        self.subject_ids = np.asarray(self.subject_ids)
        n = self.segments.shape[0]
        if self.labels_raw.shape != (n,) or self.subject_ids.shape != (n,):
            raise SchemaError("segments, labels and subject ids must align")

    @property
    def n_segments(self) -> int:
        return self.segments.shape[0]

    @property
    def seizure(self) -> np.ndarray:
        """Merged binary label: True iff the original label is the seizure class."""
        return self.labels_raw == SEIZURE_RAW_LABEL

    def validation_report(self) -> str:
        counts = {int(k): int(v) for k, v in
                  zip(*np.unique(self.labels_raw, return_counts=True))}
        lines = [
            f"rows: {self.n_segments}",
            f"samples per row: {self.segments.shape[1]}",
            f"raw class counts: {counts}",
            f"seizure rows: {int(self.seizure.sum())}",
            f"subjects: {np.unique(self.subject_ids).size}"
            + (" (pseudo-subjects from contiguous row blocks)" if self.pseudo_subjects else ""),
        ]
        return "\n".join(lines)


def _pseudo_subject_ids(n_rows: int, n_subjects: int = N_PSEUDO_SUBJECTS) -> np.ndarray:
    blocks = np.minimum((np.arange(n_rows) * n_subjects) // max(n_rows, 1),
                        n_subjects - 1)
    return np.array([f"s{b:03d}" for b in blocks])


def ingest_uci_eeg(path, label_column: str | None = None,
                   id_column: str | None = None, verbose: bool = True) -> EegDataset:
    """Parse the recognition CSV into an :class:`EegDataset`.

    Expects a header and one row per segment with 178 sample values and a
    final label in 1..5.  ``id_column`` names the subject identifier column;
    without it, 100 pseudo-subjects are derived from contiguous row blocks
    and flagged in the validation report.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        rows = list(reader)
    header = [h.strip() for h in header]
    label_name = label_column or header[-1]
    if label_name not in header:
        raise SchemaError(f"{path}: missing label column {label_name!r}")
    label_idx = header.index(label_name)
    id_idx = None
    if id_column:
        if id_column not in header:
            raise SchemaError(f"{path}: missing id column {id_column!r}")
        id_idx = header.index(id_column)
    sample_idx = [i for i in range(len(header)) if i not in (label_idx, id_idx)]
    row_id_idx = None
    if id_idx is None and len(sample_idx) == SEGMENT_LENGTH + 1:
        # common distribution carries an unnamed per-row identifier column;
        # exclude it from the samples but do not mistake it for a subject id
        first = sample_idx[0]
        looks_like_id = header[first] in ("", "id", "Unnamed: 0")
        if not looks_like_id and rows:
            try:
                float(rows[0][first])
            except ValueError:
                looks_like_id = True
        if looks_like_id:
            row_id_idx = first
            sample_idx = sample_idx[1:]
    if len(sample_idx) != SEGMENT_LENGTH:
        raise SchemaError(
            f"{path}: expected {SEGMENT_LENGTH} sample columns, found {len(sample_idx)}")
    segments = np.empty((len(rows), SEGMENT_LENGTH))
    labels = np.empty(len(rows), dtype=np.int64)
    ids = []
    for r, row in enumerate(rows):
        rownum = r + 2  # 1-based, after the header
        if len(row) != len(header):
            raise SchemaError(f"{path}: row {rownum} has {len(row)} values, expected {len(header)}")
        try:
            segments[r] = [float(row[i]) for i in sample_idx]
            labels[r] = int(float(row[label_idx]))
        except ValueError as exc:
            raise SchemaError(f"{path}: row {rownum} is not numeric: {exc}") from None
        if not 1 <= labels[r] <= 5:
            raise SchemaError(f"{path}: row {rownum} label {labels[r]} outside 1..5")
        if id_idx is not None:
            ids.append(row[id_idx])
    if id_idx is not None:
        subject_ids = np.array(ids)
        pseudo = False
    else:
        subject_ids = _pseudo_subject_ids(len(rows))
        pseudo = True
    ds = EegDataset(segments, labels, subject_ids, pseudo_subjects=pseudo)
    if verbose:
        if row_id_idx is not None:
            print(f"note: column {row_id_idx} treated as a per-row identifier, excluded from samples")
        print(ds.validation_report())
    return ds


def emit_eeg_csv(dataset: EegDataset, path) -> None:
    """Write a dataset back out in the ingestion schema (id, X1..X178, y)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id"] + [f"X{i + 1}" for i in range(dataset.segments.shape[1])] + ["y"])
        for i in range(dataset.n_segments):
            writer.writerow([str(dataset.subject_ids[i])]
                            + [repr(float(v)) for v in dataset.segments[i]]
                            + [int(dataset.labels_raw[i])])


def synthetic_two_class_dataset(n_per_class: int = 300, n_subjects: int = 20,
                                seed: int = 0, segment_length: int = SEGMENT_LENGTH,
                                sampling_rate: float = EEG_SAMPLING_RATE,
                                peak_low_hz: float = 5.0, peak_high_hz: float = 40.0,
                                pole_radius: float = 0.95) -> EegDataset:
    """Two-class surrogate with distinct spectral peaks.

    Class 1 (the stand-in seizure class) is an AR(2) process resonant at
    ``peak_low_hz``; class 2 resonates at ``peak_high_hz``.  Subjects are
    contiguous blocks containing both classes, so subject-held-out splits
    remain label-balanced.
    """
    if n_per_class < n_subjects:
        raise InvalidParameterError("need at least one segment per class per subject")
    rng = np.random.default_rng(seed)

    def ar2_coeffs(peak_hz):
        theta = 2.0 * np.pi * peak_hz / sampling_rate
        return np.array([2.0 * pole_radius * np.cos(theta), -pole_radius ** 2])

    coeffs = {1: ar2_coeffs(peak_low_hz), 2: ar2_coeffs(peak_high_hz)}
    segments, labels, subjects = [], [], []
    per_subject = n_per_class // n_subjects
    extra = n_per_class - per_subject * n_subjects
    for s in range(n_subjects):
        quota = per_subject + (1 if s < extra else 0)
        for label in (1, 2):
            a = coeffs[label]
            for _ in range(quota):
                burn = 100
                x = np.zeros(segment_length + burn)
                eps = rng.standard_normal(segment_length + burn)
                for t in range(2, x.size):
                    x[t] = a[0] * x[t - 1] + a[1] * x[t - 2] + eps[t]
                segments.append(x[burn:])
                labels.append(label)
                subjects.append(f"s{s:03d}")
    return EegDataset(np.asarray(segments), np.asarray(labels),
                      np.asarray(subjects), sampling_rate=sampling_rate)
