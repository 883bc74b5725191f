"""Aggregate session records into recognition-study result tables.

Object identification uses a four-bucket decomposition of every
(trial, class) judgment opportunity over the eight object classes:

    present-correct    object in scene and marked          (hit)
    present-incorrect  object absent but marked            (false alarm)
    missing-correct    object absent and unmarked          (correct rejection)
    missing-incorrect  object in scene but not marked      (miss)

The buckets partition 100% of opportunities, and correct identification
is the sum of the two correct buckets. Room classification yields a
row-stochastic confusion matrix with per-room recall and precision.
Uncertainty on group scores is a normal-approximation 95% interval over
per-subject percentages.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Iterable, Mapping, Sequence

from .errors import ConsistencyError, InsufficientDataError, ParameterError
from .saliency import LIKERT_LEVELS, OBJECT_CLASSES, ROOM_TYPES
from .study import TrialRecord

__all__ = [
    "ObjectScores",
    "RoomScores",
    "GroupScores",
    "ScoreReport",
    "score_objects",
    "score_rooms",
    "likert_distribution",
    "ci95",
    "build_report",
    "report_to_dict",
    "format_text_table",
    "format_confusion_csv",
    "round_half_up",
]

GROUP_FIELDS = ("method", "kind", "view")


def round_half_up(value: float, ndigits: int = 0) -> float:
    """Decimal round-half-up, the display rounding used in all tables."""
    quantum = Decimal(1).scaleb(-ndigits)
    return float(Decimal(repr(value)).quantize(quantum, rounding=ROUND_HALF_UP))


@dataclass(frozen=True)
class ObjectScores:
    opportunities: int
    present_correct: int
    present_incorrect: int
    missing_correct: int
    missing_incorrect: int

    @property
    def pct_present_correct(self) -> float:
        return 100.0 * self.present_correct / self.opportunities

    @property
    def pct_present_incorrect(self) -> float:
        return 100.0 * self.present_incorrect / self.opportunities

    @property
    def pct_missing_correct(self) -> float:
        return 100.0 * self.missing_correct / self.opportunities

    @property
    def pct_missing_incorrect(self) -> float:
        return 100.0 * self.missing_incorrect / self.opportunities

    @property
    def pct_correct_identification(self) -> float:
        return self.pct_present_correct + self.pct_missing_correct


@dataclass(frozen=True)
class RoomScores:
    counts: tuple[tuple[int, ...], ...]  # [actual][predicted] trial counts
    n_trials: int

    @property
    def confusion(self) -> tuple[tuple[float, ...], ...]:
        """Row-normalized confusion matrix; rooms never shown give a zero row."""
        rows = []
        for row in self.counts:
            total = sum(row)
            rows.append(tuple(c / total if total else 0.0 for c in row))
        return tuple(rows)

    @property
    def recall(self) -> dict[str, float | None]:
        out = {}
        for i, room in enumerate(ROOM_TYPES):
            total = sum(self.counts[i])
            out[room] = 100.0 * self.counts[i][i] / total if total else None
        return out

    @property
    def precision(self) -> dict[str, float | None]:
        out = {}
        for j, room in enumerate(ROOM_TYPES):
            predicted = sum(self.counts[i][j] for i in range(len(ROOM_TYPES)))
            out[room] = 100.0 * self.counts[j][j] / predicted if predicted else None
        return out

    @property
    def pct_room_recognized(self) -> float:
        correct = sum(self.counts[i][i] for i in range(len(ROOM_TYPES)))
        return 100.0 * correct / self.n_trials


@dataclass(frozen=True)
class GroupScores:
    key: tuple[str, ...]
    n_trials: int
    n_subjects: int
    objects: ObjectScores
    rooms: RoomScores
    likert: dict[str, float]
    ci_identification: float | None
    ci_room: float | None


@dataclass(frozen=True)
class ScoreReport:
    group_by: tuple[str, ...]
    groups: tuple[GroupScores, ...]


Truth = Mapping[str, tuple[str, frozenset]]


def _lookup_truth(record: TrialRecord, truth: Truth) -> tuple[str, frozenset]:
    try:
        return truth[record.stimulus_id]
    except KeyError:
        raise ConsistencyError(
            f"record for trial {record.trial_index} references unknown "
            f"stimulus {record.stimulus_id!r}"
        ) from None


def score_objects(records: Sequence[TrialRecord], truth: Truth) -> ObjectScores:
    """Tally the four buckets over all (trial, class) opportunities."""
    if not records:
        raise ParameterError("cannot score an empty record set")
    hits = false_alarms = rejections = misses = 0
    for record in records:
        _, present = _lookup_truth(record, truth)
        for cls in OBJECT_CLASSES:
            in_scene = cls in present
            marked = cls in record.objects_marked
            if in_scene and marked:
                hits += 1
            elif not in_scene and marked:
                false_alarms += 1
            elif not in_scene:
                rejections += 1
            else:
                misses += 1
    return ObjectScores(
        opportunities=len(records) * len(OBJECT_CLASSES),
        present_correct=hits,
        present_incorrect=false_alarms,
        missing_correct=rejections,
        missing_incorrect=misses,
    )


def score_rooms(records: Sequence[TrialRecord], truth: Truth) -> RoomScores:
    """Count actual-vs-answered room pairs for the confusion matrix."""
    if not records:
        raise ParameterError("cannot score an empty record set")
    index = {room: i for i, room in enumerate(ROOM_TYPES)}
    counts = [[0] * len(ROOM_TYPES) for _ in ROOM_TYPES]
    for record in records:
        actual, _ = _lookup_truth(record, truth)
        counts[index[actual]][index[record.room_choice]] += 1
    return RoomScores(counts=tuple(tuple(row) for row in counts), n_trials=len(records))


def likert_distribution(records: Sequence[TrialRecord]) -> dict[str, float]:
    """Percentage of trials at each confidence level; always all five keys."""
    if not records:
        raise ParameterError("cannot score an empty record set")
    counts = {level: 0 for level in LIKERT_LEVELS}
    for record in records:
        counts[record.likert] += 1
    return {level: 100.0 * n / len(records) for level, n in counts.items()}


def ci95(per_subject_scores: Sequence[float]) -> float:
    """Half-width 1.96 * s / sqrt(n) over per-subject percentages."""
    n = len(per_subject_scores)
    if n < 2:
        raise InsufficientDataError(f"95% interval needs at least 2 subjects, got {n}")
    s = statistics.stdev(per_subject_scores)
    return 1.96 * s / math.sqrt(n)


def _group_key(record: TrialRecord, group_by: tuple[str, ...]) -> tuple[str, ...]:
    return tuple(str(getattr(record, f)) if getattr(record, f) is not None else "-" for f in group_by)


def build_report(
    rows: Iterable[tuple[str, TrialRecord]],
    truth: Truth,
    *,
    group_by: Sequence[str] = ("method", "kind"),
    include_late: bool = True,
) -> ScoreReport:
    """Score (subject_id, record) rows grouped by trial attributes.

    ``group_by`` is any subset of method/kind/view. Confidence intervals
    are computed over per-subject scores and omitted (None) for groups
    with fewer than two subjects.
    """
    group_by = tuple(group_by)
    bad = set(group_by) - set(GROUP_FIELDS)
    if bad:
        raise ParameterError(f"unknown group fields {sorted(bad)}; choose from {GROUP_FIELDS}")

    grouped: dict[tuple[str, ...], list[tuple[str, TrialRecord]]] = {}
    for subject_id, record in rows:
        if record.late and not include_late:
            continue
        grouped.setdefault(_group_key(record, group_by), []).append((subject_id, record))

    groups = []
    for key in sorted(grouped):
        pairs = grouped[key]
        records = [r for _, r in pairs]
        by_subject: dict[str, list[TrialRecord]] = {}
        for subject_id, record in pairs:
            by_subject.setdefault(subject_id, []).append(record)
        ident_scores = [
            score_objects(recs, truth).pct_correct_identification for recs in by_subject.values()
        ]
        room_scores = [
            score_rooms(recs, truth).pct_room_recognized for recs in by_subject.values()
        ]
        try:
            ci_ident: float | None = ci95(ident_scores)
            ci_room: float | None = ci95(room_scores)
        except InsufficientDataError:
            ci_ident = ci_room = None
        groups.append(
            GroupScores(
                key=key,
                n_trials=len(records),
                n_subjects=len(by_subject),
                objects=score_objects(records, truth),
                rooms=score_rooms(records, truth),
                likert=likert_distribution(records),
                ci_identification=ci_ident,
                ci_room=ci_room,
            )
        )
    return ScoreReport(group_by=group_by, groups=tuple(groups))


def report_to_dict(report: ScoreReport) -> dict:
    groups = []
    for g in report.groups:
        obj = g.objects
        groups.append(
            {
                "key": dict(zip(report.group_by, g.key)),
                "n_trials": g.n_trials,
                "n_subjects": g.n_subjects,
                "objects": {
                    "opportunities": obj.opportunities,
                    "present_correct": obj.present_correct,
                    "present_incorrect": obj.present_incorrect,
                    "missing_correct": obj.missing_correct,
                    "missing_incorrect": obj.missing_incorrect,
                    "pct_present_correct": obj.pct_present_correct,
                    "pct_present_incorrect": obj.pct_present_incorrect,
                    "pct_missing_correct": obj.pct_missing_correct,
                    "pct_missing_incorrect": obj.pct_missing_incorrect,
                    "pct_correct_identification": obj.pct_correct_identification,
                },
                "rooms": {
                    "counts": [list(row) for row in g.rooms.counts],
                    "confusion": [list(row) for row in g.rooms.confusion],
                    "recall": g.rooms.recall,
                    "precision": g.rooms.precision,
                    "pct_room_recognized": g.rooms.pct_room_recognized,
                },
                "likert": g.likert,
                "ci95": {
                    "pct_correct_identification": g.ci_identification,
                    "pct_room_recognized": g.ci_room,
                },
            }
        )
    return {"group_by": list(report.group_by), "groups": groups}


def _pct(value: float) -> str:
    return f"{round_half_up(value):.0f}"


def _with_ci(value: float, ci: float | None) -> str:
    text = _pct(value)
    if ci is not None:
        text += f" ±{round_half_up(ci, 2):.2f}"
    return text


def format_text_table(report: ScoreReport) -> str:
    """Aligned plain-text table: one row per group, columns as in the
    object-identification / room-recognition summaries."""
    header = (
        ["group"]
        + ["present %C", "present %I", "missing %C", "missing %I"]
        + ["% correct ident", "% room recog"]
        + list(LIKERT_LEVELS)
    )
    rows = [header]
    for g in report.groups:
        obj = g.objects
        rows.append(
            [" ".join(g.key)]
            + [
                _pct(obj.pct_present_correct),
                _pct(obj.pct_present_incorrect),
                _pct(obj.pct_missing_correct),
                _pct(obj.pct_missing_incorrect),
            ]
            + [
                _with_ci(obj.pct_correct_identification, g.ci_identification),
                _with_ci(g.rooms.pct_room_recognized, g.ci_room),
            ]
            + [_pct(g.likert[level]) for level in LIKERT_LEVELS]
        )
    widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
    lines = []
    for i, row in enumerate(rows):
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
        if i == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def format_confusion_csv(rooms: RoomScores) -> str:
    """Confusion matrix as CSV: 2-dp cells, recall column, precision row."""

    def cell(value: float | None, ndigits: int = 2) -> str:
        return "" if value is None else f"{round_half_up(value, ndigits):.{ndigits}f}"

    lines = ["actual\\predicted," + ",".join(ROOM_TYPES) + ",recall"]
    confusion = rooms.confusion
    recall = rooms.recall
    for i, room in enumerate(ROOM_TYPES):
        row_cells = [cell(v) for v in confusion[i]]
        lines.append(",".join([room] + row_cells + [cell(recall[room])]))
    precision = rooms.precision
    lines.append(",".join(["precision"] + [cell(precision[r]) for r in ROOM_TYPES] + [""]))
    return "\n".join(lines) + "\n"
