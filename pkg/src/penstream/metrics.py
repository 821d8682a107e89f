"""Per-stroke, per-radical, and per-character handwriting measures.

Stroke-level values are the base; radical and character values are
compositions of them, and the additivity identities (character length =
sum of radical lengths = sum of stroke lengths; radical duration = sum
of member durations plus internal latencies) hold exactly, not just to
rounding.  Distances are converted from device units to millimeters by
the tablet's lpmm at computation time; times stay in milliseconds.

Latencies are relative: a unit's latency is the time from the previous
unit's offset to this unit's onset, so the first stroke and first
radical carry no latency (None internally, the "NA" token on export).
Character latency is absolute, measured from the audio stimulus offset.

Output is long format: one row per (sub-)stroke, with its radical's and
character's values repeated alongside, 21 columns in fixed order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .model import SegmentTree, TabletSpec, TrialRecord
from .segmentation import effective_onset_index

METRIC_COLUMNS = (
    "Subject",
    "DV_TRIAL_ID",
    "ROW_INDEX",
    "self_report",
    "target",
    "char_dur",
    "char_rt",
    "char_len",
    "char_press_avg",
    "rad_label",
    "rad_dur",
    "rad_rt_rel",
    "rad_len",
    "rad_dist",
    "rad_press_avg",
    "stroke_label",
    "stroke_dur",
    "stroke_rt_rel",
    "stroke_len",
    "stroke_dist",
    "stroke_press_avg",
)

NA = "NA"


class EmptyTree(ValueError):
    def __init__(self) -> None:
        super().__init__("trial has no strokes; nothing to measure")


@dataclass(frozen=True)
class StrokeMetrics:
    stroke_label: int
    stroke_rt_rel: float | None
    stroke_dur: float
    stroke_len: float
    stroke_dist: float | None
    stroke_press_avg: float
    abs_rt: float


@dataclass(frozen=True)
class RadicalMetrics:
    rad_label: str
    rad_rt_rel: float | None
    rad_dur: float
    rad_len: float
    rad_dist: float | None
    rad_press_avg: float


@dataclass(frozen=True)
class CharacterMetrics:
    char_rt: float
    char_dur: float
    char_len: float
    char_press_avg: float


@dataclass(frozen=True)
class TrialMetrics:
    character: CharacterMetrics
    radicals: tuple[RadicalMetrics, ...]
    strokes: tuple[StrokeMetrics, ...]
    # radical index owning each stroke, parallel to strokes
    stroke_radical: tuple[int, ...]


@dataclass(frozen=True)
class MetricRow:
    subject: str
    dv_trial_id: int
    row_index: int
    self_report: int
    target: str
    char_dur: float
    char_rt: float
    char_len: float
    char_press_avg: float
    rad_label: str
    rad_dur: float
    rad_rt_rel: float | None
    rad_len: float
    rad_dist: float | None
    rad_press_avg: float
    stroke_label: int
    stroke_dur: float
    stroke_rt_rel: float | None
    stroke_len: float
    stroke_dist: float | None
    stroke_press_avg: float


def _path_length(trial: TrialRecord, first: int, last: int) -> float:
    total = 0.0
    for i in range(first, last):
        a, b = trial.samples[i], trial.samples[i + 1]
        total += math.hypot(b.x - a.x, b.y - a.y)
    return total


def compute_trial_metrics(
    trial: TrialRecord, tree: SegmentTree, spec: TabletSpec
) -> TrialMetrics:
    """All three metric levels for one trial; raises EmptyTree if no strokes."""
    if not tree.strokes:
        raise EmptyTree()
    samples = trial.samples
    lpmm = spec.lpmm

    strokes: list[StrokeMetrics] = []
    for i, span in enumerate(tree.strokes):
        onset_idx = effective_onset_index(span)
        onset_t = samples[onset_idx].t
        offset_t = samples[span.last_index].t
        if i == 0:
            rt_rel = None
            dist = None
        else:
            prev_last = tree.strokes[i - 1].last_index
            rt_rel = onset_t - samples[prev_last].t
            dist = (
                math.hypot(
                    samples[onset_idx].x - samples[prev_last].x,
                    samples[onset_idx].y - samples[prev_last].y,
                )
                / lpmm
            )
        pressures = [samples[j].pressure for j in range(span.first_index, span.last_index + 1)]
        strokes.append(
            StrokeMetrics(
                stroke_label=i + 1,
                stroke_rt_rel=rt_rel,
                stroke_dur=offset_t - onset_t,
                stroke_len=_path_length(trial, onset_idx, span.last_index) / lpmm,
                stroke_dist=dist,
                stroke_press_avg=sum(pressures) / len(pressures),
                abs_rt=onset_t - trial.aud_offset,
            )
        )

    radicals: list[RadicalMetrics] = []
    stroke_radical = [0] * len(tree.strokes)
    for r, radical in enumerate(tree.radicals):
        for idx in radical.stroke_indices:
            stroke_radical[idx] = r
        first_m = radical.stroke_indices[0]
        last_m = radical.stroke_indices[-1]
        onset_t = samples[effective_onset_index(tree.strokes[first_m])].t
        offset_t = samples[tree.strokes[last_m].last_index].t
        pressures = [
            samples[j].pressure
            for idx in radical.stroke_indices
            for j in range(
                tree.strokes[idx].first_index, tree.strokes[idx].last_index + 1
            )
        ]
        radicals.append(
            RadicalMetrics(
                rad_label=radical.label,
                rad_rt_rel=strokes[first_m].stroke_rt_rel,
                rad_dur=offset_t - onset_t,
                rad_len=sum(strokes[idx].stroke_len for idx in radical.stroke_indices),
                rad_dist=strokes[first_m].stroke_dist,
                rad_press_avg=sum(pressures) / len(pressures),
            )
        )

    first_pressed = samples[tree.strokes[0].first_index]
    last_pressed = samples[tree.strokes[-1].last_index]
    all_pressures = [
        samples[j].pressure
        for span in tree.strokes
        for j in range(span.first_index, span.last_index + 1)
    ]
    character = CharacterMetrics(
        char_rt=first_pressed.t - trial.aud_offset,
        char_dur=last_pressed.t - first_pressed.t,
        char_len=sum(s.stroke_len for s in strokes),
        char_press_avg=sum(all_pressures) / len(all_pressures),
    )
    return TrialMetrics(
        character=character,
        radicals=tuple(radicals),
        strokes=tuple(strokes),
        stroke_radical=tuple(stroke_radical),
    )


def compute_metrics(
    trial: TrialRecord, tree: SegmentTree, spec: TabletSpec
) -> list[MetricRow]:
    """Long-format rows, one per (sub-)stroke, character/radical values repeated."""
    tm = compute_trial_metrics(trial, tree, spec)
    rows = []
    for stroke, r in zip(tm.strokes, tm.stroke_radical):
        radical = tm.radicals[r]
        rows.append(
            MetricRow(
                subject=trial.subject_id,
                dv_trial_id=trial.trial_id,
                row_index=trial.row_index,
                self_report=trial.self_report,
                target=trial.target,
                char_dur=tm.character.char_dur,
                char_rt=tm.character.char_rt,
                char_len=tm.character.char_len,
                char_press_avg=tm.character.char_press_avg,
                rad_label=radical.rad_label,
                rad_dur=radical.rad_dur,
                rad_rt_rel=radical.rad_rt_rel,
                rad_len=radical.rad_len,
                rad_dist=radical.rad_dist,
                rad_press_avg=radical.rad_press_avg,
                stroke_label=stroke.stroke_label,
                stroke_dur=stroke.stroke_dur,
                stroke_rt_rel=stroke.stroke_rt_rel,
                stroke_len=stroke.stroke_len,
                stroke_dist=stroke.stroke_dist,
                stroke_press_avg=stroke.stroke_press_avg,
            )
        )
    return rows


def first_member_consistency(rows: list[MetricRow]) -> list[str]:
    """Definitional cross-checks on one trial's rows.

    A radical's latency and distance are measured at its first member
    stroke, so the radical columns must repeat that stroke's values.
    Returns one message per violated radical, empty when consistent.
    """
    violations = []
    seen: set[str] = set()
    for row in rows:
        if row.rad_label in seen:
            continue
        seen.add(row.rad_label)
        if row.rad_rt_rel != row.stroke_rt_rel:
            violations.append(
                f"radical {row.rad_label}: rad_rt_rel {row.rad_rt_rel} != "
                f"first stroke rt_rel {row.stroke_rt_rel}"
            )
        if row.rad_dist != row.stroke_dist:
            violations.append(
                f"radical {row.rad_label}: rad_dist {row.rad_dist} != "
                f"first stroke dist {row.stroke_dist}"
            )
    return violations


def format_time(value: float | None) -> str:
    return NA if value is None else str(round(value))


def format_pressure(value: float | None) -> str:
    return NA if value is None else str(round(value))


def _trim(text: str) -> str:
    return text.rstrip("0").rstrip(".") if "." in text else text


def format_length(value: float | None, decimals: int = 3) -> str:
    if value is None:
        return NA
    return _trim(f"{value:.{decimals}f}")


def format_metric_row(row: MetricRow) -> tuple[str, ...]:
    """Export form of one row.

    Times and pressures round to whole numbers; lengths keep 3 decimals
    (trailing zeros trimmed) except char_len, which is reported at 2.
    """
    return (
        row.subject,
        str(row.dv_trial_id),
        str(row.row_index),
        str(row.self_report),
        row.target,
        format_time(row.char_dur),
        format_time(row.char_rt),
        format_length(row.char_len, decimals=2),
        format_pressure(row.char_press_avg),
        row.rad_label,
        format_time(row.rad_dur),
        format_time(row.rad_rt_rel),
        format_length(row.rad_len),
        format_length(row.rad_dist),
        format_pressure(row.rad_press_avg),
        str(row.stroke_label),
        format_time(row.stroke_dur),
        format_time(row.stroke_rt_rel),
        format_length(row.stroke_len),
        format_length(row.stroke_dist),
        format_pressure(row.stroke_press_avg),
    )


def serialize_metric_rows(rows: list[MetricRow]) -> str:
    lines = ["\t".join(METRIC_COLUMNS)]
    for row in rows:
        lines.append("\t".join(format_metric_row(row)))
    return "\n".join(lines) + "\n"


def parse_metric_rows(text: str) -> list[MetricRow]:
    """Read a long-format file back, at the precision it was exported with."""
    lines = [l for l in text.splitlines() if l.strip()]
    if not lines:
        raise ValueError("empty metric file")
    header = lines[0].split("\t")
    if tuple(header) != METRIC_COLUMNS:
        raise ValueError(f"expected columns {METRIC_COLUMNS}, got {tuple(header)}")

    def opt(token: str) -> float | None:
        return None if token == NA else float(token)

    rows = []
    for number, line in enumerate(lines[1:], start=2):
        f = line.split("\t")
        if len(f) != len(METRIC_COLUMNS):
            raise ValueError(f"line {number}: expected {len(METRIC_COLUMNS)} fields")
        rows.append(
            MetricRow(
                subject=f[0],
                dv_trial_id=int(f[1]),
                row_index=int(f[2]),
                self_report=int(f[3]),
                target=f[4],
                char_dur=float(f[5]),
                char_rt=float(f[6]),
                char_len=float(f[7]),
                char_press_avg=float(f[8]),
                rad_label=f[9],
                rad_dur=float(f[10]),
                rad_rt_rel=opt(f[11]),
                rad_len=float(f[12]),
                rad_dist=opt(f[13]),
                rad_press_avg=float(f[14]),
                stroke_label=int(f[15]),
                stroke_dur=float(f[16]),
                stroke_rt_rel=opt(f[17]),
                stroke_len=float(f[18]),
                stroke_dist=opt(f[19]),
                stroke_press_avg=float(f[20]),
            )
        )
    return rows
