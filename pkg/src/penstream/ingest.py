"""Parsers and serializers for the text reports the pipeline exchanges.

Three file families are handled here, all delimiter-separated text with a
header row (tab preferred, comma accepted; the delimiter is auto-detected
from the header line):

* pen sample report -- one row per digitizer sample, grouped into trials
  by (subject, trial id).  Required columns: subject, DV_TRIAL_ID, time,
  x, y, pressure.  Optional trial-variable columns (DV_AUD_ONSET,
  DV_AUD_OFFSET, DV_TRIAL_START, DV_TRIAL_END, self_report, target,
  ROW_INDEX, revised) are read from the first row of each trial.
* segments report -- labeled time spans per trial, one of the levels
  character / radical / stroke per row.
* condition file -- the trial-definition table whose placeholder values
  must be typed like the values that will replace them.

Column-name matching is case-insensitive; an alias map handles local
naming variants.  Timestamps are normalized to milliseconds at parse
time (``units="s"`` scales by 1000); everything downstream assumes ms.
Rows with non-numeric sample fields are hard errors, never skipped:
silently dropping samples would corrupt every derived latency.
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import PenSample, TrialRecord

SEGMENT_LEVELS = ("character", "radical", "stroke")

REQUIRED_SAMPLE_COLUMNS = ("subject", "dv_trial_id", "time", "x", "y", "pressure")

# Canonical lowercase name -> accepted alternates, also lowercase.
DEFAULT_ALIASES: dict[str, tuple[str, ...]] = {
    "subject": ("participant_id", "subject_id"),
    "time": ("t", "timestamp"),
    "dv_trial_id": ("trial_id",),
}

SAMPLE_REPORT_COLUMNS = (
    "subject",
    "DV_TRIAL_ID",
    "ROW_INDEX",
    "time",
    "x",
    "y",
    "pressure",
    "DV_AUD_ONSET",
    "DV_AUD_OFFSET",
    "DV_TRIAL_START",
    "DV_TRIAL_END",
    "self_report",
    "target",
    "revised",
)

SEGMENTS_REPORT_COLUMNS = ("subject", "DV_TRIAL_ID", "level", "label", "t_start", "t_end")

CONDITION_REQUIRED_COLUMNS = (
    "DV_TRIAL_ID",
    "DV_AUD_ONSET",
    "DV_AUD_OFFSET",
    "DV_TRIAL_START",
    "DV_TRIAL_END",
    "ROW_INDEX",
)

# Placeholder typing rules: integer-typed columns take integer literals
# (-1), real-typed take decimal literals (-1.1), string-typed must not
# parse as numbers ("x").
CONDITION_INTEGER_COLUMNS = ("DV_TRIAL_ID", "self_report")
CONDITION_REAL_COLUMNS = ("DV_AUD_ONSET", "DV_AUD_OFFSET", "DV_TRIAL_START", "DV_TRIAL_END")
# Content columns hold filenames, carrier phrases, and characters; none
# of those may collapse to a bare number.
CONDITION_STRING_COLUMNS = ("audio_name", "text", "target", "participant_id")


class ReportError(ValueError):
    """Base class for report parsing failures."""


class MissingColumn(ReportError):
    def __init__(self, name: str):
        super().__init__(f"missing column {name}")
        self.name = name


class MalformedRow(ReportError):
    def __init__(self, line_number: int, reason: str):
        super().__init__(f"line {line_number}: {reason}")
        self.line_number = line_number
        self.reason = reason


class EmptyReport(ReportError):
    def __init__(self) -> None:
        super().__init__("report has no header line")


class OverlappingSpans(ReportError):
    def __init__(self, trial: tuple[str, int], level: str):
        super().__init__(f"overlapping {level} spans in trial {trial}")
        self.trial = trial
        self.level = level


@dataclass(frozen=True)
class SegmentSpan:
    subject: str
    trial_id: int
    level: str
    label: str
    t_start: float
    t_end: float


@dataclass(frozen=True)
class SegmentsReport:
    spans: tuple[SegmentSpan, ...]

    def for_trial(self, subject: str, trial_id: int, level: str) -> tuple[SegmentSpan, ...]:
        return tuple(
            s
            for s in self.spans
            if s.subject == subject and s.trial_id == trial_id and s.level == level
        )


@dataclass(frozen=True)
class ConditionTable:
    header: tuple[str, ...]
    rows: tuple[tuple[str, ...], ...]

    def column(self, name: str) -> tuple[str, ...] | None:
        for i, col in enumerate(self.header):
            if col.lower() == name.lower():
                return tuple(row[i] for row in self.rows)
        return None


def detect_delimiter(header_line: str) -> str:
    """A header containing tabs selects tab; otherwise comma."""
    return "\t" if "\t" in header_line else ","


def _lines(text: str) -> list[tuple[int, str]]:
    out = []
    for number, line in enumerate(text.splitlines(), start=1):
        if line.strip():
            out.append((number, line))
    return out


def _resolve_columns(
    header: list[str],
    required: tuple[str, ...],
    aliases: dict[str, tuple[str, ...]] | None,
) -> dict[str, int]:
    """Map canonical column names to header indices, exact names first."""
    merged = dict(DEFAULT_ALIASES)
    if aliases:
        for key, names in aliases.items():
            base = merged.get(key.lower(), ())
            merged[key.lower()] = tuple(n.lower() for n in names) + base
    lowered = [h.strip().lower() for h in header]
    index: dict[str, int] = {}
    for canonical in set(required) | set(merged):
        if canonical in lowered:
            index[canonical] = lowered.index(canonical)
            continue
        for alias in merged.get(canonical, ()):
            if alias in lowered:
                index[canonical] = lowered.index(alias)
                break
    for name in required:
        if name not in index:
            raise MissingColumn(name if name != "dv_trial_id" else "DV_TRIAL_ID")
    # Optional columns resolve by their own (lowercased) names.
    for i, name in enumerate(lowered):
        index.setdefault(name, i)
    return index


def _parse_float(token: str, line_number: int, column: str) -> float:
    try:
        return float(token)
    except ValueError:
        raise MalformedRow(line_number, f"non-numeric {column}: {token!r}") from None


def _parse_int(token: str, line_number: int, column: str) -> int:
    try:
        return int(token)
    except ValueError:
        try:
            value = float(token)
        except ValueError:
            raise MalformedRow(line_number, f"non-integer {column}: {token!r}") from None
        if value != int(value):
            raise MalformedRow(line_number, f"non-integer {column}: {token!r}") from None
        return int(value)


def parse_pen_sample_report(
    text: str,
    units: str = "ms",
    aliases: dict[str, tuple[str, ...]] | None = None,
) -> list[TrialRecord]:
    """Parse a pen sample report into TrialRecords, one per (subject, trial).

    Samples are re-sorted ascending by t within each trial.  Trials come
    back in order of first appearance in the file.  ``units`` declares
    the report's time base ("ms" or "s"); all returned times are ms.
    """
    if units not in ("ms", "s"):
        raise ValueError(f"units must be 'ms' or 's', got {units!r}")
    scale = 1000.0 if units == "s" else 1.0
    lines = _lines(text)
    if not lines:
        raise EmptyReport()
    header_number, header_line = lines[0]
    delimiter = detect_delimiter(header_line)
    header = header_line.split(delimiter)
    columns = _resolve_columns(header, REQUIRED_SAMPLE_COLUMNS, aliases)

    groups: dict[tuple[str, int], dict] = {}
    for line_number, line in lines[1:]:
        fields = line.split(delimiter)
        if len(fields) != len(header):
            raise MalformedRow(
                line_number, f"expected {len(header)} fields, got {len(fields)}"
            )

        def field(name: str) -> str | None:
            i = columns.get(name)
            return fields[i].strip() if i is not None else None

        subject = field("subject") or ""
        trial_id = _parse_int(field("dv_trial_id"), line_number, "DV_TRIAL_ID")
        sample = PenSample(
            t=_parse_float(field("time"), line_number, "time") * scale,
            x=_parse_float(field("x"), line_number, "x"),
            y=_parse_float(field("y"), line_number, "y"),
            pressure=_parse_float(field("pressure"), line_number, "pressure"),
        )
        group = groups.setdefault((subject, trial_id), {"samples": [], "meta": {}})
        group["samples"].append(sample)
        meta = group["meta"]
        if not meta:
            for name in ("dv_aud_onset", "dv_aud_offset", "dv_trial_start", "dv_trial_end"):
                token = field(name)
                if token is not None and token != "":
                    meta[name] = _parse_float(token, line_number, name.upper()) * scale
            for name in ("self_report", "row_index", "revised"):
                token = field(name)
                if token is not None and token != "":
                    meta[name] = _parse_int(token, line_number, name)
            target = field("target")
            if target is not None:
                meta["target"] = target

    trials = []
    for (subject, trial_id), group in groups.items():
        samples = tuple(sorted(group["samples"], key=lambda s: s.t))
        meta = group["meta"]
        times = [s.t for s in samples]
        aud_onset = meta.get("dv_aud_onset", 0.0)
        aud_offset = meta.get("dv_aud_offset", aud_onset)
        trial_start = meta.get("dv_trial_start", min(times + [aud_onset]))
        trial_end = meta.get("dv_trial_end", max(times + [aud_offset]))
        trials.append(
            TrialRecord(
                subject_id=subject,
                trial_id=trial_id,
                row_index=meta.get("row_index", 0),
                target=meta.get("target", ""),
                self_report=meta.get("self_report", 0),
                aud_onset=aud_onset,
                aud_offset=aud_offset,
                trial_start=trial_start,
                trial_end=trial_end,
                samples=samples,
                revised=bool(meta.get("revised", 0)),
            )
        )
    return trials


def _number(value: float) -> str:
    # repr round-trips float64 exactly, which the serializer relies on.
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def serialize_pen_sample_report(trials: list[TrialRecord]) -> str:
    """Serialize trials so that re-parsing reproduces them field-for-field.

    Rows are grouped by subject then trial id (stable sort).
    """
    lines = ["\t".join(SAMPLE_REPORT_COLUMNS)]
    ordered = sorted(trials, key=lambda t: (t.subject_id, t.trial_id))
    for trial in ordered:
        for sample in trial.samples:
            lines.append(
                "\t".join(
                    (
                        trial.subject_id,
                        str(trial.trial_id),
                        str(trial.row_index),
                        _number(sample.t),
                        _number(sample.x),
                        _number(sample.y),
                        _number(sample.pressure),
                        _number(trial.aud_onset),
                        _number(trial.aud_offset),
                        _number(trial.trial_start),
                        _number(trial.trial_end),
                        str(trial.self_report),
                        trial.target,
                        str(int(trial.revised)),
                    )
                )
            )
    return "\n".join(lines) + "\n"


def parse_segments_report(text: str) -> SegmentsReport:
    """Parse labeled spans; rejects same-level overlaps within a trial.

    Overlap is an annotation error the UI must fix before the report can
    drive segmentation, so it raises rather than reports.
    """
    lines = _lines(text)
    if not lines:
        raise EmptyReport()
    _, header_line = lines[0]
    delimiter = detect_delimiter(header_line)
    header = [h.strip().lower() for h in header_line.split(delimiter)]
    required = ("subject", "dv_trial_id", "level", "label", "t_start", "t_end")
    for name in required:
        if name not in header:
            raise MissingColumn(name if name != "dv_trial_id" else "DV_TRIAL_ID")
    index = {name: header.index(name) for name in required}

    spans = []
    for line_number, line in lines[1:]:
        fields = line.split(delimiter)
        if len(fields) != len(header):
            raise MalformedRow(
                line_number, f"expected {len(header)} fields, got {len(fields)}"
            )
        level = fields[index["level"]].strip().lower()
        if level not in SEGMENT_LEVELS:
            raise MalformedRow(line_number, f"unknown segment level {level!r}")
        spans.append(
            SegmentSpan(
                subject=fields[index["subject"]].strip(),
                trial_id=_parse_int(fields[index["dv_trial_id"]], line_number, "DV_TRIAL_ID"),
                level=level,
                label=fields[index["label"]].strip(),
                t_start=_parse_float(fields[index["t_start"]], line_number, "t_start"),
                t_end=_parse_float(fields[index["t_end"]], line_number, "t_end"),
            )
        )

    by_trial_level: dict[tuple[str, int, str], list[SegmentSpan]] = {}
    for span in spans:
        by_trial_level.setdefault((span.subject, span.trial_id, span.level), []).append(span)
    ordered: list[SegmentSpan] = []
    for (subject, trial_id, level), group in by_trial_level.items():
        group.sort(key=lambda s: (s.t_start, s.t_end))
        for prev, cur in zip(group, group[1:]):
            # Closed-open overlap test: touching endpoints are legal.
            if cur.t_start < prev.t_end:
                raise OverlappingSpans((subject, trial_id), level)
        ordered.extend(group)
    return SegmentsReport(spans=tuple(ordered))


def serialize_segments_report(report: SegmentsReport) -> str:
    lines = ["\t".join(SEGMENTS_REPORT_COLUMNS)]
    for span in report.spans:
        lines.append(
            "\t".join(
                (
                    span.subject,
                    str(span.trial_id),
                    span.level,
                    span.label,
                    _number(span.t_start),
                    _number(span.t_end),
                )
            )
        )
    return "\n".join(lines) + "\n"


def parse_condition_file(text: str) -> ConditionTable:
    lines = _lines(text)
    if not lines:
        raise EmptyReport()
    _, header_line = lines[0]
    delimiter = detect_delimiter(header_line)
    header = tuple(h.strip() for h in header_line.split(delimiter))
    rows = []
    for line_number, line in lines[1:]:
        fields = line.split(delimiter)
        if len(fields) != len(header):
            raise MalformedRow(
                line_number, f"expected {len(header)} fields, got {len(fields)}"
            )
        rows.append(tuple(f.strip() for f in fields))
    return ConditionTable(header=header, rows=tuple(rows))


def _is_integer_literal(token: str) -> bool:
    try:
        int(token)
        return True
    except ValueError:
        return False


def _is_real_literal(token: str) -> bool:
    if _is_integer_literal(token):
        return False
    try:
        float(token)
    except ValueError:
        return False
    return True


def validate_condition_file(table: ConditionTable) -> list[str]:
    """Check the condition-file placeholder typing rules; reports, never raises.

    Saved trial variables must be typed like their eventual values, so an
    integer-typed column needs integer placeholders (-1), a real-typed
    column needs decimal placeholders (-1.1), and a string-typed column
    needs non-numeric placeholders ("x").  ROW_INDEX carries the actual
    item indices and must be unique positive integers.
    """
    violations: list[str] = []
    lowered = {h.lower(): h for h in table.header}
    for name in CONDITION_REQUIRED_COLUMNS:
        if name.lower() not in lowered:
            violations.append(f"missing column {name}")

    def values(name: str) -> tuple[str, ...]:
        column = table.column(name)
        return column if column is not None else ()

    for name in CONDITION_INTEGER_COLUMNS:
        if name.lower() in lowered and not all(_is_integer_literal(v) for v in values(name)):
            violations.append(f"{name} placeholder must be integer-typed")
    for name in CONDITION_REAL_COLUMNS:
        if name.lower() in lowered and not all(_is_real_literal(v) for v in values(name)):
            violations.append(f"{name} placeholder must be real-typed")
    for name in CONDITION_STRING_COLUMNS:
        if name.lower() in lowered:
            numeric = [v for v in values(name) if _is_integer_literal(v) or _is_real_literal(v)]
            if numeric:
                violations.append(f"{name} placeholder must be string-typed")

    if "row_index" in lowered:
        tokens = values("ROW_INDEX")
        ok = all(_is_integer_literal(v) and int(v) > 0 for v in tokens)
        if not ok or len(set(tokens)) != len(tokens):
            violations.append("ROW_INDEX values must be unique positive integers")
    return violations
