"""JSON-lines exchange between the pipeline and the annotation UI.

Outbound (`.trials.jsonl`): one self-contained record per trial with its
samples, auto-detected stroke spans, and current radical time windows.
Inbound (`.segments.jsonl`): the annotator's radical windows per trial,
plus the stroke onset times it was shown, so incoming files can be
validated standalone: overlapping windows and stroke onsets not covered
by any window are rejected at import, before segmentation runs.

A degenerate segmentation (the automatic single radical) is exported as
an empty radical list; importing an empty list rebuilds the same
degenerate tree, so a no-edit round trip is the identity.

Both formats carry a version field ("v": 1) and use one JSON object per
line.  Floats serialize via repr, so coordinates and times survive the
round trip bit-exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .ingest import OverlappingSpans, SegmentSpan, SegmentsReport
from .model import PenSample, SegmentTree, StrokeSpan, TrialRecord
from .segmentation import UnassignedStroke, effective_onset_index

BUNDLE_VERSION = 1

TRIALS_SUFFIX = ".trials.jsonl"
SEGMENTS_SUFFIX = ".segments.jsonl"


@dataclass(frozen=True)
class TrialBundle:
    trial: TrialRecord
    strokes: tuple[StrokeSpan, ...]
    # (label, t_start, t_end) windows; empty = degenerate single radical
    radical_windows: tuple[tuple[str, float, float], ...]
    lpmm: float


def _radical_windows(
    trial: TrialRecord, tree: SegmentTree
) -> tuple[tuple[str, float, float], ...]:
    if len(tree.radicals) == 1 and tree.radicals[0].label == "1":
        return ()
    windows = []
    for radical in tree.radicals:
        first = tree.strokes[radical.stroke_indices[0]]
        last = tree.strokes[radical.stroke_indices[-1]]
        windows.append(
            (
                radical.label,
                trial.samples[effective_onset_index(first)].t,
                trial.samples[last.last_index].t,
            )
        )
    return tuple(windows)


def export_bundles(items: list[tuple[TrialRecord, SegmentTree]], lpmm: float) -> str:
    """One JSON line per trial, ordered by (subject, trial id)."""
    lines = []
    for trial, tree in sorted(items, key=lambda it: (it[0].subject_id, it[0].trial_id)):
        record = {
            "v": BUNDLE_VERSION,
            "subject": trial.subject_id,
            "trial_id": trial.trial_id,
            "row_index": trial.row_index,
            "target": trial.target,
            "self_report": trial.self_report,
            "aud_onset": trial.aud_onset,
            "aud_offset": trial.aud_offset,
            "trial_start": trial.trial_start,
            "trial_end": trial.trial_end,
            "revised": trial.revised,
            "lpmm": lpmm,
            "samples": {
                "t": [s.t for s in trial.samples],
                "x": [s.x for s in trial.samples],
                "y": [s.y for s in trial.samples],
                "p": [s.pressure for s in trial.samples],
            },
            "strokes": [
                {"first": s.first_index, "last": s.last_index, "continued": s.continued}
                for s in tree.strokes
            ],
            "radicals": [
                {"label": label, "t_start": t0, "t_end": t1}
                for label, t0, t1 in _radical_windows(trial, tree)
            ],
        }
        lines.append(json.dumps(record, ensure_ascii=False, separators=(",", ":")))
    return "\n".join(lines) + "\n"


def parse_bundles(text: str) -> list[TrialBundle]:
    bundles = []
    for number, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as e:
            raise ValueError(f"line {number}: not valid JSON ({e.msg})") from None
        if record.get("v") != BUNDLE_VERSION:
            raise ValueError(f"line {number}: unsupported bundle version {record.get('v')!r}")
        s = record["samples"]
        samples = tuple(
            PenSample(t=t, x=x, y=y, pressure=p)
            for t, x, y, p in zip(s["t"], s["x"], s["y"], s["p"])
        )
        trial = TrialRecord(
            subject_id=record["subject"],
            trial_id=record["trial_id"],
            row_index=record["row_index"],
            target=record["target"],
            self_report=record["self_report"],
            aud_onset=record["aud_onset"],
            aud_offset=record["aud_offset"],
            trial_start=record["trial_start"],
            trial_end=record["trial_end"],
            samples=samples,
            revised=record["revised"],
        )
        strokes = tuple(
            StrokeSpan(
                first_index=st["first"], last_index=st["last"], continued=st["continued"]
            )
            for st in record["strokes"]
        )
        windows = tuple(
            (r["label"], r["t_start"], r["t_end"]) for r in record["radicals"]
        )
        bundles.append(
            TrialBundle(trial=trial, strokes=strokes, radical_windows=windows, lpmm=record["lpmm"])
        )
    return bundles


def serialize_annotations(items: list[tuple[TrialRecord, SegmentTree]]) -> str:
    """The `.segments.jsonl` the UI would save with no edits applied."""
    lines = []
    for trial, tree in sorted(items, key=lambda it: (it[0].subject_id, it[0].trial_id)):
        record = {
            "v": BUNDLE_VERSION,
            "subject": trial.subject_id,
            "trial_id": trial.trial_id,
            "radicals": [
                {"label": label, "t_start": t0, "t_end": t1}
                for label, t0, t1 in _radical_windows(trial, tree)
            ],
            "stroke_onsets": [trial.samples[s.first_index].t for s in tree.strokes],
        }
        lines.append(json.dumps(record, ensure_ascii=False, separators=(",", ":")))
    return "\n".join(lines) + "\n"


def import_annotations(text: str) -> SegmentsReport:
    """Validate and convert `.segments.jsonl` into radical segment spans.

    Windows may touch but not overlap in their interiors; when windows
    are present, every stroke onset must fall inside one, otherwise the
    annotation would orphan a stroke and segmentation would fail later
    anyway. An empty window list means the degenerate single radical.
    """
    spans = []
    for number, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as e:
            raise ValueError(f"line {number}: not valid JSON ({e.msg})") from None
        if record.get("v") != BUNDLE_VERSION:
            raise ValueError(f"line {number}: unsupported bundle version {record.get('v')!r}")
        subject = record["subject"]
        trial_id = record["trial_id"]
        windows = sorted(
            ((r["label"], float(r["t_start"]), float(r["t_end"])) for r in record["radicals"]),
            key=lambda w: (w[1], w[2]),
        )
        for (_, a0, a1), (_, b0, b1) in zip(windows, windows[1:]):
            if b0 < a1:
                raise OverlappingSpans((subject, trial_id), "radical")
        if windows:
            for index, onset in enumerate(record.get("stroke_onsets", ())):
                if not any(t0 <= onset <= t1 for _, t0, t1 in windows):
                    raise UnassignedStroke(index)
        for label, t0, t1 in windows:
            spans.append(
                SegmentSpan(
                    subject=subject,
                    trial_id=trial_id,
                    level="radical",
                    label=label,
                    t_start=t0,
                    t_end=t1,
                )
            )
    return SegmentsReport(spans=tuple(spans))
