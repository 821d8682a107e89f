"""Stroke detection and segment-tree construction.

Strokes are maximal runs of consecutive samples with pressure > 0: a
stroke starts when the pen-tip first registers pressure and ends at the
last pressed sample before pressure returns to zero.  Radical grouping
is annotation-driven: a radical is a labeled time window, and a stroke
belongs to the window that contains its onset.  A stroke whose samples
run past its window's end is divided at the boundary into sub-strokes,
one per radical, so that continuous pen movement across a radical
boundary still yields per-radical metrics.

Split convention: the last sample at or before the boundary closes the
first part; the following sample opens the continuation part, flagged
``continued``.  No sample is synthesized at the boundary.  The
continuation's sample range owns only its own samples (pressure means
stay disjoint), but time and geometry for the continuation are measured
from the junction sample, i.e. the previous part's last sample.  That
makes the parts' durations and path lengths sum exactly to the whole
stroke's, and makes the latency across the split 0: the pen never
lifted, so the previous part's offset is the continuation's onset.
"""

from __future__ import annotations

from .ingest import SegmentSpan
from .model import RadicalSpan, SegmentTree, StrokeSpan, TrialRecord


class UnassignedStroke(ValueError):
    def __init__(self, stroke_index: int):
        super().__init__(f"stroke {stroke_index} onset falls outside every radical span")
        self.stroke_index = stroke_index


class NonPositiveInput(ValueError):
    pass


def detect_strokes(trial: TrialRecord) -> list[StrokeSpan]:
    """Maximal runs of pressure > 0, in time order.

    A trial with no pressed samples yields []; deciding what an empty
    response means is a cleaning-stage concern.
    """
    spans = []
    start = None
    for i, sample in enumerate(trial.samples):
        if sample.pressure > 0:
            if start is None:
                start = i
        elif start is not None:
            spans.append(StrokeSpan(first_index=start, last_index=i - 1))
            start = None
    if start is not None:
        spans.append(StrokeSpan(first_index=start, last_index=len(trial.samples) - 1))
    return spans


def effective_onset_index(span: StrokeSpan) -> int:
    """Sample index where the span's time/geometry begins.

    A continuation sub-stroke starts, for measurement purposes, at the
    junction sample that closed the previous part.
    """
    return span.first_index - 1 if span.continued else span.first_index


def build_segment_tree(
    trial: TrialRecord,
    strokes: list[StrokeSpan],
    radical_spans: list[SegmentSpan] | None = None,
) -> SegmentTree:
    """Assign strokes to radical time windows, splitting boundary-straddlers.

    Without radical spans the tree is degenerate: one radical owning
    every stroke.  With spans, each stroke goes to the window containing
    its onset; samples past the window's end are peeled off into a
    continuation sub-stroke and assigned recursively by their own onset.
    A stroke (or continuation) whose onset lies in no window raises
    UnassignedStroke: the annotation is incomplete and must be fixed
    upstream, not papered over here.
    """
    if not radical_spans:
        if not strokes:
            return SegmentTree(strokes=(), radicals=())
        return SegmentTree(
            strokes=tuple(strokes),
            radicals=(RadicalSpan(label="1", stroke_indices=tuple(range(len(strokes)))),),
        )

    windows = sorted(radical_spans, key=lambda s: (s.t_start, s.t_end))
    out_strokes: list[StrokeSpan] = []
    members: dict[int, list[int]] = {}

    def window_of(t: float, original_index: int) -> int:
        for w, span in enumerate(windows):
            if span.t_start <= t <= span.t_end:
                return w
        raise UnassignedStroke(original_index)

    for original_index, stroke in enumerate(strokes):
        first = stroke.first_index
        continued = stroke.continued
        while True:
            w = window_of(trial.samples[first].t, original_index)
            boundary = windows[w].t_end
            last = stroke.last_index
            if trial.samples[last].t <= boundary:
                part = StrokeSpan(first_index=first, last_index=last, continued=continued)
                members.setdefault(w, []).append(len(out_strokes))
                out_strokes.append(part)
                break
            # Last sample at or before the boundary closes this part.
            cut = first
            while trial.samples[cut + 1].t <= boundary:
                cut += 1
            part = StrokeSpan(first_index=first, last_index=cut, continued=continued)
            members.setdefault(w, []).append(len(out_strokes))
            out_strokes.append(part)
            first = cut + 1
            continued = True

    radicals = tuple(
        RadicalSpan(label=windows[w].label, stroke_indices=tuple(members[w]))
        for w in sorted(members)
    )
    return SegmentTree(strokes=tuple(out_strokes), radicals=radicals)


def calibrate_lpmm(max_coordinate: float, physical_extent_mm: float) -> float:
    """Device resolution in lines per mm: max coordinate over physical extent."""
    if max_coordinate <= 0 or physical_extent_mm <= 0:
        raise NonPositiveInput(
            f"calibration inputs must be > 0, got ({max_coordinate}, {physical_extent_mm})"
        )
    return max_coordinate / physical_extent_mm
