"""Core domain types shared by the whole pipeline.

A trial is an ordered stream of digitizer pen samples (time, x, y,
pressure) plus the dictation metadata recorded alongside it.  Pressure 0
means the pen hovered inside the tablet's detection range without
touching the surface.  Segmentation nests the samples into a
character -> radical -> stroke tree; everything downstream (metrics,
cleaning, statistics, plots) consumes these types.

All types are immutable after construction and safe to share across
parallel workers.  Constructors enforce only structural invariants that
would make an object unusable; semantic trial invariants are reported,
not raised, by :func:`validate_trial` so that questionable input can be
inspected rather than lost.
"""

from __future__ import annotations

from dataclasses import dataclass

SELF_REPORT_CORRECT = 0
SELF_REPORT_AMNESIA = 1
SELF_REPORT_UNKNOWN = 2

VALID_SELF_REPORTS = (SELF_REPORT_CORRECT, SELF_REPORT_AMNESIA, SELF_REPORT_UNKNOWN)


@dataclass(frozen=True)
class PenSample:
    """One digitizer reading.

    Times are milliseconds since session start; x/y are tablet device
    units (converted to mm only inside metric computation, via lpmm);
    pressure is in device units, 0 while hovering.
    """

    t: float
    x: float
    y: float
    pressure: float


@dataclass(frozen=True)
class TabletSpec:
    """Tablet calibration: lpmm converts device units to millimeters."""

    lpmm: float
    sample_rate_hz: float = 200.0
    width_mm: float | None = None
    height_mm: float | None = None

    def __post_init__(self) -> None:
        if not self.lpmm > 0:
            raise ValueError(f"lpmm must be > 0, got {self.lpmm}")


@dataclass(frozen=True)
class TrialRecord:
    """One dictation trial: samples plus stimulus/self-report metadata.

    ``self_report`` uses the experiment's coding: 0 correct, 1 character
    amnesia, 2 did not know the correct writing.  ``revised`` carries the
    manual coders' revision flag (false starts, crossed-out radicals).
    """

    subject_id: str
    trial_id: int
    row_index: int
    target: str
    self_report: int
    aud_onset: float
    aud_offset: float
    trial_start: float
    trial_end: float
    samples: tuple[PenSample, ...]
    revised: bool = False


@dataclass(frozen=True)
class StrokeSpan:
    """Contiguous run of positive-pressure samples, by inclusive index.

    ``continued`` marks the tail part of a stroke that was split at a
    radical boundary: the pen never lifted, so the part's onset is the
    junction sample (the previous part's last sample) rather than a
    fresh pen-down.
    """

    first_index: int
    last_index: int
    continued: bool = False

    def __post_init__(self) -> None:
        if self.first_index < 0 or self.first_index > self.last_index:
            raise ValueError(
                f"invalid stroke span [{self.first_index}, {self.last_index}]"
            )


@dataclass(frozen=True)
class RadicalSpan:
    """Ordered group of stroke indices forming one radical."""

    label: str
    stroke_indices: tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.stroke_indices:
            raise ValueError(f"radical {self.label} has no strokes")


@dataclass(frozen=True)
class SegmentTree:
    """Nested character -> radical -> stroke segmentation of a trial.

    The character node is implicit: it owns all radicals, which in turn
    partition the stroke sequence in order.  Stroke spans are disjoint
    and sorted by onset.
    """

    strokes: tuple[StrokeSpan, ...]
    radicals: tuple[RadicalSpan, ...]

    def __post_init__(self) -> None:
        for prev, cur in zip(self.strokes, self.strokes[1:]):
            if cur.first_index <= prev.last_index:
                raise ValueError(
                    "stroke spans must be disjoint and ordered: "
                    f"[{prev.first_index},{prev.last_index}] then "
                    f"[{cur.first_index},{cur.last_index}]"
                )
        flattened: list[int] = []
        for radical in self.radicals:
            flattened.extend(radical.stroke_indices)
        if flattened != list(range(len(self.strokes))):
            raise ValueError("radicals must partition the stroke sequence in order")


def validate_trial(record: TrialRecord) -> list[str]:
    """Report every invariant violation in ``record``; empty means valid.

    Validation is pure and never raises: downstream stages rely on an
    accepted trial never being rejected later for structural reasons.
    """
    violations: list[str] = []
    for i, sample in enumerate(record.samples):
        if sample.pressure < 0:
            violations.append(f"pressure negative at sample {i}")
            break
    for prev, cur in zip(record.samples, record.samples[1:]):
        if cur.t < prev.t:
            violations.append("samples not sorted by t")
            break
    if record.self_report not in VALID_SELF_REPORTS:
        violations.append("self_report out of {0,1,2}")
    if record.aud_onset > record.aud_offset:
        violations.append("aud_onset > aud_offset")
    if record.aud_offset > record.trial_end:
        violations.append("aud_offset > trial_end")
    if record.trial_start > record.trial_end:
        violations.append("trial_start > trial_end")
    for sample in record.samples:
        if not record.trial_start <= sample.t <= record.trial_end:
            violations.append("sample t outside [trial_start, trial_end]")
            break
    return violations
