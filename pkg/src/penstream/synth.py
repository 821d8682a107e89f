"""Deterministic synthetic-trial generator with analytically known metrics.

Every generated trial carries its own ground truth: expected metric rows
computed straight from the construction parameters (polyline control
points, start times, sample intervals, pressures), never by running the
measurement pipeline.  Tests feed the trial through the full
serialize/parse/segment/measure chain and compare against these
expectations, so the generator is the oracle for the whole system.

Exactness rules the design:

* times are integers (start and interval in whole ms), so sample
  timestamps and all expected latencies/durations are exact in float64;
* polyline control points are emitted verbatim as samples (interior
  samples are interpolated, endpoints are not), so expected distances
  between strokes are exact and expected path lengths agree with the
  per-sample sums to float-accumulation error only;
* at least one zero-pressure hover sample separates consecutive
  strokes, so stroke detection recovers the construction exactly; the
  generator requires a gap of at least 2 ms between strokes to have an
  integer timestamp to put that sample on.

Pressure is constant per stroke by default.  Optional seeded jitter
scales each sample's pressure by a factor in (0.5, 1.5], keeping it
positive so the stroke structure is unchanged; expected pressure means
are then taken over the emitted values with compensated summation,
a different accumulation route than the pipeline's.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

from .ingest import SegmentSpan
from .metrics import MetricRow
from .model import PenSample, TrialRecord


class InvalidSpec(ValueError):
    pass


@dataclass(frozen=True)
class StrokeShape:
    """One stroke: a polyline walked at a fixed sampling interval."""

    points: tuple[tuple[float, float], ...]
    start_ms: int
    interval_ms: int
    pressure: float
    steps_per_segment: int = 4

    def sample_count(self) -> int:
        if len(self.points) == 1:
            return 1
        return self.steps_per_segment * (len(self.points) - 1) + 1

    def offset_ms(self) -> int:
        return self.start_ms + (self.sample_count() - 1) * self.interval_ms


@dataclass(frozen=True)
class SynthSpec:
    strokes: tuple[StrokeShape, ...]
    lpmm: float = 10.0
    # Contiguous partition of stroke indices; None = single radical.
    radical_groups: tuple[tuple[int, ...], ...] | None = None
    aud_offset: int = 0
    hover_between: bool = True
    pressure_jitter_frac: float = 0.0
    seed: int = 0
    subject: str = "synth"
    trial_id: int = 1
    row_index: int = 1
    target: str = "丁"
    self_report: int = 0


@dataclass(frozen=True)
class SynthResult:
    trial: TrialRecord
    expected: tuple[MetricRow, ...]
    radical_spans: tuple[SegmentSpan, ...] = field(default_factory=tuple)


def validate_spec(spec: SynthSpec) -> None:
    if not spec.strokes:
        raise InvalidSpec("spec has no strokes")
    if spec.lpmm <= 0:
        raise InvalidSpec("lpmm must be > 0")
    if spec.aud_offset < 0:
        raise InvalidSpec("aud_offset must be >= 0")
    if not 0.0 <= spec.pressure_jitter_frac < 1.0:
        raise InvalidSpec("pressure_jitter_frac must be in [0, 1)")
    for i, shape in enumerate(spec.strokes):
        if not shape.points:
            raise InvalidSpec(f"stroke {i} has no points")
        if shape.interval_ms < 1:
            raise InvalidSpec(f"stroke {i} interval must be >= 1 ms")
        if shape.steps_per_segment < 1:
            raise InvalidSpec(f"stroke {i} steps_per_segment must be >= 1")
        if shape.pressure <= 0:
            raise InvalidSpec(f"stroke {i} pressure must be > 0")
    if spec.strokes[0].start_ms < 0:
        raise InvalidSpec("first stroke must start at t >= 0")
    for prev, cur in zip(spec.strokes, spec.strokes[1:]):
        # A hover separator needs an integer ms strictly inside the gap.
        if cur.start_ms < prev.offset_ms() + 2:
            raise InvalidSpec(
                f"stroke starting at {cur.start_ms} must leave a >= 2 ms gap "
                f"after the previous stroke's offset {prev.offset_ms()}"
            )
    if spec.radical_groups is not None:
        flat = [i for group in spec.radical_groups for i in group]
        if flat != list(range(len(spec.strokes))) or not all(spec.radical_groups):
            raise InvalidSpec("radical_groups must partition strokes contiguously")


def _stroke_points(shape: StrokeShape) -> list[tuple[float, float]]:
    if len(shape.points) == 1:
        return [shape.points[0]]
    out = []
    for (ax, ay), (bx, by) in zip(shape.points, shape.points[1:]):
        m = shape.steps_per_segment
        for j in range(m):
            f = j / m
            out.append((ax + f * (bx - ax), ay + f * (by - ay)))
    out.append(shape.points[-1])
    return out


def _analytic_length(shape: StrokeShape, lpmm: float) -> float:
    return math.fsum(
        math.hypot(bx - ax, by - ay)
        for (ax, ay), (bx, by) in zip(shape.points, shape.points[1:])
    ) / lpmm


def generate_trial(spec: SynthSpec) -> SynthResult:
    """Emit samples for the spec and the metric rows they must produce."""
    validate_spec(spec)
    rng = random.Random(spec.seed)

    samples: list[PenSample] = []
    stroke_pressures: list[list[float]] = []
    for i, shape in enumerate(spec.strokes):
        if i > 0:
            prev = spec.strokes[i - 1]
            gap = shape.start_ms - prev.offset_ms()
            px, py = prev.points[-1]
            if spec.hover_between:
                # Trace the pen's in-air path with a few interpolated dots.
                nx, ny = shape.points[0]
                count = min(3, gap - 1)
                hover_ts = sorted(
                    {prev.offset_ms() + gap * j // (count + 1) for j in range(1, count + 1)}
                )
                for t in hover_ts:
                    f = (t - prev.offset_ms()) / gap
                    samples.append(
                        PenSample(
                            t=float(t), x=px + f * (nx - px), y=py + f * (ny - py), pressure=0.0
                        )
                    )
            else:
                # Minimal separator so stroke detection still sees two runs.
                samples.append(
                    PenSample(t=float(prev.offset_ms() + 1), x=px, y=py, pressure=0.0)
                )
        pressures = []
        for k, (x, y) in enumerate(_stroke_points(shape)):
            p = shape.pressure
            if spec.pressure_jitter_frac > 0:
                p *= 1.0 + spec.pressure_jitter_frac * (rng.random() - 0.5)
            pressures.append(p)
            samples.append(
                PenSample(t=float(shape.start_ms + k * shape.interval_ms), x=x, y=y, pressure=p)
            )
        stroke_pressures.append(pressures)

    trial = TrialRecord(
        subject_id=spec.subject,
        trial_id=spec.trial_id,
        row_index=spec.row_index,
        target=spec.target,
        self_report=spec.self_report,
        aud_onset=0.0,
        aud_offset=float(spec.aud_offset),
        trial_start=0.0,
        trial_end=float(max(spec.strokes[-1].offset_ms(), spec.aud_offset)),
        samples=tuple(samples),
    )

    onsets = [float(s.start_ms) for s in spec.strokes]
    offsets = [float(s.offset_ms()) for s in spec.strokes]
    lengths = [_analytic_length(s, spec.lpmm) for s in spec.strokes]
    press_avgs = [math.fsum(p) / len(p) for p in stroke_pressures]
    rt_rels: list[float | None] = [None] + [
        onsets[i] - offsets[i - 1] for i in range(1, len(spec.strokes))
    ]
    dists: list[float | None] = [None] + [
        math.hypot(
            spec.strokes[i].points[0][0] - spec.strokes[i - 1].points[-1][0],
            spec.strokes[i].points[0][1] - spec.strokes[i - 1].points[-1][1],
        )
        / spec.lpmm
        for i in range(1, len(spec.strokes))
    ]

    groups = spec.radical_groups or (tuple(range(len(spec.strokes))),)
    char_rt = onsets[0] - spec.aud_offset
    char_dur = offsets[-1] - onsets[0]
    char_len = math.fsum(lengths)
    all_pressures = [p for ps in stroke_pressures for p in ps]
    char_press = math.fsum(all_pressures) / len(all_pressures)

    rows: list[MetricRow] = []
    spans: list[SegmentSpan] = []
    for g, group in enumerate(groups):
        first, last = group[0], group[-1]
        label = str(g + 1)
        spans.append(
            SegmentSpan(
                subject=spec.subject,
                trial_id=spec.trial_id,
                level="radical",
                label=label,
                t_start=onsets[first],
                t_end=offsets[last],
            )
        )
        group_pressures = [p for i in group for p in stroke_pressures[i]]
        rad_dur = offsets[last] - onsets[first]
        rad_len = math.fsum(lengths[i] for i in group)
        rad_press = math.fsum(group_pressures) / len(group_pressures)
        for i in group:
            rows.append(
                MetricRow(
                    subject=spec.subject,
                    dv_trial_id=spec.trial_id,
                    row_index=spec.row_index,
                    self_report=spec.self_report,
                    target=spec.target,
                    char_dur=char_dur,
                    char_rt=char_rt,
                    char_len=char_len,
                    char_press_avg=char_press,
                    rad_label=label,
                    rad_dur=rad_dur,
                    rad_rt_rel=rt_rels[first],
                    rad_len=rad_len,
                    rad_dist=dists[first],
                    rad_press_avg=rad_press,
                    stroke_label=i + 1,
                    stroke_dur=offsets[i] - onsets[i],
                    stroke_rt_rel=rt_rels[i],
                    stroke_len=lengths[i],
                    stroke_dist=dists[i],
                    stroke_press_avg=press_avgs[i],
                )
            )
    return SynthResult(trial=trial, expected=tuple(rows), radical_spans=tuple(spans))


def random_spec(rng: random.Random, trial_id: int = 1, subject: str = "synth") -> SynthSpec:
    """A random valid SynthSpec; geometry and timing drawn small but varied."""
    n_strokes = rng.randint(1, 6)
    shapes = []
    t = rng.randint(200, 1500)
    for _ in range(n_strokes):
        n_points = rng.randint(1, 4)
        points = tuple(
            (float(rng.randint(0, 2000)), float(rng.randint(0, 2000)))
            for _ in range(n_points)
        )
        shape = StrokeShape(
            points=points,
            start_ms=t,
            interval_ms=rng.randint(1, 10),
            pressure=float(rng.randint(1000, 30000)),
            steps_per_segment=rng.randint(1, 5),
        )
        shapes.append(shape)
        t = shape.offset_ms() + rng.randint(2, 400)

    n_groups = rng.randint(1, min(3, n_strokes))
    cuts = sorted(rng.sample(range(1, n_strokes), n_groups - 1)) if n_groups > 1 else []
    bounds = [0] + cuts + [n_strokes]
    groups = tuple(tuple(range(a, b)) for a, b in zip(bounds, bounds[1:]))

    return SynthSpec(
        strokes=tuple(shapes),
        lpmm=float(rng.choice([1, 2, 5, 10, 20])),
        radical_groups=groups if rng.random() < 0.7 else None,
        aud_offset=rng.randint(0, 150),
        hover_between=rng.random() < 0.8,
        pressure_jitter_frac=rng.choice([0.0, 0.0, 0.4]),
        seed=rng.randint(0, 2**31),
        subject=subject,
        trial_id=trial_id,
        row_index=trial_id,
    )
