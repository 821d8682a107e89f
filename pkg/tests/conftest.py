"""Shared fixtures: a hand-checked golden trial and comparison helpers.

The golden trial is a 13-stroke, 3-radical character whose row-level
values were verified by hand against the metric definitions.  Strokes
3..13 carry the reference durations, latencies, lengths, distances, and
pressures; strokes 1 and 2 are reconstructed so the radical and
character totals close exactly:

    radical 1: dur 849 = (100 + 118 + 135 + 81 + 75) + (100 + 72 + 97 + 71)
               len 17.89 = 3.2 + 3.08 + 6.9 + 2.645 + 2.065
    radical 2: dur 544 = (106 + 60 + 66 + 67) + (88 + 78 + 79)
    radical 3: dur 924 = (188 + 165 + 53 + 211) + (111 + 110 + 86)
    character: dur 2520 = 2317 + 203, len 42.465, rt 1369

Geometry is laid out on a single horizontal line so every published
length and distance is realized by plain coordinate arithmetic: each
stroke is two samples (onset, offset) at lpmm 1, so stroke_len is the x
extent and stroke_dist the x gap to the previous stroke's end.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import pytest

from penstream.ingest import SegmentSpan
from penstream.model import PenSample, TrialRecord

# label, dur ms, rt_rel ms, len mm, dist mm, pressure (None = first stroke)
# Stroke 1's length sits 1e-7 below its nominal 3.2 so the character
# total lands below the 42.465 half-unit boundary and exports as 42.46,
# the way the unrounded source value did.
GOLDEN_STROKES = (
    (1, 100, None, 3.1999999, None, 18327),
    (2, 118, 100, 3.08, 1.0, 18327),
    (3, 135, 72, 6.9, 1.195, 16749),
    (4, 81, 97, 2.645, 4.29, 14948),
    (5, 75, 71, 2.065, 1.625, 15049),
    (6, 106, 123, 3.53, 5.76, 18220),
    (7, 60, 88, 0.9, 1.525, 12859),
    (8, 66, 78, 0.915, 1.07, 9191),
    (9, 67, 79, 1.9, 1.555, 16521),
    (10, 188, 80, 4.045, 1.535, 17949),
    (11, 165, 111, 5.215, 4.38, 21782),
    (12, 53, 110, 1.13, 4.165, 12311),
    (13, 211, 86, 6.94, 1.095, 16065),
)

# label -> (dur, rt_rel, len, dist); member strokes 1-5, 6-9, 10-13
GOLDEN_RADICALS = {
    "1": (849, None, 17.89, None),
    "2": (544, 123, 7.245, 5.76),
    "3": (924, 80, 17.33, 1.535),
}
GOLDEN_GROUPS = {"1": (1, 2, 3, 4, 5), "2": (6, 7, 8, 9), "3": (10, 11, 12, 13)}

GOLDEN_CHAR = {
    "char_dur": 2520.0,
    "char_rt": 1369.0,
    "char_len": 42.465,
    "char_len_export": "42.46",
}

GOLDEN_AUD_OFFSET = 631.0
GOLDEN_FIRST_ONSET = 2000.0


@dataclass(frozen=True)
class GoldenTrial:
    trial: TrialRecord
    radical_spans: tuple[SegmentSpan, ...]
    onsets: tuple[float, ...]
    offsets: tuple[float, ...]


def build_golden_trial() -> GoldenTrial:
    samples: list[PenSample] = []
    onsets: list[float] = []
    offsets: list[float] = []
    ends: list[float] = []
    onset = GOLDEN_FIRST_ONSET
    x = 0.0
    for label, dur, rt, length, dist, press in GOLDEN_STROKES:
        if rt is not None:
            onset = offsets[-1] + rt
            x = ends[-1] + dist
        samples.append(PenSample(t=onset, x=x, y=0.0, pressure=float(press)))
        samples.append(PenSample(t=onset + dur, x=x + length, y=0.0, pressure=float(press)))
        onsets.append(onset)
        offsets.append(onset + dur)
        ends.append(x + length)
        samples.append(PenSample(t=onset + dur + 1, x=x + length, y=0.0, pressure=0.0))

    trial = TrialRecord(
        subject_id="1",
        trial_id=192,
        row_index=10,
        target="稻",
        self_report=0,
        aud_onset=0.0,
        aud_offset=GOLDEN_AUD_OFFSET,
        trial_start=0.0,
        trial_end=offsets[-1] + 10.0,
        samples=tuple(samples),
    )
    spans = tuple(
        SegmentSpan(
            subject="1",
            trial_id=192,
            level="radical",
            label=label,
            t_start=onsets[members[0] - 1],
            t_end=offsets[members[-1] - 1],
        )
        for label, members in GOLDEN_GROUPS.items()
    )
    return GoldenTrial(
        trial=trial, radical_spans=spans, onsets=tuple(onsets), offsets=tuple(offsets)
    )


@pytest.fixture
def golden() -> GoldenTrial:
    return build_golden_trial()


# The typed-placeholder trial-definition table: integer placeholders for
# integer variables, decimal for reals, a bare letter for strings, and
# real item indices in ROW_INDEX.
CONDITION_HEADER = (
    "DV_TRIAL_ID",
    "DV_AUD_ONSET",
    "DV_AUD_OFFSET",
    "DV_TRIAL_START",
    "DV_TRIAL_END",
    "ROW_INDEX",
    "audio_name",
    "text",
    "target",
    "participant_id",
    "self_report",
)

CONDITION_ITEMS = (
    ("List1\\1ba4.wav", "罢了的罢", "罢"),
    ("List1\\2ze2.wav", "选择的择", "择"),
    ("List1\\3diao1.wav", "雕像的雕", "雕"),
    ("List1\\4guo1.wav", "黑锅的锅", "锅"),
    ("List1\\5feng3.wav", "讽刺的讽", "讽"),
    ("List1\\6hai4.wav", "害怕的害", "害"),
    ("List1\\7fang1.wav", "芳香的芳", "芳"),
)


def build_condition_text() -> str:
    lines = ["\t".join(CONDITION_HEADER)]
    for i, (audio, text, target) in enumerate(CONDITION_ITEMS, start=1):
        lines.append(
            "\t".join(
                ("-1", "-1.1", "-1.1", "-1.1", "-1.1", str(i), audio, text, target, "x", "-1")
            )
        )
    return "\n".join(lines) + "\n"


def assert_rows_match(got, want, mm_rel: float = 1e-9) -> None:
    """Pipeline rows vs analytically expected rows: ms exact, mm relative."""
    assert len(got) == len(want), f"{len(got)} rows vs {len(want)} expected"
    exact_fields = (
        "subject",
        "dv_trial_id",
        "row_index",
        "self_report",
        "target",
        "rad_label",
        "stroke_label",
    )
    ms_fields = ("char_dur", "char_rt", "rad_dur", "rad_rt_rel", "stroke_dur", "stroke_rt_rel")
    mm_fields = (
        "char_len",
        "char_press_avg",
        "rad_len",
        "rad_dist",
        "rad_press_avg",
        "stroke_len",
        "stroke_dist",
        "stroke_press_avg",
    )
    for g, w in zip(got, want):
        for name in exact_fields:
            assert getattr(g, name) == getattr(w, name), name
        for name in ms_fields:
            gv, wv = getattr(g, name), getattr(w, name)
            assert (gv is None) == (wv is None), (name, gv, wv)
            if gv is not None:
                assert gv == wv, (name, gv, wv)
        for name in mm_fields:
            gv, wv = getattr(g, name), getattr(w, name)
            assert (gv is None) == (wv is None), (name, gv, wv)
            if gv is None:
                continue
            if wv == 0.0:
                assert abs(gv) <= 1e-12, (name, gv, wv)
            else:
                assert math.isclose(gv, wv, rel_tol=mm_rel, abs_tol=0.0), (name, gv, wv)
