import dataclasses
import random

import pytest

from penstream.model import TabletSpec, validate_trial
from penstream.segmentation import build_segment_tree, detect_strokes
from penstream.metrics import compute_metrics
from penstream.synth import (
    InvalidSpec,
    StrokeShape,
    SynthSpec,
    generate_trial,
    random_spec,
    validate_spec,
)

from conftest import assert_rows_match


def shape(points, start, interval=5, pressure=1000.0, steps=4):
    return StrokeShape(
        points=tuple(points),
        start_ms=start,
        interval_ms=interval,
        pressure=pressure,
        steps_per_segment=steps,
    )


def test_stroke_shape_sampling_arithmetic():
    s = shape([(0.0, 0.0)], start=100)
    assert s.sample_count() == 1
    assert s.offset_ms() == 100
    s = shape([(0.0, 0.0), (10.0, 0.0), (10.0, 10.0)], start=100, interval=3, steps=4)
    assert s.sample_count() == 9
    assert s.offset_ms() == 100 + 8 * 3


def test_validate_spec_rejections():
    good = shape([(0.0, 0.0), (30.0, 40.0)], start=200)
    with pytest.raises(InvalidSpec, match="no strokes"):
        validate_spec(SynthSpec(strokes=()))
    with pytest.raises(InvalidSpec, match="lpmm"):
        validate_spec(SynthSpec(strokes=(good,), lpmm=0.0))
    with pytest.raises(InvalidSpec, match="aud_offset"):
        validate_spec(SynthSpec(strokes=(good,), aud_offset=-1))
    with pytest.raises(InvalidSpec, match="jitter"):
        validate_spec(SynthSpec(strokes=(good,), pressure_jitter_frac=1.0))
    with pytest.raises(InvalidSpec, match="no points"):
        validate_spec(SynthSpec(strokes=(dataclasses.replace(good, points=()),)))
    with pytest.raises(InvalidSpec, match="interval"):
        validate_spec(SynthSpec(strokes=(dataclasses.replace(good, interval_ms=0),)))
    with pytest.raises(InvalidSpec, match="steps_per_segment"):
        validate_spec(SynthSpec(strokes=(dataclasses.replace(good, steps_per_segment=0),)))
    with pytest.raises(InvalidSpec, match="pressure"):
        validate_spec(SynthSpec(strokes=(dataclasses.replace(good, pressure=0.0),)))
    with pytest.raises(InvalidSpec, match="t >= 0"):
        validate_spec(SynthSpec(strokes=(dataclasses.replace(good, start_ms=-5),)))


def test_validate_spec_requires_two_ms_gap():
    first = shape([(0.0, 0.0), (30.0, 40.0)], start=200)  # offset 220
    ok = SynthSpec(strokes=(first, shape([(50.0, 0.0)], start=222)))
    validate_spec(ok)
    with pytest.raises(InvalidSpec, match="2 ms gap"):
        validate_spec(SynthSpec(strokes=(first, shape([(50.0, 0.0)], start=221))))


def test_validate_spec_radical_groups_must_partition():
    strokes = (
        shape([(0.0, 0.0)], start=200),
        shape([(10.0, 0.0)], start=300),
        shape([(20.0, 0.0)], start=400),
    )
    validate_spec(SynthSpec(strokes=strokes, radical_groups=((0, 1), (2,))))
    for bad in (((0,), (2,)), ((1, 0), (2,)), ((0, 1, 2), ()), ((0,), (1,), (2,), ())):
        with pytest.raises(InvalidSpec, match="partition"):
            validate_spec(SynthSpec(strokes=strokes, radical_groups=bad))


def test_three_four_five_stroke_length():
    spec = SynthSpec(strokes=(shape([(0.0, 0.0), (30.0, 40.0)], start=200),), lpmm=10.0)
    result = generate_trial(spec)
    assert result.expected[0].stroke_len == 5.0
    assert result.expected[0].char_len == 5.0


def test_gap_becomes_expected_latency():
    first = shape([(0.0, 0.0), (30.0, 40.0)], start=200)  # offset 220
    second = shape([(100.0, 100.0), (130.0, 100.0)], start=340)
    result = generate_trial(SynthSpec(strokes=(first, second)))
    assert result.expected[1].stroke_rt_rel == 120.0
    assert result.expected[1].stroke_dist == pytest.approx(
        ((100 - 30) ** 2 + (100 - 40) ** 2) ** 0.5 / 10.0
    )


def test_generated_trials_validate():
    rng = random.Random(909)
    for trial_id in range(1, 51):
        result = generate_trial(random_spec(rng, trial_id=trial_id))
        assert validate_trial(result.trial) == []


def test_hover_separator_present_in_both_modes():
    first = shape([(0.0, 0.0), (30.0, 40.0)], start=200)
    second = shape([(100.0, 100.0)], start=400)
    for hover in (True, False):
        spec = SynthSpec(strokes=(first, second), hover_between=hover)
        trial = generate_trial(spec).trial
        between = [
            s for s in trial.samples if first.offset_ms() < s.t < second.start_ms
        ]
        assert between, hover
        assert all(s.pressure == 0.0 for s in between)
        if hover:
            assert 1 <= len(between) <= 3
        else:
            assert len(between) == 1
            assert between[0].t == first.offset_ms() + 1
        # Either way the construction survives stroke detection intact.
        assert len(detect_strokes(trial)) == 2


def test_detection_recovers_construction():
    rng = random.Random(117)
    for trial_id in range(1, 101):
        spec = random_spec(rng, trial_id=trial_id)
        trial = generate_trial(spec).trial
        strokes = detect_strokes(trial)
        assert len(strokes) == len(spec.strokes)
        for span, stroke_spec in zip(strokes, spec.strokes):
            assert trial.samples[span.first_index].t == stroke_spec.start_ms
            assert trial.samples[span.last_index].t == stroke_spec.offset_ms()
            count = span.last_index - span.first_index + 1
            assert count == stroke_spec.sample_count()


def test_pressure_jitter_bounded_and_structure_preserving():
    spec = SynthSpec(
        strokes=(shape([(0.0, 0.0), (100.0, 0.0)], start=200, pressure=5000.0),),
        pressure_jitter_frac=0.4,
        seed=7,
    )
    trial = generate_trial(spec).trial
    pressed = [s.pressure for s in trial.samples]
    assert all(p > 0 for p in pressed)
    assert all(5000.0 * 0.8 <= p < 5000.0 * 1.2 for p in pressed)
    assert len({round(p, 6) for p in pressed}) > 1  # actually jittered
    assert len(detect_strokes(trial)) == 1


def test_same_spec_reproduces_identical_output():
    spec = SynthSpec(
        strokes=(
            shape([(0.0, 0.0), (50.0, 80.0)], start=200),
            shape([(10.0, 5.0), (60.0, 5.0)], start=400),
        ),
        pressure_jitter_frac=0.4,
        seed=1234,
    )
    a = generate_trial(spec)
    b = generate_trial(spec)
    assert a.trial == b.trial
    assert a.expected == b.expected
    assert a.radical_spans == b.radical_spans


def test_multi_segment_analytic_length_matches_pipeline():
    spec = SynthSpec(
        strokes=(shape([(0.0, 0.0), (30.0, 40.0), (30.0, 100.0)], start=200, steps=2),),
        lpmm=10.0,
    )
    result = generate_trial(spec)
    assert result.expected[0].stroke_len == pytest.approx(11.0, rel=1e-12)
    tree = build_segment_tree(result.trial, detect_strokes(result.trial))
    rows = compute_metrics(result.trial, tree, TabletSpec(lpmm=10.0))
    assert rows[0].stroke_len == pytest.approx(11.0, rel=1e-9)


def test_end_to_end_pipeline_matches_expected_rows():
    rng = random.Random(24601)
    for trial_id in range(1, 51):
        spec = random_spec(rng, trial_id=trial_id)
        result = generate_trial(spec)
        strokes = detect_strokes(result.trial)
        spans = list(result.radical_spans) if spec.radical_groups else None
        tree = build_segment_tree(result.trial, strokes, spans)
        rows = compute_metrics(result.trial, tree, TabletSpec(lpmm=spec.lpmm))
        assert_rows_match(rows, list(result.expected))


def test_radical_spans_cover_groups():
    strokes = (
        shape([(0.0, 0.0)], start=200),
        shape([(10.0, 0.0)], start=300),
        shape([(20.0, 0.0)], start=400),
    )
    spec = SynthSpec(strokes=strokes, radical_groups=((0, 1), (2,)))
    result = generate_trial(spec)
    assert [s.label for s in result.radical_spans] == ["1", "2"]
    assert result.radical_spans[0].t_start == 200.0
    assert result.radical_spans[0].t_end == 300.0
    assert result.radical_spans[1].t_start == 400.0
    assert [r.rad_label for r in result.expected] == ["1", "1", "2"]
