"""Cross-checks against the browser annotator's exported files.

The editor under frontend/ exchanges data with this package purely
through ``.trials.jsonl`` and ``.segments.jsonl`` files.  Its test
fixtures are committed: a golden bundle written by this package, plus
segments files the editor itself saved (a scripted edit plan and a few
seeded random sessions).  These tests pin both directions: the golden
pair stays reproducible, and every editor-written file imports cleanly
and rebuilds the trees the edits described.
"""

import json
import random
from pathlib import Path

import pytest

from penstream.bundle import (
    export_bundles,
    import_annotations,
    parse_bundles,
    serialize_annotations,
)
from penstream.ingest import SegmentSpan
from penstream.segmentation import build_segment_tree, detect_strokes
from penstream.synth import generate_trial, random_spec

FIXTURES = Path(__file__).parent.parent / "frontend" / "tests" / "fixtures"

GOLDEN_SEED = 71020
GOLDEN_TRIALS = 40


def regenerate_items():
    rng = random.Random(GOLDEN_SEED)
    items = []
    for trial_id in range(1, GOLDEN_TRIALS + 1):
        spec = random_spec(rng, trial_id=trial_id, subject="fix")
        result = generate_trial(spec)
        spans = list(result.radical_spans) if spec.radical_groups else None
        tree = build_segment_tree(result.trial, detect_strokes(result.trial), spans)
        items.append((result.trial, tree))
    return items


def read_fixture(name):
    return (FIXTURES / name).read_text(encoding="utf-8")


def onset(trial, stroke):
    return trial.samples[stroke.first_index].t


def offset(trial, stroke):
    return trial.samples[stroke.last_index].t


def spans_for(bundle, windows):
    return [
        SegmentSpan(
            subject=bundle.trial.subject_id,
            trial_id=bundle.trial.trial_id,
            level="radical",
            label=label,
            t_start=t0,
            t_end=t1,
        )
        for label, t0, t1 in windows
    ]


def spans_by_trial(report):
    grouped = {}
    for span in report.spans:
        grouped.setdefault(span.trial_id, []).append(span)
    return grouped


def test_golden_fixture_pair_is_reproducible():
    # The editor's byte-for-byte round-trip tests compare against these
    # two files, so they must track the current serializers exactly.
    items = regenerate_items()
    assert export_bundles(items, lpmm=10.0) == read_fixture("golden.trials.jsonl")
    assert serialize_annotations(items) == read_fixture("golden.segments.jsonl")


def test_scripted_editor_export_imports_and_rebuilds():
    bundles = {b.trial.trial_id: b for b in parse_bundles(read_fixture("golden.trials.jsonl"))}
    scripted = read_fixture("scripted.segments.jsonl")
    grouped = spans_by_trial(import_annotations(scripted))

    # Trial 1 was regrouped in the editor: stroke 0 alone, strokes 1..3
    # together.  The windows must sit exactly on stroke boundaries.
    one = bundles[1]
    strokes = one.strokes
    expected_one = [
        ("1", onset(one.trial, strokes[0]), offset(one.trial, strokes[0])),
        ("2", onset(one.trial, strokes[1]), offset(one.trial, strokes[3])),
    ]
    got_one = [(s.label, s.t_start, s.t_end) for s in grouped[1]]
    assert got_one == expected_one

    rebuilt = build_segment_tree(one.trial, detect_strokes(one.trial), grouped[1])
    planned = build_segment_tree(one.trial, detect_strokes(one.trial), spans_for(one, expected_one))
    assert rebuilt == planned
    assert [r.label for r in rebuilt.radicals] == ["1", "2"]
    assert rebuilt.radicals[0].stroke_indices == (0,)
    assert rebuilt.radicals[1].stroke_indices == (1, 2, 3)

    # Trial 3 was split mid-stroke at t=653, so the rebuilt tree must
    # carry one more stroke than the raw trial: the tail of the cut
    # stroke continues into radical 2 without a pen lift.
    three = bundles[3]
    raw = detect_strokes(three.trial)
    expected_three = [
        ("1", onset(three.trial, raw[0]), 653.0),
        ("2", 653.0, offset(three.trial, raw[-1])),
    ]
    got_three = [(s.label, s.t_start, s.t_end) for s in grouped[3]]
    assert got_three == expected_three

    rebuilt = build_segment_tree(three.trial, detect_strokes(three.trial), grouped[3])
    planned = build_segment_tree(
        three.trial, detect_strokes(three.trial), spans_for(three, expected_three)
    )
    assert rebuilt == planned
    assert len(rebuilt.strokes) == len(raw) + 1
    assert any(s.continued for s in rebuilt.strokes)

    # Every other trial is untouched, so its scripted line must equal the
    # golden line byte for byte; this pins the editor's float and JSON
    # formatting, not just its semantics.
    golden_lines = read_fixture("golden.segments.jsonl").splitlines()
    scripted_lines = scripted.splitlines()
    assert len(scripted_lines) == len(golden_lines) == GOLDEN_TRIALS
    for golden_line, scripted_line in zip(golden_lines, scripted_lines):
        trial_id = json.loads(golden_line)["trial_id"]
        if trial_id not in (1, 3):
            assert scripted_line == golden_line


def test_scripted_onsets_come_from_the_stroke_table():
    bundles = {b.trial.trial_id: b for b in parse_bundles(read_fixture("golden.trials.jsonl"))}
    for line in read_fixture("scripted.segments.jsonl").splitlines():
        record = json.loads(line)
        bundle = bundles[record["trial_id"]]
        expected = [onset(bundle.trial, s) for s in bundle.strokes]
        assert record["stroke_onsets"] == expected


@pytest.mark.parametrize("seed", [1, 2, 3, 4, 5])
def test_fuzzed_editor_exports_import_cleanly(seed):
    bundles = {b.trial.trial_id: b for b in parse_bundles(read_fixture("golden.trials.jsonl"))}
    text = read_fixture(f"fuzz_{seed}.segments.jsonl")
    grouped = spans_by_trial(import_annotations(text))

    edited = 0
    for trial_id, bundle in bundles.items():
        spans = grouped.get(trial_id)
        tree = build_segment_tree(bundle.trial, detect_strokes(bundle.trial), spans)
        if spans:
            edited += 1
            assert [r.label for r in tree.radicals] == [s.label for s in spans]
        else:
            assert [r.label for r in tree.radicals] == ["1"]
        # Radicals partition the stroke list in order.
        flat = [i for r in tree.radicals for i in r.stroke_indices]
        assert flat == list(range(len(tree.strokes)))
    assert edited > 0
