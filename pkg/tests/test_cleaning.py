import random

import pytest

from penstream.cleaning import (
    ALL_MEASURES,
    CHAR_MEASURES,
    ITEM_TABLE_COLUMNS,
    LEXICAL_PREDICTORS,
    RAD_MEASURES,
    STROKE_MEASURES,
    ExclusionPolicy,
    MissingLexicalEntry,
    Observation,
    UnlabeledTrial,
    aggregate_items,
    apply_exclusions,
    coding_from_trials,
    parse_item_table,
    parse_lexical_table,
    serialize_exclusion_stats,
    serialize_item_table,
)
from penstream.metrics import MetricRow
from penstream.model import PenSample, TrialRecord


def row(subject="s1", trial=1, target="丁", stroke=1, rad="1", **overrides):
    kw = dict(
        subject=subject,
        dv_trial_id=trial,
        row_index=trial,
        self_report=0,
        target=target,
        char_dur=2000.0,
        char_rt=1500.0,
        char_len=40.0,
        char_press_avg=15000.0,
        rad_label=rad,
        rad_dur=800.0,
        rad_rt_rel=100.0 if rad != "1" else None,
        rad_len=15.0,
        rad_dist=2.0 if rad != "1" else None,
        rad_press_avg=15000.0,
        stroke_label=stroke,
        stroke_dur=100.0,
        stroke_rt_rel=80.0 if stroke != 1 else None,
        stroke_len=3.0,
        stroke_dist=1.5 if stroke != 1 else None,
        stroke_press_avg=15000.0,
    )
    kw.update(overrides)
    return MetricRow(**kw)


def label_all(rows, label="correct"):
    return {(r.subject, r.dv_trial_id): label for r in rows}


def test_policy_defaults_and_validation():
    policy = ExclusionPolicy()
    assert policy.char_rt_max == 10000.0
    assert policy.char_dur_min == 1000.0
    assert policy.char_dur_max == 10000.0
    assert policy.rad_rt_max == policy.rad_dur_max == 2000.0
    assert policy.stroke_rt_max == policy.stroke_dur_max == 2000.0
    assert policy.drop_incorrect and policy.drop_revised
    assert policy.bounds("char_rt") == (None, 10000.0)
    assert policy.bounds("char_dur") == (1000.0, 10000.0)
    assert policy.bounds("char_len") == (None, None)
    assert policy.bounds("stroke_press_avg") == (None, None)
    with pytest.raises(ValueError):
        ExclusionPolicy(char_rt_max=0.0)
    with pytest.raises(ValueError):
        ExclusionPolicy(char_dur_min=5000.0, char_dur_max=4000.0)


def test_thresholds_are_strict_inequalities():
    rows = [
        row(trial=1, char_rt=9999.0),
        row(trial=2, char_rt=10000.0),  # exactly at the cap: retained
        row(trial=3, char_rt=10001.0),
        row(trial=4, char_dur=1000.0),  # exactly at the floor: retained
        row(trial=5, char_dur=999.0),
        row(trial=6, char_dur=10001.0),
        row(trial=7, stroke_rt_rel=2000.0, stroke_label=2),
        row(trial=8, stroke_rt_rel=2001.0, stroke_label=2),
    ]
    retained, stats = apply_exclusions(rows, label_all(rows))
    rts = sorted(o.value for o in retained["char_rt"])
    assert 10000.0 in rts and 10001.0 not in rts and 9999.0 in rts
    durs = sorted(o.value for o in retained["char_dur"])
    assert 1000.0 in durs and 999.0 not in durs and 10001.0 not in durs
    stroke_rts = [o.value for o in retained["stroke_rt_rel"]]
    assert 2000.0 in stroke_rts and 2001.0 not in stroke_rts
    assert stats.counts["char_rt"] == (8, 1)
    assert stats.counts["char_dur"] == (8, 2)
    assert stats.counts["stroke_rt_rel"] == (2, 1)


def test_measures_filter_independently():
    # A wild latency must not take the same trial's duration with it.
    rows = [row(trial=1, char_rt=99999.0, char_dur=2000.0)]
    retained, stats = apply_exclusions(rows, label_all(rows))
    assert retained["char_rt"] == []
    assert [o.value for o in retained["char_dur"]] == [2000.0]
    assert stats.fraction("char_rt") == 1.0
    assert stats.fraction("char_dur") == 0.0


def test_character_and_radical_observations_deduplicate():
    # One trial, two radicals, three strokes: 1 char obs, 2 rad obs, 3 stroke obs.
    rows = [
        row(trial=1, stroke=1, rad="1"),
        row(trial=1, stroke=2, rad="1"),
        row(trial=1, stroke=3, rad="2"),
    ]
    retained, stats = apply_exclusions(rows, label_all(rows))
    assert stats.counts["char_dur"] == (1, 0)
    assert stats.counts["rad_dur"] == (2, 0)
    assert stats.counts["stroke_dur"] == (3, 0)
    assert stats.trials_total == 1


def test_na_cells_are_not_observations():
    rows = [row(trial=1, stroke=1)]  # first stroke: rt and dist are None
    retained, stats = apply_exclusions(rows, label_all(rows))
    assert "stroke_rt_rel" not in stats.counts
    assert retained["stroke_rt_rel"] == []
    assert stats.counts["stroke_dur"] == (1, 0)


def test_coding_drops_trials_wholesale():
    rows = [row(trial=1), row(trial=2), row(trial=3)]
    coding = {("s1", 1): "correct", ("s1", 2): "incorrect", ("s1", 3): "revised"}
    retained, stats = apply_exclusions(rows, coding)
    assert stats.trials_total == 3
    assert stats.trials_dropped_incorrect == 1
    assert stats.trials_dropped_revised == 1
    assert {o.trial_id for o in retained["char_dur"]} == {1}

    keep_all = ExclusionPolicy(drop_incorrect=False, drop_revised=False)
    retained, stats = apply_exclusions(rows, coding, keep_all)
    assert {o.trial_id for o in retained["char_dur"]} == {1, 2, 3}
    assert stats.trials_dropped_incorrect == 0


def test_unlabeled_trial_raises():
    rows = [row(trial=1), row(trial=2)]
    with pytest.raises(UnlabeledTrial) as err:
        apply_exclusions(rows, {("s1", 1): "correct"})
    assert err.value.trial == ("s1", 2)
    with pytest.raises(ValueError, match="unknown coding label"):
        apply_exclusions(rows[:1], {("s1", 1): "maybe"})


def test_hand_counted_exclusion_fractions():
    # 10 trials: 2 dropped by coding; of the 8 coded-correct, char_rt is
    # implausible in 2 and char_dur in 1, so fractions are 2/8 and 1/8.
    rows = []
    for trial in range(1, 11):
        char_rt = 12000.0 if trial in (3, 4) else 1500.0
        char_dur = 500.0 if trial == 5 else 2000.0
        rows.append(row(trial=trial, char_rt=char_rt, char_dur=char_dur))
    coding = label_all(rows)
    coding[("s1", 1)] = "incorrect"
    coding[("s1", 2)] = "revised"
    retained, stats = apply_exclusions(rows, coding)
    assert stats.trials_total == 10
    assert stats.counts["char_rt"] == (8, 2)
    assert stats.counts["char_dur"] == (8, 1)
    assert stats.fraction("char_rt") == pytest.approx(0.25)
    assert stats.fraction("char_dur") == pytest.approx(0.125)
    assert len(retained["char_rt"]) == 6
    assert len(retained["char_dur"]) == 7


def test_loosening_the_policy_never_excludes_more():
    rng = random.Random(314)
    rows = []
    for trial in range(1, 201):
        rows.append(
            row(
                trial=trial,
                char_rt=rng.uniform(0, 15000),
                char_dur=rng.uniform(0, 15000),
                stroke_rt_rel=rng.uniform(0, 4000),
                stroke_dur=rng.uniform(0, 4000),
                stroke_label=2,
            )
        )
    tight = ExclusionPolicy()
    loose = ExclusionPolicy(
        char_rt_max=20000.0,
        char_dur_min=1.0,
        char_dur_max=20000.0,
        stroke_rt_max=4000.0,
        stroke_dur_max=4000.0,
    )
    _, tight_stats = apply_exclusions(rows, label_all(rows), tight)
    _, loose_stats = apply_exclusions(rows, label_all(rows), loose)
    for measure in ALL_MEASURES:
        assert loose_stats.fraction(measure) <= tight_stats.fraction(measure)


def test_row_order_does_not_change_results():
    rng = random.Random(62)
    rows = []
    for trial in range(1, 31):
        # Character columns repeat one per-trial value across the rows.
        char_rt = rng.uniform(500, 12000)
        for stroke in (1, 2, 3):
            rows.append(
                row(
                    trial=trial,
                    stroke=stroke,
                    rad="1" if stroke < 3 else "2",
                    char_rt=char_rt,
                    stroke_dur=rng.uniform(10, 3000),
                )
            )
    coding = label_all(rows)
    retained_a, stats_a = apply_exclusions(rows, coding)
    shuffled = rows[:]
    rng.shuffle(shuffled)
    retained_b, stats_b = apply_exclusions(shuffled, coding)
    assert stats_a.counts == stats_b.counts
    for measure in ALL_MEASURES:
        key = lambda o: (o.subject, o.trial_id, o.value)
        assert sorted(retained_a[measure], key=key) == sorted(retained_b[measure], key=key)


def test_coding_from_trials_rules():
    def trial(tid, self_report, revised):
        return TrialRecord(
            subject_id="s",
            trial_id=tid,
            row_index=tid,
            target="丁",
            self_report=self_report,
            aud_onset=0.0,
            aud_offset=1.0,
            trial_start=0.0,
            trial_end=10.0,
            samples=(PenSample(5.0, 0.0, 0.0, 1.0),),
            revised=revised,
        )

    coding = coding_from_trials(
        [trial(1, 0, False), trial(2, 1, False), trial(3, 2, False), trial(4, 0, True)]
    )
    assert coding == {
        ("s", 1): "correct",
        ("s", 2): "incorrect",
        ("s", 3): "incorrect",
        ("s", 4): "revised",
    }


LEXICON = {
    ch: {p: float(i + k) for k, p in enumerate(LEXICAL_PREDICTORS)}
    for i, ch in enumerate(("丁", "七", "万"))
}


def reports_for(targets_reports):
    return [(f"s{i}", i, t, r) for i, (t, r) in enumerate(targets_reports, start=1)]


def test_item_means_are_flat_pooled():
    # Trial A contributes 100 and 200, trial B contributes 400: the item
    # mean pools all three observations, it does not average trial means.
    retained = {m: [] for m in ALL_MEASURES}
    retained["stroke_dur"] = [
        Observation("a", 1, "丁", 100.0),
        Observation("a", 1, "丁", 200.0),
        Observation("b", 2, "丁", 400.0),
    ]
    table = aggregate_items(retained, reports_for([("丁", 0)]), LEXICON)
    mean = table.rows[0].means["stroke_dur"]
    assert mean == pytest.approx((100 + 200 + 400) / 3)
    assert mean != pytest.approx((150 + 400) / 2)


def test_amnesia_rate_counts_all_coded_trials():
    retained = {m: [] for m in ALL_MEASURES}
    # Four coded trials of one character, one amnesia report; the trial
    # that was later excluded still belongs in the denominator.
    reports = reports_for([("丁", 0), ("丁", 0), ("丁", 1), ("丁", 2)])
    table = aggregate_items(retained, reports, LEXICON)
    assert table.rows[0].amnesia_rate == pytest.approx(0.25)
    assert table.rows[0].means["char_rt"] is None


def test_items_sorted_and_lexical_joined():
    retained = {m: [] for m in ALL_MEASURES}
    reports = reports_for([("万", 0), ("丁", 0), ("七", 1)])
    table = aggregate_items(retained, reports, LEXICON)
    assert [r.character for r in table.rows] == sorted(["万", "丁", "七"])
    for item in table.rows:
        assert item.predictors == LEXICON[item.character]
    with pytest.raises(MissingLexicalEntry):
        aggregate_items(retained, reports_for([("憩", 0)]), LEXICON)


def test_item_means_against_group_by_oracle():
    rng = random.Random(5150)
    chars = list(LEXICON)
    retained = {m: [] for m in ALL_MEASURES}
    expected = {m: {} for m in ALL_MEASURES}
    for measure in ("char_rt", "stroke_dur", "rad_len"):
        for i in range(300):
            ch = rng.choice(chars)
            value = rng.uniform(1, 5000)
            retained[measure].append(Observation(f"s{i % 7}", i, ch, value))
            expected[measure].setdefault(ch, []).append(value)
    reports = reports_for([(ch, 0) for ch in chars])
    table = aggregate_items(retained, reports, LEXICON)
    for item in table.rows:
        for measure in ("char_rt", "stroke_dur", "rad_len"):
            values = expected[measure].get(item.character)
            if values:
                assert item.means[measure] == pytest.approx(
                    sum(values) / len(values), rel=1e-12
                )
            else:
                assert item.means[measure] is None


def lexical_text():
    header = "target\t" + "\t".join(LEXICAL_PREDICTORS)
    lines = [header]
    for ch, values in LEXICON.items():
        lines.append(ch + "\t" + "\t".join(repr(values[p]) for p in LEXICAL_PREDICTORS))
    return "\n".join(lines) + "\n"


def test_parse_lexical_table():
    table = parse_lexical_table(lexical_text())
    assert table == LEXICON
    # Column matching is case-insensitive and accepts "character" as key.
    renamed = lexical_text().replace("target", "CHARACTER", 1).replace(
        "Word familiarity", "WORD FAMILIARITY", 1
    )
    assert parse_lexical_table(renamed) == LEXICON


def test_parse_lexical_table_errors():
    from penstream.ingest import MalformedRow, MissingColumn

    with pytest.raises(MissingColumn, match="missing column target"):
        parse_lexical_table("word\t" + "\t".join(LEXICAL_PREDICTORS) + "\n")
    truncated = "target\t" + "\t".join(LEXICAL_PREDICTORS[:-1]) + "\n"
    with pytest.raises(MissingColumn, match="Word familiarity"):
        parse_lexical_table(truncated)
    bad = lexical_text().replace("\t2.0\t", "\tx\t", 1)
    with pytest.raises(MalformedRow):
        parse_lexical_table(bad)


def test_predictor_names_fixed():
    assert LEXICAL_PREDICTORS == (
        "Phonogram",
        "Sound radical order",
        "Regularity",
        "Homophone density",
        "Number of meanings",
        "Imageability",
        "Concreteness",
        "Frequency",
        "Age of acquisition",
        "Number of strokes",
        "Number of radicals",
        "Left-right",
        "Top-bottom",
        "Word familiarity",
    )
    assert len(CHAR_MEASURES) == 4
    assert len(RAD_MEASURES) == len(STROKE_MEASURES) == 5
    assert ITEM_TABLE_COLUMNS[:2] == ("target", "amnesia_rate")


def test_serialize_exclusion_stats_layout():
    rows = [row(trial=1, char_rt=12000.0), row(trial=2)]
    _, stats = apply_exclusions(rows, label_all(rows))
    text = serialize_exclusion_stats(stats)
    lines = text.splitlines()
    assert lines[0] == "measure\tobservations\texcluded\tfraction"
    assert lines[1] == "trials\t2\t0\t0"
    by_measure = {l.split("\t")[0]: l.split("\t") for l in lines[1:]}
    assert by_measure["char_rt"] == ["char_rt", "2", "1", "0.5"]
    assert by_measure["char_dur"] == ["char_dur", "2", "0", "0"]


def test_item_table_round_trip():
    retained = {m: [] for m in ALL_MEASURES}
    retained["char_rt"] = [Observation("a", 1, "丁", 1234.5)]
    reports = reports_for([("丁", 0), ("七", 1), ("七", 0)])
    table = aggregate_items(retained, reports, LEXICON)
    text = serialize_item_table(table)
    assert text.splitlines()[0] == "\t".join(ITEM_TABLE_COLUMNS)
    back = parse_item_table(text)
    assert [r.character for r in back.rows] == [r.character for r in table.rows]
    for orig, parsed in zip(table.rows, back.rows):
        assert parsed.amnesia_rate == pytest.approx(orig.amnesia_rate, abs=5.1e-7)
        assert parsed.means == orig.means  # repr round-trips exactly
        assert parsed.predictors == orig.predictors
