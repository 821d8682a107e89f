"""Response coding, outlier exclusion, and item-level aggregation.

Trials are first dropped wholesale by their coding (incorrect responses,
revised penscripts), then each measure is filtered independently against
its level's thresholds: an implausible character latency removes that
latency observation only, never the trial's duration or the radical
rows.  Independent per-measure filtering is what lets latency and
duration exclusion rates differ at the same level.

Thresholds are strict: a value is excluded iff it exceeds the max or
falls below the min, so a latency exactly at the cap survives.

Aggregation collapses retained observations across participants into
one row per target character (a flat pooled mean, not a per-trial mean
of means), joins the lexical predictors, and computes the amnesia rate
with all coded trials in the denominator: self-reported retrieval
failures are counted before any correctness-based exclusion.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .metrics import MetricRow, NA, format_length

LEXICAL_PREDICTORS = (
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

CHAR_MEASURES = ("char_rt", "char_dur", "char_len", "char_press_avg")
RAD_MEASURES = ("rad_rt_rel", "rad_dur", "rad_len", "rad_dist", "rad_press_avg")
STROKE_MEASURES = (
    "stroke_rt_rel",
    "stroke_dur",
    "stroke_len",
    "stroke_dist",
    "stroke_press_avg",
)
ALL_MEASURES = CHAR_MEASURES + RAD_MEASURES + STROKE_MEASURES

CODING_LABELS = ("correct", "incorrect", "revised")

SELF_REPORT_AMNESIA = 1


class UnlabeledTrial(ValueError):
    def __init__(self, trial: tuple[str, int]):
        super().__init__(f"trial {trial} has no coding label")
        self.trial = trial


class MissingLexicalEntry(ValueError):
    def __init__(self, character: str):
        super().__init__(f"no lexical entry for character {character!r}")
        self.character = character


@dataclass(frozen=True)
class ExclusionPolicy:
    char_rt_max: float = 10000.0
    char_dur_min: float = 1000.0
    char_dur_max: float = 10000.0
    rad_rt_max: float = 2000.0
    rad_dur_max: float = 2000.0
    stroke_rt_max: float = 2000.0
    stroke_dur_max: float = 2000.0
    drop_incorrect: bool = True
    drop_revised: bool = True

    def __post_init__(self) -> None:
        for name in (
            "char_rt_max",
            "char_dur_min",
            "char_dur_max",
            "rad_rt_max",
            "rad_dur_max",
            "stroke_rt_max",
            "stroke_dur_max",
        ):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")
        if self.char_dur_min >= self.char_dur_max:
            raise ValueError("char_dur_min must be < char_dur_max")

    def bounds(self, measure: str) -> tuple[float | None, float | None]:
        """(min, max) exclusion bounds for a measure; (None, None) = unfiltered."""
        return {
            "char_rt": (None, self.char_rt_max),
            "char_dur": (self.char_dur_min, self.char_dur_max),
            "rad_rt_rel": (None, self.rad_rt_max),
            "rad_dur": (None, self.rad_dur_max),
            "stroke_rt_rel": (None, self.stroke_rt_max),
            "stroke_dur": (None, self.stroke_dur_max),
        }.get(measure, (None, None))


@dataclass(frozen=True)
class Observation:
    subject: str
    trial_id: int
    target: str
    value: float


@dataclass
class ExclusionStats:
    trials_total: int = 0
    trials_dropped_incorrect: int = 0
    trials_dropped_revised: int = 0
    # measure -> (observations seen, observations excluded)
    counts: dict[str, tuple[int, int]] = field(default_factory=dict)

    def fraction(self, measure: str) -> float:
        seen, excluded = self.counts.get(measure, (0, 0))
        return excluded / seen if seen else 0.0


def coding_from_trials(trials) -> dict[tuple[str, int], str]:
    """Default coding when no manual penscript check is available.

    self_report 0 is taken as correct; any nonzero report (amnesia or
    other failure) as incorrect; the revised flag wins over both.
    """
    coding = {}
    for trial in trials:
        if trial.revised:
            label = "revised"
        elif trial.self_report == 0:
            label = "correct"
        else:
            label = "incorrect"
        coding[(trial.subject_id, trial.trial_id)] = label
    return coding


def _excluded(value: float, bounds: tuple[float | None, float | None]) -> bool:
    lo, hi = bounds
    if lo is not None and value < lo:
        return True
    if hi is not None and value > hi:
        return True
    return False


def apply_exclusions(
    rows: list[MetricRow],
    coding: dict[tuple[str, int], str],
    policy: ExclusionPolicy | None = None,
) -> tuple[dict[str, list[Observation]], ExclusionStats]:
    """Filter long-format rows into per-measure retained observations.

    Character measures contribute one observation per trial, radical
    measures one per radical, stroke measures one per row.  NA cells
    (first-stroke latencies and distances) are not observations and
    count toward nothing.
    """
    policy = policy or ExclusionPolicy()
    stats = ExclusionStats()
    retained: dict[str, list[Observation]] = {m: [] for m in ALL_MEASURES}

    kept_trials: set[tuple[str, int]] = set()
    dropped_trials: set[tuple[str, int]] = set()
    seen_trials: set[tuple[str, int]] = set()
    for row in rows:
        key = (row.subject, row.dv_trial_id)
        if key in seen_trials:
            continue
        seen_trials.add(key)
        stats.trials_total += 1
        if key not in coding:
            raise UnlabeledTrial(key)
        label = coding[key]
        if label not in CODING_LABELS:
            raise ValueError(f"unknown coding label {label!r} for trial {key}")
        if label == "incorrect" and policy.drop_incorrect:
            stats.trials_dropped_incorrect += 1
            dropped_trials.add(key)
        elif label == "revised" and policy.drop_revised:
            stats.trials_dropped_revised += 1
            dropped_trials.add(key)
        else:
            kept_trials.add(key)

    def offer(measure: str, row: MetricRow, value: float | None) -> None:
        if value is None:
            return
        seen, excluded = stats.counts.get(measure, (0, 0))
        if _excluded(value, policy.bounds(measure)):
            stats.counts[measure] = (seen + 1, excluded + 1)
        else:
            stats.counts[measure] = (seen + 1, excluded)
            retained[measure].append(
                Observation(row.subject, row.dv_trial_id, row.target, value)
            )

    seen_char: set[tuple[str, int]] = set()
    seen_rad: set[tuple[str, int, str]] = set()
    for row in rows:
        key = (row.subject, row.dv_trial_id)
        if key in dropped_trials:
            continue
        if key not in seen_char:
            seen_char.add(key)
            for measure in CHAR_MEASURES:
                offer(measure, row, getattr(row, measure))
        rad_key = (row.subject, row.dv_trial_id, row.rad_label)
        if rad_key not in seen_rad:
            seen_rad.add(rad_key)
            for measure in RAD_MEASURES:
                offer(measure, row, getattr(row, measure))
        for measure in STROKE_MEASURES:
            offer(measure, row, getattr(row, measure))
    return retained, stats


@dataclass(frozen=True)
class ItemRow:
    character: str
    amnesia_rate: float
    # measure -> pooled mean over retained observations, None if none retained
    means: dict[str, float | None]
    predictors: dict[str, float]


@dataclass(frozen=True)
class ItemTable:
    rows: tuple[ItemRow, ...]

    def column(self, name: str) -> dict[str, float | None]:
        if name == "amnesia_rate":
            return {r.character: r.amnesia_rate for r in self.rows}
        if name in LEXICAL_PREDICTORS:
            return {r.character: r.predictors[name] for r in self.rows}
        return {r.character: r.means.get(name) for r in self.rows}


def aggregate_items(
    retained: dict[str, list[Observation]],
    trial_reports: list[tuple[str, int, str, int]],
    lexical: dict[str, dict[str, float]],
) -> ItemTable:
    """Collapse observations across participants into one row per character.

    trial_reports lists every coded trial as (subject, trial_id, target,
    self_report); the amnesia denominator is that full list, counted per
    character, regardless of later exclusions.
    """
    characters: list[str] = []
    reports_by_char: dict[str, list[int]] = {}
    for _, _, target, report in trial_reports:
        if target not in reports_by_char:
            characters.append(target)
            reports_by_char[target] = []
        reports_by_char[target].append(report)
    for observations in retained.values():
        for obs in observations:
            if obs.target not in reports_by_char:
                characters.append(obs.target)
                reports_by_char[obs.target] = []

    rows = []
    for character in sorted(characters):
        if character not in lexical:
            raise MissingLexicalEntry(character)
        means: dict[str, float | None] = {}
        for measure in ALL_MEASURES:
            values = [o.value for o in retained.get(measure, ()) if o.target == character]
            means[measure] = sum(values) / len(values) if values else None
        reports = reports_by_char[character]
        rate = (
            sum(1 for r in reports if r == SELF_REPORT_AMNESIA) / len(reports)
            if reports
            else 0.0
        )
        rows.append(
            ItemRow(
                character=character,
                amnesia_rate=rate,
                means=means,
                predictors={p: lexical[character][p] for p in LEXICAL_PREDICTORS},
            )
        )
    return ItemTable(rows=tuple(rows))


def parse_lexical_table(text: str) -> dict[str, dict[str, float]]:
    """Read the predictor table: one row per character, 14 named columns."""
    from .ingest import EmptyReport, MalformedRow, MissingColumn, detect_delimiter

    lines = [l for l in text.splitlines() if l.strip()]
    if not lines:
        raise EmptyReport()
    delimiter = detect_delimiter(lines[0])
    header = [h.strip() for h in lines[0].split(delimiter)]
    lowered = [h.lower() for h in header]
    key_col = None
    for candidate in ("target", "character"):
        if candidate in lowered:
            key_col = lowered.index(candidate)
            break
    if key_col is None:
        raise MissingColumn("target")
    indices = {}
    for predictor in LEXICAL_PREDICTORS:
        if predictor.lower() not in lowered:
            raise MissingColumn(predictor)
        indices[predictor] = lowered.index(predictor.lower())

    table = {}
    for number, line in enumerate(lines[1:], start=2):
        fields = line.split(delimiter)
        if len(fields) != len(header):
            raise MalformedRow(number, f"expected {len(header)} fields, got {len(fields)}")
        character = fields[key_col].strip()
        values = {}
        for predictor, i in indices.items():
            try:
                values[predictor] = float(fields[i])
            except ValueError:
                raise MalformedRow(
                    number, f"non-numeric {predictor}: {fields[i]!r}"
                ) from None
        table[character] = values
    return table


def serialize_exclusion_stats(stats: ExclusionStats) -> str:
    lines = [
        "measure\tobservations\texcluded\tfraction",
        f"trials\t{stats.trials_total}\t"
        f"{stats.trials_dropped_incorrect + stats.trials_dropped_revised}\t"
        + (
            format_length(
                (stats.trials_dropped_incorrect + stats.trials_dropped_revised)
                / stats.trials_total,
                decimals=6,
            )
            if stats.trials_total
            else "0"
        ),
    ]
    for measure in ALL_MEASURES:
        seen, excluded = stats.counts.get(measure, (0, 0))
        lines.append(
            f"{measure}\t{seen}\t{excluded}\t"
            + format_length(stats.fraction(measure), decimals=6)
        )
    return "\n".join(lines) + "\n"


ITEM_TABLE_COLUMNS = ("target", "amnesia_rate") + ALL_MEASURES + LEXICAL_PREDICTORS


def serialize_item_table(table: ItemTable) -> str:
    lines = ["\t".join(ITEM_TABLE_COLUMNS)]
    for row in table.rows:
        fields = [row.character, format_length(row.amnesia_rate, decimals=6)]
        for measure in ALL_MEASURES:
            value = row.means.get(measure)
            fields.append(NA if value is None else repr(value))
        for predictor in LEXICAL_PREDICTORS:
            fields.append(repr(row.predictors[predictor]))
        lines.append("\t".join(fields))
    return "\n".join(lines) + "\n"


def parse_item_table(text: str) -> ItemTable:
    from .ingest import EmptyReport, MalformedRow, MissingColumn, detect_delimiter

    lines = [l for l in text.splitlines() if l.strip()]
    if not lines:
        raise EmptyReport()
    delimiter = detect_delimiter(lines[0])
    header = [h.strip() for h in lines[0].split(delimiter)]
    for name in ITEM_TABLE_COLUMNS:
        if name not in header:
            raise MissingColumn(name)
    index = {name: header.index(name) for name in ITEM_TABLE_COLUMNS}

    rows = []
    for number, line in enumerate(lines[1:], start=2):
        fields = line.split(delimiter)
        if len(fields) != len(header):
            raise MalformedRow(number, f"expected {len(header)} fields, got {len(fields)}")

        def parse(name: str) -> float | None:
            token = fields[index[name]].strip()
            if token == NA:
                return None
            try:
                return float(token)
            except ValueError:
                raise MalformedRow(number, f"non-numeric {name}: {token!r}") from None

        means = {m: parse(m) for m in ALL_MEASURES}
        predictors = {}
        for p in LEXICAL_PREDICTORS:
            value = parse(p)
            if value is None:
                raise MalformedRow(number, f"predictor {p} is NA")
            predictors[p] = value
        rate = parse("amnesia_rate")
        rows.append(
            ItemRow(
                character=fields[index["target"]].strip(),
                amnesia_rate=rate if rate is not None else 0.0,
                means=means,
                predictors=predictors,
            )
        )
    return ItemTable(rows=tuple(rows))
