"""penstream: pen-trajectory reports to hierarchical handwriting metrics.

Pipeline shape: ingest digitizer pen-sample reports, detect strokes from
pressure transitions, group them into radicals via annotated time
windows, compute stroke/radical/character measures, apply coding and
threshold exclusions, aggregate per character, and fit the item-level
regressions.  A synthetic-trial generator with analytically known
metrics serves as the test oracle, and a JSON-lines bundle format
exchanges trials with the browser annotation tool.
"""

from .cleaning import (
    ExclusionPolicy,
    ExclusionStats,
    ItemRow,
    ItemTable,
    LEXICAL_PREDICTORS,
    MissingLexicalEntry,
    UnlabeledTrial,
    aggregate_items,
    apply_exclusions,
    coding_from_trials,
    parse_lexical_table,
)
from .ingest import (
    ConditionTable,
    EmptyReport,
    MalformedRow,
    MissingColumn,
    OverlappingSpans,
    ReportError,
    SegmentSpan,
    SegmentsReport,
    parse_condition_file,
    parse_pen_sample_report,
    parse_segments_report,
    serialize_pen_sample_report,
    serialize_segments_report,
    validate_condition_file,
)
from .metrics import (
    CharacterMetrics,
    EmptyTree,
    MetricRow,
    METRIC_COLUMNS,
    RadicalMetrics,
    StrokeMetrics,
    TrialMetrics,
    compute_metrics,
    compute_trial_metrics,
    first_member_consistency,
    parse_metric_rows,
    serialize_metric_rows,
)
from .model import (
    PenSample,
    RadicalSpan,
    SegmentTree,
    StrokeSpan,
    TabletSpec,
    TrialRecord,
    validate_trial,
)
from .segmentation import (
    NonPositiveInput,
    UnassignedStroke,
    build_segment_tree,
    calibrate_lpmm,
    detect_strokes,
)
from .stats import (
    CorrelationMatrix,
    DesignMatrix,
    FitResult,
    InsufficientRows,
    LevelItems,
    MismatchedItems,
    RankDeficient,
    ZeroVariance,
    build_level_design,
    ols_fit,
    pearson_matrix,
    t_sf,
    vif_stepwise,
    z_transform,
)
from .synth import InvalidSpec, StrokeShape, SynthResult, SynthSpec, generate_trial, random_spec
from .bundle import (
    TrialBundle,
    export_bundles,
    import_annotations,
    parse_bundles,
    serialize_annotations,
)
from .viz import (
    NonSquare,
    PlotSpec,
    character_plot_name,
    render_character,
    render_correlation_heatmap,
    render_stroke_panels,
)

__version__ = "0.1.0"
