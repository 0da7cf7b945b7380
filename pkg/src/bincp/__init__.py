"""Binarized conformal prediction with randomized-smoothing certificates."""

from .certify import (
    BINARY,
    GAUSSIAN,
    L1,
    L2,
    MAX,
    MIN,
    SPARSE,
    UNIFORM,
    RegionTable,
    SmoothingScheme,
    ThreatModel,
    binary_ball,
    build_region_table,
    cert_lower,
    cert_lower_vec,
    cert_upper,
    cert_upper_vec,
    gaussian,
    greedy_lp,
    invert_ball,
    l1_ball,
    l2_ball,
    sparse,
    uniform,
)
from .conformal import (
    FIXED_P,
    FIXED_TAU,
    CalibrationConfig,
    CalibrationResult,
    PredictionSet,
    calibrate_fixed_p,
    calibrate_fixed_tau,
    conformal_quantile,
    corrected_calibrate,
    predict,
    robustify,
    rscp_baseline,
    vanilla_cp,
    vanilla_sets,
)
from .intervals import (
    IntervalSpec,
    bernstein_bound,
    cp_lower,
    cp_lower_vec,
    cp_upper,
    cp_upper_vec,
    cp_vs_hoeffding_probability,
    hoeffding_bound,
)
from .scores import (
    APS,
    LOGIT,
    TPS,
    ScoreFileError,
    ScoreFunction,
    ScoreSamples,
    aps_score,
    binarize,
    draw_aps_ties,
    load_score_samples,
    logit_score,
    pass_fractions,
    save_score_samples,
    score,
    tps_score,
    true_class_values,
)
from .simulate import (
    AdversaryOracle,
    EvalConfig,
    GeneratorSpec,
    Report,
    SyntheticData,
    TrialResult,
    attack,
    evaluate,
    exact_duality_gap,
    generate,
    resample,
    run_trial,
)

__version__ = "0.1.0"

__all__ = [
    "APS",
    "BINARY",
    "FIXED_P",
    "FIXED_TAU",
    "GAUSSIAN",
    "L1",
    "L2",
    "LOGIT",
    "MAX",
    "MIN",
    "SPARSE",
    "TPS",
    "UNIFORM",
    "AdversaryOracle",
    "CalibrationConfig",
    "CalibrationResult",
    "EvalConfig",
    "GeneratorSpec",
    "IntervalSpec",
    "PredictionSet",
    "RegionTable",
    "Report",
    "ScoreFileError",
    "ScoreFunction",
    "ScoreSamples",
    "SmoothingScheme",
    "SyntheticData",
    "ThreatModel",
    "TrialResult",
    "aps_score",
    "attack",
    "bernstein_bound",
    "binarize",
    "binary_ball",
    "build_region_table",
    "calibrate_fixed_p",
    "calibrate_fixed_tau",
    "cert_lower",
    "cert_lower_vec",
    "cert_upper",
    "cert_upper_vec",
    "conformal_quantile",
    "corrected_calibrate",
    "cp_lower",
    "cp_lower_vec",
    "cp_upper",
    "cp_upper_vec",
    "cp_vs_hoeffding_probability",
    "draw_aps_ties",
    "evaluate",
    "exact_duality_gap",
    "gaussian",
    "generate",
    "greedy_lp",
    "hoeffding_bound",
    "invert_ball",
    "l1_ball",
    "l2_ball",
    "load_score_samples",
    "logit_score",
    "pass_fractions",
    "predict",
    "resample",
    "robustify",
    "rscp_baseline",
    "run_trial",
    "save_score_samples",
    "score",
    "sparse",
    "tps_score",
    "true_class_values",
    "uniform",
    "vanilla_cp",
    "vanilla_sets",
]
