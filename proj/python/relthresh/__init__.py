"""Size-relative software metric thresholds.

Thin wrapper over the compiled ``_core`` module. Structured results are
returned as plain dicts.
"""

from ._core import (
    Corpus,
    RelthreshError,
    background_risk,
    correct_intercept,
    estimate_from_fixture,
    finalize_threshold,
    fit_logistic,
    g_mean,
    generate_synthetic,
    load_corpus,
    nemenyi_cd,
    planted_boundary_spec,
    planted_line_spec,
    published_models,
    rank_test,
    risk_at,
    run_pipeline,
    spearman,
    varl_threshold,
)

__all__ = [
    "Corpus",
    "RelthreshError",
    "background_risk",
    "correct_intercept",
    "estimate_from_fixture",
    "finalize_threshold",
    "fit_logistic",
    "g_mean",
    "generate_synthetic",
    "load_corpus",
    "nemenyi_cd",
    "planted_boundary_spec",
    "planted_line_spec",
    "published_models",
    "rank_test",
    "risk_at",
    "run_pipeline",
    "spearman",
    "varl_threshold",
]
