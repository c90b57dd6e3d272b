"""Feature assembly, diagnostics, factor analysis and hypothesis tests."""

from .crosstab import WinRateTable, crosstab
from .diagnostics import correlation_matrix, kmo, vif
from .efa import (
    AUTO,
    FactorLabel,
    FactorModel,
    HeywoodWarning,
    Level,
    NonConvergenceWarning,
    efa,
    label_factors,
    scree_elbow,
)
from .features import COLLECTIVE_COLUMNS, INDIVIDUAL_COLUMNS, FeatureMatrix, assemble_features, team_tier
from .stats import KWResult, chi2_logsf, chi2_sf, kruskal_wallis

__all__ = [
    "AUTO",
    "COLLECTIVE_COLUMNS",
    "INDIVIDUAL_COLUMNS",
    "FactorLabel",
    "FactorModel",
    "FeatureMatrix",
    "HeywoodWarning",
    "KWResult",
    "Level",
    "NonConvergenceWarning",
    "WinRateTable",
    "assemble_features",
    "chi2_logsf",
    "chi2_sf",
    "correlation_matrix",
    "crosstab",
    "efa",
    "kmo",
    "kruskal_wallis",
    "label_factors",
    "scree_elbow",
    "team_tier",
    "vif",
]
