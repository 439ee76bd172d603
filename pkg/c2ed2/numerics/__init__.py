from .linalg import (
    Annihilator,
    RankReport,
    annihilate,
    collinear_columns,
    least_squares,
    rank_report,
)

__all__ = [
    "Annihilator",
    "RankReport",
    "annihilate",
    "collinear_columns",
    "least_squares",
    "rank_report",
]
