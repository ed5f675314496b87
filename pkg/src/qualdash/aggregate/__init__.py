"""Time-binned aggregation over audit tables."""

from .binning import (Timeframe, bin_edges_ordinals, bin_floor, bin_label,
                      bin_starts, next_bin)
from .engine import (BinSeries, Distribution, DistributionEntry, FieldQuality,
                     QualityStats, Selection, apply_running, breakdown,
                     cohort_ids, filter_records, interval_series,
                     measure_series, quality_stats, series_for_measure,
                     yearly_context)

__all__ = [
    "BinSeries", "Distribution", "DistributionEntry", "FieldQuality",
    "QualityStats", "Selection", "Timeframe", "apply_running",
    "bin_edges_ordinals", "bin_floor", "bin_label", "bin_starts", "breakdown",
    "cohort_ids", "filter_records", "interval_series", "measure_series",
    "next_bin", "quality_stats", "series_for_measure", "yearly_context",
]
