from central_spin_bench.metrics.deviation import (
    DeviationMetric, MaxAbsDeviation, RmsDeviation)

METRICS = {
    "max_abs": MaxAbsDeviation,
    "rms": RmsDeviation,
}
