#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace times2d {

/// Evaluation summary over one forecast horizon (or an average of many).
/// naive_* are the same metrics for the baseline forecaster, as consumed by
/// the overall weighted average.
struct MetricReport {
    double mse = 0.0;
    double mae = 0.0;
    double smape = 0.0;
    double mase = 0.0;
    double owa = 0.0;
    double naive_smape = 0.0;
    double naive_mase = 0.0;
    std::size_t horizon = 0;
    std::size_t season = 1;
};

struct PointMetrics {
    double mse;
    double mae;
};

PointMetrics point_metrics(std::span<const double> pred, std::span<const double> actual);

/// 200/H * sum |p-a| / (|p|+|a|); terms with both values zero contribute 0.
double smape(std::span<const double> pred, std::span<const double> actual);

/// Scaled absolute error with the seasonal-difference denominator taken over
/// the horizon actuals: (1/(H-s)) * sum_{j=s}^{H-1} |a[j] - a[j-s]|.
/// Requires H > s and a nonzero denominator.
double mase(std::span<const double> pred, std::span<const double> actual, std::size_t season);

/// Conventional variant: denominator from the seasonal differences of a
/// training history instead of the horizon actuals.
double mase_insample(std::span<const double> pred, std::span<const double> actual,
                     std::span<const double> history, std::size_t season);

double owa(double smape_model, double mase_model, double smape_naive, double mase_naive);
double owa(const MetricReport& model, const MetricReport& naive);

/// pred[i] = history[len - s + (i mod s)]: repeats the last observed cycle.
std::vector<double> seasonal_naive_forecast(std::span<const double> history, std::size_t season,
                                            std::size_t horizon);

/// Flat `key=value` lines.
std::string report_text(const MetricReport& r);
/// Header plus one CSV row.
std::string report_csv(const MetricReport& r);

} // namespace times2d
