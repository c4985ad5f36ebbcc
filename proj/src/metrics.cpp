#include "times2d/metrics.hpp"

#include "times2d/errors.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace times2d {

namespace {

void check_lengths(std::span<const double> pred, std::span<const double> actual, const char* op) {
    if (pred.size() != actual.size() || pred.empty())
        throw MetricError(std::string(op) + ": length mismatch (" + std::to_string(pred.size()) +
                          " vs " + std::to_string(actual.size()) + ")");
}

std::string fmt9(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

} // namespace

PointMetrics point_metrics(std::span<const double> pred, std::span<const double> actual) {
    check_lengths(pred, actual, "point_metrics");
    double se = 0.0, ae = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - actual[i];
        se += d * d;
        ae += std::abs(d);
    }
    const double inv_h = 1.0 / static_cast<double>(pred.size());
    return PointMetrics{se * inv_h, ae * inv_h};
}

double smape(std::span<const double> pred, std::span<const double> actual) {
    check_lengths(pred, actual, "smape");
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double denom = std::abs(pred[i]) + std::abs(actual[i]);
        if (denom > 0.0) acc += std::abs(pred[i] - actual[i]) / denom;
        // 0/0 contributes 0 (limit convention)
    }
    return 200.0 * acc / static_cast<double>(pred.size());
}

double mase(std::span<const double> pred, std::span<const double> actual, std::size_t season) {
    check_lengths(pred, actual, "mase");
    const std::size_t H = actual.size();
    if (season < 1 || H <= season)
        throw MetricError("mase: horizon " + std::to_string(H) +
                          " must exceed seasonal period " + std::to_string(season));
    double num = 0.0;
    for (std::size_t i = 0; i < H; ++i) num += std::abs(pred[i] - actual[i]);
    num /= static_cast<double>(H);
    double den = 0.0;
    for (std::size_t j = season; j < H; ++j) den += std::abs(actual[j] - actual[j - season]);
    den /= static_cast<double>(H - season);
    if (den == 0.0) throw MetricError("mase: zero seasonal-difference denominator");
    return num / den;
}

double mase_insample(std::span<const double> pred, std::span<const double> actual,
                     std::span<const double> history, std::size_t season) {
    check_lengths(pred, actual, "mase_insample");
    if (season < 1 || history.size() <= season)
        throw MetricError("mase_insample: history of length " + std::to_string(history.size()) +
                          " must exceed seasonal period " + std::to_string(season));
    double num = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) num += std::abs(pred[i] - actual[i]);
    num /= static_cast<double>(actual.size());
    double den = 0.0;
    for (std::size_t j = season; j < history.size(); ++j)
        den += std::abs(history[j] - history[j - season]);
    den /= static_cast<double>(history.size() - season);
    if (den == 0.0) throw MetricError("mase_insample: zero seasonal-difference denominator");
    return num / den;
}

double owa(double smape_model, double mase_model, double smape_naive, double mase_naive) {
    if (smape_naive <= 0.0 || mase_naive <= 0.0)
        throw MetricError("owa: naive baseline metrics must be positive");
    return 0.5 * (smape_model / smape_naive + mase_model / mase_naive);
}

double owa(const MetricReport& model, const MetricReport& naive) {
    return owa(model.smape, model.mase, naive.smape, naive.mase);
}

std::vector<double> seasonal_naive_forecast(std::span<const double> history, std::size_t season,
                                            std::size_t horizon) {
    if (season < 1 || history.size() < season)
        throw MetricError("seasonal_naive_forecast: need at least " + std::to_string(season) +
                          " history points, got " + std::to_string(history.size()));
    std::vector<double> pred(horizon);
    const std::size_t base = history.size() - season;
    for (std::size_t i = 0; i < horizon; ++i) pred[i] = history[base + (i % season)];
    return pred;
}

std::string report_text(const MetricReport& r) {
    std::ostringstream os;
    os << "mse=" << fmt9(r.mse) << '\n'
       << "mae=" << fmt9(r.mae) << '\n'
       << "smape=" << fmt9(r.smape) << '\n'
       << "mase=" << fmt9(r.mase) << '\n'
       << "owa=" << fmt9(r.owa) << '\n'
       << "naive_smape=" << fmt9(r.naive_smape) << '\n'
       << "naive_mase=" << fmt9(r.naive_mase) << '\n'
       << "horizon=" << r.horizon << '\n'
       << "season=" << r.season << '\n';
    return os.str();
}

std::string report_csv(const MetricReport& r) {
    std::ostringstream os;
    os << "mse,mae,smape,mase,owa,naive_smape,naive_mase,horizon,season\n"
       << fmt9(r.mse) << ',' << fmt9(r.mae) << ',' << fmt9(r.smape) << ',' << fmt9(r.mase) << ','
       << fmt9(r.owa) << ',' << fmt9(r.naive_smape) << ',' << fmt9(r.naive_mase) << ','
       << r.horizon << ',' << r.season << '\n';
    return os.str();
}

} // namespace times2d
