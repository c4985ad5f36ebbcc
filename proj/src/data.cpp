#include "times2d/data.hpp"

#include "times2d/errors.hpp"
#include "times2d/rng.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>

namespace times2d {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && (s[a] == ' ' || s[a] == '\t' || s[a] == '\r')) ++a;
    while (b > a && (s[b - 1] == ' ' || s[b - 1] == '\t' || s[b - 1] == '\r')) --b;
    return s.substr(a, b - a);
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == ',') {
            out.push_back(trim(line.substr(start, i - start)));
            start = i + 1;
        }
    }
    return out;
}

/// Locale-independent full-string double parse.
bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
}

} // namespace

RawSeries load_csv(const std::string& path, const LoadOptions& options) {
    std::ifstream in(path);
    if (!in) throw DataError("load_csv: cannot open '" + path + "'");

    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!trim(line).empty()) lines.push_back(line);
    }
    if (lines.empty()) throw DataError("load_csv: '" + path + "' is empty");

    // Header detection: a first row with any cell that is not a number.
    auto first_fields = split_line(lines[0]);
    bool has_header = false;
    for (const auto& f : first_fields) {
        double unused;
        if (!parse_double(f, unused)) {
            has_header = true;
            break;
        }
    }

    const std::size_t first_data = has_header ? 1 : 0;
    if (first_data >= lines.size())
        throw DataError("load_csv: '" + path + "' has a header but no data rows");

    // Timestamp column: first cell of the first data row fails numeric parse.
    auto probe = split_line(lines[first_data]);
    if (probe.empty()) throw DataError("load_csv: line " + std::to_string(first_data + 1) + " is empty");
    double unused;
    const bool has_timestamp = !parse_double(probe[0], unused);
    const std::size_t value_offset = has_timestamp ? 1 : 0;
    if (probe.size() <= value_offset)
        throw DataError("load_csv: no numeric columns in '" + path + "'");

    RawSeries raw;
    raw.cols = probe.size() - value_offset;
    if (has_header) {
        for (std::size_t c = value_offset; c < first_fields.size(); ++c)
            raw.column_names.push_back(first_fields[c]);
        if (raw.column_names.size() != raw.cols)
            throw DataError("load_csv: header width does not match data width in '" + path + "'");
    } else {
        for (std::size_t c = 0; c < raw.cols; ++c) raw.column_names.push_back("var" + std::to_string(c));
    }

    raw.values.reserve((lines.size() - first_data) * raw.cols);
    for (std::size_t li = first_data; li < lines.size(); ++li) {
        const std::size_t line_no = li + 1; // 1-based, matching editors
        auto fields = split_line(lines[li]);
        if (fields.size() != raw.cols + value_offset)
            throw DataError("load_csv: line " + std::to_string(line_no) + ": expected " +
                            std::to_string(raw.cols + value_offset) + " fields, got " +
                            std::to_string(fields.size()));
        if (has_timestamp) raw.timestamps.push_back(fields[0]);
        for (std::size_t c = 0; c < raw.cols; ++c) {
            const std::string& cell = fields[c + value_offset];
            double v;
            if (cell.empty()) {
                if (options.fill_forward && raw.rows > 0) {
                    v = raw.values[(raw.rows - 1) * raw.cols + c];
                } else {
                    throw DataError("load_csv: line " + std::to_string(line_no) +
                                    ": blank cell in column '" + raw.column_names[c] + "'" +
                                    (options.fill_forward ? " (no previous row to fill from)" : ""));
                }
            } else if (!parse_double(cell, v)) {
                throw DataError("load_csv: line " + std::to_string(line_no) +
                                ": non-numeric cell '" + cell + "'");
            }
            if (!std::isfinite(v))
                throw DataError("load_csv: line " + std::to_string(line_no) + ": non-finite value");
            raw.values.push_back(v);
        }
        ++raw.rows;
    }
    return raw;
}

Splits split_normalize(const RawSeries& raw, const std::vector<double>& ratios,
                       const std::optional<NormStats>& given) {
    if (ratios.size() != 3) throw ConfigError("split_normalize: need exactly three ratios");
    double total = 0.0;
    for (double r : ratios) {
        if (r <= 0.0) throw ConfigError("split_normalize: ratios must be positive");
        total += r;
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw ConfigError("split_normalize: ratios must sum to 1, got " + std::to_string(total));

    const std::size_t T = raw.rows, N = raw.cols;
    const std::size_t n_train = static_cast<std::size_t>(static_cast<double>(T) * ratios[0]);
    const std::size_t n_val = static_cast<std::size_t>(static_cast<double>(T) * ratios[1]);
    if (n_train == 0 || n_val == 0 || n_val + n_train >= T)
        throw ConfigError("split_normalize: series of length " + std::to_string(T) +
                          " too short for ratios");
    const std::size_t n_test = T - n_train - n_val;

    Splits out;
    out.column_names = raw.column_names;

    if (given) {
        if (given->mean.size() != N || given->stddev.size() != N)
            throw ConfigError("split_normalize: provided stats do not match variable count");
        out.stats = *given;
    } else {
        out.stats.mean.assign(N, 0.0);
        out.stats.stddev.assign(N, 0.0);
        for (std::size_t r = 0; r < n_train; ++r)
            for (std::size_t c = 0; c < N; ++c) out.stats.mean[c] += raw.at(r, c);
        for (std::size_t c = 0; c < N; ++c) out.stats.mean[c] /= static_cast<double>(n_train);
        for (std::size_t r = 0; r < n_train; ++r)
            for (std::size_t c = 0; c < N; ++c) {
                const double d = raw.at(r, c) - out.stats.mean[c];
                out.stats.stddev[c] += d * d;
            }
        for (std::size_t c = 0; c < N; ++c) {
            out.stats.stddev[c] = std::sqrt(out.stats.stddev[c] / static_cast<double>(n_train));
            if (out.stats.stddev[c] < 1e-8) {
                std::cerr << "warning: variable '" << raw.column_names[c]
                          << "' is constant on the training split; flooring std at 1e-8\n";
                out.stats.stddev[c] = 1e-8;
            }
        }
    }

    auto emit = [&](std::size_t begin, std::size_t count) {
        SplitSeries s;
        s.rows = count;
        s.cols = N;
        s.values.resize(count * N);
        for (std::size_t r = 0; r < count; ++r)
            for (std::size_t c = 0; c < N; ++c)
                s.values[r * N + c] =
                    (raw.at(begin + r, c) - out.stats.mean[c]) / out.stats.stddev[c];
        return s;
    };
    out.train = emit(0, n_train);
    out.val = emit(n_train, n_val);
    out.test = emit(n_train + n_val, n_test);
    return out;
}

double denormalize_value(const NormStats& stats, std::size_t var, double v) {
    return v * stats.stddev[var] + stats.mean[var];
}

double normalize_value(const NormStats& stats, std::size_t var, double v) {
    return (v - stats.mean[var]) / stats.stddev[var];
}

WindowSet make_windows(std::size_t series_rows, std::size_t input_len, std::size_t target_len,
                       std::size_t stride) {
    if (stride == 0) throw ConfigError("make_windows: stride must be >= 1");
    if (series_rows < input_len + target_len)
        throw ConfigError("make_windows: series of length " + std::to_string(series_rows) +
                          " cannot hold one window of S+P = " +
                          std::to_string(input_len + target_len));
    WindowSet ws;
    ws.input_len = input_len;
    ws.target_len = target_len;
    ws.stride = stride;
    const std::size_t last_start = series_rows - input_len - target_len;
    for (std::size_t s = 0; s <= last_start; s += stride) ws.starts.push_back(s);
    return ws;
}

std::vector<std::vector<std::size_t>> batch_schedule(std::size_t window_count, std::size_t batch,
                                                     bool shuffle, std::uint64_t seed) {
    if (batch == 0) throw ConfigError("batch_schedule: batch size must be >= 1");
    std::vector<std::size_t> order(window_count);
    for (std::size_t i = 0; i < window_count; ++i) order[i] = i;
    if (shuffle) {
        Rng rng(seed);
        deterministic_shuffle(order, rng);
    }
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t i = 0; i < window_count; i += batch) {
        const std::size_t end = std::min(window_count, i + batch);
        batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                             order.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return batches;
}

template <typename T>
std::pair<Tensor<T>, Tensor<T>> gather_batch(const SplitSeries& series, const WindowSet& windows,
                                             const std::vector<std::size_t>& which) {
    const std::size_t B = which.size(), S = windows.input_len, P = windows.target_len,
                      N = series.cols;
    std::vector<T> xs(B * S * N), ys(B * P * N);
    for (std::size_t b = 0; b < B; ++b) {
        const std::size_t start = windows.starts.at(which[b]);
        for (std::size_t t = 0; t < S; ++t)
            for (std::size_t c = 0; c < N; ++c)
                xs[(b * S + t) * N + c] = static_cast<T>(series.at(start + t, c));
        for (std::size_t t = 0; t < P; ++t)
            for (std::size_t c = 0; c < N; ++c)
                ys[(b * P + t) * N + c] = static_cast<T>(series.at(start + S + t, c));
    }
    return {Tensor<T>::from_data({B, S, N}, std::move(xs)),
            Tensor<T>::from_data({B, P, N}, std::move(ys))};
}

template std::pair<Tensor<float>, Tensor<float>>
gather_batch<float>(const SplitSeries&, const WindowSet&, const std::vector<std::size_t>&);
template std::pair<Tensor<double>, Tensor<double>>
gather_batch<double>(const SplitSeries&, const WindowSet&, const std::vector<std::size_t>&);

} // namespace times2d
