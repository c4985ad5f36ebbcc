#include "times2d/fsdh.hpp"

#include "times2d/errors.hpp"
#include "times2d/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace times2d {

template <typename T>
Tensor<T> first_difference(const Tensor<T>& x) {
    if (x.rank() != 3)
        throw ShapeError("first_difference: expected [B,S,N], got " + shape_str(x.shape()));
    const std::size_t B = x.shape()[0], S = x.shape()[1], N = x.shape()[2];
    if (S < 2) throw DataError("first_difference: input too short, need S >= 2");
    auto head = slice(x, {0, 1, 0}, {B, S - 1, N});
    auto tail = slice(x, {0, 0, 0}, {B, S - 1, N});
    return pad_zero(sub(head, tail), {{0, 0}, {1, 0}, {0, 0}});
}

template <typename T>
Tensor<T> second_difference(const Tensor<T>& d1) {
    return first_difference(d1);
}

template <typename T>
Tensor<T> build_heatmap(const Tensor<T>& d1, const Tensor<T>& d2) {
    if (d1.shape() != d2.shape())
        throw ShapeError("build_heatmap: shape mismatch " + shape_str(d1.shape()) + " vs " +
                         shape_str(d2.shape()));
    auto d1t = permute(d1, {0, 2, 1}); // [B,N,S]
    auto d2t = permute(d2, {0, 2, 1});
    return stack(std::vector<Tensor<T>>{d1t, d2t}, 2); // [B,N,2,S]
}

template <typename T>
FsdhBlock<T>::FsdhBlock(const ModelConfig& cfg, ParamStore<T>& params)
    : cfg_(cfg), params_(params) {
    const std::size_t C = cfg_.heatmap_channels, S = cfg_.seq_len, P = cfg_.pred_len;
    params_.get_or_create_uniform("fsdh.conv1.w", {C, 1, 3, 3}, 9);
    params_.get_or_create_uniform("fsdh.conv2.w", {C, C, 3, 3}, C * 9);
    // Contraction weights over the (derivative x channel) axes. Alternatives
    // (per-time or per-derivative-only weights) would change this tensor's
    // shape and the permute below, nothing else.
    params_.get_or_create_uniform("fsdh.collapse.w", {2 * C, 1}, 2 * C);
    params_.get_or_create_uniform("fsdh.head.w", {S, P}, S);
    params_.get_or_create_constant("fsdh.head.b", {P}, T(0));
}

template <typename T>
Tensor<T> FsdhBlock<T>::forward(const Tensor<T>& x) {
    if (x.rank() != 3 || x.shape()[1] != cfg_.seq_len)
        throw ShapeError("fsdh: expected [B," + std::to_string(cfg_.seq_len) + ",N], got " +
                         shape_str(x.shape()));
    const std::size_t B = x.shape()[0], S = x.shape()[1], N = x.shape()[2];
    if (S < 3) throw DataError("fsdh: input too short, need S >= 3");
    const std::size_t C = cfg_.heatmap_channels, P = cfg_.pred_len;

    auto d1 = first_difference(x);
    auto d2 = second_difference(d1);
    auto heat = build_heatmap(d1, d2);            // [B,N,2,S]
    auto grid = reshape(heat, {B * N, 1, 2, S});  // variables processed independently

    auto feat = gelu(conv2d(grid, params_.at("fsdh.conv1.w"), Pad::Same)); // [B*N,C,2,S]
    feat = conv2d(feat, params_.at("fsdh.conv2.w"), Pad::Same);

    // Contract the (channel, derivative) axes with learned weights.
    auto byc = permute(feat, {0, 3, 1, 2});            // [B*N,S,C,2]
    byc = reshape(byc, {B * N * S, C * 2});
    auto collapsed = matmul(byc, params_.at("fsdh.collapse.w")); // [B*N*S,1]
    collapsed = reshape(collapsed, {B * N, S});

    auto pred = bias_add(matmul(collapsed, params_.at("fsdh.head.w")), params_.at("fsdh.head.b"));
    pred = reshape(pred, {B, N, P});
    return permute(pred, {0, 2, 1}); // [B,P,N]
}

namespace {

std::string exact(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

template <typename T>
void export_heatmap(const Tensor<T>& heatmap, const std::string& path, HeatmapFormat format) {
    if (heatmap.rank() != 4 || heatmap.shape()[2] != 2)
        throw ShapeError("export_heatmap: expected [B,N,2,S], got " + shape_str(heatmap.shape()));
    const std::size_t B = heatmap.shape()[0], N = heatmap.shape()[1], S = heatmap.shape()[3];

    if (format == HeatmapFormat::Csv) {
        std::ofstream out(path);
        if (!out) throw DataError("export_heatmap: cannot write '" + path + "'");
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t n = 0; n < N; ++n) {
                out << "# heatmap batch=" << b << " var=" << n << " rows=2 cols=" << S << '\n';
                for (std::size_t d = 0; d < 2; ++d) {
                    for (std::size_t t = 0; t < S; ++t) {
                        if (t) out << ',';
                        out << exact(static_cast<double>(heatmap.at({b, n, d, t})));
                    }
                    out << '\n';
                }
            }
        if (!out) throw DataError("export_heatmap: write failed for '" + path + "'");
        return;
    }

    // PGM: one P2 image per (batch, variable), |value| min-max scaled.
    std::string stem = path;
    if (stem.size() > 4 && stem.substr(stem.size() - 4) == ".pgm") stem.resize(stem.size() - 4);
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t n = 0; n < N; ++n) {
            double lo = std::abs(static_cast<double>(heatmap.at({b, n, 0, 0})));
            double hi = lo;
            for (std::size_t d = 0; d < 2; ++d)
                for (std::size_t t = 0; t < S; ++t) {
                    const double m = std::abs(static_cast<double>(heatmap.at({b, n, d, t})));
                    lo = std::min(lo, m);
                    hi = std::max(hi, m);
                }
            const double range = hi > lo ? hi - lo : 1.0;
            const std::string file =
                stem + "_b" + std::to_string(b) + "_v" + std::to_string(n) + ".pgm";
            std::ofstream out(file);
            if (!out) throw DataError("export_heatmap: cannot write '" + file + "'");
            out << "P2\n" << S << " 2\n255\n";
            for (std::size_t d = 0; d < 2; ++d) {
                for (std::size_t t = 0; t < S; ++t) {
                    const double m = std::abs(static_cast<double>(heatmap.at({b, n, d, t})));
                    const int px = static_cast<int>(std::lround((m - lo) / range * 255.0));
                    out << (t ? " " : "") << px;
                }
                out << '\n';
            }
            if (!out) throw DataError("export_heatmap: write failed for '" + file + "'");
        }
}

Tensor<double> parse_heatmap_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("parse_heatmap_csv: cannot open '" + path + "'");
    std::size_t B = 0, N = 0, S = 0;
    std::vector<double> values;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::size_t b = 0, n = 0, cols = 0;
            if (std::sscanf(line.c_str(), "# heatmap batch=%zu var=%zu rows=2 cols=%zu", &b, &n,
                            &cols) != 3)
                throw DataError("parse_heatmap_csv: bad block header: " + line);
            B = std::max(B, b + 1);
            N = std::max(N, n + 1);
            if (S == 0) S = cols;
            if (S != cols) throw DataError("parse_heatmap_csv: inconsistent block widths");
            continue;
        }
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) values.push_back(std::stod(cell));
    }
    if (B == 0 || S == 0 || values.size() != B * N * 2 * S)
        throw DataError("parse_heatmap_csv: truncated file '" + path + "'");
    return Tensor<double>::from_data({B, N, 2, S}, std::move(values));
}

#define TIMES2D_INSTANTIATE_FSDH(T)                                                    \
    template Tensor<T> first_difference<T>(const Tensor<T>&);                          \
    template Tensor<T> second_difference<T>(const Tensor<T>&);                         \
    template Tensor<T> build_heatmap<T>(const Tensor<T>&, const Tensor<T>&);           \
    template class FsdhBlock<T>;                                                       \
    template void export_heatmap<T>(const Tensor<T>&, const std::string&, HeatmapFormat);

TIMES2D_INSTANTIATE_FSDH(float)
TIMES2D_INSTANTIATE_FSDH(double)

#undef TIMES2D_INSTANTIATE_FSDH

} // namespace times2d
