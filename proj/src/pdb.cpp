#include "times2d/pdb.hpp"

#include "times2d/ops.hpp"

#include <algorithm>
#include <cmath>

namespace times2d {

template <typename T>
Tensor<T> positional_encoding(std::size_t tokens, std::size_t d_model) {
    if (tokens < 1) throw ShapeError("positional_encoding: need at least one position");
    std::vector<T> pe(tokens * d_model, T(0));
    for (std::size_t j = 0; j < tokens; ++j) {
        for (std::size_t m = 0; 2 * m < d_model; ++m) {
            const double exponent = static_cast<double>(2 * m) / static_cast<double>(d_model);
            const double arg = static_cast<double>(j) / std::pow(10000.0, exponent);
            pe[j * d_model + 2 * m] = static_cast<T>(std::sin(arg));
            if (2 * m + 1 < d_model) pe[j * d_model + 2 * m + 1] = static_cast<T>(std::cos(arg));
        }
    }
    return Tensor<T>::from_data({tokens, d_model}, std::move(pe));
}

template <typename T>
PdbBlock<T>::PdbBlock(const ModelConfig& cfg, ParamStore<T>& params)
    : cfg_(cfg), params_(params) {
    if (cfg_.d_model % cfg_.heads != 0)
        throw ConfigError("pdb: d_model " + std::to_string(cfg_.d_model) +
                          " not divisible by heads " + std::to_string(cfg_.heads));
    // Shared parameters are materialized eagerly so checkpoints and the
    // optimizer see them before the first forward pass.
    const std::size_t N = cfg_.n_vars, C = cfg_.conv_channels, d = cfg_.d_model, dff = cfg_.d_ff;
    params_.get_or_create_uniform("pdb.conv.w", {C, N, 3, 3}, N * 9);
    for (std::size_t l = 0; l < cfg_.depth; ++l) {
        const std::string p = "pdb.enc" + std::to_string(l);
        for (const char* mat : {".wq", ".wk", ".wv", ".wo"})
            params_.get_or_create_uniform(p + mat, {d, d}, d);
        for (const char* vec : {".bq", ".bk", ".bv", ".bo"})
            params_.get_or_create_constant(p + vec, {d}, T(0));
        params_.get_or_create_uniform(p + ".ffn.w1", {d, dff}, d);
        params_.get_or_create_constant(p + ".ffn.b1", {dff}, T(0));
        params_.get_or_create_uniform(p + ".ffn.w2", {dff, d}, dff);
        params_.get_or_create_constant(p + ".ffn.b2", {d}, T(0));
        params_.get_or_create_constant(p + ".norm1.gamma", {d}, T(1));
        params_.get_or_create_constant(p + ".norm1.beta", {d}, T(0));
        params_.get_or_create_constant(p + ".norm2.gamma", {d}, T(1));
        params_.get_or_create_constant(p + ".norm2.beta", {d}, T(0));
    }
}

template <typename T>
Tensor<T> PdbBlock<T>::dropout(const Tensor<T>& t, const ForwardMode& mode) {
    if (!mode.training || cfg_.dropout <= 0.0 || mode.dropout_rng == nullptr) return t;
    const T keep = static_cast<T>(1.0 - cfg_.dropout);
    std::vector<T> mask(t.size());
    for (auto& m : mask)
        m = mode.dropout_rng->next_unit() < cfg_.dropout ? T(0) : T(1) / keep;
    return mul(t, Tensor<T>::from_data(t.shape(), std::move(mask)));
}

template <typename T>
Tensor<T> PdbBlock<T>::mhsa(const Tensor<T>& tokens, std::size_t depth_index,
                            const ForwardMode& mode) {
    const std::size_t B = tokens.shape()[0], f = tokens.shape()[1], d = cfg_.d_model;
    const std::size_t h = cfg_.heads, hd = d / h;
    const std::string p = "pdb.enc" + std::to_string(depth_index);

    auto project = [&](const char* w, const char* b) {
        auto flat = reshape(tokens, {B * f, d});
        return bias_add(matmul(flat, params_.at(p + w)), params_.at(p + b));
    };
    // [B*f,d] -> [B,f,h,hd] -> [B,h,f,hd] -> [B*h,f,hd]
    auto to_heads = [&](Tensor<T> m) {
        m = reshape(m, {B, f, h, hd});
        m = permute(m, {0, 2, 1, 3});
        return reshape(m, {B * h, f, hd});
    };
    auto q = to_heads(project(".wq", ".bq"));
    auto k = to_heads(project(".wk", ".bk"));
    auto v = to_heads(project(".wv", ".bv"));

    auto scores = bmm(q, permute(k, {0, 2, 1}));
    scores = mul(scores, static_cast<T>(1.0 / std::sqrt(static_cast<double>(hd))));
    auto weights = softmax(scores, -1);
    auto ctx = bmm(weights, v); // [B*h,f,hd]

    ctx = reshape(ctx, {B, h, f, hd});
    ctx = permute(ctx, {0, 2, 1, 3});
    ctx = reshape(ctx, {B * f, d});
    auto out = bias_add(matmul(ctx, params_.at(p + ".wo")), params_.at(p + ".bo"));
    return dropout(reshape(out, {B, f, d}), mode);
}

template <typename T>
Tensor<T> PdbBlock<T>::ffn(const Tensor<T>& tokens, std::size_t depth_index,
                           const ForwardMode& mode) {
    const std::size_t B = tokens.shape()[0], f = tokens.shape()[1], d = cfg_.d_model;
    const std::string p = "pdb.enc" + std::to_string(depth_index);
    auto flat = reshape(tokens, {B * f, d});
    auto hidden = gelu(bias_add(matmul(flat, params_.at(p + ".ffn.w1")), params_.at(p + ".ffn.b1")));
    auto out = bias_add(matmul(hidden, params_.at(p + ".ffn.w2")), params_.at(p + ".ffn.b2"));
    return dropout(reshape(out, {B, f, d}), mode);
}

template <typename T>
Tensor<T> PdbBlock<T>::encoder(const Tensor<T>& tokens, const ForwardMode& mode) {
    Tensor<T> t = tokens;
    const T eps = static_cast<T>(1e-5);
    for (std::size_t l = 0; l < cfg_.depth; ++l) {
        const std::string p = "pdb.enc" + std::to_string(l);
        t = add(t, mhsa(t, l, mode));
        t = layer_norm(t, params_.at(p + ".norm1.gamma"), params_.at(p + ".norm1.beta"), eps);
        t = add(t, ffn(t, l, mode));
        t = layer_norm(t, params_.at(p + ".norm2.gamma"), params_.at(p + ".norm2.beta"), eps);
    }
    return t;
}

template <typename T>
BranchOutput<T> PdbBlock<T>::branch_forward(const Tensor<T>& x, const PeriodEntry& entry,
                                            const ForwardMode& mode) {
    const std::size_t B = x.shape()[0], N = x.shape()[2];
    const std::size_t p = entry.period, f = entry.freq;
    const std::size_t C = cfg_.conv_channels, d = cfg_.d_model;
    const std::size_t P = cfg_.pred_len;

    auto grid = fold_to_2d(x, p, f);                          // [B,N,p,f]
    auto feat = conv2d(grid, params_.at("pdb.conv.w"), Pad::Same); // [B,C,p,f]

    // Each column (one full period across C channels) becomes one token.
    auto cols = permute(feat, {0, 3, 1, 2});   // [B,f,C,p]
    cols = reshape(cols, {B * f, C * p});

    const std::string embed_key =
        "pdb.embed.p" + std::to_string(p) + "f" + std::to_string(f);
    auto& embed_w = params_.get_or_create_uniform(embed_key + ".w", {C * p, d}, C * p);
    auto& embed_b = params_.get_or_create_constant(embed_key + ".b", {d}, T(0));
    auto tokens = reshape(bias_add(matmul(cols, embed_w), embed_b), {B, f, d});

    // Positional table is fixed (not trained); tile it across the batch.
    auto pe = positional_encoding<T>(f, d);
    std::vector<T> tiled(B * f * d);
    for (std::size_t b = 0; b < B; ++b)
        std::copy(pe.data(), pe.data() + f * d, tiled.begin() + static_cast<std::ptrdiff_t>(b * f * d));
    tokens = add(tokens, Tensor<T>::from_data({B, f, d}, std::move(tiled)));

    tokens = encoder(tokens, mode);

    const std::string head_key = "pdb.head.f" + std::to_string(f);
    auto& head_w = params_.get_or_create_uniform(head_key + ".w", {f * d, P * N}, f * d);
    auto& head_b = params_.get_or_create_constant(head_key + ".b", {P * N}, T(0));
    auto flat = reshape(tokens, {B, f * d});
    auto pred = reshape(bias_add(matmul(flat, head_w), head_b), {B, P, N});

    return BranchOutput<T>{pred, entry.amplitude};
}

template <typename T>
Tensor<T> PdbBlock<T>::branch_merge(const std::vector<BranchOutput<T>>& branches) {
    if (branches.empty()) throw ShapeError("branch_merge: empty branch list");
    for (const auto& b : branches)
        if (b.prediction.shape() != branches[0].prediction.shape())
            throw ShapeError("branch_merge: branch shape mismatch");

    // Softmax over the (constant) branch amplitudes; max-subtracted for
    // stability since raw magnitudes scale with S and signal power.
    double mx = branches[0].amplitude;
    for (const auto& b : branches) mx = std::max(mx, b.amplitude);
    double denom = 0.0;
    std::vector<double> w(branches.size());
    for (std::size_t i = 0; i < branches.size(); ++i) {
        w[i] = std::exp(branches[i].amplitude - mx);
        denom += w[i];
    }
    Tensor<T> merged = mul(branches[0].prediction, static_cast<T>(w[0] / denom));
    for (std::size_t i = 1; i < branches.size(); ++i)
        merged = add(merged, mul(branches[i].prediction, static_cast<T>(w[i] / denom)));
    return merged;
}

template class PdbBlock<float>;
template class PdbBlock<double>;
template Tensor<float> positional_encoding<float>(std::size_t, std::size_t);
template Tensor<double> positional_encoding<double>(std::size_t, std::size_t);

} // namespace times2d
