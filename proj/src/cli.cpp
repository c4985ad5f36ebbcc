#include "times2d/cli.hpp"

#include "times2d/checkpoint.hpp"
#include "times2d/metrics.hpp"
#include "times2d/runconfig.hpp"
#include "times2d/train.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace times2d::cli {

namespace {

std::string fmt9(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << content;
    if (!out) throw DataError("write failed for '" + path + "'");
}

Splits load_and_split(const RunConfig& rc, const std::optional<NormStats>& stats = std::nullopt) {
    if (rc.data_path.empty()) throw ConfigError("no data file given (use --data or the config)");
    LoadOptions opts;
    opts.fill_forward = rc.fill_forward;
    RawSeries raw = load_csv(rc.data_path, opts);
    return split_normalize(raw, rc.split_ratios, stats);
}

/// Restores a model from a checkpoint: config comes from the file, tensors
/// are installed, frozen periods (when present) are re-frozen.
template <typename T>
std::unique_ptr<Times2dModel<T>> model_from_checkpoint(const Checkpoint<T>& ckpt) {
    auto model = std::make_unique<Times2dModel<T>>(ckpt.config);
    for (const auto& [name, tensor] : ckpt.tensors)
        if (name.rfind("adam.", 0) != 0) model->params().put(name, tensor);
    if (ckpt.frozen_periods) model->freeze_periods(*ckpt.frozen_periods);
    return model;
}

template <typename T>
Checkpoint<T> checkpoint_from_model(const Times2dModel<T>& model, const AdamState<T>& opt,
                                    const NormStats& stats,
                                    const std::vector<std::string>& columns) {
    Checkpoint<T> ckpt;
    ckpt.config = model.config();
    ckpt.stats = stats;
    ckpt.column_names = columns;
    ckpt.frozen_periods = model.frozen_periods();
    ckpt.step = opt.step;
    ckpt.rng_state = model.config().seed;
    for (const auto& [name, p] : model.params().entries()) ckpt.tensors.emplace(name, p);
    for (const auto& [name, m] : opt.m)
        ckpt.tensors.emplace("adam.m." + name,
                             Tensor<T>::from_data(model.params().at(name).shape(), m));
    for (const auto& [name, v] : opt.v)
        ckpt.tensors.emplace("adam.v." + name,
                             Tensor<T>::from_data(model.params().at(name).shape(), v));
    return ckpt;
}

template <typename T>
int cmd_train_impl(RunConfig rc) {
    rc.validate();
    std::filesystem::create_directories(rc.out_dir);
    Splits splits = load_and_split(rc);
    if (splits.train.cols != rc.model.n_vars) {
        // variable count follows the data unless configured explicitly
        rc.model.n_vars = splits.train.cols;
        rc.model.validate();
    }

    auto train_windows = make_windows(splits.train.rows, rc.model.seq_len, rc.model.pred_len,
                                      rc.stride);
    auto val_windows = make_windows(splits.val.rows, rc.model.seq_len, rc.model.pred_len,
                                    rc.eval_stride);

    Times2dModel<T> model(rc.model);
    if (rc.model.frozen_periods)
        model.freeze_periods(
            estimate_frozen_periods<T>(splits.train, train_windows, rc.model.top_k));

    auto result =
        train(model, rc.train, splits.train, train_windows, &splits.val, &val_windows,
              [&](const EpochStats& e) {
                  std::cout << "epoch " << e.epoch + 1 << "/" << rc.train.epochs
                            << " train=" << fmt9(e.train_loss) << " val=" << fmt9(e.val_loss)
                            << " (" << fmt9(e.seconds) << " s)\n";
              });

    const std::string ckpt_path = rc.out_dir + "/best.ckpt";
    save_checkpoint(checkpoint_from_model(model, result.opt_state, splits.stats,
                                          splits.column_names),
                    ckpt_path);

    // history.csv is byte-reproducible across seeded runs by default; wall
    // time is opt-in via --timing (it is always printed to the console).
    std::ostringstream hist;
    hist << "epoch,train_loss,val_loss,seconds\n";
    for (const auto& e : result.history)
        hist << e.epoch << ',' << fmt9(e.train_loss) << ',' << fmt9(e.val_loss) << ','
             << (rc.timing ? fmt9(e.seconds) : "0.000000000") << '\n';
    write_file(rc.out_dir + "/history.csv", hist.str());
    write_file(rc.out_dir + "/config.snapshot", config_snapshot(rc));

    std::cout << "best epoch " << result.best_epoch + 1 << ", final val_loss = "
              << fmt9(result.best_val_loss) << "\n"
              << "checkpoint: " << ckpt_path << "\n";
    return 0;
}

struct EvalAccumulator {
    double mse = 0, mae = 0, smape_sum = 0, mase_sum = 0;
    double naive_smape_sum = 0, naive_mase_sum = 0, naive_mse = 0;
    std::size_t count = 0, mase_count = 0, mase_skipped = 0;
};

/// Per-(window, variable) metrics on denormalized values, averaged.
template <typename T>
EvalAccumulator evaluate_windows(Times2dModel<T>& model, const SplitSeries& split,
                                 const WindowSet& windows, const NormStats& stats,
                                 const RunConfig& rc) {
    const std::size_t S = model.config().seq_len, P = model.config().pred_len;
    const std::size_t N = model.config().n_vars;
    EvalAccumulator acc;
    for (const auto& idx : batch_schedule(windows.size(), rc.train.batch, false, 0)) {
        auto [x, y] = gather_batch<T>(split, windows, idx);
        auto pred = model.forward(x);
        for (std::size_t b = 0; b < idx.size(); ++b) {
            for (std::size_t n = 0; n < N; ++n) {
                std::vector<double> p(P), a(P), hist(S);
                for (std::size_t t = 0; t < P; ++t) {
                    p[t] = denormalize_value(stats, n, static_cast<double>(pred.at({b, t, n})));
                    a[t] = denormalize_value(stats, n, static_cast<double>(y.at({b, t, n})));
                }
                for (std::size_t t = 0; t < S; ++t)
                    hist[t] = denormalize_value(stats, n, static_cast<double>(x.at({b, t, n})));

                auto pm = point_metrics(p, a);
                acc.mse += pm.mse;
                acc.mae += pm.mae;
                acc.smape_sum += smape(p, a);
                auto naive = seasonal_naive_forecast(hist, rc.season, P);
                acc.naive_smape_sum += smape(naive, a);
                acc.naive_mse += point_metrics(naive, a).mse;
                try {
                    double m, mn;
                    if (rc.mase_insample) {
                        m = mase_insample(p, a, hist, rc.season);
                        mn = mase_insample(naive, a, hist, rc.season);
                    } else {
                        m = mase(p, a, rc.season);
                        mn = mase(naive, a, rc.season);
                    }
                    acc.mase_sum += m;
                    acc.naive_mase_sum += mn;
                    ++acc.mase_count;
                } catch (const MetricError&) {
                    ++acc.mase_skipped;
                }
                ++acc.count;
            }
        }
    }
    return acc;
}

MetricReport finalize_report(const EvalAccumulator& acc, std::size_t horizon, std::size_t season) {
    if (acc.count == 0) throw DataError("evaluate: no test windows");
    if (acc.mase_count == 0)
        throw MetricError("evaluate: MASE undefined for every window (seasonal "
                          "difference degenerate); adjust --season");
    MetricReport r;
    r.horizon = horizon;
    r.season = season;
    const double inv = 1.0 / static_cast<double>(acc.count);
    const double inv_m = 1.0 / static_cast<double>(acc.mase_count);
    r.mse = acc.mse * inv;
    r.mae = acc.mae * inv;
    r.smape = acc.smape_sum * inv;
    r.mase = acc.mase_sum * inv_m;
    r.naive_smape = acc.naive_smape_sum * inv;
    r.naive_mase = acc.naive_mase_sum * inv_m;
    r.owa = owa(r.smape, r.mase, r.naive_smape, r.naive_mase);
    return r;
}

template <typename T>
int cmd_evaluate_impl(RunConfig rc) {
    if (rc.checkpoint_path.empty()) throw ConfigError("evaluate: --ckpt is required");
    auto ckpt = load_checkpoint<T>(rc.checkpoint_path);
    std::filesystem::create_directories(rc.out_dir);

    if (rc.data_path.empty()) throw ConfigError("no data file given (use --data or the config)");
    LoadOptions opts;
    opts.fill_forward = rc.fill_forward;
    RawSeries raw = load_csv(rc.data_path, opts);
    if (raw.cols != ckpt.config.n_vars)
        throw CheckpointError("evaluate: checkpoint expects " +
                              std::to_string(ckpt.config.n_vars) + " variables, data has " +
                              std::to_string(raw.cols));
    Splits splits = split_normalize(raw, rc.split_ratios,
                                    ckpt.stats.mean.empty()
                                        ? std::nullopt
                                        : std::optional<NormStats>(ckpt.stats));

    auto model = model_from_checkpoint(ckpt);
    auto windows = make_windows(splits.test.rows, ckpt.config.seq_len, ckpt.config.pred_len,
                                rc.eval_stride);
    auto acc = evaluate_windows(*model, splits.test, windows, splits.stats, rc);
    if (acc.mase_skipped)
        std::cerr << "warning: MASE undefined for " << acc.mase_skipped << " of " << acc.count
                  << " window/variable pairs (zero seasonal denominator); excluded from the mean\n";
    auto report = finalize_report(acc, ckpt.config.pred_len, rc.season);

    write_file(rc.out_dir + "/report.txt", report_text(report));
    write_file(rc.out_dir + "/report.csv", report_csv(report));
    std::cout << report_text(report);
    std::cout << "naive_mse=" << fmt9(acc.naive_mse / static_cast<double>(acc.count)) << '\n';
    return 0;
}

template <typename T>
int cmd_forecast_impl(RunConfig rc) {
    if (rc.checkpoint_path.empty()) throw ConfigError("forecast: --ckpt is required");
    auto ckpt = load_checkpoint<T>(rc.checkpoint_path);
    std::filesystem::create_directories(rc.out_dir);
    if (rc.data_path.empty()) throw ConfigError("no data file given (use --data or the config)");

    LoadOptions opts;
    opts.fill_forward = rc.fill_forward;
    RawSeries raw = load_csv(rc.data_path, opts);
    const std::size_t S = ckpt.config.seq_len, P = ckpt.config.pred_len, N = ckpt.config.n_vars;
    if (raw.cols != N)
        throw CheckpointError("forecast: checkpoint expects " + std::to_string(N) +
                              " variables, data has " + std::to_string(raw.cols));
    if (raw.rows < S)
        throw DataError("forecast: need at least " + std::to_string(S) + " rows, got " +
                        std::to_string(raw.rows));
    if (ckpt.stats.mean.size() != N)
        throw CheckpointError("forecast: checkpoint carries no normalization statistics");
    const std::size_t horizon = rc.horizon == 0 ? P : rc.horizon;
    if (horizon > P)
        throw ConfigError("forecast: horizon " + std::to_string(horizon) +
                          " exceeds the model prediction length " + std::to_string(P));

    std::vector<T> xs(S * N);
    for (std::size_t t = 0; t < S; ++t)
        for (std::size_t n = 0; n < N; ++n)
            xs[t * N + n] = static_cast<T>(
                normalize_value(ckpt.stats, n, raw.at(raw.rows - S + t, n)));
    auto model = model_from_checkpoint(ckpt);
    auto pred = model->forward(Tensor<T>::from_data({1, S, N}, std::move(xs)));

    const auto& names = !ckpt.column_names.empty() ? ckpt.column_names : raw.column_names;
    std::ostringstream csv;
    for (std::size_t n = 0; n < N; ++n) csv << (n ? "," : "") << names[n];
    csv << '\n';
    for (std::size_t t = 0; t < horizon; ++t) {
        for (std::size_t n = 0; n < N; ++n)
            csv << (n ? "," : "")
                << fmt9(denormalize_value(ckpt.stats, n, static_cast<double>(pred.at({0, t, n}))));
        csv << '\n';
    }
    write_file(rc.out_dir + "/forecast.csv", csv.str());
    std::cout << csv.str();
    return 0;
}

int cmd_inspect_periods(RunConfig rc) {
    rc.validate();
    Splits splits = load_and_split(rc);
    auto windows = make_windows(splits.train.rows, rc.model.seq_len, rc.model.pred_len, rc.stride);
    auto [x, y] = gather_batch<double>(splits.train, windows, {0});
    (void)y;
    auto periods = top_k_periods(rfft_magnitude(x), rc.model.top_k);
    for (const auto& e : periods.entries)
        std::cout << "f=" << e.freq << " period=" << e.period << " amplitude=" << fmt9(e.amplitude)
                  << '\n';
    return 0;
}

int cmd_heatmap(RunConfig rc, const std::string& format) {
    rc.validate();
    std::filesystem::create_directories(rc.out_dir);
    Splits splits = load_and_split(rc);
    auto windows = make_windows(splits.train.rows, rc.model.seq_len, rc.model.pred_len, rc.stride);
    auto [x, y] = gather_batch<double>(splits.train, windows, {0});
    (void)y;
    auto d1 = first_difference(x);
    auto heat = build_heatmap(d1, second_difference(d1));
    if (format == "csv") {
        export_heatmap(heat, rc.out_dir + "/heatmap.csv", HeatmapFormat::Csv);
        std::cout << "wrote " << rc.out_dir << "/heatmap.csv\n";
    } else if (format == "pgm") {
        export_heatmap(heat, rc.out_dir + "/heatmap.pgm", HeatmapFormat::Pgm);
        std::cout << "wrote " << rc.out_dir << "/heatmap_b<batch>_v<var>.pgm\n";
    } else {
        throw ConfigError("heatmap: --format must be csv or pgm");
    }
    return 0;
}

void add_common_flags(CLI::App* cmd, RunConfig& rc, std::string& config_path,
                      std::string& loss_str, std::string& split_str) {
    cmd->add_option("--config", config_path, "key = value configuration file");
    cmd->add_option("--data", rc.data_path, "input CSV path");
    cmd->add_option("--out", rc.out_dir, "output directory");
    cmd->add_option("--seed", rc.model.seed, "random seed");
    cmd->add_option("--seq-len", rc.model.seq_len, "input window length S");
    cmd->add_option("--pred-len", rc.model.pred_len, "prediction length P");
    cmd->add_option("--k", rc.model.top_k, "dominant periods per window");
    cmd->add_option("--d-model", rc.model.d_model, "token embedding width");
    cmd->add_option("--d-ff", rc.model.d_ff, "feed-forward width");
    cmd->add_option("--heads", rc.model.heads, "attention heads");
    cmd->add_option("--c-mid", rc.model.conv_channels, "branch conv channels");
    cmd->add_option("--c-h", rc.model.heatmap_channels, "heatmap conv channels");
    cmd->add_option("--depth", rc.model.depth, "encoder sub-blocks per branch");
    cmd->add_option("--dropout", rc.model.dropout, "dropout rate");
    cmd->add_option("--precision", rc.model.precision, "storage precision (32|64)");
    cmd->add_flag("--frozen-periods", rc.model.frozen_periods,
                  "estimate periods once from training data");
    cmd->add_option("--batch", rc.train.batch, "batch size");
    cmd->add_option("--lr", rc.train.lr, "learning rate");
    cmd->add_option("--epochs", rc.train.epochs, "training epochs");
    cmd->add_option("--patience", rc.train.patience, "early-stop patience");
    cmd->add_option("--clip-norm", rc.train.clip_norm, "global gradient-norm clip");
    cmd->add_option("--loss", loss_str, "training loss {mse,mae,smape}");
    cmd->add_option("--split", split_str, "train,val,test ratios");
    cmd->add_option("--stride", rc.stride, "training window stride");
    cmd->add_option("--eval-stride", rc.eval_stride, "evaluation window stride");
    cmd->add_flag("--fill-forward", rc.fill_forward, "forward-fill blank CSV cells");
    cmd->add_flag("--mase-insample", rc.mase_insample,
                  "MASE denominator from the input window history");
    cmd->add_option("--season", rc.season, "seasonal period for MASE and the naive baseline");
    cmd->add_flag("--timing", rc.timing, "write wall-clock seconds into history.csv");
}

} // namespace

int run(int argc, char** argv) {
    CLI::App app{"2D time-series forecaster: spectral multi-period folding with "
                 "convolution/attention branches plus derivative heatmaps"};
    app.require_subcommand(1);

    RunConfig rc;
    std::string config_path, loss_str, split_str, format = "csv";

    try {
        // The config file loads before CLI11 assigns flag values, so flags
        // given on the command line override file entries.
        for (int i = 1; i < argc; ++i) {
            const std::string arg = argv[i];
            if (arg == "--config" && i + 1 < argc) {
                apply_config_file(rc, argv[i + 1]);
                break;
            }
            if (arg.rfind("--config=", 0) == 0) {
                apply_config_file(rc, arg.substr(9));
                break;
            }
        }

        auto* t = app.add_subcommand("train", "train a model and write checkpoint + history");
        auto* e = app.add_subcommand("evaluate", "compute test-split metrics for a checkpoint");
        auto* f = app.add_subcommand("forecast", "forecast from the latest window of a series");
        auto* ip =
            app.add_subcommand("inspect-periods", "print the dominant periods of the first window");
        auto* hm =
            app.add_subcommand("heatmap", "export the derivative heatmap of the first window");
        for (CLI::App* cmd : {t, e, f, ip, hm})
            add_common_flags(cmd, rc, config_path, loss_str, split_str);
        for (CLI::App* cmd : {e, f})
            cmd->add_option("--ckpt", rc.checkpoint_path, "checkpoint file");
        f->add_option("--horizon", rc.horizon, "rows to emit (defaults to pred-len)");
        hm->add_option("--format", format, "csv or pgm");

        app.parse(argc, argv);
        if (!loss_str.empty()) rc.train.loss = loss_kind_from_string(loss_str);
        if (!split_str.empty()) apply_config_entry(rc, "split", split_str);

        if (app.got_subcommand(t))
            return rc.model.precision == 64 ? cmd_train_impl<double>(rc)
                                            : cmd_train_impl<float>(rc);
        if (app.got_subcommand(e)) {
            if (rc.checkpoint_path.empty()) throw ConfigError("evaluate: --ckpt is required");
            const int prec = checkpoint_precision(rc.checkpoint_path);
            return prec == 64 ? cmd_evaluate_impl<double>(rc) : cmd_evaluate_impl<float>(rc);
        }
        if (app.got_subcommand(f)) {
            if (rc.checkpoint_path.empty()) throw ConfigError("forecast: --ckpt is required");
            const int prec = checkpoint_precision(rc.checkpoint_path);
            return prec == 64 ? cmd_forecast_impl<double>(rc) : cmd_forecast_impl<float>(rc);
        }
        if (app.got_subcommand(ip)) return cmd_inspect_periods(rc);
        if (app.got_subcommand(hm)) return cmd_heatmap(rc, format);
        return 2;
    } catch (const CLI::ParseError& err) {
        return app.exit(err) == 0 ? 0 : 2;
    } catch (const DivergenceError& err) {
        std::cerr << "error: " << err.what() << '\n';
        return 4;
    } catch (const CheckpointError& err) {
        std::cerr << "error: " << err.what() << '\n';
        return 5;
    } catch (const DataError& err) {
        std::cerr << "error: " << err.what() << '\n';
        return 3;
    } catch (const ConfigError& err) {
        std::cerr << "error: " << err.what() << '\n';
        return 2;
    } catch (const ShapeError& err) {
        std::cerr << "error: " << err.what() << '\n';
        return 2;
    } catch (const MetricError& err) {
        std::cerr << "error: " << err.what() << '\n';
        return 2;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << '\n';
        return 1;
    }
}

} // namespace times2d::cli
