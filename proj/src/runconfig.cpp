#include "times2d/runconfig.hpp"

#include "times2d/train.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace times2d {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && (s[a] == ' ' || s[a] == '\t' || s[a] == '\r')) ++a;
    while (b > a && (s[b - 1] == ' ' || s[b - 1] == '\t' || s[b - 1] == '\r')) --b;
    return s.substr(a, b - a);
}

bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("config: key '" + key + "' expects a boolean, got '" + v + "'");
}

std::size_t parse_size(const std::string& v, const std::string& key) {
    try {
        return std::stoull(v);
    } catch (const std::exception&) {
        throw ConfigError("config: key '" + key + "' expects an integer, got '" + v + "'");
    }
}

double parse_real(const std::string& v, const std::string& key) {
    try {
        return std::stod(v);
    } catch (const std::exception&) {
        throw ConfigError("config: key '" + key + "' expects a number, got '" + v + "'");
    }
}

std::string exact(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "data") cfg.data_path = value;
    else if (key == "out") cfg.out_dir = value;
    else if (key == "checkpoint") cfg.checkpoint_path = value;
    else if (key == "seed") cfg.model.seed = parse_size(value, key);
    else if (key == "seq_len") cfg.model.seq_len = parse_size(value, key);
    else if (key == "pred_len") cfg.model.pred_len = parse_size(value, key);
    else if (key == "k") cfg.model.top_k = parse_size(value, key);
    else if (key == "d_model") cfg.model.d_model = parse_size(value, key);
    else if (key == "d_ff") cfg.model.d_ff = parse_size(value, key);
    else if (key == "heads") cfg.model.heads = parse_size(value, key);
    else if (key == "c_mid") cfg.model.conv_channels = parse_size(value, key);
    else if (key == "c_h") cfg.model.heatmap_channels = parse_size(value, key);
    else if (key == "depth") cfg.model.depth = parse_size(value, key);
    else if (key == "dropout") cfg.model.dropout = parse_real(value, key);
    else if (key == "precision") cfg.model.precision = static_cast<int>(parse_size(value, key));
    else if (key == "frozen_periods") cfg.model.frozen_periods = parse_bool(value, key);
    else if (key == "epochs") cfg.train.epochs = parse_size(value, key);
    else if (key == "batch") cfg.train.batch = parse_size(value, key);
    else if (key == "lr") cfg.train.lr = parse_real(value, key);
    else if (key == "beta1") cfg.train.beta1 = parse_real(value, key);
    else if (key == "beta2") cfg.train.beta2 = parse_real(value, key);
    else if (key == "adam_eps") cfg.train.adam_eps = parse_real(value, key);
    else if (key == "weight_decay") cfg.train.weight_decay = parse_real(value, key);
    else if (key == "clip_norm") cfg.train.clip_norm = parse_real(value, key);
    else if (key == "patience") cfg.train.patience = parse_size(value, key);
    else if (key == "loss") cfg.train.loss = loss_kind_from_string(value);
    else if (key == "split") {
        std::vector<double> ratios;
        std::stringstream ss(value);
        std::string cell;
        while (std::getline(ss, cell, ',')) ratios.push_back(parse_real(trim(cell), key));
        cfg.split_ratios = ratios;
    } else if (key == "stride") cfg.stride = parse_size(value, key);
    else if (key == "eval_stride") cfg.eval_stride = parse_size(value, key);
    else if (key == "fill_forward") cfg.fill_forward = parse_bool(value, key);
    else if (key == "mase_insample") cfg.mase_insample = parse_bool(value, key);
    else if (key == "season") cfg.season = parse_size(value, key);
    else if (key == "timing") cfg.timing = parse_bool(value, key);
    else if (key == "horizon") cfg.horizon = parse_size(value, key);
    else throw ConfigError("config: unknown key '" + key + "'");
}

void apply_config_file(RunConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: " + path + ":" + std::to_string(line_no) +
                              ": expected 'key = value'");
        apply_config_entry(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
}

std::string config_snapshot(const RunConfig& cfg) {
    std::ostringstream os;
    os << "# effective configuration (readable by --config)\n";
    os << "data = " << cfg.data_path << '\n';
    os << "out = " << cfg.out_dir << '\n';
    if (!cfg.checkpoint_path.empty()) os << "checkpoint = " << cfg.checkpoint_path << '\n';
    os << "seed = " << cfg.model.seed << '\n';
    os << "seq_len = " << cfg.model.seq_len << '\n';
    os << "pred_len = " << cfg.model.pred_len << '\n';
    os << "k = " << cfg.model.top_k << '\n';
    os << "d_model = " << cfg.model.d_model << '\n';
    os << "d_ff = " << cfg.model.d_ff << '\n';
    os << "heads = " << cfg.model.heads << '\n';
    os << "c_mid = " << cfg.model.conv_channels << '\n';
    os << "c_h = " << cfg.model.heatmap_channels << '\n';
    os << "depth = " << cfg.model.depth << '\n';
    os << "dropout = " << exact(cfg.model.dropout) << '\n';
    os << "precision = " << cfg.model.precision << '\n';
    os << "frozen_periods = " << (cfg.model.frozen_periods ? "true" : "false") << '\n';
    os << "epochs = " << cfg.train.epochs << '\n';
    os << "batch = " << cfg.train.batch << '\n';
    os << "lr = " << exact(cfg.train.lr) << '\n';
    os << "beta1 = " << exact(cfg.train.beta1) << '\n';
    os << "beta2 = " << exact(cfg.train.beta2) << '\n';
    os << "adam_eps = " << exact(cfg.train.adam_eps) << '\n';
    os << "weight_decay = " << exact(cfg.train.weight_decay) << '\n';
    os << "clip_norm = " << exact(cfg.train.clip_norm) << '\n';
    os << "patience = " << cfg.train.patience << '\n';
    os << "loss = " << loss_kind_name(cfg.train.loss) << '\n';
    os << "split = " << exact(cfg.split_ratios[0]) << ',' << exact(cfg.split_ratios[1]) << ','
       << exact(cfg.split_ratios[2]) << '\n';
    os << "stride = " << cfg.stride << '\n';
    os << "eval_stride = " << cfg.eval_stride << '\n';
    os << "fill_forward = " << (cfg.fill_forward ? "true" : "false") << '\n';
    os << "mase_insample = " << (cfg.mase_insample ? "true" : "false") << '\n';
    os << "season = " << cfg.season << '\n';
    os << "timing = " << (cfg.timing ? "true" : "false") << '\n';
    if (cfg.horizon) os << "horizon = " << cfg.horizon << '\n';
    return os.str();
}

} // namespace times2d
