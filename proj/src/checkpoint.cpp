#include "times2d/checkpoint.hpp"

#include "times2d/errors.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

static_assert(std::endian::native == std::endian::little,
              "checkpoint payload layout assumes a little-endian host");

namespace times2d {

namespace {

constexpr char kMagic[4] = {'T', '2', 'D', '1'};
constexpr std::uint32_t kVersion = 1;

std::string exact(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string join_doubles(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += exact(v[i]);
    }
    return out;
}

std::vector<double> parse_doubles(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(std::stod(cell));
    return out;
}

template <typename C>
std::string config_text(const Checkpoint<C>& ckpt) {
    const ModelConfig& c = ckpt.config;
    std::ostringstream os;
    os << "seq_len=" << c.seq_len << '\n'
       << "pred_len=" << c.pred_len << '\n'
       << "n_vars=" << c.n_vars << '\n'
       << "top_k=" << c.top_k << '\n'
       << "d_model=" << c.d_model << '\n'
       << "d_ff=" << c.d_ff << '\n'
       << "heads=" << c.heads << '\n'
       << "conv_channels=" << c.conv_channels << '\n'
       << "heatmap_channels=" << c.heatmap_channels << '\n'
       << "depth=" << c.depth << '\n'
       << "dropout=" << exact(c.dropout) << '\n'
       << "precision=" << c.precision << '\n'
       << "seed=" << c.seed << '\n'
       << "frozen_periods=" << (c.frozen_periods ? 1 : 0) << '\n';
    if (!ckpt.stats.mean.empty()) {
        os << "stats.mean=" << join_doubles(ckpt.stats.mean) << '\n';
        os << "stats.std=" << join_doubles(ckpt.stats.stddev) << '\n';
    }
    if (!ckpt.column_names.empty()) {
        os << "columns=";
        for (std::size_t i = 0; i < ckpt.column_names.size(); ++i)
            os << (i ? "," : "") << ckpt.column_names[i];
        os << '\n';
    }
    if (ckpt.frozen_periods) {
        os << "periods=";
        const auto& entries = ckpt.frozen_periods->entries;
        for (std::size_t i = 0; i < entries.size(); ++i)
            os << (i ? ";" : "") << entries[i].freq << ':' << entries[i].period << ':'
               << exact(entries[i].amplitude);
        os << '\n';
        os << "periods.seq_len=" << ckpt.frozen_periods->seq_len << '\n';
    }
    return os.str();
}

template <typename C>
void apply_config_text(Checkpoint<C>& ckpt, const std::string& text) {
    std::stringstream ss(text);
    std::string line;
    while (std::getline(ss, line)) {
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw CheckpointError("checkpoint: malformed config line '" + line + "'");
        const std::string key = line.substr(0, eq);
        const std::string val = line.substr(eq + 1);
        ModelConfig& c = ckpt.config;
        if (key == "seq_len") c.seq_len = std::stoull(val);
        else if (key == "pred_len") c.pred_len = std::stoull(val);
        else if (key == "n_vars") c.n_vars = std::stoull(val);
        else if (key == "top_k") c.top_k = std::stoull(val);
        else if (key == "d_model") c.d_model = std::stoull(val);
        else if (key == "d_ff") c.d_ff = std::stoull(val);
        else if (key == "heads") c.heads = std::stoull(val);
        else if (key == "conv_channels") c.conv_channels = std::stoull(val);
        else if (key == "heatmap_channels") c.heatmap_channels = std::stoull(val);
        else if (key == "depth") c.depth = std::stoull(val);
        else if (key == "dropout") c.dropout = std::stod(val);
        else if (key == "precision") c.precision = std::stoi(val);
        else if (key == "seed") c.seed = std::stoull(val);
        else if (key == "frozen_periods") c.frozen_periods = val == "1";
        else if (key == "stats.mean") ckpt.stats.mean = parse_doubles(val);
        else if (key == "stats.std") ckpt.stats.stddev = parse_doubles(val);
        else if (key == "columns") {
            std::stringstream cs(val);
            std::string cell;
            while (std::getline(cs, cell, ',')) ckpt.column_names.push_back(cell);
        } else if (key == "periods") {
            PeriodSet ps;
            std::stringstream es(val);
            std::string entry;
            while (std::getline(es, entry, ';')) {
                PeriodEntry e{};
                if (std::sscanf(entry.c_str(), "%zu:%zu:%lf", &e.freq, &e.period, &e.amplitude) != 3)
                    throw CheckpointError("checkpoint: malformed period entry '" + entry + "'");
                ps.entries.push_back(e);
            }
            ckpt.frozen_periods = std::move(ps);
        } else if (key == "periods.seq_len") {
            if (!ckpt.frozen_periods)
                throw CheckpointError("checkpoint: periods.seq_len without periods");
            ckpt.frozen_periods->seq_len = std::stoull(val);
        } else {
            throw CheckpointError("checkpoint: unknown config key '" + key + "'");
        }
    }
}

class Writer {
public:
    explicit Writer(const std::string& path) : out_(path, std::ios::binary), path_(path) {
        if (!out_) throw DataError("checkpoint: cannot write '" + path + "'");
    }
    void bytes(const void* p, std::size_t n) {
        out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    }
    void u8(std::uint8_t v) { bytes(&v, 1); }
    void u32(std::uint32_t v) { bytes(&v, 4); }
    void u64(std::uint64_t v) { bytes(&v, 8); }
    void str(const std::string& s) {
        u32(static_cast<std::uint32_t>(s.size()));
        bytes(s.data(), s.size());
    }
    void close() {
        out_.flush();
        if (!out_) throw DataError("checkpoint: write failed for '" + path_ + "'");
    }

private:
    std::ofstream out_;
    std::string path_;
};

class Reader {
public:
    explicit Reader(const std::string& path) : in_(path, std::ios::binary) {
        if (!in_) throw CheckpointError("checkpoint: cannot open '" + path + "'");
    }
    void bytes(void* p, std::size_t n) {
        in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n)
            throw CheckpointError("checkpoint: truncated at byte offset " + std::to_string(offset_));
        offset_ += n;
    }
    std::uint8_t u8() {
        std::uint8_t v;
        bytes(&v, 1);
        return v;
    }
    std::uint32_t u32() {
        std::uint32_t v;
        bytes(&v, 4);
        return v;
    }
    std::uint64_t u64() {
        std::uint64_t v;
        bytes(&v, 8);
        return v;
    }
    std::string str(std::size_t max_len = 1u << 20) {
        const std::uint32_t n = u32();
        if (n > max_len)
            throw CheckpointError("checkpoint: implausible string length at byte offset " +
                                  std::to_string(offset_ - 4));
        std::string s(n, '\0');
        bytes(s.data(), n);
        return s;
    }
    std::size_t offset() const { return offset_; }

private:
    std::ifstream in_;
    std::size_t offset_ = 0;
};

template <typename To, typename From>
std::vector<To> convert_payload(Reader& r, std::size_t count) {
    std::vector<From> raw(count);
    r.bytes(raw.data(), count * sizeof(From));
    if constexpr (std::is_same_v<To, From>) {
        return raw;
    } else {
        std::vector<To> out(count);
        for (std::size_t i = 0; i < count; ++i) out[i] = static_cast<To>(raw[i]);
        return out;
    }
}

} // namespace

template <typename T>
void save_checkpoint(const Checkpoint<T>& ckpt, const std::string& path) {
    Writer w(path);
    w.bytes(kMagic, 4);
    w.u32(kVersion);
    w.str(config_text(ckpt));
    w.u64(ckpt.step);
    w.u64(ckpt.rng_state);
    w.u32(static_cast<std::uint32_t>(ckpt.tensors.size()));
    for (const auto& [name, tensor] : ckpt.tensors) {
        w.str(name);
        w.u8(sizeof(T) == 4 ? 1 : 2);
        w.u32(static_cast<std::uint32_t>(tensor.rank()));
        for (std::size_t e : tensor.shape()) w.u64(e);
        w.bytes(tensor.data(), tensor.size() * sizeof(T));
    }
    w.close();
}

template <typename T>
Checkpoint<T> load_checkpoint(const std::string& path) {
    Reader r(path);
    char magic[4];
    r.bytes(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0)
        throw CheckpointError("checkpoint: bad magic in '" + path + "' at byte offset 0");
    const std::uint32_t version = r.u32();
    if (version != kVersion)
        throw CheckpointError("checkpoint: unsupported version " + std::to_string(version) +
                              " at byte offset 4");
    Checkpoint<T> ckpt;
    apply_config_text(ckpt, r.str());
    ckpt.step = r.u64();
    ckpt.rng_state = r.u64();
    const std::uint32_t count = r.u32();
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::string name = r.str();
        const std::uint8_t dtype = r.u8();
        if (dtype != 1 && dtype != 2)
            throw CheckpointError("checkpoint: unknown dtype code " + std::to_string(dtype) +
                                  " for tensor '" + name + "' at byte offset " +
                                  std::to_string(r.offset() - 1));
        const std::uint32_t rank = r.u32();
        if (rank > 8)
            throw CheckpointError("checkpoint: implausible rank for tensor '" + name + "'");
        Shape shape(rank);
        std::size_t numel = 1;
        for (std::uint32_t d = 0; d < rank; ++d) {
            shape[d] = r.u64();
            if (shape[d] == 0 || shape[d] > (1u << 28))
                throw CheckpointError("checkpoint: invalid extent in tensor '" + name + "'");
            numel *= shape[d];
        }
        std::vector<T> values = dtype == 1 ? convert_payload<T, float>(r, numel)
                                           : convert_payload<T, double>(r, numel);
        ckpt.tensors.emplace(name, Tensor<T>::from_data(std::move(shape), std::move(values)));
    }
    return ckpt;
}

int checkpoint_precision(const std::string& path) {
    Reader r(path);
    char magic[4];
    r.bytes(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0)
        throw CheckpointError("checkpoint: bad magic in '" + path + "' at byte offset 0");
    if (r.u32() != kVersion) throw CheckpointError("checkpoint: unsupported version");
    Checkpoint<double> probe;
    apply_config_text(probe, r.str());
    return probe.config.precision;
}

template void save_checkpoint<float>(const Checkpoint<float>&, const std::string&);
template void save_checkpoint<double>(const Checkpoint<double>&, const std::string&);
template Checkpoint<float> load_checkpoint<float>(const std::string&);
template Checkpoint<double> load_checkpoint<double>(const std::string&);

} // namespace times2d
