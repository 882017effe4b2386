#pragma once

#include <filesystem>
#include <map>
#include <optional>

#include "rafm/training.hpp"

namespace rafm {

inline constexpr const char* kToolVersion = "0.1.0";

// Fully resolved run configuration: training hyperparameters plus data plumbing.
struct RunConfig {
    TrainConfig train;
    std::vector<int> ranks = {8};
    std::string data_path;        // single file, split by fractions
    std::string train_path;       // or explicit pre-split files
    std::string valid_path;
    std::string test_path;
    SplitFractions split;
    IndexBase index_base = IndexBase::zero;
    std::string out_dir = ".";
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(trim(cur));
    return out;
}

inline double to_double(const std::string& key, const std::string& s) {
    try {
        size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw InputError("config key '" + key + "': not a number: '" + s + "'");
    }
}

inline long long to_int(const std::string& key, const std::string& s) {
    try {
        size_t pos = 0;
        const long long v = std::stoll(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw InputError("config key '" + key + "': not an integer: '" + s + "'");
    }
}

}  // namespace detail

inline Task parse_task(const std::string& s) {
    if (s == "reg" || s == "regression") return Task::regression;
    if (s == "clf" || s == "classification") return Task::classification;
    throw InputError("unknown task '" + s + "' (expected reg or clf)");
}

inline ConstraintLoss parse_constraint_loss(const std::string& s) {
    if (s == "squared_score") return ConstraintLoss::squared_score;
    if (s == "soft_cross_entropy") return ConstraintLoss::soft_cross_entropy;
    throw InputError("unknown constraint_loss '" + s + "'");
}

inline SplitFractions parse_split(const std::string& s) {
    const auto parts = detail::split_csv(s);
    if (parts.size() != 3) throw InputError("split must be three comma-separated fractions");
    return {detail::to_double("split", parts[0]), detail::to_double("split", parts[1]),
            detail::to_double("split", parts[2])};
}

inline std::vector<int> parse_ranks(const std::string& s) {
    std::vector<int> ranks;
    for (const auto& tok : detail::split_csv(s))
        ranks.push_back(static_cast<int>(detail::to_int("ranks", tok)));
    RankLadder(ranks).validate();
    return ranks;
}

inline void apply_config_entry(RunConfig& cfg, const std::string& key,
                               const std::string& value) {
    if (key == "data") cfg.data_path = value;
    else if (key == "train_data") cfg.train_path = value;
    else if (key == "valid_data") cfg.valid_path = value;
    else if (key == "test_data") cfg.test_path = value;
    else if (key == "ranks") cfg.ranks = parse_ranks(value);
    else if (key == "rho_f") cfg.train.rho_f = detail::to_double(key, value);
    else if (key == "rho_d") cfg.train.rho_d = detail::to_double(key, value);
    else if (key == "l2") cfg.train.l2 = detail::to_double(key, value);
    else if (key == "epochs") cfg.train.epochs = static_cast<int>(detail::to_int(key, value));
    else if (key == "seed") cfg.train.seed = static_cast<std::uint64_t>(detail::to_int(key, value));
    else if (key == "task") cfg.train.task = parse_task(value);
    else if (key == "constraint_loss") cfg.train.constraint_loss = parse_constraint_loss(value);
    else if (key == "init_sigma") cfg.train.init_sigma = detail::to_double(key, value);
    else if (key == "split") cfg.split = parse_split(value);
    else if (key == "index_base") {
        const long long b = detail::to_int(key, value);
        if (b != 0 && b != 1) throw InputError("index_base must be 0 or 1");
        cfg.index_base = b == 0 ? IndexBase::zero : IndexBase::one;
    } else if (key == "out_dir") cfg.out_dir = value;
    else throw InputError("unknown config key '" + key + "'");
}

// Flat key=value config file; '#' starts a comment.
inline RunConfig load_run_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw InputError("cannot open config file: " + path);
    RunConfig cfg;
    std::string line;
    size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw InputError("config line " + std::to_string(line_no) + ": expected key=value");
        apply_config_entry(cfg, detail::trim(line.substr(0, eq)),
                           detail::trim(line.substr(eq + 1)));
    }
    return cfg;
}

// FNV-1a 64-bit digest of a file's bytes, for the run manifest.
inline std::string file_digest(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw InputError("cannot open file for digest: " + path);
    std::uint64_t h = 0xcbf29ce484222325ull;
    char buf[4096];
    while (is.read(buf, sizeof(buf)) || is.gcount() > 0) {
        for (std::streamsize t = 0; t < is.gcount(); ++t) {
            h ^= static_cast<unsigned char>(buf[t]);
            h *= 0x100000001b3ull;
        }
        if (!is) break;
    }
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
    return hex;
}

namespace detail {

inline std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string join_ints(const std::vector<int>& v) {
    std::string s;
    for (size_t t = 0; t < v.size(); ++t) {
        if (t) s += ',';
        s += std::to_string(v[t]);
    }
    return s;
}

}  // namespace detail

// Everything needed to reproduce a run bit-exactly, written next to the model.
inline void write_manifest(const RunConfig& cfg, std::ostream& os) {
    os << "tool_version=" << kToolVersion << '\n';
    os << "ranks=" << detail::join_ints(cfg.ranks) << '\n';
    os << "rho_f=" << detail::fmt_double(cfg.train.rho_f) << '\n';
    os << "rho_d=" << detail::fmt_double(cfg.train.rho_d) << '\n';
    os << "l2=" << detail::fmt_double(cfg.train.l2) << '\n';
    os << "epochs=" << cfg.train.epochs << '\n';
    os << "seed=" << cfg.train.seed << '\n';
    os << "task=" << (cfg.train.task == Task::regression ? "reg" : "clf") << '\n';
    os << "constraint_loss="
       << (cfg.train.constraint_loss == ConstraintLoss::squared_score ? "squared_score"
                                                                      : "soft_cross_entropy")
       << '\n';
    os << "init_sigma=" << detail::fmt_double(cfg.train.init_sigma) << '\n';
    os << "index_base=" << (cfg.index_base == IndexBase::zero ? 0 : 1) << '\n';
    os << "split=" << detail::fmt_double(cfg.split.train) << ','
       << detail::fmt_double(cfg.split.valid) << ',' << detail::fmt_double(cfg.split.test)
       << '\n';
    os << "out_dir=" << cfg.out_dir << '\n';
    const std::pair<const char*, std::string> inputs[] = {{"data", cfg.data_path},
                                                          {"train_data", cfg.train_path},
                                                          {"valid_data", cfg.valid_path},
                                                          {"test_data", cfg.test_path}};
    for (const auto& [name, path] : inputs) {
        if (path.empty()) continue;
        os << name << "=" << path << '\n';
        os << name << "_digest=" << file_digest(path) << '\n';
    }
}

inline void write_metrics_csv(const std::vector<EpochMetrics>& metrics, std::ostream& os) {
    os << "epoch,train_loss,valid_loss,valid_auc,wall_ms\n";
    for (const auto& em : metrics) {
        os << em.epoch << ',' << detail::fmt_double(em.train_loss) << ',';
        if (std::isfinite(em.valid_loss)) os << detail::fmt_double(em.valid_loss);
        os << ',';
        if (std::isfinite(em.valid_auc)) os << detail::fmt_double(em.valid_auc);
        os << ',' << detail::fmt_double(em.wall_ms) << '\n';
    }
}

inline Dataset load_dataset(const std::string& path, IndexBase base) {
    std::ifstream is(path);
    if (!is) throw InputError("cannot open data file: " + path);
    return parse_libsvm(is, base);
}

struct TrainOutputs {
    RaFMModel model;
    std::vector<EpochMetrics> metrics;
    std::string model_path;
    std::string manifest_path;
    std::string metrics_path;
};

// The full training pipeline: parse, split (or use pre-split files), count
// occurrences on the training split only, assign levels, train, and write the
// model snapshot, manifest, and per-epoch metrics CSV.
inline TrainOutputs run_train(const RunConfig& cfg) {
    cfg.train.validate();

    Dataset train_set, valid_set, test_set;
    if (!cfg.data_path.empty()) {
        const Dataset full = load_dataset(cfg.data_path, cfg.index_base);
        auto parts = split(full, cfg.split, cfg.train.seed);
        train_set = std::move(parts[0]);
        valid_set = std::move(parts[1]);
        test_set = std::move(parts[2]);
    } else if (!cfg.train_path.empty()) {
        train_set = load_dataset(cfg.train_path, cfg.index_base);
        if (!cfg.valid_path.empty()) {
            valid_set = load_dataset(cfg.valid_path, cfg.index_base);
            if (valid_set.feature_count > train_set.feature_count)
                valid_set.feature_count = train_set.feature_count;  // cold features score 0
        }
    } else {
        throw InputError("config must set 'data' or 'train_data'");
    }

    const RankLadder ladder(cfg.ranks);
    const LevelAssignment assignment = assign_levels(train_set.occurrence, ladder);
    TrainResult result = train(train_set, ladder, assignment, cfg.train,
                               valid_set.size() > 0 ? &valid_set : nullptr);

    std::filesystem::create_directories(cfg.out_dir);
    TrainOutputs out{std::move(result.model), std::move(result.metrics),
                     cfg.out_dir + "/model.rafm", cfg.out_dir + "/manifest.txt",
                     cfg.out_dir + "/metrics.csv"};
    save_model(out.model, out.model_path);
    {
        std::ofstream os(out.manifest_path);
        if (!os) throw InputError("cannot write manifest: " + out.manifest_path);
        write_manifest(cfg, os);
    }
    {
        std::ofstream os(out.metrics_path);
        if (!os) throw InputError("cannot write metrics: " + out.metrics_path);
        write_metrics_csv(out.metrics, os);
    }
    return out;
}

}  // namespace rafm
