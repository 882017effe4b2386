#include <iostream>

#include <CLI11.hpp>

#include "rafm/pipeline.hpp"
#include "rafm/verify.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitNumeric = 2;
constexpr int kExitProperty = 3;

rafm::IndexBase to_base(int b) {
    return b == 0 ? rafm::IndexBase::zero : rafm::IndexBase::one;
}

int cmd_stats(const std::string& data_path, int index_base, const std::string& out_dir) {
    const rafm::Dataset ds = rafm::load_dataset(data_path, to_base(index_base));
    const auto buckets = rafm::occurrence_histogram(ds);

    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        file.open(out_dir + "/occurrence_histogram.csv");
        if (!file) throw rafm::InputError("cannot write histogram to " + out_dir);
        out = &file;
    }
    *out << "bucket_low,feature_count\n";
    for (const auto& b : buckets) *out << b.lower << ',' << b.feature_count << '\n';

    double nnz = 0;
    for (const auto& inst : ds.instances) nnz += static_cast<double>(inst.nnz());
    std::cout << "features=" << ds.feature_count << " instances=" << ds.size()
              << " mean_nonzeros=" << (ds.size() ? nnz / static_cast<double>(ds.size()) : 0.0)
              << '\n';
    return kExitOk;
}

int cmd_train(rafm::RunConfig cfg) {
    const auto out = rafm::run_train(cfg);
    std::cout << "model=" << out.model_path << '\n'
              << "manifest=" << out.manifest_path << '\n'
              << "metrics=" << out.metrics_path << '\n';
    if (!out.metrics.empty())
        std::cout << "final_train_loss="
                  << rafm::detail::fmt_double(out.metrics.back().train_loss) << '\n';
    return kExitOk;
}

int cmd_evaluate(const std::string& model_path, const std::string& data_path, rafm::Task task,
                 int index_base) {
    const rafm::RaFMModel model = rafm::load_model(model_path);
    const rafm::Dataset ds = rafm::load_dataset(data_path, to_base(index_base));
    if (ds.feature_count > model.feature_count())
        throw rafm::InputError("data has " + std::to_string(ds.feature_count) +
                               " features but the model only knows " +
                               std::to_string(model.feature_count()));
    if (ds.size() == 0) throw rafm::InputError("dataset is empty");

    std::vector<double> preds, labels;
    preds.reserve(ds.size());
    labels.reserve(ds.size());
    for (const auto& inst : ds.instances) {
        preds.push_back(rafm::predict(model, inst, task));
        labels.push_back(inst.label);
    }

    std::cout << "metric,value\n";
    if (task == rafm::Task::regression) {
        std::cout << "mean_square_loss," << rafm::detail::fmt_double(
                         rafm::mean_square_loss(preds, labels)) << '\n';
        std::cout << "mean_task_loss,"
                  << rafm::detail::fmt_double(rafm::mean_task_loss(model, ds, task)) << '\n';
    } else {
        std::cout << "mean_log_loss,"
                  << rafm::detail::fmt_double(rafm::mean_log_loss(preds, labels)) << '\n';
        bool has_pos = false, has_neg = false;
        for (double y : labels) (y > 0.5 ? has_pos : has_neg) = true;
        if (has_pos && has_neg)
            std::cout << "auc," << rafm::detail::fmt_double(rafm::auc(preds, labels)) << '\n';
        else
            std::cout << "auc,\n";  // undefined on single-class data
    }
    return kExitOk;
}

int cmd_predict(const std::string& model_path, const std::string& data_path, rafm::Task task,
                int index_base, const std::string& out_path) {
    const rafm::RaFMModel model = rafm::load_model(model_path);
    const rafm::Dataset ds = rafm::load_dataset(data_path, to_base(index_base));

    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!out_path.empty()) {
        file.open(out_path);
        if (!file) throw rafm::InputError("cannot open output file: " + out_path);
        out = &file;
    }
    for (const auto& inst : ds.instances)
        *out << rafm::detail::fmt_double(rafm::predict(model, inst, task)) << '\n';
    return kExitOk;
}

int cmd_complexity(const std::string& rank_regime, const std::string& feature_regime, int m,
                   int d, int f, int trials, double density, std::uint64_t seed) {
    rafm::ComplexityScenario scenario;
    scenario.rank_regime = rank_regime == "linear" ? rafm::RankRegime::linear
                                                   : rafm::RankRegime::exponential;
    scenario.feature_regime = feature_regime == "linear" ? rafm::FeatureRegime::linear
                                                         : rafm::FeatureRegime::exponential;
    scenario.m = m;
    scenario.max_rank = d;
    scenario.feature_count = f;
    scenario.density = density;

    const auto report = rafm::run_scenario(scenario, trials, seed);
    std::cout << "regime,m,D,F,rafm_mult,fm_mult,time_ratio,param_ratio\n";
    std::cout << rank_regime << '/' << feature_regime << ',' << m << ',' << d << ',' << f << ','
              << report.rafm_mult_mean << ',' << report.single_fm_mult_mean << ','
              << report.time_ratio << ',' << report.param_ratio << '\n';
    return kExitOk;
}

int cmd_verify(std::uint64_t seed, int sweep, int gradient_models, long long fuzz,
               bool inject_fault) {
    auto results = rafm::run_all_properties(seed, sweep, gradient_models, fuzz);
    if (inject_fault)
        results.push_back({"injected_fault", false, 1.0, "requested via --inject-fault"});
    bool all_pass = true;
    for (const auto& r : results) {
        std::cout << (r.pass ? "PASS" : "FAIL") << ' ' << r.name
                  << " worst_error=" << r.worst_error << " (" << r.detail
                  << ", seed=" << seed << ")\n";
        all_pass = all_pass && r.pass;
    }
    return all_pass ? kExitOk : kExitProperty;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Rank-aware factorization machines"};
    app.require_subcommand(1);

    std::string data_path, model_path, out_dir, out_path, config_path;
    int index_base = 0;
    std::string task_str = "clf";
    std::string split_str;
    std::uint64_t seed = 1;
    bool seed_set = false;

    auto* stats = app.add_subcommand("stats", "Occurrence histogram and dataset summary");
    stats->add_option("data", data_path, "libsvm data file")->required();
    stats->add_option("--index-base", index_base, "0 or 1")->check(CLI::Range(0, 1));
    stats->add_option("--out-dir", out_dir, "write histogram CSV here instead of stdout");

    auto* train = app.add_subcommand("train", "Train a model from a config file");
    train->add_option("--config", config_path, "key=value config file")->required();
    train->add_option("--seed", seed)->each([&](const std::string&) { seed_set = true; });
    std::string train_task;
    train->add_option("--task", train_task, "reg or clf");
    int train_base = -1;
    train->add_option("--index-base", train_base)->check(CLI::Range(0, 1));
    train->add_option("--split", split_str, "train,valid,test fractions");
    std::string train_out;
    train->add_option("--out-dir", train_out);

    auto* evaluate = app.add_subcommand("evaluate", "Evaluate a model on a dataset");
    evaluate->add_option("--model", model_path)->required();
    evaluate->add_option("--data", data_path)->required();
    evaluate->add_option("--task", task_str, "reg or clf");
    evaluate->add_option("--index-base", index_base)->check(CLI::Range(0, 1));

    auto* predict = app.add_subcommand("predict", "Write per-instance scores");
    predict->add_option("--model", model_path)->required();
    predict->add_option("--data", data_path)->required();
    predict->add_option("--task", task_str, "reg or clf");
    predict->add_option("--index-base", index_base)->check(CLI::Range(0, 1));
    predict->add_option("--out", out_path, "output file (default stdout)");

    auto* complexity = app.add_subcommand("complexity", "Operation-count scenario report");
    std::string rank_regime = "exponential", feature_regime = "exponential";
    int cm = 4, cd = 64, cf = 1024, trials = 16;
    double density = 1.0;
    complexity->add_option("--rank-regime", rank_regime)
        ->check(CLI::IsMember({"linear", "exponential"}));
    complexity->add_option("--feature-regime", feature_regime)
        ->check(CLI::IsMember({"linear", "exponential"}));
    complexity->add_option("--m", cm)->check(CLI::PositiveNumber);
    complexity->add_option("--d", cd)->check(CLI::PositiveNumber);
    complexity->add_option("--f", cf)->check(CLI::PositiveNumber);
    complexity->add_option("--trials", trials)->check(CLI::PositiveNumber);
    complexity->add_option("--density", density)->check(CLI::Range(0.0, 1.0));
    complexity->add_option("--seed", seed);

    auto* verify = app.add_subcommand("verify", "Run the property suites");
    int sweep = 1000, gradient_models = 200;
    long long fuzz = 100000;
    bool inject_fault = false;
    verify->add_option("--seed", seed);
    verify->add_option("--sweep-configs", sweep)->check(CLI::PositiveNumber);
    verify->add_option("--gradient-models", gradient_models)->check(CLI::PositiveNumber);
    verify->add_option("--fuzz-samples", fuzz)->check(CLI::PositiveNumber);
    verify->add_flag("--inject-fault", inject_fault, "force one failing property");

    CLI11_PARSE(app, argc, argv);

    try {
        if (stats->parsed()) return cmd_stats(data_path, index_base, out_dir);
        if (train->parsed()) {
            rafm::RunConfig cfg = rafm::load_run_config(config_path);
            if (seed_set) cfg.train.seed = seed;
            if (!train_task.empty()) cfg.train.task = rafm::parse_task(train_task);
            if (train_base >= 0)
                cfg.index_base = train_base == 0 ? rafm::IndexBase::zero : rafm::IndexBase::one;
            if (!split_str.empty()) cfg.split = rafm::parse_split(split_str);
            if (!train_out.empty()) cfg.out_dir = train_out;
            return cmd_train(std::move(cfg));
        }
        if (evaluate->parsed())
            return cmd_evaluate(model_path, data_path, rafm::parse_task(task_str), index_base);
        if (predict->parsed())
            return cmd_predict(model_path, data_path, rafm::parse_task(task_str), index_base,
                               out_path);
        if (complexity->parsed())
            return cmd_complexity(rank_regime, feature_regime, cm, cd, cf, trials, density,
                                  seed);
        if (verify->parsed())
            return cmd_verify(seed, sweep, gradient_models, fuzz, inject_fault);
    } catch (const rafm::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    }
    return kExitInput;
}
