// Acceptance gate: one pass/fail line per criterion, nonzero exit on failure.
#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "rafm/pipeline.hpp"
#include "rafm/verify.hpp"
#include "synthetic.hpp"

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int criterion, const std::string& name, bool pass, const std::string& detail,
            double seconds) {
    std::printf("criterion %2d %-24s %s (%s, %.1fs)\n", criterion, name.c_str(),
                pass ? "PASS" : "FAIL", detail.c_str(), seconds);
    if (!pass) ++g_failures;
}

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

double heldout_log_loss(const rafm::RaFMModel& model, const rafm::Dataset& test,
                        int level = 0) {
    std::vector<double> probs, labels;
    probs.reserve(test.size());
    labels.reserve(test.size());
    for (const auto& inst : test.instances) {
        probs.push_back(level == 0
                            ? rafm::predict(model, inst, rafm::Task::classification)
                            : rafm::predict_level(model, inst, level,
                                                  rafm::Task::classification));
        labels.push_back(inst.label);
    }
    return rafm::mean_log_loss(probs, labels);
}

std::string read_bytes(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    std::stringstream buf;
    buf << is.rdbuf();
    return buf.str();
}

}  // namespace

int main() {
    // 1. evaluate vs the double-loop oracle over 1000 random configurations
    {
        const auto start = Clock::now();
        const auto r = rafm::check_oracle_equivalence(1000, 8);
        const double secs = seconds_since(start);
        report(1, "oracle_equivalence", r.pass && secs < 10.0,
               "worst_rel_error=" + fmt(r.worst_error), secs);
    }

    // 2. squared-sum identity vs the pairwise double loop, all (l, k)
    {
        const auto start = Clock::now();
        const auto r = rafm::check_a_term_identity(1000, 12);
        report(2, "a_term_identity", r.pass, "worst_rel_error=" + fmt(r.worst_error),
               seconds_since(start));
    }

    // 3. analytic gradients vs central finite differences, both loss kinds
    {
        const auto start = Clock::now();
        const auto r = rafm::check_gradients(200, 14);
        report(3, "gradient_check", r.pass, "worst_rel_error=" + fmt(r.worst_error),
               seconds_since(start));
    }

    // 4. exact parameter counts and no inactive entries, including after training
    {
        const auto start = Clock::now();
        const auto structural = rafm::check_parameter_structure(100, 16);
        bool pass = structural.pass;

        std::mt19937_64 rng(16);
        rafm::Dataset ds;
        ds.feature_count = 30;
        for (int n = 0; n < 100; ++n)
            ds.instances.push_back(rafm::verify_detail::random_instance(rng, 30, 0.3));
        ds.recount_occurrence();
        const rafm::RankLadder ladder({2, 4, 8});
        const auto assignment = rafm::assign_levels(ds.occurrence, ladder);
        rafm::TrainConfig cfg;
        cfg.epochs = 2;
        const auto trained = rafm::train(ds, ladder, assignment, cfg);
        std::size_t expected = 0;
        for (int k = 1; k <= 3; ++k)
            expected += static_cast<std::size_t>(ladder.rank(k)) * assignment.set_size(k);
        pass = pass && rafm::parameter_count(trained.model).embeddings_total == expected;
        for (int k = 1; k <= 3; ++k)
            for (std::uint32_t i = 0; i < 30; ++i)
                pass = pass && trained.model.table(k).has(i) == (assignment.level_of(i) >= k);
        report(4, "parameter_structure", pass, "exact counts incl. post-training",
               seconds_since(start));
    }

    // 5. complexity regimes: exact parameter ratios, bounded multiply ratios
    {
        const auto start = Clock::now();
        rafm::ComplexityScenario exp_exp;  // m=4, D=64, |F|=1024
        const auto a = rafm::run_scenario(exp_exp, 16, 42);
        rafm::ComplexityScenario lin_lin = exp_exp;
        lin_lin.rank_regime = rafm::RankRegime::linear;
        lin_lin.feature_regime = rafm::FeatureRegime::linear;
        const auto b = rafm::run_scenario(lin_lin, 16, 42);
        const double secs = seconds_since(start);
        const bool pass = a.param_ratio == 0.5 && a.time_ratio >= 0.35 &&
                          a.time_ratio <= 0.75 && b.param_ratio == 1.25 &&
                          b.time_ratio > 1.0 && secs < 30.0;
        report(5, "complexity_regimes", pass,
               "exp/exp param=" + fmt(a.param_ratio) + " time=" + fmt(a.time_ratio) +
                   "; lin/lin param=" + fmt(b.param_ratio) + " time=" + fmt(b.time_ratio),
               secs);
    }

    // 6 & 7. ladder (4,32) vs fixed-rank baselines on heavy-tailed synthetic data,
    // and the low sub-model vs a separately trained rank-4 FM
    {
        const auto start = Clock::now();
        int at_or_below = 0, strictly_below = 0;
        double worst_low_gap = 0.0;
        std::string detail6, detail7;
        for (std::uint64_t seed : {101ull, 102ull, 103ull}) {
            rafm::synthetic::Spec spec;
            spec.seed = seed;
            const rafm::Dataset full = rafm::synthetic::make_classification(spec);
            const auto parts = rafm::split(full, {0.8, 0.1, 0.1}, seed);
            const rafm::Dataset& train_set = parts[0];
            const rafm::Dataset& test_set = parts[2];

            rafm::TrainConfig cfg;
            cfg.rho_f = 0.04;
            cfg.rho_d = 0.04;
            cfg.l2 = 0.02;
            cfg.epochs = 10;
            cfg.init_sigma = 0.01;
            cfg.seed = seed;
            cfg.task = rafm::Task::classification;

            auto train_with = [&](std::vector<int> ranks) {
                const rafm::RankLadder ladder(std::move(ranks));
                return rafm::train(train_set, ladder,
                                   rafm::assign_levels(train_set.occurrence, ladder), cfg)
                    .model;
            };
            const auto rafm_model = train_with({4, 32});
            const auto fm4 = train_with({4});
            const auto fm32 = train_with({32});

            const double loss_rafm = heldout_log_loss(rafm_model, test_set);
            const double loss_low = heldout_log_loss(rafm_model, test_set, 1);
            const double loss_fm4 = heldout_log_loss(fm4, test_set);
            const double loss_fm32 = heldout_log_loss(fm32, test_set);
            const double best_baseline = std::min(loss_fm4, loss_fm32);
            if (loss_rafm <= best_baseline) ++at_or_below;
            if (loss_rafm < best_baseline) ++strictly_below;
            worst_low_gap = std::max(worst_low_gap,
                                     std::abs(loss_low - loss_fm4) / loss_fm4);
            detail6 += " s" + std::to_string(seed) + ":" + fmt(loss_rafm) + "<=" +
                       fmt(best_baseline);
        }
        const double secs = seconds_since(start);
        report(6, "ladder_beats_baselines",
               at_or_below == 3 && strictly_below >= 2 && secs < 300.0,
               std::to_string(at_or_below) + "/3 at-or-below, " +
                   std::to_string(strictly_below) + "/3 strict;" + detail6,
               secs);
        report(7, "low_submodel_similarity", worst_low_gap <= 0.10,
               "worst relative gap=" + fmt(worst_low_gap), 0.0);
    }

    // 8. quasi-triangle inequality: fuzz, monotone C, closed-form value
    {
        const auto start = Clock::now();
        const auto fuzz = rafm::check_quasi_triangle_fuzz(100000, 18);
        bool monotone = true;
        for (double delta : {1.5, std::exp(1.0), 10.0}) {
            double prev = std::numeric_limits<double>::infinity();
            for (double theta = 0.05; theta < 0.96; theta += 0.05) {
                const double c = rafm::c_theta_delta({theta, delta});
                monotone = monotone && c < prev;
                prev = c;
            }
        }
        const double c_half = rafm::c_theta_delta({0.5, std::exp(1.0)});
        const bool closed_form = std::abs(c_half - 3.921) <= 1e-3;
        report(8, "quasi_triangle", fuzz.pass && monotone && closed_form,
               "violations=" + fmt(fuzz.worst_error) + ", C(0.5,e)=" + fmt(c_half),
               seconds_since(start));
    }

    // 9. AUC oracle plus the analytic endpoint cases
    {
        const auto start = Clock::now();
        const auto oracle = rafm::check_auc_oracle(100, 22);
        const bool separated = rafm::auc({0.1, 0.2, 0.8, 0.9}, {0.0, 0.0, 1.0, 1.0}) == 1.0;
        const bool ties = rafm::auc({0.4, 0.4, 0.4}, {1.0, 0.0, 1.0}) == 0.5;
        report(9, "auc_oracle", oracle.pass && separated && ties,
               "worst_abs_error=" + fmt(oracle.worst_error), seconds_since(start));
    }

    // 10. end-to-end determinism and bit-exact snapshots
    {
        const auto start = Clock::now();
        const fs::path dir = fs::temp_directory_path() / "rafm_acceptance";
        fs::create_directories(dir);

        rafm::synthetic::Spec spec;
        spec.instances = 2000;
        spec.feature_count = 200;
        const rafm::Dataset ds = rafm::synthetic::make_classification(spec);
        {
            std::ofstream os(dir / "data.libsvm");
            rafm::write_libsvm(ds, os);
        }
        {
            std::ofstream os(dir / "train.cfg");
            os << "data = " << (dir / "data.libsvm").string() << "\n"
               << "ranks = 4,16\nepochs = 2\nseed = 31\nrho_f = 0.05\nrho_d = 0.05\n";
        }
        auto run_train_cli = [&](const std::string& out) {
            const std::string cmd = std::string(RAFM_CLI_PATH) + " train --config " +
                                    (dir / "train.cfg").string() + " --out-dir " +
                                    (dir / out).string() + " > /dev/null 2>&1";
            const int status = std::system(cmd.c_str());
            return WIFEXITED(status) && WEXITSTATUS(status) == 0;
        };
        bool pass = run_train_cli("run_a") && run_train_cli("run_b");
        const std::string snap_a = read_bytes(dir / "run_a" / "model.rafm");
        pass = pass && !snap_a.empty() && snap_a == read_bytes(dir / "run_b" / "model.rafm");

        // save/load round-trip on the produced model
        if (pass) {
            const auto model = rafm::load_model((dir / "run_a" / "model.rafm").string());
            std::stringstream buf(std::ios::in | std::ios::out | std::ios::binary);
            rafm::save_model(model, buf);
            pass = buf.str() == snap_a;
        }
        report(10, "determinism", pass, "byte-identical snapshots across reruns",
               seconds_since(start));
    }

    if (g_failures > 0) {
        std::printf("%d criterion(s) FAILED\n", g_failures);
        return 1;
    }
    std::printf("all 10 criteria PASS\n");
    return 0;
}
