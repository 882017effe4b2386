#pragma once

#include <algorithm>

#include "rafm/types.hpp"

namespace rafm {

inline double mean_square_loss(const std::vector<double>& scores,
                               const std::vector<double>& labels) {
    if (scores.empty() || scores.size() != labels.size())
        throw InputError("mean_square_loss needs aligned nonempty inputs");
    double total = 0.0;
    for (size_t t = 0; t < scores.size(); ++t) {
        const double d = scores[t] - labels[t];
        total += d * d;
    }
    return total / static_cast<double>(scores.size());
}

inline double mean_log_loss(const std::vector<double>& probs,
                            const std::vector<double>& labels) {
    if (probs.empty() || probs.size() != labels.size())
        throw InputError("mean_log_loss needs aligned nonempty inputs");
    double total = 0.0;
    for (size_t t = 0; t < probs.size(); ++t) {
        const double p = std::clamp(probs[t], 1e-15, 1.0 - 1e-15);
        total += -labels[t] * std::log(p) - (1.0 - labels[t]) * std::log(1.0 - p);
    }
    return total / static_cast<double>(probs.size());
}

// Mann-Whitney AUC with average-rank tie correction:
// P(score_pos > score_neg) + 0.5 * P(equal).
inline double auc(const std::vector<double>& probs, const std::vector<double>& labels) {
    if (probs.empty() || probs.size() != labels.size())
        throw InputError("auc needs aligned nonempty inputs");
    const size_t n = probs.size();
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return probs[a] < probs[b]; });

    double pos_rank_sum = 0.0;
    size_t n_pos = 0;
    size_t t = 0;
    while (t < n) {
        size_t u = t;
        while (u < n && probs[order[u]] == probs[order[t]]) ++u;
        const double avg_rank = 0.5 * static_cast<double>(t + 1 + u);  // 1-based ranks
        for (size_t w = t; w < u; ++w) {
            if (labels[order[w]] > 0.5) {
                pos_rank_sum += avg_rank;
                ++n_pos;
            }
        }
        t = u;
    }
    const size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0)
        throw InputError("auc requires both classes present");
    return (pos_rank_sum - 0.5 * static_cast<double>(n_pos) * (n_pos + 1)) /
           (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

// Parameters of the quasi-triangle inequality for log loss.
struct BoundParams {
    double theta;  // lower bound on the reference model's correct-class probability
    double delta;  // slack multiplier, > 1

    void validate() const {
        if (!(theta > 0.0) || theta > 1.0) throw std::domain_error("theta must be in (0, 1]");
        if (!(delta > 1.0)) throw std::domain_error("delta must exceed 1");
    }
};

// C_{theta,delta} = log(delta) / (theta log(delta)
//                   + (1-theta) log((1-theta)/(1-theta/delta))).
// Positive and monotonically decreasing in theta.
inline double c_theta_delta(BoundParams params) {
    params.validate();
    const double log_delta = std::log(params.delta);
    if (params.theta == 1.0) return 1.0;
    const double denom = params.theta * log_delta +
                         (1.0 - params.theta) *
                             std::log((1.0 - params.theta) / (1.0 - params.theta / params.delta));
    return log_delta / denom;
}

// KL divergence of two Bernoulli distributions; endpoints are rejected so the
// theorem's hypotheses stay exact.
inline double kl_binomial(double y1, double y2) {
    if (!(y1 > 0.0 && y1 < 1.0 && y2 > 0.0 && y2 < 1.0))
        throw std::domain_error("kl_binomial requires probabilities strictly inside (0, 1)");
    return y1 * std::log(y1 / y2) + (1.0 - y1) * std::log((1.0 - y1) / (1.0 - y2));
}

struct QuasiTriangleResult {
    bool holds = false;
    double margin = 0.0;  // RHS - LHS
};

// Checks L(y2, y) <= L(y1, y) + C_{theta,delta} * KL(y1 || y2) + log(delta)
// with theta taken as the correct-class probability of y1.
inline QuasiTriangleResult check_quasi_triangle(int y, double y1, double y2, double delta) {
    if (y != 0 && y != 1) throw std::domain_error("label must be 0 or 1");
    if (!(y1 > 0.0 && y1 < 1.0 && y2 > 0.0 && y2 < 1.0))
        throw std::domain_error("probabilities must be strictly inside (0, 1)");
    const double theta = y == 1 ? y1 : 1.0 - y1;
    const double yd = static_cast<double>(y);
    const double loss1 = -yd * std::log(y1) - (1.0 - yd) * std::log(1.0 - y1);
    const double loss2 = -yd * std::log(y2) - (1.0 - yd) * std::log(1.0 - y2);
    const double rhs = loss1 + c_theta_delta({theta, delta}) * kl_binomial(y1, y2) +
                       std::log(delta);
    QuasiTriangleResult r;
    r.margin = rhs - loss2;
    r.holds = loss2 <= rhs + 1e-12;
    return r;
}

}  // namespace rafm
