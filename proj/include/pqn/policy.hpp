#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

#include "pqn/rng.hpp"
#include "pqn/tsp.hpp"

namespace pqn {

using Vec = std::vector<double>;

/// A policy over the feasible actions of one step. Probabilities come from a
/// softmax of the per-action score u_a / T_a where the temperature T_a is
/// the reciprocal of the action's Q-value, i.e. softmax(u_a * Q_a). With all
/// Q == 1 this reduces to the plain pointer softmax.
struct ActionDistribution {
    std::vector<int> support; // ascending city indices
    Vec probs;                // sums to 1
    Vec logits;               // raw scores u
    Vec q_values;             // clamped Q per action
    Vec temperatures;         // 1 / Q per action
};

/// Core tempered softmax over aligned vectors; support must be ascending.
inline ActionDistribution make_distribution(std::vector<int> support, Vec u, Vec q) {
    if (support.empty() || support.size() != u.size() || support.size() != q.size())
        throw std::invalid_argument("make_distribution: mismatched or empty inputs");
    ActionDistribution dist;
    dist.support = std::move(support);
    dist.logits = std::move(u);
    dist.q_values = std::move(q);
    dist.temperatures.resize(dist.q_values.size());
    for (std::size_t i = 0; i < dist.q_values.size(); ++i)
        dist.temperatures[i] = 1.0 / dist.q_values[i];
    Vec scores(dist.logits.size());
    for (std::size_t i = 0; i < scores.size(); ++i)
        scores[i] = dist.logits[i] * dist.q_values[i];
    double zmax = *std::max_element(scores.begin(), scores.end());
    double denom = 0.0;
    dist.probs.resize(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        dist.probs[i] = std::exp(scores[i] - zmax);
        denom += dist.probs[i];
    }
    for (double& p : dist.probs)
        p /= denom;
    return dist;
}

/// Tempered softmax from per-action maps; the key sets must match.
inline ActionDistribution tempered_softmax(const std::map<int, double>& logits,
                                           const std::map<int, double>& q) {
    if (logits.size() != q.size())
        throw std::invalid_argument("tempered_softmax: key sets differ");
    std::vector<int> support;
    Vec u, qv;
    auto qit = q.begin();
    for (const auto& [city, score] : logits) {
        if (qit->first != city)
            throw std::invalid_argument("tempered_softmax: key sets differ");
        support.push_back(city);
        u.push_back(score);
        qv.push_back(qit->second);
        ++qit;
    }
    return make_distribution(std::move(support), std::move(u), std::move(qv));
}

/// Plain pointer softmax: the all-ones-temperature special case.
inline ActionDistribution plain_softmax(const std::map<int, double>& logits) {
    std::map<int, double> ones;
    for (const auto& [city, _] : logits)
        ones[city] = 1.0;
    return tempered_softmax(logits, ones);
}

enum class SelectMode { Sample, Greedy };

/// Samples per the distribution (one uniform draw, CDF inversion) or takes
/// the argmax with ties broken toward the lowest city index.
inline int select_action(const ActionDistribution& dist, SelectMode mode, Rng& rng) {
    if (mode == SelectMode::Greedy) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < dist.probs.size(); ++i)
            if (dist.probs[i] > dist.probs[best])
                best = i;
        return dist.support[best];
    }
    double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t i = 0; i < dist.probs.size(); ++i) {
        acc += dist.probs[i];
        if (u < acc)
            return dist.support[i];
    }
    return dist.support.back();
}

/// Shannon entropy in nats, with 0 log 0 := 0.
inline double entropy(const ActionDistribution& dist) {
    double h = 0.0;
    for (double p : dist.probs)
        if (p > 0.0)
            h -= p * std::log(p);
    return h;
}

/// KL divergence sum p log(p/q) over a shared support.
inline double kl_direct(const ActionDistribution& p, const ActionDistribution& q) {
    if (p.support != q.support)
        throw std::invalid_argument("kl_direct: supports differ");
    double kl = 0.0;
    for (std::size_t i = 0; i < p.probs.size(); ++i) {
        if (p.probs[i] == 0.0)
            continue;
        kl += p.probs[i] * std::log(p.probs[i] / q.probs[i]);
    }
    return kl;
}

/// Closed-form divergence of the tempered policy from the plain softmax:
///   sum_a pi(a) [u_a (Q_a - 1) + w]   with   w = log(sum exp u / sum exp uQ),
/// the log-ratio of the two partition functions. Agrees with
/// kl_direct(tempered, plain) up to floating-point error.
inline double kl_closed_form(const Vec& u, const Vec& q) {
    if (u.empty() || u.size() != q.size())
        throw std::invalid_argument("kl_closed_form: mismatched or empty inputs");
    Vec scores(u.size());
    for (std::size_t i = 0; i < u.size(); ++i)
        scores[i] = u[i] * q[i];
    auto logsumexp = [](const Vec& z) {
        double zmax = *std::max_element(z.begin(), z.end());
        double acc = 0.0;
        for (double x : z)
            acc += std::exp(x - zmax);
        return zmax + std::log(acc);
    };
    double lse_scores = logsumexp(scores);
    double omega = logsumexp(u) - lse_scores;
    double kl = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        double pi = std::exp(scores[i] - lse_scores);
        kl += pi * (u[i] * (q[i] - 1.0) + omega);
    }
    return kl;
}

inline double kl_closed_form(const std::map<int, double>& logits,
                             const std::map<int, double>& q) {
    if (logits.size() != q.size())
        throw std::invalid_argument("kl_closed_form: key sets differ");
    Vec u, qv;
    auto qit = q.begin();
    for (const auto& [city, score] : logits) {
        if (qit->first != city)
            throw std::invalid_argument("kl_closed_form: key sets differ");
        u.push_back(score);
        qv.push_back(qit->second);
        ++qit;
    }
    return kl_closed_form(u, qv);
}

/// Edit distance (insert/delete/substitute, unit costs) between the city
/// sequences as emitted: fixed start, no rotation normalization.
inline int levenshtein(const Tour& a, const Tour& b) {
    const auto& s = a.order;
    const auto& t = b.order;
    std::vector<int> prev(t.size() + 1), cur(t.size() + 1);
    for (std::size_t j = 0; j <= t.size(); ++j)
        prev[j] = static_cast<int>(j);
    for (std::size_t i = 1; i <= s.size(); ++i) {
        cur[0] = static_cast<int>(i);
        for (std::size_t j = 1; j <= t.size(); ++j) {
            int subst = prev[j - 1] + (s[i - 1] == t[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, subst});
        }
        std::swap(prev, cur);
    }
    return prev[t.size()];
}

struct TourMetrics {
    double j = 0.0; // cumulative tour cost
    int sigma_b = 0; // edit distance to the benchmark tour
};

inline TourMetrics evaluate_tour_metrics(const TspInstance& instance, const Tour& tour,
                                         const Tour& benchmark) {
    TourMetrics metrics;
    metrics.j = tour_cost(instance, tour); // throws InvalidTour on bad input
    if (!validate_tour(instance, benchmark).ok)
        throw InvalidTour("evaluate_tour_metrics: invalid benchmark tour");
    metrics.sigma_b = levenshtein(tour, benchmark);
    return metrics;
}

} // namespace pqn
