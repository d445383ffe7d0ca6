#pragma once

// Generative-model backend: sampled transitions and the simulation-based FIB
// operator
//
//   (F^ a)(a,s) = (1/J) [ sum_j r_j + gamma sum_o max_a' sum_j Om^_o(s'_j) alpha_a'(s'_j) ]
//
// where Om^ is the empirical observation distribution of the batch given s'.

#include "aafib/anderson.hpp"
#include "aafib/fib.hpp"
#include "aafib/model.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace aafib {

struct Sample {
    std::size_t next_state = 0;
    std::size_t observation = 0;
    double reward = 0.0;
};

using SampleBatch = std::vector<Sample>;

enum class ResampleMode { Fresh, Frozen };

struct SimParams {
    std::size_t sample_size = 20; ///< |J| per (s,a) cell and application
    std::uint64_t seed = 0;
    ResampleMode mode = ResampleMode::Fresh;

    void check() const {
        if (sample_size < 1) throw std::invalid_argument("sample_size must be at least 1");
    }
};

namespace detail {

// Uniform double in [0,1) from the top 53 bits; stable across standard libraries.
inline double unit_draw(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline std::size_t draw_index(std::span<const double> probs, std::mt19937_64& rng) {
    const double u = unit_draw(rng);
    double acc = 0.0;
    std::size_t last = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (probs[i] <= 0.0) continue;
        acc += probs[i];
        last = i;
        if (u < acc) return i;
    }
    return last; // rounding left u past the final partial sum
}

// splitmix64 finalizer
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t application, std::uint64_t cell) {
    return mix64(mix64(mix64(seed) ^ application) ^ cell);
}

} // namespace detail

/// One draw (s', o, r) ~ G(s, a).
inline Sample sample_generative(const PomdpModel& model, std::size_t s, std::size_t a,
                                std::mt19937_64& rng) {
    if (s >= model.num_states || a >= model.num_actions) {
        throw std::out_of_range("sample_generative: state or action out of range");
    }
    Sample out;
    out.next_state = detail::draw_index(model.transition_row(a, s), rng);
    out.observation = detail::draw_index(model.observation_row(a, out.next_state), rng);
    out.reward = model.R(s, a);
    return out;
}

inline SampleBatch sample_batch(const PomdpModel& model, std::size_t s, std::size_t a,
                                std::size_t size, std::mt19937_64& rng) {
    SampleBatch batch(size);
    for (auto& x : batch) x = sample_generative(model, s, a, rng);
    return batch;
}

/// Empirical P(o | s') over the states visited in the batch.
inline std::map<std::size_t, std::vector<double>> empirical_obs_dist(const SampleBatch& batch,
                                                                     std::size_t num_observations) {
    if (batch.empty()) throw std::invalid_argument("empirical_obs_dist: empty batch");
    std::map<std::size_t, std::vector<double>> counts;
    for (const auto& x : batch) {
        if (x.observation >= num_observations) {
            throw std::out_of_range("empirical_obs_dist: observation out of range");
        }
        auto& row = counts[x.next_state];
        row.resize(num_observations, 0.0);
        row[x.observation] += 1.0;
    }
    for (auto& [sp, row] : counts) {
        double total = 0.0;
        for (double c : row) total += c;
        for (double& c : row) c /= total;
    }
    return counts;
}

/**
 * F^ as a stateful fixed-point map. In fresh mode application i draws cell
 * (a,s) from an rng seeded by (seed, i, a|S|+s), so results do not depend on
 * evaluation order. Frozen mode draws every batch once (application 0) and
 * reuses it, which makes F^ itself a gamma-contraction.
 */
class SimFibOperator {
public:
    SimFibOperator(const PomdpModel& model, SimParams params)
        : model_(&model), params_(params), cells_(model.alpha_size()) {
        params_.check();
        if (params_.mode == ResampleMode::Frozen) draw_all(0);
    }

    void operator()(std::span<const double> alpha, std::span<double> out) {
        const std::size_t S = model_->num_states, A = model_->num_actions;
        if (alpha.size() != S * A || out.size() != S * A) {
            throw std::invalid_argument("simulated FIB operator: shape mismatch");
        }
        if (params_.mode == ResampleMode::Fresh) draw_all(applications_);
        ++applications_;
        const double gamma = model_->discount;
        for (std::size_t a = 0; a < A; ++a) {
            for (std::size_t s = 0; s < S; ++s) {
                const Cell& c = cells_[a * S + s];
                double future = 0.0;
                for (const auto& group : c.groups) {
                    double best = 0.0;
                    for (std::size_t ap = 0; ap < A; ++ap) {
                        double v = 0.0;
                        for (const auto& [sp, w] : group.terms) v += w * alpha[ap * S + sp];
                        if (ap == 0 || v > best) best = v;
                    }
                    future += best;
                }
                out[a * S + s] = c.mean_reward + gamma * future;
            }
        }
    }

    std::uint64_t applications() const { return applications_; }
    const SimParams& params() const { return params_; }

    /// The batch behind cell (a,s) at the most recent draw.
    const SampleBatch& batch(std::size_t a, std::size_t s) const {
        return cells_.at(a * model_->num_states + s).batch;
    }

private:
    // sum_j Om^_o(s'_j) alpha(s'_j) / J collapses to sum_{s'} n(s',o)/J alpha(s'),
    // where n counts the pairs (s',o) in the batch.
    struct ObsGroup {
        std::vector<std::pair<std::size_t, double>> terms;
    };
    struct Cell {
        SampleBatch batch;
        double mean_reward = 0.0;
        std::vector<ObsGroup> groups;
    };

    void draw_all(std::uint64_t application) {
        const std::size_t S = model_->num_states, A = model_->num_actions;
        const std::size_t J = params_.sample_size;
        for (std::size_t a = 0; a < A; ++a) {
            for (std::size_t s = 0; s < S; ++s) {
                const std::size_t idx = a * S + s;
                std::mt19937_64 rng(detail::stream_seed(params_.seed, application, idx));
                Cell& c = cells_[idx];
                c.batch = sample_batch(*model_, s, a, J, rng);
                double rsum = 0.0;
                for (const auto& x : c.batch) rsum += x.reward;
                c.mean_reward = rsum / static_cast<double>(J);

                std::map<std::size_t, std::map<std::size_t, std::size_t>> by_obs;
                for (const auto& x : c.batch) ++by_obs[x.observation][x.next_state];
                c.groups.clear();
                for (const auto& [o, states] : by_obs) {
                    ObsGroup g;
                    for (const auto& [sp, n] : states) {
                        g.terms.emplace_back(sp, static_cast<double>(n) / static_cast<double>(J));
                    }
                    c.groups.push_back(std::move(g));
                }
            }
        }
    }

    const PomdpModel* model_;
    SimParams params_;
    std::vector<Cell> cells_;
    std::uint64_t applications_ = 0;
};

/// One application of F^ with a fresh operator (application index 0).
inline AlphaMatrix apply_F_hat(const PomdpModel& model, const AlphaMatrix& alpha,
                               const SimParams& params) {
    check_shape(model, alpha.data());
    SimFibOperator op(model, params);
    AlphaMatrix out(model.num_states, model.num_actions, 0.0);
    op(alpha.data(), out.data());
    return out;
}

/**
 * max_k ||F^ alpha^k - F alpha^k||_inf over the given iterates. The i-th
 * iterate is pushed through application i of a fresh operator built from
 * `params`, which reproduces exactly the F^ draws of a solve that evaluated
 * the operator once per iterate in order.
 */
inline double estimate_eps(const PomdpModel& model, const std::vector<std::vector<double>>& iterates,
                           const SimParams& params) {
    SimFibOperator sim(model, params);
    FibOperator exact(model);
    std::vector<double> fh(model.alpha_size()), f(model.alpha_size());
    double eps = 0.0;
    for (const auto& x : iterates) {
        check_shape(model, x);
        sim(x, fh);
        exact(x, f);
        eps = std::max(eps, sup_distance(fh, f));
    }
    return eps;
}

/// AA-FIB on F^ in place of F.
inline SolveResult aa_fib_sim_solve(const PomdpModel& model, const AaParams& params,
                                    const SimParams& sim, const AlphaMatrix* initial = nullptr) {
    SimFibOperator op(model, sim);
    AlphaMatrix x0 = initial ? *initial : init_alpha(model, params.solve.seed);
    check_shape(model, x0.data());
    return to_solve_result(anderson_iterate(op, std::move(x0.data()), params), model.num_states,
                           model.num_actions);
}

} // namespace aafib
