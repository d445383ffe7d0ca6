#pragma once

// Greedy alpha-vector policies, belief tracking and discounted-return
// evaluation by simulated episodes.

#include "aafib/model.hpp"
#include "aafib/sim.hpp"

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace aafib {

class ImpossibleObservation : public std::runtime_error {
public:
    ImpossibleObservation(std::size_t action, std::size_t observation)
        : std::runtime_error("observation " + std::to_string(observation) +
                             " has zero probability after action " + std::to_string(action)),
          action_(action), observation_(observation) {}
    std::size_t action() const { return action_; }
    std::size_t observation() const { return observation_; }

private:
    std::size_t action_, observation_;
};

/// b'(s') proportional to O(o|s',a) sum_s T(s'|s,a) b(s).
inline Belief belief_update(const PomdpModel& model, const Belief& b, std::size_t a, std::size_t o) {
    const std::size_t S = model.num_states;
    if (b.size() != S) throw std::invalid_argument("belief_update: belief size mismatch");
    if (a >= model.num_actions || o >= model.num_observations) {
        throw std::out_of_range("belief_update: action or observation out of range");
    }
    std::vector<double> next(S, 0.0);
    for (std::size_t s = 0; s < S; ++s) {
        const double bs = b[s];
        if (bs == 0.0) continue;
        auto row = model.transition_row(a, s);
        for (std::size_t sp = 0; sp < S; ++sp) next[sp] += row[sp] * bs;
    }
    double total = 0.0;
    for (std::size_t sp = 0; sp < S; ++sp) {
        next[sp] *= model.Z(a, sp, o);
        total += next[sp];
    }
    if (!(total > 0.0)) throw ImpossibleObservation(a, o);
    for (double& p : next) p /= total;
    return Belief(std::move(next));
}

/// Lowest-index maximizer of b . alpha_a. `b` need not be normalized.
inline std::size_t greedy_action(const AlphaMatrix& alpha, std::span<const double> b) {
    if (b.size() != alpha.num_states()) throw std::invalid_argument("greedy_action: belief size mismatch");
    std::size_t best_a = 0;
    double best = 0.0;
    for (std::size_t a = 0; a < alpha.num_actions(); ++a) {
        auto v = alpha.action(a);
        double x = 0.0;
        for (std::size_t s = 0; s < v.size(); ++s) x += b[s] * v[s];
        if (a == 0 || x > best) {
            best = x;
            best_a = a;
        }
    }
    return best_a;
}

inline std::size_t greedy_action(const AlphaMatrix& alpha, const Belief& b) {
    return greedy_action(alpha, b.probs());
}

enum class BeliefMode { Fixed, Random };

inline const char* to_string(BeliefMode m) { return m == BeliefMode::Fixed ? "fixed" : "random"; }

struct EvalConfig {
    std::size_t episodes = 100;
    std::size_t max_steps = 100;
    BeliefMode mode = BeliefMode::Fixed;
    std::uint64_t seed = 0;

    void check() const {
        if (episodes < 1) throw std::invalid_argument("episodes must be at least 1");
        if (max_steps < 1) throw std::invalid_argument("max_steps must be at least 1");
    }
};

struct EvalStats {
    double mean = 0.0;
    double stddev = 0.0; ///< population standard deviation
    std::size_t episodes = 0;
    std::vector<double> returns;
};

/// Uniform point on the simplex: normalized Exp(1) draws.
inline Belief random_belief(std::size_t n, std::mt19937_64& rng) {
    std::vector<double> p(n);
    double total = 0.0;
    for (double& x : p) {
        // 1 - u lies in (0,1], so the log is finite.
        x = -std::log(1.0 - detail::unit_draw(rng));
        total += x;
    }
    if (!(total > 0.0)) return Belief::uniform(n);
    for (double& x : p) x /= total;
    // Renormalize once more to keep the sum within tolerance after division.
    double sum = 0.0;
    for (double x : p) sum += x;
    for (double& x : p) x /= sum;
    return Belief(std::move(p));
}

/**
 * One episode: the hidden state is drawn once from b0, then for each step the
 * greedy action is taken, gamma^t r(s_t, a_t) accrues, the simulator moves,
 * and the belief is filtered on the emitted observation.
 */
inline double rollout(const PomdpModel& model, const AlphaMatrix& alpha, const Belief& b0,
                      std::size_t max_steps, std::mt19937_64& rng) {
    if (!alpha.matches(model)) throw std::invalid_argument("rollout: alpha shape does not match model");
    if (b0.size() != model.num_states) throw std::invalid_argument("rollout: belief size mismatch");
    std::size_t s = detail::draw_index(b0.probs(), rng);
    Belief b = b0;
    double ret = 0.0, discount = 1.0;
    for (std::size_t t = 0; t < max_steps; ++t) {
        const std::size_t a = greedy_action(alpha, b);
        const Sample x = sample_generative(model, s, a, rng);
        ret += discount * x.reward;
        discount *= model.discount;
        if (t + 1 < max_steps) b = belief_update(model, b, a, x.observation);
        s = x.next_state;
    }
    return ret;
}

/// Mean and std of the discounted return; episode i uses its own rng stream.
inline EvalStats evaluate(const PomdpModel& model, const AlphaMatrix& alpha, const EvalConfig& config) {
    config.check();
    if (config.mode == BeliefMode::Fixed && !model.start_belief) {
        throw std::invalid_argument("fixed-belief evaluation needs a start belief in the model");
    }
    EvalStats st;
    st.episodes = config.episodes;
    st.returns.reserve(config.episodes);
    for (std::size_t i = 0; i < config.episodes; ++i) {
        std::mt19937_64 rng(detail::stream_seed(config.seed, static_cast<std::uint64_t>(config.mode), i));
        const Belief b0 = config.mode == BeliefMode::Fixed ? Belief(*model.start_belief)
                                                           : random_belief(model.num_states, rng);
        st.returns.push_back(rollout(model, alpha, b0, config.max_steps, rng));
    }
    double sum = 0.0;
    for (double r : st.returns) sum += r;
    st.mean = sum / static_cast<double>(st.returns.size());
    double sq = 0.0;
    for (double r : st.returns) sq += (r - st.mean) * (r - st.mean);
    st.stddev = std::sqrt(sq / static_cast<double>(st.returns.size()));
    return st;
}

} // namespace aafib
