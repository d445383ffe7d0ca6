#pragma once

// Shared fixtures for the test binaries.

#include "aafib/model.hpp"

#include <random>
#include <vector>

namespace aafib::fixtures {

/// 1 state, 1 action, 1 observation, constant reward: F(x) = r + gamma x.
inline PomdpModel one_state(double reward = 1.0, double gamma = 0.9) {
    auto m = PomdpModel::zeros(1, 1, 1, gamma);
    m.T(0, 0, 0) = 1.0;
    m.Z(0, 0, 0) = 1.0;
    m.R(0, 0) = reward;
    m.start_belief = std::vector<double>{1.0};
    return m;
}

inline std::vector<double> random_row(std::size_t n, std::mt19937_64& rng, double sparsity = 0.3) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> row(n);
    double total = 0.0;
    for (double& x : row) {
        x = u(rng) < sparsity ? 0.0 : u(rng);
        total += x;
    }
    if (total == 0.0) {
        row[std::uniform_int_distribution<std::size_t>(0, n - 1)(rng)] = 1.0;
        return row;
    }
    for (double& x : row) x /= total;
    return row;
}

/// Dense-ish random valid model with rewards in [-10, 10].
inline PomdpModel random_model(std::size_t S, std::size_t A, std::size_t O, std::mt19937_64& rng,
                               double gamma = -1.0) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    if (gamma < 0.0) gamma = 0.5 + 0.45 * u(rng);
    auto m = PomdpModel::zeros(S, A, O, gamma);
    for (std::size_t a = 0; a < A; ++a) {
        for (std::size_t s = 0; s < S; ++s) {
            auto row = random_row(S, rng);
            for (std::size_t sp = 0; sp < S; ++sp) m.T(a, s, sp) = row[sp];
        }
        for (std::size_t sp = 0; sp < S; ++sp) {
            auto row = random_row(O, rng);
            for (std::size_t o = 0; o < O; ++o) m.Z(a, sp, o) = row[o];
        }
    }
    for (std::size_t s = 0; s < S; ++s) {
        for (std::size_t a = 0; a < A; ++a) m.R(s, a) = -10.0 + 20.0 * u(rng);
    }
    m.start_belief = random_row(S, rng, 0.0);
    return m;
}

inline std::size_t random_dim(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

/// Deterministic cycle: s -> (s + a) mod S, observation = s' mod O.
inline PomdpModel deterministic_model(std::size_t S, std::size_t A, std::size_t O, double gamma = 0.9) {
    auto m = PomdpModel::zeros(S, A, O, gamma);
    for (std::size_t a = 0; a < A; ++a) {
        for (std::size_t s = 0; s < S; ++s) {
            m.T(a, s, (s + a) % S) = 1.0;
            m.R(s, a) = static_cast<double>(s) - static_cast<double>(a);
        }
        for (std::size_t sp = 0; sp < S; ++sp) m.Z(a, sp, sp % O) = 1.0;
    }
    m.start_belief = std::vector<double>(S, 1.0 / S);
    return m;
}

} // namespace aafib::fixtures
