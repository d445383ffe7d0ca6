#pragma once

// Common result/trace types and the plain fixed-point iteration x <- F(x),
// generic over any map R^n -> R^n.

#include "aafib/model.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace aafib {

/// A map R^n -> R^n evaluated as op(x, out). May be stateful (e.g. sampling).
template <class Op>
concept FixedPointMap = requires(Op& op, std::span<const double> x, std::span<double> out) {
    op(x, out);
};

struct SolveParams {
    double tol = 1e-6;             ///< stop once ||x - F(x)||_inf <= tol
    std::size_t max_iter = 100000; ///< cap on the number of iterates after x^0
    std::uint64_t seed = 0;        ///< seed for the random initial iterate
    bool record_iterates = false;  ///< keep every iterate x^0, x^1, ... in the result

    void check() const {
        if (!(tol > 0.0)) throw std::invalid_argument("tol must be positive");
        if (max_iter < 1) throw std::invalid_argument("max_iter must be at least 1");
    }
};

enum class StepKind { Fpi, Aa };

inline const char* to_string(StepKind k) { return k == StepKind::Fpi ? "FPI" : "AA"; }

/**
 * One row per iterate x^k, k >= 1.
 *
 * `kind` says how x^k was produced. `residual_inf` is ||x^k - F(x^k)||_inf.
 * `step_seconds` covers everything since the previous row (weight solve,
 * candidate assembly and the operator evaluation at x^k); row 1 also covers
 * F(x^0). `weights` holds the Anderson weights computed on the way to x^k,
 * whether or not the AA candidate was the one taken.
 */
struct StepRecord {
    std::size_t k = 0;
    double residual_inf = 0.0;
    StepKind kind = StepKind::Fpi;
    double step_seconds = 0.0;
    double weight_seconds = 0.0;
    std::vector<double> weights;
    bool safeguard_checked = false; ///< the safeguard inequality decided this step
    std::size_t aa_count = 0;       ///< accepted AA steps before this one (n_AA)
};

struct SolveStats {
    std::vector<StepRecord> trace;
    bool converged = false;
    std::size_t iterations = 0;  ///< == trace.size()
    double initial_residual = 0; ///< ||x^0 - F(x^0)||_inf
    double total_seconds = 0.0;
    double weight_seconds = 0.0; ///< sum of trace[i].weight_seconds
    std::vector<std::vector<double>> iterates;
};

struct FixedPointResult : SolveStats {
    std::vector<double> x;
};

namespace detail {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

inline double residual_into(std::span<const double> x, std::span<const double> fx,
                            std::span<double> g) {
    double n = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        g[i] = x[i] - fx[i];
        n = std::max(n, std::abs(g[i]));
    }
    return n;
}

} // namespace detail

/// Plain iteration x^{k+1} = F(x^k) from x0 until the residual drops to tol.
template <FixedPointMap Op>
FixedPointResult fixed_point_iterate(Op& op, std::vector<double> x0, const SolveParams& params) {
    params.check();
    using detail::Clock;
    const std::size_t n = x0.size();
    FixedPointResult result;
    const auto start = Clock::now();
    auto mark = start;

    std::vector<double> x = std::move(x0), fx(n), g(n);
    op(std::span<const double>(x), std::span<double>(fx));
    result.initial_residual = detail::residual_into(x, fx, g);
    if (params.record_iterates) result.iterates.push_back(x);

    if (result.initial_residual <= params.tol) {
        result.converged = true;
    } else {
        for (std::size_t k = 1;; ++k) {
            std::swap(x, fx);
            op(std::span<const double>(x), std::span<double>(fx));
            const double res = detail::residual_into(x, fx, g);
            if (params.record_iterates) result.iterates.push_back(x);

            StepRecord rec;
            rec.k = k;
            rec.residual_inf = res;
            rec.kind = StepKind::Fpi;
            const auto now = Clock::now();
            rec.step_seconds = std::chrono::duration<double>(now - mark).count();
            mark = now;
            result.trace.push_back(std::move(rec));

            if (res <= params.tol) {
                result.converged = true;
                break;
            }
            if (k >= params.max_iter) break;
        }
    }
    result.iterations = result.trace.size();
    result.total_seconds = detail::seconds_since(start);
    result.x = std::move(x);
    return result;
}

} // namespace aafib
