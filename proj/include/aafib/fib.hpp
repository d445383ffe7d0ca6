#pragma once

// Fast informed bound (FIB) operator on the stacked alpha vector, its residual,
// plain FIB iteration, the QMDP baseline, and a brute-force belief-grid value
// iteration used as a test oracle.
//
//   (F alpha)(a,s) = r(s,a) + gamma * sum_o max_a' sum_s' O(o|s',a) T(s'|s,a) alpha_a'(s')

#include "aafib/fixed_point.hpp"
#include "aafib/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace aafib {

struct SolveResult : SolveStats {
    AlphaMatrix alpha;
};

inline SolveResult to_solve_result(FixedPointResult&& r, std::size_t num_states,
                                   std::size_t num_actions) {
    SolveResult out;
    static_cast<SolveStats&>(out) = std::move(static_cast<SolveStats&>(r));
    out.alpha = AlphaMatrix(num_states, num_actions, std::move(r.x));
    return out;
}

inline void check_shape(const PomdpModel& model, std::span<const double> alpha) {
    if (alpha.size() != model.alpha_size()) {
        throw std::invalid_argument("alpha has length " + std::to_string(alpha.size()) +
                                    ", model needs " + std::to_string(model.alpha_size()));
    }
}

/**
 * FIB operator with the products O(o|s',a) T(s'|s,a) cached per (a, o) as
 * sparse rows over s. One evaluation costs one sparse mat-vec per (a, o, a').
 */
class FibOperator {
public:
    explicit FibOperator(const PomdpModel& model)
        : S_(model.num_states), A_(model.num_actions), O_(model.num_observations),
          discount_(model.discount), reward_(model.reward) {
        row_start_.reserve(A_ * O_ * S_ + 1);
        row_start_.push_back(0);
        for (std::size_t a = 0; a < A_; ++a) {
            for (std::size_t o = 0; o < O_; ++o) {
                for (std::size_t s = 0; s < S_; ++s) {
                    for (std::size_t sp = 0; sp < S_; ++sp) {
                        const double w = model.Z(a, sp, o) * model.T(a, s, sp);
                        if (w != 0.0) {
                            col_.push_back(sp);
                            weight_.push_back(w);
                        }
                    }
                    row_start_.push_back(col_.size());
                }
            }
        }
    }

    std::size_t size() const { return S_ * A_; }

    void operator()(std::span<const double> alpha, std::span<double> out) const {
        if (alpha.size() != size() || out.size() != size()) {
            throw std::invalid_argument("FibOperator: shape mismatch");
        }
        for (std::size_t a = 0; a < A_; ++a) {
            for (std::size_t s = 0; s < S_; ++s) {
                double acc = 0.0;
                for (std::size_t o = 0; o < O_; ++o) {
                    const std::size_t row = (a * O_ + o) * S_ + s;
                    const std::size_t lo = row_start_[row], hi = row_start_[row + 1];
                    if (lo == hi) continue;
                    double best = -std::numeric_limits<double>::infinity();
                    for (std::size_t ap = 0; ap < A_; ++ap) {
                        const double* va = alpha.data() + ap * S_;
                        double sum = 0.0;
                        for (std::size_t i = lo; i < hi; ++i) sum += weight_[i] * va[col_[i]];
                        if (sum > best) best = sum;
                    }
                    acc += best;
                }
                out[a * S_ + s] = reward_[s * A_ + a] + discount_ * acc;
            }
        }
    }

private:
    std::size_t S_, A_, O_;
    double discount_;
    std::vector<double> reward_;
    std::vector<std::size_t> row_start_;
    std::vector<std::size_t> col_;
    std::vector<double> weight_;
};

/// QMDP backup: alpha_a(s) <- r(s,a) + gamma sum_s' T(s'|s,a) max_a' alpha_a'(s').
class QmdpOperator {
public:
    explicit QmdpOperator(const PomdpModel& model) : model_(&model) {}

    std::size_t size() const { return model_->alpha_size(); }

    void operator()(std::span<const double> alpha, std::span<double> out) const {
        const auto& m = *model_;
        const std::size_t S = m.num_states, A = m.num_actions;
        if (alpha.size() != S * A || out.size() != S * A) {
            throw std::invalid_argument("QmdpOperator: shape mismatch");
        }
        std::vector<double> v(S, -std::numeric_limits<double>::infinity());
        for (std::size_t a = 0; a < A; ++a)
            for (std::size_t s = 0; s < S; ++s) v[s] = std::max(v[s], alpha[a * S + s]);
        for (std::size_t a = 0; a < A; ++a) {
            for (std::size_t s = 0; s < S; ++s) {
                double acc = 0.0;
                auto row = m.transition_row(a, s);
                for (std::size_t sp = 0; sp < S; ++sp) acc += row[sp] * v[sp];
                out[a * S + s] = m.R(s, a) + m.discount * acc;
            }
        }
    }

private:
    const PomdpModel* model_;
};

/// Components drawn i.i.d. uniform on [r_min/(1-gamma), r_max/(1-gamma)].
inline AlphaMatrix init_alpha(const PomdpModel& model, std::uint64_t seed) {
    const double lo = model.reward_min() / (1.0 - model.discount);
    const double hi = model.reward_max() / (1.0 - model.discount);
    AlphaMatrix alpha(model.num_states, model.num_actions, lo);
    if (hi > lo) {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> dist(lo, hi);
        for (double& x : alpha.data()) x = dist(rng);
    }
    return alpha;
}

inline AlphaMatrix apply_F(const PomdpModel& model, const AlphaMatrix& alpha) {
    if (!alpha.matches(model)) throw std::invalid_argument("apply_F: alpha shape does not match model");
    AlphaMatrix out(model.num_states, model.num_actions);
    FibOperator{model}(alpha.data(), out.data());
    return out;
}

/// G(alpha) = alpha - F alpha.
inline std::vector<double> residual_G(const PomdpModel& model, const AlphaMatrix& alpha) {
    auto f = apply_F(model, alpha);
    std::vector<double> g(alpha.size());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = alpha.data()[i] - f.data()[i];
    return g;
}

inline AlphaMatrix qmdp_update(const PomdpModel& model, const AlphaMatrix& alpha) {
    if (!alpha.matches(model)) throw std::invalid_argument("qmdp_update: alpha shape does not match model");
    AlphaMatrix out(model.num_states, model.num_actions);
    QmdpOperator{model}(alpha.data(), out.data());
    return out;
}

inline SolveResult fib_solve(const PomdpModel& model, const SolveParams& params,
                             const AlphaMatrix* initial = nullptr) {
    FibOperator op(model);
    AlphaMatrix x0 = initial ? *initial : init_alpha(model, params.seed);
    check_shape(model, x0.data());
    return to_solve_result(fixed_point_iterate(op, std::move(x0.data()), params), model.num_states,
                           model.num_actions);
}

inline SolveResult qmdp_solve(const PomdpModel& model, const SolveParams& params) {
    QmdpOperator op(model);
    return to_solve_result(fixed_point_iterate(op, init_alpha(model, params.seed).data(), params),
                           model.num_states, model.num_actions);
}

// ---------------------------------------------------------------------------
// Belief-grid value iteration (oracle for small models only)
// ---------------------------------------------------------------------------

struct BeliefGridValues {
    std::vector<std::vector<double>> beliefs;
    std::vector<double> values;
    std::size_t iterations = 0;
};

namespace detail {

// Regular grid on the simplex with `n` subdivisions, |S| <= 3.
class SimplexGrid {
public:
    SimplexGrid(std::size_t dim, std::size_t n) : dim_(dim), n_(n) {
        if (dim == 1) {
            points_.push_back({1.0});
        } else if (dim == 2) {
            for (std::size_t i = 0; i <= n; ++i) {
                const double p = static_cast<double>(i) / static_cast<double>(n);
                points_.push_back({1.0 - p, p});
            }
        } else {
            offset_.resize(n + 2);
            for (std::size_t i = 0; i <= n; ++i) {
                offset_[i] = points_.size();
                for (std::size_t j = 0; i + j <= n; ++j) {
                    points_.push_back({static_cast<double>(i) / static_cast<double>(n),
                                       static_cast<double>(j) / static_cast<double>(n),
                                       static_cast<double>(n - i - j) / static_cast<double>(n)});
                }
            }
        }
    }

    const std::vector<std::vector<double>>& points() const { return points_; }

    std::size_t nearest(std::span<const double> b) const {
        const double n = static_cast<double>(n_);
        if (dim_ == 1) return 0;
        if (dim_ == 2) return static_cast<std::size_t>(std::lround(b[1] * n));
        long i = std::lround(b[0] * n), j = std::lround(b[1] * n);
        i = std::clamp(i, 0L, static_cast<long>(n_));
        j = std::clamp(j, 0L, static_cast<long>(n_));
        while (i + j > static_cast<long>(n_)) {
            // Drop the coordinate that was rounded up the most.
            if (static_cast<double>(i) - b[0] * n >= static_cast<double>(j) - b[1] * n) --i;
            else --j;
        }
        return offset_[static_cast<std::size_t>(i)] + static_cast<std::size_t>(j);
    }

private:
    std::size_t dim_, n_;
    std::vector<std::vector<double>> points_;
    std::vector<std::size_t> offset_;
};

} // namespace detail

/**
 * Value iteration for the belief MDP on a regular simplex grid, with
 * tau(b, a, o) snapped to the nearest grid point. Only |S| <= 3 is accepted.
 * `resolution` is the number of subdivisions per axis (resolution + 1 points
 * for two states).
 */
inline BeliefGridValues exact_vi_oracle(const PomdpModel& model, std::size_t resolution, double tol,
                                        std::size_t max_iter = 1000000) {
    const std::size_t S = model.num_states, A = model.num_actions, O = model.num_observations;
    if (S > 3) throw std::invalid_argument("exact_vi_oracle: supports at most 3 states");
    if (resolution < 1) throw std::invalid_argument("exact_vi_oracle: resolution must be positive");
    detail::SimplexGrid grid(S, resolution);
    const auto& pts = grid.points();
    const std::size_t P = pts.size();

    // Static lookahead: expected reward, observation probabilities and successor points.
    std::vector<double> expected_reward(P * A, 0.0);
    std::vector<double> obs_prob(P * A * O, 0.0);
    std::vector<std::size_t> successor(P * A * O, 0);
    std::vector<double> predicted(S), posterior(S);
    for (std::size_t p = 0; p < P; ++p) {
        const auto& b = pts[p];
        for (std::size_t a = 0; a < A; ++a) {
            double r = 0.0;
            for (std::size_t s = 0; s < S; ++s) r += b[s] * model.R(s, a);
            expected_reward[p * A + a] = r;
            std::fill(predicted.begin(), predicted.end(), 0.0);
            for (std::size_t s = 0; s < S; ++s)
                for (std::size_t sp = 0; sp < S; ++sp) predicted[sp] += model.T(a, s, sp) * b[s];
            for (std::size_t o = 0; o < O; ++o) {
                double z = 0.0;
                for (std::size_t sp = 0; sp < S; ++sp) {
                    posterior[sp] = model.Z(a, sp, o) * predicted[sp];
                    z += posterior[sp];
                }
                const std::size_t idx = (p * A + a) * O + o;
                obs_prob[idx] = z;
                if (z > 0.0) {
                    for (double& x : posterior) x /= z;
                    successor[idx] = grid.nearest(posterior);
                }
            }
        }
    }

    BeliefGridValues out;
    out.beliefs = pts;
    std::vector<double> v(P, 0.0), next(P);
    for (std::size_t it = 1; it <= max_iter; ++it) {
        double diff = 0.0;
        for (std::size_t p = 0; p < P; ++p) {
            double best = -std::numeric_limits<double>::infinity();
            for (std::size_t a = 0; a < A; ++a) {
                double q = expected_reward[p * A + a];
                double future = 0.0;
                for (std::size_t o = 0; o < O; ++o) {
                    const std::size_t idx = (p * A + a) * O + o;
                    if (obs_prob[idx] > 0.0) future += obs_prob[idx] * v[successor[idx]];
                }
                q += model.discount * future;
                best = std::max(best, q);
            }
            next[p] = best;
            diff = std::max(diff, std::abs(best - v[p]));
        }
        v.swap(next);
        out.iterations = it;
        if (diff <= tol) break;
    }
    out.values = std::move(v);
    return out;
}

/// max_a b . alpha_a
inline double alpha_value(const AlphaMatrix& alpha, std::span<const double> b) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < alpha.num_actions(); ++a) {
        double v = 0.0;
        auto va = alpha.action(a);
        for (std::size_t s = 0; s < va.size(); ++s) v += b[s] * va[s];
        best = std::max(best, v);
    }
    return best;
}

} // namespace aafib
