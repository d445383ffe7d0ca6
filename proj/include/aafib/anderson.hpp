#pragma once

// Safeguarded Anderson acceleration with adaptive regularization, generic over
// any fixed-point map, and its instantiation on the FIB operator (AA-FIB).
//
// With g^j = x^j - F(x^j), y^j = g^{j+1} - g^j and s^j = x^{j+1} - x^j, the
// weights come from
//
//   xi = argmin ||g^k - Y xi||^2 + eta (||S||_F^2 + ||Y||_F^2) ||xi||^2
//   w_0 = xi_0,  w_i = xi_i - xi_{i-1},  w_M = 1 - xi_{M-1}
//
// and the accelerated candidate is sum_i w_i F(x^{k-M+i}).

#include "aafib/fib.hpp"
#include "aafib/fixed_point.hpp"
#include "aafib/model.hpp"

#include <cmath>
#include <deque>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace aafib {

struct AaParams {
    std::size_t m_max = 4;       ///< memory cap; 0 degenerates to plain iteration
    double eta = 1e-3;           ///< regularization scale
    double safeguard_d = 1e6;    ///< D
    double safeguard_phi = 1e-6; ///< phi
    std::size_t safeguard_ns = 5; ///< N_s
    SolveParams solve;

    void check() const {
        solve.check();
        if (!(eta > 0.0)) throw std::invalid_argument("eta must be positive");
        if (!(safeguard_d >= 0.0)) throw std::invalid_argument("safeguard D must be non-negative");
        if (!(safeguard_phi > 0.0)) throw std::invalid_argument("safeguard phi must be positive");
        if (safeguard_ns < 1) throw std::invalid_argument("safeguard N_s must be at least 1");
    }
};

/// Column-major dense matrix.
struct ColumnMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    ColumnMatrix() = default;
    ColumnMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    std::span<double> col(std::size_t j) { return {data.data() + j * rows, rows}; }
    std::span<const double> col(std::size_t j) const { return {data.data() + j * rows, rows}; }
    double operator()(std::size_t i, std::size_t j) const { return data[j * rows + i]; }

    double frobenius_sq() const {
        double s = 0.0;
        for (double x : data) s += x * x;
        return s;
    }
};

/**
 * Anderson memory: the most recent (x^j, F x^j, g^j) triples, oldest first,
 * plus the safeguard counters.
 */
class AaState {
public:
    struct Entry {
        std::vector<double> x, fx, g;
    };

    explicit AaState(std::size_t m_max) : m_max_(m_max) {}

    void push(std::vector<double> x, std::vector<double> fx, std::vector<double> g) {
        history_.push_back({std::move(x), std::move(fx), std::move(g)});
        while (history_.size() > m_max_ + 1) history_.pop_front();
    }

    /// Number of difference columns available (M^k).
    std::size_t memory() const { return history_.empty() ? 0 : history_.size() - 1; }
    const std::deque<Entry>& history() const { return history_; }
    const Entry& latest() const { return history_.back(); }

    std::size_t m_max() const { return m_max_; }

    double g0_norm = 0.0;
    std::size_t aa_count = 0;    ///< n_AA
    std::size_t since_check = 0; ///< N_AA
    bool safe_mode = true;       ///< i_safe

private:
    std::size_t m_max_;
    std::deque<Entry> history_;
};

struct Differences {
    ColumnMatrix Y, S;
};

/// Y = [y^{k-M} ... y^{k-1}], S = [s^{k-M} ... s^{k-1}] from the stored history.
inline Differences build_differences(const AaState& state) {
    const auto& h = state.history();
    if (h.size() < 2) throw std::invalid_argument("build_differences: need at least two history entries");
    const std::size_t n = h.front().x.size(), M = h.size() - 1;
    Differences d{ColumnMatrix(n, M), ColumnMatrix(n, M)};
    for (std::size_t j = 0; j < M; ++j) {
        auto y = d.Y.col(j);
        auto s = d.S.col(j);
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = h[j + 1].g[i] - h[j].g[i];
            s[i] = h[j + 1].x[i] - h[j].x[i];
        }
    }
    return d;
}

namespace detail {

// In-place Cholesky of a symmetric M x M matrix (row-major, lower triangle
// used). Returns false if a pivot is not positive.
inline bool cholesky(std::vector<double>& a, std::size_t m) {
    for (std::size_t j = 0; j < m; ++j) {
        double d = a[j * m + j];
        for (std::size_t k = 0; k < j; ++k) d -= a[j * m + k] * a[j * m + k];
        if (!(d > 0.0)) return false;
        d = std::sqrt(d);
        a[j * m + j] = d;
        for (std::size_t i = j + 1; i < m; ++i) {
            double v = a[i * m + j];
            for (std::size_t k = 0; k < j; ++k) v -= a[i * m + k] * a[j * m + k];
            a[i * m + j] = v / d;
        }
    }
    return true;
}

inline void cholesky_solve(const std::vector<double>& l, std::size_t m, std::vector<double>& b) {
    for (std::size_t i = 0; i < m; ++i) {
        double v = b[i];
        for (std::size_t k = 0; k < i; ++k) v -= l[i * m + k] * b[k];
        b[i] = v / l[i * m + i];
    }
    for (std::size_t i = m; i-- > 0;) {
        double v = b[i];
        for (std::size_t k = i + 1; k < m; ++k) v -= l[k * m + i] * b[k];
        b[i] = v / l[i * m + i];
    }
}

inline bool all_finite(std::span<const double> v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

} // namespace detail

/**
 * Closed-form minimizer of ||g - Y xi||^2 + eta (||S||_F^2 + ||Y||_F^2) ||xi||^2,
 * i.e. the solution of (Y^T Y + lambda I) xi = Y^T g. Returns zeros when
 * Y = S = 0 (lambda = 0 and the system is singular).
 */
inline std::vector<double> solve_xi(const ColumnMatrix& Y, const ColumnMatrix& S,
                                    std::span<const double> g, double eta) {
    if (Y.cols == 0) throw std::invalid_argument("solve_xi: empty memory");
    if (Y.rows != g.size() || S.rows != Y.rows || S.cols != Y.cols) {
        throw std::invalid_argument("solve_xi: shape mismatch");
    }
    if (!(eta > 0.0)) throw std::invalid_argument("solve_xi: eta must be positive");
    if (!detail::all_finite(Y.data) || !detail::all_finite(S.data) || !detail::all_finite(g)) {
        throw std::invalid_argument("solve_xi: non-finite input");
    }
    const std::size_t M = Y.cols, n = Y.rows;
    const double lambda = eta * (S.frobenius_sq() + Y.frobenius_sq());
    std::vector<double> xi(M, 0.0);
    if (lambda == 0.0) return xi;

    std::vector<double> h(M * M, 0.0);
    for (std::size_t i = 0; i < M; ++i) {
        auto yi = Y.col(i);
        for (std::size_t j = 0; j <= i; ++j) {
            auto yj = Y.col(j);
            double dot = 0.0;
            for (std::size_t r = 0; r < n; ++r) dot += yi[r] * yj[r];
            h[i * M + j] = h[j * M + i] = dot;
        }
        h[i * M + i] += lambda;
        double rhs = 0.0;
        for (std::size_t r = 0; r < n; ++r) rhs += yi[r] * g[r];
        xi[i] = rhs;
    }
    if (!detail::cholesky(h, M)) {
        // Only reachable through round-off when lambda is negligible next to Y^T Y.
        return std::vector<double>(M, 0.0);
    }
    detail::cholesky_solve(h, M, xi);
    return xi;
}

/// w_0 = xi_0, w_i = xi_i - xi_{i-1}, w_M = 1 - xi_{M-1}.
inline std::vector<double> xi_to_w(std::span<const double> xi) {
    if (xi.empty()) throw std::invalid_argument("xi_to_w: empty xi");
    const std::size_t M = xi.size();
    std::vector<double> w(M + 1);
    w[0] = xi[0];
    for (std::size_t i = 1; i < M; ++i) w[i] = xi[i] - xi[i - 1];
    w[M] = 1.0 - xi[M - 1];
    return w;
}

/// sum_i w_i F(x^{k-M+i}) over the cached images.
inline std::vector<double> aa_candidate(const AaState& state, std::span<const double> w) {
    const auto& h = state.history();
    if (w.size() != h.size()) {
        throw std::invalid_argument("aa_candidate: " + std::to_string(w.size()) + " weights for " +
                                    std::to_string(h.size()) + " stored images");
    }
    const std::size_t n = h.front().fx.size();
    std::vector<double> out(n, 0.0);
    for (std::size_t j = 0; j < h.size(); ++j) {
        const double wj = w[j];
        const auto& fx = h[j].fx;
        for (std::size_t i = 0; i < n; ++i) out[i] += wj * fx[i];
    }
    return out;
}

/// ||g^k|| <= D ||g^0|| (n_AA / N_s + 1)^{-(1 + phi)}
inline bool safeguard_accept(double g_norm, double g0_norm, std::size_t aa_count, double d,
                             double phi, std::size_t ns) {
    const double base = static_cast<double>(aa_count) / static_cast<double>(ns) + 1.0;
    return g_norm <= d * g0_norm * std::pow(base, -(1.0 + phi));
}

/**
 * Safeguarded Anderson iteration from x0.
 *
 * At every k >= 1 both the plain candidate F(x^k) and the Anderson candidate
 * are formed; the safeguard picks one. The safeguard is consulted while in
 * safe mode or after N_s consecutive Anderson steps; otherwise the Anderson
 * candidate is taken unchecked. Stops at the first iterate whose residual is
 * at most tol, which is then returned.
 */
template <FixedPointMap Op>
FixedPointResult anderson_iterate(Op& op, std::vector<double> x0, const AaParams& params) {
    params.check();
    using detail::Clock;
    const auto& sp = params.solve;
    const std::size_t n = x0.size();
    FixedPointResult result;
    const auto start = Clock::now();
    auto mark = start;

    AaState state(params.m_max);
    std::vector<double> fx(n), g(n);
    op(std::span<const double>(x0), std::span<double>(fx));
    state.g0_norm = detail::residual_into(x0, fx, g);
    result.initial_residual = state.g0_norm;
    if (sp.record_iterates) result.iterates.push_back(x0);
    if (state.g0_norm <= sp.tol) {
        result.converged = true;
        result.total_seconds = detail::seconds_since(start);
        result.x = std::move(x0);
        return result;
    }

    std::vector<double> x = fx; // x^1 = F x^0
    state.push(std::move(x0), std::move(fx), std::move(g));

    StepRecord pending; // describes how the current x was produced
    pending.kind = StepKind::Fpi;

    for (std::size_t k = 1;; ++k) {
        std::vector<double> fxk(n), gk(n);
        op(std::span<const double>(x), std::span<double>(fxk));
        const double res = detail::residual_into(x, fxk, gk);
        if (sp.record_iterates) result.iterates.push_back(x);

        pending.k = k;
        pending.residual_inf = res;
        const auto now = Clock::now();
        pending.step_seconds = std::chrono::duration<double>(now - mark).count();
        mark = now;
        result.weight_seconds += pending.weight_seconds;
        result.trace.push_back(std::move(pending));
        pending = StepRecord{};

        if (res <= sp.tol) {
            result.converged = true;
            result.x = std::move(x);
            break;
        }
        if (k >= sp.max_iter) {
            result.x = std::move(x);
            break;
        }

        state.push(std::move(x), fxk, gk);
        const std::size_t M = state.memory();
        if (M == 0) {
            // Empty memory: the Anderson candidate is F x^k itself.
            pending.kind = StepKind::Fpi;
            x = std::move(fxk);
            continue;
        }

        const auto tw = Clock::now();
        const auto diff = build_differences(state);
        const auto xi = solve_xi(diff.Y, diff.S, state.latest().g, params.eta);
        auto w = xi_to_w(xi);
        pending.weight_seconds = detail::seconds_since(tw);
        auto x_aa = aa_candidate(state, w);
        pending.weights = std::move(w);
        pending.aa_count = state.aa_count;

        if (state.safe_mode || state.since_check >= params.safeguard_ns) {
            pending.safeguard_checked = true;
            if (safeguard_accept(res, state.g0_norm, state.aa_count, params.safeguard_d,
                                 params.safeguard_phi, params.safeguard_ns)) {
                x = std::move(x_aa);
                pending.kind = StepKind::Aa;
                ++state.aa_count;
                state.safe_mode = false;
                state.since_check = 1;
            } else {
                x = std::move(fxk);
                pending.kind = StepKind::Fpi;
                state.since_check = 0;
            }
        } else {
            x = std::move(x_aa);
            pending.kind = StepKind::Aa;
            ++state.aa_count;
            ++state.since_check;
        }
    }
    result.iterations = result.trace.size();
    result.total_seconds = detail::seconds_since(start);
    return result;
}

/// AA-FIB: safeguarded Anderson acceleration of the FIB operator.
inline SolveResult aa_fib_solve(const PomdpModel& model, const AaParams& params,
                                const AlphaMatrix* initial = nullptr) {
    FibOperator op(model);
    AlphaMatrix x0 = initial ? *initial : init_alpha(model, params.solve.seed);
    check_shape(model, x0.data());
    return to_solve_result(anderson_iterate(op, std::move(x0.data()), params), model.num_states,
                           model.num_actions);
}

} // namespace aafib
