#pragma once

// POMDP tuple, alpha-vector container and belief type.
//
// Indexing is 0-based throughout. The stacked alpha vector places the
// component for (action a, state s) at a * num_states + s.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace aafib {

/// Probability rows must sum to one within this absolute tolerance.
inline constexpr double kProbabilityTolerance = 1e-9;

struct Labels {
    std::vector<std::string> states;
    std::vector<std::string> actions;
    std::vector<std::string> observations;
};

/**
 * Finite discounted POMDP (S, A, O, T, Omega, r, gamma).
 *
 * Storage:
 *   transition  [a][s][s']  (row-major, contiguous per (a, s))
 *   observation [a][s'][o]
 *   reward      [s][a]
 *
 * Treated as immutable once built; solvers only ever hold a const reference.
 */
struct PomdpModel {
    std::size_t num_states = 0;
    std::size_t num_actions = 0;
    std::size_t num_observations = 0;
    std::vector<double> transition;
    std::vector<double> observation;
    std::vector<double> reward;
    double discount = 0.95;
    std::optional<std::vector<double>> start_belief;
    Labels labels;

    /// Allocates zero-filled arrays of the right shape.
    static PomdpModel zeros(std::size_t states, std::size_t actions, std::size_t observations,
                            double discount) {
        PomdpModel m;
        m.num_states = states;
        m.num_actions = actions;
        m.num_observations = observations;
        m.transition.assign(actions * states * states, 0.0);
        m.observation.assign(actions * states * observations, 0.0);
        m.reward.assign(states * actions, 0.0);
        m.discount = discount;
        return m;
    }

    double& T(std::size_t a, std::size_t s, std::size_t next) {
        return transition[(a * num_states + s) * num_states + next];
    }
    double T(std::size_t a, std::size_t s, std::size_t next) const {
        return transition[(a * num_states + s) * num_states + next];
    }
    double& Z(std::size_t a, std::size_t next, std::size_t o) {
        return observation[(a * num_states + next) * num_observations + o];
    }
    double Z(std::size_t a, std::size_t next, std::size_t o) const {
        return observation[(a * num_states + next) * num_observations + o];
    }
    double& R(std::size_t s, std::size_t a) { return reward[s * num_actions + a]; }
    double R(std::size_t s, std::size_t a) const { return reward[s * num_actions + a]; }

    std::span<const double> transition_row(std::size_t a, std::size_t s) const {
        return {transition.data() + (a * num_states + s) * num_states, num_states};
    }
    std::span<const double> observation_row(std::size_t a, std::size_t next) const {
        return {observation.data() + (a * num_states + next) * num_observations,
                num_observations};
    }

    double reward_min() const {
        return reward.empty() ? 0.0 : *std::min_element(reward.begin(), reward.end());
    }
    double reward_max() const {
        return reward.empty() ? 0.0 : *std::max_element(reward.begin(), reward.end());
    }

    std::size_t alpha_size() const { return num_states * num_actions; }
};

/// Position of the (a, s) component in the stacked alpha vector.
inline std::size_t flat_index(std::size_t a, std::size_t s, std::size_t num_states,
                              std::size_t num_actions) {
    if (a >= num_actions || s >= num_states) {
        throw std::out_of_range("flat_index: (a=" + std::to_string(a) + ", s=" +
                                std::to_string(s) + ") outside " +
                                std::to_string(num_actions) + "x" + std::to_string(num_states));
    }
    return a * num_states + s;
}

struct ActionState {
    std::size_t action;
    std::size_t state;
    friend bool operator==(const ActionState&, const ActionState&) = default;
};

inline ActionState unflatten_index(std::size_t index, std::size_t num_states,
                                   std::size_t num_actions) {
    if (num_states == 0 || index >= num_states * num_actions) {
        throw std::out_of_range("unflatten_index: " + std::to_string(index) + " out of range");
    }
    return {index / num_states, index % num_states};
}

/// One alpha vector per action, stacked into a single array.
class AlphaMatrix {
public:
    AlphaMatrix() = default;
    AlphaMatrix(std::size_t num_states, std::size_t num_actions, double fill = 0.0)
        : num_states_(num_states), num_actions_(num_actions),
          data_(num_states * num_actions, fill) {}
    AlphaMatrix(std::size_t num_states, std::size_t num_actions, std::vector<double> data)
        : num_states_(num_states), num_actions_(num_actions), data_(std::move(data)) {
        if (data_.size() != num_states_ * num_actions_) {
            throw std::invalid_argument("AlphaMatrix: data length " +
                                        std::to_string(data_.size()) + " != " +
                                        std::to_string(num_states_ * num_actions_));
        }
    }

    /// Stacks |A| vectors of length |S|.
    static AlphaMatrix from_vectors(const std::vector<std::vector<double>>& vectors) {
        if (vectors.empty()) throw std::invalid_argument("AlphaMatrix: no vectors");
        const std::size_t ns = vectors.front().size();
        std::vector<double> data;
        data.reserve(ns * vectors.size());
        for (const auto& v : vectors) {
            if (v.size() != ns) throw std::invalid_argument("AlphaMatrix: ragged vectors");
            data.insert(data.end(), v.begin(), v.end());
        }
        return AlphaMatrix(ns, vectors.size(), std::move(data));
    }

    std::vector<std::vector<double>> to_vectors() const {
        std::vector<std::vector<double>> out;
        out.reserve(num_actions_);
        for (std::size_t a = 0; a < num_actions_; ++a) {
            auto v = action(a);
            out.emplace_back(v.begin(), v.end());
        }
        return out;
    }

    std::size_t num_states() const { return num_states_; }
    std::size_t num_actions() const { return num_actions_; }
    std::size_t size() const { return data_.size(); }

    double operator()(std::size_t a, std::size_t s) const { return data_[a * num_states_ + s]; }
    double& operator()(std::size_t a, std::size_t s) { return data_[a * num_states_ + s]; }

    std::span<const double> action(std::size_t a) const {
        return {data_.data() + a * num_states_, num_states_};
    }

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    bool all_finite() const {
        return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
    }

    bool matches(const PomdpModel& model) const {
        return num_states_ == model.num_states && num_actions_ == model.num_actions;
    }

    friend bool operator==(const AlphaMatrix&, const AlphaMatrix&) = default;

private:
    std::size_t num_states_ = 0;
    std::size_t num_actions_ = 0;
    std::vector<double> data_;
};

/// Probability distribution over states.
class Belief {
public:
    Belief() = default;
    explicit Belief(std::vector<double> probs) : probs_(std::move(probs)) {
        if (probs_.empty()) throw std::invalid_argument("Belief: empty");
        double sum = 0.0;
        for (double p : probs_) {
            if (!(p >= 0.0) || !std::isfinite(p)) {
                throw std::invalid_argument("Belief: negative or non-finite entry");
            }
            sum += p;
        }
        if (std::abs(sum - 1.0) > kProbabilityTolerance) {
            throw std::invalid_argument("Belief: entries sum to " + std::to_string(sum));
        }
    }

    static Belief uniform(std::size_t n) { return Belief(std::vector<double>(n, 1.0 / n)); }
    static Belief point(std::size_t n, std::size_t s) {
        std::vector<double> p(n, 0.0);
        p.at(s) = 1.0;
        return Belief(std::move(p));
    }

    std::size_t size() const { return probs_.size(); }
    double operator[](std::size_t s) const { return probs_[s]; }
    std::span<const double> probs() const { return probs_; }

private:
    std::vector<double> probs_;
};

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

struct Violation {
    enum class Kind { Shape, TransitionRow, ObservationRow, Discount, Reward, StartBelief };
    Kind kind;
    std::string message;
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
    std::string to_string() const {
        std::string out;
        for (const auto& v : violations) {
            out += v.message;
            out += '\n';
        }
        return out;
    }
};

namespace detail {

inline std::string fmt_double(double x) {
    std::ostringstream os;
    os.precision(12);
    os << x;
    return os.str();
}

// Appends a violation if the row has a negative / non-finite entry or a bad sum.
inline void check_row(std::span<const double> row, Violation::Kind kind, const std::string& where,
                      ValidationReport& report) {
    double sum = 0.0;
    for (double p : row) {
        if (!std::isfinite(p) || p < 0.0) {
            report.violations.push_back(
                {kind, where + " has a negative or non-finite entry " + fmt_double(p)});
            return;
        }
        sum += p;
    }
    if (std::abs(sum - 1.0) > kProbabilityTolerance) {
        report.violations.push_back({kind, where + " sums to " + fmt_double(sum)});
    }
}

} // namespace detail

/// Lists every violated model invariant. An empty report means the model is valid.
inline ValidationReport validate(const PomdpModel& m) {
    using K = Violation::Kind;
    ValidationReport report;
    if (m.num_states == 0 || m.num_actions == 0 || m.num_observations == 0) {
        report.violations.push_back({K::Shape, "state, action and observation counts must be positive"});
        return report;
    }
    const auto S = m.num_states, A = m.num_actions, O = m.num_observations;
    if (m.transition.size() != A * S * S || m.observation.size() != A * S * O ||
        m.reward.size() != S * A) {
        report.violations.push_back({K::Shape, "array sizes do not match declared dimensions"});
        return report;
    }
    for (std::size_t a = 0; a < A; ++a) {
        for (std::size_t s = 0; s < S; ++s) {
            detail::check_row(m.transition_row(a, s), K::TransitionRow,
                              "T row (s=" + std::to_string(s) + ", a=" + std::to_string(a) + ")",
                              report);
        }
    }
    for (std::size_t a = 0; a < A; ++a) {
        for (std::size_t sp = 0; sp < S; ++sp) {
            detail::check_row(m.observation_row(a, sp), K::ObservationRow,
                              "O row (a=" + std::to_string(a) + ", s'=" + std::to_string(sp) + ")",
                              report);
        }
    }
    if (!(m.discount > 0.0 && m.discount < 1.0)) {
        report.violations.push_back(
            {K::Discount, "discount out of (0,1): " + detail::fmt_double(m.discount)});
    }
    for (double r : m.reward) {
        if (!std::isfinite(r)) {
            report.violations.push_back({K::Reward, "non-finite reward"});
            break;
        }
    }
    if (m.start_belief) {
        if (m.start_belief->size() != S) {
            report.violations.push_back({K::StartBelief, "start belief has wrong length"});
        } else {
            detail::check_row(*m.start_belief, K::StartBelief, "start belief", report);
        }
    }
    const auto check_names = [&](const std::vector<std::string>& names, std::size_t n,
                                 const char* what) {
        if (!names.empty() && names.size() != n) {
            report.violations.push_back({K::Shape, std::string(what) + " label count mismatch"});
        }
    };
    check_names(m.labels.states, S, "state");
    check_names(m.labels.actions, A, "action");
    check_names(m.labels.observations, O, "observation");
    return report;
}

inline void require_valid(const PomdpModel& m) {
    auto report = validate(m);
    if (!report.ok()) throw std::invalid_argument("invalid POMDP model:\n" + report.to_string());
}

inline double sup_norm(std::span<const double> x) {
    double n = 0.0;
    for (double v : x) n = std::max(n, std::abs(v));
    return n;
}

inline double sup_distance(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw std::invalid_argument("sup_distance: length mismatch");
    double n = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) n = std::max(n, std::abs(x[i] - y[i]));
    return n;
}

} // namespace aafib
