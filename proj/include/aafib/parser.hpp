#pragma once

// Reader and writer for the Cassandra `.pomdp` text format.
//
// Supported:
//   discount: <real>
//   values: reward | cost
//   states: <count> | <name>...        (same for actions:, observations:)
//   start: <probs...> | uniform | <state>
//   start include: <states...>    start exclude: <states...>
//   T: a : s : s' <p>     T: a : s <row|uniform>     T: a <matrix|uniform|identity>
//   O: a : s' : o <p>     O: a : s' <row|uniform>    O: a <matrix|uniform>
//   R: a : s : s' : o <v> R: a : s : s' <row>        R: a : s <matrix>
//
// `*` expands to every index of its slot. Later statements overwrite earlier
// ones. Rewards conditioned on (s', o) are folded into r(s, a) by expectation
// under T and O once the whole file is read. Probability rows off by at most
// 1e-6 are renormalized; anything worse is rejected.

#include "aafib/model.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <initializer_list>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <unordered_map>
#include <variant>
#include <vector>

namespace aafib {

class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& message)
        : std::runtime_error("line " + std::to_string(line) + ": " + message), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

/// Rows whose sum is within this distance of one are rescaled on load.
inline constexpr double kRenormalizeTolerance = 1e-6;

namespace detail {

struct Token {
    std::string text;
    std::size_t line;
};

inline std::vector<Token> tokenize(std::string_view text) {
    std::vector<Token> tokens;
    std::size_t line = 1;
    std::size_t i = 0;
    const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v'; };
    while (i < text.size()) {
        const char c = text[i];
        if (c == '\n') {
            ++line;
            ++i;
        } else if (is_space(c)) {
            ++i;
        } else if (c == '#') {
            while (i < text.size() && text[i] != '\n') ++i;
        } else if (c == ':') {
            tokens.push_back({":", line});
            ++i;
        } else {
            std::size_t j = i;
            while (j < text.size() && !is_space(text[j]) && text[j] != '\n' && text[j] != ':' &&
                   text[j] != '#') {
                ++j;
            }
            tokens.push_back({std::string(text.substr(i, j - i)), line});
            i = j;
        }
    }
    return tokens;
}

inline std::optional<double> to_number(std::string_view s) {
    if (s.empty()) return std::nullopt;
    if (s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

inline std::optional<std::size_t> to_index(std::string_view s) {
    if (s.empty()) return std::nullopt;
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

inline std::string format_number(double x) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, ptr);
}

// -1 marks a wildcard slot.
using Pattern = long;
inline constexpr Pattern kAny = -1;

struct RewardStatement {
    enum class Form { Scalar, Row, Matrix };
    Form form;
    Pattern action, state, next, obs;
    std::vector<double> values;
    std::size_t line;
};

class PomdpReader {
public:
    explicit PomdpReader(std::string_view text) : tokens_(tokenize(text)) {}

    PomdpModel read() {
        while (pos_ < tokens_.size()) statement();
        require_preamble(last_line());
        finish_rows();
        model_.reward.assign(model_.num_states * model_.num_actions, 0.0);
        reduce_rewards();
        if (values_cost_) {
            for (double& r : model_.reward) r = -r;
        }
        auto report = validate(model_);
        if (!report.ok()) throw ParseError(last_line(), "model invalid: " + report.to_string());
        return std::move(model_);
    }

private:
    // ---- token helpers -----------------------------------------------------

    std::size_t last_line() const { return tokens_.empty() ? 1 : tokens_.back().line; }

    std::size_t line() const { return pos_ < tokens_.size() ? tokens_[pos_].line : last_line(); }

    const Token& peek(std::size_t ahead = 0) const {
        static const Token eof{"", 0};
        return pos_ + ahead < tokens_.size() ? tokens_[pos_ + ahead] : eof;
    }

    bool at_end() const { return pos_ >= tokens_.size(); }

    const Token& next(const char* what) {
        if (at_end()) throw ParseError(last_line(), std::string("unexpected end of file, expected ") + what);
        return tokens_[pos_++];
    }

    void expect_colon() {
        const Token& t = next("':'");
        if (t.text != ":") throw ParseError(t.line, "expected ':' but found '" + t.text + "'");
    }

    static bool is_keyword(const std::string& s) {
        return s == "discount" || s == "values" || s == "states" || s == "actions" ||
               s == "observations" || s == "start" || s == "T" || s == "O" || s == "R";
    }

    bool statement_starts_here(std::size_t ahead = 0) const {
        if (pos_ + ahead >= tokens_.size()) return true;
        const auto& t = peek(ahead).text;
        if (t == "start" && (peek(ahead + 1).text == "include" || peek(ahead + 1).text == "exclude")) {
            return peek(ahead + 2).text == ":";
        }
        return is_keyword(t) && peek(ahead + 1).text == ":";
    }

    // Tokens up to the next statement keyword.
    std::vector<Token> rest_of_statement() {
        std::vector<Token> out;
        while (!statement_starts_here()) out.push_back(tokens_[pos_++]);
        return out;
    }

    double number(const char* what) {
        const Token& t = next(what);
        auto v = to_number(t.text);
        if (!v) throw ParseError(t.line, std::string("malformed number '") + t.text + "' for " + what);
        return *v;
    }

    // ---- statements --------------------------------------------------------

    void statement() {
        const Token& head = next("statement");
        const std::size_t at = head.line;
        if (head.text == "start" && (peek().text == "include" || peek().text == "exclude")) {
            const bool include = next("include/exclude").text == "include";
            expect_colon();
            start_subset(include, at);
            return;
        }
        if (!is_keyword(head.text)) throw ParseError(at, "unknown key '" + head.text + "'");
        expect_colon();
        const std::string& key = head.text;
        if (key == "discount") {
            discount_ = number("discount");
            if (!(*discount_ > 0.0 && *discount_ < 1.0)) {
                throw ParseError(at, "discount must lie in (0,1), got " + format_number(*discount_));
            }
            if (!statement_starts_here()) throw ParseError(line(), "unexpected token after discount");
        } else if (key == "values") {
            const Token& t = next("reward|cost");
            if (t.text == "reward") values_cost_ = false;
            else if (t.text == "cost") values_cost_ = true;
            else throw ParseError(t.line, "values must be 'reward' or 'cost', got '" + t.text + "'");
            have_values_ = true;
        } else if (key == "states") {
            declare(states_, "states", at);
        } else if (key == "actions") {
            declare(actions_, "actions", at);
        } else if (key == "observations") {
            declare(observations_, "observations", at);
        } else if (key == "start") {
            start(at);
        } else {
            require_preamble(at);
            if (key == "T") transition_statement(at);
            else if (key == "O") observation_statement(at);
            else reward_statement(at);
        }
    }

    struct Declaration {
        std::optional<std::size_t> count;
        std::vector<std::string> names;
        std::unordered_map<std::string, std::size_t> lookup;
        std::size_t size() const { return count.value_or(0); }
    };

    void declare(Declaration& d, const char* what, std::size_t at) {
        if (d.count) throw ParseError(at, std::string(what) + " declared twice");
        if (body_started_) throw ParseError(at, std::string(what) + " declared after body statements");
        auto toks = rest_of_statement();
        if (toks.empty()) throw ParseError(at, std::string("empty ") + what + " declaration");
        if (toks.size() == 1) {
            if (auto n = to_index(toks[0].text)) {
                if (*n == 0) throw ParseError(at, std::string(what) + " count must be positive");
                d.count = *n;
                return;
            }
        }
        for (const auto& t : toks) {
            if (t.text == "*" || t.text == ":") throw ParseError(t.line, "invalid name '" + t.text + "'");
            if (!d.lookup.emplace(t.text, d.names.size()).second) {
                throw ParseError(t.line, "duplicate name '" + t.text + "'");
            }
            d.names.push_back(t.text);
        }
        d.count = d.names.size();
    }

    void require_preamble(std::size_t at) {
        if (body_started_) return;
        if (!discount_) throw ParseError(at, "missing 'discount:' in preamble");
        if (!have_values_) throw ParseError(at, "missing 'values:' in preamble");
        if (!states_.count) throw ParseError(at, "missing 'states:' in preamble");
        if (!actions_.count) throw ParseError(at, "missing 'actions:' in preamble");
        if (!observations_.count) throw ParseError(at, "missing 'observations:' in preamble");
        body_started_ = true;
        model_ = PomdpModel::zeros(states_.size(), actions_.size(), observations_.size(), *discount_);
        model_.labels = {states_.names, actions_.names, observations_.names};
        t_line_.assign(model_.num_actions * model_.num_states, 0);
        o_line_.assign(model_.num_actions * model_.num_states, 0);
        if (pending_start_) model_.start_belief = std::move(pending_start_);
    }

    // Resolves a name, index or '*' against a declaration.
    Pattern resolve(const Declaration& d, const Token& t, const char* what) const {
        if (t.text == "*") return kAny;
        if (auto it = d.lookup.find(t.text); it != d.lookup.end()) return static_cast<Pattern>(it->second);
        if (auto idx = to_index(t.text)) {
            if (*idx < d.size()) return static_cast<Pattern>(*idx);
            throw ParseError(t.line, std::string(what) + " index " + t.text + " out of range");
        }
        throw ParseError(t.line, std::string("undeclared ") + what + " '" + t.text + "'");
    }

    static std::vector<std::size_t> expand(Pattern p, std::size_t n) {
        std::vector<std::size_t> out;
        if (p == kAny) {
            out.resize(n);
            for (std::size_t i = 0; i < n; ++i) out[i] = i;
        } else {
            out.push_back(static_cast<std::size_t>(p));
        }
        return out;
    }

    void start(std::size_t at) {
        if (!states_.count) throw ParseError(at, "'start:' before 'states:'");
        auto toks = rest_of_statement();
        const std::size_t n = states_.size();
        std::vector<double> b(n, 0.0);
        if (toks.empty()) throw ParseError(at, "empty start statement");
        if (toks.size() == 1 && toks[0].text == "uniform") {
            b.assign(n, 1.0 / static_cast<double>(n));
        } else if (toks.size() == n && n > 1) {
            for (std::size_t i = 0; i < n; ++i) {
                auto v = to_number(toks[i].text);
                if (!v) throw ParseError(toks[i].line, "malformed number '" + toks[i].text + "' in start");
                b[i] = *v;
            }
        } else if (toks.size() == 1) {
            Pattern s = resolve(states_, toks[0], "state");
            if (s == kAny) b.assign(n, 1.0 / static_cast<double>(n));
            else b[static_cast<std::size_t>(s)] = 1.0;
        } else {
            throw ParseError(at, "start distribution has " + std::to_string(toks.size()) +
                                     " entries, expected " + std::to_string(n));
        }
        set_start(std::move(b), at);
    }

    void start_subset(bool include, std::size_t at) {
        if (!states_.count) throw ParseError(at, "'start:' before 'states:'");
        auto toks = rest_of_statement();
        if (toks.empty()) throw ParseError(at, "empty start subset");
        const std::size_t n = states_.size();
        std::vector<char> listed(n, 0);
        for (const auto& t : toks) {
            for (auto s : expand(resolve(states_, t, "state"), n)) listed[s] = 1;
        }
        std::vector<double> b(n, 0.0);
        std::size_t count = 0;
        for (std::size_t s = 0; s < n; ++s) count += (listed[s] != 0) == include;
        if (count == 0) throw ParseError(at, "start subset leaves no states");
        for (std::size_t s = 0; s < n; ++s) {
            if ((listed[s] != 0) == include) b[s] = 1.0 / static_cast<double>(count);
        }
        set_start(std::move(b), at);
    }

    void set_start(std::vector<double> b, std::size_t at) {
        double sum = 0.0;
        for (double p : b) {
            if (p < 0.0) throw ParseError(at, "negative start probability");
            sum += p;
        }
        if (std::abs(sum - 1.0) > kRenormalizeTolerance) {
            throw ParseError(at, "start distribution sums to " + fmt_double(sum));
        }
        for (double& p : b) p /= sum;
        if (body_started_) model_.start_belief = std::move(b);
        else pending_start_ = std::move(b);
    }

    // Reads `T: a [: s [: s']]` or `O: a [: s' [: o]]` prefixes; returns the
    // number of resolved slots after the action.
    template <std::size_t N>
    std::size_t slots(std::array<Pattern, N>& out, const std::array<const Declaration*, N>& decls,
                      const std::array<const char*, N>& names, std::size_t min_slots) {
        std::size_t n = 0;
        out[n] = resolve(*decls[n], next(names[n]), names[n]);
        ++n;
        while (n < N && peek().text == ":") {
            ++pos_;
            out[n] = resolve(*decls[n], next(names[n]), names[n]);
            ++n;
        }
        if (n < min_slots) throw ParseError(line(), "incomplete statement prefix");
        return n;
    }

    // Reads either one of the accepted keywords or exactly `count` numbers.
    std::variant<std::string, std::vector<double>> block(std::size_t count,
                                                         std::initializer_list<const char*> keywords) {
        if (!at_end()) {
            for (const char* k : keywords) {
                if (peek().text == k) return next(k).text;
            }
        }
        std::vector<double> v(count);
        for (auto& x : v) x = number("matrix entry");
        return v;
    }

    void check_probability(double p, std::size_t at) const {
        if (!(p >= 0.0) || p > 1.0 + kRenormalizeTolerance) {
            throw ParseError(at, "probability " + fmt_double(p) + " outside [0,1]");
        }
    }

    void after_data(const char* what) {
        if (!statement_starts_here()) {
            throw ParseError(line(), std::string("unexpected token '") + peek().text + "' after " + what);
        }
    }

    void transition_statement(std::size_t at) {
        const std::size_t S = model_.num_states;
        std::array<Pattern, 3> p{};
        const std::size_t n = slots<3>(p, {&actions_, &states_, &states_}, {"action", "state", "state"}, 1);
        const auto actions = expand(p[0], model_.num_actions);
        if (n == 3) {
            const double v = number("probability");
            check_probability(v, at);
            for (auto a : actions)
                for (auto s : expand(p[1], S)) {
                    for (auto sp : expand(p[2], S)) model_.T(a, s, sp) = v;
                    t_line_[a * S + s] = at;
                }
        } else if (n == 2) {
            auto data = block(S, {"uniform"});
            if (auto* v = std::get_if<std::vector<double>>(&data)) {
                for (double x : *v) check_probability(x, at);
            }
            for (auto a : actions)
                for (auto s : expand(p[1], S)) {
                    for (std::size_t sp = 0; sp < S; ++sp) {
                        model_.T(a, s, sp) = std::holds_alternative<std::string>(data)
                                                 ? 1.0 / static_cast<double>(S)
                                                 : std::get<std::vector<double>>(data)[sp];
                    }
                    t_line_[a * S + s] = at;
                }
        } else {
            auto data = block(S * S, {"uniform", "identity"});
            if (auto* v = std::get_if<std::vector<double>>(&data)) {
                for (double x : *v) check_probability(x, at);
            }
            for (auto a : actions)
                for (std::size_t s = 0; s < S; ++s) {
                    for (std::size_t sp = 0; sp < S; ++sp) {
                        double x;
                        if (auto* kw = std::get_if<std::string>(&data)) {
                            x = *kw == "uniform" ? 1.0 / static_cast<double>(S) : (s == sp ? 1.0 : 0.0);
                        } else {
                            x = std::get<std::vector<double>>(data)[s * S + sp];
                        }
                        model_.T(a, s, sp) = x;
                    }
                    t_line_[a * S + s] = at;
                }
        }
        after_data("T statement");
    }

    void observation_statement(std::size_t at) {
        const std::size_t S = model_.num_states, O = model_.num_observations;
        std::array<Pattern, 3> p{};
        const std::size_t n =
            slots<3>(p, {&actions_, &states_, &observations_}, {"action", "state", "observation"}, 1);
        const auto actions = expand(p[0], model_.num_actions);
        if (n == 3) {
            const double v = number("probability");
            check_probability(v, at);
            for (auto a : actions)
                for (auto sp : expand(p[1], S)) {
                    for (auto o : expand(p[2], O)) model_.Z(a, sp, o) = v;
                    o_line_[a * S + sp] = at;
                }
        } else if (n == 2) {
            auto data = block(O, {"uniform"});
            if (auto* v = std::get_if<std::vector<double>>(&data)) {
                for (double x : *v) check_probability(x, at);
            }
            for (auto a : actions)
                for (auto sp : expand(p[1], S)) {
                    for (std::size_t o = 0; o < O; ++o) {
                        model_.Z(a, sp, o) = std::holds_alternative<std::string>(data)
                                                 ? 1.0 / static_cast<double>(O)
                                                 : std::get<std::vector<double>>(data)[o];
                    }
                    o_line_[a * S + sp] = at;
                }
        } else {
            auto data = block(S * O, {"uniform"});
            if (auto* v = std::get_if<std::vector<double>>(&data)) {
                for (double x : *v) check_probability(x, at);
            }
            for (auto a : actions)
                for (std::size_t sp = 0; sp < S; ++sp) {
                    for (std::size_t o = 0; o < O; ++o) {
                        model_.Z(a, sp, o) = std::holds_alternative<std::string>(data)
                                                 ? 1.0 / static_cast<double>(O)
                                                 : std::get<std::vector<double>>(data)[sp * O + o];
                    }
                    o_line_[a * S + sp] = at;
                }
        }
        after_data("O statement");
    }

    void reward_statement(std::size_t at) {
        const std::size_t S = model_.num_states, O = model_.num_observations;
        std::array<Pattern, 4> p{kAny, kAny, kAny, kAny};
        const std::size_t n = slots<4>(p, {&actions_, &states_, &states_, &observations_},
                                       {"action", "state", "state", "observation"}, 2);
        RewardStatement st{RewardStatement::Form::Scalar, p[0], p[1], kAny, kAny, {}, at};
        if (n == 4) {
            st.next = p[2];
            st.obs = p[3];
            st.values = {number("reward")};
        } else if (n == 3) {
            st.form = RewardStatement::Form::Row;
            st.next = p[2];
            st.values.resize(O);
            for (auto& x : st.values) x = number("reward");
        } else {
            st.form = RewardStatement::Form::Matrix;
            st.values.resize(S * O);
            for (auto& x : st.values) x = number("reward");
        }
        for (double x : st.values) {
            if (!std::isfinite(x)) throw ParseError(at, "non-finite reward");
        }
        rewards_.push_back(std::move(st));
        after_data("R statement");
    }

    // ---- post-processing ---------------------------------------------------

    static void fix_row(std::span<double> row, const std::string& what, std::size_t at) {
        double sum = 0.0;
        for (double x : row) sum += x;
        if (std::abs(sum - 1.0) > kRenormalizeTolerance) {
            throw ParseError(at, what + " sums to " + fmt_double(sum));
        }
        if (sum != 1.0) {
            for (double& x : row) x /= sum;
        }
    }

    void finish_rows() {
        const std::size_t S = model_.num_states, O = model_.num_observations;
        for (std::size_t a = 0; a < model_.num_actions; ++a) {
            for (std::size_t s = 0; s < S; ++s) {
                const std::size_t at = t_line_[a * S + s];
                std::span<double> row(model_.transition.data() + (a * S + s) * S, S);
                fix_row(row, "T row (a=" + std::to_string(a) + ", s=" + std::to_string(s) + ")",
                        at ? at : last_line());
                const std::size_t ot = o_line_[a * S + s];
                std::span<double> orow(model_.observation.data() + (a * S + s) * O, O);
                fix_row(orow, "O row (a=" + std::to_string(a) + ", s'=" + std::to_string(s) + ")",
                        ot ? ot : last_line());
            }
        }
    }

    static double reward_value(const RewardStatement& st, std::size_t next, std::size_t obs,
                               std::size_t O) {
        switch (st.form) {
        case RewardStatement::Form::Scalar: return st.values[0];
        case RewardStatement::Form::Row: return st.values[obs];
        case RewardStatement::Form::Matrix: return st.values[next * O + obs];
        }
        return 0.0;
    }

    static bool covers_all(const RewardStatement& st) {
        return st.form == RewardStatement::Form::Matrix ||
               (st.next == kAny && (st.form == RewardStatement::Form::Row || st.obs == kAny));
    }

    // r(s,a) = sum_{s'} T(s'|s,a) sum_o O(o|s',a) R(s,a,s',o), where R(s,a,s',o)
    // is taken from the last statement covering that entry.
    void reduce_rewards() {
        const std::size_t S = model_.num_states, A = model_.num_actions, O = model_.num_observations;
        std::vector<char> covered;
        for (std::size_t a = 0; a < A; ++a) {
            for (std::size_t s = 0; s < S; ++s) {
                double total = 0.0;
                bool tracking = false;
                for (auto it = rewards_.rbegin(); it != rewards_.rend(); ++it) {
                    const auto& st = *it;
                    if ((st.action != kAny && static_cast<std::size_t>(st.action) != a) ||
                        (st.state != kAny && static_cast<std::size_t>(st.state) != s)) {
                        continue;
                    }
                    const bool full = covers_all(st);
                    if (full && !tracking) {
                        for (std::size_t sp = 0; sp < S; ++sp) {
                            const double t = model_.T(a, s, sp);
                            if (t == 0.0) continue;
                            for (std::size_t o = 0; o < O; ++o) {
                                total += t * model_.Z(a, sp, o) * reward_value(st, sp, o, O);
                            }
                        }
                        break;
                    }
                    if (!tracking) {
                        covered.assign(S * O, 0);
                        tracking = true;
                    }
                    for (std::size_t sp = 0; sp < S; ++sp) {
                        if (st.next != kAny && static_cast<std::size_t>(st.next) != sp) continue;
                        const double t = model_.T(a, s, sp);
                        for (std::size_t o = 0; o < O; ++o) {
                            if (st.form == RewardStatement::Form::Scalar && st.obs != kAny &&
                                static_cast<std::size_t>(st.obs) != o) {
                                continue;
                            }
                            char& c = covered[sp * O + o];
                            if (c) continue;
                            c = 1;
                            total += t * model_.Z(a, sp, o) * reward_value(st, sp, o, O);
                        }
                    }
                    if (full) break;
                }
                model_.R(s, a) = total;
            }
        }
    }

    std::vector<Token> tokens_;
    std::size_t pos_ = 0;

    std::optional<double> discount_;
    bool have_values_ = false;
    bool values_cost_ = false;
    Declaration states_, actions_, observations_;
    std::optional<std::vector<double>> pending_start_;
    bool body_started_ = false;

    PomdpModel model_;
    std::vector<std::size_t> t_line_, o_line_;
    std::vector<RewardStatement> rewards_;
};

inline bool plain_name(const std::string& s) {
    if (s.empty() || s == "*" || to_index(s) || to_number(s)) return false;
    for (char c : s) {
        if (c == ':' || c == '#' || std::isspace(static_cast<unsigned char>(c))) return false;
    }
    return s != "uniform" && s != "identity" && s != "reward" && s != "cost" &&
           s != "include" && s != "exclude" && !(s.size() == 1 && (s == "T" || s == "O" || s == "R"));
}

inline std::string declaration_line(const char* key, const std::vector<std::string>& names,
                                    std::size_t count) {
    std::string out = std::string(key) + ":";
    bool use_names = names.size() == count;
    for (const auto& n : names) use_names = use_names && plain_name(n);
    if (use_names) {
        for (const auto& n : names) out += " " + n;
    } else {
        out += " " + std::to_string(count);
    }
    return out + "\n";
}

} // namespace detail

/// Parses `.pomdp` text. Throws ParseError (with a line number) on any defect.
inline PomdpModel parse_pomdp(std::string_view text) { return detail::PomdpReader(text).read(); }

/// Writes an explicit-matrix document that parse_pomdp reads back entrywise.
inline std::string serialize_pomdp(const PomdpModel& m) {
    using detail::format_number;
    const std::size_t S = m.num_states, A = m.num_actions, O = m.num_observations;
    std::string out;
    out += "discount: " + format_number(m.discount) + "\n";
    out += "values: reward\n";
    out += detail::declaration_line("states", m.labels.states, S);
    out += detail::declaration_line("actions", m.labels.actions, A);
    out += detail::declaration_line("observations", m.labels.observations, O);
    if (m.start_belief && S == 1) {
        out += "start: uniform\n"; // a lone number would read as a state index
    } else if (m.start_belief) {
        out += "start:";
        for (double p : *m.start_belief) out += " " + format_number(p);
        out += "\n";
    }
    out += "\n";
    for (std::size_t a = 0; a < A; ++a) {
        out += "T: " + std::to_string(a) + "\n";
        for (std::size_t s = 0; s < S; ++s) {
            auto row = m.transition_row(a, s);
            for (std::size_t sp = 0; sp < S; ++sp) out += (sp ? " " : "") + format_number(row[sp]);
            out += "\n";
        }
        out += "\n";
    }
    for (std::size_t a = 0; a < A; ++a) {
        out += "O: " + std::to_string(a) + "\n";
        for (std::size_t sp = 0; sp < S; ++sp) {
            auto row = m.observation_row(a, sp);
            for (std::size_t o = 0; o < O; ++o) out += (o ? " " : "") + format_number(row[o]);
            out += "\n";
        }
        out += "\n";
    }
    for (std::size_t a = 0; a < A; ++a) {
        for (std::size_t s = 0; s < S; ++s) {
            out += "R: " + std::to_string(a) + " : " + std::to_string(s) + " : * : * " +
                   format_number(m.R(s, a)) + "\n";
        }
    }
    return out;
}

} // namespace aafib
