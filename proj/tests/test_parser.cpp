#include "aafib/parser.hpp"
#include "aafib/problems.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <sstream>

using namespace aafib;

namespace {

void expect_same_arrays(const PomdpModel& a, const PomdpModel& b, double tol = 1e-9) {
    ASSERT_EQ(a.num_states, b.num_states);
    ASSERT_EQ(a.num_actions, b.num_actions);
    ASSERT_EQ(a.num_observations, b.num_observations);
    EXPECT_NEAR(a.discount, b.discount, tol);
    for (std::size_t i = 0; i < a.transition.size(); ++i) EXPECT_NEAR(a.transition[i], b.transition[i], tol);
    for (std::size_t i = 0; i < a.observation.size(); ++i) EXPECT_NEAR(a.observation[i], b.observation[i], tol);
    for (std::size_t i = 0; i < a.reward.size(); ++i) EXPECT_NEAR(a.reward[i], b.reward[i], tol);
    ASSERT_EQ(a.start_belief.has_value(), b.start_belief.has_value());
    if (a.start_belief) {
        for (std::size_t i = 0; i < a.start_belief->size(); ++i) {
            EXPECT_NEAR((*a.start_belief)[i], (*b.start_belief)[i], tol);
        }
    }
}

std::size_t error_line(std::string_view text) {
    try {
        parse_pomdp(text);
    } catch (const ParseError& e) {
        return e.line();
    }
    ADD_FAILURE() << "no error for:\n" << text;
    return 0;
}

std::string error_message(std::string_view text) {
    try {
        parse_pomdp(text);
    } catch (const ParseError& e) {
        return e.what();
    }
    ADD_FAILURE() << "no error for:\n" << text;
    return {};
}

constexpr const char* kHeader3 = "discount: 0.9\nvalues: reward\nstates: 3\nactions: 2\nobservations: 2\n";

} // namespace

TEST(Parse, TigerFixture) {
    const auto m = tiger();
    EXPECT_EQ(m.num_states, 2u);
    EXPECT_EQ(m.num_actions, 3u);
    EXPECT_EQ(m.num_observations, 2u);
    EXPECT_DOUBLE_EQ(m.discount, 0.95);
    // listen
    EXPECT_DOUBLE_EQ(m.R(0, 0), -1.0);
    EXPECT_DOUBLE_EQ(m.R(1, 0), -1.0);
    EXPECT_DOUBLE_EQ(m.R(0, 1), -100.0);
    EXPECT_DOUBLE_EQ(m.R(1, 1), 10.0);
    EXPECT_DOUBLE_EQ(m.R(0, 2), 10.0);
    EXPECT_DOUBLE_EQ(m.R(1, 2), -100.0);
    EXPECT_DOUBLE_EQ(m.T(0, 0, 0), 1.0);
    EXPECT_DOUBLE_EQ(m.T(0, 0, 1), 0.0);
    EXPECT_DOUBLE_EQ(m.T(1, 1, 0), 0.5);
    EXPECT_DOUBLE_EQ(m.Z(0, 0, 0), 0.85);
    EXPECT_DOUBLE_EQ(m.Z(0, 1, 0), 0.15);
    EXPECT_DOUBLE_EQ(m.Z(2, 1, 1), 0.5);
    ASSERT_TRUE(m.start_belief);
    EXPECT_DOUBLE_EQ((*m.start_belief)[0], 0.5);
    EXPECT_EQ(m.labels.states[1], "tiger-right");
    EXPECT_EQ(m.labels.actions[0], "listen");
}

TEST(Parse, DataFileMatchesBuiltin) {
    std::ifstream in(AAFIB_DATA_DIR "/tiger.pomdp");
    ASSERT_TRUE(in) << "missing data/tiger.pomdp";
    std::stringstream ss;
    ss << in.rdbuf();
    expect_same_arrays(parse_pomdp(ss.str()), tiger(), 0.0);
}

TEST(Parse, UniformMatrixKeyword) {
    const auto m = parse_pomdp(std::string(kHeader3) + "T: 0 uniform\nT: 1 identity\nO: * uniform\n");
    for (std::size_t s = 0; s < 3; ++s) {
        for (std::size_t sp = 0; sp < 3; ++sp) {
            EXPECT_DOUBLE_EQ(m.T(0, s, sp), 1.0 / 3.0);
            EXPECT_DOUBLE_EQ(m.T(1, s, sp), s == sp ? 1.0 : 0.0);
        }
    }
}

TEST(Parse, MissingDiscountNamesKey) {
    const auto msg = error_message("values: reward\nstates: 2\nactions: 1\nobservations: 1\nT: * identity\nO: * uniform\n");
    EXPECT_NE(msg.find("discount"), std::string::npos) << msg;
}

TEST(Parse, ScalarRowAndWildcardForms) {
    const auto m = parse_pomdp(std::string(kHeader3) +
                               "T: * uniform\n"
                               "T: 0 : 1\n0.2 0.3 0.5\n"
                               "T: 1 : 2 : 0 1.0\nT: 1 : 2 : 1 0\nT: 1 : 2 : 2 0\n"
                               "O: * : * : 0 0.5\nO: * : * : 1 0.5\n"
                               "O: 1 : 2\n1 0\n");
    EXPECT_DOUBLE_EQ(m.T(0, 1, 2), 0.5);
    EXPECT_DOUBLE_EQ(m.T(0, 0, 2), 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(m.T(1, 2, 0), 1.0);
    EXPECT_DOUBLE_EQ(m.Z(0, 2, 1), 0.5);
    EXPECT_DOUBLE_EQ(m.Z(1, 2, 0), 1.0);
}

TEST(Parse, LastWriterWins) {
    const auto m = parse_pomdp(std::string(kHeader3) +
                               "T: * identity\nT: 0 uniform\nO: * uniform\n"
                               "R: * : * : * : * 1\nR: 0 : 1 : * : * 5\n");
    EXPECT_DOUBLE_EQ(m.T(0, 2, 1), 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(m.T(1, 2, 2), 1.0);
    EXPECT_DOUBLE_EQ(m.R(1, 0), 5.0);
    EXPECT_DOUBLE_EQ(m.R(0, 0), 1.0);
    EXPECT_DOUBLE_EQ(m.R(2, 1), 1.0);
}

TEST(Parse, RewardReducedByExpectation) {
    // r(s,a) = sum_{s'} T(s'|s,a) sum_o O(o|s',a) R(s,a,s',o), computed by hand.
    const auto m = parse_pomdp(std::string(kHeader3) +
                               "T: * : * \n0.5 0.25 0.25\n"
                               "O: * : 0\n0.8 0.2\nO: * : 1\n0.1 0.9\nO: * : 2\n0.5 0.5\n"
                               "R: 0 : * : 0 : 0 10\n"
                               "R: 0 : * : 1 : * 4\n"
                               "R: 0 : 2 : 2\n-2 6\n");
    // s = 0,1 for action 0: 0.5*0.8*10 + 0.25*4 = 5
    EXPECT_NEAR(m.R(0, 0), 5.0, 1e-12);
    EXPECT_NEAR(m.R(1, 0), 5.0, 1e-12);
    // s = 2 additionally has 0.25*(0.5*-2 + 0.5*6) = 0.5
    EXPECT_NEAR(m.R(2, 0), 5.5, 1e-12);
    EXPECT_EQ(m.R(0, 1), 0.0);
}

TEST(Parse, RewardMatrixFormAndOverride) {
    const auto m = parse_pomdp(std::string(kHeader3) +
                               "T: * uniform\nO: * uniform\n"
                               "R: 1 : 0\n1 1\n1 1\n1 1\n"
                               "R: 1 : 0 : 2 : 1 7\n");
    // one of six equally likely (s',o) cells is 7, the rest 1
    EXPECT_NEAR(m.R(0, 1), 2.0, 1e-12);
}

TEST(Parse, CostNegates) {
    const std::string body = "states: 2\nactions: a b\nobservations: 1\nT: * identity\nO: * uniform\n"
                             "R: a : * : * : * 3\nR: b : 1 : * : * -2\n";
    const auto r = parse_pomdp("discount: 0.5\nvalues: reward\n" + body);
    const auto c = parse_pomdp("discount: 0.5\nvalues: cost\n" + body);
    for (std::size_t i = 0; i < r.reward.size(); ++i) EXPECT_EQ(c.reward[i], -r.reward[i]);
}

TEST(Parse, StartForms) {
    const std::string pre = "discount: 0.5\nvalues: reward\nstates: x y z\nactions: 1\nobservations: 1\n";
    const std::string body = "T: * identity\nO: * uniform\n";
    EXPECT_EQ(*parse_pomdp(pre + "start: y\n" + body).start_belief, (std::vector<double>{0, 1, 0}));
    EXPECT_EQ(*parse_pomdp(pre + "start: 0.2 0.3 0.5\n" + body).start_belief,
              (std::vector<double>{0.2, 0.3, 0.5}));
    EXPECT_EQ(*parse_pomdp(pre + "start exclude: x\n" + body).start_belief,
              (std::vector<double>{0, 0.5, 0.5}));
    EXPECT_EQ(*parse_pomdp(pre + "start include: z\n" + body).start_belief,
              (std::vector<double>{0, 0, 1}));
    EXPECT_FALSE(parse_pomdp(pre + body).start_belief);
}

TEST(Parse, CommentsAndWhitespace) {
    const auto m = parse_pomdp("# header\n  discount:0.9   # inline\nvalues:reward\nstates:2\n"
                               "actions: 1\nobservations: 1\n\n\nT:0\n1 0\n   0 1 # eye\nO:0 uniform\n");
    EXPECT_EQ(m.T(0, 1, 1), 1.0);
}

TEST(Parse, RenormalizesSmallDeviations) {
    const auto m = parse_pomdp("discount: 0.9\nvalues: reward\nstates: 2\nactions: 1\nobservations: 1\n"
                               "T: 0\n0.3333333 0.6666667\n0.5 0.5\nO: 0 uniform\n");
    EXPECT_NEAR(m.T(0, 0, 0) + m.T(0, 0, 1), 1.0, 1e-15);
}

TEST(Parse, ErrorsCarryLineNumbers) {
    const std::string pre = "discount: 0.9\nvalues: reward\nstates: 2\nactions: 1\nobservations: 1\n";
    EXPECT_EQ(error_line(pre + "T: 0\n0.5 0.4\n0.5 0.5\nO: 0 uniform\n"), 6u);
    EXPECT_EQ(error_line(pre + "T: 0 identity\nO: 0 uniform\nQ: 1\n"), 8u);
    EXPECT_EQ(error_line(pre + "T: 0 : s9 : 0 1\n"), 6u);
    EXPECT_EQ(error_line(pre + "T: 0 identity\nO: 0 uniform\nR: 0 : 5 : * : * 1\n"), 8u);
    EXPECT_EQ(error_line(pre + "T: 0 identity\nO: 0 : 0 : 0 abc\n"), 7u);
    EXPECT_EQ(error_line("values: reward\ndiscount: 1.0\n"), 2u);
    EXPECT_NE(error_message(pre + "T: 0 : s9 : 0 1\n").find("undeclared state 's9'"), std::string::npos);
}

TEST(Parse, RejectsTrailingGarbage) {
    const std::string pre = "discount: 0.9\nvalues: reward\nstates: 2\nactions: 1\nobservations: 1\n";
    EXPECT_THROW(parse_pomdp(pre + "T: 0 identity extra\nO: 0 uniform\n"), ParseError);
    EXPECT_THROW(parse_pomdp(pre + "T: 0 identity\nO: 0 uniform\n1 2 3\n"), ParseError);
}

TEST(Serialize, TigerRoundTrip) {
    const auto m = tiger();
    const auto back = parse_pomdp(serialize_pomdp(m));
    expect_same_arrays(m, back);
    EXPECT_EQ(back.labels.states, m.labels.states);
}

TEST(Serialize, UniformRowsRoundTrip) {
    auto m = PomdpModel::zeros(3, 2, 3, 0.7);
    for (double& x : m.transition) x = 1.0 / 3.0;
    for (double& x : m.observation) x = 1.0 / 3.0;
    expect_same_arrays(m, parse_pomdp(serialize_pomdp(m)));
}

TEST(Serialize, OneStateModel) {
    const auto m = fixtures::one_state();
    const auto back = parse_pomdp(serialize_pomdp(m));
    EXPECT_EQ(back.num_states, 1u);
    expect_same_arrays(m, back);
}

TEST(Serialize, RandomModelsRoundTrip) {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 50; ++i) {
        const auto m = fixtures::random_model(fixtures::random_dim(rng, 1, 6), fixtures::random_dim(rng, 1, 4),
                                             fixtures::random_dim(rng, 1, 5), rng);
        const auto once = parse_pomdp(serialize_pomdp(m));
        expect_same_arrays(m, once);
        expect_same_arrays(once, parse_pomdp(serialize_pomdp(once)), 1e-12);
    }
}

TEST(Serialize, GridNavRoundTrip) {
    const auto m = generate_grid_nav(4, 3, 0.2, 0.05, 3);
    expect_same_arrays(m, parse_pomdp(serialize_pomdp(m)));
}

TEST(GridNav, SmallestNoiseless) {
    const auto m = generate_grid_nav(2, 2, 0.0, 0.0, 1);
    EXPECT_EQ(m.num_states, 5u); // 4 cells + terminal
    EXPECT_TRUE(validate(m).ok());
}

TEST(GridNav, DeterministicForSeed) {
    const auto a = generate_grid_nav(6, 5, 0.1, 0.1, 42);
    const auto b = generate_grid_nav(6, 5, 0.1, 0.1, 42);
    EXPECT_EQ(a.transition, b.transition);
    EXPECT_EQ(a.observation, b.observation);
    EXPECT_EQ(a.reward, b.reward);
}

TEST(GridNav, RowsSumToOne) {
    const auto m = generate_grid_nav(5, 5, 0.1, 0.1, 7);
    for (std::size_t a = 0; a < m.num_actions; ++a) {
        for (std::size_t s = 0; s < m.num_states; ++s) {
            double t = 0.0, o = 0.0;
            for (double x : m.transition_row(a, s)) t += x;
            for (double x : m.observation_row(a, s)) o += x;
            EXPECT_NEAR(t, 1.0, 1e-9);
            EXPECT_NEAR(o, 1.0, 1e-9);
        }
    }
    EXPECT_TRUE(validate(m).ok());
}

TEST(GridNav, RewardConvention) {
    const auto m = generate_grid_nav(5, 5, 0.1, 0.1, 7);
    const std::size_t terminal = m.num_states - 1, goal = m.num_states - 2;
    EXPECT_EQ(m.R(goal, 4), 1.0);
    EXPECT_EQ(m.R(0, 4), -1.0);
    EXPECT_EQ(m.R(terminal, 4), 0.0);
    for (std::size_t s = 0; s < m.num_states; ++s)
        for (std::size_t a = 0; a < 4; ++a) EXPECT_EQ(m.R(s, a), 0.0);
}

TEST(GridNav, RejectsBadParameters) {
    EXPECT_THROW(generate_grid_nav(1, 3, 0.1, 0.1, 0), std::invalid_argument);
    EXPECT_THROW(generate_grid_nav(3, 3, 1.0, 0.1, 0), std::invalid_argument);
    EXPECT_THROW(generate_grid_nav(3, 3, 0.1, -0.1, 0), std::invalid_argument);
}
