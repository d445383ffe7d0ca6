#pragma once

// Built-in problems: the classic Tiger instance and a seeded grid-navigation
// generator.

#include "aafib/model.hpp"
#include "aafib/parser.hpp"

#include <array>
#include <cstdint>
#include <queue>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace aafib {

inline constexpr const char* kTigerPomdp = R"(# Tiger problem (Kaelbling, Littman & Cassandra).
discount: 0.95
values: reward
states: tiger-left tiger-right
actions: listen open-left open-right
observations: tiger-left tiger-right
start: uniform

T: listen
identity

T: open-left
uniform

T: open-right
uniform

O: listen
0.85 0.15
0.15 0.85

O: open-left
uniform

O: open-right
uniform

R: listen : * : * : * -1

R: open-left : tiger-left : * : * -100
R: open-left : tiger-right : * : * 10

R: open-right : tiger-left : * : * 10
R: open-right : tiger-right : * : * -100
)";

inline PomdpModel tiger() { return parse_pomdp(kTigerPomdp); }

struct GridNavSpec {
    std::size_t width = 5;
    std::size_t height = 5;
    double slip_prob = 0.1;
    double obs_noise = 0.1;
    std::uint64_t seed = 0;
    double discount = 0.95;
};

/**
 * Grid navigation with a declare action.
 *
 * The robot starts in the top-left cell and must declare itself at the
 * bottom-right goal cell. Grids of at least 3x3 get seeded interior obstacles
 * (about 15% of cells) that never disconnect the free cells. Move actions
 * north/east/south/west succeed with probability 1 - slip_prob and otherwise
 * leave the robot in place; bumping into a wall also leaves it in place.
 *
 * Observations are the 4-bit wall mask around the arrival cell, each bit
 * flipped independently with probability obs_noise (16 symbols), plus one
 * extra symbol emitted only in the absorbing terminal state.
 *
 * Declaring ends the episode: +1 at the goal, -1 elsewhere, then a
 * zero-reward absorbing state. All other rewards are 0.
 *
 * States: free cells in row-major order, followed by the terminal state.
 */
inline PomdpModel generate_grid_nav(const GridNavSpec& spec) {
    const std::size_t W = spec.width, H = spec.height;
    if (W < 2 || H < 2) throw std::invalid_argument("grid_nav: width and height must be >= 2");
    if (!(spec.slip_prob >= 0.0 && spec.slip_prob < 1.0)) {
        throw std::invalid_argument("grid_nav: slip_prob must lie in [0,1)");
    }
    if (!(spec.obs_noise >= 0.0 && spec.obs_noise < 1.0)) {
        throw std::invalid_argument("grid_nav: obs_noise must lie in [0,1)");
    }
    if (!(spec.discount > 0.0 && spec.discount < 1.0)) {
        throw std::invalid_argument("grid_nav: discount must lie in (0,1)");
    }

    const std::size_t cells = W * H;
    const std::size_t start_cell = 0, goal_cell = cells - 1;
    std::vector<char> blocked(cells, 0);

    const auto connected = [&]() {
        std::vector<char> seen(cells, 0);
        std::queue<std::size_t> q;
        q.push(start_cell);
        seen[start_cell] = 1;
        std::size_t reached = 1;
        while (!q.empty()) {
            const std::size_t c = q.front();
            q.pop();
            const std::size_t x = c % W, y = c / W;
            const std::array<std::pair<long, long>, 4> d{{{0, -1}, {1, 0}, {0, 1}, {-1, 0}}};
            for (auto [dx, dy] : d) {
                const long nx = static_cast<long>(x) + dx, ny = static_cast<long>(y) + dy;
                if (nx < 0 || ny < 0 || nx >= static_cast<long>(W) || ny >= static_cast<long>(H)) continue;
                const std::size_t n = static_cast<std::size_t>(ny) * W + static_cast<std::size_t>(nx);
                if (blocked[n] || seen[n]) continue;
                seen[n] = 1;
                ++reached;
                q.push(n);
            }
        }
        std::size_t free_cells = 0;
        for (char b : blocked) free_cells += !b;
        return reached == free_cells;
    };

    if (W >= 3 && H >= 3) {
        std::mt19937_64 rng(spec.seed);
        std::vector<std::size_t> order;
        for (std::size_t c = 0; c < cells; ++c) {
            if (c != start_cell && c != goal_cell) order.push_back(c);
        }
        std::shuffle(order.begin(), order.end(), rng);
        const std::size_t target = cells * 15 / 100;
        std::size_t placed = 0;
        for (std::size_t c : order) {
            if (placed == target) break;
            blocked[c] = 1;
            if (connected()) ++placed;
            else blocked[c] = 0;
        }
    }

    std::vector<long> state_of(cells, -1);
    std::vector<std::size_t> cell_of;
    for (std::size_t c = 0; c < cells; ++c) {
        if (!blocked[c]) {
            state_of[c] = static_cast<long>(cell_of.size());
            cell_of.push_back(c);
        }
    }
    const std::size_t num_cells = cell_of.size();
    const std::size_t terminal = num_cells;
    const std::size_t S = num_cells + 1;
    constexpr std::size_t A = 5;  // north, east, south, west, declare
    constexpr std::size_t kDeclare = 4;
    constexpr std::size_t O = 17; // 16 wall masks + terminal
    constexpr std::size_t kTerminalObs = 16;

    auto m = PomdpModel::zeros(S, A, O, spec.discount);

    const std::array<std::pair<long, long>, 4> dirs{{{0, -1}, {1, 0}, {0, 1}, {-1, 0}}};
    const auto neighbour = [&](std::size_t cell, std::size_t dir) -> long {
        const long nx = static_cast<long>(cell % W) + dirs[dir].first;
        const long ny = static_cast<long>(cell / W) + dirs[dir].second;
        if (nx < 0 || ny < 0 || nx >= static_cast<long>(W) || ny >= static_cast<long>(H)) return -1;
        const std::size_t n = static_cast<std::size_t>(ny) * W + static_cast<std::size_t>(nx);
        return blocked[n] ? -1 : state_of[n];
    };

    for (std::size_t s = 0; s < num_cells; ++s) {
        for (std::size_t dir = 0; dir < 4; ++dir) {
            const long n = neighbour(cell_of[s], dir);
            if (n < 0) {
                m.T(dir, s, s) = 1.0;
            } else {
                m.T(dir, s, static_cast<std::size_t>(n)) += 1.0 - spec.slip_prob;
                m.T(dir, s, s) += spec.slip_prob;
            }
        }
        m.T(kDeclare, s, terminal) = 1.0;
        m.R(s, kDeclare) = cell_of[s] == goal_cell ? 1.0 : -1.0;
    }
    for (std::size_t a = 0; a < A; ++a) m.T(a, terminal, terminal) = 1.0;

    for (std::size_t s = 0; s < num_cells; ++s) {
        unsigned mask = 0;
        for (std::size_t dir = 0; dir < 4; ++dir) {
            if (neighbour(cell_of[s], dir) < 0) mask |= 1u << dir;
        }
        for (unsigned o = 0; o < 16; ++o) {
            double p = 1.0;
            for (unsigned bit = 0; bit < 4; ++bit) {
                const bool same = ((o >> bit) & 1u) == ((mask >> bit) & 1u);
                p *= same ? 1.0 - spec.obs_noise : spec.obs_noise;
            }
            for (std::size_t a = 0; a < A; ++a) m.Z(a, s, o) = p;
        }
    }
    for (std::size_t a = 0; a < A; ++a) m.Z(a, terminal, kTerminalObs) = 1.0;

    m.start_belief = std::vector<double>(S, 0.0);
    (*m.start_belief)[static_cast<std::size_t>(state_of[start_cell])] = 1.0;

    for (std::size_t s = 0; s < num_cells; ++s) {
        m.labels.states.push_back("c" + std::to_string(cell_of[s] % W) + "_" +
                                  std::to_string(cell_of[s] / W));
    }
    m.labels.states.push_back("done");
    m.labels.actions = {"north", "east", "south", "west", "declare"};
    for (unsigned o = 0; o < 16; ++o) m.labels.observations.push_back("w" + std::to_string(o));
    m.labels.observations.push_back("end");
    return m;
}

inline PomdpModel generate_grid_nav(std::size_t width, std::size_t height, double slip_prob,
                                    double obs_noise, std::uint64_t seed, double discount = 0.95) {
    return generate_grid_nav(GridNavSpec{width, height, slip_prob, obs_noise, seed, discount});
}

} // namespace aafib
