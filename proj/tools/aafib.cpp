// aafib: solve, evaluate, benchmark and generate POMDP problems from the shell.

#include "aafib/anderson.hpp"
#include "aafib/fib.hpp"
#include "aafib/parser.hpp"
#include "aafib/policy.hpp"
#include "aafib/problems.hpp"
#include "aafib/sim.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace aafib;

namespace {

struct CliError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string fmt(double x) {
    if (std::isnan(x)) return "";
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, end);
}

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string model_hash(const PomdpModel& m) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(serialize_pomdp(m))));
    return buf;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(item);
    return out;
}

double parse_double(const std::string& s, const std::string& what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    throw CliError("bad " + what + ": '" + s + "'");
}

// tiger | grid_nav:W,H,slip,noise,seed[,discount] | path to a .pomdp file
PomdpModel load_problem(const std::string& spec) {
    if (spec == "tiger") return tiger();
    if (spec.rfind("grid_nav:", 0) == 0) {
        const auto parts = split(spec.substr(9), ',');
        if (parts.size() != 5 && parts.size() != 6) {
            throw CliError("grid_nav needs W,H,slip,noise,seed[,discount], got '" + spec + "'");
        }
        GridNavSpec g;
        g.width = static_cast<std::size_t>(parse_double(parts[0], "grid width"));
        g.height = static_cast<std::size_t>(parse_double(parts[1], "grid height"));
        g.slip_prob = parse_double(parts[2], "slip probability");
        g.obs_noise = parse_double(parts[3], "observation noise");
        g.seed = static_cast<std::uint64_t>(parse_double(parts[4], "grid seed"));
        if (parts.size() == 6) g.discount = parse_double(parts[5], "discount");
        return generate_grid_nav(g);
    }
    std::ifstream in(spec);
    if (!in) throw CliError("cannot open problem file '" + spec + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_pomdp(ss.str());
    } catch (const ParseError& e) {
        throw CliError(spec + ": " + e.what());
    }
}

struct SolverOptions {
    std::string solver = "aa-fib";
    double tol = 1e-6;
    std::size_t max_iter = 100000;
    bool max_iter_set = false;
    std::vector<std::size_t> m_max{4};
    double eta = 1e-3;
    double safeguard_d = 1e6;
    double safeguard_phi = 1e-6;
    std::size_t safeguard_ns = 5;
    std::vector<std::size_t> sample_size{20};
    bool frozen = false;
    std::uint64_t seed = 0;
};

// Simulation runs never see an exact zero residual, so they get a finite default cap.
constexpr std::size_t kSimDefaultMaxIter = 1000;

SolveResult run_solver(const PomdpModel& m, const SolverOptions& o, std::size_t m_max,
                       std::size_t sample_size, std::uint64_t seed) {
    SolveParams sp;
    sp.tol = o.tol;
    sp.max_iter = o.max_iter;
    sp.seed = seed;
    if (o.solver == "fib") return fib_solve(m, sp);
    if (o.solver == "qmdp") return qmdp_solve(m, sp);
    AaParams ap;
    ap.m_max = m_max;
    ap.eta = o.eta;
    ap.safeguard_d = o.safeguard_d;
    ap.safeguard_phi = o.safeguard_phi;
    ap.safeguard_ns = o.safeguard_ns;
    ap.solve = sp;
    if (o.solver == "aa-fib") return aa_fib_solve(m, ap);
    if (o.solver == "aa-fib-sim") {
        if (!o.max_iter_set) ap.solve.max_iter = kSimDefaultMaxIter;
        SimParams sim;
        sim.sample_size = sample_size;
        sim.seed = seed;
        sim.mode = o.frozen ? ResampleMode::Frozen : ResampleMode::Fresh;
        return aa_fib_sim_solve(m, ap, sim);
    }
    throw CliError("unknown solver '" + o.solver + "'");
}

void add_solver_flags(CLI::App* cmd, SolverOptions& o, bool sweep) {
    cmd->add_option("--solver", o.solver, "fib | aa-fib | aa-fib-sim | qmdp")
        ->check(CLI::IsMember({"fib", "aa-fib", "aa-fib-sim", "qmdp"}))
        ->capture_default_str();
    cmd->add_option("--tol", o.tol, "stop when ||alpha - F alpha||_inf <= tol")->capture_default_str();
    cmd->add_option_function<std::size_t>(
           "--max-iter", [&o](std::size_t v) { o.max_iter = v, o.max_iter_set = true; },
           "iteration cap (default 100000; 1000 for aa-fib-sim)");
    if (sweep) {
        cmd->add_option("--m-max", o.m_max, "Anderson memory sizes to sweep")->delimiter(',')->capture_default_str();
        cmd->add_option("--sample-size", o.sample_size, "sample sizes |J| to sweep (aa-fib-sim)")
            ->delimiter(',')
            ->capture_default_str();
    } else {
        cmd->add_option_function<std::size_t>("--m-max", [&o](std::size_t v) { o.m_max = {v}; },
                                              "Anderson memory size (default 4)");
        cmd->add_option_function<std::size_t>("--sample-size", [&o](std::size_t v) { o.sample_size = {v}; },
                                              "samples per (s,a) for aa-fib-sim (default 20)");
    }
    cmd->add_option("--eta", o.eta, "regularization scale")->capture_default_str();
    cmd->add_option("--safeguard-d", o.safeguard_d, "safeguard factor D")->capture_default_str();
    cmd->add_option("--safeguard-phi", o.safeguard_phi, "safeguard exponent phi")->capture_default_str();
    cmd->add_option("--safeguard-ns", o.safeguard_ns, "safeguard interval N_s")->capture_default_str();
    cmd->add_flag("--frozen", o.frozen, "reuse one sample batch per (s,a) instead of resampling");
}

fs::path out_dir(const std::string& out) {
    fs::path p = out.empty() ? fs::path(".") : fs::path(out);
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec) throw CliError("cannot create output directory '" + p.string() + "': " + ec.message());
    return p;
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw CliError("cannot write '" + p.string() + "'");
    f << text;
}

std::string trace_csv(const SolveResult& r) {
    std::string out = "k,residual_inf,step_kind,step_seconds,weight_seconds\n";
    for (const auto& row : r.trace) {
        out += std::to_string(row.k) + "," + fmt(row.residual_inf) + "," + to_string(row.kind) + "," +
               fmt(row.step_seconds) + "," + fmt(row.weight_seconds) + "\n";
    }
    return out;
}

json policy_json(const PomdpModel& m, const SolveResult& r, const std::string& solver) {
    return json{{"model_hash", model_hash(m)},
                {"num_states", m.num_states},
                {"num_actions", m.num_actions},
                {"discount", m.discount},
                {"solver", solver},
                {"converged", r.converged},
                {"iterations", r.iterations},
                {"alpha", r.alpha.data()}};
}

AlphaMatrix load_policy(const std::string& path, const PomdpModel& m) {
    std::ifstream in(path);
    if (!in) throw CliError("cannot open policy file '" + path + "'");
    json j;
    try {
        in >> j;
        const auto S = j.at("num_states").get<std::size_t>();
        const auto A = j.at("num_actions").get<std::size_t>();
        auto data = j.at("alpha").get<std::vector<double>>();
        if (S != m.num_states || A != m.num_actions) {
            throw CliError("policy shape " + std::to_string(S) + "x" + std::to_string(A) +
                           " does not match model " + std::to_string(m.num_states) + "x" +
                           std::to_string(m.num_actions));
        }
        if (j.contains("model_hash") && j["model_hash"] != model_hash(m)) {
            std::cerr << "warning: policy was computed for a different model (hash mismatch)\n";
        }
        return AlphaMatrix(S, A, std::move(data));
    } catch (const json::exception& e) {
        throw CliError(path + ": malformed policy file: " + e.what());
    } catch (const std::invalid_argument& e) {
        throw CliError(path + ": " + e.what());
    }
}

json stats_json(const EvalStats& s, std::uint64_t seed) {
    return json{{"mean", s.mean}, {"std", s.stddev}, {"episodes", s.episodes}, {"seed", seed}};
}

// Runs job(i) for i in [0, n) on `threads` workers.
template <class Job>
void parallel_for(std::size_t n, unsigned threads, Job&& job) {
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < n;) {
            try {
                job(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

struct MeanStd {
    double mean = NAN, std = NAN;
};

MeanStd mean_std(const std::vector<double>& xs) {
    if (xs.empty()) return {};
    double s = 0.0;
    for (double x : xs) s += x;
    const double mean = s / static_cast<double>(xs.size());
    double q = 0.0;
    for (double x : xs) q += (x - mean) * (x - mean);
    return {mean, xs.size() == 1 ? 0.0 : std::sqrt(q / static_cast<double>(xs.size()))};
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fast informed bound POMDP solver with safeguarded Anderson acceleration"};
    app.require_subcommand(1);
    app.set_config("--config", "", "TOML config file; command-line flags override it");

    std::string problem = "tiger", out;
    SolverOptions opt;
    std::size_t episodes = 100, horizon = 100, seeds = 100;
    unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
    std::string policy_path;

    const auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--problem", problem, "tiger | grid_nav:W,H,slip,noise,seed[,discount] | file.pomdp")
            ->capture_default_str();
        cmd->add_option("--out", out, "output directory")->envname("AAFIB_OUT_DIR");
        cmd->add_option("--seed", opt.seed, "base random seed")->capture_default_str();
    };
    const auto add_eval = [&](CLI::App* cmd) {
        cmd->add_option("--episodes", episodes, "episodes per evaluation")->capture_default_str()->check(CLI::PositiveNumber);
        cmd->add_option("--horizon", horizon, "steps per episode")->capture_default_str()->check(CLI::PositiveNumber);
    };

    auto* solve = app.add_subcommand("solve", "run one solver; writes policy.json and trace.csv");
    add_common(solve);
    add_solver_flags(solve, opt, false);

    auto* eval = app.add_subcommand("eval", "evaluate a policy file by simulated episodes");
    add_common(eval);
    add_eval(eval);
    eval->add_option("--policy", policy_path, "policy.json from 'solve'")->required();

    auto* bench = app.add_subcommand("bench", "sweep memory / sample sizes over seeds; writes bench.csv");
    add_common(bench);
    add_solver_flags(bench, opt, true);
    add_eval(bench);
    bench->add_option("--seeds", seeds, "repeated runs with seeds seed..seed+N-1")->capture_default_str()->check(CLI::PositiveNumber);
    bench->add_option("--jobs", jobs, "worker threads")->capture_default_str();

    auto* gen = app.add_subcommand("gen", "write a problem as .pomdp text (stdout unless --out)");
    gen->add_option("--problem", problem, "problem to emit")->capture_default_str();
    gen->add_option("--out", out, "output directory")->envname("AAFIB_OUT_DIR");

    CLI11_PARSE(app, argc, argv);

    try {
        const PomdpModel model = load_problem(problem);

        if (*gen) {
            const auto text = serialize_pomdp(model);
            if (out.empty()) {
                std::cout << text;
            } else {
                const auto path = out_dir(out) / "problem.pomdp";
                write_file(path, text);
                std::cout << path.string() << "\n";
            }
            return 0;
        }

        if (*solve) {
            const auto r = run_solver(model, opt, opt.m_max.front(), opt.sample_size.front(), opt.seed);
            const auto dir = out_dir(out);
            write_file(dir / "policy.json", policy_json(model, r, opt.solver).dump(1) + "\n");
            write_file(dir / "trace.csv", trace_csv(r));
            const double final_res = r.trace.empty() ? r.initial_residual : r.trace.back().residual_inf;
            std::cout << json{{"solver", opt.solver},
                              {"converged", r.converged},
                              {"iterations", r.iterations},
                              {"initial_residual", r.initial_residual},
                              {"final_residual", final_res},
                              {"t_total", r.total_seconds},
                              {"t_aa", r.weight_seconds},
                              {"policy", (dir / "policy.json").string()},
                              {"trace", (dir / "trace.csv").string()}}
                             .dump()
                      << "\n";
            return 0;
        }

        if (*eval) {
            const auto alpha = load_policy(policy_path, model);
            json result;
            EvalConfig c{episodes, horizon, BeliefMode::Fixed, opt.seed};
            if (model.start_belief) result["fixed"] = stats_json(evaluate(model, alpha, c), opt.seed);
            c.mode = BeliefMode::Random;
            result["random"] = stats_json(evaluate(model, alpha, c), opt.seed);
            const auto text = result.dump(1);
            if (!out.empty()) write_file(out_dir(out) / "eval.json", text + "\n");
            std::cout << text << "\n";
            return 0;
        }

        if (*bench) {
            struct Cell {
                std::string solver;
                std::size_t m_max, sample_size;
            };
            std::vector<Cell> cells;
            if (opt.solver == "aa-fib" || opt.solver == "aa-fib-sim") cells.push_back({"fib", 0, 0});
            if (opt.solver == "aa-fib") {
                for (auto m : opt.m_max) cells.push_back({"aa-fib", m, 0});
            } else if (opt.solver == "aa-fib-sim") {
                for (auto m : opt.m_max)
                    for (auto j : opt.sample_size) cells.push_back({"aa-fib-sim", m, j});
            } else {
                cells.push_back({opt.solver, 0, 0});
            }

            struct RunStats {
                double iterations, t_total, t_aa, reward_rand, reward_fixed;
            };
            std::vector<RunStats> runs(cells.size() * seeds);
            parallel_for(runs.size(), jobs, [&](std::size_t i) {
                const Cell& cell = cells[i / seeds];
                const std::uint64_t seed = opt.seed + i % seeds;
                SolverOptions o = opt;
                o.solver = cell.solver;
                const auto r = run_solver(model, o, cell.m_max, cell.sample_size, seed);
                EvalConfig c{episodes, horizon, BeliefMode::Random, seed};
                RunStats s{static_cast<double>(r.iterations), r.total_seconds, r.weight_seconds,
                           evaluate(model, r.alpha, c).mean, NAN};
                if (model.start_belief) {
                    c.mode = BeliefMode::Fixed;
                    s.reward_fixed = evaluate(model, r.alpha, c).mean;
                }
                runs[i] = s;
            });

            std::string csv = "solver,m_max,sample_size,seeds,iter_mean,iter_std,t_total_mean,t_total_std,"
                              "t_aa_mean,t_aa_std,reward_rand_mean,reward_rand_std,reward_fixed_mean,"
                              "reward_fixed_std\n";
            for (std::size_t c = 0; c < cells.size(); ++c) {
                std::vector<double> cols[5];
                for (std::size_t k = 0; k < seeds; ++k) {
                    const auto& s = runs[c * seeds + k];
                    cols[0].push_back(s.iterations);
                    cols[1].push_back(s.t_total);
                    cols[2].push_back(s.t_aa);
                    cols[3].push_back(s.reward_rand);
                    if (!std::isnan(s.reward_fixed)) cols[4].push_back(s.reward_fixed);
                }
                csv += cells[c].solver + "," + (cells[c].m_max ? std::to_string(cells[c].m_max) : "") + "," +
                       (cells[c].sample_size ? std::to_string(cells[c].sample_size) : "") + "," +
                       std::to_string(seeds);
                for (const auto& col : cols) {
                    const auto ms = mean_std(col);
                    csv += "," + fmt(ms.mean) + "," + fmt(ms.std);
                }
                csv += "\n";
            }
            const auto path = out_dir(out) / "bench.csv";
            write_file(path, csv);
            std::cout << csv;
            return 0;
        }
    } catch (const CliError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
