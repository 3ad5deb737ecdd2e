// Acceptance gate: one pass/fail line per criterion. The multi-seed sweep
// (criteria 1 and 2) dominates the runtime; everything else finishes in
// seconds. Exit code is the number of failed criteria.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "oracles.hpp"
#include "torl/harness.hpp"
#include "torl/verify.hpp"

using namespace torl;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int criterion, bool pass, const std::string& what) {
    std::printf("[%s] criterion %d: %s\n", pass ? "PASS" : "FAIL", criterion, what.c_str());
    if (!pass) ++failures;
}

std::string num(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4g", x);
    return buf;
}

// --- criteria 1 & 2: the 10-seed sweep ------------------------------------

// Hyperparameters the paper leaves unreported (beta, pair count, budget) are
// pinned here to the values that reproduce Table 1; they match
// configs/table1.json.
RunConfig sweep_config() {
    RunConfig cfg;
    cfg.aux.beta = 1.0f;
    cfg.aux.pairs_per_step = 8;
    cfg.aux.k = 10;
    cfg.trainer.total_env_steps = 2'500'000;
    cfg.eval_episodes = 1000;
    return cfg;
}

std::vector<double> read_return_column(const std::string& metrics_path) {
    std::ifstream in(metrics_path);
    if (!in) throw std::runtime_error("cannot open " + metrics_path);
    std::vector<double> col;
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        std::stringstream ss(line);
        std::string cell;
        for (int i = 0; i <= 2; ++i) std::getline(ss, cell, ',');
        col.push_back(std::stod(cell));
    }
    return col;
}

struct WindowStats {
    double mean = 0, stddev = 0;
};

// Mean over a fraction of the logged updates (front or back 10%), per seed;
// then aggregated across seeds.
WindowStats window_stats(const std::string& sweep_dir, const VariantStats& v, bool front) {
    std::vector<double> per_seed;
    for (const std::string& run : v.run_dirs) {
        const auto col = read_return_column(sweep_dir + "/" + run + "/metrics.csv");
        const std::size_t w = std::max<std::size_t>(1, col.size() / 10);
        double s = 0;
        for (std::size_t i = 0; i < w; ++i) s += front ? col[i] : col[col.size() - 1 - i];
        per_seed.push_back(s / double(w));
    }
    WindowStats out;
    for (double x : per_seed) out.mean += x;
    out.mean /= double(per_seed.size());
    out.stddev = sample_stddev(per_seed);
    return out;
}

void run_sweep_criteria() {
    const std::string dir = (fs::temp_directory_path() / "torl_acceptance_sweep").string();
    fs::remove_all(dir);
    SweepReport r = run_sweep(sweep_config(), {1, 2, 3, 4, 5, 6, 7, 8, 9, 10},
                              {"baseline", "aux"}, dir);

    const double rel = (r.aux.mean - r.baseline.mean) / r.baseline.mean;
    const bool c1 = r.complete && r.aux.mean > r.baseline.mean && rel >= 0.04 &&
                    r.baseline.mean >= 20.0 && r.baseline.mean <= 29.0 &&
                    r.aux.mean >= 23.0 && r.aux.mean <= 31.0;
    report(1, c1,
           "table 1 reproduction: baseline " + num(r.baseline.mean) + "+-" +
               num(r.baseline.stddev) + " in [20,29], aux " + num(r.aux.mean) + "+-" +
               num(r.aux.stddev) + " in [23,31], improvement " + num(100 * rel) +
               "% >= 4%");

    const WindowStats b_early = window_stats(dir, r.baseline, true);
    const WindowStats a_early = window_stats(dir, r.aux, true);
    const WindowStats b_late = window_stats(dir, r.baseline, false);
    const WindowStats a_late = window_stats(dir, r.aux, false);
    const double pooled_early = std::sqrt((b_early.stddev * b_early.stddev +
                                           a_early.stddev * a_early.stddev) / 2.0);
    const double pooled_late = std::sqrt((b_late.stddev * b_late.stddev +
                                          a_late.stddev * a_late.stddev) / 2.0);
    const double early_gap = std::abs(a_early.mean - b_early.mean);
    const double late_gap = a_late.mean - b_late.mean;
    const bool c2 = early_gap <= pooled_early && late_gap >= 0.5 * pooled_late;
    report(2, c2,
           "learning-curve shape: early |gap| " + num(early_gap) + " <= 1 pooled std " +
               num(pooled_early) + "; late gap " + num(late_gap) + " >= 0.5 pooled std (" +
               num(0.5 * pooled_late) + ")");
}

// --- criterion 3: gradient verification ------------------------------------

void run_gradcheck_criterion() {
    bool pass = true;
    double worst = 0;
    for (const auto& r : verify::run_gradient_suite()) {
        pass = pass && r.pass;
        // the negative control's error is meant to be large; skip it here
        if (r.name.find("negative control") == std::string::npos)
            worst = std::max(worst, r.max_rel_error);
    }
    report(3, pass,
           "gradient suite (layers, lstm unroll, classifier path, assembled loss, "
           "negative control), worst passing rel error " + num(worst) + " < 1e-4");
}

// --- criterion 4: baseline equivalence --------------------------------------

void run_equivalence_criterion() {
    const fs::path dir = fs::temp_directory_path() / "torl_acceptance_equiv";
    fs::remove_all(dir);

    RunConfig cfg;
    cfg.trainer.total_env_steps = 128'000;  // 200 updates
    cfg.eval_episodes = 10;
    cfg.seed = 7;

    RunConfig zero_beta = cfg;
    zero_beta.aux.enabled = true;
    zero_beta.aux.beta = 0.0f;
    zero_beta.out_dir = (dir / "beta0").string();
    run_training(zero_beta);

    RunConfig disabled = cfg;
    disabled.aux.enabled = false;
    disabled.aux.beta = 1.0f;  // must be inert when the module is off
    disabled.out_dir = (dir / "disabled").string();
    run_training(disabled);

    auto read_stripped = [](const fs::path& p) {
        std::ifstream in(p);
        std::vector<std::string> lines;
        std::string line;
        // wall_ms (the last column) is the only timing-dependent field
        while (std::getline(in, line)) lines.push_back(line.substr(0, line.rfind(',')));
        return lines;
    };
    const auto a = read_stripped(dir / "beta0" / "metrics.csv");
    const auto b = read_stripped(dir / "disabled" / "metrics.csv");
    report(4, !a.empty() && a == b,
           "beta=0 run and aux-disabled run produce bit-identical metrics.csv "
           "(wall_ms column excluded)");
}

// --- criterion 5: environment property fuzz ---------------------------------

void run_env_criterion() {
    GridConfig grid;
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> act(0, 4);
    bool ok = true;

    auto [state, obs] = reset(grid, rng);
    int steps_in_episode = 0;
    std::vector<long long> agent_counts(36, 0), goal_counts(36, 0);
    ++agent_counts[state.agent_y * 6 + state.agent_x];
    ++goal_counts[state.goal_y * 6 + state.goal_x];
    int episodes = 1;

    for (int i = 0; i < 100000; ++i) {
        auto [next, r] = step(state, static_cast<Action>(act(rng)), grid);
        ++steps_in_episode;
        ok = ok && next.agent_x >= 0 && next.agent_x < 6 && next.agent_y >= 0 &&
             next.agent_y < 6;
        ok = ok && (r.reward == 0.0f || r.reward == 1.0f);
        const bool on_goal = next.agent_x == next.goal_x && next.agent_y == next.goal_y;
        ok = ok && ((r.reward == 1.0f) == on_goal);
        ok = ok && (r.done == (steps_in_episode == grid.episode_length));
        if (r.done) {
            auto [s2, o2] = reset(grid, rng);
            state = s2;
            steps_in_episode = 0;
            ++agent_counts[state.agent_y * 6 + state.agent_x];
            ++goal_counts[state.goal_y * 6 + state.goal_x];
            ++episodes;
        } else {
            state = next;
        }
    }

    // chi-square vs uniform over 36 cells; 4-sigma bound for df=35 is
    // 35 + 4*sqrt(70) ~ 68.5
    auto chi2 = [&](const std::vector<long long>& counts) {
        const double expect = double(episodes) / 36.0;
        double c = 0;
        for (long long n : counts) c += (n - expect) * (n - expect) / expect;
        return c;
    };
    const double bound = 35.0 + 4.0 * std::sqrt(70.0);
    ok = ok && chi2(agent_counts) < bound && chi2(goal_counts) < bound;
    report(5, ok,
           "1e5-step fuzz: bounds, reward iff on goal, 50-step termination, "
           "spawn chi-square within 4 sigma (agent " + num(chi2(agent_counts)) +
               ", goal " + num(chi2(goal_counts)) + " < " + num(bound) + ")");
}

// --- criterion 6: random-policy oracle ---------------------------------------

void run_random_oracle_criterion() {
    std::mt19937_64 rng(11);
    Agent<float> agent(AgentConfig{}, rng);
    EvalResult r = evaluate(agent, GridConfig{}, 1000, 11);
    const auto oracle = oracles::random_walk_returns(20000, 4242);
    const double agent_se = r.stddev / std::sqrt(1000.0);
    const double tol = 2.0 * std::sqrt(agent_se * agent_se +
                                       oracle.stderr_of_mean() * oracle.stderr_of_mean());
    report(6, std::abs(r.mean - oracle.mean) < tol,
           "untrained eval mean " + num(r.mean) + " vs monte-carlo oracle " +
               num(oracle.mean) + " within 2 SE (" + num(tol) + ")");
}

// --- criterion 7: classifier learnability -------------------------------------

void run_learnability_criterion() {
    const double acc = oracles::train_order_classifier_on_lines(500, 1234);
    report(7, acc > 0.9,
           "order classifier on scripted lines: held-out accuracy " + num(acc) + " > 0.9");
}

// --- criterion 8: discounting identity ----------------------------------------

void run_discounting_criterion() {
    TrainerConfig tc;
    tc.n_workers = 1;
    tc.rollout_len = 50;
    AuxConfig aux;
    aux.beta = 0.0f;
    Trainer<double> t(GridConfig{}, verify::tiny_agent_config(), aux, tc, 1);
    Rollout<double> r = t.collect();
    for (int step = 0; step < 50; ++step) {
        r.steps[step].rewards[0] = 1.0;
        r.steps[step].done[0] = step == 49;
    }
    r.bootstrap[0] = 0.0;
    const auto ra = t.compute_returns_and_advantages(r);
    const double expect = (1.0 - std::pow(0.95, 50)) / 0.05;
    const double err = std::abs(ra.returns(0, 0) - expect);
    report(8, err < 1e-5,
           "reward-every-step discounted return " + num(ra.returns(0, 0)) + " = " +
               num(expect) + " within 1e-5");
}

}  // namespace

int main() {
    run_gradcheck_criterion();
    run_env_criterion();
    run_random_oracle_criterion();
    run_learnability_criterion();
    run_discounting_criterion();
    run_equivalence_criterion();
    run_sweep_criteria();
    std::printf("%s\n", failures == 0 ? "acceptance: all criteria passed"
                                      : "acceptance: FAILURES PRESENT");
    return failures;
}
