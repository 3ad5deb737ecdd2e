#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "oracles.hpp"
#include "torl/checkpoint.hpp"
#include "torl/harness.hpp"

using namespace torl;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    fs::path p = fs::temp_directory_path() / "torl_test" / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::vector<std::string> read_lines(const fs::path& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    return cells;
}

// metrics.csv minus the wall-clock column, which is the only
// run-to-run-varying field.
std::string strip_wall_ms(const std::string& line) {
    return line.substr(0, line.rfind(','));
}

RunConfig tiny_run(const fs::path& out, std::uint64_t seed) {
    RunConfig cfg;
    cfg.trainer.n_workers = 4;
    cfg.trainer.rollout_len = 10;
    cfg.trainer.total_env_steps = 4000;  // 100 updates
    cfg.agent.trunk1 = cfg.agent.trunk2 = cfg.agent.hidden = cfg.agent.classifier_hidden = 16;
    cfg.log_every = 10;
    cfg.eval_episodes = 50;
    cfg.seed = seed;
    cfg.out_dir = out.string();
    return cfg;
}

}  // namespace

TEST_CASE("run config JSON round trip preserves every field") {
    RunConfig cfg;
    cfg.seed = 99;
    cfg.eval_episodes = 123;
    cfg.eval_argmax = true;
    cfg.log_every = 7;
    cfg.out_dir = "runs/x";
    cfg.env.episode_length = 40;
    cfg.agent.hidden = 32;
    cfg.agent.stop_pair_gradient = true;
    cfg.aux.beta = 0.25f;
    cfg.aux.k = 6;
    cfg.aux.pairs_per_step = 4;
    cfg.aux.enabled = false;
    cfg.trainer.gamma = 0.9f;
    cfg.trainer.td_horizon = TdHorizon::OneStep;
    cfg.trainer.total_env_steps = 12345;

    RunConfig back = parse_run_config(dump_run_config(cfg));
    CHECK(back.seed == 99);
    CHECK(back.eval_episodes == 123);
    CHECK(back.eval_argmax);
    CHECK(back.log_every == 7);
    CHECK(back.out_dir == "runs/x");
    CHECK(back.env.episode_length == 40);
    CHECK(back.agent.hidden == 32);
    CHECK(back.agent.stop_pair_gradient);
    CHECK(back.aux.beta == 0.25f);
    CHECK(back.aux.k == 6);
    CHECK(back.aux.pairs_per_step == 4);
    CHECK(!back.aux.enabled);
    CHECK(back.trainer.gamma == 0.9f);
    CHECK(back.trainer.td_horizon == TdHorizon::OneStep);
    CHECK(back.trainer.total_env_steps == 12345);
}

TEST_CASE("partial config documents keep defaults; malformed ones throw") {
    RunConfig cfg = parse_run_config(R"({"aux": {"beta": 0.5}})");
    CHECK(cfg.aux.beta == 0.5f);
    CHECK(cfg.aux.k == 10);
    CHECK(cfg.trainer.n_workers == 32);

    CHECK_THROWS_AS(parse_run_config("{not json"), ConfigError);
    CHECK_THROWS_AS(parse_run_config(R"({"trainer": {"td_horizon": "weekly"}})"), ConfigError);
}

TEST_CASE("checkpoint round trip is bit exact") {
    fs::path dir = fresh_dir("ckpt");
    std::mt19937_64 rng(1);
    AgentConfig acfg;
    acfg.trunk1 = acfg.trunk2 = acfg.hidden = acfg.classifier_hidden = 16;
    Agent<float> agent(acfg, rng);

    const std::string path = (dir / "a.ckpt").string();
    save_checkpoint(agent.params, path);
    ParameterStore<float> loaded = load_checkpoint(path);
    REQUIRE(loaded.size() == agent.params.size());
    for (const auto& [name, e] : agent.params) {
        const auto& l = loaded.at(name);
        REQUIRE(l.value.rows() == e.value.rows());
        REQUIRE(l.value.cols() == e.value.cols());
        CHECK(std::memcmp(l.value.data(), e.value.data(), sizeof(float) * e.value.size()) == 0);
    }

    Agent<float> reloaded = load_agent(path, acfg);
    CHECK((reloaded.params.at("lstm.wx").value - agent.params.at("lstm.wx").value).norm() ==
          0.0f);
}

TEST_CASE("loading a checkpoint into the wrong architecture is an error") {
    fs::path dir = fresh_dir("ckpt_mismatch");
    std::mt19937_64 rng(2);
    AgentConfig small;
    small.trunk1 = small.trunk2 = small.hidden = small.classifier_hidden = 8;
    Agent<float> agent(small, rng);
    const std::string path = (dir / "a.ckpt").string();
    save_checkpoint(agent.params, path);

    AgentConfig big;  // default 64-wide layers
    CHECK_THROWS_WITH_AS(load_agent(path, big) /* shape clash */,
                         doctest::Contains("mismatch"), std::runtime_error);
}

TEST_CASE("run_training writes its artifacts and a valid metrics schema") {
    fs::path dir = fresh_dir("train_artifacts");
    TrainResult r = run_training(tiny_run(dir / "run", 3));
    CHECK(fs::exists(dir / "run" / "config.json"));
    CHECK(fs::exists(dir / "run" / "metrics.csv"));
    CHECK(fs::exists(dir / "run" / "final.ckpt"));
    CHECK(fs::exists(dir / "run" / "eval.json"));
    CHECK(r.eval.episodes == 50);

    auto lines = read_lines(dir / "run" / "metrics.csv");
    REQUIRE(!lines.empty());
    CHECK(lines[0] ==
          "update,env_steps,mean_return_100ep,policy_loss,value_loss,entropy,"
          "aux_loss,aux_accuracy,grad_norm,wall_ms");
    CHECK(lines.size() == 1 + 10);  // 100 updates logged every 10
    for (std::size_t i = 1; i < lines.size(); ++i) {
        auto cells = split_csv(lines[i]);
        REQUIRE(cells.size() == 10);
        CHECK(std::stoll(cells[0]) == (long long)i * 10);
        CHECK(std::stoll(cells[1]) == (long long)i * 10 * 40);
        for (const auto& cell : cells) CHECK_NOTHROW((void)std::stod(cell));
    }
}

TEST_CASE("same seed reproduces metrics.csv bit for bit (wall clock aside)") {
    fs::path dir = fresh_dir("determinism");
    run_training(tiny_run(dir / "a", 4));
    run_training(tiny_run(dir / "b", 4));
    auto a = read_lines(dir / "a" / "metrics.csv");
    auto b = read_lines(dir / "b" / "metrics.csv");
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        CHECK(strip_wall_ms(a[i]) == strip_wall_ms(b[i]));
}

TEST_CASE("the stored config reproduces the run it came from") {
    fs::path dir = fresh_dir("roundtrip");
    run_training(tiny_run(dir / "a", 5));
    RunConfig stored = load_run_config((dir / "a" / "config.json").string());
    stored.out_dir = (dir / "b").string();
    run_training(stored);
    auto a = read_lines(dir / "a" / "metrics.csv");
    auto b = read_lines(dir / "b" / "metrics.csv");
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        CHECK(strip_wall_ms(a[i]) == strip_wall_ms(b[i]));
}

TEST_CASE("untrained-agent evaluation matches the random-walk oracle within 2 SE") {
    std::mt19937_64 rng(6);
    Agent<float> agent(AgentConfig{}, rng);
    EvalResult r = evaluate(agent, GridConfig{}, 1000, 6);
    const auto oracle = oracles::random_walk_returns(20000, 999);
    const double agent_se = r.stddev / std::sqrt(1000.0);
    const double tol = 2.0 * std::sqrt(agent_se * agent_se +
                                       oracle.stderr_of_mean() * oracle.stderr_of_mean());
    INFO("eval ", r.mean, " oracle ", oracle.mean, " tol ", tol);
    CHECK(std::abs(r.mean - oracle.mean) < tol);
    CHECK(r.min >= 0.0);
    CHECK(r.max <= 50.0);
}

TEST_CASE("scripted searcher strictly beats the random walker") {
    const auto sweep = oracles::scripted_sweep_returns(5000, 31);
    const auto random = oracles::random_walk_returns(5000, 32);
    INFO("sweep ", sweep.mean, " random ", random.mean);
    CHECK(sweep.mean > random.mean);
    CHECK(sweep.mean > 10.0);  // finds and parks on the goal most episodes
}

TEST_CASE("evaluation with zero episodes is an error, not an empty report") {
    std::mt19937_64 rng(7);
    Agent<float> agent(AgentConfig{}, rng);
    CHECK_THROWS_AS(evaluate(agent, GridConfig{}, 0, 1), std::invalid_argument);
}

TEST_CASE("sweep writes per-run directories, a report, and a recomputable table") {
    fs::path dir = fresh_dir("sweep");
    RunConfig base = tiny_run(dir / "ignored", 0);
    base.aux.beta = 0.1f;
    SweepReport report =
        run_sweep(base, {1, 2}, {"baseline", "aux"}, (dir / "out").string());

    CHECK(fs::exists(dir / "out" / "baseline_s1" / "eval.json"));
    CHECK(fs::exists(dir / "out" / "baseline_s2" / "eval.json"));
    CHECK(fs::exists(dir / "out" / "aux_s1" / "eval.json"));
    CHECK(fs::exists(dir / "out" / "aux_s2" / "eval.json"));
    CHECK(fs::exists(dir / "out" / "sweep_report.json"));
    CHECK(fs::exists(dir / "out" / "table1.csv"));
    CHECK(report.complete);
    REQUIRE(report.baseline.per_seed_mean_return.size() == 2);
    REQUIRE(report.aux.per_seed_mean_return.size() == 2);

    // external recomputation of the aggregates
    for (const VariantStats* v : {&report.baseline, &report.aux}) {
        double mean = (v->per_seed_mean_return[0] + v->per_seed_mean_return[1]) / 2.0;
        CHECK(std::abs(v->mean - mean) < 1e-9);
        CHECK(std::abs(v->stddev - sample_stddev(v->per_seed_mean_return)) < 1e-9);
    }

    auto table = read_lines(dir / "out" / "table1.csv");
    REQUIRE(table.size() == 3);
    CHECK(table[0] == "model,mean,std");
    CHECK(split_csv(table[1])[0] == "baseline");
    CHECK(split_csv(table[2])[0] == "aux");

    // rebuilding from the run directories reproduces the report
    SweepReport rebuilt = rebuild_report((dir / "out").string());
    CHECK(rebuilt.complete);
    CHECK(std::abs(rebuilt.baseline.mean - report.baseline.mean) < 1e-9);
    CHECK(std::abs(rebuilt.aux.mean - report.aux.mean) < 1e-9);
    CHECK(std::abs(rebuilt.baseline.stddev - report.baseline.stddev) < 1e-9);

    // plot outputs: long-format CSV plus an SVG with both labeled series
    write_plot_outputs((dir / "out").string());
    auto curves = read_lines(dir / "out" / "curves.csv");
    CHECK(curves[0] == "variant,seed,update,env_steps,mean_return");
    CHECK(curves.size() == 1 + 4 * 10);  // 2 variants x 2 seeds x 10 logged rows
    std::ifstream svg_in(dir / "out" / "curves.svg");
    std::stringstream svg;
    svg << svg_in.rdbuf();
    CHECK(svg.str().find("<polyline") != std::string::npos);
    CHECK(svg.str().find(">baseline<") != std::string::npos);
    CHECK(svg.str().find(">aux<") != std::string::npos);
}

TEST_CASE("sweep rejects empty seed lists and unknown variants") {
    fs::path dir = fresh_dir("sweep_bad");
    RunConfig base = tiny_run(dir / "x", 0);
    CHECK_THROWS_AS(run_sweep(base, {}, {"baseline"}, (dir / "o1").string()), ConfigError);
    CHECK_THROWS_AS(run_sweep(base, {1}, {"frobnicate"}, (dir / "o2").string()), ConfigError);
}
