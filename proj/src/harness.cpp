#include "torl/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "torl/checkpoint.hpp"

namespace torl {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", x);
    return buf;
}

std::uint64_t eval_seed_for(std::uint64_t seed) {
    // Training streams use tags 1 and 2 (see Trainer); evaluation uses 3.
    std::seed_seq sq{seed, std::uint64_t(3)};
    std::mt19937_64 rng(sq);
    return rng();
}

void write_eval_json(const EvalResult& r, const std::string& path) {
    json j = {{"episodes", r.episodes}, {"mean", r.mean},   {"std", r.stddev},
              {"min", r.min},           {"max", r.max},     {"mode", r.argmax ? "argmax" : "stochastic"}};
    std::ofstream out(path);
    out << j.dump(2) << "\n";
}

}  // namespace

double sample_stddev(const std::vector<double>& xs) {
    if (xs.size() < 2) return 0.0;
    double mean = 0;
    for (double x : xs) mean += x;
    mean /= double(xs.size());
    double s = 0;
    for (double x : xs) s += (x - mean) * (x - mean);
    return std::sqrt(s / double(xs.size() - 1));
}

EvalResult evaluate(const Agent<float>& agent, const GridConfig& env_cfg, int episodes,
                    std::uint64_t seed, bool argmax) {
    if (episodes < 1) throw std::invalid_argument("evaluation needs at least one episode");

    std::mt19937_64 rng(eval_seed_for(seed));
    GridEnv env(env_cfg);
    EvalResult result;
    result.episodes = episodes;
    result.argmax = argmax;
    result.min = std::numeric_limits<double>::infinity();
    result.max = -std::numeric_limits<double>::infinity();

    std::vector<double> returns;
    returns.reserve(episodes);
    for (int ep = 0; ep < episodes; ++ep) {
        Observation obs = env.reset(rng);
        LstmState<float> state = LstmState<float>::zero(agent.cfg.hidden, 1);
        double ret = 0;
        bool done = false;
        while (!done) {
            AgentStepCache<float> cache;
            MatX<float> col = obs;
            AgentOutput<float> out = agent.step(col, state, cache);
            state = out.state;
            int action;
            if (argmax) {
                Eigen::Index best;
                out.probs.col(0).maxCoeff(&best);
                action = static_cast<int>(best);
            } else {
                action = sample_action<float>(out.probs.col(0), rng).first;
            }
            StepResult sr = env.step(static_cast<Action>(action));
            ret += sr.reward;
            obs = sr.observation;
            done = sr.done;
        }
        returns.push_back(ret);
        result.min = std::min(result.min, ret);
        result.max = std::max(result.max, ret);
    }
    for (double r : returns) result.mean += r;
    result.mean /= episodes;
    result.stddev = sample_stddev(returns);
    return result;
}

Agent<float> load_agent(const std::string& checkpoint_path, const AgentConfig& cfg) {
    ParameterStore<float> loaded = load_checkpoint(checkpoint_path);
    std::mt19937_64 rng(0);
    Agent<float> agent(cfg, rng);
    if (loaded.size() != agent.params.size())
        throw std::runtime_error("checkpoint/architecture mismatch: entry count");
    for (auto& [name, e] : agent.params) {
        if (!loaded.contains(name))
            throw std::runtime_error("checkpoint/architecture mismatch: missing " + name);
        const auto& src = loaded.at(name);
        if (src.value.rows() != e.value.rows() || src.value.cols() != e.value.cols())
            throw std::runtime_error("checkpoint/architecture mismatch: shape of " + name);
        e.value = src.value;
    }
    return agent;
}

TrainResult run_training(RunConfig config) {
    config.validate();
    fs::create_directories(config.out_dir);
    save_run_config(config, config.out_dir + "/config.json");

    Trainer<float> trainer(config.env, config.agent, config.aux, config.trainer, config.seed);

    const long long steps_per_update =
        static_cast<long long>(config.trainer.n_workers) * config.trainer.rollout_len;
    const long long updates =
        std::max<long long>(1, config.trainer.total_env_steps / steps_per_update);

    std::ofstream metrics(config.out_dir + "/metrics.csv");
    metrics << "update,env_steps,mean_return_100ep,policy_loss,value_loss,entropy,"
               "aux_loss,aux_accuracy,grad_norm,wall_ms\n";

    const auto start = std::chrono::steady_clock::now();
    for (long long u = 1; u <= updates; ++u) {
        Rollout<float> rollout = trainer.collect();
        UpdateStats stats = trainer.update(rollout);
        if (!stats.finite) {
            metrics.flush();
            throw NumericAbort("non-finite loss or gradients at update " + std::to_string(u));
        }
        if (u % config.log_every == 0 || u == updates) {
            const auto wall = std::chrono::duration_cast<std::chrono::milliseconds>(
                                  std::chrono::steady_clock::now() - start)
                                  .count();
            metrics << u << ',' << u * steps_per_update << ','
                    << fmt(trainer.mean_recent_return()) << ',' << fmt(stats.policy_loss) << ','
                    << fmt(stats.value_loss) << ',' << fmt(stats.entropy) << ','
                    << fmt(stats.aux_loss) << ',' << fmt(stats.aux_accuracy) << ','
                    << fmt(stats.grad_norm) << ',' << wall << "\n";
        }
    }
    metrics.close();

    save_checkpoint(trainer.agent.params, config.out_dir + "/final.ckpt");
    TrainResult result;
    result.run_dir = config.out_dir;
    result.eval = evaluate(trainer.agent, config.env, config.eval_episodes, config.seed,
                           config.eval_argmax);
    write_eval_json(result.eval, config.out_dir + "/eval.json");
    return result;
}

namespace {

void finalize(VariantStats& v) {
    double mean = 0;
    for (double x : v.per_seed_mean_return) mean += x;
    v.mean = v.per_seed_mean_return.empty() ? 0 : mean / double(v.per_seed_mean_return.size());
    v.stddev = sample_stddev(v.per_seed_mean_return);
}

json variant_to_json(const VariantStats& v) {
    return {{"seeds", v.seeds},
            {"per_seed_mean_return", v.per_seed_mean_return},
            {"run_dirs", v.run_dirs},
            {"failed_seeds", v.failed_seeds},
            {"mean", v.mean},
            {"std", v.stddev}};
}

VariantStats variant_from_json(const json& j) {
    VariantStats v;
    v.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    v.per_seed_mean_return = j.at("per_seed_mean_return").get<std::vector<double>>();
    v.run_dirs = j.at("run_dirs").get<std::vector<std::string>>();
    v.failed_seeds = j.at("failed_seeds").get<std::vector<std::uint64_t>>();
    v.mean = j.at("mean");
    v.stddev = j.at("std");
    return v;
}

}  // namespace

SweepReport run_sweep(RunConfig base, const std::vector<std::uint64_t>& seeds,
                      const std::vector<std::string>& variants, const std::string& out_dir) {
    if (seeds.empty()) throw ConfigError("sweep needs at least one seed");
    fs::create_directories(out_dir);

    SweepReport report;
    for (const std::string& variant : variants) {
        if (variant != "baseline" && variant != "aux")
            throw ConfigError("unknown variant: " + variant);
        VariantStats& stats = variant == "baseline" ? report.baseline : report.aux;
        for (std::uint64_t seed : seeds) {
            RunConfig cfg = base;
            cfg.seed = seed;
            if (variant == "baseline") cfg.aux.beta = 0.0f;
            cfg.out_dir = out_dir + "/" + variant + "_s" + std::to_string(seed);
            try {
                TrainResult r = run_training(cfg);
                stats.seeds.push_back(seed);
                stats.per_seed_mean_return.push_back(r.eval.mean);
                stats.run_dirs.push_back(fs::path(r.run_dir).filename().string());
            } catch (const NumericAbort&) {
                stats.failed_seeds.push_back(seed);
                report.complete = false;
            }
        }
        finalize(stats);
    }
    write_sweep_outputs(report, out_dir);
    return report;
}

void write_sweep_outputs(const SweepReport& report, const std::string& out_dir) {
    json j = {{"variants",
               {{"baseline", variant_to_json(report.baseline)},
                {"aux", variant_to_json(report.aux)}}},
              {"complete", report.complete}};
    std::ofstream out(out_dir + "/sweep_report.json");
    out << j.dump(2) << "\n";

    std::ofstream table(out_dir + "/table1.csv");
    table << "model,mean,std\n";
    table << "baseline," << fmt(report.baseline.mean) << ',' << fmt(report.baseline.stddev)
          << "\n";
    table << "aux," << fmt(report.aux.mean) << ',' << fmt(report.aux.stddev) << "\n";
}

SweepReport rebuild_report(const std::string& sweep_dir) {
    SweepReport report;
    for (const auto& entry : fs::directory_iterator(sweep_dir)) {
        if (!entry.is_directory()) continue;
        const std::string name = entry.path().filename().string();
        const auto sep = name.rfind("_s");
        if (sep == std::string::npos) continue;
        const std::string variant = name.substr(0, sep);
        if (variant != "baseline" && variant != "aux") continue;
        const std::string eval_path = entry.path().string() + "/eval.json";
        VariantStats& stats = variant == "baseline" ? report.baseline : report.aux;
        const std::uint64_t seed = std::stoull(name.substr(sep + 2));
        if (!fs::exists(eval_path)) {
            stats.failed_seeds.push_back(seed);
            report.complete = false;
            continue;
        }
        std::ifstream in(eval_path);
        json j = json::parse(in);
        stats.seeds.push_back(seed);
        stats.per_seed_mean_return.push_back(j.at("mean"));
        stats.run_dirs.push_back(name);
    }
    // directory_iterator order is unspecified; sort by seed for stable output
    auto sort_variant = [](VariantStats& v) {
        std::vector<std::size_t> idx(v.seeds.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(),
                  [&](std::size_t a, std::size_t b) { return v.seeds[a] < v.seeds[b]; });
        VariantStats s;
        s.failed_seeds = v.failed_seeds;
        for (std::size_t i : idx) {
            s.seeds.push_back(v.seeds[i]);
            s.per_seed_mean_return.push_back(v.per_seed_mean_return[i]);
            s.run_dirs.push_back(v.run_dirs[i]);
        }
        v = std::move(s);
    };
    sort_variant(report.baseline);
    sort_variant(report.aux);
    finalize(report.baseline);
    finalize(report.aux);
    write_sweep_outputs(report, sweep_dir);
    return report;
}

namespace {

struct Curve {
    std::vector<long long> updates, env_steps;
    std::vector<double> mean_return;
};

Curve read_metrics_curve(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    Curve c;
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() < 3) continue;
        c.updates.push_back(std::stoll(cells[0]));
        c.env_steps.push_back(std::stoll(cells[1]));
        c.mean_return.push_back(std::stod(cells[2]));
    }
    return c;
}

struct Series {
    std::vector<double> x, mean, lo, hi;  // mean +- one std across seeds
};

Series aggregate(const std::vector<Curve>& curves) {
    Series s;
    if (curves.empty()) return s;
    std::size_t n = curves[0].updates.size();
    for (const auto& c : curves) n = std::min(n, c.updates.size());
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> vals;
        for (const auto& c : curves) vals.push_back(c.mean_return[i]);
        double mean = 0;
        for (double v : vals) mean += v;
        mean /= double(vals.size());
        const double sd = sample_stddev(vals);
        s.x.push_back(double(curves[0].env_steps[i]));
        s.mean.push_back(mean);
        s.lo.push_back(mean - sd);
        s.hi.push_back(mean + sd);
    }
    return s;
}

std::string polyline(const std::vector<double>& xs, const std::vector<double>& ys,
                     double x0, double x1, double y0, double y1, double w, double h,
                     double pad) {
    std::ostringstream out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double px = pad + (xs[i] - x0) / std::max(1e-12, x1 - x0) * (w - 2 * pad);
        const double py = h - pad - (ys[i] - y0) / std::max(1e-12, y1 - y0) * (h - 2 * pad);
        out << fmt(px) << ',' << fmt(py) << ' ';
    }
    return out.str();
}

}  // namespace

void write_plot_outputs(const std::string& sweep_dir) {
    std::ifstream in(sweep_dir + "/sweep_report.json");
    if (!in) throw std::runtime_error("no sweep_report.json in " + sweep_dir);
    json report = json::parse(in);

    std::ofstream csv(sweep_dir + "/curves.csv");
    csv << "variant,seed,update,env_steps,mean_return\n";

    std::map<std::string, std::vector<Curve>> by_variant;
    for (const std::string variant : {"baseline", "aux"}) {
        const json& v = report.at("variants").at(variant);
        const auto seeds = v.at("seeds").get<std::vector<std::uint64_t>>();
        const auto dirs = v.at("run_dirs").get<std::vector<std::string>>();
        for (std::size_t i = 0; i < dirs.size(); ++i) {
            Curve c = read_metrics_curve(sweep_dir + "/" + dirs[i] + "/metrics.csv");
            for (std::size_t row = 0; row < c.updates.size(); ++row)
                csv << variant << ',' << seeds[i] << ',' << c.updates[row] << ','
                    << c.env_steps[row] << ',' << fmt(c.mean_return[row]) << "\n";
            by_variant[variant].push_back(std::move(c));
        }
    }

    const double W = 720, H = 440, pad = 50;
    double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    bool first = true;
    for (const auto& [variant, curves] : by_variant) {
        const Series s = aggregate(curves);
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (first) {
                x0 = x1 = s.x[i];
                y0 = s.lo[i];
                y1 = s.hi[i];
                first = false;
            }
            x0 = std::min(x0, s.x[i]);
            x1 = std::max(x1, s.x[i]);
            y0 = std::min(y0, s.lo[i]);
            y1 = std::max(y1, s.hi[i]);
        }
    }
    if (first) throw std::runtime_error("no curves to plot");

    std::ofstream svg(sweep_dir + "/curves.svg");
    svg << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H
        << "'>\n";
    svg << "<rect width='100%' height='100%' fill='white'/>\n";
    svg << "<line x1='" << pad << "' y1='" << H - pad << "' x2='" << W - pad << "' y2='"
        << H - pad << "' stroke='black'/>\n";
    svg << "<line x1='" << pad << "' y1='" << pad << "' x2='" << pad << "' y2='" << H - pad
        << "' stroke='black'/>\n";
    svg << "<text x='" << W / 2 << "' y='" << H - 12
        << "' text-anchor='middle' font-size='13'>environment steps</text>\n";
    svg << "<text x='16' y='" << H / 2 << "' font-size='13' transform='rotate(-90 16 "
        << H / 2 << ")' text-anchor='middle'>mean episode return</text>\n";
    svg << "<text x='" << pad << "' y='" << H - pad + 16 << "' font-size='11'>" << fmt(x0)
        << "</text>\n";
    svg << "<text x='" << W - pad << "' y='" << H - pad + 16
        << "' text-anchor='end' font-size='11'>" << fmt(x1) << "</text>\n";
    svg << "<text x='" << pad - 4 << "' y='" << H - pad
        << "' text-anchor='end' font-size='11'>" << fmt(y0) << "</text>\n";
    svg << "<text x='" << pad - 4 << "' y='" << pad
        << "' text-anchor='end' font-size='11'>" << fmt(y1) << "</text>\n";

    const std::map<std::string, std::string> colors = {{"baseline", "#1f77b4"},
                                                       {"aux", "#d62728"}};
    int label_row = 0;
    for (const auto& [variant, curves] : by_variant) {
        const Series s = aggregate(curves);
        const std::string& color = colors.at(variant);
        // +-1 std band
        std::vector<double> bx = s.x, by = s.hi;
        for (std::size_t i = s.x.size(); i-- > 0;) {
            bx.push_back(s.x[i]);
            by.push_back(s.lo[i]);
        }
        svg << "<polygon points='" << polyline(bx, by, x0, x1, y0, y1, W, H, pad)
            << "' fill='" << color << "' fill-opacity='0.2' stroke='none'/>\n";
        svg << "<polyline points='" << polyline(s.x, s.mean, x0, x1, y0, y1, W, H, pad)
            << "' fill='none' stroke='" << color << "' stroke-width='1.6'/>\n";
        svg << "<text x='" << W - pad - 110 << "' y='" << pad + 16 * label_row
            << "' font-size='12' fill='" << color << "'>" << variant << "</text>\n";
        ++label_row;
    }
    svg << "</svg>\n";
}

}  // namespace torl
