#include "cli.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <memory>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "mcast/policies.hpp"
#include "mcast/scenario.hpp"
#include "outputs.hpp"

#ifndef MCAST_GIT_DESCRIBE
#define MCAST_GIT_DESCRIBE "unknown"
#endif

namespace mcast::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

struct Failure {
    int code;
    std::string message;
};

std::shared_ptr<spdlog::logger> logger() {
    static auto log = [] {
        auto l = spdlog::stderr_color_mt("mcast");
        l->set_pattern("[%l] %v");
        auto level = spdlog::level::info;
        if (const char *env = std::getenv("MCAST_LOG")) level = spdlog::level::from_str(env);
        l->set_level(level);
        return l;
    }();
    return log;
}

Scenario load_or_fail(const Options &opts) {
    try {
        return load_scenario(opts.config);
    } catch (const ConfigError &e) {
        std::string msg = fmt::format("invalid config {}:", opts.config);
        for (const auto &v : e.violations()) msg += "\n  " + v;
        throw Failure{invalid_config, msg};
    }
}

std::string utc_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::ofstream open_output(const fs::path &path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Failure{cannot_write, fmt::format("cannot write {}", path.string())};
    return out;
}

void prepare_out_dir(const fs::path &dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw Failure{cannot_write, fmt::format("cannot write {}", dir.string())};
}

void write_manifest(const fs::path &dir, const std::string &command, const Options &opts, std::uint64_t seed,
                    const std::vector<std::string> &files) {
    json manifest{{"command", command},
                  {"scenario", opts.config},
                  {"seed", seed},
                  {"policy", opts.policy},
                  {"episodes", opts.episodes ? json(*opts.episodes) : json(nullptr)},
                  {"checkpoint", opts.checkpoint.empty() ? json(nullptr) : json(opts.checkpoint)},
                  {"git_describe", MCAST_GIT_DESCRIBE},
                  {"output_dir", dir.string()},
                  {"started_at", utc_now()},
                  {"files", files}};
    auto out = open_output(dir / "manifest.json");
    out << manifest.dump(2) << '\n';
    if (!out) throw Failure{cannot_write, fmt::format("cannot write {}", (dir / "manifest.json").string())};
}

BranchingNetwork load_checkpoint(const Options &opts) {
    if (opts.checkpoint.empty())
        throw Failure{missing_checkpoint, fmt::format("missing checkpoint: policy '{}' needs --checkpoint", opts.policy)};
    if (!fs::exists(opts.checkpoint))
        throw Failure{missing_checkpoint, fmt::format("missing checkpoint: {} does not exist", opts.checkpoint)};
    try {
        return BranchingNetwork::load(opts.checkpoint);
    } catch (const std::exception &e) {
        throw Failure{runtime_failure, fmt::format("cannot load checkpoint {}: {}", opts.checkpoint, e.what())};
    }
}

int guarded(const std::function<int()> &body) {
    try {
        return body();
    } catch (const Failure &f) {
        logger()->error("{}", f.message);
        return f.code;
    } catch (const ConfigError &e) {
        logger()->error("invalid config: {}", e.what());
        return invalid_config;
    } catch (const std::exception &e) {
        logger()->error("runtime failure: {}", e.what());
        return runtime_failure;
    }
}

int simulate_with(const Options &opts, const std::string &command) {
    auto scenario = load_or_fail(opts);
    const auto kind = parse_policy(opts.policy);
    if (!kind) throw Failure{invalid_config, fmt::format("unknown policy '{}'", opts.policy)};
    const std::uint64_t seed = opts.seed.value_or(scenario.seed);
    const int episodes = opts.episodes.value_or(1);
    if (episodes < 1) throw Failure{invalid_config, "--episodes must be at least 1"};

    std::optional<BranchingNetwork> net;
    if (*kind == PolicyKind::proposed || *kind == PolicyKind::wdt) net = load_checkpoint(opts);

    Environment env(scenario, scheme_for(*kind));
    if (net && (net->shape().inputs != static_cast<int>(env.observation_size()) ||
                net->shape().branches != env.branch_count() || net->shape().actions != env.action_count()))
        throw Failure{runtime_failure, "checkpoint shape does not match the scenario"};

    const fs::path dir(opts.out);
    prepare_out_dir(dir);
    std::vector<std::string> files{"reports.jsonl", "summary.csv"};
    if (opts.sqp_trace) files.emplace_back("sqp_trace.jsonl");
    write_manifest(dir, command, opts, seed, files);

    auto reports = open_output(dir / "reports.jsonl");
    std::ofstream trace;
    if (opts.sqp_trace) trace = open_output(dir / "sqp_trace.jsonl");

    auto policy = make_policy(*kind, seed, net ? &*net : nullptr);
    SummaryCollector summary;
    SqpOptions traced;
    traced.record_trace = true;
    for (int e = 0; e < episodes; ++e) {
        const auto log = run_episode(env, *policy, seed + static_cast<std::uint64_t>(e));
        logger()->info("episode {} mean reward {:.6f}", e, log.mean_reward);
        for (const auto &record : log.steps) {
            reports << report_line(e, record) << '\n';
            summary.add(record);
        }
        if (opts.sqp_trace && *kind != PolicyKind::heuristic) {
            // Replay each slot's solve with tracing on; the solver is deterministic.
            env.reset(seed + static_cast<std::uint64_t>(e));
            for (const auto &record : log.steps) {
                SqpResult result;
                (void)env.complete_decision(record.decision.versions, traced, &result);
                for (const auto &it : result.trace) trace << sqp_trace_line(e, record.slot, it) << '\n';
                env.step(record.decision);
            }
        }
    }
    auto csv = open_output(dir / "summary.csv");
    summary.write_csv(csv);
    if (!reports || !csv) throw Failure{cannot_write, fmt::format("cannot write {}", dir.string())};
    return ok;
}

}  // namespace

int cmd_validate(const Options &opts) {
    return guarded([&] {
        const auto scenario = load_or_fail(opts);
        fmt::print("ok: {} videos, {} segments, {} SMGs, {} users, horizon {}\n", scenario.catalog.video_count(),
                   scenario.catalog.total_segments(), scenario.smg_count(), scenario.users.size(), scenario.horizon);
        return ok;
    });
}

int cmd_simulate(const Options &opts) {
    return guarded([&] { return simulate_with(opts, "simulate"); });
}

int cmd_evaluate(const Options &opts) {
    return guarded([&] {
        Options o = opts;
        if (o.policy.empty()) o.policy = "proposed";
        if (o.policy != "proposed" && o.policy != "wdt")
            throw Failure{invalid_config, fmt::format("evaluate runs a trained policy (proposed or wdt), got '{}'", o.policy)};
        return simulate_with(o, "evaluate");
    });
}

int cmd_train(const Options &opts) {
    return guarded([&] {
        auto scenario = load_or_fail(opts);
        const std::string name = opts.policy.empty() ? "proposed" : opts.policy;
        const auto scheme = parse_scheme(name);
        if (!scheme) throw Failure{invalid_config, fmt::format("train supports proposed or wdt, got '{}'", name)};
        if (opts.trials < 1) throw Failure{invalid_config, "--trials must be at least 1"};
        AgentConfig config = scenario.agent;
        if (opts.episodes) config.episodes = *opts.episodes;
        if (config.episodes < 1) throw Failure{invalid_config, "--episodes must be at least 1"};
        const std::uint64_t seed = opts.seed.value_or(scenario.seed);

        const fs::path dir(opts.out);
        prepare_out_dir(dir);
        std::vector<std::string> files;
        if (opts.trials == 1) {
            files = {"checkpoint.bin", "learning_curve.csv"};
        } else {
            for (int t = 0; t < opts.trials; ++t) {
                files.push_back(fmt::format("trial_{}/checkpoint.bin", t));
                files.push_back(fmt::format("trial_{}/learning_curve.csv", t));
            }
            files.emplace_back("learning_curve_envelope.csv");
        }
        Options manifest_opts = opts;
        manifest_opts.policy = name;
        manifest_opts.episodes = config.episodes;
        write_manifest(dir, "train", manifest_opts, seed, files);

        std::vector<std::vector<CurvePoint>> curves;
        for (int t = 0; t < opts.trials; ++t) {
            const fs::path trial_dir = opts.trials == 1 ? dir : dir / fmt::format("trial_{}", t);
            prepare_out_dir(trial_dir);
            config.seed = seed + static_cast<std::uint64_t>(t);
            auto result = train_agent(scenario, *scheme, config, [&](const CurvePoint &p) {
                logger()->debug("trial {} episode {} reward {:.6f} epsilon {:.4f} loss {:.6g}", t, p.episode,
                                p.mean_reward, p.epsilon, p.loss);
            });
            logger()->info("trial {} final episode reward {:.6f}", t, result.curve.back().mean_reward);
            {
                auto out = open_output(trial_dir / "checkpoint.bin");
                result.agent.online().save(out);
            }
            auto csv = open_output(trial_dir / "learning_curve.csv");
            write_curve_csv(csv, result.curve);
            curves.push_back(std::move(result.curve));
        }
        if (opts.trials > 1) {
            auto env_csv = open_output(dir / "learning_curve_envelope.csv");
            write_envelope_csv(env_csv, curves);
        }
        return ok;
    });
}

int run(int argc, char **argv) {
    CLI::App app{"Multicast short-video streaming simulator and scheduler"};
    app.require_subcommand(1);
    Options opts;

    auto add_common = [&](CLI::App *sub) {
        sub->add_option("--config", opts.config, "Scenario JSON file")->required();
        sub->add_option("--seed", opts.seed, "Seed for stochastic draws (defaults to the scenario seed)");
    };
    auto add_run = [&](CLI::App *sub) {
        sub->add_option("--out", opts.out, "Output directory")->capture_default_str();
        sub->add_option("--policy", opts.policy, "proposed | wdt | heuristic | random");
        sub->add_option("--episodes", opts.episodes, "Number of episodes");
        sub->add_option("--checkpoint", opts.checkpoint, "Trained network checkpoint");
    };

    auto *validate = app.add_subcommand("validate", "Check a scenario and report every violation");
    add_common(validate);
    auto *simulate = app.add_subcommand("simulate", "Run a policy and write per-slot reports and a summary");
    add_common(simulate);
    add_run(simulate);
    simulate->add_flag("--sqp-trace", opts.sqp_trace, "Also dump every slot-division iterate");
    auto *train = app.add_subcommand("train", "Train the BDQN agent and write a checkpoint and learning curve");
    add_common(train);
    add_run(train);
    train->add_option("--trials", opts.trials, "Independent training trials with consecutive seeds")->capture_default_str();
    auto *evaluate = app.add_subcommand("evaluate", "Run a trained checkpoint through the simulate pipeline");
    add_common(evaluate);
    add_run(evaluate);
    evaluate->add_flag("--sqp-trace", opts.sqp_trace, "Also dump every slot-division iterate");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? ok : invalid_config;
    }
    logger();
    if (validate->parsed()) return cmd_validate(opts);
    if (simulate->parsed()) {
        if (opts.policy.empty()) opts.policy = "random";
        return cmd_simulate(opts);
    }
    if (train->parsed()) return cmd_train(opts);
    return cmd_evaluate(opts);
}

}  // namespace mcast::cli
