// Command-line driver: instance generation, PQN / pointer-baseline training,
// evaluation against classical benchmarks, the cost-perturbation protocol,
// and SVG report rendering.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pqn/experiment.hpp"

namespace fs = std::filesystem;
using namespace pqn;

namespace {

std::uint64_t apply_seed_env(std::uint64_t seed) {
    if (const char* env = std::getenv("PQN_SEED"))
        return std::strtoull(env, nullptr, 10);
    return seed;
}

std::vector<fs::path> list_instance_files(const fs::path& dir) {
    if (!fs::exists(dir))
        throw FileMissing("missing instance directory: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.path().extension() == ".json")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    if (files.empty())
        throw FileMissing("no instance files in " + dir.string());
    return files;
}

std::vector<TspInstance> load_instances(const std::vector<fs::path>& files) {
    std::vector<TspInstance> instances;
    instances.reserve(files.size());
    for (const auto& file : files)
        instances.push_back(read_instance_file(file));
    return instances;
}

std::pair<double, double> parse_pair(const std::string& text, const char* flag) {
    auto sep = text.find(':');
    if (sep == std::string::npos)
        throw std::invalid_argument(std::string(flag) + " expects the form A:B");
    return {parse_double(text.substr(0, sep)), parse_double(text.substr(sep + 1))};
}

struct RunOptions {
    std::string out;
    std::string kind = "custom";
    std::string model = "both"; // pqn | ptrnet | both
    std::string benchmark = "two_opt";
    int n = 20;
    int count = 5;
    std::uint64_t seed = 0;
    TrainConfig train;
    std::string sup_policy = "tempered";
    std::string td_scope = "q";
    std::string perturb_range = "5:10";
    std::string perturb_bounds = "0.9:1.1";
    std::uint64_t perturb_seed = 0;
    bool perturb_seed_given = false;
};

void add_train_flags(CLI::App* cmd, RunOptions& opt) {
    cmd->add_option("--out", opt.out, "workspace directory")->required();
    cmd->add_option("--kind", opt.kind, "experiment preset")
        ->check(CLI::IsMember({"tsp20", "tsp50", "perturbed-tsp20", "custom"}));
    cmd->add_option("--model", opt.model, "which models to train")
        ->check(CLI::IsMember({"pqn", "ptrnet", "both"}));
    cmd->add_option("--hidden", opt.train.hidden, "LSTM hidden units")
        ->check(CLI::IsMember({128, 256}));
    cmd->add_option("--q-hidden", opt.train.q_hidden, "Q-network hidden units (0 = same)");
    cmd->add_option("--epochs", opt.train.epochs, "training epochs");
    cmd->add_option("--steps", opt.train.steps_per_epoch, "environment steps per epoch");
    cmd->add_option("--gamma", opt.train.gamma, "discount factor");
    cmd->add_option("--lr-ptr", opt.train.lr_ptr, "sequence-model learning rate");
    cmd->add_option("--lr-q", opt.train.lr_q, "Q-network learning rate");
    cmd->add_option("--batch", opt.train.batch_size, "replay minibatch size");
    cmd->add_option("--sync-c", opt.train.target_sync, "target sync period C");
    cmd->add_option("--capacity", opt.train.replay_capacity, "replay buffer capacity");
    cmd->add_option("--seed", opt.seed, "run seed (PQN_SEED overrides)");
    cmd->add_option("--benchmark", opt.benchmark, "benchmark tour method")
        ->check(CLI::IsMember({"two_opt", "held_karp"}));
    cmd->add_option("--sup-policy", opt.sup_policy,
                    "probabilities used in the tempered model's supervised loss")
        ->check(CLI::IsMember({"tempered", "plain"}));
    cmd->add_option("--td-scope", opt.td_scope, "parameters updated by the TD loss")
        ->check(CLI::IsMember({"q", "full"}));
}

void apply_preset(RunOptions& opt) {
    if (opt.kind == "custom")
        return;
    ExperimentConfig preset = ExperimentConfig::preset(opt.kind);
    opt.n = preset.n;
    opt.count = preset.instance_count;
    // only fill schedule fields the user left at their defaults
    TrainConfig defaults;
    if (opt.train.epochs == defaults.epochs)
        opt.train.epochs = preset.train.epochs;
    if (opt.train.steps_per_epoch == defaults.steps_per_epoch)
        opt.train.steps_per_epoch = preset.train.steps_per_epoch;
}

int cmd_generate(RunOptions& opt) {
    opt.seed = apply_seed_env(opt.seed);
    const std::pair<const char*, std::uint64_t> splits[] = {
        {"train", 0}, {"eval", 1000000}, {"test", 2000000}};
    for (const auto& [split, offset] : splits)
        for (int i = 0; i < opt.count; ++i) {
            std::uint64_t seed = opt.seed + offset + static_cast<std::uint64_t>(i);
            TspInstance instance = generate_instance(opt.n, seed);
            char name[64];
            std::snprintf(name, sizeof(name), "instance_%03d.json", i);
            write_instance_file(fs::path(opt.out) / "instances" / split / name, instance, seed);
        }
    std::cout << "wrote " << 3 * opt.count << " instances (n=" << opt.n << ") under " << opt.out
              << "/instances/{train,eval,test}\n";
    return 0;
}

void write_run_outputs(const fs::path& out, const std::string& model_name, TrainResult& result) {
    save_checkpoint(out / "checkpoints" / (model_name + ".json"), result.model);
    emit_history_csv(result.history, out / ("history_" + model_name + ".csv"));
    emit_steps_csv(result.history, out / ("steps_" + model_name + ".csv"));
}

int cmd_train(RunOptions& opt, bool with_perturbation) {
    apply_preset(opt);
    if (opt.kind == "perturbed-tsp20")
        with_perturbation = true;
    opt.train.seed = apply_seed_env(opt.seed);
    opt.train.supervised_uses_tempered = opt.sup_policy == "tempered";
    opt.train.td_updates_encoder = opt.td_scope == "full";
    opt.train.validate();

    fs::path out(opt.out);
    auto files = list_instance_files(out / "instances" / "train");
    std::vector<TspInstance> instances = load_instances(files);
    BenchmarkMethod method = benchmark_from_name(opt.benchmark);
    if (method == BenchmarkMethod::HeldKarp)
        for (const auto& instance : instances)
            if (instance.n > 14)
                throw std::invalid_argument("the exact benchmark requires n <= 14");
    std::vector<Tour> benchmarks = benchmark_tours(instances, method, opt.train.start_city);

    std::optional<PerturbWindow> window;
    if (with_perturbation) {
        auto [first, last] = parse_pair(opt.perturb_range, "--perturb-range");
        auto [alpha, beta] = parse_pair(opt.perturb_bounds, "--perturb-bounds");
        std::uint64_t pseed =
            opt.perturb_seed_given ? opt.perturb_seed : opt.train.seed + 1000000007ull;
        window = PerturbWindow{static_cast<int>(first), static_cast<int>(last), alpha, beta,
                               pseed};
    }

    json meta;
    meta["kind"] = opt.kind;
    meta["train"] = to_json(opt.train);
    meta["benchmark_method"] = opt.benchmark;
    meta["model"] = opt.model;
    meta["instance_files"] = json::array();
    for (const auto& file : files)
        meta["instance_files"].push_back(file.string());
    if (window)
        meta["perturb"] = {{"first_epoch", window->first_epoch},
                           {"last_epoch", window->last_epoch},
                           {"alpha", window->alpha},
                           {"beta", window->beta},
                           {"seed", window->seed}};

    if (opt.model == "pqn" || opt.model == "both") {
        TrainResult result = train_model(instances, benchmarks, opt.train, ModelKind::Pqn,
                                         window ? &*window : nullptr);
        write_run_outputs(out, "pqn", result);
        std::cout << "pqn: final J_mean " << format_double(result.history.epochs.back().j_mean)
                  << ", sigma_B " << format_double(result.history.epochs.back().sigma_b) << "\n";
    }
    if (opt.model == "ptrnet" || opt.model == "both") {
        TrainResult result = train_model(instances, benchmarks, opt.train, ModelKind::PtrNet,
                                         window ? &*window : nullptr);
        write_run_outputs(out, "ptrnet", result);
        std::cout << "ptrnet: final J_mean "
                  << format_double(result.history.epochs.back().j_mean) << ", sigma_B "
                  << format_double(result.history.epochs.back().sigma_b) << "\n";
    }
    write_text_file(out / "run_meta.json", meta.dump(2) + "\n");
    return 0;
}

int cmd_evaluate(const std::string& out_dir, const std::string& split,
                 const std::string& benchmark) {
    fs::path out(out_dir);
    auto files = list_instance_files(out / "instances" / split);
    std::vector<TspInstance> instances = load_instances(files);
    BenchmarkMethod method = benchmark_from_name(benchmark);
    if (method == BenchmarkMethod::HeldKarp)
        for (const auto& instance : instances)
            if (instance.n > 14)
                throw std::invalid_argument("the exact benchmark requires n <= 14");
    std::vector<Tour> benchmarks = benchmark_tours(instances, method);

    ExperimentReport report;
    report.split = split;
    for (const auto& file : files)
        report.instance_files.push_back(file.string());
    fs::path meta_path = out / "run_meta.json";
    if (fs::exists(meta_path)) {
        report.config_echo = json::parse(read_text_file(meta_path));
        if (report.config_echo.contains("train"))
            report.seed = report.config_echo["train"].value("seed", std::uint64_t{0});
    }

    bool any_model = false;
    for (const std::string& name : {std::string("pqn"), std::string("ptrnet")}) {
        fs::path checkpoint = out / "checkpoints" / (name + ".json");
        if (!fs::exists(checkpoint))
            continue;
        any_model = true;
        ModelParams model = load_checkpoint(checkpoint);
        MethodReport method_report;
        method_report.name = name;
        double j_sum = 0.0, sigma_sum = 0.0;
        Rng rng(0); // greedy rollouts draw nothing
        for (std::size_t i = 0; i < instances.size(); ++i) {
            RolloutResult greedy = rollout(model, instances[i], SelectMode::Greedy, rng);
            TourMetrics metrics = evaluate_tour_metrics(instances[i], greedy.tour, benchmarks[i]);
            method_report.j_per_instance.push_back(metrics.j);
            method_report.sigma_b_per_instance.push_back(metrics.sigma_b);
            method_report.tours.push_back(greedy.tour);
            j_sum += metrics.j;
            sigma_sum += metrics.sigma_b;
        }
        method_report.j_mean = j_sum / static_cast<double>(instances.size());
        method_report.sigma_b_mean = sigma_sum / static_cast<double>(instances.size());
        report.methods.push_back(std::move(method_report));
    }
    if (!any_model)
        throw FileMissing("no checkpoints under " + (out / "checkpoints").string() +
                          " (run train first)");

    MethodReport bench_report;
    bench_report.name = "benchmark";
    double j_sum = 0.0;
    for (std::size_t i = 0; i < instances.size(); ++i) {
        double j = tour_cost(instances[i], benchmarks[i]);
        bench_report.j_per_instance.push_back(j);
        bench_report.tours.push_back(benchmarks[i]);
        j_sum += j;
    }
    bench_report.j_mean = j_sum / static_cast<double>(instances.size());
    report.methods.push_back(std::move(bench_report));

    write_report(out / "report.json", report);
    std::string table = table_csv(report);
    write_text_file(out / "table.csv", table);
    std::cout << table;
    return 0;
}

int cmd_report(const std::string& out_dir) {
    fs::path out(out_dir);
    json meta;
    try {
        meta = json::parse(read_text_file(out / "run_meta.json"));
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("run_meta.json: ") + e.what());
    }
    std::optional<std::pair<double, double>> window;
    if (meta.contains("perturb"))
        window = std::make_pair(meta["perturb"]["first_epoch"].get<double>(),
                                meta["perturb"]["last_epoch"].get<double>());

    struct Loaded {
        std::string name;
        std::string color;
        TrainingHistory history;
    };
    std::vector<Loaded> models;
    const std::pair<const char*, const char*> model_colors[] = {{"pqn", "#1f77b4"},
                                                                {"ptrnet", "#d62728"}};
    for (const auto& [name, color] : model_colors) {
        fs::path csv = out / (std::string("history_") + name + ".csv");
        if (fs::exists(csv))
            models.push_back({name, color, read_history_csv(csv)});
    }
    if (models.empty())
        throw FileMissing("no history CSVs under " + out.string() + " (run train first)");

    auto series_of = [](const Loaded& m, double EpochRecord::*field) {
        PlotSeries s;
        s.label = m.name;
        s.color = m.color;
        for (const EpochRecord& r : m.history.epochs) {
            s.x.push_back(r.epoch);
            s.y.push_back(r.*field);
        }
        return s;
    };

    const std::tuple<const char*, const char*, double EpochRecord::*> charts[] = {
        {"metrics_J.svg", "mean sampled tour cost J", &EpochRecord::j_mean},
        {"metrics_entropy.svg", "mean policy entropy H (nats)", &EpochRecord::entropy_mean},
        {"metrics_Q.svg", "mean clamped Q", &EpochRecord::q_mean},
        {"metrics_sigmaB.svg", "mean deviation from benchmark", &EpochRecord::sigma_b},
    };
    for (const auto& [file, title, field] : charts) {
        std::vector<PlotSeries> series;
        for (const Loaded& m : models)
            series.push_back(series_of(m, field));
        write_text_file(out / "plots" / file,
                        svg_line_chart(title, series, "epoch", "value", window));
    }

    // Loss profiles: epoch-indexed supervised + TD, and step-indexed TD.
    {
        std::vector<PlotSeries> series;
        for (const Loaded& m : models) {
            PlotSeries sup = series_of(m, &EpochRecord::sup_loss);
            sup.label = m.name + " sup";
            sup.color = m.color;
            series.push_back(std::move(sup));
        }
        for (const Loaded& m : models)
            if (m.name == "pqn") {
                PlotSeries td = series_of(m, &EpochRecord::td_loss);
                td.label = "pqn td";
                td.color = "#2ca02c";
                series.push_back(std::move(td));
            }
        write_text_file(out / "plots" / "loss_epochs.svg",
                        svg_line_chart("loss profiles over epochs", series, "epoch", "loss",
                                       window));
    }
    {
        fs::path steps = out / "steps_pqn.csv";
        if (fs::exists(steps)) {
            PlotSeries td;
            td.label = "td loss";
            td.color = "#2ca02c";
            std::istringstream in(read_text_file(steps));
            std::string line;
            std::getline(in, line); // header
            std::optional<std::pair<double, double>> step_window;
            double window_lo = 0, window_hi = 0;
            while (std::getline(in, line)) {
                if (line.empty())
                    continue;
                auto fields = split_on(line, ',');
                if (fields.size() != 3)
                    throw ParseError("steps_pqn.csv: expected 3 columns");
                double step = parse_double(fields[0]);
                double epoch = parse_double(fields[1]);
                td.x.push_back(step);
                td.y.push_back(parse_double(fields[2]));
                if (window && epoch >= window->first && epoch < window->second) {
                    if (!step_window)
                        window_lo = step;
                    window_hi = step;
                    step_window = std::make_pair(window_lo, window_hi);
                }
            }
            write_text_file(out / "plots" / "loss_steps.svg",
                            svg_line_chart("TD loss per update step", {td}, "update step",
                                           "loss", step_window));
        }
    }

    // Path drawings from the evaluation report.
    ExperimentReport report = read_report(out / "report.json");
    for (std::size_t i = 0; i < report.instance_files.size(); ++i) {
        TspInstance instance = read_instance_file(report.instance_files[i]);
        if (!instance.coords)
            continue;
        std::vector<std::pair<std::string, Tour>> panels;
        for (const MethodReport& m : report.methods)
            panels.emplace_back(m.name, m.tours.at(i));
        char name[64];
        std::snprintf(name, sizeof(name), "path_instance_%03zu.svg", i);
        write_text_file(out / "plots" / name, svg_tour_panels(instance, panels));
    }
    std::cout << "plots written under " << (out / "plots").string() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Pointer Q-Network TSP toolkit"};
    app.require_subcommand(1);

    RunOptions gen_opt;
    CLI::App* generate = app.add_subcommand("generate", "write random instance files");
    generate->add_option("--out", gen_opt.out, "workspace directory")->required();
    generate->add_option("--n", gen_opt.n, "cities per instance");
    generate->add_option("--count", gen_opt.count, "instances per split");
    generate->add_option("--seed", gen_opt.seed, "base seed (PQN_SEED overrides)");
    generate->add_option("--kind", gen_opt.kind, "experiment preset")
        ->check(CLI::IsMember({"tsp20", "tsp50", "perturbed-tsp20", "custom"}));

    RunOptions train_opt;
    CLI::App* train = app.add_subcommand("train", "train models on the train split");
    add_train_flags(train, train_opt);

    RunOptions perturb_opt;
    CLI::App* perturb =
        app.add_subcommand("perturb", "train with cost perturbation in an epoch window");
    add_train_flags(perturb, perturb_opt);
    perturb->add_option("--perturb-range", perturb_opt.perturb_range,
                        "epoch window A:B (A inclusive, B exclusive)");
    perturb->add_option("--perturb-bounds", perturb_opt.perturb_bounds,
                        "uniform multiplier bounds LO:HI");
    CLI::Option* pseed_opt =
        perturb->add_option("--perturb-seed", perturb_opt.perturb_seed,
                            "perturbation draw seed (default derived from --seed)");

    std::string eval_out, eval_split = "eval", eval_benchmark = "two_opt";
    CLI::App* evaluate = app.add_subcommand("evaluate", "greedy evaluation and report");
    evaluate->add_option("--out", eval_out, "workspace directory")->required();
    evaluate->add_option("--split", eval_split, "instance split to evaluate")
        ->check(CLI::IsMember({"train", "eval", "test"}));
    evaluate->add_option("--benchmark", eval_benchmark, "benchmark tour method")
        ->check(CLI::IsMember({"two_opt", "held_karp"}));

    std::string report_out;
    CLI::App* report = app.add_subcommand("report", "render SVG plots from stored series");
    report->add_option("--out", report_out, "workspace directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    perturb_opt.perturb_seed_given = pseed_opt->count() > 0;

    try {
        if (generate->parsed()) {
            if (gen_opt.kind != "custom") {
                ExperimentConfig preset = ExperimentConfig::preset(gen_opt.kind);
                if (generate->count("--n") == 0)
                    gen_opt.n = preset.n;
                if (generate->count("--count") == 0)
                    gen_opt.count = preset.instance_count;
            }
            return cmd_generate(gen_opt);
        }
        if (train->parsed())
            return cmd_train(train_opt, false);
        if (perturb->parsed())
            return cmd_train(perturb_opt, true);
        if (evaluate->parsed())
            return cmd_evaluate(eval_out, eval_split, eval_benchmark);
        if (report->parsed())
            return cmd_report(report_out);
    } catch (const FileMissing& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
