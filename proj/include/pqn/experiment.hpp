#pragma once

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pqn/model.hpp"
#include "pqn/train.hpp"

namespace pqn {

using nlohmann::json;

/// Malformed file contents; the message names the offending field.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A required file or directory does not exist.
struct FileMissing : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Number formatting: shortest representation that round-trips exactly.
// ---------------------------------------------------------------------------

inline std::string format_double(double v) {
    char buf[32];
    auto result = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, result.ptr);
}

inline double parse_double(std::string_view s) {
    double v = 0.0;
    auto result = std::from_chars(s.data(), s.data() + s.size(), v);
    if (result.ec != std::errc() || result.ptr != s.data() + s.size())
        throw ParseError("not a number: '" + std::string(s) + "'");
    return v;
}

inline std::string read_text_file(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path))
        throw FileMissing("missing file: " + path.string());
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot open for writing: " + path.string());
    out << text;
    if (!out)
        throw std::runtime_error("write failed: " + path.string());
}

// ---------------------------------------------------------------------------
// Instance files: {"n": ..., "costs": [[...]], "coords": [[x,y]...]?, "seed"?}
// ---------------------------------------------------------------------------

inline void write_instance_file(const std::filesystem::path& path, const TspInstance& instance,
                                std::optional<std::uint64_t> seed = std::nullopt) {
    json doc;
    doc["n"] = instance.n;
    json costs = json::array();
    for (int i = 0; i < instance.n; ++i) {
        json row = json::array();
        for (int j = 0; j < instance.n; ++j)
            row.push_back(instance.cost(i, j));
        costs.push_back(std::move(row));
    }
    doc["costs"] = std::move(costs);
    if (instance.coords) {
        json coords = json::array();
        for (const auto& p : *instance.coords)
            coords.push_back(json::array({p[0], p[1]}));
        doc["coords"] = std::move(coords);
    }
    if (seed)
        doc["seed"] = *seed;
    write_text_file(path, doc.dump(2) + "\n");
}

inline TspInstance read_instance_file(const std::filesystem::path& path) {
    json doc;
    try {
        doc = json::parse(read_text_file(path));
    } catch (const json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    if (!doc.contains("n") || !doc["n"].is_number_integer())
        throw ParseError(path.string() + ": missing or invalid field 'n'");
    if (!doc.contains("costs") || !doc["costs"].is_array())
        throw ParseError(path.string() + ": missing or invalid field 'costs'");
    TspInstance instance;
    instance.n = doc["n"].get<int>();
    const json& costs = doc["costs"];
    if (static_cast<int>(costs.size()) != instance.n)
        throw ParseError(path.string() + ": field 'costs' must have n rows");
    instance.costs.assign(static_cast<std::size_t>(instance.n) * instance.n, 0.0);
    for (int i = 0; i < instance.n; ++i) {
        const json& row = costs[i];
        if (!row.is_array() || static_cast<int>(row.size()) != instance.n)
            throw ParseError(path.string() + ": field 'costs' must have n columns per row");
        for (int j = 0; j < instance.n; ++j)
            instance.cost(i, j) = row[j].get<double>();
    }
    if (doc.contains("coords")) {
        const json& coords = doc["coords"];
        if (!coords.is_array() || static_cast<int>(coords.size()) != instance.n)
            throw ParseError(path.string() + ": field 'coords' must have n rows");
        std::vector<std::array<double, 2>> points;
        for (const json& p : coords) {
            if (!p.is_array() || p.size() != 2)
                throw ParseError(path.string() + ": field 'coords' rows must be [x, y]");
            points.push_back({p[0].get<double>(), p[1].get<double>()});
        }
        instance.coords = std::move(points);
    }
    instance.validate(); // invariant enforcement: symmetry, diagonal, positivity
    return instance;
}

// ---------------------------------------------------------------------------
// Checkpoints: JSON map of parameter name -> {shape, row-major values},
// plus a "__meta__" entry describing the architecture.
// ---------------------------------------------------------------------------

inline void save_checkpoint(const std::filesystem::path& path, ModelParams& model) {
    json doc;
    doc["__meta__"] = {{"hidden", model.pointer.hidden},
                       {"q_hidden", model.qnet.W1.rows()},
                       {"gamma", model.gamma},
                       {"tempered", model.tempered}};
    model.for_each_param([&](const std::string& name, ParamTensor& p) {
        doc[name] = {{"shape", p.shape}, {"values", p.values}};
    });
    write_text_file(path, doc.dump() + "\n");
}

inline ModelParams load_checkpoint(const std::filesystem::path& path) {
    json doc;
    try {
        doc = json::parse(read_text_file(path));
    } catch (const json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    if (!doc.contains("__meta__"))
        throw ParseError(path.string() + ": missing field '__meta__'");
    const json& meta = doc["__meta__"];
    Rng rng(0); // values are overwritten below
    ModelParams model = ModelParams::make(meta.at("hidden").get<std::size_t>(),
                                          meta.at("q_hidden").get<std::size_t>(),
                                          meta.at("gamma").get<double>(),
                                          meta.at("tempered").get<bool>(), rng);
    model.for_each_param([&](const std::string& name, ParamTensor& p) {
        if (!doc.contains(name))
            throw ParseError(path.string() + ": missing parameter '" + name + "'");
        const json& entry = doc[name];
        auto shape = entry.at("shape").get<std::vector<std::size_t>>();
        if (shape != p.shape)
            throw ParseError(path.string() + ": shape mismatch for parameter '" + name + "'");
        auto values = entry.at("values").get<Vec>();
        if (values.size() != p.size())
            throw ParseError(path.string() + ": value count mismatch for parameter '" + name +
                             "'");
        p.values = std::move(values);
    });
    return model;
}

// ---------------------------------------------------------------------------
// History CSVs
// ---------------------------------------------------------------------------

inline constexpr const char* kHistoryHeader =
    "epoch,J_mean,entropy_mean,Q_mean,td_loss,sup_loss,sigma_B";

inline std::string history_csv(const TrainingHistory& history) {
    std::string out = kHistoryHeader;
    out += '\n';
    for (const EpochRecord& r : history.epochs) {
        out += std::to_string(r.epoch);
        out += ',';
        out += format_double(r.j_mean);
        out += ',';
        out += format_double(r.entropy_mean);
        out += ',';
        out += format_double(r.q_mean);
        out += ',';
        out += format_double(r.td_loss);
        out += ',';
        out += format_double(r.sup_loss);
        out += ',';
        out += format_double(r.sigma_b);
        out += '\n';
    }
    return out;
}

inline void emit_history_csv(const TrainingHistory& history, const std::filesystem::path& path) {
    if (history.epochs.empty())
        throw std::invalid_argument("emit_history_csv: empty history");
    write_text_file(path, history_csv(history));
}

inline std::vector<std::string> split_on(const std::string& line, char sep) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, sep))
        fields.push_back(field);
    return fields;
}

inline TrainingHistory read_history_csv(const std::filesystem::path& path) {
    std::istringstream in(read_text_file(path));
    std::string line;
    if (!std::getline(in, line) || line != kHistoryHeader)
        throw ParseError(path.string() + ": bad history header");
    TrainingHistory history;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        auto fields = split_on(line, ',');
        if (fields.size() != 7)
            throw ParseError(path.string() + ": expected 7 columns");
        EpochRecord r;
        r.epoch = static_cast<int>(parse_double(fields[0]));
        r.j_mean = parse_double(fields[1]);
        r.entropy_mean = parse_double(fields[2]);
        r.q_mean = parse_double(fields[3]);
        r.td_loss = parse_double(fields[4]);
        r.sup_loss = parse_double(fields[5]);
        r.sigma_b = parse_double(fields[6]);
        history.epochs.push_back(r);
    }
    return history;
}

/// Step-indexed TD loss series, one row per update.
inline std::string steps_csv(const TrainingHistory& history) {
    std::string out = "step,epoch,td_loss\n";
    for (const StepRecord& r : history.td_steps) {
        out += std::to_string(r.step);
        out += ',';
        out += std::to_string(r.epoch);
        out += ',';
        out += format_double(r.td_loss);
        out += '\n';
    }
    return out;
}

inline void emit_steps_csv(const TrainingHistory& history, const std::filesystem::path& path) {
    write_text_file(path, steps_csv(history));
}

// ---------------------------------------------------------------------------
// Train configuration <-> JSON
// ---------------------------------------------------------------------------

inline json to_json(const TrainConfig& cfg) {
    return {{"hidden", cfg.hidden},
            {"q_hidden", cfg.q_hidden},
            {"batch_size", cfg.batch_size},
            {"lr_ptr", cfg.lr_ptr},
            {"lr_q", cfg.lr_q},
            {"gamma", cfg.gamma},
            {"epochs", cfg.epochs},
            {"steps_per_epoch", cfg.steps_per_epoch},
            {"target_sync", cfg.target_sync},
            {"replay_capacity", cfg.replay_capacity},
            {"seed", cfg.seed},
            {"td_updates_encoder", cfg.td_updates_encoder},
            {"supervised_uses_tempered", cfg.supervised_uses_tempered},
            {"start_city", cfg.start_city}};
}

inline TrainConfig train_config_from_json(const json& doc) {
    TrainConfig cfg;
    cfg.hidden = doc.at("hidden").get<int>();
    cfg.q_hidden = doc.at("q_hidden").get<int>();
    cfg.batch_size = doc.at("batch_size").get<int>();
    cfg.lr_ptr = doc.at("lr_ptr").get<double>();
    cfg.lr_q = doc.at("lr_q").get<double>();
    cfg.gamma = doc.at("gamma").get<double>();
    cfg.epochs = doc.at("epochs").get<int>();
    cfg.steps_per_epoch = doc.at("steps_per_epoch").get<int>();
    cfg.target_sync = doc.at("target_sync").get<int>();
    cfg.replay_capacity = doc.at("replay_capacity").get<int>();
    cfg.seed = doc.at("seed").get<std::uint64_t>();
    cfg.td_updates_encoder = doc.at("td_updates_encoder").get<bool>();
    cfg.supervised_uses_tempered = doc.at("supervised_uses_tempered").get<bool>();
    cfg.start_city = doc.at("start_city").get<int>();
    return cfg;
}

// ---------------------------------------------------------------------------
// Evaluation reports
// ---------------------------------------------------------------------------

struct MethodReport {
    std::string name;
    double j_mean = 0.0;
    std::optional<double> sigma_b_mean; // absent for the benchmark itself
    std::vector<double> j_per_instance;
    std::vector<int> sigma_b_per_instance;
    std::vector<Tour> tours;
};

struct ExperimentReport {
    json config_echo;
    std::uint64_t seed = 0;
    std::string split;
    std::vector<std::string> instance_files;
    std::vector<MethodReport> methods;
};

inline json to_json(const ExperimentReport& report) {
    json doc;
    doc["config"] = report.config_echo;
    doc["seed"] = report.seed;
    doc["split"] = report.split;
    doc["instances"] = report.instance_files;
    json methods = json::object();
    for (const MethodReport& m : report.methods) {
        json entry;
        entry["j_mean"] = m.j_mean;
        entry["j_per_instance"] = m.j_per_instance;
        if (m.sigma_b_mean) {
            entry["sigma_b_mean"] = *m.sigma_b_mean;
            entry["sigma_b_per_instance"] = m.sigma_b_per_instance;
        }
        json tours = json::array();
        for (const Tour& t : m.tours)
            tours.push_back(t.order);
        entry["tours"] = std::move(tours);
        methods[m.name] = std::move(entry);
    }
    doc["methods"] = std::move(methods);
    return doc;
}

inline ExperimentReport report_from_json(const json& doc) {
    ExperimentReport report;
    report.config_echo = doc.at("config");
    report.seed = doc.at("seed").get<std::uint64_t>();
    report.split = doc.value("split", std::string());
    report.instance_files = doc.at("instances").get<std::vector<std::string>>();
    for (const auto& [name, entry] : doc.at("methods").items()) {
        MethodReport m;
        m.name = name;
        m.j_mean = entry.at("j_mean").get<double>();
        m.j_per_instance = entry.at("j_per_instance").get<std::vector<double>>();
        if (entry.contains("sigma_b_mean")) {
            m.sigma_b_mean = entry.at("sigma_b_mean").get<double>();
            m.sigma_b_per_instance = entry.at("sigma_b_per_instance").get<std::vector<int>>();
        }
        for (const auto& order : entry.at("tours"))
            m.tours.push_back(Tour{order.get<std::vector<int>>()});
        report.methods.push_back(std::move(m));
    }
    // JSON objects sort keys alphabetically; restore the table column order.
    auto rank = [](const std::string& name) {
        if (name == "pqn")
            return 0;
        if (name == "ptrnet")
            return 1;
        if (name == "benchmark")
            return 3;
        return 2;
    };
    std::stable_sort(report.methods.begin(), report.methods.end(),
                     [&](const MethodReport& a, const MethodReport& b) {
                         return rank(a.name) < rank(b.name);
                     });
    return report;
}

inline void write_report(const std::filesystem::path& path, const ExperimentReport& report) {
    write_text_file(path, to_json(report).dump(2) + "\n");
}

inline ExperimentReport read_report(const std::filesystem::path& path) {
    try {
        return report_from_json(json::parse(read_text_file(path)));
    } catch (const json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

/// Summary table mirroring the comparison layout: one column per method,
/// rows J and sigma_B (blank where a method has no deviation from itself).
inline std::string table_csv(const ExperimentReport& report) {
    std::string header = "metric";
    std::string j_row = "J";
    std::string sigma_row = "sigma_B";
    for (const MethodReport& m : report.methods) {
        header += ',' + m.name;
        j_row += ',' + format_double(m.j_mean);
        sigma_row += ',';
        if (m.sigma_b_mean)
            sigma_row += format_double(*m.sigma_b_mean);
    }
    return header + '\n' + j_row + '\n' + sigma_row + '\n';
}

// ---------------------------------------------------------------------------
// SVG plotting
// ---------------------------------------------------------------------------

struct PlotSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    std::string color = "#1f77b4";
};

namespace detail {

inline std::string svg_coord(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

} // namespace detail

/// A single line chart with an optional shaded x-window (used to mark the
/// perturbation epochs).
inline std::string svg_line_chart(const std::string& title,
                                  const std::vector<PlotSeries>& series,
                                  const std::string& x_label, const std::string& y_label,
                                  std::optional<std::pair<double, double>> shade_x =
                                      std::nullopt) {
    const double width = 640, height = 360;
    const double left = 60, right = 20, top = 36, bottom = 42;
    double x_min = std::numeric_limits<double>::infinity(), x_max = -x_min;
    double y_min = x_min, y_max = -x_min;
    for (const PlotSeries& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            x_min = std::min(x_min, s.x[i]);
            x_max = std::max(x_max, s.x[i]);
            y_min = std::min(y_min, s.y[i]);
            y_max = std::max(y_max, s.y[i]);
        }
    if (!std::isfinite(x_min)) {
        x_min = 0;
        x_max = 1;
        y_min = 0;
        y_max = 1;
    }
    if (x_max == x_min)
        x_max = x_min + 1;
    if (y_max == y_min)
        y_max = y_min + 1;
    auto sx = [&](double x) {
        return left + (x - x_min) / (x_max - x_min) * (width - left - right);
    };
    auto sy = [&](double y) {
        return height - bottom - (y - y_min) / (y_max - y_min) * (height - top - bottom);
    };

    std::ostringstream svg;
    svg << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='" << height
        << "' viewBox='0 0 " << width << ' ' << height << "'>\n";
    svg << "<rect width='100%' height='100%' fill='white'/>\n";
    if (shade_x && shade_x->second > shade_x->first) {
        double a = std::max(x_min, shade_x->first);
        double b = std::min(x_max, shade_x->second);
        if (b > a)
            svg << "<rect x='" << detail::svg_coord(sx(a)) << "' y='" << top << "' width='"
                << detail::svg_coord(sx(b) - sx(a)) << "' height='"
                << detail::svg_coord(height - top - bottom)
                << "' fill='#fbe3b5' opacity='0.7'/>\n";
    }
    svg << "<text x='" << width / 2 << "' y='20' text-anchor='middle' font-size='15' "
        << "font-family='sans-serif'>" << title << "</text>\n";
    // axes
    svg << "<line x1='" << left << "' y1='" << height - bottom << "' x2='" << width - right
        << "' y2='" << height - bottom << "' stroke='black'/>\n";
    svg << "<line x1='" << left << "' y1='" << top << "' x2='" << left << "' y2='"
        << height - bottom << "' stroke='black'/>\n";
    svg << "<text x='" << width / 2 << "' y='" << height - 8
        << "' text-anchor='middle' font-size='12' font-family='sans-serif'>" << x_label
        << "</text>\n";
    svg << "<text x='16' y='" << height / 2
        << "' text-anchor='middle' font-size='12' font-family='sans-serif' transform='rotate(-90 "
           "16 "
        << height / 2 << ")'>" << y_label << "</text>\n";
    // tick labels at the extremes
    svg << "<text x='" << left << "' y='" << height - bottom + 16
        << "' font-size='10' font-family='sans-serif'>" << format_double(x_min) << "</text>\n";
    svg << "<text x='" << width - right << "' y='" << height - bottom + 16
        << "' text-anchor='end' font-size='10' font-family='sans-serif'>" << format_double(x_max)
        << "</text>\n";
    svg << "<text x='" << left - 4 << "' y='" << height - bottom
        << "' text-anchor='end' font-size='10' font-family='sans-serif'>" << format_double(y_min)
        << "</text>\n";
    svg << "<text x='" << left - 4 << "' y='" << top + 10
        << "' text-anchor='end' font-size='10' font-family='sans-serif'>" << format_double(y_max)
        << "</text>\n";
    // series
    double legend_y = top + 6;
    for (const PlotSeries& s : series) {
        if (!s.x.empty()) {
            svg << "<polyline fill='none' stroke='" << s.color << "' stroke-width='1.5' points='";
            for (std::size_t i = 0; i < s.x.size(); ++i) {
                if (i)
                    svg << ' ';
                svg << detail::svg_coord(sx(s.x[i])) << ',' << detail::svg_coord(sy(s.y[i]));
            }
            svg << "'/>\n";
        }
        svg << "<rect x='" << width - right - 130 << "' y='" << legend_y - 9
            << "' width='12' height='4' fill='" << s.color << "'/>\n";
        svg << "<text x='" << width - right - 112 << "' y='" << legend_y
            << "' font-size='11' font-family='sans-serif'>" << s.label << "</text>\n";
        legend_y += 16;
    }
    svg << "</svg>\n";
    return svg.str();
}

/// Side-by-side tour drawings over the instance coordinates, one panel per
/// named tour.
inline std::string svg_tour_panels(const TspInstance& instance,
                                   const std::vector<std::pair<std::string, Tour>>& panels) {
    if (!instance.coords)
        throw std::invalid_argument("svg_tour_panels: instance has no coordinates");
    const double panel = 240, margin = 26, gap = 12;
    const double width = panels.size() * (panel + gap) + gap;
    const double height = panel + 2 * margin + 14;
    std::ostringstream svg;
    svg << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='" << height
        << "' viewBox='0 0 " << width << ' ' << height << "'>\n";
    svg << "<rect width='100%' height='100%' fill='white'/>\n";
    for (std::size_t p = 0; p < panels.size(); ++p) {
        double x0 = gap + p * (panel + gap);
        double y0 = margin;
        auto px = [&](double x) { return x0 + x * panel; };
        auto py = [&](double y) { return y0 + (1.0 - y) * panel; };
        svg << "<rect x='" << x0 << "' y='" << y0 << "' width='" << panel << "' height='"
            << panel << "' fill='none' stroke='#cccccc'/>\n";
        const Tour& tour = panels[p].second;
        svg << "<polyline fill='none' stroke='#1f77b4' stroke-width='1.2' points='";
        for (std::size_t i = 0; i <= tour.order.size(); ++i) {
            int city = tour.order[i % tour.order.size()];
            if (i)
                svg << ' ';
            svg << detail::svg_coord(px((*instance.coords)[city][0])) << ','
                << detail::svg_coord(py((*instance.coords)[city][1]));
        }
        svg << "'/>\n";
        for (int city = 0; city < instance.n; ++city)
            svg << "<circle cx='" << detail::svg_coord(px((*instance.coords)[city][0]))
                << "' cy='" << detail::svg_coord(py((*instance.coords)[city][1]))
                << "' r='3' fill='" << (city == tour.order.front() ? "#d62728" : "#333333")
                << "'/>\n";
        svg << "<text x='" << x0 + panel / 2 << "' y='" << y0 - 8
            << "' text-anchor='middle' font-size='12' font-family='sans-serif'>"
            << panels[p].first << " (J=" << detail::svg_coord(tour_cost(instance, tour))
            << ")</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

// ---------------------------------------------------------------------------
// Experiment configuration and workspace presets
// ---------------------------------------------------------------------------

struct ExperimentConfig {
    std::string kind = "custom"; // tsp20 | tsp50 | perturbed-tsp20 | custom
    int n = 20;
    int instance_count = 5;
    TrainConfig train;
    BenchmarkMethod benchmark = BenchmarkMethod::TwoOpt;
    bool perturb = false;
    int perturb_first = 5;
    int perturb_last = 10; // exclusive
    double perturb_alpha = 0.9;
    double perturb_beta = 1.1;

    void validate() const {
        train.validate();
        if (n < 2)
            throw std::invalid_argument("ExperimentConfig: n must be at least 2");
        if (instance_count < 1)
            throw std::invalid_argument("ExperimentConfig: need at least one instance");
        if (benchmark == BenchmarkMethod::HeldKarp && n > 14)
            throw std::invalid_argument(
                "ExperimentConfig: the exact benchmark requires n <= 14");
        if (perturb && (perturb_first < 0 || perturb_last > train.epochs ||
                        perturb_first > perturb_last))
            throw std::invalid_argument("ExperimentConfig: perturbation window out of range");
    }

    /// Desk-scale presets for the named experiments.
    static ExperimentConfig preset(const std::string& kind) {
        ExperimentConfig cfg;
        cfg.kind = kind;
        if (kind == "tsp20" || kind == "perturbed-tsp20") {
            cfg.n = 20;
            cfg.instance_count = 5;
            cfg.train.epochs = 30;
            cfg.train.steps_per_epoch = 100;
            cfg.perturb = kind == "perturbed-tsp20";
        } else if (kind == "tsp50") {
            cfg.n = 50;
            cfg.instance_count = 12;
            cfg.train.epochs = 100;
            cfg.train.steps_per_epoch = 100;
        } else if (kind != "custom") {
            throw std::invalid_argument("ExperimentConfig: unknown experiment kind '" + kind +
                                        "'");
        }
        return cfg;
    }
};

inline const char* benchmark_name(BenchmarkMethod method) {
    return method == BenchmarkMethod::HeldKarp ? "held_karp" : "two_opt";
}

inline BenchmarkMethod benchmark_from_name(const std::string& name) {
    if (name == "held_karp")
        return BenchmarkMethod::HeldKarp;
    if (name == "two_opt")
        return BenchmarkMethod::TwoOpt;
    throw std::invalid_argument("unknown benchmark method '" + name + "'");
}

} // namespace pqn
