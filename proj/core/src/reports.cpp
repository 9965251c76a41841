#include <array>
#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>
#include <ostream>

#include "flowcast/errors.hpp"
#include "flowcast/experiments.hpp"

namespace flowcast {

namespace {

using json = nlohmann::ordered_json;

constexpr std::array<PublishedScore, 3> kPublishedComparison{{
    {"svr", 136.022, 63.939, 0.917},
    {"mlp", 99.359, 35.248, 0.956},
    {"lstm", 82.007, 27.752, 0.970},
}};

constexpr std::array<PublishedAblation, 7> kPublishedAblation{{
    {"flow", 148.864, 43.188, 0.900},
    {"flow+rain", 82.007, 27.752, 0.970},
    {"flow+areal", 94.008, 29.751, 0.960},
    {"flow+rain+areal", 85.772, 30.138, 0.967},
    {"rain", 274.344, 156.489, 0.661},
    {"areal", 282.146, 157.497, 0.639},
    {"rain+areal", 282.126, 152.190, 0.641},
}};

constexpr const char* kReferenceNote =
    "Published scores on the original catchment records. That data is not distributed, so these "
    "values are reference constants only and are not recomputed by this run.";

std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    return out;
}

void write_json(const std::filesystem::path& path, const json& j) {
    auto out = open_out(path);
    out << j.dump(2) << '\n';
}

std::string hex64(std::uint64_t v) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

json report_json(const EvalReport& r) {
    json j;
    j["run_id"] = r.run_id;
    j["n"] = r.n;
    j["rmse"] = r.rmse;
    j["mae"] = r.mae;
    j["r2"] = r.r2;
    return j;
}

json run_settings(const ExperimentConfig& c) {
    json j;
    j["data"] = c.data;
    if (c.data == "synthetic") {
        j["data_seed"] = c.data_seed;
        j["synthetic_hours"] = c.synthetic.n_hours;
    }
    j["seed"] = c.train.seed;
    j["encoder_steps"] = c.encoder_steps;
    j["predict_step"] = c.predict_step;
    j["inputs"] = c.inputs.label();
    j["r2_convention"] = std::string(to_string(c.r2_convention));
    j["scale_fit"] = std::string(to_string(c.scale_fit));
    return j;
}

json comparison_reference() {
    json j;
    j["note"] = kReferenceNote;
    j["recomputable"] = false;
    json rows = json::array();
    for (const auto& p : kPublishedComparison) {
        rows.push_back({{"model", std::string(p.model)}, {"rmse", p.rmse}, {"mae", p.mae}, {"r2", p.r2}});
    }
    j["scores"] = std::move(rows);
    return j;
}

}  // namespace

std::span<const PublishedScore> published_comparison() { return kPublishedComparison; }
std::span<const PublishedAblation> published_ablation() { return kPublishedAblation; }

void write_comparative_report(const std::filesystem::path& path, const ComparativeResult& result,
                              const ExperimentConfig& config) {
    json j;
    j["experiment"] = "comparative";
    json settings = run_settings(config);
    settings["n_train"] = result.n_train;
    settings["n_test"] = result.n_test;
    settings["data_fingerprint"] = hex64(result.data_fingerprint);
    settings["svr_cap"] = config.svr_cap;
    j["settings"] = std::move(settings);

    json models = json::array();
    for (const auto& run : result.runs) {
        json m;
        m["model"] = std::string(to_string(run.kind));
        m["status"] = run.ok() ? "ok" : "failed";
        m["train_rows"] = run.train_rows_used;
        m["data_fingerprint"] = hex64(run.data_fingerprint);
        if (run.ok()) {
            m["report"] = report_json(*run.report);
        } else {
            m["failure"] = std::string(to_string(run.failure));
            m["error"] = run.error;
        }
        if (!run.epochs.empty()) m["epochs"] = run.epochs.size();
        if (run.model) {
            if (const auto* svr = std::get_if<SvrModel>(&*run.model)) {
                m["svr"] = {{"support_vectors", svr->support_vectors.rows()},
                            {"iterations", svr->diagnostics.iterations},
                            {"max_violation", svr->diagnostics.max_violation},
                            {"c", svr->c},
                            {"gamma", svr->gamma},
                            {"epsilon", svr->epsilon_tube}};
            }
        }
        models.push_back(std::move(m));
    }
    j["models"] = std::move(models);
    j["ordering_by_r2"] = result.ordering();
    j["published_reference"] = comparison_reference();
    write_json(path, j);
}

void write_trace_csv(const std::filesystem::path& path, const ComparativeResult& result) {
    auto out = open_out(path);
    out << "model,timestamp,observed,predicted\n";
    for (const auto& run : result.runs) {
        if (!run.ok()) continue;
        const std::string name(to_string(run.kind));
        for (std::size_t i = 0; i < result.observed.size(); ++i) {
            out << name << ',' << format_timestamp(result.timestamps[i]) << ',' << num(result.observed[i])
                << ',' << num(run.predictions[i]) << '\n';
        }
    }
}

void write_epoch_logs(const std::filesystem::path& path, const ComparativeResult& result,
                      bool with_timing) {
    auto out = open_out(path);
    out << "model,epoch,train_loss,test_loss,seconds\n";
    char buf[64];
    for (const auto& run : result.runs) {
        for (const auto& e : run.epochs) {
            out << to_string(run.kind) << ',' << e.epoch << ',' << num(e.train_loss) << ','
                << num(e.test_loss) << ',';
            if (with_timing) {
                std::snprintf(buf, sizeof(buf), "%.6f", e.wall_time.count());
                out << buf;
            }
            out << '\n';
        }
    }
}

void write_ablation_report(const std::filesystem::path& path, const AblationResult& result,
                           const ExperimentConfig& config) {
    json j;
    j["experiment"] = "input_ablation";
    j["settings"] = run_settings(config);
    json cells = json::array();
    for (const auto& c : result.cells) {
        json cell;
        cell["inputs"] = c.inputs.label();
        cell["n_features"] = c.n_features;
        if (c.report) {
            cell["status"] = "ok";
            cell["report"] = report_json(*c.report);
        } else {
            cell["status"] = "failed";
            cell["failure"] = std::string(to_string(c.failure));
            cell["error"] = c.error;
        }
        cells.push_back(std::move(cell));
    }
    j["cells"] = std::move(cells);

    json ref;
    ref["note"] = kReferenceNote;
    ref["recomputable"] = false;
    json rows = json::array();
    for (const auto& p : kPublishedAblation) {
        rows.push_back({{"inputs", std::string(p.inputs)}, {"rmse", p.rmse}, {"mae", p.mae}, {"r2", p.r2}});
    }
    ref["scores"] = std::move(rows);
    j["published_reference"] = std::move(ref);
    write_json(path, j);
}

void write_ablation_tables(std::ostream& out, const AblationResult& result) {
    struct Metric {
        const char* title;
        double EvalReport::*field;
    };
    const Metric metrics[] = {{"RMSE", &EvalReport::rmse}, {"MAE", &EvalReport::mae}, {"R^2", &EvalReport::r2}};
    const char* columns[] = {"none", "rain", "areal", "rain+areal"};
    char buf[64];
    for (const auto& m : metrics) {
        out << m.title << '\n';
        std::snprintf(buf, sizeof(buf), "%-14s", "");
        out << buf;
        for (const char* c : columns) {
            std::snprintf(buf, sizeof(buf), "%12s", c);
            out << buf;
        }
        out << '\n';
        for (bool flow : {true, false}) {
            std::snprintf(buf, sizeof(buf), "%-14s", flow ? "with flow" : "without flow");
            out << buf;
            for (int col = 0; col < 4; ++col) {
                const VariableSet vs{flow, col == 1 || col == 3, col == 2 || col == 3};
                const AblationCell* cell = vs.empty() ? nullptr : result.find(vs);
                if (cell && cell->report) {
                    std::snprintf(buf, sizeof(buf), "%12.3f", (*cell->report).*(m.field));
                } else {
                    std::snprintf(buf, sizeof(buf), "%12s", vs.empty() ? "" : "failed");
                }
                out << buf;
            }
            out << '\n';
        }
        out << '\n';
    }
}

void write_ablation_csv(const std::filesystem::path& path, const AblationResult& result) {
    auto out = open_out(path);
    out << "inputs,n_features,n,rmse,mae,r2,error\n";
    for (const auto& c : result.cells) {
        out << c.inputs.label() << ',' << c.n_features << ',';
        if (c.report) {
            out << c.report->n << ',' << num(c.report->rmse) << ',' << num(c.report->mae) << ','
                << num(c.report->r2) << ",\n";
        } else {
            out << ",,,," << to_string(c.failure) << '\n';
        }
    }
}

void write_sweep_csv(const std::filesystem::path& path, const SweepResult& result) {
    auto out = open_out(path);
    out << "parameter,value,model,n,rmse,mae,r2,error\n";
    for (const auto& c : result.cells) {
        out << result.parameter << ',' << c.value << ',' << to_string(c.model) << ',';
        if (c.report) {
            out << c.report->n << ',' << num(c.report->rmse) << ',' << num(c.report->mae) << ','
                << num(c.report->r2) << ",\n";
        } else {
            out << ",,,," << to_string(c.failure) << '\n';
        }
    }
}

void write_sweep_report(const std::filesystem::path& path, const SweepResult& result,
                        const ExperimentConfig& config) {
    json j;
    j["experiment"] = "sweep";
    j["parameter"] = result.parameter;
    j["values"] = result.values;
    j["settings"] = run_settings(config);
    json cells = json::array();
    for (const auto& c : result.cells) {
        json cell;
        cell["value"] = c.value;
        cell["model"] = std::string(to_string(c.model));
        if (c.report) {
            cell["status"] = "ok";
            cell["report"] = report_json(*c.report);
        } else {
            cell["status"] = "failed";
            cell["failure"] = std::string(to_string(c.failure));
            cell["error"] = c.error;
        }
        cells.push_back(std::move(cell));
    }
    j["cells"] = std::move(cells);

    // Rank correlation between the swept value and R^2 for each model, where defined.
    json trend = json::object();
    for (ModelKind kind : config.models) {
        std::vector<double> xs, ys;
        for (const auto& c : result.cells) {
            if (c.model == kind && c.report) {
                xs.push_back(static_cast<double>(c.value));
                ys.push_back(c.report->r2);
            }
        }
        json t;
        if (xs.size() >= 2) {
            try {
                t["spearman_value_r2"] = spearman(xs, ys);
            } catch (const MetricError&) {
                t["spearman_value_r2"] = nullptr;
            }
            const auto best = std::max_element(ys.begin(), ys.end()) - ys.begin();
            t["best_r2_value"] = static_cast<std::size_t>(xs[static_cast<std::size_t>(best)]);
        }
        trend[std::string(to_string(kind))] = std::move(t);
    }
    j["trend"] = std::move(trend);
    write_json(path, j);
}

void write_epoch_sweep(const std::filesystem::path& dir, const EpochSweepResult& result,
                       const ExperimentConfig& config) {
    {
        auto out = open_out(dir / "epochs.csv");
        write_epoch_csv(out, result.logs, config.record_timing);
    }
    json j;
    j["experiment"] = "epoch_sweep";
    j["settings"] = run_settings(config);
    j["grid"] = result.grid;
    j["best_test_epoch"] = result.best_test_epoch;
    json reports = json::array();
    for (const auto& r : result.reports) reports.push_back(report_json(r));
    j["reports"] = std::move(reports);
    write_json(dir / "report.json", j);

    auto out = open_out(dir / "sweep.csv");
    out << "parameter,value,model,n,rmse,mae,r2,error\n";
    for (std::size_t i = 0; i < result.reports.size(); ++i) {
        const auto& r = result.reports[i];
        out << "epochs," << result.grid[i] << ",lstm," << r.n << ',' << num(r.rmse) << ',' << num(r.mae)
            << ',' << num(r.r2) << ",\n";
    }
}

void write_resolved_config(const std::filesystem::path& path, const ExperimentConfig& config) {
    auto out = open_out(path);
    config.to_key_values().write(out);
}

}  // namespace flowcast
