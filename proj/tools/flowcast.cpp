// flowcast: command-line front end for data generation, training and the
// experiment runners.

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "flowcast/errors.hpp"
#include "flowcast/experiments.hpp"

namespace fc = flowcast;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitDivergence = 4;

int exit_code(fc::FailureKind k) {
    switch (k) {
        case fc::FailureKind::None: return kExitOk;
        case fc::FailureKind::Config: return kExitConfig;
        case fc::FailureKind::Data: return kExitData;
        case fc::FailureKind::Divergence: return kExitDivergence;
        default: return kExitFailure;
    }
}

// Options shared by every experiment verb. Each named flag maps onto one config key.
struct CommonOptions {
    std::string config_file;
    std::vector<std::string> sets;
    std::map<std::string, std::string> flags;

    void add(CLI::App& app) {
        app.add_option("-c,--config", config_file, "key = value config file");
        app.add_option("--set", sets, "override any config key (key=value), repeatable");
        add_flag(app, "--data", "data", "'synthetic' or a CSV path");
        add_flag(app, "--data-seed", "data_seed", "seed of the synthetic generator");
        add_flag(app, "--hours", "synthetic_hours", "length of the synthetic series");
        add_flag(app, "--encoder-steps", "encoder_steps", "input window length in hours");
        add_flag(app, "--predict-step", "predict_step", "forecast horizon in hours");
        add_flag(app, "--inputs", "inputs", "variables, e.g. flow+rain");
        add_flag(app, "--models", "models", "comma-separated subset of svr,mlp,lstm,rnn");
        add_flag(app, "--epochs", "epochs", "training epochs");
        add_flag(app, "--batch-size", "batch_size", "mini-batch size");
        add_flag(app, "--learning-rate", "learning_rate", "optimizer step size");
        add_flag(app, "--optimizer", "optimizer", "momentum, adagrad, rmsprop or adam");
        add_flag(app, "--loss", "loss", "mse or mae");
        add_flag(app, "--hidden", "lstm_hidden", "LSTM hidden units");
        add_flag(app, "--out", "output_dir", "run directory");
    }

    void add_flag(CLI::App& app, const std::string& flag, const std::string& key, const std::string& help) {
        app.add_option_function<std::string>(
            flag, [this, key](const std::string& v) { flags[key] = v; }, help);
    }

    fc::ExperimentConfig resolve(std::optional<std::uint64_t> seed, fc::ExperimentConfig base = {}) const {
        fc::KeyValueConfig kv;
        if (!config_file.empty()) kv = fc::KeyValueConfig::load(config_file);
        for (const auto& [k, v] : flags) kv.set(k, v);
        for (const auto& s : sets) {
            const auto eq = s.find('=');
            if (eq == std::string::npos || eq == 0) {
                throw fc::ConfigError("--set expects key=value, got '" + s + "'");
            }
            kv.set(s.substr(0, eq), s.substr(eq + 1));
        }
        if (seed) kv.set("seed", std::to_string(*seed));
        auto cfg = fc::ExperimentConfig::from_key_values(kv, std::move(base));
        cfg.validate();
        return cfg;
    }

    bool sets_key(const std::string& key) const {
        if (flags.count(key)) return true;
        for (const auto& s : sets) {
            if (s.rfind(key + "=", 0) == 0) return true;
        }
        if (!config_file.empty()) return fc::KeyValueConfig::load(config_file).has(key);
        return false;
    }
};

std::vector<std::size_t> parse_values(const std::string& text) {
    std::vector<std::size_t> out;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        try {
            std::size_t used = 0;
            const long long v = std::stoll(tok, &used);
            if (used != tok.size() || v < 0) throw std::invalid_argument(tok);
            out.push_back(static_cast<std::size_t>(v));
        } catch (const std::exception&) {
            throw fc::ConfigError("cannot parse sweep value '" + tok + "'");
        }
    }
    return out;
}

void print_report_line(const std::string& label, const std::optional<fc::EvalReport>& r,
                       const std::string& error) {
    if (r) {
        std::printf("%-22s rmse %10.4f  mae %10.4f  r2 %8.5f  (n=%zu)\n", label.c_str(), r->rmse, r->mae,
                    r->r2, r->n);
    } else {
        std::printf("%-22s FAILED: %s\n", label.c_str(), error.c_str());
    }
}

int cmd_generate(const CommonOptions& common, const std::string& out_path) {
    const auto cfg = common.resolve(std::nullopt);
    if (cfg.data != "synthetic") throw fc::ConfigError("generate needs data = synthetic");
    const auto table = fc::load_dataset(cfg);
    fc::save_csv(table, out_path);
    std::printf("wrote %zu hourly rows to %s\n", table.size(), out_path.c_str());
    return kExitOk;
}

int cmd_train(const CommonOptions& common, std::optional<std::uint64_t> seed, const std::string& model) {
    fc::ExperimentConfig base;
    base.models = {fc::parse_model_kind(model)};
    auto cfg = common.resolve(seed, base);
    cfg.models = {fc::parse_model_kind(model)};
    const auto table = fc::load_dataset(cfg);
    const auto data = fc::prepare_data(table, cfg);
    auto run = fc::run_model(cfg.models.front(), data, cfg, cfg.train.seed, "train/" + model);

    std::filesystem::create_directories(cfg.output_dir);
    fc::write_resolved_config(cfg.output_dir / "config.resolved", cfg);
    if (!run.epochs.empty()) {
        std::ofstream out(cfg.output_dir / "epochs.csv", std::ios::binary);
        fc::write_epoch_csv(out, run.epochs, cfg.record_timing);
    }
    print_report_line(model, run.report, run.error);
    if (!run.ok()) return exit_code(run.failure);

    fc::ModelFile file{*run.model,
                       {{"encoder_steps", std::to_string(cfg.encoder_steps)},
                        {"predict_step", std::to_string(cfg.predict_step)},
                        {"inputs", cfg.inputs.label()},
                        {"seed", std::to_string(cfg.train.seed)}}};
    fc::save_model(cfg.output_dir / "model.txt", file);
    {
        std::ofstream out(cfg.output_dir / "scaler.txt", std::ios::binary);
        data.scaler.save(out);
    }
    std::ofstream out(cfg.output_dir / "report.json", std::ios::binary);
    out << fc::to_json(*run.report) << '\n';
    return kExitOk;
}

int cmd_evaluate(const std::string& model_path, const std::string& scaler_path, const std::string& data_path,
                 const std::string& convention) {
    const auto file = fc::load_model(model_path);
    std::ifstream sin(scaler_path);
    if (!sin) throw fc::ConfigError("cannot open scaler file " + scaler_path);
    const auto scaler = fc::MinMaxScaler::load(sin);

    auto meta = [&](const std::string& key) {
        auto it = file.metadata.find(key);
        if (it == file.metadata.end()) throw fc::ConfigError("model file lacks metadata '" + key + "'");
        return it->second;
    };
    const std::size_t enc = std::stoul(meta("encoder_steps"));
    const std::size_t pred = std::stoul(meta("predict_step"));
    const auto inputs = fc::VariableSet::parse(meta("inputs"));

    const auto table = fc::load_csv(data_path);
    const auto raw = fc::series_to_supervised(table, enc, pred, inputs);
    if (scaler.columns() != raw.n_features() + 1) {
        throw fc::ConfigError("scaler has " + std::to_string(scaler.columns()) + " columns, data needs " +
                              std::to_string(raw.n_features() + 1));
    }
    const auto scaled = fc::transform(scaler, raw);
    fc::Vector out(scaled.rows());
    for (std::size_t r = 0; r < scaled.rows(); ++r) out[r] = fc::predict(file.model, scaled.features.row(r));
    const auto physical = fc::inverse_transform_targets(scaler, out.span());
    const auto report = fc::evaluate(physical.span(), raw.targets.span(), "evaluate/" + std::string(fc::model_kind(file.model)),
                                     fc::parse_r2_convention(convention));
    std::cout << fc::to_json(report) << '\n';
    return kExitOk;
}

void write_common(const fc::ExperimentConfig& cfg) {
    std::filesystem::create_directories(cfg.output_dir);
    fc::write_resolved_config(cfg.output_dir / "config.resolved", cfg);
}

int cmd_compare(const CommonOptions& common, std::uint64_t seed) {
    const auto cfg = common.resolve(seed);
    const auto table = fc::load_dataset(cfg);
    const auto result = fc::run_comparative(cfg, table);
    write_common(cfg);
    fc::write_comparative_report(cfg.output_dir / "report.json", result, cfg);
    fc::write_trace_csv(cfg.output_dir / "trace.csv", result);
    fc::write_epoch_logs(cfg.output_dir / "epochs.csv", result, cfg.record_timing);

    int code = kExitOk;
    for (const auto& run : result.runs) {
        print_report_line(std::string(fc::to_string(run.kind)), run.report, run.error);
        if (code == kExitOk && !run.ok()) code = exit_code(run.failure);
    }
    std::string order;
    for (const auto& m : result.ordering()) order += (order.empty() ? "" : " > ") + m;
    std::printf("ordering by r2: %s\n", order.c_str());
    std::printf("published reference scores (original catchment, not recomputed):\n");
    for (const auto& p : fc::published_comparison()) {
        std::printf("  %-5s rmse %8.3f  mae %7.3f  r2 %.3f\n", std::string(p.model).c_str(), p.rmse, p.mae, p.r2);
    }
    return code;
}

int cmd_ablate(const CommonOptions& common, std::uint64_t seed) {
    const auto cfg = common.resolve(seed);
    const auto table = fc::load_dataset(cfg);
    const auto result = fc::run_input_ablation(cfg, table);
    write_common(cfg);
    fc::write_ablation_report(cfg.output_dir / "report.json", result, cfg);
    fc::write_ablation_csv(cfg.output_dir / "ablation.csv", result);
    {
        std::ofstream out(cfg.output_dir / "tables.txt", std::ios::binary);
        fc::write_ablation_tables(out, result);
    }
    fc::write_ablation_tables(std::cout, result);
    for (const auto& c : result.cells) {
        if (!c.report) return exit_code(c.failure);
    }
    return kExitOk;
}

int cmd_sweep(const CommonOptions& common, std::uint64_t seed, const std::string& param,
              const std::string& values_text) {
    fc::ExperimentConfig base;
    base.models = {fc::ModelKind::Lstm};  // sweeps study the LSTM unless models is set
    const auto cfg = common.resolve(seed, base);
    const auto table = fc::load_dataset(cfg);

    std::vector<std::size_t> values;
    if (!values_text.empty()) {
        values = parse_values(values_text);
    } else if (param == "predict_step") {
        values = {1, 3, 6, 9, 12};
    } else if (param == "encoder_step") {
        values = {2, 4, 8, 12, 16, 20};
    } else {
        values = {10, 20, 30, 40, 50, 60, 70, 80, 90, 100};
    }

    write_common(cfg);
    if (param == "epochs") {
        const auto result = fc::run_epoch_sweep(cfg, table, values);
        fc::write_epoch_sweep(cfg.output_dir, result, cfg);
        for (const auto& r : result.reports) print_report_line(r.run_id, r, "");
        std::printf("minimum test loss at epoch %zu\n", result.best_test_epoch);
        return kExitOk;
    }

    const auto result = param == "predict_step" ? fc::run_predict_step_sweep(cfg, table, values)
                                                : fc::run_encoder_step_sweep(cfg, table, values);
    fc::write_sweep_csv(cfg.output_dir / "sweep.csv", result);
    fc::write_sweep_report(cfg.output_dir / "report.json", result, cfg);
    int code = kExitOk;
    for (const auto& c : result.cells) {
        print_report_line(param + "=" + std::to_string(c.value) + " " + std::string(fc::to_string(c.model)),
                          c.report, c.error);
        if (code == kExitOk && !c.report) code = exit_code(c.failure);
    }
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"flowcast: hourly stream-flow forecasting experiments"};
    app.require_subcommand(1);

    CommonOptions common;
    std::optional<std::uint64_t> seed;

    auto* gen = app.add_subcommand("generate", "write a synthetic catchment series to CSV");
    std::string gen_out;
    common.add(*gen);
    gen->add_option("-o,--output", gen_out, "CSV file to write")->required();

    auto* train = app.add_subcommand("train", "train and evaluate a single model");
    std::string train_model = "lstm";
    common.add(*train);
    train->add_option("--seed", seed, "run seed");
    train->add_option("-m,--model", train_model, "svr, mlp, lstm or rnn");

    auto* compare = app.add_subcommand("compare", "SVR / MLP / LSTM on one split");
    common.add(*compare);
    compare->add_option("--seed", seed, "run seed")->required();

    auto* ablate = app.add_subcommand("ablate", "LSTM over the seven input combinations");
    common.add(*ablate);
    ablate->add_option("--seed", seed, "run seed")->required();

    auto* sweep = app.add_subcommand("sweep", "retrain across a parameter grid");
    std::string sweep_param;
    std::string sweep_values;
    common.add(*sweep);
    sweep->add_option("--seed", seed, "run seed")->required();
    sweep->add_option("--param", sweep_param, "predict_step, encoder_step or epochs")
        ->required()
        ->check(CLI::IsMember({"predict_step", "encoder_step", "epochs"}));
    sweep->add_option("--values", sweep_values, "comma-separated, strictly increasing");

    auto* evaluate = app.add_subcommand("evaluate", "score a stored model on a CSV file");
    std::string eval_model, eval_scaler, eval_data, eval_r2 = "observed_mean";
    evaluate->add_option("--model", eval_model, "model file written by train")->required();
    evaluate->add_option("--scaler", eval_scaler, "scaler file written by train")->required();
    evaluate->add_option("--data", eval_data, "CSV file")->required();
    evaluate->add_option("--r2-convention", eval_r2, "observed_mean or predicted_mean");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*gen) return cmd_generate(common, gen_out);
        if (*train) return cmd_train(common, seed, train_model);
        if (*compare) return cmd_compare(common, *seed);
        if (*ablate) return cmd_ablate(common, *seed);
        if (*sweep) return cmd_sweep(common, *seed, sweep_param, sweep_values);
        if (*evaluate) return cmd_evaluate(eval_model, eval_scaler, eval_data, eval_r2);
    } catch (const fc::ConfigError& e) {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return kExitConfig;
    } catch (const fc::DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return kExitData;
    } catch (const fc::DivergenceError& e) {
        std::fprintf(stderr, "training diverged: %s\n", e.what());
        return kExitDivergence;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitFailure;
    }
    return kExitOk;
}
