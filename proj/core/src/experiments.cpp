#include "flowcast/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>

#include "flowcast/errors.hpp"
#include "flowcast/lstm.hpp"
#include "flowcast/mlp.hpp"
#include "flowcast/rnn.hpp"

namespace flowcast {

std::string_view to_string(ModelKind k) noexcept {
    switch (k) {
        case ModelKind::Svr: return "svr";
        case ModelKind::Mlp: return "mlp";
        case ModelKind::Lstm: return "lstm";
        case ModelKind::Rnn: return "rnn";
    }
    return "lstm";
}

ModelKind parse_model_kind(std::string_view text) {
    if (text == "svr") return ModelKind::Svr;
    if (text == "mlp") return ModelKind::Mlp;
    if (text == "lstm") return ModelKind::Lstm;
    if (text == "rnn") return ModelKind::Rnn;
    throw ConfigError("unknown model '" + std::string(text) + "' (expected svr, mlp, lstm or rnn)");
}

std::vector<ModelKind> parse_model_list(std::string_view text) {
    std::vector<ModelKind> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto comma = text.find(',', pos);
        const auto token = text.substr(pos, comma == std::string_view::npos ? text.npos : comma - pos);
        if (!token.empty()) {
            const ModelKind k = parse_model_kind(token);
            if (std::find(out.begin(), out.end(), k) != out.end()) {
                throw ConfigError("model '" + std::string(token) + "' listed twice");
            }
            out.push_back(k);
        }
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    if (out.empty()) throw ConfigError("model list is empty");
    return out;
}

std::string_view to_string(ScaleFit s) noexcept { return s == ScaleFit::Train ? "train" : "all"; }

ScaleFit parse_scale_fit(std::string_view text) {
    if (text == "train") return ScaleFit::Train;
    if (text == "all") return ScaleFit::All;
    throw ConfigError("unknown scale_fit '" + std::string(text) + "' (expected train or all)");
}

std::string_view to_string(FailureKind k) noexcept {
    switch (k) {
        case FailureKind::None: return "none";
        case FailureKind::Config: return "config";
        case FailureKind::Data: return "data";
        case FailureKind::Divergence: return "divergence";
        case FailureKind::Convergence: return "convergence";
        case FailureKind::Other: return "other";
    }
    return "other";
}

// ---------------------------------------------------------------------------
// Configuration

namespace {

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
    T value{};
    const char* first = text.data();
    const char* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) {
        throw ConfigError("config key '" + key + "': cannot parse '" + text + "' as a number");
    }
    return value;
}

std::size_t parse_count(const std::string& key, const std::string& text) {
    if (!text.empty() && text.front() == '-') {
        throw ConfigError("config key '" + key + "' must be non-negative, got '" + text + "'");
    }
    return parse_number<std::size_t>(key, text);
}

bool parse_bool(const std::string& key, const std::string& text) {
    if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
    if (text == "false" || text == "0" || text == "no" || text == "off") return false;
    throw ConfigError("config key '" + key + "': expected true or false, got '" + text + "'");
}

std::string models_string(const std::vector<ModelKind>& models) {
    std::string out;
    for (auto m : models) {
        if (!out.empty()) out += ',';
        out += to_string(m);
    }
    return out;
}

using Setter = std::function<void(ExperimentConfig&, const std::string& key, const std::string& v)>;
using Getter = std::function<std::string(const ExperimentConfig&)>;

struct KeySpec {
    Setter set;
    Getter get;
};

template <class T>
KeySpec count_key(T ExperimentConfig::*field) {
    return {[field](ExperimentConfig& c, const std::string& k, const std::string& v) {
                c.*field = parse_count(k, v);
            },
            [field](const ExperimentConfig& c) { return std::to_string(c.*field); }};
}

const std::map<std::string, KeySpec>& key_table() {
    static const std::map<std::string, KeySpec> table = [] {
        std::map<std::string, KeySpec> t;
        auto dbl = [](auto accessor) {
            return KeySpec{[accessor](ExperimentConfig& c, const std::string& k, const std::string& v) {
                               accessor(c) = parse_number<double>(k, v);
                           },
                           [accessor](const ExperimentConfig& c) {
                               return format_double(accessor(const_cast<ExperimentConfig&>(c)));
                           }};
        };
        auto cnt = [](auto accessor) {
            return KeySpec{[accessor](ExperimentConfig& c, const std::string& k, const std::string& v) {
                               accessor(c) = parse_count(k, v);
                           },
                           [accessor](const ExperimentConfig& c) {
                               return std::to_string(accessor(const_cast<ExperimentConfig&>(c)));
                           }};
        };

        t["data"] = {[](ExperimentConfig& c, const std::string&, const std::string& v) { c.data = v; },
                     [](const ExperimentConfig& c) { return c.data; }};
        t["data_seed"] = {[](ExperimentConfig& c, const std::string& k, const std::string& v) {
                              c.data_seed = parse_number<std::uint64_t>(k, v);
                          },
                          [](const ExperimentConfig& c) { return std::to_string(c.data_seed); }};
        t["synthetic_hours"] = cnt([](ExperimentConfig& c) -> std::size_t& { return c.synthetic.n_hours; });
        t["synthetic_storm_probability"] =
            dbl([](ExperimentConfig& c) -> double& { return c.synthetic.storm_probability; });
        t["synthetic_mean_storm_hours"] =
            dbl([](ExperimentConfig& c) -> double& { return c.synthetic.mean_storm_hours; });
        t["synthetic_mean_intensity"] =
            dbl([](ExperimentConfig& c) -> double& { return c.synthetic.mean_intensity; });
        t["synthetic_recession"] = dbl([](ExperimentConfig& c) -> double& { return c.synthetic.recession; });
        t["synthetic_initial_storage"] =
            dbl([](ExperimentConfig& c) -> double& { return c.synthetic.initial_storage; });
        t["synthetic_discharge_coefficient"] =
            dbl([](ExperimentConfig& c) -> double& { return c.synthetic.discharge_coefficient; });
        t["synthetic_base_flow"] = dbl([](ExperimentConfig& c) -> double& { return c.synthetic.base_flow; });
        t["synthetic_flow_noise"] = dbl([](ExperimentConfig& c) -> double& { return c.synthetic.flow_noise; });

        t["encoder_steps"] = count_key(&ExperimentConfig::encoder_steps);
        t["predict_step"] = count_key(&ExperimentConfig::predict_step);
        t["inputs"] = {[](ExperimentConfig& c, const std::string&, const std::string& v) {
                           c.inputs = VariableSet::parse(v);
                       },
                       [](const ExperimentConfig& c) { return c.inputs.label(); }};
        t["models"] = {[](ExperimentConfig& c, const std::string&, const std::string& v) {
                           c.models = parse_model_list(v);
                       },
                       [](const ExperimentConfig& c) { return models_string(c.models); }};

        t["optimizer"] = {[](ExperimentConfig& c, const std::string&, const std::string& v) {
                              c.train.optimizer = parse_optimizer(v);
                          },
                          [](const ExperimentConfig& c) { return std::string(to_string(c.train.optimizer)); }};
        t["loss"] = {[](ExperimentConfig& c, const std::string&, const std::string& v) {
                         c.train.loss = parse_loss(v);
                     },
                     [](const ExperimentConfig& c) { return std::string(to_string(c.train.loss)); }};
        t["learning_rate"] = dbl([](ExperimentConfig& c) -> double& { return c.train.learning_rate; });
        t["batch_size"] = cnt([](ExperimentConfig& c) -> std::size_t& { return c.train.batch_size; });
        t["epochs"] = cnt([](ExperimentConfig& c) -> std::size_t& { return c.train.epochs; });
        t["clip_norm"] = dbl([](ExperimentConfig& c) -> double& { return c.train.clip_norm; });
        t["momentum"] = dbl([](ExperimentConfig& c) -> double& { return c.train.momentum; });
        t["rms_decay"] = dbl([](ExperimentConfig& c) -> double& { return c.train.rms_decay; });
        t["adam_beta1"] = dbl([](ExperimentConfig& c) -> double& { return c.train.beta1; });
        t["adam_beta2"] = dbl([](ExperimentConfig& c) -> double& { return c.train.beta2; });
        t["optimizer_epsilon"] = dbl([](ExperimentConfig& c) -> double& { return c.train.epsilon; });
        t["shuffle"] = {[](ExperimentConfig& c, const std::string& k, const std::string& v) {
                            c.train.shuffle_each_epoch = parse_bool(k, v);
                        },
                        [](const ExperimentConfig& c) {
                            return std::string(c.train.shuffle_each_epoch ? "true" : "false");
                        }};
        t["seed"] = {[](ExperimentConfig& c, const std::string& k, const std::string& v) {
                         c.train.seed = parse_number<std::uint64_t>(k, v);
                     },
                     [](const ExperimentConfig& c) { return std::to_string(c.train.seed); }};

        t["lstm_hidden"] = count_key(&ExperimentConfig::lstm_hidden);
        t["rnn_hidden"] = count_key(&ExperimentConfig::rnn_hidden);
        t["mlp_hidden"] = count_key(&ExperimentConfig::mlp_hidden);
        t["mlp_activation"] = {[](ExperimentConfig& c, const std::string&, const std::string& v) {
                                   c.mlp_activation = parse_activation(v);
                               },
                               [](const ExperimentConfig& c) {
                                   return std::string(to_string(c.mlp_activation));
                               }};

        t["svr_c"] = dbl([](ExperimentConfig& c) -> double& { return c.svr.c; });
        t["svr_gamma"] = dbl([](ExperimentConfig& c) -> double& { return c.svr.gamma; });
        t["svr_epsilon"] = dbl([](ExperimentConfig& c) -> double& { return c.svr.epsilon_tube; });
        t["svr_tol"] = dbl([](ExperimentConfig& c) -> double& { return c.svr.tol; });
        t["svr_max_iterations"] = cnt([](ExperimentConfig& c) -> std::size_t& { return c.svr.max_iterations; });
        t["svr_cap"] = count_key(&ExperimentConfig::svr_cap);

        t["train_fraction"] = dbl([](ExperimentConfig& c) -> double& { return c.train_fraction; });
        t["train_count"] = {[](ExperimentConfig& c, const std::string& k, const std::string& v) {
                                if (v.empty() || v == "none") {
                                    c.train_count.reset();
                                } else {
                                    c.train_count = parse_count(k, v);
                                }
                            },
                            [](const ExperimentConfig& c) {
                                return c.train_count ? std::to_string(*c.train_count) : std::string("none");
                            }};
        t["scale_fit"] = {[](ExperimentConfig& c, const std::string&, const std::string& v) {
                              c.scale_fit = parse_scale_fit(v);
                          },
                          [](const ExperimentConfig& c) { return std::string(to_string(c.scale_fit)); }};
        t["r2_convention"] = {[](ExperimentConfig& c, const std::string&, const std::string& v) {
                                  c.r2_convention = parse_r2_convention(v);
                              },
                              [](const ExperimentConfig& c) {
                                  return std::string(to_string(c.r2_convention));
                              }};
        t["output_dir"] = {[](ExperimentConfig& c, const std::string&, const std::string& v) {
                               c.output_dir = v;
                           },
                           [](const ExperimentConfig& c) { return c.output_dir.string(); }};
        t["record_timing"] = {[](ExperimentConfig& c, const std::string& k, const std::string& v) {
                                  c.record_timing = parse_bool(k, v);
                              },
                              [](const ExperimentConfig& c) {
                                  return std::string(c.record_timing ? "true" : "false");
                              }};
        return t;
    }();
    return table;
}

}  // namespace

std::vector<std::string> config_keys() {
    std::vector<std::string> keys;
    for (const auto& [k, _] : key_table()) keys.push_back(k);
    return keys;
}

SplitSpec ExperimentConfig::split_spec() const {
    return train_count ? SplitSpec::count(*train_count) : SplitSpec::fraction(train_fraction);
}

void ExperimentConfig::validate() const {
    if (encoder_steps < 1) throw ConfigError("encoder_steps must be >= 1");
    if (predict_step < 1) throw ConfigError("predict_step must be >= 1");
    if (inputs.empty()) {
        throw ConfigError("input combination selects no variables (needs flow, rain or areal)");
    }
    if (models.empty()) throw ConfigError("no models selected");
    if (lstm_hidden < 1 || rnn_hidden < 1 || mlp_hidden < 1) {
        throw ConfigError("hidden sizes must be >= 1");
    }
    if (svr_cap < 1) throw ConfigError("svr_cap must be >= 1");
    if (!train_count && !(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw ConfigError("train_fraction must lie in (0, 1)");
    }
    if (data.empty()) throw ConfigError("data source is empty");
    train.validate();
    svr.validate();
    if (data == "synthetic") synthetic.validate();
}

ExperimentConfig ExperimentConfig::from_key_values(const KeyValueConfig& kv, ExperimentConfig base) {
    const auto& table = key_table();
    for (const auto& [key, value] : kv.entries()) {
        auto it = table.find(key);
        if (it == table.end()) throw ConfigError("unknown config key '" + key + "'");
        it->second.set(base, key, value);
    }
    return base;
}

ExperimentConfig ExperimentConfig::from_key_values(const KeyValueConfig& kv) {
    return from_key_values(kv, ExperimentConfig{});
}

KeyValueConfig ExperimentConfig::to_key_values() const {
    KeyValueConfig kv;
    for (const auto& [key, spec] : key_table()) kv.set(key, spec.get(*this));
    return kv;
}

// ---------------------------------------------------------------------------
// Data

TimeSeriesTable load_dataset(const ExperimentConfig& config) {
    if (config.data == "synthetic") {
        Rng rng(config.data_seed);
        return generate_synthetic(rng, config.synthetic);
    }
    return load_csv(config.data);
}

std::uint64_t PreparedData::fingerprint() const {
    std::uint64_t h = flowcast::fingerprint(train.features.span());
    h = flowcast::fingerprint(train.targets.span(), h);
    h = flowcast::fingerprint(test.features.span(), h);
    return flowcast::fingerprint(test.targets.span(), h);
}

PreparedData prepare_data(const TimeSeriesTable& table, const ExperimentConfig& config) {
    PreparedData out;
    const SupervisedMatrix all =
        series_to_supervised(table, config.encoder_steps, config.predict_step, config.inputs);
    auto [train_raw, test_raw] = split(all, config.split_spec());
    out.scaler = fit_scaler(config.scale_fit == ScaleFit::Train ? train_raw : all);
    out.train = transform(out.scaler, train_raw);
    out.test = transform(out.scaler, test_raw);
    out.train_raw = std::move(train_raw);
    out.test_raw = std::move(test_raw);
    return out;
}

std::vector<std::size_t> strided_indices(std::size_t n, std::size_t cap) {
    std::vector<std::size_t> idx;
    if (cap == 0) return idx;
    if (n <= cap) {
        idx.resize(n);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        return idx;
    }
    idx.reserve(cap);
    for (std::size_t i = 0; i < cap; ++i) {
        // i * n fits comfortably: both are row counts.
        idx.push_back(static_cast<std::size_t>((static_cast<unsigned __int128>(i) * n) / cap));
    }
    return idx;
}

// ---------------------------------------------------------------------------
// Single model

namespace {

template <class M>
Vector train_and_predict(M initial, const PreparedData& data, const TrainConfig& tc, ModelRun& run) {
    auto result = train(std::move(initial), data.train, data.test, tc);
    run.epochs = std::move(result.epochs);
    Vector scaled = predict_all(result.params, data.test.features);
    run.model = std::move(result.params);
    return scaled;
}

template <class F>
void capture_failure(FailureKind& failure, std::string& error, F&& body) {
    try {
        body();
    } catch (const ConfigError& e) {
        failure = FailureKind::Config;
        error = e.what();
    } catch (const DataError& e) {
        failure = FailureKind::Data;
        error = e.what();
    } catch (const DivergenceError& e) {
        failure = FailureKind::Divergence;
        error = e.what();
    } catch (const ConvergenceError& e) {
        failure = FailureKind::Convergence;
        error = e.what();
    } catch (const std::exception& e) {
        failure = FailureKind::Other;
        error = e.what();
    }
}

}  // namespace

ModelRun run_model(ModelKind kind, const PreparedData& data, const ExperimentConfig& config,
                   std::uint64_t seed, std::string run_id) {
    ModelRun run;
    run.kind = kind;
    run.data_fingerprint = data.fingerprint();

    capture_failure(run.failure, run.error, [&] {
        TrainConfig tc = config.train;
        tc.seed = seed;
        Rng rng(seed);
        const std::size_t n_vars = data.train.n_variables;
        const std::size_t enc = data.train.encoder_steps;
        Vector scaled;
        switch (kind) {
            case ModelKind::Lstm:
                scaled = train_and_predict(LstmParams::init(rng, n_vars, config.lstm_hidden, enc), data,
                                           tc, run);
                run.train_rows_used = data.train.rows();
                break;
            case ModelKind::Rnn:
                scaled = train_and_predict(RnnParams::init(rng, n_vars, config.rnn_hidden, enc), data,
                                           tc, run);
                run.train_rows_used = data.train.rows();
                break;
            case ModelKind::Mlp:
                scaled = train_and_predict(MlpParams::init(rng, data.train.n_features(), config.mlp_hidden,
                                                           config.mlp_activation),
                                           data, tc, run);
                run.train_rows_used = data.train.rows();
                break;
            case ModelKind::Svr: {
                const auto idx = strided_indices(data.train.rows(), config.svr_cap);
                const SupervisedMatrix sub = select_rows(data.train, idx);
                SvrModel model = svr_fit(sub.features, sub.targets.span(), config.svr);
                scaled = Vector(data.test.rows());
                for (std::size_t r = 0; r < data.test.rows(); ++r) {
                    scaled[r] = svr_predict(model, data.test.features.row(r));
                }
                run.train_rows_used = sub.rows();
                run.model = std::move(model);
                break;
            }
        }
        run.predictions = inverse_transform_targets(data.scaler, scaled.span());
        if (!all_finite(run.predictions.span())) {
            throw DivergenceError(std::string(to_string(kind)) + " produced non-finite forecasts");
        }
        run.report = evaluate(run.predictions.span(), data.test_raw.targets.span(), std::move(run_id),
                              config.r2_convention);
    });
    return run;
}

// ---------------------------------------------------------------------------
// Comparative run

std::vector<std::string> ComparativeResult::ordering() const {
    std::vector<const ModelRun*> ok;
    for (const auto& r : runs) {
        if (r.ok()) ok.push_back(&r);
    }
    std::stable_sort(ok.begin(), ok.end(),
                     [](const ModelRun* a, const ModelRun* b) { return a->report->r2 > b->report->r2; });
    std::vector<std::string> names;
    for (const auto* r : ok) names.emplace_back(to_string(r->kind));
    return names;
}

ComparativeResult run_comparative(const ExperimentConfig& config, const TimeSeriesTable& table) {
    config.validate();
    const PreparedData data = prepare_data(table, config);
    ComparativeResult result;
    result.data_fingerprint = data.fingerprint();
    result.timestamps = data.test_raw.target_timestamps;
    result.observed = data.test_raw.targets;
    result.n_train = data.train.rows();
    result.n_test = data.test.rows();
    for (ModelKind kind : config.models) {
        ModelRun run = run_model(kind, data, config, config.train.seed,
                                 "compare/" + std::string(to_string(kind)));
        if (run.data_fingerprint != result.data_fingerprint) {
            throw Error("model " + std::string(to_string(kind)) +
                        " consumed different train/test matrices than its peers");
        }
        result.runs.push_back(std::move(run));
    }
    return result;
}

// ---------------------------------------------------------------------------
// Ablation

std::vector<VariableSet> ablation_combos() {
    return {
        {true, false, false},  // flow only
        {true, true, false},   // flow + rain
        {true, false, true},   // flow + areal
        {true, true, true},    // flow + rain + areal
        {false, true, false},  // rain only
        {false, false, true},  // areal only
        {false, true, true},   // rain + areal
    };
}

const AblationCell* AblationResult::find(const VariableSet& inputs) const {
    for (const auto& c : cells) {
        if (c.inputs == inputs) return &c;
    }
    return nullptr;
}

AblationResult run_input_ablation(const ExperimentConfig& config, const TimeSeriesTable& table) {
    config.validate();
    AblationResult result;
    for (const VariableSet& combo : ablation_combos()) {
        AblationCell cell;
        cell.inputs = combo;
        ExperimentConfig cfg = config;
        cfg.inputs = combo;
        capture_failure(cell.failure, cell.error, [&] {
            const PreparedData data = prepare_data(table, cfg);
            cell.n_features = data.train.n_features();
            ModelRun run = run_model(ModelKind::Lstm, data, cfg, cfg.train.seed, "ablate/" + combo.label());
            cell.report = run.report;
            cell.failure = run.failure;
            cell.error = run.error;
        });
        result.cells.push_back(std::move(cell));
    }
    return result;
}

// ---------------------------------------------------------------------------
// Sweeps

namespace {

void check_grid(std::span<const std::size_t> values, std::string_view what) {
    if (values.empty()) throw ConfigError(std::string(what) + " list is empty");
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i] < 1) throw ConfigError(std::string(what) + " values must be >= 1");
        if (i > 0 && values[i] <= values[i - 1]) {
            throw ConfigError(std::string(what) + " values must be strictly increasing (" +
                              std::to_string(values[i - 1]) + " then " + std::to_string(values[i]) + ")");
        }
    }
}

SweepResult run_sweep(const ExperimentConfig& config, const TimeSeriesTable& table,
                      std::span<const std::size_t> steps, std::string parameter,
                      std::size_t ExperimentConfig::*field) {
    check_grid(steps, parameter);
    config.validate();
    SweepResult result;
    result.parameter = std::move(parameter);
    result.values.assign(steps.begin(), steps.end());
    for (std::size_t step : steps) {
        ExperimentConfig cfg = config;
        cfg.*field = step;
        std::optional<PreparedData> data;
        FailureKind prep_failure = FailureKind::None;
        std::string prep_error;
        capture_failure(prep_failure, prep_error, [&] { data = prepare_data(table, cfg); });
        for (ModelKind kind : cfg.models) {
            SweepCell cell;
            cell.value = step;
            cell.model = kind;
            if (!data) {
                cell.failure = prep_failure;
                cell.error = prep_error;
            } else {
                const std::string id = "sweep/" + result.parameter + "=" + std::to_string(step) + "/" +
                                       std::string(to_string(kind));
                ModelRun run = run_model(kind, *data, cfg, cfg.train.seed + step, id);
                cell.report = std::move(run.report);
                cell.failure = run.failure;
                cell.error = std::move(run.error);
            }
            result.cells.push_back(std::move(cell));
        }
    }
    return result;
}

}  // namespace

SweepResult run_predict_step_sweep(const ExperimentConfig& config, const TimeSeriesTable& table,
                                   std::span<const std::size_t> steps) {
    return run_sweep(config, table, steps, "predict_step", &ExperimentConfig::predict_step);
}

SweepResult run_encoder_step_sweep(const ExperimentConfig& config, const TimeSeriesTable& table,
                                   std::span<const std::size_t> steps) {
    return run_sweep(config, table, steps, "encoder_step", &ExperimentConfig::encoder_steps);
}

EpochSweepResult run_epoch_sweep(const ExperimentConfig& config, const TimeSeriesTable& table,
                                 std::span<const std::size_t> grid) {
    check_grid(grid, "epoch");
    ExperimentConfig cfg = config;
    cfg.train.epochs = grid.back();
    cfg.validate();

    const PreparedData data = prepare_data(table, cfg);
    EpochSweepResult result;
    result.grid.assign(grid.begin(), grid.end());

    Rng rng(cfg.train.seed);
    auto initial = LstmParams::init(rng, data.train.n_variables, cfg.lstm_hidden, cfg.encoder_steps);
    auto on_epoch = [&](const EpochLog& log, const LstmParams& params) {
        if (std::find(grid.begin(), grid.end(), log.epoch) == grid.end()) return;
        const Vector scaled = predict_all(params, data.test.features);
        const Vector pred = inverse_transform_targets(data.scaler, scaled.span());
        result.reports.push_back(evaluate(pred.span(), data.test_raw.targets.span(),
                                          "epochs/" + std::to_string(log.epoch), cfg.r2_convention));
    };
    auto trained = train(std::move(initial), data.train, data.test, cfg.train,
                         EpochCallback<LstmParams>(on_epoch));
    result.logs = std::move(trained.epochs);

    double best = 0.0;
    for (const auto& log : result.logs) {
        if (result.best_test_epoch == 0 || log.test_loss < best) {
            best = log.test_loss;
            result.best_test_epoch = log.epoch;
        }
    }
    return result;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
        const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

double spearman(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.size() < 2) {
        throw MetricError("spearman needs two equal-length series of at least two values");
    }
    const auto ra = average_ranks(a);
    const auto rb = average_ranks(b);
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
    const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        sab += (ra[i] - ma) * (rb[i] - mb);
        saa += (ra[i] - ma) * (ra[i] - ma);
        sbb += (rb[i] - mb) * (rb[i] - mb);
    }
    if (saa == 0.0 || sbb == 0.0) throw MetricError("spearman undefined for a constant series");
    return sab / std::sqrt(saa * sbb);
}

}  // namespace flowcast
