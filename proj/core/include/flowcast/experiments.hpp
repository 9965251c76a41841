#pragma once

// Experiment runners: the three-model comparison, the input-combination
// ablation, horizon / window sweeps and the epoch study. Runners return plain
// result structs; the writers at the bottom turn them into run-directory files.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "flowcast/config.hpp"
#include "flowcast/dataset.hpp"
#include "flowcast/metrics.hpp"
#include "flowcast/model_io.hpp"
#include "flowcast/params.hpp"
#include "flowcast/svr.hpp"
#include "flowcast/training.hpp"

namespace flowcast {

enum class ModelKind { Svr, Mlp, Lstm, Rnn };
/// Rows the min-max scaler is fitted on.
enum class ScaleFit { Train, All };

std::string_view to_string(ModelKind k) noexcept;
ModelKind parse_model_kind(std::string_view text);
/// Comma-separated model names, e.g. "svr,mlp,lstm".
std::vector<ModelKind> parse_model_list(std::string_view text);
std::string_view to_string(ScaleFit s) noexcept;
ScaleFit parse_scale_fit(std::string_view text);

struct ExperimentConfig {
    std::string data = "synthetic";  // "synthetic" or a CSV path
    SyntheticConfig synthetic;
    std::uint64_t data_seed = 20190101;

    std::size_t encoder_steps = 12;
    std::size_t predict_step = 6;
    VariableSet inputs{true, true, false};
    std::vector<ModelKind> models{ModelKind::Svr, ModelKind::Mlp, ModelKind::Lstm};

    TrainConfig train;  // train.seed is the run seed
    std::size_t lstm_hidden = 64;
    std::size_t rnn_hidden = 64;
    std::size_t mlp_hidden = 64;
    Activation mlp_activation = Activation::Tanh;

    SvrOptions svr;
    std::size_t svr_cap = 4000;  // SVR trains on at most this many strided rows

    std::optional<std::size_t> train_count;  // overrides train_fraction when set
    double train_fraction = 0.75;
    ScaleFit scale_fit = ScaleFit::Train;
    R2Convention r2_convention = R2Convention::ObservedMean;

    std::filesystem::path output_dir = "runs/latest";
    bool record_timing = false;

    SplitSpec split_spec() const;
    /// Throws ConfigError on any inconsistent field.
    void validate() const;

    /// Applies every key of `kv` on top of `base`; unknown keys are rejected.
    static ExperimentConfig from_key_values(const KeyValueConfig& kv, ExperimentConfig base);
    static ExperimentConfig from_key_values(const KeyValueConfig& kv);
    /// Every field as key/value pairs; parsing the result reproduces this config.
    KeyValueConfig to_key_values() const;
};

/// Recognised configuration keys, sorted.
std::vector<std::string> config_keys();

TimeSeriesTable load_dataset(const ExperimentConfig& config);

/// Windowed, split and scaled data. The scaler sees only the training rows unless
/// scale_fit is All.
struct PreparedData {
    SupervisedMatrix train_raw;  // physical units
    SupervisedMatrix test_raw;
    SupervisedMatrix train;      // scaled
    SupervisedMatrix test;
    MinMaxScaler scaler;

    /// Hash of the scaled train and test matrices.
    std::uint64_t fingerprint() const;
};

PreparedData prepare_data(const TimeSeriesTable& table, const ExperimentConfig& config);

enum class FailureKind { None, Config, Data, Divergence, Convergence, Other };

std::string_view to_string(FailureKind k) noexcept;

struct ModelRun {
    ModelKind kind = ModelKind::Lstm;
    std::optional<EvalReport> report;
    FailureKind failure = FailureKind::None;
    std::string error;
    Vector predictions;             // test period, physical units
    std::vector<EpochLog> epochs;   // empty for SVR
    std::optional<AnyModel> model;
    std::size_t train_rows_used = 0;
    std::uint64_t data_fingerprint = 0;

    bool ok() const noexcept { return report.has_value(); }
};

/// Strided chronological subsample: row floor(i * n / cap) for i < cap.
std::vector<std::size_t> strided_indices(std::size_t n, std::size_t cap);

/// Builds, trains and evaluates one model. Failures are captured in the result.
ModelRun run_model(ModelKind kind, const PreparedData& data, const ExperimentConfig& config,
                   std::uint64_t seed, std::string run_id);

struct ComparativeResult {
    std::vector<ModelRun> runs;
    std::vector<EpochHour> timestamps;  // test targets
    Vector observed;                    // physical units
    std::uint64_t data_fingerprint = 0;
    std::size_t n_train = 0;
    std::size_t n_test = 0;

    /// Successful model names, best R^2 first.
    std::vector<std::string> ordering() const;
};

ComparativeResult run_comparative(const ExperimentConfig& config, const TimeSeriesTable& table);

struct AblationCell {
    VariableSet inputs;
    std::size_t n_features = 0;
    std::optional<EvalReport> report;
    FailureKind failure = FailureKind::None;
    std::string error;
};

struct AblationResult {
    std::vector<AblationCell> cells;
    const AblationCell* find(const VariableSet& inputs) const;
};

/// The seven populated input combinations, flow-bearing first.
std::vector<VariableSet> ablation_combos();

/// One LSTM per combination; everything else comes from `config`.
AblationResult run_input_ablation(const ExperimentConfig& config, const TimeSeriesTable& table);

struct SweepCell {
    std::size_t value = 0;
    ModelKind model = ModelKind::Lstm;
    std::optional<EvalReport> report;
    FailureKind failure = FailureKind::None;
    std::string error;
};

struct SweepResult {
    std::string parameter;
    std::vector<std::size_t> values;
    std::vector<SweepCell> cells;  // value-major, then config.models order
};

/// Retrains every configured model per step with seed + step. Throws ConfigError
/// unless steps are non-empty, >= 1 and strictly increasing.
SweepResult run_predict_step_sweep(const ExperimentConfig& config, const TimeSeriesTable& table,
                                   std::span<const std::size_t> steps);
SweepResult run_encoder_step_sweep(const ExperimentConfig& config, const TimeSeriesTable& table,
                                   std::span<const std::size_t> steps);

struct EpochSweepResult {
    std::vector<EpochLog> logs;
    std::vector<std::size_t> grid;
    std::vector<EvalReport> reports;  // one per grid entry, test period
    std::size_t best_test_epoch = 0;  // first epoch with minimal test loss
};

/// Single LSTM run to max(grid) epochs, evaluated at every grid point.
EpochSweepResult run_epoch_sweep(const ExperimentConfig& config, const TimeSeriesTable& table,
                                 std::span<const std::size_t> grid);

/// Rank correlation with average ranks for ties.
double spearman(std::span<const double> a, std::span<const double> b);

// ---------------------------------------------------------------------------
// Output files

struct PublishedScore {
    std::string_view model;
    double rmse;
    double mae;
    double r2;
};

/// Published comparative scores on the original catchment data. These cannot be
/// recomputed here and are reported alongside results for reference only.
std::span<const PublishedScore> published_comparison();

struct PublishedAblation {
    std::string_view inputs;  // VariableSet label
    double rmse;
    double mae;
    double r2;
};
std::span<const PublishedAblation> published_ablation();

void write_comparative_report(const std::filesystem::path& path, const ComparativeResult& result,
                              const ExperimentConfig& config);
/// Long format: model,timestamp,observed,predicted
void write_trace_csv(const std::filesystem::path& path, const ComparativeResult& result);
/// Long format over every gradient-trained model:
/// model,epoch,train_loss,test_loss,seconds (seconds empty unless with_timing).
void write_epoch_logs(const std::filesystem::path& path, const ComparativeResult& result,
                      bool with_timing);

void write_ablation_report(const std::filesystem::path& path, const AblationResult& result,
                           const ExperimentConfig& config);
/// RMSE, MAE and R^2 sub-tables: rows with/without flow, columns none/rain/areal/rain+areal.
void write_ablation_tables(std::ostream& out, const AblationResult& result);
void write_ablation_csv(const std::filesystem::path& path, const AblationResult& result);

/// parameter,value,model,n,rmse,mae,r2,error
void write_sweep_csv(const std::filesystem::path& path, const SweepResult& result);
void write_sweep_report(const std::filesystem::path& path, const SweepResult& result,
                        const ExperimentConfig& config);

void write_epoch_sweep(const std::filesystem::path& dir, const EpochSweepResult& result,
                       const ExperimentConfig& config);

void write_resolved_config(const std::filesystem::path& path, const ExperimentConfig& config);

}  // namespace flowcast
