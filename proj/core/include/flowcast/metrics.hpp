#pragma once

// Forecast skill in physical units: RMSE, MAE and the coefficient of determination.

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>

namespace flowcast {

enum class R2Convention {
    ObservedMean,   // standard: SS_tot around the mean of the observations
    PredictedMean,  // SS_tot around the mean of the predictions
};

std::string_view to_string(R2Convention c) noexcept;
R2Convention parse_r2_convention(std::string_view text);

/// sqrt(mean((p - o)^2)). Throws MetricError on empty or mismatched input.
double rmse(std::span<const double> predicted, std::span<const double> observed);
/// mean(|p - o|)
double mae(std::span<const double> predicted, std::span<const double> observed);
/// 1 - SS_res / SS_tot. Needs at least two points; throws MetricError when the
/// reference series is constant.
double r2(std::span<const double> predicted, std::span<const double> observed,
          R2Convention convention = R2Convention::ObservedMean);

struct EvalReport {
    double rmse = 0.0;
    double mae = 0.0;
    double r2 = 0.0;
    std::size_t n = 0;
    std::string run_id;
};

/// All three metrics on the same residuals; asserts rmse >= mae.
EvalReport evaluate(std::span<const double> predicted, std::span<const double> observed,
                    std::string run_id, R2Convention convention = R2Convention::ObservedMean);

/// {"run_id":..,"n":..,"rmse":..,"mae":..,"r2":..}
std::string to_json(const EvalReport& report);
std::string csv_header();
std::string to_csv_row(const EvalReport& report);

}  // namespace flowcast
