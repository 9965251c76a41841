#include "flowcast/metrics.hpp"

#include <cmath>
#include <nlohmann/json.hpp>

#include "flowcast/errors.hpp"

namespace flowcast {

std::string_view to_string(R2Convention c) noexcept {
    return c == R2Convention::ObservedMean ? "observed_mean" : "predicted_mean";
}

R2Convention parse_r2_convention(std::string_view text) {
    if (text == "observed_mean" || text == "observed") return R2Convention::ObservedMean;
    if (text == "predicted_mean" || text == "predicted") return R2Convention::PredictedMean;
    throw ConfigError("unknown r2 convention '" + std::string(text) +
                      "' (expected observed_mean or predicted_mean)");
}

namespace {

void check(std::span<const double> p, std::span<const double> o, std::size_t min_len) {
    if (p.size() != o.size()) {
        throw MetricError("metric inputs differ in length: " + std::to_string(p.size()) + " vs " +
                          std::to_string(o.size()));
    }
    if (p.size() < min_len) {
        throw MetricError("metric needs at least " + std::to_string(min_len) + " values");
    }
}

}  // namespace

double rmse(std::span<const double> predicted, std::span<const double> observed) {
    check(predicted, observed, 1);
    double acc = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        const double r = predicted[i] - observed[i];
        acc += r * r;
    }
    return std::sqrt(acc / static_cast<double>(predicted.size()));
}

double mae(std::span<const double> predicted, std::span<const double> observed) {
    check(predicted, observed, 1);
    double acc = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i) acc += std::abs(predicted[i] - observed[i]);
    return acc / static_cast<double>(predicted.size());
}

double r2(std::span<const double> predicted, std::span<const double> observed,
          R2Convention convention) {
    check(predicted, observed, 2);
    const auto reference = convention == R2Convention::ObservedMean ? observed : predicted;
    double mean = 0.0;
    for (double v : reference) mean += v;
    mean /= static_cast<double>(reference.size());

    double ss_res = 0.0;
    double ss_tot = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        const double r = observed[i] - predicted[i];
        const double d = reference[i] - mean;
        ss_res += r * r;
        ss_tot += d * d;
    }
    if (!(ss_tot > 0.0)) {
        throw MetricError("R^2 undefined: reference series (" + std::string(to_string(convention)) +
                          ") has zero variance");
    }
    return 1.0 - ss_res / ss_tot;
}

EvalReport evaluate(std::span<const double> predicted, std::span<const double> observed,
                    std::string run_id, R2Convention convention) {
    EvalReport report;
    report.rmse = rmse(predicted, observed);
    report.mae = mae(predicted, observed);
    report.r2 = r2(predicted, observed, convention);
    report.n = predicted.size();
    report.run_id = std::move(run_id);
    // Rounding can only make equal-magnitude residuals disagree in the last bits.
    if (report.rmse < report.mae * (1.0 - 1e-12)) {
        throw NumericError("rmse < mae for run " + report.run_id);
    }
    return report;
}

std::string to_json(const EvalReport& report) {
    nlohmann::ordered_json j;
    j["run_id"] = report.run_id;
    j["n"] = report.n;
    j["rmse"] = report.rmse;
    j["mae"] = report.mae;
    j["r2"] = report.r2;
    return j.dump();
}

std::string csv_header() { return "run_id,n,rmse,mae,r2"; }

std::string to_csv_row(const EvalReport& report) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), ",%zu,%.17g,%.17g,%.17g", report.n, report.rmse, report.mae,
                  report.r2);
    return report.run_id + buf;
}

}  // namespace flowcast
