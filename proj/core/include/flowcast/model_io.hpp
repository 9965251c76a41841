#pragma once

// Self-describing text persistence for trained models.
//
//   flowcast-model 1
//   kind lstm
//   <key> <value>            shape and hyperparameter header lines
//   meta <key> <value>       free-form run metadata
//   block <name> <rows> <cols>
//   <rows*cols values, one per line, 17 significant digits>
//   end

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <variant>

#include "flowcast/linear.hpp"
#include "flowcast/lstm.hpp"
#include "flowcast/mlp.hpp"
#include "flowcast/rnn.hpp"
#include "flowcast/svr.hpp"

namespace flowcast {

using AnyModel = std::variant<LstmParams, RnnParams, MlpParams, SvrModel, LinearParams>;

std::string_view model_kind(const AnyModel& model) noexcept;

struct ModelFile {
    AnyModel model;
    std::map<std::string, std::string> metadata;
};

void write_model(std::ostream& out, const ModelFile& file);
ModelFile read_model(std::istream& in);
void save_model(const std::filesystem::path& path, const ModelFile& file);
ModelFile load_model(const std::filesystem::path& path);

/// Forecast of any stored model on one flat feature row (scaled units).
double predict(const AnyModel& model, std::span<const double> features);

}  // namespace flowcast
