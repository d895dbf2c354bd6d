// File formats shared by the library and the CLI.
//
//   transition matrix   {"num_classes": C, "rows": [[...], ...]}
//   dataset CSV         f0,...,f{d-1}[,label][,noisy_label]   labels 0-based,
//                       floats with 17 significant digits
#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "noisyt/core.hpp"

namespace noisyt {

using Json = nlohmann::ordered_json;

Json to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j);

Json to_json(const TransitionMatrix& t);
TransitionMatrix transition_matrix_from_json(const Json& j);

Json to_json(const EstimationReport& report);
EstimationReport estimation_report_from_json(const Json& j);

Json read_json_file(const std::filesystem::path& path);
/// Two-space indented, trailing newline.
void write_json_file(const std::filesystem::path& path, const Json& j);

std::string dataset_to_csv(const Dataset& data);
/// num_classes defaults to 1 + the largest label seen (at least 2).
Dataset dataset_from_csv(const std::string& text, std::optional<std::size_t> num_classes = std::nullopt);

void write_dataset_csv(const std::filesystem::path& path, const Dataset& data);
Dataset read_dataset_csv(const std::filesystem::path& path,
                         std::optional<std::size_t> num_classes = std::nullopt);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

/// %.17g formatting.
std::string format_g17(double v);
/// Shortest representation that round-trips.
std::string format_shortest(double v);

}  // namespace noisyt
