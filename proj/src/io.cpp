#include "noisyt/io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace noisyt {

Json to_json(const Matrix& m) {
  Json rows = Json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    rows.push_back(std::vector<double>(m.row(r).begin(), m.row(r).end()));
  }
  return rows;
}

Matrix matrix_from_json(const Json& j) {
  if (!j.is_array()) throw Error(ErrorKind::ParseError, "matrix must be an array of rows");
  return Matrix::from_rows(j.get<std::vector<std::vector<double>>>());
}

Json to_json(const TransitionMatrix& t) {
  Json j;
  j["num_classes"] = t.num_classes();
  j["rows"] = to_json(t.entries());
  return j;
}

TransitionMatrix transition_matrix_from_json(const Json& j) {
  try {
    Matrix m = matrix_from_json(j.at("rows"));
    const auto c = j.at("num_classes").get<std::size_t>();
    if (m.rows() != c) throw Error(ErrorKind::BadShape, "num_classes disagrees with rows");
    return TransitionMatrix::validate(std::move(m));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, e.what());
  }
}

Json to_json(const EstimationReport& report) {
  Json j;
  j["estimated"] = to_json(report.estimated);
  j["ground_truth"] = report.ground_truth ? to_json(*report.ground_truth) : Json(nullptr);
  j["l1_error"] = report.l1_error ? Json(*report.l1_error) : Json(nullptr);
  j["per_entry_abs_error"] = report.per_entry_abs_error ? to_json(*report.per_entry_abs_error) : Json(nullptr);
  j["anchor_indices"] = report.anchor_indices;
  j["seed"] = report.seed;
  if (report.clean_to_intermediate) j["clean_to_intermediate"] = to_json(*report.clean_to_intermediate);
  if (report.intermediate_to_noisy) j["intermediate_to_noisy"] = to_json(*report.intermediate_to_noisy);
  j["warnings"] = report.warnings;
  return j;
}

EstimationReport estimation_report_from_json(const Json& j) {
  try {
    EstimationReport r;
    r.estimated = transition_matrix_from_json(j.at("estimated"));
    if (j.contains("ground_truth") && !j["ground_truth"].is_null()) {
      r.ground_truth = transition_matrix_from_json(j["ground_truth"]);
    }
    if (j.contains("l1_error") && !j["l1_error"].is_null()) r.l1_error = j["l1_error"].get<double>();
    if (j.contains("per_entry_abs_error") && !j["per_entry_abs_error"].is_null()) {
      r.per_entry_abs_error = matrix_from_json(j["per_entry_abs_error"]);
    }
    r.anchor_indices = j.at("anchor_indices").get<std::vector<std::size_t>>();
    r.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("clean_to_intermediate")) {
      r.clean_to_intermediate = transition_matrix_from_json(j["clean_to_intermediate"]);
    }
    if (j.contains("intermediate_to_noisy")) {
      r.intermediate_to_noisy = transition_matrix_from_json(j["intermediate_to_noisy"]);
    }
    r.warnings = j.value("warnings", std::vector<std::string>{});
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, e.what());
  }
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorKind::IoError, "write failed for " + path.string());
}

Json read_json_file(const std::filesystem::path& path) {
  try {
    return Json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::ParseError, path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

std::string format_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_shortest(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// ---------------------------------------------------------------------------
// CSV datasets

std::string dataset_to_csv(const Dataset& data) {
  std::string out;
  for (std::size_t k = 0; k < data.dim(); ++k) {
    if (k) out += ',';
    out += 'f' + std::to_string(k);
  }
  if (data.clean_labels) out += ",label";
  if (data.noisy_labels) out += ",noisy_label";
  out += '\n';
  for (std::size_t r = 0; r < data.size(); ++r) {
    const auto x = data.row(r);
    for (std::size_t k = 0; k < x.size(); ++k) {
      if (k) out += ',';
      out += format_g17(x[k]);
    }
    if (data.clean_labels) out += ',' + std::to_string((*data.clean_labels)[r]);
    if (data.noisy_labels) out += ',' + std::to_string((*data.noisy_labels)[r]);
    out += '\n';
  }
  return out;
}

namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    cells.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return cells;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  return s;
}

template <typename T>
T parse_number(std::string_view cell, std::size_t line_no) {
  cell = trim(cell);
  T value{};
  const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (res.ec != std::errc{} || res.ptr != cell.data() + cell.size()) {
    throw Error(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": bad value '" + std::string(cell) + "'");
  }
  return value;
}

}  // namespace

Dataset dataset_from_csv(const std::string& text, std::optional<std::size_t> num_classes) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::ParseError, "empty CSV");
  const auto header = split_commas(trim(line));
  std::size_t dim = 0;
  std::optional<std::size_t> clean_col;
  std::optional<std::size_t> noisy_col;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const auto name = trim(header[c]);
    if (name == "f" + std::to_string(dim) && c == dim) {
      ++dim;
    } else if (name == "label" && !clean_col) {
      clean_col = c;
    } else if (name == "noisy_label" && !noisy_col) {
      noisy_col = c;
    } else {
      throw Error(ErrorKind::ParseError, "unexpected header column '" + std::string(name) + "'");
    }
  }
  if (dim == 0) throw Error(ErrorKind::ParseError, "no feature columns");

  std::vector<double> values;
  std::vector<Label> clean;
  std::vector<Label> noisy;
  std::size_t line_no = 1;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_commas(trim(line));
    if (cells.size() != header.size()) {
      throw Error(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": wrong column count");
    }
    for (std::size_t k = 0; k < dim; ++k) values.push_back(parse_number<double>(cells[k], line_no));
    if (clean_col) clean.push_back(parse_number<Label>(cells[*clean_col], line_no));
    if (noisy_col) noisy.push_back(parse_number<Label>(cells[*noisy_col], line_no));
    ++rows;
  }

  Dataset data;
  data.features = Matrix(rows, dim);
  std::copy(values.begin(), values.end(), data.features.data().begin());
  Label max_label = 1;
  for (Label y : clean) max_label = std::max(max_label, y);
  for (Label y : noisy) max_label = std::max(max_label, y);
  data.num_classes = num_classes.value_or(static_cast<std::size_t>(max_label) + 1);
  if (clean_col) data.clean_labels = std::move(clean);
  if (noisy_col) data.noisy_labels = std::move(noisy);
  data.validate();
  return data;
}

void write_dataset_csv(const std::filesystem::path& path, const Dataset& data) {
  write_text_file(path, dataset_to_csv(data));
}

Dataset read_dataset_csv(const std::filesystem::path& path, std::optional<std::size_t> num_classes) {
  return dataset_from_csv(read_text_file(path), num_classes);
}

}  // namespace noisyt
