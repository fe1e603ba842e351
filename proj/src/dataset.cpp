#include "eigensens/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

#include "eigensens/error.hpp"

namespace eigensens {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_fields(std::string_view line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    const char c = line[k];
    if (quoted) {
      if (c == '"' && k + 1 < line.size() && line[k + 1] == '"') {
        current.push_back('"');
        ++k;
      } else if (c == '"') {
        quoted = false;
      } else {
        current.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back(trim(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  fields.emplace_back(trim(current));
  return fields;
}

std::optional<double> parse_real(std::string_view text) {
  text = trim(text);
  if (text.empty()) return std::nullopt;
  if (text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

}  // namespace

DataMatrix::DataMatrix(Eigen::MatrixXd values, std::vector<std::string> row_labels,
                       std::vector<std::string> col_labels)
    : values_(std::move(values)),
      row_labels_(std::move(row_labels)),
      col_labels_(std::move(col_labels)) {
  if (!values_.allFinite()) throw DataError("data matrix contains non-finite entries");
  if (row_labels_.empty()) {
    for (std::size_t i = 0; i < rows(); ++i) row_labels_.push_back(std::to_string(i + 1));
  }
  if (col_labels_.empty()) {
    for (std::size_t j = 0; j < cols(); ++j) col_labels_.push_back("V" + std::to_string(j + 1));
  }
  if (row_labels_.size() != rows() || col_labels_.size() != cols()) {
    throw DataError("label count does not match data dimensions");
  }
}

DataMatrix load_csv(const std::filesystem::path& path, const CsvOptions& options) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return parse_csv(in, options, path.string());
}

DataMatrix parse_csv(std::istream& in, const CsvOptions& options, std::string_view source_name) {
  const std::string source(source_name);
  std::vector<std::vector<std::string>> records;
  std::vector<std::size_t> line_numbers;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    if (line_no == 1 && view.starts_with("\xEF\xBB\xBF")) view.remove_prefix(3);
    if (trim(view).empty()) continue;
    records.push_back(split_fields(view));
    line_numbers.push_back(line_no);
  }
  if (records.empty()) throw DataError(source + ": empty file");

  const std::size_t width = records.front().size();
  std::vector<std::string> header;
  std::size_t first_data = 0;
  if (options.header) {
    header = records.front();
    first_data = 1;
  }

  std::optional<std::size_t> label_index;
  if (options.label_column) {
    if (options.header) {
      const auto it = std::find(header.begin(), header.end(), *options.label_column);
      if (it == header.end()) {
        throw DataError(source + ": label column '" + *options.label_column + "' not found in header");
      }
      label_index = static_cast<std::size_t>(it - header.begin());
    } else {
      const auto position = parse_real(*options.label_column);
      if (!position || *position < 1 || *position > static_cast<double>(width) ||
          std::floor(*position) != *position) {
        throw DataError(source + ": headerless label column must be a 1-based position, got '" +
                        *options.label_column + "'");
      }
      label_index = static_cast<std::size_t>(*position) - 1;
    }
  }

  const auto column_name = [&](std::size_t c) {
    return options.header ? "'" + header[c] + "'" : std::to_string(c + 1);
  };

  const std::size_t n = records.size() - first_data;
  const std::size_t p = width - (label_index ? 1 : 0);
  if (n == 0) throw DataError(source + ": no data rows");
  if (p == 0) throw DataError(source + ": no numeric columns");

  Eigen::MatrixXd values(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  std::vector<std::string> row_labels;
  row_labels.reserve(n);
  for (std::size_t r = first_data; r < records.size(); ++r) {
    const auto& fields = records[r];
    const std::size_t i = r - first_data;
    if (fields.size() != width) {
      throw DataError(source + ": line " + std::to_string(line_numbers[r]) + " has " +
                      std::to_string(fields.size()) + " fields, expected " + std::to_string(width));
    }
    Eigen::Index j = 0;
    for (std::size_t c = 0; c < width; ++c) {
      if (label_index && c == *label_index) continue;
      const auto value = parse_real(fields[c]);
      if (!value) {
        throw DataError(source + ": row " + std::to_string(i + 1) + " (line " +
                        std::to_string(line_numbers[r]) + "), column " + column_name(c) +
                        ": '" + fields[c] + "' is not a finite real number");
      }
      values(static_cast<Eigen::Index>(i), j++) = *value;
    }
    row_labels.push_back(label_index ? fields[*label_index] : std::to_string(i + 1));
  }
  if (n < 3) {
    throw DataError(source + ": " + std::to_string(n) +
                    " observations; at least 3 are needed for leave-one-out diagnostics");
  }

  std::vector<std::string> col_labels;
  for (std::size_t c = 0; c < width; ++c) {
    if (label_index && c == *label_index) continue;
    col_labels.push_back(options.header ? header[c] : "V" + std::to_string(col_labels.size() + 1));
  }
  return DataMatrix(std::move(values), std::move(row_labels), std::move(col_labels));
}

Eigen::VectorXd mean_vector(const DataMatrix& x) {
  if (x.rows() == 0) throw DataError("mean of an empty data matrix");
  return x.values().colwise().mean().transpose();
}

DataMatrix drop_row(const DataMatrix& x, std::size_t row) {
  return drop_rows(x, {row});
}

DataMatrix drop_rows(const DataMatrix& x, const std::vector<std::size_t>& rows) {
  std::vector<bool> removed(x.rows(), false);
  for (const auto r : rows) {
    if (r >= x.rows()) {
      throw ConfigError("observation " + std::to_string(r + 1) + " out of range 1.." +
                        std::to_string(x.rows()));
    }
    removed[r] = true;
  }
  const auto kept = static_cast<std::size_t>(std::count(removed.begin(), removed.end(), false));
  Eigen::MatrixXd values(static_cast<Eigen::Index>(kept), static_cast<Eigen::Index>(x.cols()));
  std::vector<std::string> labels;
  labels.reserve(kept);
  Eigen::Index k = 0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    if (removed[i]) continue;
    values.row(k++) = x.values().row(static_cast<Eigen::Index>(i));
    labels.push_back(x.row_labels()[i]);
  }
  return DataMatrix(std::move(values), std::move(labels), x.col_labels());
}

std::string to_string(EstimatorKind kind) {
  return kind == EstimatorKind::covariance ? "covariance" : "correlation";
}

std::string to_string(Divisor divisor) { return divisor == Divisor::n ? "n" : "n-1"; }

SymmetricEstimate estimate(const DataMatrix& x, EstimatorSpec spec) {
  if (x.rows() < 2) throw DataError("estimation needs at least 2 observations");
  return LeaveOneOut(x, spec).full();
}

SymmetricEstimate estimate_loo(const DataMatrix& x, EstimatorSpec spec, std::size_t row) {
  return LeaveOneOut(x, spec).without(row);
}

LeaveOneOut::LeaveOneOut(const DataMatrix& x, EstimatorSpec spec)
    : values_(x.values()), spec_(spec) {
  if (x.rows() < 2) throw DataError("estimation needs at least 2 observations");
  mean_ = values_.colwise().mean().transpose();
  const Eigen::MatrixXd centered = values_.rowwise() - mean_.transpose();
  scatter_ = centered.transpose() * centered;
  column_scale_ = values_.cwiseAbs().colwise().maxCoeff().transpose();
}

SymmetricEstimate LeaveOneOut::full() const {
  return finish(scatter_, static_cast<std::size_t>(values_.rows()));
}

SymmetricEstimate LeaveOneOut::without(std::size_t row) const {
  const auto n = static_cast<std::size_t>(values_.rows());
  if (row >= n) {
    throw ConfigError("observation " + std::to_string(row + 1) + " out of range 1.." +
                      std::to_string(n));
  }
  if (n < 3) throw DataError("leave-one-out estimation needs at least 3 observations");
  const Eigen::VectorXd d = values_.row(static_cast<Eigen::Index>(row)).transpose() - mean_;
  const double weight = static_cast<double>(n) / static_cast<double>(n - 1);
  Eigen::MatrixXd scatter = scatter_ - weight * (d * d.transpose());
  return finish(std::move(scatter), n - 1);
}

SymmetricEstimate LeaveOneOut::finish(Eigen::MatrixXd scatter, std::size_t count) const {
  const double divisor = spec_.divisor == Divisor::n ? static_cast<double>(count)
                                                     : static_cast<double>(count - 1);
  Eigen::MatrixXd w = scatter / divisor;
  w = 0.5 * (w + w.transpose()).eval();
  if (spec_.kind == EstimatorKind::correlation) {
    const Eigen::Index p = w.rows();
    Eigen::VectorXd inv_sd(p);
    for (Eigen::Index j = 0; j < p; ++j) {
      // Zero variance relative to the column's magnitude, allowing for rounding in the accumulator.
      const double floor = 1e-24 * (1.0 + column_scale_(j) * column_scale_(j));
      if (!(w(j, j) > floor)) {
        throw DataError("column " + std::to_string(j + 1) +
                        " has zero variance; correlation is undefined");
      }
      inv_sd(j) = 1.0 / std::sqrt(w(j, j));
    }
    w = inv_sd.asDiagonal() * w * inv_sd.asDiagonal();
    w = 0.5 * (w + w.transpose()).eval();
    w.diagonal().setOnes();
  }
  return SymmetricEstimate{std::move(w), spec_, count};
}

}  // namespace eigensens
